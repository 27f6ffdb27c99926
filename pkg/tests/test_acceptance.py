"""Acceptance criteria, one test (or test pair) per criterion.

Each test prints a PASS/FAIL line (visible with -s or -rA).  Two sub-checks
are strict xfails: the discount pipeline against the printed dimensionless
beat law, and the shape correlation of the verbatim alternative packet-flux
form.  Both fail for documented reasons (internal inconsistencies of the
printed closed forms, not of this implementation); see the companion tests
that pin the corrected relationships.
"""

import math

import numpy as np
import pytest
from scipy.fft import dst, idst
from scipy.optimize import curve_fit

from wallflux import (
    AbsorberSpec,
    BoxSpec,
    Domain,
    EigenExpansion,
    GaussianPacketSpec,
    PhysicalParams,
    Potential,
    PrefactorConvention,
    PropagationConfig,
    StepperKind,
    SurvivalCurve,
    WaveField,
    absorb_probability,
    box_kernel,
    combined_cavity_decay,
    flux_time_integral,
    l2_norm_sq,
    make_grid,
    mode_energy,
    propagate_with_absorption,
    reflection_coefficient,
    step_crank_nicolson,
    step_feynman_kernel,
    step_spectral_sine,
    survival_box,
    survival_box_curve,
    survival_dimensionless,
    wall_flux,
    wall_flux_alt,
    wall_flux_curve,
)
from wallflux.packet import packet_kernel, antisymmetric_initial

P = PhysicalParams()
ROOT_HALF = math.sqrt(0.5)
BOX = BoxSpec(1.0)
TWO_MODE = EigenExpansion({1: ROOT_HALF, 2: ROOT_HALF}, BOX)
PACKET = GaussianPacketSpec(width=1.0, center=-10.0, wavenumber=5.0, wall_lambda=1.0)


def report(criterion, ok, detail):
    print(f"{criterion}: {'PASS' if ok else 'FAIL'} — {detail}")


def box_initial(grid, state):
    vals = np.asarray(box_kernel(state, grid.nodes, 0.0, P), dtype=complex)
    vals /= math.sqrt(state.box.half_width)
    vals[0] = vals[-1] = 0.0
    return WaveField(grid, vals, 0.0)


@pytest.fixture(scope="module")
def two_level_run():
    """Canonical beat scenario: 512 points, dt=2e-5, tau in [0, 2], one wall."""
    grid = make_grid(Domain(-1.0, 1.0), 512)
    absorber = AbsorberSpec(1.0, 0.0, PrefactorConvention.FINAL_RATE)
    dt = 2.0e-5
    t_max = 2.0 / math.pi  # tau = pi t at lambda = hbar = m = a = 1
    n_steps = int(round(t_max / dt))
    cfg = PropagationConfig(dt=dt, n_steps=n_steps, stepper=StepperKind.SPECTRAL_SINE,
                            grid=grid, potential=Potential.zero(), absorber=absorber,
                            params=P)
    res = propagate_with_absorption(box_initial(grid, TWO_MODE), cfg)
    times = res.curve.times
    closed = survival_box_curve(TWO_MODE, absorber, times, P)
    return {"times": times, "tau": math.pi * times, "survival": res.curve.survival,
            "closed": closed, "dt": dt, "beat_period": 2 * math.pi / (1.5 * math.pi**2)}


@pytest.fixture(scope="module")
def packet_run():
    """Truncated half-line packet run at the reference spec."""
    t_max, dt, n_pts = 4.0, 1.0e-4, 2049
    length = abs(PACKET.center) + 10 * PACKET.width \
        + 4 * (P.hbar * PACKET.wavenumber / P.mass) * t_max
    grid = make_grid(Domain(-length, 0.0), n_pts)
    vals = np.asarray(antisymmetric_initial(PACKET, grid.nodes), dtype=complex)
    vals[0] = vals[-1] = 0.0
    absorber = AbsorberSpec(0.0, PACKET.wall_lambda, PrefactorConvention.FINAL_RATE)
    n_steps = int(round(t_max / dt))
    cfg = PropagationConfig(dt=dt, n_steps=n_steps, stepper=StepperKind.SPECTRAL_SINE,
                            grid=grid, potential=Potential.zero(), absorber=absorber,
                            params=P, history_stride=n_steps // 8)
    res = propagate_with_absorption(WaveField(grid, vals, 0.0), cfg)
    times = res.curve.times
    flux = wall_flux_curve(PACKET, times, P)
    c = P.hbar / (math.pi * P.mass)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (flux[1:] + flux[:-1]) * np.diff(times))])
    closed = np.exp(-c * PACKET.wall_lambda * cum)
    return {"times": times, "survival": res.curve.survival, "closed": closed,
            "history": res.history}


def test_ac1_dimensionless_closed_form():
    """AC1: the dimensionless beat law evaluates exactly."""
    # frozen against a 30-digit evaluation of
    # exp(-(5/2) tau + (2/(3 pi)) sin((3 pi/2) tau))
    expected = {
        0.0: 1.0,
        1.0: 0.066390149076381273,
        4.0 / 3.0: 0.035673993347252398,
        2.0: 0.0067379469990854671,
    }
    worst = 0.0
    for tau, ref in expected.items():
        got = survival_dimensionless(tau)
        worst = max(worst, abs(got / ref - 1.0))
        assert got == pytest.approx(ref, rel=1e-12)
    report("AC1 dimensionless closed form", True,
           f"max rel dev {worst:.2e} at tolerance 1e-12 "
           "(note: the value at tau=1 is 0.0663901..., not the rounded 0.066373 "
           "sometimes quoted)")


def test_ac2_pipeline_matches_flux_closed_form(two_level_run):
    """AC2: full discount pipeline vs the closed-form decay law, 1e-3 pointwise."""
    r = two_level_run
    assert r["beat_period"] / r["dt"] >= 1e3  # >= 1000 steps per beat period
    rel = np.abs(r["survival"] / r["closed"] - 1.0)
    ok = float(np.max(rel)) <= 1e-3
    report("AC2 pipeline vs closed form (flux route)", ok,
           f"max rel dev {np.max(rel):.2e} over tau in [0,2] at tolerance 1e-3")
    assert ok


@pytest.mark.xfail(
    strict=True,
    reason="the printed dimensionless law carries half the self-consistent beat "
    "amplitude, so no discount pipeline can reproduce it pointwise at 1e-3; "
    "the measured gap is ~2.4e-1 (see decisions ledger and "
    "test_box.TestDimensionlessLaw for the pinned relationship)")
def test_ac2_pipeline_matches_printed_dimensionless_form(two_level_run):
    """AC2 (literal reading): pipeline vs the printed dimensionless law."""
    r = two_level_run
    dimless = np.array([survival_dimensionless(t) for t in r["tau"]])
    rel = np.abs(r["survival"] / dimless - 1.0)
    report("AC2 pipeline vs printed dimensionless form", False,
           f"max rel dev {np.max(rel):.2e} exceeds 1e-3 (expected failure, "
           "documented transcription inconsistency)")
    assert float(np.max(rel)) <= 1e-3


def test_ac3_single_level_exponential_rates():
    """AC3: -ln(survival)/t constant and equal to 2 lambda hbar pi n^2/(m a^2)."""
    lam = 1.0
    absorber = AbsorberSpec(lam, lam, PrefactorConvention.FINAL_RATE)
    grid = make_grid(Domain(-1.0, 1.0), 512)
    dt, n_steps = 5.0e-6, 2000
    worst_rate = worst_var = 0.0
    for n in (1, 2, 3):
        state = EigenExpansion({n: 1.0}, BOX)
        cfg = PropagationConfig(dt=dt, n_steps=n_steps, stepper=StepperKind.SPECTRAL_SINE,
                                grid=grid, potential=Potential.zero(), absorber=absorber,
                                params=P)
        res = propagate_with_absorption(box_initial(grid, state), cfg)
        t = res.curve.times[1:]
        rates = -np.log(res.curve.survival[1:]) / t
        checkpoints = rates[np.array([499, 999, 1499, 1999])]
        variation = float(np.max(checkpoints) / np.min(checkpoints) - 1.0)
        want = 2 * lam * P.hbar * math.pi * n**2 / P.mass
        rate_err = abs(rates[-1] / want - 1.0)
        worst_rate, worst_var = max(worst_rate, rate_err), max(worst_var, variation)
        assert variation <= 1e-4
        assert rate_err <= 1e-3
    report("AC3 single-level exponential law", True,
           f"rate err <= {worst_rate:.2e} (tol 1e-3), variation <= {worst_var:.2e} (tol 1e-4)")


def test_ac4_beat_frequency_from_fit(two_level_run):
    """AC4: dominant frequency of d/dtau[ln S + (5/2) tau] equals 3 pi/2."""
    r = two_level_run
    tau = r["tau"]
    g = np.log(r["survival"]) + 2.5 * tau
    dg = np.gradient(g, tau)

    def model(x, amp, w, ph, off):
        return amp * np.cos(w * x + ph) + off

    popt, _ = curve_fit(model, tau, dg, p0=[1.0, 4.5, 0.0, 0.0])
    omega_fit = abs(popt[1])
    target = 1.5 * math.pi
    err = abs(omega_fit / target - 1.0)
    ok = err <= 1e-3
    report("AC4 beat frequency", ok,
           f"fit {omega_fit:.9f} vs 3 pi/2 = {target:.9f}, rel err {err:.2e} (tol 1e-3); "
           f"fitted amplitude {abs(popt[0]):.4f} (self-consistent value 2, printed form 1)")
    assert ok


def test_ac5_packet_reflection(packet_run):
    """AC5: finite flux integral, 0 < R < 1, pipeline reproduces R to 1e-2."""
    total = flux_time_integral(PACKET, 2048.0, P)
    ts = np.linspace(64.0, 128.0, 20001)
    increment = float(np.trapezoid(wall_flux_curve(PACKET, ts, P), ts))
    cauchy = increment / total
    assert cauchy <= 1e-8

    refl = reflection_coefficient(PACKET, P, t_max=512.0, tail_tol=1e-6)
    assert 0.0 < refl.reflection < 1.0

    r = packet_run
    rel = abs(r["survival"][-1] / r["closed"][-1] - 1.0)
    far_wall = max(float(np.max(np.abs(f.values[1:20]))) for f in r["history"])
    assert far_wall <= 1e-6  # truncation monitor
    ok = rel <= 1e-2
    report("AC5 packet reflection", ok,
           f"Cauchy increment {cauchy:.2e} (tol 1e-8); R = {refl.reflection:.4e}; "
           f"pipeline vs closed rel dev {rel:.2e} (tol 1e-2)")
    assert ok


def test_ac6_conservation_and_dirichlet():
    """AC6: with lambda = 0 every stepper conserves the norm and pins the walls."""
    # spectral: 1e4 steps at 1e-12
    grid = make_grid(Domain(-1.0, 1.0), 128)
    f = box_initial(grid, TWO_MODE)
    n0 = l2_norm_sq(f)
    for _ in range(10_000):
        f = step_spectral_sine(f, 1e-3, P)
    drift_sp = abs(l2_norm_sq(f) / n0 - 1.0)
    assert drift_sp <= 1e-12 and f.values[0] == 0.0 and f.values[-1] == 0.0

    # Crank-Nicolson: unitary in the discrete norm, 1e-12
    grid = make_grid(Domain(-1.0, 1.0), 512)
    f = box_initial(grid, TWO_MODE)
    n0 = l2_norm_sq(f)
    for _ in range(2000):
        f = step_crank_nicolson(f, 1e-3, Potential.zero(), P)
    drift_cn = abs(l2_norm_sq(f) / n0 - 1.0)
    assert drift_cn <= 1e-12 and f.values[0] == 0.0 and f.values[-1] == 0.0

    # short-time kernel: 1e-3 at its acceptance step (dt=1e-3, 10 steps,
    # ground state of the box, i.e. the full-width n=1 mode)
    from wallflux import ModeConvention
    ground = EigenExpansion({1: 1.0}, BoxSpec(1.0, ModeConvention.FULL_WIDTH))
    f = box_initial(grid, ground)
    n0 = l2_norm_sq(f)
    for _ in range(10):
        f = step_feynman_kernel(f, 1e-3, Potential.zero(), P)
    drift_fk = abs(l2_norm_sq(f) / n0 - 1.0)
    assert drift_fk <= 1e-3 and f.values[0] == 0.0 and f.values[-1] == 0.0
    report("AC6 conservation and Dirichlet", True,
           f"norm drift: spectral {drift_sp:.1e} (tol 1e-12), cn {drift_cn:.1e} "
           f"(tol 1e-12), kernel {drift_fk:.1e} (tol 1e-3); endpoints exactly 0")


def _cn_modal_field(values_interior, n_pts, dt, n_steps, length=2.0):
    """n Crank-Nicolson steps via the eigenbasis of its own tridiagonal operator."""
    h = length / (n_pts - 1)
    m_int = n_pts - 2
    j = np.arange(1, m_int + 1)
    e_fd = (2 * P.hbar**2 / (P.mass * h**2)) * np.sin(j * np.pi / (2 * (m_int + 1))) ** 2
    cayley = (1 - 1j * dt * e_fd / (2 * P.hbar)) / (1 + 1j * dt * e_fd / (2 * P.hbar))
    phase = cayley ** n_steps
    return idst(dst(values_interior, type=1) * phase, type=1)


def test_ac7_stepper_equivalence():
    """AC7: cn agrees with spectral to 1e-6 at the acceptance resolution;
    the kernel stepper converges monotonically under dt halving."""
    # (i) validate the modal evaluation against the actual tridiagonal loop
    grid = make_grid(Domain(-1.0, 1.0), 513)
    f = box_initial(grid, TWO_MODE)
    dt_small, steps_small = 1e-4, 200
    loop = f
    for _ in range(steps_small):
        loop = step_crank_nicolson(loop, dt_small, Potential.zero(), P)
    modal = _cn_modal_field(f.values[1:-1], 513, dt_small, steps_small)
    equiv = np.linalg.norm(loop.values[1:-1] - modal) / np.linalg.norm(modal)
    assert equiv <= 1e-12

    # (ii) acceptance resolution for the 1e-6 criterion: N=65537, dt=1e-5, t=10.
    # Both modes are exact eigenvectors of both steppers, so the L2 difference
    # is carried entirely by the per-mode phases (modal evaluation == the loop,
    # as validated above).
    n_pts, dt_big, t_tot = 65537, 1e-5, 10.0
    n_steps = int(round(t_tot / dt_big))
    h = 2.0 / (n_pts - 1)
    m_int = n_pts - 2
    diff_sq = 0.0
    for mode_n, weight in ((1, 0.5), (2, 0.5)):
        j = 2 * mode_n  # half-width mode n is full-well mode 2n
        e_cont = mode_energy(mode_n, BOX, P)
        e_fd = (2 * P.hbar**2 / (P.mass * h**2)) * math.sin(j * math.pi / (2 * (m_int + 1))) ** 2
        ph_cn = -2.0 * n_steps * math.atan(dt_big * e_fd / (2 * P.hbar))
        ph_sp = -e_cont * t_tot / P.hbar
        diff_sq += weight * abs(np.exp(1j * ph_cn) - np.exp(1j * ph_sp)) ** 2
    l2_diff = math.sqrt(diff_sq)
    assert l2_diff <= 1e-6

    # (iii) kernel stepper: monotone error decrease over >= 3 halvings
    grid = make_grid(Domain(-1.0, 1.0), 512)
    f0 = box_initial(grid, TWO_MODE)
    t_total = 0.1
    exact = np.asarray(box_kernel(TWO_MODE, grid.nodes, t_total, P), dtype=complex)
    exact[0] = exact[-1] = 0.0
    errs = []
    for dt in (2e-3, 1e-3, 5e-4, 2.5e-4):
        f = f0
        for _ in range(int(round(t_total / dt))):
            f = step_feynman_kernel(f, dt, Potential.zero(), P)
        errs.append(float(np.linalg.norm(f.values - exact)))
    assert all(errs[i] > errs[i + 1] for i in range(3))
    report("AC7 stepper equivalence", True,
           f"cn loop==modal to {equiv:.1e}; cn vs spectral {l2_diff:.2e} at "
           f"N=65537, dt=1e-5, t=10 (tol 1e-6); kernel errors {['%.3e' % e for e in errs]} "
           "monotone over 3 halvings")


def test_ac8_packet_flux_cross_check():
    """AC8 (first clause): analytic wall flux vs finite-difference derivative."""
    worst = 0.0
    for t in (1.5, 2.0, 2.5, 3.0):
        h = 1e-3
        xs = np.array([-4 * h, -3 * h, -2 * h, -h])
        k = packet_kernel(PACKET, xs, t, P)
        d = -(48 * k[3] - 36 * k[2] + 16 * k[1] - 3 * k[0]) / (12 * h)
        fd = abs(d) ** 2
        worst = max(worst, abs(wall_flux(PACKET, t, P) / fd - 1.0))
    ok = worst <= 1e-6
    report("AC8 flux analytic vs finite difference", ok,
           f"max rel dev {worst:.2e} (tol 1e-6)")
    assert ok


@pytest.mark.xfail(
    strict=True,
    reason="the verbatim alternative flux form has a sign-flipped x0^2 exponent "
    "term and inconsistent k0^2 weights (it peaks at t=0 at scale e^437 for the "
    "reference spec, the true flux peaks at the arrival time); only its drift "
    "term, envelope and large-t constant match.  Measured correlation ~ -0.0.")
def test_ac8_alt_form_shape_correlation():
    """AC8 (second clause): shape correlation with the verbatim alternative form."""
    t_win = 4 * P.mass * abs(PACKET.center) / (P.hbar * PACKET.wavenumber)
    ts = np.linspace(0.0, t_win, 2001)
    true = wall_flux_curve(PACKET, ts, P)
    alt = np.array([wall_flux_alt(PACKET, float(t), P) for t in ts])
    # correlation is scale-invariant; rescale so the huge alt values cannot
    # overflow the variance
    corr = float(np.corrcoef(true / np.max(true), alt / np.max(alt))[0, 1])
    report("AC8 verbatim alt-form shape correlation", False,
           f"correlation {corr:.3f} <= 0.999 (expected failure, documented "
           "transcription defects)")
    assert corr > 0.999


def test_ac9_prefactor_convention_study():
    """AC9: the product-limit exponent is half the final-rate exponent."""
    grid = make_grid(Domain(-1.0, 1.0), 128)
    f = box_initial(grid, TWO_MODE)
    dt = 1e-4
    p_final = absorb_probability(f, dt, AbsorberSpec(1.0, 1.0, PrefactorConvention.FINAL_RATE), P)
    p_limit = absorb_probability(f, dt, AbsorberSpec(1.0, 1.0, PrefactorConvention.PRODUCT_LIMIT), P)
    step_ratio_err = abs(p_final / p_limit - 2.0)
    assert step_ratio_err <= 1e-6

    t = 0.37
    exp_final = -math.log(survival_box(TWO_MODE, AbsorberSpec(1.0, 1.0), t, P))
    exp_limit = -math.log(survival_box(
        TWO_MODE, AbsorberSpec(1.0, 1.0, PrefactorConvention.PRODUCT_LIMIT), t, P))
    exp_ratio_err = abs(exp_final / exp_limit - 2.0)
    assert exp_ratio_err <= 1e-6

    # the discount loops inherit the exact factor step by step
    cfg_kw = dict(dt=5e-4, n_steps=200, stepper=StepperKind.SPECTRAL_SINE, grid=grid,
                  potential=Potential.zero(), params=P)
    sum_final = np.sum(propagate_with_absorption(
        f, PropagationConfig(absorber=AbsorberSpec(1.0, 1.0), **cfg_kw)).curve.step_absorption)
    sum_limit = np.sum(propagate_with_absorption(
        f, PropagationConfig(absorber=AbsorberSpec(
            1.0, 1.0, PrefactorConvention.PRODUCT_LIMIT), **cfg_kw)).curve.step_absorption)
    loop_ratio_err = abs(sum_final / sum_limit - 2.0)
    assert loop_ratio_err <= 1e-12
    report("AC9 prefactor convention study", True,
           f"step ratio dev {step_ratio_err:.1e}, closed exponent ratio dev "
           f"{exp_ratio_err:.1e}, loop ratio dev {loop_ratio_err:.1e} (tol 1e-6)")


def test_ac10_combined_cavity(two_level_run):
    """AC10: the cavity curve is the exact pointwise product and non-increasing."""
    t = np.linspace(0.0, 3.0, 1501)
    s_trans = survival_box_curve(TWO_MODE, AbsorberSpec(1.0, 0.0), t, P)
    trans = SurvivalCurve(t, s_trans, np.maximum(1 - s_trans[1:] / s_trans[:-1], 0.0))
    flux = wall_flux_curve(PACKET, t, P)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (flux[1:] + flux[:-1]) * np.diff(t))])
    s_ax = np.exp(-(P.hbar / (math.pi * P.mass)) * PACKET.wall_lambda * cum)
    axial = SurvivalCurve(t, s_ax, np.maximum(1 - s_ax[1:] / s_ax[:-1], 0.0))

    combo = combined_cavity_decay(trans, axial)
    product_err = float(np.max(np.abs(combo.survival - s_trans * s_ax)))
    assert product_err <= 1e-12
    assert np.all(np.diff(combo.survival) <= 0)
    report("AC10 combined cavity", True,
           f"product identity dev {product_err:.1e} (tol 1e-12), non-increasing")
