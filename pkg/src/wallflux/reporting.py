"""Render figures from emitted scenario CSVs.

Consumes the delimited outputs of `run_scenario` and writes PNG files next
to them.  Kept separate from the scenario runners, which stay render-free;
this module is just a convenience consumer of the curve files.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams.update({
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
})


def _read_csv(path: Path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    cols = {}
    for j, name in enumerate(header):
        raw = [r[j] for r in rows]
        try:
            cols[name] = [float(v) for v in raw]
        except ValueError:
            cols[name] = raw
    return cols


def _col(cols, prefix):
    for name, vals in cols.items():
        if name.split("[")[0] == prefix:
            return vals
    raise KeyError(f"column {prefix!r} not found")


def render_survival_figure(csv_path: Path, png_path: Path) -> Path:
    cols = _read_csv(csv_path)
    t = _col(cols, "time")
    fig, ax = plt.subplots()
    ax.plot(t, _col(cols, "survival_closed"), label="closed form", lw=1.8)
    ax.plot(t, _col(cols, "survival_numeric"), "--", label="discount loop", lw=1.2)
    for extra, style in (("survival_dimensionless_form", ":"),):
        try:
            ax.plot(t, _col(cols, extra), style, label="dimensionless form", lw=1.2)
        except KeyError:
            pass
    ax.set_xlabel("time")
    ax.set_ylabel("survival 1-P(t)")
    ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(png_path)
    plt.close(fig)
    return png_path


def render_packet_figure(csv_path: Path, png_path: Path) -> Path:
    cols = _read_csv(csv_path)
    t = _col(cols, "time")
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(6.4, 6.0))
    ax1.plot(t, _col(cols, "wall_flux_closed"), label="closed form", lw=1.8)
    ax1.plot(t, _col(cols, "wall_flux_numeric"), "--", label="discount loop", lw=1.2)
    ax1.set_ylabel("wall flux |dK/dx(0,t)|^2")
    ax1.legend()
    ax2.plot(t, _col(cols, "survival_closed"), label="closed form", lw=1.8)
    ax2.plot(t, _col(cols, "survival_numeric"), "--", label="discount loop", lw=1.2)
    ax2.set_xlabel("time")
    ax2.set_ylabel("survival 1-P(t)")
    ax2.legend()
    fig.tight_layout()
    fig.savefig(png_path)
    plt.close(fig)
    return png_path


def render_cavity_figure(csv_path: Path, png_path: Path) -> Path:
    cols = _read_csv(csv_path)
    t = _col(cols, "time")
    fig, ax = plt.subplots()
    ax.plot(t, _col(cols, "survival_transverse"), label="transverse", lw=1.2)
    ax.plot(t, _col(cols, "survival_axial"), label="axial", lw=1.2)
    ax.plot(t, _col(cols, "survival_product"), "k--", label="product", lw=1.8)
    ax.set_xlabel("time")
    ax.set_ylabel("survival 1-P(t)")
    ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(png_path)
    plt.close(fig)
    return png_path


def render_convergence_figure(csv_path: Path, png_path: Path) -> Path:
    cols = _read_csv(csv_path)
    names = _col(cols, "stepper")
    dts = _col(cols, "dt")
    errs = _col(cols, "l2_error")
    npts = _col(cols, "n_points")
    fig, ax = plt.subplots()
    base_n = npts[0]
    for stepper in sorted(set(names)):
        xs = [d for s, d, n in zip(names, dts, npts) if s == stepper and n == base_n]
        ys = [e for s, e, n in zip(names, errs, npts) if s == stepper and n == base_n]
        if len(xs) > 1:
            ax.loglog(xs, ys, "o-", label=stepper)
    ax.set_xlabel("dt")
    ax.set_ylabel("L2 error vs exact evolution")
    ax.legend()
    fig.tight_layout()
    fig.savefig(png_path)
    plt.close(fig)
    return png_path


_RENDERERS = {
    "box-decay_survival.csv": render_survival_figure,
    "two-level_survival.csv": render_survival_figure,
    "packet-reflect_curves.csv": render_packet_figure,
    "cavity_product.csv": render_cavity_figure,
    "convergence_steppers.csv": render_convergence_figure,
}


def render_directory(out_dir: Path) -> list[Path]:
    """Render every known scenario CSV in a directory; returns written files."""
    out_dir = Path(out_dir)
    written = []
    for name, renderer in _RENDERERS.items():
        csv_path = out_dir / name
        if csv_path.exists():
            written.append(renderer(csv_path, csv_path.with_suffix(".png")))
    return written
