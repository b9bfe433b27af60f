"""SVG figures rendered from experiment CSV files.

Every figure reads only the CSV it depicts, so re-rendering the same CSV
gives byte-identical SVG (fixed hash salt, no date metadata).
"""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_RC = {"svg.hashsalt": "splinext", "svg.fonttype": "none", "font.size": 9}


def read_csv(path) -> dict[str, list[str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {name: [r[i] for r in body] for i, name in enumerate(header)}


def _groups(cols, key):
    out = defaultdict(list)
    for i, k in enumerate(cols[key]):
        out[k].append(i)
    return out


def _save(fig, path) -> Path:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return Path(path)


def _loglog(csv_path, svg_path, x, y, group, xlabel, ylabel, title):
    cols = read_csv(csv_path)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.5, 3.4))
        for name, idx in _groups(cols, group).items():
            xs = np.array([float(cols[x][i]) for i in idx])
            ys = np.array([float(cols[y][i]) for i in idx])
            ok = ys > 0
            ax.loglog(xs[ok], ys[ok], "o-", ms=3, label=f"{group}={name}")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        ax.legend(frameon=False)
        fig.tight_layout()
        return _save(fig, svg_path)


def plot_convergence(csv_path, svg_path) -> Path:
    return _loglog(csv_path, svg_path, "N", "relative_residual", "p", "N", "relative residual", "convergence")


def plot_scaling(csv_path, svg_path) -> Path:
    return _loglog(csv_path, svg_path, "N", "time", "solver", "N", "time [s]", "solve time")


def plot_spectrum(csv_path, svg_path) -> Path:
    cols = read_csv(csv_path)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.5, 3.4))
        for name, idx in _groups(cols, "N").items():
            s = np.array([float(cols["sigma_rel"][i]) for i in idx])
            ax.semilogy(np.arange(s.size), np.maximum(s, 1e-18), ".", ms=3, label=f"N={name}")
        ax.set_xlabel("index")
        ax.set_ylabel("sigma / sigma_max")
        ax.set_title("singular values of the boundary block")
        ax.legend(frameon=False)
        fig.tight_layout()
        return _save(fig, svg_path)


def plot_sparsity(csv_path, svg_path) -> Path:
    cols = read_csv(csv_path)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.5, 3.8))
        groups = _groups(cols, "N")
        if groups:
            # largest size only, one map per figure
            last = max(groups, key=lambda k: float(k))
            idx = groups[last]
            r = [int(cols["row"][i]) for i in idx]
            c = [int(cols["col"][i]) for i in idx]
            v = [float(cols["log10_abs"][i]) for i in idx]
            sc = ax.scatter(c, r, c=v, s=2, marker="s", cmap="viridis")
            fig.colorbar(sc, ax=ax, label="log10 |entry|")
            ax.invert_yaxis()
            ax.set_title(f"nonzeros of A - AZ*A (N={last})")
        ax.set_xlabel("column")
        ax.set_ylabel("row")
        fig.tight_layout()
        return _save(fig, svg_path)


def plot_duals(csv_path, svg_path) -> Path:
    cols = read_csv(csv_path)
    key = [f"p={a},q={b},N={c}" for a, b, c in zip(cols["p"], cols["q"], cols["N"])]
    cols["case"] = key
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.5, 3.4))
        for name, idx in _groups(cols, "case").items():
            k = [int(cols["index"][i]) for i in idx]
            v = [abs(float(cols["value"][i])) for i in idx]
            ax.semilogy(k, np.maximum(v, 1e-18), ".-", ms=3, label=name)
        ax.set_xlabel("index")
        ax.set_ylabel("|coefficient|")
        ax.set_title("dual sequences")
        ax.legend(frameon=False, fontsize=6)
        fig.tight_layout()
        return _save(fig, svg_path)


def plot_raster_errors(csv_path, svg_path) -> Path:
    cols = read_csv(csv_path)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.0, 4.6))
        x = np.array([int(v) for v in cols["ix"]])
        y = np.array([int(v) for v in cols["iy"]])
        e = np.array([float(v) for v in cols["abs_error"]])
        if x.size:
            img = np.full((y.max() + 1, x.max() + 1), np.nan)
            img[y, x] = np.log10(np.maximum(e, 1e-18))
            im = ax.imshow(img, origin="lower", cmap="magma", interpolation="nearest")
            fig.colorbar(im, ax=ax, label="log10 |error|")
        ax.set_title("pointwise fit error")
        fig.tight_layout()
        return _save(fig, svg_path)


def plot_fit(csv_path, svg_path) -> Path:
    cols = read_csv(csv_path)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.5, 3.4))
        for name, idx in _groups(cols, "solver").items():
            ax.bar(name, max(float(cols["relative_residual"][idx[-1]]), 1e-18))
        ax.set_yscale("log")
        ax.set_ylabel("relative residual")
        ax.set_title("fit residual by solver")
        fig.tight_layout()
        return _save(fig, svg_path)


FIGURES = {
    "convergence": [("convergence", plot_convergence)],
    "scaling": [("scaling", plot_scaling)],
    "spectrum": [("spectrum", plot_spectrum), ("sparsity", plot_sparsity)],
    "duals": [("duals", plot_duals)],
    "raster": [("errors", plot_raster_errors)],
    "fit": [("fit", plot_fit)],
}


def render_figures(kind: str, out_dir) -> list[Path]:
    """Render every figure of experiment `kind` from the CSVs in `out_dir`."""
    out = Path(out_dir)
    written = []
    for table, fn in FIGURES.get(kind, []):
        src = out / f"{kind}_{table}.csv"
        if src.exists():
            written.append(fn(src, out / f"{kind}_{table}.svg"))
    return written
