"""Figure rendering for slabwave outputs.

Five kinds: free-surface height map (surface), symbol-scan bound curves
(scan), Newton convergence semilog (convergence), wave-speed sweep curves
(sweep), and the anisotropic-multiplier bar chart with its reference
constants (pgamma).  Figures are deterministic: fixed size, labeled axes,
suprema annotated.
"""

from __future__ import annotations

from dataclasses import dataclass

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .formats import FormatError, read_csv, read_slb1

__all__ = ["FigureJob", "render", "KINDS"]

FIGSIZE = (6.4, 4.2)
DPI = 130

# reference constants of the anisotropic-multiplier derivative bounds
PGAMMA_BOUNDS = {"p": 1.0, "xi1_d1p": 0.5, "xi2_d2p": 1.0, "xi1xi2_d1d2p": 3.0}


@dataclass(frozen=True)
class FigureJob:
    kind: str
    inputs: tuple
    output: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r} "
                             f"(choose from {sorted(KINDS)})")
        if not self.inputs:
            raise ValueError("at least one input file is required")


def _save(fig, path):
    fig.savefig(path, dpi=DPI, metadata={"Software": "slabwave-viz"})
    plt.close(fig)


def render_surface(job: FigureJob):
    rec = read_slb1(job.inputs[0])
    if "eta_phys" not in rec:
        raise FormatError(f"{job.inputs[0]}: no 'eta_phys' record")
    eta = np.asarray(rec["eta_phys"].real)
    if eta.ndim == 3:
        eta = eta[0]
    fig, ax = plt.subplots(figsize=FIGSIZE)
    im = ax.imshow(eta.T, origin="lower", cmap="RdBu_r", aspect="equal")
    fig.colorbar(im, ax=ax, label="surface height")
    ax.set_xlabel("x1 index")
    ax.set_ylabel("x2 index")
    ax.set_title(f"free surface (min {eta.min():.3e}, max {eta.max():.3e})")
    _save(fig, job.output)


def render_scan(job: FigureJob):
    _, cols, _ = read_csv(job.inputs[0],
                          required=("radius", "component", "alpha1", "alpha2",
                                    "weighted_value"))
    comps = sorted(set(cols["component"].tolist()))
    fig, ax = plt.subplots(figsize=FIGSIZE)
    for comp in comps:
        for a1, a2 in sorted({(int(x), int(y))
                              for x, y in zip(cols["alpha1"], cols["alpha2"])}):
            sel = ((cols["component"] == comp)
                   & (cols["alpha1"] == a1) & (cols["alpha2"] == a2))
            if not np.any(sel):
                continue
            r = cols["radius"][sel].astype(float)
            v = cols["weighted_value"][sel].astype(float)
            order = np.argsort(r)
            # collapse angles: per-radius supremum
            rr = np.unique(r[order])
            vv = [v[r == x].max() for x in rr]
            label = comp if (a1, a2) == (0, 0) else f"{comp} d{a1}{a2}"
            style = "-" if (a1, a2) == (0, 0) else "--"
            ax.loglog(rr, vv, style, lw=1.0, label=label)
    ax.set_xlabel("|xi|")
    ax.set_ylabel("weighted operator norm")
    ax.set_title("symbol bound scan")
    ax.legend(fontsize=5, ncol=3, frameon=False)
    _save(fig, job.output)


def render_convergence(job: FigureJob):
    _, cols, _ = read_csv(job.inputs[0], required=("iteration", "residual"))
    fig, ax = plt.subplots(figsize=FIGSIZE)
    it = cols["iteration"].astype(float)
    res = cols["residual"].astype(float)
    ax.semilogy(it, np.maximum(res, 1e-300), "o-", lw=1.2)
    for x, y in zip(it, res):
        ax.annotate(f"{y:.1e}", (x, max(y, 1e-300)), textcoords="offset points",
                    xytext=(4, 4), fontsize=6)
    ax.set_xlabel("iteration")
    ax.set_ylabel("residual norm")
    ax.set_title("quasi-Newton convergence")
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, job.output)


def render_sweep(job: FigureJob):
    _, cols, _ = read_csv(job.inputs[0],
                          required=("gamma", "diff_norm", "gammaR1_norm"))
    g = cols["gamma"].astype(float)
    order = np.argsort(g)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(FIGSIZE[0] * 1.4, FIGSIZE[1]))
    pos = g[order] > 0
    ax1.plot(g[order], cols["diff_norm"][order], "o-", lw=1.2)
    ax1.set_xlabel("gamma")
    ax1.set_ylabel("||sol(gamma) - sol(0)||_X")
    ax1.set_title("continuity toward gamma = 0")
    if pos.sum() >= 2:
        ax1.set_xscale("symlog", linthresh=max(g[g > 0].min(), 1e-12))
    ax2.plot(g[order], cols["gammaR1_norm"][order], "s-", lw=1.2, color="C1")
    ax2.set_xlabel("gamma")
    ax2.set_ylabel("||gamma R1 eta||_Lr")
    ax2.set_title("anisotropic bound")
    for ax in (ax1, ax2):
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save(fig, job.output)


def render_pgamma(job: FigureJob):
    _, cols, _ = read_csv(job.inputs[0], required=("quantity", "sup", "bound"))
    names = [str(q) for q in cols["quantity"]]
    sups = cols["sup"].astype(float)
    bounds = cols["bound"].astype(float)
    fig, ax = plt.subplots(figsize=FIGSIZE)
    xs = np.arange(len(names))
    ax.bar(xs, sups, width=0.55, color="C0", label="scanned supremum")
    for x, nm, bd in zip(xs, names, bounds):
        ref = PGAMMA_BOUNDS.get(nm, bd)
        ax.hlines(ref, x - 0.38, x + 0.38, colors="C3", lw=1.6)
        ax.annotate(f"bound {ref:g}", (x, ref), textcoords="offset points",
                    xytext=(0, 5), ha="center", fontsize=7, color="C3")
    for x, s in zip(xs, sups):
        ax.annotate(f"{s:.6f}", (x, s), textcoords="offset points",
                    xytext=(0, -12), ha="center", fontsize=7, color="white")
    ax.set_xticks(xs)
    ax.set_xticklabels(names, fontsize=8)
    ax.set_ylabel("supremum over scan")
    ax.set_title("Marcinkiewicz multiplier constants")
    _save(fig, job.output)


KINDS = {
    "surface": render_surface,
    "scan": render_scan,
    "convergence": render_convergence,
    "sweep": render_sweep,
    "pgamma": render_pgamma,
}


def render(job: FigureJob):
    """Validate inputs and write the PNG; never mutates inputs."""
    KINDS[job.kind](job)
    return job.output
