"""The three figure scripts: phase diagram, phase portrait, edge growth.

Each function reads artifacts, draws one figure, writes one image file, and
returns a small summary dict of what it drew (handy for tests and for the
one-line reports the entry points print).  Inputs are never modified, and
saved images carry no timestamps, so re-running a script on the same
artifacts reproduces the same file.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import matplotlib
import matplotlib.pyplot as plt

from .io import SweepTable, load_edges, load_meanfield, load_trajectory

# equilibrium marker styles, keyed by the classifier's kind strings
_EQ_STYLE = {
    "p0": dict(marker="o", color="0.15", label="$p_0$"),
    "p1": dict(marker="s", color="tab:blue", label="$p_1$"),
    "p2": dict(marker="^", color="tab:green", label="$p_2$"),
    "interior": dict(marker="*", color="tab:red", s=140,
                     label="interior"),
}


def _save(fig, out) -> Path:
    out = Path(out)
    if out.suffix.lower() == ".svg":
        # strip the creation date and pin the element-id salt so reruns
        # produce byte-identical files
        with matplotlib.rc_context({"svg.hashsalt": "plotkit"}):
            fig.savefig(out, metadata={"Date": None})
    else:
        fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def _cell_edges(centers: np.ndarray) -> np.ndarray:
    """Midpoint cell edges for pcolormesh; a lone center gets unit width."""
    if centers.size == 1:
        c = float(centers[0])
        return np.array([c - 0.5, c + 0.5])
    mid = 0.5 * (centers[1:] + centers[:-1])
    first = centers[0] - (mid[0] - centers[0])
    last = centers[-1] + (centers[-1] - mid[-1])
    return np.concatenate([[first], mid, [last]])


def plot_phase_diagram(sweep_csv, out, axes=None,
                       value: str = "symbiont_survival") -> dict:
    """Heatmap of a 2-axis sweep with the mean-field classification overlaid.

    ``axes`` optionally reorders the two axis columns as (x, y); default is
    file order.  The overlay draws white dashed contours wherever the
    mean-field outcome changes between neighboring grid cells.
    """
    tbl = SweepTable.load(sweep_csv)
    if len(tbl.axes) != 2:
        raise ValueError("phase diagram needs a 2-axis sweep, got axes "
                         f"{tbl.axes}")
    x, y = axes if axes is not None else tbl.axes
    xu, yu, Z = tbl.grid(value, x, y)
    _, _, O = tbl.grid("mf_outcome", x, y)

    fig, ax = plt.subplots(figsize=(6.0, 4.6))
    mesh = ax.pcolormesh(_cell_edges(xu), _cell_edges(yu), Z,
                         cmap="viridis", vmin=0.0, vmax=1.0)
    fig.colorbar(mesh, ax=ax, label=value.replace("_", " "))

    # mean-field overlay: code the outcomes and contour at the half-levels
    labels = sorted(set(O.ravel()))
    codes = np.vectorize(labels.index)(O).astype(float)
    n_levels = 0
    if len(labels) > 1 and min(O.shape) > 1:
        levels = [k + 0.5 for k in range(len(labels) - 1)]
        cs = ax.contour(xu, yu, codes, levels=levels, colors="w",
                        linewidths=1.4, linestyles="--")
        n_levels = sum(1 for p in cs.get_paths() if len(p.vertices))
    ax.set_xlabel(x)
    ax.set_ylabel(y)
    ax.set_title("symbiont survival with mean-field boundaries"
                 if value == "symbiont_survival" else value)
    _save(fig, out)
    return {"shape": Z.shape, "value": value, "outcomes": labels,
            "overlay_levels": n_levels, "out": str(out)}


def plot_phase_portrait(meanfield_json, out, grid: int = 401) -> dict:
    """Density-triangle portrait: trajectories, nullclines, equilibria.

    Everything is reconstructed from meanfield.json and the trajectory CSVs
    listed in it.  The u1-nullcline is the zero set of du1/dt (for delta = 0
    the trivial u1 = 0 branch is dropped); the u2-nullcline is the
    nontrivial factor of du2/dt and is omitted when the artifact says it
    does not exist.
    """
    mf = load_meanfield(meanfield_json)
    prm = mf["params"]
    l10, l20 = float(prm["lambda10"]), float(prm["lambda20"])
    l21, dlt = float(prm["lambda21"]), float(prm["delta"])

    fig, ax = plt.subplots(figsize=(5.6, 5.2))
    ax.plot([0, 1, 0, 0], [0, 0, 1, 0], color="0.6", lw=1.0)

    u = np.linspace(0.0, 1.0, grid)
    U1, U2 = np.meshgrid(u, u)
    inside = U1 + U2 <= 1.0 + 1e-12
    U0 = 1.0 - U1 - U2

    F1 = l10 * U0 * U1 - U1 + dlt * U2 - l21 * U1 * U2
    G1 = l10 * U0 - 1.0 - l21 * U2          # nontrivial factor when delta=0
    field1 = F1 if dlt > 0 else G1
    field1 = np.where(inside, field1, np.nan)
    ax.contour(U1, U2, field1, levels=[0.0], colors="tab:blue",
               linewidths=1.6)

    ell2 = bool(mf["nullclines"]["ell2_present"])
    if ell2:
        G2 = l20 * U0 + l21 * U1 - 1.0 - dlt
        ax.contour(U1, U2, np.where(inside, G2, np.nan), levels=[0.0],
                   colors="tab:green", linewidths=1.6)

    asym = mf["nullclines"]["u1_asymptote"]
    if asym is not None and 0.0 < asym < 1.0:
        ax.axvline(asym, color="tab:blue", lw=0.9, ls=":")
        ax.text(asym, 1.02, r"$u_1=\delta/(\lambda_{10}+\lambda_{21})$",
                ha="center", fontsize=8, color="tab:blue")

    endpoints = []
    for p in mf["trajectory_paths"]:
        _, u1, u2 = load_trajectory(p)
        ax.plot(u1, u2, color="0.35", lw=0.9, alpha=0.85)
        ax.plot(u1[0], u2[0], ".", color="0.35", ms=4)
        k = max(1, u1.size // 3)
        if u1.size > 1:
            ax.annotate("", xy=(u1[k], u2[k]), xytext=(u1[k - 1], u2[k - 1]),
                        arrowprops=dict(arrowstyle="-|>", color="0.35",
                                        lw=0.9))
        endpoints.append((float(u1[-1]), float(u2[-1])))

    kinds: dict[str, int] = {}
    for eq in mf["equilibria"]:
        style = dict(_EQ_STYLE.get(eq["kind"], dict(marker="x", color="k",
                                                    label=eq["kind"])))
        if eq["kind"] in kinds:
            style.pop("label", None)
        kinds[eq["kind"]] = kinds.get(eq["kind"], 0) + 1
        ax.scatter([eq["u1"]], [eq["u2"]], zorder=5, **style)

    ax.set_xlim(-0.04, 1.06)
    ax.set_ylim(-0.04, 1.10)
    ax.set_xlabel("$u_1$ (hosts)")
    ax.set_ylabel("$u_2$ (infected)")
    ax.set_title(mf.get("display", ""))
    if kinds:
        ax.legend(loc="upper right", fontsize=8)
    _save(fig, out)
    return {"ell2_drawn": ell2, "asymptote": asym, "equilibria": kinds,
            "n_trajectories": len(endpoints), "endpoints": endpoints,
            "out": str(out)}


def _fit(t: np.ndarray, yv: np.ndarray):
    ok = np.isfinite(yv)
    if ok.sum() < 2 or np.ptp(t[ok]) == 0:
        return None, None
    slope, icpt = np.polyfit(t[ok], yv[ok], 1)
    return float(slope), float(icpt)


def plot_edges(edges_csv, out) -> dict:
    """Edge positions r_t (right) and l_t (left) against time, with fits.

    A header-only series still produces an (empty) figure; slopes are fitted
    by least squares over the finite entries and annotated as alpha values.
    """
    t, r, l = load_edges(edges_csv)
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.set_xlabel("t")
    ax.set_ylabel("edge position")
    alpha_r = alpha_l = None
    if t.size:
        ax.plot(t, r, ".", ms=2.5, color="tab:red", label="$r_t$")
        ax.plot(t, l, ".", ms=2.5, color="tab:blue", label="$l_t$")
        alpha_r, b_r = _fit(t, r)
        alpha_l, b_l = _fit(t, l)
        span = np.array([t.min(), t.max()])
        note = []
        if alpha_r is not None:
            ax.plot(span, alpha_r * span + b_r, color="tab:red", lw=1.0)
            note.append(rf"$\alpha_r = {alpha_r:.4g}$")
        if alpha_l is not None:
            ax.plot(span, alpha_l * span + b_l, color="tab:blue", lw=1.0)
            note.append(rf"$\alpha_l = {alpha_l:.4g}$")
        if note:
            ax.text(0.03, 0.96, "\n".join(note), transform=ax.transAxes,
                    va="top", fontsize=9)
        ax.legend(loc="lower right", fontsize=8)
    _save(fig, out)
    return {"n_points": int(t.size), "alpha_r": alpha_r, "alpha_l": alpha_l,
            "out": str(out)}
