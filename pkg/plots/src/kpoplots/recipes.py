"""Figure recipes mirroring the simulator's headline plots.

Every recipe consumes CSV products of the `kposim` CLI from one input
directory and writes a single image.  Rendering is deterministic: fixed
style, fixed dpi, no timestamps.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import InputError, read_csv, read_husimi_field

OCCUPATION_GRAY = 30.0
DPI = 150
SPECTRUM_CMAP = "inferno"
HUSIMI_CMAP = "viridis"


def _savefig(fig, out_path: Path):
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=DPI, metadata={"Software": "kpoplots"})
    plt.close(fig)


def _spectrum_points(indir: Path):
    """Per-mode (gamma, scaled, occupation, overlap) rows from either export."""
    merged = indir / "spectrum_points.csv"
    if merged.is_file():
        cols = read_csv(merged, ("gamma", "scaled", "occupation", "overlap_origin"))
        return cols["gamma"], cols["scaled"], cols["occupation"], cols["overlap_origin"]
    files = sorted(indir.glob("spectrum_gamma*.csv"))
    if not files:
        raise InputError(f"no spectrum_points.csv or spectrum_gamma*.csv in {indir}")
    gammas, scaled, occupation, overlap = [], [], [], []
    for path in files:
        cols = read_csv(path, ("scaled", "occupation", "overlap_origin"))
        gamma = float(path.stem.replace("spectrum_gamma", ""))
        n = len(cols["scaled"])
        gammas.append(np.full(n, gamma))
        scaled.append(cols["scaled"])
        occupation.append(cols["occupation"])
        overlap.append(cols["overlap_origin"])
    return (np.concatenate(gammas), np.concatenate(scaled),
            np.concatenate(occupation), np.concatenate(overlap))


def render_fig1(indir: Path, out_path: Path):
    """Scaled quasienergies vs Gamma, colored by origin-packet overlap.

    Gray points are high-occupation modes; crosses mark the detected
    hyperbolic-point states from kissing.csv when present.
    """
    gamma, scaled, occupation, overlap = _spectrum_points(Path(indir))
    fig, ax = plt.subplots(figsize=(7, 5))
    bright = occupation < OCCUPATION_GRAY
    span = np.nanmax(gamma) ** 2 * 1.6 + 30.0
    keep = bright & (scaled < span)
    ax.scatter(gamma[~bright & (scaled < span)], scaled[~bright & (scaled < span)],
               s=4, c="0.8", linewidths=0, label="occupation > 30")
    pts = ax.scatter(gamma[keep], scaled[keep], s=7, c=overlap[keep],
                     cmap=SPECTRUM_CMAP, vmin=0.0, vmax=0.6, linewidths=0)
    fig.colorbar(pts, ax=ax, label="overlap with origin packet")
    kissing = Path(indir) / "kissing.csv"
    if kissing.is_file():
        cols = read_csv(kissing, ("gamma", "esqpt_scaled_energy"))
        ax.scatter(cols["gamma"], cols["esqpt_scaled_energy"], marker="x", s=60,
                   c="tab:red", label="hyperbolic-point state")
        ax.legend(loc="upper left", fontsize=8)
    ax.set_xlabel(r"$\Gamma$")
    ax.set_ylabel(r"$\tilde\varepsilon$  (units of $K$)")
    ax.set_title("Scaled quasienergies and origin-packet overlap")
    _savefig(fig, out_path)


def render_fig2(indir: Path, out_path: Path):
    """Localization I_G versus Gamma (and kappa when the scan is 2-D).

    Overlays the chaos-boundary line Gamma* built from the exported
    gamma_star column.
    """
    cols = read_csv(Path(indir) / "ipr_scan.csv",
                    ("gamma", "kappa", "I_G", "gamma_star"))
    kappas = np.unique(cols["kappa"])
    if kappas.size > 1:
        gammas = np.unique(cols["gamma"])
        grid = np.full((kappas.size, gammas.size), np.nan)
        for g, k, v in zip(cols["gamma"], cols["kappa"], cols["I_G"]):
            grid[np.searchsorted(kappas, k), np.searchsorted(gammas, g)] = v
        fig, ax = plt.subplots(figsize=(7, 5))
        mesh = ax.pcolormesh(gammas, kappas, grid, cmap=SPECTRUM_CMAP,
                             vmin=0.0, vmax=1.0, shading="nearest")
        fig.colorbar(mesh, ax=ax, label=r"$I_G$")
        boundary_kappa = np.sort(kappas)
        ax.plot(0.03347 / boundary_kappa, boundary_kappa, "k-", lw=2,
                label="chaos boundary")
        ax.set_ylabel(r"$K/\omega_0$")
        ax.set_yscale("log")
    else:
        order = np.argsort(cols["gamma"])
        fig, ax = plt.subplots(figsize=(7, 4.5))
        ax.plot(cols["gamma"][order], cols["I_G"][order], "o-", ms=4)
        ax.axvline(cols["gamma_star"][0], color="k", ls="--",
                   label=r"chaos boundary $\Gamma^*$")
        ax.set_ylabel(r"$I_G$")
        ax.set_ylim(0, 1.05)
        ax.legend()
    ax.set_xlabel(r"$\Gamma$")
    ax.set_title("Origin-packet localization in the Floquet basis")
    _savefig(fig, out_path)


def render_fig3(indir: Path, out_path: Path):
    """Normalized Husimi IPR of traced lines vs distance to their peak."""
    cols = read_csv(Path(indir) / "trace.csv",
                    ("anchor", "gamma", "husimi_ipr_normalized", "scaled_energy"))
    anchors = np.unique(cols["anchor"])
    fig, axes = plt.subplots(1, 2, figsize=(10, 4.5))
    for anchor in anchors:
        sel = cols["anchor"] == anchor
        gamma = cols["gamma"][sel]
        norm = cols["husimi_ipr_normalized"][sel]
        if not np.any(np.isfinite(norm)):
            continue
        peak = gamma[np.nanargmax(norm)]
        axes[0].plot(gamma - peak, norm, "-", lw=1.2, label=f"anchor {anchor:g}")
        axes[1].plot(gamma, cols["scaled_energy"][sel], ".", ms=3)
    axes[0].set_xlabel(r"$\Gamma - \Gamma_\mathrm{ESQPT}$")
    axes[0].set_ylabel(r"$\bar I_\psi$")
    axes[0].set_ylim(0, 1.1)
    axes[0].legend(fontsize=8)
    spectrum = Path(indir) / "spectrum_points.csv"
    if spectrum.is_file():
        pts = read_csv(spectrum, ("gamma", "scaled", "occupation"))
        keep = pts["occupation"] < OCCUPATION_GRAY
        axes[1].scatter(pts["gamma"][keep], pts["scaled"][keep], s=1, c="0.85",
                        zorder=0, linewidths=0)
    axes[1].set_xlabel(r"$\Gamma$")
    axes[1].set_ylabel(r"$\tilde\varepsilon$  (units of $K$)")
    fig.suptitle("Cat-state lines: localization plateau and breakup")
    _savefig(fig, out_path)


def render_fig4(indir: Path, out_path: Path):
    """Island-vanishing curve plus F_min Husimi panels when exported."""
    indir = Path(indir)
    panels = sorted(indir.glob("husimi_fmin_gamma*.csv"))
    vanishing = indir / "island_vanishing.csv"
    if not panels and not vanishing.is_file():
        raise InputError(f"{indir}: need island_vanishing.csv or Husimi exports")
    n_right = len(panels)
    fig = plt.figure(figsize=(5 + 3 * max(n_right, 1), 4.5))
    ncols = 1 + max(n_right, 0)
    ax0 = fig.add_subplot(1, ncols if n_right else 1, 1)
    if vanishing.is_file():
        cols = read_csv(vanishing, ("kappa", "gamma_vanish", "gamma_star"))
        order = np.argsort(cols["kappa"])
        ax0.plot(cols["kappa"][order], cols["gamma_vanish"][order], "w--",
                 lw=2, label=r"islands vanish")
        ax0.plot(cols["kappa"][order], cols["gamma_star"][order], "k-",
                 lw=2, label="chaos boundary")
        ax0.set_facecolor("#3b528b")
        ax0.set_xlabel(r"$K/\omega_0$")
        ax0.set_ylabel(r"$\Gamma$")
        ax0.legend(fontsize=8)
    else:
        ax0.set_axis_off()
    for i, panel in enumerate(panels):
        ax = fig.add_subplot(1, ncols, 2 + i)
        q, p, values = read_husimi_field(panel)
        ax.pcolormesh(q, p, values.T, cmap=HUSIMI_CMAP, shading="nearest")
        ax.set_aspect("equal")
        gamma = panel.stem.replace("husimi_fmin_gamma", "")
        ax.set_title(rf"$\Gamma = {gamma}$", fontsize=9)
        ax.set_xlabel("q")
        if i == 0:
            ax.set_ylabel("p")
    fig.suptitle("Stability islands and the well-bottom state")
    _savefig(fig, out_path)


def render_sm(indir: Path, out_path: Path):
    """Poincare sections colored by chaos classification."""
    cols = read_csv(Path(indir) / "poincare.csv",
                    ("kappa", "gamma", "q", "p", "classified"))
    pairs = sorted({(k, g) for k, g in zip(cols["kappa"], cols["gamma"])})
    fig, axes = plt.subplots(1, len(pairs), figsize=(5 * len(pairs), 4.5),
                             squeeze=False)
    for ax, (kappa, gamma) in zip(axes[0], pairs):
        sel = (cols["kappa"] == kappa) & (cols["gamma"] == gamma)
        regular = sel & (cols["classified"] == "regular")
        chaotic = sel & (cols["classified"] == "chaotic")
        ax.scatter(cols["q"][regular], cols["p"][regular], s=0.5, c="gold",
                   linewidths=0, label="regular")
        ax.scatter(cols["q"][chaotic], cols["p"][chaotic], s=0.5, c="crimson",
                   linewidths=0, label="chaotic")
        ax.set_title(rf"$\kappa$={kappa:g}, $\Gamma$={gamma:g}", fontsize=9)
        ax.set_xlabel("q")
        ax.set_ylabel("p")
        ax.legend(markerscale=12, fontsize=8)
    fig.suptitle("Stroboscopic sections of the double well")
    _savefig(fig, out_path)


RECIPES = {
    "fig1": render_fig1,
    "fig2": render_fig2,
    "fig3": render_fig3,
    "fig4": render_fig4,
    "sm": render_sm,
}
