"""Figure rendering for sweep results (headless, files only)."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["render_sweep_figure"]

_XLABELS = {
    "snr": "SNR (dB)",
    "kappa": "phase-noise concentration",
    "n": "RIS elements",
}

_SCHEME_COLORS = {1: "tab:blue", 2: "tab:orange", 3: "tab:green"}


def render_sweep_figure(result, path):
    """One log-NMSE panel: dashed = plain LS, solid = HI-aware."""
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    multi = len(result.curves) > 1
    for curve in result.curves:
        xs = [p.value for p in curve.points]
        ls = [p.nmse_ls for p in curve.points]
        hi = [p.nmse_hi for p in curve.points]
        color = _SCHEME_COLORS.get(curve.scheme, "tab:gray") if multi else None
        tag = f"scheme {curve.scheme}" + (
            f", {curve.hardware}" if curve.hardware != "impaired" else ""
        )
        prefix = f"{tag}: " if multi else ""
        marker = "o" if curve.hardware == "impaired" else "s"
        ax.semilogy(xs, ls, "--", marker=marker, mfc="none", color=color,
                    label=prefix + "plain LS", alpha=0.85)
        ax.semilogy(xs, hi, "-", marker=marker, color=color,
                    label=prefix + "HI-aware", alpha=0.85)
    ax.set_xlabel(_XLABELS.get(result.kind, result.kind))
    ax.set_ylabel("NMSE")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
