"""Figure rendering for the experiment commands.

Each renderer takes the same row dicts that land in the CSV and writes a PNG
next to it.  Rendering is best-effort presentation; the delimited output is
the deterministic artifact of record.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_MODEL_STYLE = {
    "ppp": dict(color="k", ls="-", label="exact field"),
    "mixture": dict(color="tab:blue", ls="--", label="mixture"),
    "combination": dict(color="tab:red", ls=":", label="combination"),
}


def _finite(rows, key):
    return [(r, r[key]) for r in rows if r.get(key) is not None]


def render_figure1(rows: list[dict], path: Path) -> None:
    """Joint CCDF against the common threshold, one panel, curves per intensity."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    lam_values = sorted({r["lambda_p"] for r in rows}, reverse=True)
    for lp in lam_values:
        sub = [r for r in rows if r["lambda_p"] == lp]
        x = [r["y_db"] for r in sub]
        for model in ("ppp", "mixture", "combination"):
            pts = _finite(sub, model)
            if pts:
                ax.semilogy([r["y_db"] for r, _ in pts], [v for _, v in pts],
                            **_MODEL_STYLE[model])
        mc = _finite(sub, "mc_ppp")
        if mc:
            ax.errorbar([r["y_db"] for r, _ in mc], [v for _, v in mc],
                        yerr=[r["mc_ci"] for r, _ in mc], fmt="o", ms=3,
                        color="gray", alpha=0.7, label="field Monte-Carlo")
        if sub:
            mid = sub[len(sub) // 2]
            if mid.get("ppp"):
                ax.annotate(f"$\\lambda p$={lp:g}", (mid["y_db"], mid["ppp"]),
                            textcoords="offset points", xytext=(4, 4), fontsize=8)
    ax.set_xlabel("common SIR threshold [dB]")
    ax.set_ylabel("joint CCDF")
    ax.set_ylim(bottom=max(ax.get_ylim()[0], 1e-6))
    handles, labels = ax.get_legend_handles_labels()
    uniq = dict(zip(labels, handles))
    ax.legend(uniq.values(), uniq.keys(), fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_figure2(rows: list[dict], path: Path) -> None:
    """SIR correlation against interferer intensity, one subplot per path-loss exponent."""
    alphas = sorted({r["alpha"] for r in rows})
    fig, axes = plt.subplots(1, len(alphas), figsize=(5.2 * len(alphas), 4.2), squeeze=False)
    for ax, alpha in zip(axes[0], alphas):
        sub = [r for r in rows if r["alpha"] == alpha]
        for model in ("ppp", "mixture", "combination"):
            pts = _finite(sub, f"corr_{model}")
            if pts:
                ax.errorbar([r["lambda_p"] for r, _ in pts], [v for _, v in pts],
                            yerr=[r[f"{model}_ci"] for r, _ in pts],
                            marker="o", ms=3, capsize=2, **_MODEL_STYLE[model])
        ax.set_xscale("log")
        ax.set_xlabel("$\\lambda p$")
        ax.set_ylabel("SIR correlation")
        ax.set_title(f"$\\alpha$ = {alpha:g}")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_figure3(rows: list[dict], path: Path) -> None:
    """Joint CCDF against the number of points, one subplot per path-loss exponent."""
    alphas = sorted({r["alpha"] for r in rows})
    fig, axes = plt.subplots(1, len(alphas), figsize=(5.2 * len(alphas), 4.2), squeeze=False)
    for ax, alpha in zip(axes[0], alphas):
        sub = [r for r in rows if r["alpha"] == alpha]
        for model in ("ppp", "mixture", "combination"):
            pts = _finite(sub, model)
            if pts:
                ax.plot([r["n"] for r, _ in pts], [v for _, v in pts],
                        marker="s", ms=4, **_MODEL_STYLE[model])
        mc = _finite(sub, "mc_ppp")
        if mc:
            ax.errorbar([r["n"] for r, _ in mc], [v for _, v in mc],
                        yerr=[r["mc_ci"] for r, _ in mc], fmt="o", ms=3,
                        color="gray", alpha=0.7, label="field Monte-Carlo")
        ax.set_xlabel("number of observation points")
        ax.set_ylabel("joint CCDF")
        ax.set_title(f"$\\alpha$ = {alpha:g}")
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_mrc(rows: list[dict], path: Path) -> None:
    """Outage of the combining receiver: decomposition estimate against field simulation."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    x = [r["threshold"] for r in rows]
    ax.errorbar(x, [r["mixture"] for r in rows], yerr=[r["mixture_ci"] for r in rows],
                marker="o", ms=4, capsize=2, color="tab:blue", label="mixture decomposition")
    ax.errorbar(x, [r["ppp"] for r in rows], yerr=[r["ppp_ci"] for r in rows],
                marker="s", ms=4, capsize=2, color="k", ls="--", label="field simulation")
    ax.set_xlabel("outage threshold (linear)")
    ax.set_ylabel("outage probability")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
