"""PNG figures of the plot-data series (analytic CDF, ECDF and DKW band)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

LABELS = {
    "y_stationary": ("Y(t)", "stationary law"),
    "z_overshoot": ("Z", "limiting overshoot"),
    "m_gumbel": ("M(t, x)", "Gumbel limit"),
}


def render_series(rows, out_dir, title: str = "") -> list[Path]:
    """One figure per law in ``rows``; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    by_law: dict = {}
    for law, x, analytic, empirical, band in rows:
        by_law.setdefault(law, []).append((x, analytic, empirical, band))
    written = []
    for law, pts in by_law.items():
        xs, an, em, bd = (list(col) for col in zip(*pts))
        var, name = LABELS.get(law, (law, law))
        fig, ax = plt.subplots(figsize=(5.5, 3.6))
        lo = [max(0.0, e - b) for e, b in zip(em, bd)]
        hi = [min(1.0, e + b) for e, b in zip(em, bd)]
        ax.fill_between(xs, lo, hi, step="post", color="tab:blue", alpha=0.2, label="99% DKW band")
        ax.step(xs, em, where="post", color="tab:blue", label="empirical")
        ax.plot(xs, an, color="black", lw=1.2, ls="--", label=name)
        ax.set_xlabel(var)
        ax.set_ylabel("CDF")
        ax.set_ylim(-0.02, 1.02)
        if title:
            ax.set_title(title, fontsize=9)
        ax.legend(fontsize=8, loc="lower right")
        fig.tight_layout()
        path = out_dir / f"{law}.png"
        fig.savefig(path, dpi=120, metadata={"Software": None})
        plt.close(fig)
        written.append(path)
    return written
