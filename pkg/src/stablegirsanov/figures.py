"""Optional PNG rendering of the CSV tables written by the runner."""

from __future__ import annotations

from pathlib import Path

# first column is the abscissa; log axes where the series span decades
_LAYOUT = {
    "dichotomy": ("horizon", ["mean_qv_base", "mean_qv_tilted"], True, False),
    "entropy": ("horizon", ["pathwise_mean"], True, False),
    "counterexample": ("n", ["partial_sum", "contribution"], False, False),
    "harnack": ("R", ["ratio"], True, False),
    "gauge_grid": ("r", ["u_hat"], False, False),
}


def render_tables(tables: dict, out: Path) -> list[str]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []
    for name, rows in tables.items():
        if name not in _LAYOUT or not rows:
            continue
        xcol, ycols, logx, logy = _LAYOUT[name]
        fig, ax = plt.subplots(figsize=(5, 3.5))
        xs = [r[xcol] for r in rows]
        for c in ycols:
            if c in rows[0]:
                ax.plot(xs, [r[c] for r in rows], marker="o", label=c)
        if logx:
            ax.set_xscale("log", base=2)
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(xcol)
        ax.set_title(name)
        ax.legend()
        fig.tight_layout()
        fname = f"{name}.png"
        fig.savefig(out / fname, dpi=100)
        plt.close(fig)
        written.append(fname)
    return written
