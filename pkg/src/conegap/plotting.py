"""Optional PNG figures for experiment results (only used with `--figures`)."""

from pathlib import Path

import numpy as np


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def render_figures(experiment, result, out_dir):
    """Write `<experiment>.png` next to the CSV. Returns the path, or None if nothing to draw."""
    plt = _pyplot()
    out = Path(out_dir) / f"{experiment}.png"
    fig, ax = plt.subplots(figsize=(6, 4))
    try:
        if experiment == "spectral-gap" and result.summary.get("history"):
            h = np.asarray(result.summary["history"], dtype=float)
            ax.semilogy(np.arange(1, h.size + 1), np.maximum(h, 1e-300), marker=".")
            ax.set_xlabel("iteration")
            ax.set_ylabel("d_H step")
            ax.set_title("power iteration on the configured matrix")
        elif experiment == "metrics":
            cols = result.header
            dh = np.array([r[cols.index("d_hausdorff")] for r in result.rows], dtype=float)
            dw = np.array([r[cols.index("d_wedge")] for r in result.rows], dtype=float)
            p = np.array([r[cols.index("p")] for r in result.rows])
            for value in np.unique(p):
                ax.loglog(dh[p == value], dw[p == value], ".", label=f"p = {value}")
            ax.set_xlabel("d_hausdorff")
            ax.set_ylabel("d_wedge")
            ax.legend()
        elif experiment == "sec6" and result.series.get("t"):
            chi = np.asarray(result.series["chi"])
            labels = [f"{t.real:g}{t.imag:+g}i" for t in result.series["t"]]
            x = np.arange(len(labels))
            for k in range(chi.shape[1]):
                ax.plot(x, chi[:, k], "o-", label=f"chi_{k + 1}")
            ax.set_xticks(x, labels)
            ax.set_xlabel("t")
            ax.legend()
        else:
            return None
        fig.tight_layout()
        fig.savefig(out, dpi=100)
        return out
    finally:
        plt.close(fig)
