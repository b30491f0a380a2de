"""PNG rendering of table grids and stock-study p-values (headless Agg)."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed metadata keeps repeated renders byte-stable
_PNG_META = {"Software": None}


def table_figure(result, path):
    """Heatmap per section, cells annotated with the estimate."""
    ns, ps = result.table.axes(result.preset)
    names = list(result.sections)
    fig, axes = plt.subplots(1, len(names), figsize=(4.2 * len(names), 3.8), squeeze=False)
    for ax, name in zip(axes[0], names):
        rep = result.sections[name]
        lookup = dict(zip(rep.grid, rep.estimates))
        grid = np.array([[lookup[(n, p)] for p in ps] for n in ns])
        ax.imshow(grid, vmin=0, vmax=1, cmap="viridis", origin="lower", aspect="auto")
        ax.set_xticks(range(len(ps)), [str(p) for p in ps])
        ax.set_yticks(range(len(ns)), [str(n) for n in ns])
        ax.set_xlabel("p")
        ax.set_ylabel("n")
        ax.set_title(f"{result.table.table_id} {name}")
        for i in range(len(ns)):
            for j in range(len(ps)):
                v = grid[i, j]
                ax.text(j, i, f"{v:.3f}", ha="center", va="center", fontsize=7,
                        color="white" if v < 0.6 else "black")
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata=_PNG_META)
    plt.close(fig)


def pvalue_figure(p_values, alpha, path, title="P-value graph"):
    """P-value of each repetition with a horizontal line at alpha."""
    p_values = np.asarray(p_values, dtype=float)
    x = np.arange(1, p_values.size + 1)
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    ax.plot(x, p_values, marker="o", markersize=3, linewidth=0.8)
    ax.axhline(alpha, color="tab:red", linestyle="--", linewidth=1, label=f"alpha = {alpha:g}")
    ax.set_ylim(0, 1.02)
    ax.set_xlabel("repetition")
    ax.set_ylabel("p-value")
    ax.set_title(title)
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata=_PNG_META)
    plt.close(fig)
