"""Figure rendering for benchmark sweeps."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def render_outlier_figure(rows, path):
    """Two-panel figure: mean F1 and mean iterations versus outlier ratio,
    one series per engine mode. `rows` are the benchmark CSV rows as dicts."""
    modes = sorted({r["mode"] for r in rows})
    fig, (ax_f1, ax_it) = plt.subplots(1, 2, figsize=(9, 3.5))
    for mode in modes:
        series = sorted((r for r in rows if r["mode"] == mode),
                        key=lambda r: r["ratio"])
        ratios = [r["ratio"] for r in series]
        ax_f1.errorbar(ratios, [r["f1_mean"] for r in series],
                       yerr=[r["f1_var"] ** 0.5 for r in series],
                       marker="o", capsize=3, label=mode)
        ax_it.plot(ratios, [r["iters_mean"] for r in series], marker="o",
                   label=mode)
    ax_f1.set_xlabel("outlier ratio")
    ax_f1.set_ylabel("mean F1")
    ax_f1.set_ylim(0.0, 1.05)
    ax_f1.legend()
    ax_it.set_xlabel("outlier ratio")
    ax_it.set_ylabel("mean iterations")
    ax_it.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
