"""Matplotlib figures rendered to files alongside the delimited reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .evolve import non_dominated_sort  # noqa: E402


def score_scatter(scores: list[tuple[float, ...]], path,
                  labels: tuple[str, str] = ("objective 1", "objective 2")) -> None:
    """Population scatter in the first two objectives; front members marked."""
    xs = [s[0] for s in scores]
    ys = [s[1] if len(s) > 1 else 0.0 for s in scores]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.scatter(xs, ys, s=28, color="#7a7a7a", label="population")
    if len(scores) > 1 and len(scores[0]) > 1:
        front = non_dominated_sort(scores)[0]
        fx = sorted((scores[i][0], scores[i][1]) for i in front)
        ax.plot([p[0] for p in fx], [p[1] for p in fx], "o-",
                color="#c0392b", label="non-dominated")
    ax.set_xlabel(labels[0])
    ax.set_ylabel(labels[1])
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def history_curve(history: list[dict], path) -> None:
    """Best and mean scalarized score per generation."""
    gens = [h["generation"] for h in history]
    best = [sum(h["best_objectives"]) for h in history]
    mean = [h["mean_scalar"] for h in history]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(gens, mean, "s--", color="#7a7a7a", label="mean (normalized)")
    ax.set_xlabel("generation")
    ax.set_ylabel("mean normalized score")
    ax2 = ax.twinx()
    ax2.plot(gens, best, "o-", color="#2c3e50", label="best (raw sum)")
    ax2.set_ylabel("best objective sum")
    ax.legend(loc="upper right", frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def motif_bars(stats: dict, path) -> None:
    """Sharing-distance histograms side by side."""
    fig, axes = plt.subplots(1, 2, figsize=(8, 3.5), sharey=True)
    for ax, key, title in zip(
            axes,
            ("feat_distance_histogram", "group_distance_histogram"),
            ("featurizer sharing", "feature-group sharing")):
        hist = stats[key]
        ax.bar([str(k) for k in hist], list(hist.values()), color="#34495e")
        ax.set_title(title)
        ax.set_xlabel("ops between members")
    axes[0].set_ylabel("count")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
