"""Score report figures, written next to the delimited output."""

from __future__ import annotations

from pathlib import Path


def save_score_figures(agg, reports, out_dir: str | Path) -> list[Path]:
    """Render the per-game mean bar chart and the score distribution."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    games = sorted(agg.per_game_mean, key=lambda g: -agg.per_game_mean[g])
    means = [agg.per_game_mean[g] for g in games]

    fig, ax = plt.subplots(figsize=(max(6, 0.35 * len(games)), 4))
    ax.bar(range(len(games)), means, color="#4878a8")
    ax.axhline(agg.mean_rhae, color="#c44e52", linestyle="--", linewidth=1,
               label=f"mean {agg.mean_rhae:.2f}%")
    ax.axhline(agg.median_rhae, color="#55a868", linestyle=":", linewidth=1,
               label=f"median {agg.median_rhae:.2f}%")
    ax.set_xticks(range(len(games)))
    ax.set_xticklabels(games, rotation=90, fontsize=7)
    ax.set_ylabel("per-game mean RHAE (%)")
    ax.set_ylim(0, 105)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = out_dir / "rhae_by_game.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(means, bins=[0, 5, 25, 50, 75, 100], color="#4878a8", edgecolor="white")
    ax.set_xlabel("per-game mean RHAE (%)")
    ax.set_ylabel("games")
    fig.tight_layout()
    path = out_dir / "rhae_distribution.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(path)

    return written
