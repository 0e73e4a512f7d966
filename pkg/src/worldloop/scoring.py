"""Action accounting, per-level and per-game RHAE, two-stage aggregation.

RHAE (relative human action efficiency) per level is min(1, h/a) for a
solved level and 0 otherwise, where h is the per-level baseline action
count and a the agent's actions on that level (RESET included).  A game's
score is the mean over all its levels, as a percentage.  Aggregation is
two-stage: average RHAE across runs of the same game first, then average
those per-game means across games.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EmptyInput, InvalidCounts
from .wire import canonical_line


@dataclass(frozen=True)
class LevelResult:
    solved: bool
    actions: int


@dataclass
class RunReport:
    game_id: str
    run_index: int
    level_count: int
    levels_solved: int
    rhae: float  # percentage
    termination: str  # "normal" | "budget_exhausted" | "environment_error"
    levels: list[LevelResult] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not 0.0 <= self.rhae <= 100.0:
            raise ValueError(f"rhae out of range: {self.rhae}")
        if self.levels and sum(1 for lv in self.levels if lv.solved) != self.levels_solved:
            raise ValueError("levels_solved does not match level flags")

    def to_obj(self) -> dict:
        return {
            "game": self.game_id,
            "run": self.run_index,
            "level_count": self.level_count,
            "levels_solved": self.levels_solved,
            "rhae": round(self.rhae, 4),
            "termination": self.termination,
            "levels": [{"solved": lv.solved, "actions": lv.actions} for lv in self.levels],
            "notes": self.notes,
        }


def report_from_obj(obj: dict) -> RunReport:
    return RunReport(
        game_id=obj["game"],
        run_index=obj["run"],
        level_count=obj["level_count"],
        levels_solved=obj["levels_solved"],
        rhae=obj["rhae"],
        termination=obj["termination"],
        levels=[LevelResult(lv["solved"], lv["actions"]) for lv in obj.get("levels", [])],
        notes=list(obj.get("notes", [])),
    )


def level_rhae(h: int, a: int, solved: bool) -> float:
    """Per-level efficiency in [0, 1]; 0 for unsolved levels."""
    if h < 1:
        raise InvalidCounts(f"baseline must be positive, got {h}")
    if not solved:
        return 0.0
    if a < 1:
        raise InvalidCounts(f"solved level needs positive action count, got {a}")
    return min(1.0, h / a)


def game_rhae(levels: list[tuple[int, int, bool]], level_count: int) -> float:
    """Percentage over all level_count levels; missing levels count 0."""
    if len(levels) > level_count:
        raise InvalidCounts("more level entries than levels")
    total = sum(level_rhae(h, a, solved) for h, a, solved in levels)
    return 100.0 * total / level_count


@dataclass
class AggregateReport:
    per_game_mean: dict[str, float]
    mean_rhae: float
    median_rhae: float
    fully_solved: int
    above_75: int
    below_5: int
    levels_solved: int
    levels_attempted: int
    runs: int

    def to_obj(self) -> dict:
        return {
            "games": len(self.per_game_mean),
            "runs": self.runs,
            "mean_rhae": round(self.mean_rhae, 4),
            "median_rhae": round(self.median_rhae, 4),
            "fully_solved": self.fully_solved,
            "above_75": self.above_75,
            "below_5": self.below_5,
            "levels_solved": self.levels_solved,
            "levels_attempted": self.levels_attempted,
        }


def _median(values: list[float]) -> float:
    ordered = sorted(values)
    n = len(ordered)
    if n % 2:
        return ordered[n // 2]
    return (ordered[n // 2 - 1] + ordered[n // 2]) / 2.0


def aggregate(reports: list[RunReport]) -> AggregateReport:
    """Two-stage aggregation over run reports (rhae values taken as given)."""
    if not reports:
        raise EmptyInput("no run reports to aggregate")
    by_game: dict[str, list[RunReport]] = {}
    for report in reports:
        by_game.setdefault(report.game_id, []).append(report)
    per_game_mean = {
        game: sum(r.rhae for r in runs) / len(runs) for game, runs in by_game.items()
    }
    means = list(per_game_mean.values())
    fully_solved = sum(
        1
        for runs in by_game.values()
        if any(r.levels_solved == r.level_count for r in runs)
    )
    return AggregateReport(
        per_game_mean=per_game_mean,
        mean_rhae=sum(means) / len(means),
        median_rhae=_median(means),
        fully_solved=fully_solved,
        above_75=sum(1 for m in means if m > 75.0),
        below_5=sum(1 for m in means if m < 5.0),
        levels_solved=sum(r.levels_solved for r in reports),
        levels_attempted=sum(r.level_count for r in reports),
        runs=len(reports),
    )


def render_report(agg: AggregateReport | None, reports: list[RunReport]) -> str:
    """Fixed-width table, one row per run, plus the aggregate footer."""
    lines = [f"{'Game':<10} {'Run':<4} {'Levels':<8} {'RHAE':>8}  Status"]
    for r in sorted(reports, key=lambda r: (r.game_id, r.run_index)):
        levels = f"{r.levels_solved}/{r.level_count}"
        lines.append(
            f"{r.game_id:<10} {r.run_index:02d}   {levels:<8} {r.rhae:>7.2f}%  "
            f"{r.termination}"
        )
    if agg is not None:
        lines.append("")
        lines.append(
            f"games {len(agg.per_game_mean)}  runs {agg.runs}  "
            f"mean {agg.mean_rhae:.2f}%  median {agg.median_rhae:.2f}%  "
            f"fully-solved {agg.fully_solved}  >75% {agg.above_75}  <5% {agg.below_5}  "
            f"levels {agg.levels_solved}/{agg.levels_attempted}"
        )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# fixture and report files
# ---------------------------------------------------------------------------


def load_fixture(path: str | Path) -> list[RunReport]:
    """Fixture rows: {"game", "run", "levels_solved", "level_count", "rhae",
    "status"} per line."""
    reports = []
    for n, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        obj = json.loads(line)
        reports.append(
            RunReport(
                game_id=obj["game"],
                run_index=obj["run"],
                level_count=obj["level_count"],
                levels_solved=obj["levels_solved"],
                rhae=float(obj["rhae"]),
                termination=obj["status"],
            )
        )
    return reports


def default_fixture_path() -> Path:
    return Path(__file__).parent / "data" / "table1.fixture"


def write_run_report(path: str | Path, report: RunReport):
    Path(path).write_text(canonical_line(report.to_obj()), encoding="utf-8")


def load_run_report(path: str | Path) -> RunReport:
    return report_from_obj(json.loads(Path(path).read_text(encoding="utf-8")))
