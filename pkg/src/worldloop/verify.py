"""The two verifier programs: model consistency and planner adequacy.

The model verifier replays every recorded non-RESET transition through the
model and reports each prediction that fails to reproduce the observed
frame and status.  The planner verifier checks that, for levels already
solved in reality, the planner can still reach a completed state inside
the model from the level's initial frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .frames import Frame, GameStatus, canonical_ascii
from .model import RuleModel, Unknown, status_of_cells
from .planner import DEFAULT_MAX_DEPTH, DEFAULT_MAX_NODES, PLANNERS, NoPlanFound
from .tracestore import TransitionRecord


@dataclass(frozen=True)
class VerifyFailure:
    locator: tuple[int, int, int]  # (level, attempt, step)
    kind: str  # "frame" | "status" | "unknown"
    predicted: str
    observed: str
    first_diff: tuple[int, int] | None
    detail: str

    def to_obj(self) -> dict:
        return {
            "level": self.locator[0],
            "attempt": self.locator[1],
            "step": self.locator[2],
            "kind": self.kind,
            "first_diff": list(self.first_diff) if self.first_diff else None,
            "detail": self.detail,
        }


@dataclass
class VerifierReport:
    checked: int = 0
    failures: list[VerifyFailure] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_obj(self) -> dict:
        return {
            "checked": self.checked,
            "pass": self.passed,
            "failures": [f.to_obj() for f in self.failures],
        }


def _first_diff(predicted: str, observed: str) -> tuple[int, int] | None:
    for r, (prow, orow) in enumerate(zip(predicted.splitlines(), observed.splitlines())):
        for c, (p, o) in enumerate(zip(prow, orow)):
            if p != o:
                return (r, c)
    return None


def _expected_status(status_after: GameStatus) -> GameStatus:
    # the model predicts in-level status; game completion is level completion
    if status_after == GameStatus.GAME_COMPLETED:
        return GameStatus.LEVEL_COMPLETED
    return status_after


def verify_world_model(backend, records: list[TransitionRecord]) -> VerifierReport:
    """Replay every non-RESET record; report all failures in record order."""
    report = VerifierReport()
    for rec in records:
        if rec.action.is_reset:
            continue
        report.checked += 1
        observed = canonical_ascii(rec.frame_after)
        prediction = backend.predict(backend.reconstruct(rec.frame_before), rec.action)
        if isinstance(prediction, Unknown):
            report.failures.append(
                VerifyFailure(rec.locator(), "unknown", "", observed, None,
                              prediction.reason)
            )
            continue
        predicted = backend.render(prediction.state)
        if predicted != observed:
            report.failures.append(
                VerifyFailure(
                    rec.locator(), "frame", predicted, observed,
                    _first_diff(predicted, observed), "predicted frame differs",
                )
            )
        elif prediction.status != _expected_status(rec.status_after):
            report.failures.append(
                VerifyFailure(
                    rec.locator(), "status", predicted, observed, None,
                    f"predicted {prediction.status.value}, "
                    f"observed {rec.status_after.value}",
                )
            )
    return report


@dataclass(frozen=True)
class PlannerCheck:
    level: int
    outcome: str  # "pass" | "fail" | "not_applicable"
    reason: str
    plan_length: int | None

    def to_obj(self) -> dict:
        return {
            "level": self.level,
            "outcome": self.outcome,
            "reason": self.reason,
            "plan_length": self.plan_length,
        }


@dataclass
class PlannerReport:
    checks: list[PlannerCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.outcome != "fail" for c in self.checks)

    def to_obj(self) -> dict:
        return {"pass": self.passed, "levels": [c.to_obj() for c in self.checks]}


def solved_levels(records: list[TransitionRecord]) -> set[int]:
    return {
        r.level_index
        for r in records
        if r.status_after in (GameStatus.LEVEL_COMPLETED, GameStatus.GAME_COMPLETED)
    }


def verify_planner(
    backend,
    levels: list[tuple[int, Frame, bool]],
    actions,
    model: RuleModel | None = None,
    planner_name: str = "bfs",
    max_depth: int = DEFAULT_MAX_DEPTH,
    max_nodes: int = DEFAULT_MAX_NODES,
) -> PlannerReport:
    """For each (level, initial frame, solved) check the planner reaches a
    predicted completion inside the model; unsolved levels are skipped."""
    plan_fn = PLANNERS[planner_name]
    report = PlannerReport()
    for level, initial, solved in levels:
        if not solved:
            report.checks.append(
                PlannerCheck(level, "not_applicable", "level never completed", None)
            )
            continue
        start = backend.reconstruct(initial)
        already = False
        if model is not None:
            already = (
                status_of_cells(model, start.width, start.height, start.cells)
                == GameStatus.LEVEL_COMPLETED
            )
        result = plan_fn(backend, start, list(actions), max_depth=max_depth,
                         max_nodes=max_nodes, already_complete=already)
        if isinstance(result, NoPlanFound):
            report.checks.append(
                PlannerCheck(level, "fail", f"NoPlanFound: {result.reason}", None)
            )
            continue
        # independent simulation of the returned plan
        state, status = start, GameStatus.RUNNING
        for action in result.actions:
            prediction = backend.predict(state, action)
            if isinstance(prediction, Unknown):
                status = GameStatus.RUNNING
                break
            state, status = prediction.state, prediction.status
        if status == GameStatus.LEVEL_COMPLETED:
            report.checks.append(PlannerCheck(level, "pass", "", len(result)))
        else:
            report.checks.append(
                PlannerCheck(level, "fail", "plan does not complete in simulation",
                             len(result))
            )
    return report
