"""Lockstep plan execution: simulate, act, record, compare.

Each plan action is first simulated in the model and then executed in the
real environment; the transition is recorded before the next action is
issued.  After every non-terminal step the predicted rendering is compared
with the observed one; the first divergence stops execution and writes a
mismatch artifact, so successful execution doubles as an online model
test.  Observed LEVEL_COMPLETED or GAME_OVER stops execution regardless of
remaining plan actions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .frames import Action, Frame, GameStatus, canonical_ascii
from .model import Unknown
from .planner import Plan
from .server import StepView
from .tracestore import RunDirectory, TraceWriter, TransitionRecord, write_mismatch_artifact


class Outcome(str, enum.Enum):
    COMPLETED = "Completed"
    GAME_OVER = "GameOver"
    MISMATCH = "Mismatch"
    PLAN_EXHAUSTED = "PlanExhausted"


@dataclass(frozen=True)
class MismatchArtifact:
    step_index: int  # position within the plan
    action: Action
    predicted_ascii: str
    observed_ascii: str
    diff_cells: tuple[tuple[int, int], ...]
    locator: tuple[int, int, int]  # trace (level, attempt, step)

    def header(self) -> dict:
        return {
            "step": self.step_index,
            "action": self.action.to_obj(),
            "level": self.locator[0],
            "attempt": self.locator[1],
            "trace_step": self.locator[2],
            "cells": [list(c) for c in self.diff_cells],
        }


@dataclass
class ExecutionReport:
    outcome: Outcome
    steps_executed: int
    artifact: MismatchArtifact | None
    final_status: GameStatus


class SessionCursor:
    """Tracks the client-side position: level, attempt, current observation."""

    def __init__(self, game_id: str, view: StepView):
        self.game_id = game_id
        self.level = view.level
        self.attempt = view.attempt
        self.frame = view.frame
        self.total_actions = view.total_actions
        self.level_actions = view.level_actions

    def advance(self, view: StepView):
        self.level = view.level
        self.attempt = view.attempt
        self.frame = view.frame
        self.total_actions = view.total_actions
        self.level_actions = view.level_actions


def _diff_cells(predicted_cells, observed: Frame) -> tuple[tuple[int, int], ...]:
    if predicted_cells is None:
        return tuple(
            divmod(i, observed.width) for i in range(len(observed.cells))
        )
    return tuple(
        divmod(i, observed.width)
        for i, (p, o) in enumerate(zip(predicted_cells, observed.cells))
        if p != o
    )


def execute_plan(
    plan: Plan,
    backend,
    client,
    cursor: SessionCursor,
    writer: TraceWriter,
    run: RunDirectory,
    max_actions: int | None = None,
) -> ExecutionReport:
    """Run the plan against the live session, recording every transition.

    ``max_actions`` caps environment actions (budget enforcement); hitting
    the cap returns PLAN_EXHAUSTED with the steps taken so far.
    """
    steps = 0
    for plan_index, action in enumerate(plan.actions):
        if max_actions is not None and steps >= max_actions:
            return ExecutionReport(Outcome.PLAN_EXHAUSTED, steps, None,
                                   GameStatus.RUNNING)

        frame_before = cursor.frame
        level, attempt = cursor.level, cursor.attempt
        prediction = None
        if not action.is_reset:
            prediction = backend.predict(backend.reconstruct(frame_before), action)

        view = client.step(action)  # environment errors propagate to the caller
        steps += 1
        step_index = writer.next_index(level, attempt)
        writer.append(
            TransitionRecord(
                game_id=cursor.game_id,
                level_index=level,
                attempt_number=attempt,
                step_index=step_index,
                frame_before=frame_before,
                action=action,
                frame_after=view.settled,
                status_after=view.status,
            )
        )
        cursor.advance(view)

        if view.status in (GameStatus.LEVEL_COMPLETED, GameStatus.GAME_COMPLETED):
            return ExecutionReport(Outcome.COMPLETED, steps, None, view.status)
        if view.status == GameStatus.GAME_OVER:
            return ExecutionReport(Outcome.GAME_OVER, steps, None, view.status)
        if action.is_reset:
            continue

        observed_text = canonical_ascii(view.settled)
        if isinstance(prediction, Unknown):
            predicted_text = ""
            diff = _diff_cells(None, view.settled)
        else:
            predicted_text = backend.render(prediction.state)
            if predicted_text == observed_text:
                continue
            diff = _diff_cells(prediction.state.cells, view.settled)
        artifact = MismatchArtifact(
            step_index=plan_index,
            action=action,
            predicted_ascii=predicted_text,
            observed_ascii=observed_text,
            diff_cells=diff,
            locator=(level, attempt, step_index),
        )
        write_mismatch_artifact(run, artifact.header(), predicted_text, observed_text)
        return ExecutionReport(Outcome.MISMATCH, steps, artifact, view.status)

    return ExecutionReport(Outcome.PLAN_EXHAUSTED, steps, None, GameStatus.RUNNING)
