"""The scripted controller: sequences modeling, planning, and execution.

The controller never solves levels itself.  It feeds new observations to
the modeler, requires the model to verify against every record before any
plan is executed, asks the planner for a plan (falling back to a single
exploration action), runs plans through the lockstep executor, refactors
the model on stalls, after terminal failures, and at level boundaries,
issues RESET after GAME_OVER, and enforces the action budget exactly.

While the model cannot be made consistent with the evidence, the
controller stays in MODEL_UPDATE and gathers evidence one exploration
action at a time; the EXECUTE phase is only ever entered with a fully
verified model.
"""

from __future__ import annotations

import enum
import os
import sys
from dataclasses import dataclass

from . import errors
from .executor import ExecutionReport, Outcome, SessionCursor, execute_plan
from .external import ExternalWorldModel, RuleModelBackend
from .frames import RESET, Action, GameStatus, canonical_ascii
from .games import GameSpec, get_game
from .model import RuleModel, save_rules, status_of_cells
from .planner import PLANNERS, NoPlanFound, Plan
from .scoring import LevelResult, RunReport, game_rhae, write_run_report
from .server import InProcessClient
from .tracestore import RunDirectory, TraceWriter
from .verify import VerifierReport, verify_world_model

SEED_ENV_VAR = "WORLDLOOP_SEED"


def seed_from_env(default: int = 0) -> int:
    try:
        return int(os.environ.get(SEED_ENV_VAR, default))
    except ValueError:
        return default


@dataclass(frozen=True)
class ControllerConfig:
    action_budget: int = 4000
    stall_window: int = 50
    refactor_every_levels: int = 1
    plan_max_depth: int = 64
    plan_max_nodes: int = 200_000
    planner: str = "bfs"
    model_backend: str = "inprocess"  # or "external"
    external_command: tuple[str, ...] = ()  # "{rules}" is replaced by the model path
    external_timeout: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.action_budget < 1:
            raise ValueError("action budget must be at least 1")
        if self.stall_window < 1:
            raise ValueError("stall window must be at least 1")

    def to_obj(self) -> dict:
        return {
            "action_budget": self.action_budget,
            "stall_window": self.stall_window,
            "refactor_every_levels": self.refactor_every_levels,
            "plan_max_depth": self.plan_max_depth,
            "plan_max_nodes": self.plan_max_nodes,
            "planner": self.planner,
            "model_backend": self.model_backend,
            "seed": self.seed,
        }


class ControllerState(enum.Enum):
    INIT = "INIT"
    MODEL_UPDATE = "MODEL_UPDATE"
    PLAN = "PLAN"
    EXECUTE = "EXECUTE"
    REFACTOR = "REFACTOR"
    RESET_PENDING = "RESET_PENDING"
    LEVEL_DONE = "LEVEL_DONE"
    DONE = "DONE"


def detect_stall(history: list[tuple[str, GameStatus]], window: int) -> bool:
    """True iff the last ``window`` actions completed nothing and produced
    only frames already seen earlier in the attempt's history.

    ``history`` is chronological; its first entry is the attempt's starting
    observation, followed by one entry per executed action.
    """
    if len(history) < window + 1:
        return False
    tail = history[-window:]
    if any(s in (GameStatus.LEVEL_COMPLETED, GameStatus.GAME_COMPLETED) for _, s in tail):
        return False
    seen = {frame for frame, _ in history[: len(history) - window]}
    for frame, _ in tail:
        if frame not in seen:
            return False
        seen.add(frame)
    return True


_ENV_ERRORS = (
    OSError,
    ConnectionError,
    errors.WireError,
    errors.ProtocolViolation,
    errors.CallTimeout,
    errors.SpawnFailure,
    errors.SessionFinished,
)


class _GameRun:
    def __init__(self, game_id, modeler, config: ControllerConfig, run: RunDirectory,
                 games=None, client=None):
        self.config = config
        self.modeler = modeler
        self.run = run
        self.spec: GameSpec = get_game(game_id, games)
        self.client = client if client is not None else InProcessClient(games)
        view = self.client.new_session(game_id)
        self.cursor = SessionCursor(game_id, view)
        self.writer = TraceWriter(run)
        self.model = RuleModel()
        self.backend = RuleModelBackend(self.model)
        self.latest_verify = VerifierReport()
        self.fed = 0
        self.state = ControllerState.INIT
        self.state_log: list[ControllerState] = [self.state]
        self.plan: Plan | None = None
        self.pending_refactor = False
        self.levels_completed = 0
        self.mismatch_count = 0
        self.notes: list[str] = []
        self.termination = "normal"
        self.attempt_history: list[tuple[str, GameStatus]] = [
            (canonical_ascii(view.frame), GameStatus.RUNNING)
        ]
        self._pairs: list[tuple[str, Action]] = []

    # -- plumbing --------------------------------------------------------

    def _goto(self, state: ControllerState):
        self.state = state
        self.state_log.append(state)

    def _note(self, text: str):
        if text not in self.notes:
            self.notes.append(text)

    def _remaining(self) -> int:
        return self.config.action_budget - self.cursor.total_actions

    def _rebuild_backend(self):
        self.backend.close()
        if self.config.model_backend == "external":
            save_rules(self.model, self.run.model_path)
            command = [
                part.replace("{rules}", str(self.run.model_path))
                for part in (self.config.external_command
                             or (sys.executable, "-m", "pymodel", "--rules", "{rules}"))
            ]
            self.backend = ExternalWorldModel(command, timeout=self.config.external_timeout)
        else:
            self.backend = RuleModelBackend(self.model)

    def _feed_and_update(self) -> bool:
        new = self.writer.records[self.fed:]
        self.fed = len(self.writer.records)
        try:
            self.model = self.modeler.update(new)
        except errors.IrreconcilableObservations as exc:
            self._note(f"irreconcilable observations: {exc}")
        self._rebuild_backend()
        self.latest_verify = verify_world_model(self.backend, self.writer.records)
        return self.latest_verify.passed

    def _refactor(self):
        self._goto(ControllerState.REFACTOR)
        self.model = self.modeler.refactor(self.model, self.writer.records)
        self._rebuild_backend()
        save_rules(self.model, self.run.model_path)
        self.latest_verify = verify_world_model(self.backend, self.writer.records)

    def _history_pairs(self) -> list[tuple[str, Action]]:
        return self._pairs

    def _run_plan(self, plan: Plan) -> ExecutionReport:
        before = len(self.writer.records)
        report = execute_plan(
            plan, self.backend, self.client, self.cursor, self.writer, self.run,
            max_actions=self._remaining(),
        )
        for rec in self.writer.records[before:]:
            self._pairs.append((canonical_ascii(rec.frame_before), rec.action))
            if rec.action.is_reset:
                self.attempt_history = [
                    (canonical_ascii(rec.frame_after), GameStatus.RUNNING)
                ]
            else:
                self.attempt_history.append(
                    (canonical_ascii(rec.frame_after), rec.status_after)
                )
        if report.artifact is not None:
            self.mismatch_count += 1
        return report

    def _explore_once(self) -> ExecutionReport:
        legal = [a for a in self.client.legal_actions() if not a.is_reset]
        action = self.modeler.explore(
            canonical_ascii(self.cursor.frame), legal, self._history_pairs()
        )
        return self._run_plan(Plan((action,)))

    def _reset_stall_baseline(self):
        self.attempt_history = [
            (canonical_ascii(self.cursor.frame), GameStatus.RUNNING)
        ]

    # -- phase handlers ----------------------------------------------------

    def _finish(self, termination: str):
        self.termination = termination
        self._goto(ControllerState.DONE)

    def _on_completed(self):
        self._goto(ControllerState.LEVEL_DONE)
        last = self.writer.records[-1]
        if last.status_after == GameStatus.GAME_COMPLETED:
            # fold the final records in so the saved model explains the
            # whole trace, then compact it one last time
            if self._feed_and_update():
                self._refactor()
            self._finish("normal")
            return
        self.levels_completed += 1
        self._reset_stall_baseline()
        every = self.config.refactor_every_levels
        self.pending_refactor = every > 0 and self.levels_completed % every == 0
        self._goto(ControllerState.MODEL_UPDATE)

    def _on_game_over(self):
        if self._feed_and_update():
            self._refactor()
        self._goto(ControllerState.RESET_PENDING)

    def _handle_model_update(self):
        passed = self._feed_and_update()
        while not passed:
            if self._remaining() <= 0:
                self._finish("budget_exhausted")
                return
            report = self._explore_once()
            if report.outcome == Outcome.COMPLETED:
                self._on_completed()
                return
            if report.outcome == Outcome.GAME_OVER:
                self._on_game_over()
                return
            passed = self._feed_and_update()
        if self.pending_refactor:
            self.pending_refactor = False
            self._refactor()
        self._goto(ControllerState.PLAN)

    def _handle_plan(self):
        if detect_stall(self.attempt_history, self.config.stall_window):
            self._refactor()
            self._reset_stall_baseline()
        legal = [a for a in self.client.legal_actions() if not a.is_reset]
        start = self.backend.reconstruct(self.cursor.frame)
        already = (
            status_of_cells(self.model, start.width, start.height, start.cells)
            == GameStatus.LEVEL_COMPLETED
        )
        result = PLANNERS[self.config.planner](
            self.backend,
            start,
            legal,
            max_depth=self.config.plan_max_depth,
            max_nodes=self.config.plan_max_nodes,
            already_complete=already,
        )
        if isinstance(result, NoPlanFound):
            action = self.modeler.explore(
                canonical_ascii(self.cursor.frame), legal, self._history_pairs()
            )
            self.plan = Plan((action,))
        else:
            self.plan = result
        self._goto(ControllerState.EXECUTE)

    def _handle_execute(self):
        assert self.latest_verify.passed, "EXECUTE entered with a failing model"
        report = self._run_plan(self.plan)
        self.plan = None
        if report.outcome == Outcome.COMPLETED:
            self._on_completed()
        elif report.outcome == Outcome.GAME_OVER:
            self._on_game_over()
        else:
            # Mismatch feeds the divergence back to the modeler; an
            # exhausted plan re-verifies in case a predicted completion
            # never materialized
            self._goto(ControllerState.MODEL_UPDATE)

    def _handle_reset_pending(self):
        if self._remaining() <= 0:
            self._finish("budget_exhausted")
            return
        self._run_plan(Plan((RESET,)))
        self._goto(ControllerState.MODEL_UPDATE)

    # -- main loop ---------------------------------------------------------

    def play(self) -> RunReport:
        handlers = {
            ControllerState.INIT: lambda: self._goto(ControllerState.MODEL_UPDATE),
            ControllerState.MODEL_UPDATE: self._handle_model_update,
            ControllerState.PLAN: self._handle_plan,
            ControllerState.EXECUTE: self._handle_execute,
            ControllerState.RESET_PENDING: self._handle_reset_pending,
        }
        try:
            while self.state != ControllerState.DONE:
                if self._remaining() <= 0:
                    self._finish("budget_exhausted")
                    break
                handlers[self.state]()
        except _ENV_ERRORS as exc:
            self._note(f"environment error: {exc}")
            self._finish("environment_error")
        finally:
            self.writer.close()
            self.backend.close()
            try:
                self.client.close()
            except _ENV_ERRORS:
                pass
        return self._build_report()

    def _build_report(self) -> RunReport:
        solved = {
            r.level_index
            for r in self.writer.records
            if r.status_after
            in (GameStatus.LEVEL_COMPLETED, GameStatus.GAME_COMPLETED)
        }
        actions = list(self.cursor.level_actions)
        actions += [0] * (self.spec.level_count - len(actions))
        levels = [
            LevelResult(lvl in solved, actions[lvl])
            for lvl in range(self.spec.level_count)
        ]
        rhae = game_rhae(
            [
                (self.spec.baselines[lvl], actions[lvl], lvl in solved)
                for lvl in range(self.spec.level_count)
            ],
            self.spec.level_count,
        )
        report = RunReport(
            game_id=self.spec.game_id,
            run_index=1,
            level_count=self.spec.level_count,
            levels_solved=len(solved),
            rhae=rhae,
            termination=self.termination,
            levels=levels,
            notes=self.notes,
        )
        save_rules(self.model, self.run.model_path)
        write_run_report(self.run.report_path, report)
        return report


def run_game(game_id: str, modeler, config: ControllerConfig, run: RunDirectory,
             games=None, client=None) -> RunReport:
    """Play one fresh playthrough; always returns a report.

    Environment errors terminate the run with a partial report; the session
    is lost and never resumed.
    """
    game_run = _GameRun(game_id, modeler, config, run, games=games, client=client)
    return game_run.play()
