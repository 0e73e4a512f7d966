"""Level-based game sessions: stepping, RESET, auto-advance, action counters.

A session owns one playthrough of one game.  Completed levels are never
re-entered; completing a non-final level advances the session and the
step's observation becomes the next level's initial frame.  The in-level
frame produced by the action itself is exposed as ``settled`` so that
recorded transitions always pair an action with the grid it produced.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import IllegalAction, SessionFinished, UnknownGame
from .frames import Action, Frame, GameStatus, RESET, point
from .games import GameSpec, get_game, step_cells


@dataclass(frozen=True)
class StepOutcome:
    """Result of one session step.

    ``frame`` is the next observation (after auto-advance it is the new
    level's initial frame); ``settled`` is the grid the action itself
    produced inside the level that was being played.
    """

    frame: Frame
    settled: Frame
    status: GameStatus


class Session:
    """Mutable playthrough state for one game.  Single-threaded."""

    def __init__(self, spec: GameSpec):
        self.spec = spec
        self.level_index = 0
        self.attempt_number = 1
        self.total_actions = 0
        self.level_actions = [0] * spec.level_count
        self.finished = False
        self._game_over = False
        self._cells = spec.level_grids[0][2]

    @property
    def game_id(self) -> str:
        return self.spec.game_id

    def current_frame(self) -> Frame:
        w, h, _ = self.spec.level_grids[self.level_index]
        return Frame(w, h, self._cells, self.level_index)

    def legal_actions(self) -> list[Action]:
        if self.finished:
            return []
        actions = list(self.spec.legal)
        if self.spec.allow_point:
            w, h, _ = self.spec.level_grids[self.level_index]
            actions.extend(point(x, y) for y in range(h) for x in range(w))
        actions.append(RESET)
        return actions

    def _check_legal(self, action: Action):
        if action.is_reset:
            return
        if action.kind == "simple":
            if action in self.spec.legal:
                return
            raise IllegalAction(f"{action} is not legal in {self.game_id}")
        if action.kind == "point":
            if not self.spec.allow_point:
                raise IllegalAction(f"{self.game_id} does not accept point actions")
            w, h, _ = self.spec.level_grids[self.level_index]
            if action.x >= w or action.y >= h:
                raise IllegalAction(f"{action} outside the {w}x{h} frame")
            return
        raise IllegalAction(f"unsupported action kind: {action.kind}")

    def step(self, action: Action) -> StepOutcome:
        if self.finished:
            raise SessionFinished("session already GAME_COMPLETED")
        self._check_legal(action)
        self.total_actions += 1
        self.level_actions[self.level_index] += 1

        if action.is_reset:
            self._cells = self.spec.level_grids[self.level_index][2]
            self._game_over = False
            self.attempt_number += 1
            frame = self.current_frame()
            return StepOutcome(frame, frame, GameStatus.RUNNING)

        if self._game_over:
            # terminal screen persists until RESET; the action still counts
            frame = self.current_frame()
            return StepOutcome(frame, frame, GameStatus.GAME_OVER)

        new_cells, status = step_cells(self.spec, self._cells, self.level_index, action)
        self._cells = new_cells
        settled = self.current_frame()

        if status == GameStatus.LEVEL_COMPLETED:
            if self.level_index + 1 == self.spec.level_count:
                self.finished = True
                return StepOutcome(settled, settled, GameStatus.GAME_COMPLETED)
            self.level_index += 1
            self.attempt_number = 1
            self._cells = self.spec.level_grids[self.level_index][2]
            return StepOutcome(self.current_frame(), settled, GameStatus.LEVEL_COMPLETED)

        if status == GameStatus.GAME_OVER:
            self._game_over = True
            return StepOutcome(settled, settled, GameStatus.GAME_OVER)

        return StepOutcome(settled, settled, GameStatus.RUNNING)


def new_session(game_id: str, games: dict[str, GameSpec] | None = None) -> tuple[Session, Frame]:
    """Create a fresh session at level 0; raises UnknownGame."""
    spec = get_game(game_id, games)
    session = Session(spec)
    return session, session.current_frame()
