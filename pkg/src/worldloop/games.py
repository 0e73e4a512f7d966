"""Built-in game definitions: level grids, dynamics engines, and baselines.

Three deterministic games ship with the harness:

* ``corridor``  - walk to the goal cell; hazards end the attempt.
* ``keydoor``   - pick up the key, unlock the door (SIMPLE(5)) while standing
                  next to it, then reach the goal.
* ``pushblock`` - push the block onto the target cell.

Per-level baselines are the shortest solution lengths found by exhaustive
breadth-first search over the real dynamics; a test re-derives them so the
frozen numbers can never drift from the engines.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from pathlib import Path

from .errors import SchemaViolation, UnknownGame
from .frames import (
    AGENT,
    AGENT_KEYED,
    AGENT_ON_TARGET,
    BLOCK,
    BLOCK_ON_TARGET,
    DOOR,
    FLOOR,
    GOAL,
    GOAL_REACHED,
    HAZARD,
    HAZARD_HIT,
    KEY,
    TARGET,
    Action,
    Frame,
    GameStatus,
    parse_grid,
    simple,
)

# SIMPLE(1..4) are the movement actions: up, down, left, right.
DIRECTIONS = {1: (-1, 0), 2: (1, 0), 3: (0, -1), 4: (0, 1)}

UNLOCK = 5  # keydoor only


@dataclass(frozen=True)
class GameSpec:
    """Static description of one game: levels, legal actions, dynamics key."""

    game_id: str
    dynamics: str
    level_grids: tuple[tuple[int, int, tuple[int, ...]], ...]
    baselines: tuple[int, ...]
    legal: tuple[Action, ...]
    allow_point: bool = False

    def __post_init__(self):
        if len(self.level_grids) != len(self.baselines):
            raise ValueError("one baseline per level required")
        if any(b < 1 for b in self.baselines):
            raise ValueError("baselines must be positive")

    @property
    def level_count(self) -> int:
        return len(self.level_grids)

    def initial_frame(self, level: int) -> Frame:
        w, h, cells = self.level_grids[level]
        return Frame(w, h, cells, level)


# ---------------------------------------------------------------------------
# dynamics engines
# ---------------------------------------------------------------------------


def _find(cells, symbols) -> int:
    for i, c in enumerate(cells):
        if c in symbols:
            return i
    return -1


def _corridor_step(width, height, cells, action):
    new = list(cells)
    if action.kind == "simple" and action.k in DIRECTIONS:
        pos = _find(cells, (AGENT,))
        if pos >= 0:
            dr, dc = DIRECTIONS[action.k]
            r, c = divmod(pos, width)
            nr, nc = r + dr, c + dc
            if 0 <= nr < height and 0 <= nc < width:
                dest = cells[nr * width + nc]
                if dest == FLOOR:
                    new[pos], new[nr * width + nc] = FLOOR, AGENT
                elif dest == GOAL:
                    new[pos], new[nr * width + nc] = FLOOR, GOAL_REACHED
                elif dest == HAZARD:
                    new[pos], new[nr * width + nc] = FLOOR, HAZARD_HIT
    return tuple(new)


def _keydoor_step(width, height, cells, action):
    new = list(cells)
    if action.kind == "simple" and action.k in DIRECTIONS:
        pos = _find(cells, (AGENT, AGENT_KEYED))
        if pos >= 0:
            agent = cells[pos]
            dr, dc = DIRECTIONS[action.k]
            r, c = divmod(pos, width)
            nr, nc = r + dr, c + dc
            if 0 <= nr < height and 0 <= nc < width:
                i = nr * width + nc
                dest = cells[i]
                if dest == FLOOR:
                    new[pos], new[i] = FLOOR, agent
                elif dest == GOAL:
                    new[pos], new[i] = FLOOR, GOAL_REACHED
                elif dest == HAZARD:
                    new[pos], new[i] = FLOOR, HAZARD_HIT
                elif dest == KEY:
                    new[pos], new[i] = FLOOR, AGENT_KEYED
                # DOOR and WALL block
    elif action.kind == "simple" and action.k == UNLOCK:
        # cell-parallel on the old grid: every door next to a key-carrying
        # agent opens, and that agent spends its key
        for i, sym in enumerate(cells):
            r, c = divmod(i, width)
            neighbors = [
                cells[(r + dr) * width + (c + dc)]
                for dr, dc in DIRECTIONS.values()
                if 0 <= r + dr < height and 0 <= c + dc < width
            ]
            if sym == DOOR and AGENT_KEYED in neighbors:
                new[i] = FLOOR
            elif sym == AGENT_KEYED and DOOR in neighbors:
                new[i] = AGENT
    return tuple(new)


def _pushblock_step(width, height, cells, action):
    new = list(cells)
    if action.kind == "simple" and action.k in DIRECTIONS:
        pos = _find(cells, (AGENT, AGENT_ON_TARGET))
        if pos >= 0:
            agent = cells[pos]
            leave = FLOOR if agent == AGENT else TARGET
            dr, dc = DIRECTIONS[action.k]
            r, c = divmod(pos, width)
            nr, nc = r + dr, c + dc
            if 0 <= nr < height and 0 <= nc < width:
                i = nr * width + nc
                dest = cells[i]
                if dest in (FLOOR, TARGET):
                    new[pos] = leave
                    new[i] = AGENT if dest == FLOOR else AGENT_ON_TARGET
                elif dest in (BLOCK, BLOCK_ON_TARGET):
                    br, bc = nr + dr, nc + dc
                    if 0 <= br < height and 0 <= bc < width:
                        j = br * width + bc
                        beyond = cells[j]
                        if beyond in (FLOOR, TARGET):
                            new[pos] = leave
                            new[i] = AGENT if dest == BLOCK else AGENT_ON_TARGET
                            new[j] = BLOCK if beyond == FLOOR else BLOCK_ON_TARGET
    return tuple(new)


ENGINES = {
    "corridor": _corridor_step,
    "keydoor": _keydoor_step,
    "pushblock": _pushblock_step,
}


def step_cells(spec: GameSpec, cells: tuple[int, ...], level: int, action: Action):
    """Apply one in-level action; returns (new_cells, status)."""
    w, h, _ = spec.level_grids[level]
    new = ENGINES[spec.dynamics](w, h, cells, action)
    if GOAL_REACHED in new or BLOCK_ON_TARGET in new:
        return new, GameStatus.LEVEL_COMPLETED
    if HAZARD_HIT in new:
        return new, GameStatus.GAME_OVER
    return new, GameStatus.RUNNING


# ---------------------------------------------------------------------------
# exhaustive search over the real dynamics (the build-time baseline check)
# ---------------------------------------------------------------------------


def shortest_solution(spec: GameSpec, level: int) -> list[Action] | None:
    """BFS over reachable grids; returns a shortest completing action list."""
    w, h, start = spec.level_grids[level]
    moves = [a for a in spec.legal if not a.is_reset]
    queue = deque([(start, [])])
    seen = {start}
    while queue:
        cells, path = queue.popleft()
        for action in moves:
            nxt, status = step_cells(spec, cells, level, action)
            if status == GameStatus.LEVEL_COMPLETED:
                return path + [action]
            if status == GameStatus.GAME_OVER:
                continue
            if nxt not in seen:
                seen.add(nxt)
                queue.append((nxt, path + [action]))
    return None


def reachable_states(spec: GameSpec, level: int) -> list[tuple[int, ...]]:
    """All in-level grids reachable from the initial one, running states only."""
    w, h, start = spec.level_grids[level]
    moves = [a for a in spec.legal if not a.is_reset]
    queue = deque([start])
    seen = {start}
    order = [start]
    while queue:
        cells = queue.popleft()
        for action in moves:
            nxt, status = step_cells(spec, cells, level, action)
            if status == GameStatus.RUNNING and nxt not in seen:
                seen.add(nxt)
                order.append(nxt)
                queue.append(nxt)
    return order


# ---------------------------------------------------------------------------
# built-in games
# ---------------------------------------------------------------------------

_CORRIDOR_GRIDS = [
    """
#####
#A.G#
#####
""",
    """
######
#A...#
###.##
###G##
######
""",
    """
#######
#A.X.G#
#.....#
#######
""",
    """
#########
#A..#..X#
#.#.#.#.#
#.#...#G#
#..X#...#
#########
""",
]

_KEYDOOR_GRIDS = [
    """
########
#A.K.D.#
######G#
########
""",
    """
##########
#A.X...#G#
#..K...D.#
#....X.###
##########
""",
    """
#########
#A.#...G#
#..D...##
#.K#..###
#########
""",
    """
#########
#A...K..#
#.X..#..#
####D####
#.......#
#......G#
#########
""",
]

_PUSHBLOCK_GRIDS = [
    """
#######
#A.B.T#
#######
""",
    """
#######
#.....#
#.B..T#
#.....#
#A....#
#######
""",
    """
#######
#.....#
#.B...#
#.....#
#..T..#
#A....#
#######
""",
]

# Shortest solution lengths per level, frozen from the BFS above and
# re-derived by tests/test_env.py.
_CORRIDOR_BASELINES = (2, 4, 6, 10)
_KEYDOOR_BASELINES = (7, 10, 11, 13)
_PUSHBLOCK_BASELINES = (3, 5, 8)


def _grids(texts):
    return tuple(parse_grid(t) for t in texts)


def built_in_registry() -> dict[str, GameSpec]:
    move4 = tuple(simple(k) for k in range(1, 5))
    return {
        "corridor": GameSpec(
            "corridor", "corridor", _grids(_CORRIDOR_GRIDS), _CORRIDOR_BASELINES, move4
        ),
        "keydoor": GameSpec(
            "keydoor",
            "keydoor",
            _grids(_KEYDOOR_GRIDS),
            _KEYDOOR_BASELINES,
            tuple(simple(k) for k in range(1, 6)),
        ),
        "pushblock": GameSpec(
            "pushblock", "pushblock", _grids(_PUSHBLOCK_GRIDS), _PUSHBLOCK_BASELINES, move4
        ),
    }


_REGISTRY: dict[str, GameSpec] | None = None


def registry() -> dict[str, GameSpec]:
    global _REGISTRY
    if _REGISTRY is None:
        _REGISTRY = built_in_registry()
    return _REGISTRY


def get_game(game_id: str, games: dict[str, GameSpec] | None = None) -> GameSpec:
    games = games if games is not None else registry()
    try:
        return games[game_id]
    except KeyError:
        raise UnknownGame(f"no such game: {game_id!r}") from None


# ---------------------------------------------------------------------------
# custom game files
# ---------------------------------------------------------------------------


def load_game_spec(path: str | Path) -> GameSpec:
    """Load a game from a JSONL file: a header line, then one line per level.

    Header: {"game_id": ..., "dynamics": ..., "legal": [k, ...]}
    Level:  {"grid": ["row", ...]} with an optional "baseline" int.

    Dynamics must name a built-in engine.  Every level is checked solvable
    by BFS at load time; a stated baseline must match the BFS length.
    """
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise SchemaViolation("empty game spec file")
    header = json.loads(lines[0])
    if set(header) - {"game_id", "dynamics", "legal", "allow_point"}:
        raise SchemaViolation(f"unknown header fields: {header}")
    dynamics = header["dynamics"]
    if dynamics not in ENGINES:
        raise SchemaViolation(f"unknown dynamics engine: {dynamics!r}")
    legal = tuple(simple(k) for k in header["legal"])
    grids = []
    stated = []
    for ln in lines[1:]:
        obj = json.loads(ln)
        grids.append(parse_grid("\n".join(obj["grid"])))
        stated.append(obj.get("baseline"))
    spec = GameSpec(
        header["game_id"],
        dynamics,
        tuple(grids),
        tuple(1 for _ in grids),  # placeholder until BFS fills them in
        legal,
        bool(header.get("allow_point", False)),
    )
    baselines = []
    for level, want in enumerate(stated):
        solution = shortest_solution(spec, level)
        if solution is None:
            raise SchemaViolation(f"level {level} is not solvable")
        if want is not None and want != len(solution):
            raise SchemaViolation(
                f"level {level}: stated baseline {want} != shortest length {len(solution)}"
            )
        baselines.append(len(solution))
    return GameSpec(spec.game_id, dynamics, spec.level_grids, tuple(baselines), legal,
                    spec.allow_point)
