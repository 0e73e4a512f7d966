"""Planning inside a model: breadth-first search, optional A*.

Plans are searched entirely in the model; the environment is never
touched.  Search is deterministic: actions expand in the caller's stable
order, so the returned plan is the first shortest one in that order.
Every created state (the start plus each generated successor) costs one
node from the budget.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass

from .frames import Action, GameStatus
from .frames import AGENT, AGENT_KEYED, AGENT_ON_TARGET, GOAL, TARGET
from .model import ModelState, Unknown

DEFAULT_MAX_DEPTH = 64
DEFAULT_MAX_NODES = 200_000


@dataclass(frozen=True)
class Plan:
    """Ordered actions; non-empty, RESET permitted only as the first."""

    actions: tuple[Action, ...]

    def __post_init__(self):
        if not self.actions:
            raise ValueError("plan must not be empty")
        if any(a.is_reset for a in self.actions[1:]):
            raise ValueError("reset is only allowed as the first plan action")

    def __len__(self) -> int:
        return len(self.actions)


@dataclass(frozen=True)
class NoPlanFound:
    reason: str  # "AlreadyComplete" | "BudgetExhausted" | "Exhausted"


def _key(backend, state: ModelState) -> str:
    return backend.render(state)


def plan_bfs(
    backend,
    start: ModelState,
    actions: list[Action],
    max_depth: int = DEFAULT_MAX_DEPTH,
    max_nodes: int = DEFAULT_MAX_NODES,
    already_complete: bool = False,
) -> Plan | NoPlanFound:
    """Shortest plan whose simulated execution reaches LEVEL_COMPLETED."""
    if already_complete:
        return NoPlanFound("AlreadyComplete")
    nodes = 1
    if nodes > max_nodes:
        return NoPlanFound("BudgetExhausted")
    visited = {_key(backend, start)}
    queue: deque[tuple[ModelState, tuple[Action, ...]]] = deque([(start, ())])
    while queue:
        state, path = queue.popleft()
        if len(path) >= max_depth:
            continue
        for action in actions:
            prediction = backend.predict(state, action)
            if isinstance(prediction, Unknown):
                continue
            nodes += 1
            if nodes > max_nodes:
                return NoPlanFound("BudgetExhausted")
            if prediction.status == GameStatus.LEVEL_COMPLETED:
                return Plan(path + (action,))
            if prediction.status == GameStatus.GAME_OVER:
                continue
            key = _key(backend, prediction.state)
            if key not in visited:
                visited.add(key)
                queue.append((prediction.state, path + (action,)))
    return NoPlanFound("Exhausted")


def goal_distance_heuristic(state: ModelState) -> int:
    """Admissible bound: the agent must come within one step of a goal marker."""
    agents = [
        divmod(i, state.width)
        for i, c in enumerate(state.cells)
        if c in (AGENT, AGENT_KEYED, AGENT_ON_TARGET)
    ]
    goals = [
        divmod(i, state.width)
        for i, c in enumerate(state.cells)
        if c in (GOAL, TARGET)
    ]
    if not agents or not goals:
        return 0
    best = min(
        abs(ar - gr) + abs(ac - gc) for ar, ac in agents for gr, gc in goals
    )
    return max(0, best - 1)


def plan_astar(
    backend,
    start: ModelState,
    actions: list[Action],
    max_depth: int = DEFAULT_MAX_DEPTH,
    max_nodes: int = DEFAULT_MAX_NODES,
    already_complete: bool = False,
    heuristic=goal_distance_heuristic,
) -> Plan | NoPlanFound:
    """A* variant behind the same interface; optimal with an admissible
    heuristic, ties broken by insertion order."""
    if already_complete:
        return NoPlanFound("AlreadyComplete")
    nodes = 1
    if nodes > max_nodes:
        return NoPlanFound("BudgetExhausted")
    seq = 0
    open_heap = [(heuristic(start), 0, seq, start, ())]
    best_g = {_key(backend, start): 0}
    while open_heap:
        f, g, _, state, path = heapq.heappop(open_heap)
        if g > best_g.get(_key(backend, state), g):
            continue
        if g >= max_depth:
            continue
        for action in actions:
            prediction = backend.predict(state, action)
            if isinstance(prediction, Unknown):
                continue
            nodes += 1
            if nodes > max_nodes:
                return NoPlanFound("BudgetExhausted")
            if prediction.status == GameStatus.LEVEL_COMPLETED:
                return Plan(path + (action,))
            if prediction.status == GameStatus.GAME_OVER:
                continue
            key = _key(backend, prediction.state)
            g2 = g + 1
            if g2 < best_g.get(key, 1 << 30):
                best_g[key] = g2
                seq += 1
                heapq.heappush(
                    open_heap,
                    (g2 + heuristic(prediction.state), g2, seq, prediction.state,
                     path + (action,)),
                )
    return NoPlanFound("Exhausted")


PLANNERS = {"bfs": plan_bfs, "astar": plan_astar}
