"""Scripted modelers: ground-truth oracle, rule-induction learner, random walker.

All modelers share a three-call interface the controller drives:

    update(new_records) -> model     fold new evidence into the model
    refactor(model, records) -> model   compress the model, keeping it consistent
    explore(state_ascii, legal, history) -> action   fallback when planning fails

The learner induces maximally specific rules (the 3x3 neighborhood of each
changed cell, widened to 5x5 when observations conflict) and keeps the
invariant that its model replays every record seen so far.  The refactorer
greedily merges same-action same-write rule pairs by wildcarding their
differing cells, keeping each merge only if consistency with all records
survives; total pattern size never increases.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field

from .errors import IrreconcilableObservations
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
    simple,
)
from .external import RuleModelBackend
from .games import DIRECTIONS, UNLOCK, GameSpec
from .model import Pattern, RewriteRule, RuleModel
from .model import _rule_index as _model_index
from .tracestore import TransitionRecord
from .verify import verify_world_model


def least_tried(state_ascii: str, legal: list[Action],
                history: list[tuple[str, Action]]) -> Action:
    """Deterministic exploration: least-tried (state, action) pair, stable ties."""
    counts = Counter(history)
    return min(
        legal, key=lambda a: (counts[(state_ascii, a)], legal.index(a))
    )


# ---------------------------------------------------------------------------
# oracle models compiled from the true dynamics
# ---------------------------------------------------------------------------


class _RuleBuilder:
    def __init__(self):
        self.rules: list[RewriteRule] = []

    def add(self, action_k: int, k: int, anchor_sym: int | None,
            offsets: dict[tuple[int, int], int], write: int):
        center = k // 2
        cells: list[int | None] = [None] * (k * k)
        if anchor_sym is not None:
            cells[center * k + center] = anchor_sym
        for (dr, dc), sv in offsets.items():
            cells[(center + dr) * k + (center + dc)] = sv
        self.rules.append(
            RewriteRule(
                actions=frozenset({simple(action_k)}),
                pattern=Pattern(k, (center, center), tuple(cells)),
                write=write,
                priority=len(self.rules),
            )
        )


def _cell_pattern(symbol: int) -> Pattern:
    return Pattern(1, (0, 0), (symbol,))


def _compile_corridor() -> RuleModel:
    b = _RuleBuilder()
    arrive = {FLOOR: AGENT, GOAL: GOAL_REACHED, HAZARD: HAZARD_HIT}
    for k, (dr, dc) in DIRECTIONS.items():
        for dest, write in arrive.items():
            b.add(k, 3, AGENT, {(dr, dc): dest}, FLOOR)
            b.add(k, 3, dest, {(-dr, -dc): AGENT}, write)
    return RuleModel(tuple(b.rules), True,
                     goal=_cell_pattern(GOAL_REACHED), hazard=_cell_pattern(HAZARD_HIT))


def _compile_keydoor() -> RuleModel:
    b = _RuleBuilder()
    for k, (dr, dc) in DIRECTIONS.items():
        for agent in (AGENT, AGENT_KEYED):
            arrive = {FLOOR: agent, GOAL: GOAL_REACHED, HAZARD: HAZARD_HIT,
                      KEY: AGENT_KEYED}
            for dest, write in arrive.items():
                b.add(k, 3, agent, {(dr, dc): dest}, FLOOR)
                b.add(k, 3, dest, {(-dr, -dc): agent}, write)
    for dr, dc in DIRECTIONS.values():
        b.add(UNLOCK, 3, DOOR, {(dr, dc): AGENT_KEYED}, FLOOR)
        b.add(UNLOCK, 3, AGENT_KEYED, {(dr, dc): DOOR}, AGENT)
    return RuleModel(tuple(b.rules), True,
                     goal=_cell_pattern(GOAL_REACHED), hazard=_cell_pattern(HAZARD_HIT))


def _compile_pushblock() -> RuleModel:
    b = _RuleBuilder()
    leaves = {AGENT: FLOOR, AGENT_ON_TARGET: TARGET}
    arrives = {FLOOR: AGENT, TARGET: AGENT_ON_TARGET}
    box_arrives = {FLOOR: BLOCK, TARGET: BLOCK_ON_TARGET}
    box_becomes = {BLOCK: AGENT, BLOCK_ON_TARGET: AGENT_ON_TARGET}
    for k, (dr, dc) in DIRECTIONS.items():
        for agent, leave in leaves.items():
            for dest, arrive in arrives.items():
                b.add(k, 3, agent, {(dr, dc): dest}, leave)
                b.add(k, 3, dest, {(-dr, -dc): agent}, arrive)
            for box, over in box_becomes.items():
                for beyond, barrive in box_arrives.items():
                    # agent cell sees two ahead: needs the 5x5 window
                    b.add(k, 5, agent, {(dr, dc): box, (2 * dr, 2 * dc): beyond}, leave)
                    b.add(k, 3, box, {(-dr, -dc): agent, (dr, dc): beyond}, over)
                    b.add(k, 5, beyond,
                          {(-dr, -dc): box, (-2 * dr, -2 * dc): agent}, barrive)
    return RuleModel(tuple(b.rules), True, goal=_cell_pattern(BLOCK_ON_TARGET))


_ORACLE_COMPILERS = {
    "corridor": _compile_corridor,
    "keydoor": _compile_keydoor,
    "pushblock": _compile_pushblock,
}


def compile_oracle_model(spec: GameSpec) -> RuleModel:
    """Rule model equivalent to the game's true dynamics on reachable states."""
    return _ORACLE_COMPILERS[spec.dynamics]()


class OracleModeler:
    """Upper-bound baseline: the ground-truth model, never modified."""

    name = "oracle"

    def __init__(self, spec: GameSpec):
        self._model = compile_oracle_model(spec)

    def update(self, new_records) -> RuleModel:
        return self._model

    def refactor(self, model, records) -> RuleModel:
        return model  # already the minimal ground truth

    def explore(self, state_ascii, legal, history) -> Action:
        return least_tried(state_ascii, legal, history)


class RandomModeler:
    """Lower-bound baseline: an empty identity model plus random exploration."""

    name = "random"

    def __init__(self, seed: int = 0):
        self._rng = random.Random(seed)

    def update(self, new_records) -> RuleModel:
        return RuleModel()

    def refactor(self, model, records) -> RuleModel:
        return model

    def explore(self, state_ascii, legal, history) -> Action:
        return self._rng.choice(legal)


# ---------------------------------------------------------------------------
# rule induction
# ---------------------------------------------------------------------------


def _context(frame: Frame, index: int, k: int) -> tuple[int | None, ...]:
    """k x k literal neighborhood of a cell; out-of-grid positions wildcard."""
    row, col = divmod(index, frame.width)
    center = k // 2
    out: list[int | None] = []
    for dr in range(-center, center + 1):
        for dc in range(-center, center + 1):
            r, c = row + dr, col + dc
            if 0 <= r < frame.height and 0 <= c < frame.width:
                out.append(frame.cells[r * frame.width + c])
            else:
                out.append(None)
    return tuple(out)


def _ctx_pattern(ctx: tuple[int | None, ...], k: int) -> Pattern:
    return Pattern(k, (k // 2, k // 2), ctx)


_COMPLETING = (GameStatus.LEVEL_COMPLETED, GameStatus.GAME_COMPLETED)


class _Conflict(Exception):
    """Same 3x3 context, different outcomes; the group needs a wider window."""

    def __init__(self, action: Action, ctx3):
        super().__init__("conflicting outcomes")
        self.action = action
        self.ctx3 = ctx3


@dataclass
class _Group:
    """All observed instances of one (action, context) cell change."""

    rule: RewriteRule
    support: int


@dataclass
class InducedRuleSet:
    """Learner state: accumulated records, escalations, and the live model.

    Induction is incremental: rule groups persist across updates, and a
    pass re-verifies only what the new evidence can have changed.  Because
    induced patterns are fully literal neighborhoods, at most one rule can
    match any cell, so newly added rules are the only way a previously
    verified record's prediction can change; escalations and conflicts
    force a full rebuild and a full re-verification.
    """

    records: list[TransitionRecord] = field(default_factory=list)
    model: RuleModel = field(default_factory=RuleModel)
    support: dict[int, int] = field(default_factory=dict)  # rule priority -> count
    merge_queue: list = field(default_factory=list)
    _escalated: set = field(default_factory=set)  # (action, ctx3) needing 5x5
    _goal_k: int = 3
    _hazard_k: int = 3
    _groups: dict = field(default_factory=dict)  # (action, k, ctx) -> _Group
    _spots: list = field(default_factory=list)  # per record: symbol -> [cells]
    _goal: Pattern | None = None
    _hazard: Pattern | None = None
    _last_built: RuleModel | None = None
    _verified_upto: int = 0  # records verified against the current groups
    _needs_full: bool = True

    # -- induction -----------------------------------------------------

    def update(self, new_records: list[TransitionRecord]) -> RuleModel:
        """Fold new evidence in; the resulting model replays every record."""
        first_new = len(self.records)
        self.records.extend(new_records)
        self._spots.extend(_symbol_spots(r.frame_before) for r in new_records)
        for _ in range(64):  # each failed pass escalates at least one window
            try:
                added = self._ingest(first_new)
            except _Conflict as conflict:
                self._escalate_group(conflict.action, conflict.ctx3)
                continue
            model = self._materialize()
            failures = self._find_failures(model, first_new, added)
            if not failures:
                self.model = model
                self._verified_upto = len(self.records)
                self._needs_full = False
                return model
            if not self._widen(failures):
                raise IrreconcilableObservations(
                    f"{len(failures)} observations cannot be explained by "
                    f"local rewrite rules"
                )
        raise IrreconcilableObservations("window escalation did not converge")

    def _ingest(self, first_new: int) -> list[RewriteRule]:
        """Fold records into the persistent groups; returns rules added.

        A full rebuild (after escalation) re-ingests everything.
        """
        if self._needs_full:
            self._groups.clear()
            start = 0
        else:
            start = first_new
        added: list[RewriteRule] = []
        for rec in self.records[start:]:
            if rec.action.is_reset:
                continue
            fb, fa = rec.frame_before, rec.frame_after
            for i, (before, after) in enumerate(zip(fb.cells, fa.cells)):
                if before == after:
                    continue
                base = (rec.action, _context(fb, i, 3))
                k = 5 if base in self._escalated else 3
                ctx = base[1] if k == 3 else _context(fb, i, k)
                key = (rec.action, k, ctx)
                group = self._groups.get(key)
                if group is None:
                    rule = RewriteRule(
                        frozenset({rec.action}), _ctx_pattern(ctx, k), after,
                        len(self._groups),
                    )
                    self._groups[key] = _Group(rule, 1)
                    added.append(rule)
                elif group.rule.write != after:
                    if k == 5:
                        raise IrreconcilableObservations(
                            f"action {rec.action}: identical 5x5 context with "
                            f"conflicting outcomes"
                        )
                    raise _Conflict(rec.action, base[1])
                else:
                    group.support += 1
        self._refresh_predicates(first_new if not self._needs_full else 0)
        return added

    def _escalate_group(self, action: Action, ctx3) -> None:
        self._escalated.add((action, ctx3))
        self._needs_full = True

    def _materialize(self) -> RuleModel:
        rules = tuple(g.rule for g in self._groups.values())
        self.support = {g.rule.priority: g.support for g in self._groups.values()}
        last = self._last_built
        if (
            last is not None
            and last.rules == rules
            and last.goal == self._goal
            and last.hazard == self._hazard
        ):
            return last  # same object keeps its prediction memo warm
        model = RuleModel(rules, True, goal=self._goal, hazard=self._hazard)
        self._last_built = model
        return model

    def _refresh_predicates(self, first_new: int):
        """Keep predicates if the new evidence still fits them, else re-induce."""
        new = self.records[first_new:]
        if not self._predicate_fits(self._goal, _COMPLETING, new):
            self._goal = self._induce_predicate(_COMPLETING, self._goal_k)
        if not self._predicate_fits(self._hazard, (GameStatus.GAME_OVER,), new):
            self._hazard = self._induce_predicate(
                (GameStatus.GAME_OVER,), self._hazard_k
            )

    @staticmethod
    def _predicate_fits(pattern: Pattern | None, statuses, new_records) -> bool:
        for rec in new_records:
            positive = rec.status_after in statuses
            if pattern is None:
                if positive:
                    return False
                continue
            frame = rec.frame_after
            if positive != pattern.matches_anywhere(frame.width, frame.height,
                                                    frame.cells):
                return False
            if rec.step_index == 0:
                before = rec.frame_before
                if pattern.matches_anywhere(before.width, before.height, before.cells):
                    return False
        return True

    def _find_failures(self, model: RuleModel, first_new: int,
                       added: list[RewriteRule]):
        """Failure list as (record, flat cell | None) pairs.

        Full pass when the group set was rebuilt; otherwise check the new
        records completely plus every old-record cell a new rule touches.
        """
        if self._needs_full or self._verified_upto < first_new:
            report = verify_world_model(RuleModelBackend(model), self.records)
            by_locator = {r.locator(): r for r in self.records}
            return [
                (by_locator[f.locator], self._failure_cell(f)) for f in report.failures
            ]
        failures = []
        report = verify_world_model(
            RuleModelBackend(model), self.records[first_new:]
        )
        by_locator = {r.locator(): r for r in self.records[first_new:]}
        failures.extend(
            (by_locator[f.locator], self._failure_cell(f)) for f in report.failures
        )
        old = self.records[:first_new]
        for rule in added:
            anchor = rule.pattern.anchor_literal
            for rec, spots in zip(old, self._spots):
                if rec.action.is_reset or rec.action not in rule.actions:
                    continue
                fb, fa = rec.frame_before, rec.frame_after
                for i in spots.get(anchor, ()):
                    if rule.pattern.matches_at(
                        fb.width, fb.height, fb.cells, i // fb.width, i % fb.width
                    ) and rule.write != fa.cells[i]:
                        failures.append((rec, i))
        return failures

    @staticmethod
    def _failure_cell(failure) -> int | None:
        if failure.kind != "frame":
            return None
        predicted = failure.predicted.replace("\n", "")
        observed = failure.observed.replace("\n", "")
        for i, (p, o) in enumerate(zip(predicted, observed)):
            if p != o:
                return i
        return None

    def _widen(self, failures) -> bool:
        """Escalate the windows behind failures; False when already maximal."""
        progressed = False
        for rec, cell in failures:
            if cell is None:  # status failure: grow the predicate windows
                if rec.status_after in _COMPLETING and self._goal_k == 3:
                    self._goal_k = 5
                    self._needs_full = True
                    progressed = True
                elif rec.status_after == GameStatus.GAME_OVER and self._hazard_k == 3:
                    self._hazard_k = 5
                    self._needs_full = True
                    progressed = True
                continue
            base = (rec.action, _context(rec.frame_before, cell, 3))
            if base not in self._escalated:
                self._escalate_group(*base)
                progressed = True
        return progressed

    def _induce_predicate(self, statuses, k: int) -> Pattern | None:
        positives = [r.frame_after for r in self.records if r.status_after in statuses]
        if not positives:
            return None
        negatives = [
            r.frame_after for r in self.records if r.status_after not in statuses
        ]
        negatives += [r.frame_before for r in self.records if r.step_index == 0]
        freq = Counter()
        for rec in self.records:
            freq.update(rec.frame_before.cells)
            freq.update(rec.frame_after.cells)
        first = next(r for r in self.records if r.status_after in statuses)
        changed = [
            i
            for i, (b, a) in enumerate(
                zip(first.frame_before.cells, first.frame_after.cells)
            )
            if b != a
        ]
        # try anchor symbols rarest first: markers that only appear on the
        # triggering frames generalize best
        for cell in sorted(changed, key=lambda i: (freq[first.frame_after.cells[i]], i)):
            symbol = first.frame_after.cells[cell]
            windows = []
            for frame in positives:
                spots = [i for i, c in enumerate(frame.cells) if c == symbol]
                if not spots:
                    windows = None
                    break
                windows.append(_context(frame, spots[0], k))
            if not windows:
                continue
            merged = tuple(
                v if all(w[j] == v for w in windows) else None
                for j, v in enumerate(windows[0])
            )
            pattern = _ctx_pattern(merged, k)
            if pattern.literals < 1:
                continue
            if any(
                pattern.matches_anywhere(f.width, f.height, f.cells) for f in negatives
            ):
                continue
            return pattern
        return None

    # -- refactoring ---------------------------------------------------

    def refactor(self, records: list[TransitionRecord] | None = None) -> RuleModel:
        self.model = refactor_model(self.model, records or self.records,
                                     support=self.support, queue_out=self.merge_queue)
        return self.model


def _merge_patterns(a: Pattern, b: Pattern) -> Pattern:
    cells = tuple(x if x == y else None for x, y in zip(a.cells, b.cells))
    return Pattern(a.k, a.anchor, cells)


def _pattern_distance(a: Pattern, b: Pattern) -> int:
    return sum(1 for x, y in zip(a.cells, b.cells) if x != y)


def _renumber(rules: list[RewriteRule]) -> tuple[RewriteRule, ...]:
    return tuple(
        RewriteRule(r.actions, r.pattern, r.write, i) for i, r in enumerate(rules)
    )


def _symbol_spots(frame: Frame) -> dict[int, list[int]]:
    spots: dict[int, list[int]] = {}
    for i, c in enumerate(frame.cells):
        spots.setdefault(c, []).append(i)
    return spots


def _cell_write(trial: RuleModel, action: Action, frame: Frame, i: int) -> int | None:
    """What the trial model writes at one cell (bucketed winner lookup)."""
    by_symbol, wild = _model_index(trial).get(action, ({}, []))
    row, col = divmod(i, frame.width)
    best = None
    for rule in by_symbol.get(frame.cells[i], ()):
        if rule.pattern.matches_at(frame.width, frame.height, frame.cells, row, col):
            best = rule
            break
    for rule in wild:
        if best is not None and rule.priority > best.priority:
            break
        if rule.pattern.matches_at(frame.width, frame.height, frame.cells, row, col):
            best = rule
            break
    if best is not None:
        return best.write
    return frame.cells[i] if trial.default_dynamics else None


def _merge_is_consistent(trial: RuleModel, merged: RewriteRule, records,
                         spots_cache) -> bool:
    """Check only the cells the widened rule can now touch: every such cell
    must still predict the observed value under the candidate model."""
    anchor = merged.pattern.anchor_literal
    for rec, spots in zip(records, spots_cache):
        if rec.action not in merged.actions:
            continue
        fb, fa = rec.frame_before, rec.frame_after
        sites = spots.get(anchor, ()) if anchor is not None else range(len(fb.cells))
        for i in sites:
            if not merged.pattern.matches_at(
                fb.width, fb.height, fb.cells, i // fb.width, i % fb.width
            ):
                continue
            if _cell_write(trial, rec.action, fb, i) != fa.cells[i]:
                return False
    return True


def refactor_model(model: RuleModel, records, support: dict[int, int] | None = None,
                   queue_out: list | None = None) -> RuleModel:
    """Greedy verification-gated merging; description length never increases."""
    rules = sorted(model.rules, key=lambda r: r.priority)
    new_support = dict(support or {})
    recs = [r for r in records if not r.action.is_reset]
    spots_cache = [_symbol_spots(r.frame_before) for r in recs]
    while True:
        candidates = []
        for i in range(len(rules)):
            for j in range(i + 1, len(rules)):
                a, b = rules[i], rules[j]
                if (a.actions, a.write, a.pattern.k, a.pattern.anchor) != (
                    b.actions, b.write, b.pattern.k, b.pattern.anchor
                ):
                    continue
                merged = _merge_patterns(a.pattern, b.pattern)
                if merged.literals < 1:
                    continue
                candidates.append((_pattern_distance(a.pattern, b.pattern), i, j))
        candidates.sort()
        if queue_out is not None:
            queue_out[:] = candidates
        accepted = False
        for _, i, j in candidates:
            a, b = rules[i], rules[j]
            merged = RewriteRule(
                a.actions, _merge_patterns(a.pattern, b.pattern), a.write, a.priority
            )
            trial = RuleModel(
                tuple(merged if r is a else r for r in rules if r is not b),
                model.default_dynamics, model.goal, model.hazard,
            )
            if _merge_is_consistent(trial, merged, recs, spots_cache):
                new_support[a.priority] = new_support.get(a.priority, 1) + new_support.get(
                    b.priority, 1
                )
                new_support.pop(b.priority, None)
                rules = [merged if r is a else r for r in rules if r is not b]
                accepted = True
                break
        if not accepted:
            break
    renumbered = _renumber(rules)
    if support is not None:
        support.clear()
        # keys map to the renumbered priorities in list order
        for new_priority, rule in enumerate(rules):
            support[new_priority] = new_support.get(rule.priority, 1)
    return RuleModel(renumbered, model.default_dynamics, model.goal, model.hazard)


class RuleInductionModeler:
    """Learner: induce maximally specific rules, then compress under the gate."""

    name = "rules"

    def __init__(self):
        self.ruleset = InducedRuleSet()

    def update(self, new_records) -> RuleModel:
        return self.ruleset.update(list(new_records))

    def refactor(self, model, records) -> RuleModel:
        return self.ruleset.refactor(list(records))

    def explore(self, state_ascii, legal, history) -> Action:
        return least_tried(state_ascii, legal, history)


def make_modeler(name: str, spec: GameSpec, seed: int = 0):
    if name == "oracle":
        return OracleModeler(spec)
    if name == "rules":
        return RuleInductionModeler()
    if name == "random":
        return RandomModeler(seed)
    raise ValueError(f"unknown modeler: {name!r}")
