import pytest

from worldloop.controller import ControllerConfig, run_game
from worldloop.external import RuleModelBackend
from worldloop.frames import GameStatus, RESET
from worldloop.games import registry
from worldloop.model import RuleModel
from worldloop.modelers import compile_oracle_model, make_modeler
from worldloop.planner import plan_bfs
from worldloop.tracestore import create_run, load_records
from worldloop.verify import solved_levels, verify_planner, verify_world_model


@pytest.fixture(scope="module")
def corridor_trace(tmp_path_factory):
    run = create_run(tmp_path_factory.mktemp("runs") / "r", "corridor")
    spec = registry()["corridor"]
    run_game("corridor", make_modeler("oracle", spec), ControllerConfig(), run)
    return load_records(run)


def oracle():
    return compile_oracle_model(registry()["corridor"])


def test_oracle_passes_full_playthrough(corridor_trace):
    report = verify_world_model(RuleModelBackend(oracle()), corridor_trace)
    assert report.passed
    non_reset = sum(1 for r in corridor_trace if not r.action.is_reset)
    assert report.checked == non_reset


def test_empty_records_pass():
    report = verify_world_model(RuleModelBackend(oracle()), [])
    assert report.passed and report.checked == 0


def test_deleted_rule_fails_exactly_where_it_fired(corridor_trace):
    model = oracle()
    backend = RuleModelBackend(model)
    for drop in range(len(model.rules)):
        kept = tuple(r for i, r in enumerate(model.rules) if i != drop)
        damaged = RuleModel(kept, True, model.goal, model.hazard)
        # expected failures: records where the damaged model now disagrees
        expected = set()
        for rec in corridor_trace:
            if rec.action.is_reset:
                continue
            state = backend.reconstruct(rec.frame_before)
            if (
                backend.predict(state, rec.action).state.cells
                != RuleModelBackend(damaged).predict(state, rec.action).state.cells
            ):
                expected.add(rec.locator())
        report = verify_world_model(RuleModelBackend(damaged), corridor_trace)
        assert {f.locator for f in report.failures} == expected


def test_failures_are_ordered_and_complete(corridor_trace):
    damaged = RuleModel((), True)  # identity model: every changing step fails
    report = verify_world_model(RuleModelBackend(damaged), corridor_trace)
    locators = [f.locator for f in report.failures]
    assert locators == sorted(locators)
    changing = [
        r.locator()
        for r in corridor_trace
        if not r.action.is_reset and r.frame_before.cells != r.frame_after.cells
    ]
    frame_failures = [f.locator for f in report.failures if f.kind == "frame"]
    assert frame_failures == changing


def test_additivity_and_subset_monotonicity(corridor_trace):
    backend = RuleModelBackend(oracle())
    half = len(corridor_trace) // 2
    t1, t2 = corridor_trace[:half], corridor_trace[half:]
    whole = verify_world_model(backend, corridor_trace)
    r1 = verify_world_model(backend, t1)
    r2 = verify_world_model(backend, t2)
    assert whole.checked == r1.checked + r2.checked
    assert whole.passed == (r1.passed and r2.passed)
    # a passing model passes on any subset
    assert verify_world_model(backend, corridor_trace[::3]).passed


def test_game_completed_counts_as_level_completed(corridor_trace):
    final = corridor_trace[-1]
    assert final.status_after == GameStatus.GAME_COMPLETED
    report = verify_world_model(RuleModelBackend(oracle()), [final])
    assert report.passed


def test_planner_verifier_oracle(corridor_trace):
    spec = registry()["corridor"]
    solved = solved_levels(corridor_trace)
    assert solved == set(range(spec.level_count))
    levels = [(l, spec.initial_frame(l), True) for l in range(spec.level_count)]
    actions = [a for a in spec.legal if not a.is_reset]
    model = oracle()
    report = verify_planner(RuleModelBackend(model), levels, actions, model=model)
    assert report.passed
    assert [c.plan_length for c in report.checks] == list(spec.baselines)


def test_planner_verifier_no_goal():
    spec = registry()["corridor"]
    model = compile_oracle_model(spec)
    goalless = RuleModel(model.rules, True, goal=None, hazard=model.hazard)
    levels = [(l, spec.initial_frame(l), True) for l in range(spec.level_count)]
    actions = [a for a in spec.legal if not a.is_reset]
    report = verify_planner(RuleModelBackend(goalless), levels, actions, model=goalless)
    assert not report.passed
    assert all(c.outcome == "fail" and "NoPlanFound" in c.reason for c in report.checks)


def test_planner_verifier_skips_unsolved():
    spec = registry()["corridor"]
    model = oracle()
    levels = [(0, spec.initial_frame(0), True), (1, spec.initial_frame(1), False)]
    actions = [a for a in spec.legal if not a.is_reset]
    report = verify_planner(RuleModelBackend(model), levels, actions, model=model)
    assert report.passed
    assert report.checks[1].outcome == "not_applicable"


def test_replay_equivalence(corridor_trace):
    # a model passing both verifiers regenerates the frame sequence from
    # frames and actions alone
    backend = RuleModelBackend(oracle())
    for rec in corridor_trace:
        if rec.action.is_reset:
            continue
        prediction = backend.predict(backend.reconstruct(rec.frame_before), rec.action)
        assert prediction.state.cells == rec.frame_after.cells
