import pytest

from worldloop.external import RuleModelBackend
from worldloop.frames import GameStatus, simple
from worldloop.games import registry, shortest_solution
from worldloop.model import ModelState, RuleModel, reconstruct, status_of_cells
from worldloop.modelers import compile_oracle_model
from worldloop.planner import NoPlanFound, Plan, plan_astar, plan_bfs


def oracle_backend(game_id):
    spec = registry()[game_id]
    return spec, RuleModelBackend(compile_oracle_model(spec))


def start_state(spec, level):
    return reconstruct(spec.initial_frame(level))


def moves(spec):
    return [a for a in spec.legal if not a.is_reset]


def test_plan_validation():
    with pytest.raises(ValueError):
        Plan(())
    with pytest.raises(ValueError):
        Plan((simple(1), __import__("worldloop.frames", fromlist=["RESET"]).RESET))


def test_bfs_finds_shortest_on_corridor_level0():
    spec, backend = oracle_backend("corridor")
    plan = plan_bfs(backend, start_state(spec, 0), moves(spec))
    assert isinstance(plan, Plan)
    assert len(plan) == spec.baselines[0]


@pytest.mark.parametrize("game_id", ["corridor", "keydoor", "pushblock"])
def test_bfs_optimal_against_environment_search(game_id):
    # the model-side planner must match an exhaustive search over the
    # environment itself, level by level
    spec, backend = oracle_backend(game_id)
    for level in range(spec.level_count):
        plan = plan_bfs(backend, start_state(spec, level), moves(spec))
        truth = shortest_solution(spec, level)
        assert isinstance(plan, Plan), f"{game_id} level {level}"
        assert len(plan) == len(truth), f"{game_id} level {level}"


def test_bfs_deterministic():
    spec, backend = oracle_backend("pushblock")
    first = plan_bfs(backend, start_state(spec, 2), moves(spec))
    second = plan_bfs(backend, start_state(spec, 2), moves(spec))
    assert first.actions == second.actions


def test_already_complete():
    spec, backend = oracle_backend("corridor")
    result = plan_bfs(backend, start_state(spec, 0), moves(spec),
                      already_complete=True)
    assert result == NoPlanFound("AlreadyComplete")


def test_node_budget_exhaustion():
    spec, backend = oracle_backend("corridor")
    for level in range(spec.level_count):
        result = plan_bfs(backend, start_state(spec, level), moves(spec), max_nodes=1)
        assert result == NoPlanFound("BudgetExhausted")


def test_depth_budget():
    spec, backend = oracle_backend("corridor")
    result = plan_bfs(backend, start_state(spec, 3), moves(spec), max_depth=3)
    assert result == NoPlanFound("Exhausted")


def test_no_goal_means_no_plan():
    spec, _ = oracle_backend("corridor")
    model = compile_oracle_model(spec)
    goalless = RuleModel(model.rules, True, goal=None, hazard=model.hazard)
    result = plan_bfs(RuleModelBackend(goalless), start_state(spec, 0), moves(spec))
    assert result == NoPlanFound("Exhausted")


def test_unknown_prunes_branch():
    model = RuleModel(default_dynamics=False)
    backend = RuleModelBackend(model)
    start = ModelState(2, 1, (2, 0), 0)
    assert plan_bfs(backend, start, [simple(4)]) == NoPlanFound("Exhausted")


def test_plans_route_around_hazards():
    spec, backend = oracle_backend("corridor")
    plan = plan_bfs(backend, start_state(spec, 2), moves(spec))
    # simulate: no intermediate state may be GAME_OVER
    state = start_state(spec, 2)
    for action in plan.actions:
        prediction = backend.predict(state, action)
        assert prediction.status != GameStatus.GAME_OVER
        state = prediction.state
    assert prediction.status == GameStatus.LEVEL_COMPLETED


@pytest.mark.parametrize("game_id", ["corridor", "keydoor", "pushblock"])
def test_astar_matches_bfs_lengths(game_id):
    spec, backend = oracle_backend(game_id)
    for level in range(spec.level_count):
        bfs = plan_bfs(backend, start_state(spec, level), moves(spec))
        astar = plan_astar(backend, start_state(spec, level), moves(spec))
        assert isinstance(astar, Plan)
        assert len(astar) == len(bfs)
