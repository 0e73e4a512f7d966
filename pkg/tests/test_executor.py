import pytest

from worldloop.executor import Outcome, SessionCursor, execute_plan
from worldloop.external import RuleModelBackend
from worldloop.frames import GameStatus, RESET, simple
from worldloop.games import registry
from worldloop.model import Pattern, RewriteRule, RuleModel
from worldloop.modelers import compile_oracle_model
from worldloop.planner import Plan, plan_bfs
from worldloop.server import InProcessClient
from worldloop.tracestore import TraceWriter, create_run, load_records
from worldloop.verify import verify_world_model


def setup_run(tmp_path, game_id="corridor"):
    run = create_run(tmp_path / "run", game_id)
    client = InProcessClient()
    cursor = SessionCursor(game_id, client.new_session(game_id))
    writer = TraceWriter(run)
    return run, client, cursor, writer


def oracle_backend(game_id="corridor"):
    return RuleModelBackend(compile_oracle_model(registry()[game_id]))


def test_oracle_plan_completes_without_artifacts(tmp_path):
    run, client, cursor, writer = setup_run(tmp_path)
    backend = oracle_backend()
    plan = plan_bfs(backend, backend.reconstruct(cursor.frame),
                    [simple(k) for k in range(1, 5)])
    report = execute_plan(plan, backend, client, cursor, writer, run)
    assert report.outcome == Outcome.COMPLETED
    assert report.steps_executed == len(plan)
    assert report.artifact is None
    assert list(run.artifacts_dir.iterdir()) == []
    assert len(writer.records) == len(plan)


def test_every_action_recorded_before_next(tmp_path):
    run, client, cursor, writer = setup_run(tmp_path)
    backend = oracle_backend()
    execute_plan(Plan((simple(1), simple(4))), backend, client, cursor, writer, run)
    records = load_records(run)
    assert [r.step_index for r in records] == [0, 1]
    assert records[0].frame_after == records[1].frame_before


def wrong_rule_model():
    # oracle with the move-right arrival corrupted: predicts goal marker
    # instead of the agent when stepping onto floor
    model = compile_oracle_model(registry()["corridor"])
    rules = []
    for rule in model.rules:
        if (
            simple(4) in rule.actions
            and rule.write == 2
            and rule.pattern.anchor_literal == 0
        ):
            rules.append(RewriteRule(rule.actions, rule.pattern, 3, rule.priority))
        else:
            rules.append(rule)
    return RuleModel(tuple(rules), True, model.goal, model.hazard)


def test_mismatch_stops_and_writes_artifact(tmp_path):
    run, client, cursor, writer = setup_run(tmp_path)
    backend = RuleModelBackend(wrong_rule_model())
    report = execute_plan(Plan((simple(4), simple(4))), backend, client, cursor,
                          writer, run)
    assert report.outcome == Outcome.MISMATCH
    assert report.steps_executed == 1  # stopped immediately
    artifact = report.artifact
    assert artifact.step_index == 0
    # the corrupted rule mispredicts exactly the agent's landing cell
    assert artifact.diff_cells == ((1, 2),)
    path = run.artifacts_dir / "mismatch_0"
    header, *body = path.read_text().splitlines()
    assert '"cells":[[1,2]]' in header
    split = body.index("---")
    assert "\n".join(body[:split]) == artifact.predicted_ascii
    assert "\n".join(body[split + 1:]) == artifact.observed_ascii


def test_mismatch_agrees_with_verifier(tmp_path):
    run, client, cursor, writer = setup_run(tmp_path)
    backend = RuleModelBackend(wrong_rule_model())
    report = execute_plan(Plan((simple(4), simple(4))), backend, client, cursor,
                          writer, run)
    assert report.outcome == Outcome.MISMATCH
    check = verify_world_model(backend, writer.records)
    assert not check.passed


def test_plan_into_hazard_stops_with_game_over(tmp_path):
    run, client, cursor, writer = setup_run(tmp_path)
    backend = oracle_backend()
    # solve levels 0 and 1, then step into level 2's hazard on purpose
    moves = [simple(k) for k in range(1, 5)]
    for _ in range(2):
        plan = plan_bfs(backend, backend.reconstruct(cursor.frame), moves)
        execute_plan(plan, backend, client, cursor, writer, run)
    assert cursor.level == 2
    report = execute_plan(Plan((simple(4), simple(4), simple(1))), backend, client,
                          cursor, writer, run)
    assert report.outcome == Outcome.GAME_OVER
    assert report.steps_executed == 2  # remaining plan abandoned
    assert writer.records[-1].status_after == GameStatus.GAME_OVER


def test_reset_only_first_and_skips_comparison(tmp_path):
    run, client, cursor, writer = setup_run(tmp_path)
    backend = oracle_backend()
    client.step(simple(4))  # drift the session so RESET changes something
    cursor.advance(client.step(simple(1)))
    report = execute_plan(Plan((RESET, simple(4))), backend, client, cursor,
                          writer, run)
    assert report.outcome == Outcome.PLAN_EXHAUSTED
    assert writer.records[0].action.is_reset
    assert writer.records[1].attempt_number == 2


def test_budget_truncation(tmp_path):
    run, client, cursor, writer = setup_run(tmp_path)
    backend = oracle_backend()
    report = execute_plan(Plan((simple(1), simple(1), simple(1))), backend, client,
                          cursor, writer, run, max_actions=2)
    assert report.outcome == Outcome.PLAN_EXHAUSTED
    assert report.steps_executed == 2
    assert len(writer.records) == 2


def test_unknown_prediction_is_mismatch(tmp_path):
    run, client, cursor, writer = setup_run(tmp_path)
    strict = RuleModelBackend(RuleModel(default_dynamics=False))
    report = execute_plan(Plan((simple(1),)), strict, client, cursor, writer, run)
    assert report.outcome == Outcome.MISMATCH
    assert report.artifact.predicted_ascii == ""
    w, h = cursor.frame.width, cursor.frame.height
    assert len(report.artifact.diff_cells) == w * h


@pytest.mark.parametrize("game_id,max_len", [("corridor", 3), ("keydoor", 2),
                                             ("pushblock", 2)])
def test_oracle_never_mismatches_short_plans(tmp_path, game_id, max_len):
    # exhaustive over all short plans from each game's initial state
    from itertools import product

    backend = oracle_backend(game_id)
    moves = [a for a in registry()[game_id].legal]
    n = 0
    for length in range(1, max_len + 1):
        for combo in product(moves, repeat=length):
            run, client, cursor, writer = setup_run(tmp_path / f"p{n}", game_id)
            n += 1
            report = execute_plan(Plan(combo), backend, client, cursor, writer, run)
            assert report.outcome != Outcome.MISMATCH
