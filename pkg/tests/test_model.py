import pytest
from hypothesis import given, strategies as st

from worldloop.errors import ModelFormatError
from worldloop.frames import Frame, GameStatus, canonical_ascii, simple, RESET
from worldloop.model import (
    ModelState,
    Next,
    Pattern,
    RewriteRule,
    RuleModel,
    Unknown,
    description_length,
    load_rules,
    predict,
    reconstruct,
    render,
    save_rules,
)


def rule(pattern, write, priority, k=4):
    return RewriteRule(frozenset({simple(k)}), pattern, write, priority)


def pat3(center, cells=None):
    body = [None] * 9
    body[4] = center
    for offset, value in (cells or {}).items():
        body[4 + offset] = value
    return Pattern(3, (1, 1), tuple(body))


def state(cells, w=3, h=1):
    return ModelState(w, h, tuple(cells), 0)


def test_pattern_invariants():
    with pytest.raises(ValueError):
        Pattern(2, (0, 0), (None,) * 4)
    with pytest.raises(ValueError):
        Pattern(3, (3, 0), (None,) * 9)
    with pytest.raises(ValueError):
        rule(Pattern(3, (1, 1), (None,) * 9), 0, 0)  # all wildcards


def test_reconstruct_round_trip_and_annotation():
    frame = Frame(3, 1, (2, 0, 3), 0)
    st_ = reconstruct(frame)
    assert render(st_) == canonical_ascii(frame)
    assert st_.annotations["agent"] == (0, 0)


def test_reconstruct_ambiguous_agents():
    frame = Frame(3, 1, (2, 2, 0), 0)
    st_ = reconstruct(frame)
    assert "agent" not in st_.annotations
    assert render(st_) == canonical_ascii(frame)


def test_empty_model_is_identity():
    model = RuleModel()
    out = predict(model, state((2, 0, 0)), simple(4))
    assert isinstance(out, Next)
    assert out.state.cells == (2, 0, 0)
    assert out.status == GameStatus.RUNNING


def test_strict_model_returns_unknown():
    model = RuleModel(default_dynamics=False)
    out = predict(model, state((2, 0, 0)), simple(4))
    assert out == Unknown("no rule for cell (0,0)")


def test_reset_is_not_modeled():
    with pytest.raises(ValueError):
        predict(RuleModel(), state((0,) , 1, 1), RESET)


def test_two_cell_move():
    leave = rule(pat3(2, {1: 0}), 0, 0)
    arrive = rule(pat3(0, {-1: 2}), 2, 1)
    model = RuleModel((leave, arrive), True)
    out = predict(model, state((2, 0, 0)), simple(4))
    assert out.state.cells == (0, 2, 0)
    # purity: same call gives an identical result
    assert predict(model, state((2, 0, 0)), simple(4)) == out


def test_priority_resolves_overlap():
    specific = rule(pat3(0, {-1: 2}), 2, 0)
    general = rule(pat3(0), 5, 1)
    model = RuleModel((specific, general), True)
    out = predict(model, state((2, 0, 0)), simple(4))
    # cell 1 matches both; the lower priority number wins
    assert out.state.cells[1] == 2
    assert out.state.cells[2] == 5


def test_duplicate_priorities_rejected():
    a = rule(pat3(2), 0, 3)
    b = rule(pat3(0), 1, 3)
    with pytest.raises(ValueError):
        RuleModel((a, b), True)


def test_status_predicates():
    model = RuleModel(goal=Pattern(1, (0, 0), (9,)), hazard=Pattern(1, (0, 0), (10,)))
    assert predict(model, state((9, 0, 0)), simple(1)).status == GameStatus.LEVEL_COMPLETED
    assert predict(model, state((10, 0, 0)), simple(1)).status == GameStatus.GAME_OVER
    assert predict(model, state((0, 0, 0)), simple(1)).status == GameStatus.RUNNING


def test_pattern_does_not_match_across_border():
    needs_left = rule(pat3(0, {-1: 2}), 7, 0)
    model = RuleModel((needs_left,), True)
    out = predict(model, state((0, 2, 0)), simple(4))
    # matches at cell 2 (agent to its left), but not at cell 0 (off-grid left)
    assert out.state.cells == (0, 2, 7)


def test_description_length_formula():
    assert description_length(RuleModel()) == 0
    three_literals = rule(pat3(2, {1: 0, -1: 1}), 0, 0)
    assert description_length(RuleModel((three_literals,), True)) == 4
    a = rule(pat3(2, {1: 0, -1: 1}), 0, 0)
    b = rule(pat3(2, {1: 0, -1: 4}), 0, 1)
    merged = rule(pat3(2, {1: 0}), 0, 0)
    assert description_length(RuleModel((a, b), True)) == 8
    assert description_length(RuleModel((merged,), True)) == 3


def test_description_length_monotone_in_rules():
    a = rule(pat3(2), 0, 0)
    b = rule(pat3(3), 0, 1)
    assert description_length(RuleModel((a, b), True)) > description_length(
        RuleModel((a,), True)
    )


def test_rules_file_round_trip(tmp_path):
    model = RuleModel(
        (rule(pat3(2, {1: 0}), 0, 0), rule(pat3(0, {-1: 2}), 2, 1)),
        True,
        goal=Pattern(1, (0, 0), (9,)),
        hazard=None,
    )
    path = tmp_path / "m.rules"
    save_rules(model, path)
    assert load_rules(path) == model


def test_rules_file_errors(tmp_path):
    path = tmp_path / "bad.rules"
    path.write_text("")
    with pytest.raises(ModelFormatError):
        load_rules(path)
    path.write_text('{"format":"nope"}\n')
    with pytest.raises(ModelFormatError):
        load_rules(path)
    path.write_text('{"format":"rules","default_dynamics":true,"goal":null,'
                    '"hazard":null}\n{bad\n')
    with pytest.raises(ModelFormatError):
        load_rules(path)


frames = st.integers(1, 5).flatmap(
    lambda w: st.integers(1, 5).flatmap(
        lambda h: st.lists(st.integers(0, 15), min_size=w * h, max_size=w * h).map(
            lambda cells: Frame(w, h, tuple(cells), 0)
        )
    )
)


@given(frames)
def test_render_reconstruct_round_trip(frame):
    assert render(reconstruct(frame)) == canonical_ascii(frame)
