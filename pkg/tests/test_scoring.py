import pytest
from hypothesis import given, strategies as st

from worldloop.errors import EmptyInput, InvalidCounts
from worldloop.scoring import (
    AggregateReport,
    RunReport,
    aggregate,
    default_fixture_path,
    game_rhae,
    level_rhae,
    load_fixture,
    render_report,
)


def test_level_rhae_examples():
    assert level_rhae(10, 10, True) == 1.0
    assert level_rhae(10, 20, True) == 0.5
    assert level_rhae(10, 999, False) == 0.0
    assert level_rhae(10, 5, True) == 1.0  # beating the baseline caps at 1


def test_level_rhae_invalid_counts():
    with pytest.raises(InvalidCounts):
        level_rhae(0, 5, True)
    with pytest.raises(InvalidCounts):
        level_rhae(5, 0, True)


def test_game_rhae_examples():
    assert game_rhae([(5, 5, True)] * 4, 4) == 100.0
    assert game_rhae([(5, 9, False)] * 4, 4) == 0.0
    assert game_rhae([(5, 5, True), (7, 7, True)], 4) == 50.0
    with pytest.raises(InvalidCounts):
        game_rhae([(5, 5, True)] * 3, 2)


def run(game, idx, rhae, solved=0, count=6, status="normal termination"):
    return RunReport(game, idx, count, solved, rhae, status)


def test_fixture_aggregation_matches_published_numbers():
    reports = load_fixture(default_fixture_path())
    assert len(reports) == 29
    agg = aggregate(reports)
    assert agg.mean_rhae == pytest.approx(32.58, abs=0.01)
    assert agg.median_rhae == pytest.approx(14.65, abs=0.01)
    assert agg.fully_solved == 7
    assert agg.above_75 == 6
    assert agg.below_5 == 9
    assert agg.levels_solved == 106
    assert agg.levels_attempted == 209
    assert len(agg.per_game_mean) == 25


def test_repeated_runs_average_first():
    agg = aggregate([run("cn04", 1, 62.15), run("cn04", 2, 0.01)])
    assert agg.per_game_mean["cn04"] == pytest.approx(31.08)


def test_single_run_game_mean_is_its_rhae():
    agg = aggregate([run("solo", 1, 41.5)])
    assert agg.per_game_mean["solo"] == 41.5
    assert agg.mean_rhae == 41.5 == agg.median_rhae


def test_median_even_and_odd():
    odd = aggregate([run(g, 1, v) for g, v in (("a", 1), ("b", 5), ("c", 9))])
    assert odd.median_rhae == 5
    even = aggregate([run(g, 1, v) for g, v in (("a", 1), ("b", 4), ("c", 6), ("d", 9))])
    assert even.median_rhae == 5.0


def test_fully_solved_counts_games_not_runs():
    agg = aggregate(
        [
            run("g1", 1, 50.0, solved=6, count=6),
            run("g1", 2, 10.0, solved=2, count=6),
            run("g2", 1, 10.0, solved=2, count=6),
        ]
    )
    assert agg.fully_solved == 1


def test_empty_input():
    with pytest.raises(EmptyInput):
        aggregate([])


@given(st.permutations(list(range(8))))
def test_aggregate_permutation_invariant(order):
    base = [
        run("a", 1, 10.0), run("a", 2, 30.0), run("b", 1, 70.0), run("c", 1, 5.0),
        run("d", 1, 90.0), run("d", 2, 80.0), run("e", 1, 0.0), run("f", 1, 45.0),
    ]
    shuffled = [base[i] for i in order]
    a, b = aggregate(base), aggregate(shuffled)
    assert a.mean_rhae == pytest.approx(b.mean_rhae)
    assert a.median_rhae == pytest.approx(b.median_rhae)
    assert a.per_game_mean == b.per_game_mean


@given(
    st.lists(
        st.tuples(st.sampled_from("abcdef"), st.floats(0.0, 100.0)),
        min_size=1,
        max_size=12,
    ),
    st.floats(0.1, 1.0),
)
def test_scaling_at_the_per_game_level(rows, c):
    base = [run(g, i, v) for i, (g, v) in enumerate(rows)]
    scaled = [run(g, i, v * c) for i, (g, v) in enumerate(rows)]
    a, b = aggregate(base), aggregate(scaled)
    assert b.mean_rhae == pytest.approx(a.mean_rhae * c, abs=1e-9)
    assert b.median_rhae == pytest.approx(a.median_rhae * c, abs=1e-9)
    order_a = sorted(a.per_game_mean, key=lambda g: a.per_game_mean[g])
    order_b = sorted(b.per_game_mean, key=lambda g: b.per_game_mean[g])
    assert order_a == order_b


def test_render_report_rows():
    reports = load_fixture(default_fixture_path())
    table = render_report(aggregate(reports), reports)
    lines = table.splitlines()
    assert lines[1].split() == ["ar25", "01", "8/8", "100.00%", "normal",
                                "termination"]
    ka59_02 = next(l for l in lines if l.startswith("ka59") and " 02 " in l)
    assert "1/7" in ka59_02 and "0.01%" in ka59_02


def test_render_report_empty():
    assert render_report(None, []).splitlines() == [
        f"{'Game':<10} {'Run':<4} {'Levels':<8} {'RHAE':>8}  Status"
    ]


def test_rhae_bounds_enforced():
    with pytest.raises(ValueError):
        RunReport("g", 1, 6, 0, 101.0, "normal")
