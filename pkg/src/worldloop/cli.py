"""Command-line interface.

Subcommands:

    serve           run the game server (TCP or stdio)
    play            run one playthrough with a scripted modeler
    verify          re-check a saved model against a run's trace
    replay          re-execute a recorded run against a fresh environment
    score           aggregate run reports or a fixture into the score table
    human-baseline  play a game by hand to measure baseline action counts

``play`` exits 0 when the game was completed, 2 on budget exhaustion and
3 on an environment error.  WORLDLOOP_SEED fixes all randomness.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import errors
from .controller import ControllerConfig, run_game, seed_from_env
from .env import new_session
from .external import RuleModelBackend
from .frames import RESET, GameStatus, canonical_ascii, point, simple
from .games import get_game, load_game_spec, registry
from .model import load_rules
from .modelers import make_modeler
from .scoring import (
    aggregate,
    default_fixture_path,
    load_fixture,
    load_run_report,
    render_report,
)
from .server import GameServer, serve_stdio
from .tracestore import RunDirectory, create_run, load_records
from .verify import solved_levels, verify_planner, verify_world_model
from .wire import canonical_line

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_BUDGET = 2
EXIT_ENV_ERROR = 3


def _games_with_spec(spec_path: str | None):
    games = dict(registry())
    if spec_path:
        spec = load_game_spec(spec_path)
        games[spec.game_id] = spec
    return games


def _cmd_serve(args) -> int:
    games = _games_with_spec(args.spec)
    if args.stdio:
        serve_stdio(games)
        return EXIT_OK
    server = GameServer((args.host, args.port), games)
    print(f"serving on {args.host}:{server.port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def _cmd_play(args) -> int:
    games = _games_with_spec(args.spec)
    seed = args.seed if args.seed is not None else seed_from_env()
    config = ControllerConfig(
        action_budget=args.budget,
        stall_window=args.stall_window,
        refactor_every_levels=args.refactor_every,
        planner=args.planner,
        model_backend=args.model_backend,
        seed=seed,
    )
    out = Path(args.out) if args.out else _fresh_run_dir(Path("runs"), args.game)
    run = create_run(out, args.game, config.to_obj() | {"modeler": args.modeler})
    modeler = make_modeler(args.modeler, get_game(args.game, games), seed)
    report = run_game(args.game, modeler, config, run, games=games)
    print(canonical_line(report.to_obj()), end="")
    print(f"run directory: {run.root}", file=sys.stderr)
    return {
        "normal": EXIT_OK,
        "budget_exhausted": EXIT_BUDGET,
        "environment_error": EXIT_ENV_ERROR,
    }[report.termination]


def _fresh_run_dir(base: Path, game_id: str) -> Path:
    n = 0
    while True:
        candidate = base / f"{game_id}-r{n:03d}"
        if not candidate.exists():
            return candidate
        n += 1


def _cmd_verify(args) -> int:
    run = RunDirectory(Path(args.run))
    records = load_records(run)
    model_path = Path(args.model) if args.model else run.model_path
    model = load_rules(model_path)
    backend = RuleModelBackend(model)
    report = verify_world_model(backend, records)
    print(canonical_line(report.to_obj()), end="")
    ok = report.passed
    game_id = run.manifest()["game_id"]
    spec = get_game(game_id, _games_with_spec(args.spec))
    solved = solved_levels(records)
    levels = [
        (lvl, spec.initial_frame(lvl), lvl in solved)
        for lvl in range(spec.level_count)
    ]
    actions = [a for a in spec.legal if not a.is_reset]
    planner_report = verify_planner(backend, levels, actions, model=model)
    print(canonical_line(planner_report.to_obj()), end="")
    ok = ok and planner_report.passed
    print(
        f"model check: {report.checked} transitions, "
        f"{len(report.failures)} failures; planner check: "
        f"{'pass' if planner_report.passed else 'FAIL'}"
    )
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_replay(args) -> int:
    run = RunDirectory(Path(args.run))
    records = load_records(run)
    game_id = run.manifest()["game_id"]
    session, frame = new_session(game_id, _games_with_spec(args.spec))
    for n, rec in enumerate(records):
        if canonical_ascii(frame) != canonical_ascii(rec.frame_before):
            print(f"divergence before record {n}: observation differs")
            return EXIT_FAIL
        out = session.step(rec.action)
        if (
            canonical_ascii(out.settled) != canonical_ascii(rec.frame_after)
            or out.status != rec.status_after
        ):
            print(f"divergence at record {n}: {out.status.value}")
            return EXIT_FAIL
        frame = out.frame
    print(f"replayed {len(records)} records, deterministic")
    return EXIT_OK


def _cmd_score(args) -> int:
    reports = []
    if args.fixture:
        path = Path(args.fixture)
        if not path.exists() and path.name == "table1.fixture":
            path = default_fixture_path()
        reports.extend(load_fixture(path))
    run_indices: dict[str, int] = {}
    for run_dir in args.runs or []:
        report = load_run_report(RunDirectory(Path(run_dir)).report_path)
        run_indices[report.game_id] = run_indices.get(report.game_id, 0) + 1
        report.run_index = run_indices[report.game_id]
        reports.append(report)
    if not reports:
        print("nothing to score: pass --fixture and/or --runs", file=sys.stderr)
        return EXIT_FAIL
    agg = aggregate(reports)
    table = render_report(agg, reports)
    print(table)
    print(canonical_line(agg.to_obj()), end="")
    if args.out:
        from .figures import save_score_figures

        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(table + "\n", encoding="utf-8")
        with open(out / "aggregate.jsonl", "w", encoding="utf-8") as fh:
            for game in sorted(agg.per_game_mean):
                fh.write(
                    canonical_line(
                        {"game": game, "mean_rhae": round(agg.per_game_mean[game], 4)}
                    )
                )
            fh.write(canonical_line(agg.to_obj()))
        for path in save_score_figures(agg, reports, out):
            print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


_KEYMAP = {
    "w": simple(1),
    "s": simple(2),
    "a": simple(3),
    "d": simple(4),
    "e": simple(5),
    "f": simple(6),
    "r": RESET,
}


def _cmd_human_baseline(args) -> int:
    games = _games_with_spec(args.spec)
    session, frame = new_session(args.game, games)
    spec = get_game(args.game, games)
    counts = [0] * spec.level_count
    print("keys: w/a/s/d move, e/f extra actions, r reset, x,y point, q quit")
    print(canonical_ascii(frame))
    for line in sys.stdin:
        key = line.strip().lower()
        if key == "q":
            break
        if key in _KEYMAP:
            action = _KEYMAP[key]
        elif "," in key:
            try:
                x, y = (int(v) for v in key.split(",", 1))
                action = point(x, y)
            except ValueError:
                print(f"unrecognized input: {key!r}")
                continue
        else:
            if key:
                print(f"unrecognized input: {key!r}")
            continue
        level = session.level_index
        try:
            out = session.step(action)
        except errors.IllegalAction as exc:
            print(f"illegal: {exc}")
            continue
        counts[level] += 1
        print(canonical_ascii(out.frame))
        print(f"level {session.level_index} status {out.status.value} "
              f"actions {counts[level]}")
        if out.status == GameStatus.GAME_COMPLETED:
            break
    print("per-level action counts:")
    for lvl, count in enumerate(counts):
        print(f"  level {lvl}: {count}")
    print(canonical_line({"game": args.game, "counts": counts}), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="worldloop", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the game server")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=4741)
    p.add_argument("--stdio", action="store_true", help="serve one session over stdio")
    p.add_argument("--spec", help="additional game spec file")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("play", help="run one playthrough")
    p.add_argument("--game", required=True)
    p.add_argument("--modeler", choices=("oracle", "rules", "random"), default="rules")
    p.add_argument("--budget", type=int, default=4000)
    p.add_argument("--out", help="fresh run directory (default: runs/<game>-rNNN)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--planner", choices=("bfs", "astar"), default="bfs")
    p.add_argument("--model-backend", choices=("inprocess", "external"),
                   default="inprocess")
    p.add_argument("--stall-window", type=int, default=50)
    p.add_argument("--refactor-every", type=int, default=1)
    p.add_argument("--spec", help="additional game spec file")
    p.set_defaults(func=_cmd_play)

    p = sub.add_parser("verify", help="verify a saved model against a run")
    p.add_argument("--run", required=True)
    p.add_argument("--model", help="rules file (default: <run>/model.rules)")
    p.add_argument("--spec", help="additional game spec file")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("replay", help="re-execute a recorded run")
    p.add_argument("--run", required=True)
    p.add_argument("--spec", help="additional game spec file")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("score", help="aggregate run reports")
    p.add_argument("--runs", nargs="*", help="run directories")
    p.add_argument("--fixture", help="fixture file of recorded scores")
    p.add_argument("--out", help="write table, aggregate lines, and figures here")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("human-baseline", help="measure baselines by hand")
    p.add_argument("--game", required=True)
    p.add_argument("--spec", help="additional game spec file")
    p.set_defaults(func=_cmd_human_baseline)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except errors.WorldLoopError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
