"""命令行入口：model / render / bench / optimize / verify

退出码：0 成功，1 校验或可行性失败，2 用法 / 配置错误。
stdout 只输出 CSV 与报告，诊断信息走 stderr。
"""

import argparse
import logging
from itertools import product
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from ssdiv import __version__
from ssdiv.config import get_settings
from ssdiv.core.ask_engine import AskEngine
from ssdiv.core.cost_model import cost_report, simulate_subdivision_work
from ssdiv.core.errors import ConfigError, ImageFormatError, LandscapeError
from ssdiv.core.fractal import exhaustive_render
from ssdiv.core.optimizer import grid_search_empirical, grid_search_model, is_feasible
from ssdiv.core.recursive_engine import recursive_render
from ssdiv.log import err_console, setup_logging
from ssdiv.models.schemas import (
    POW2_RANGE, DEFAULT_VIEWPORT, Approach, AskConfig, Engine, FixedParams, ModelParams, Objective,
    RunManifest, Scheme, SweepSpec, Viewport,
)
from ssdiv.services import csv_io
from ssdiv.services.bench import MISMATCH_GATE_PPM, run_bench
from ssdiv.services.pgm import mismatch_count, mismatch_ppm, read_pgm, write_pgm

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

MODEL_OBJECTIVE_CHOICES = [o.value for o in (Objective.MIN_WORK, Objective.MIN_TIME_SBR, Objective.MIN_TIME_MBR)]


def _viewport(text: str) -> Viewport:
    try:
        return Viewport.parse(text)
    except (ValueError, ValidationError) as e:
        raise argparse.ArgumentTypeError(str(e))


def _manifest(command: str, args: argparse.Namespace, results: Optional[dict] = None) -> RunManifest:
    arguments = {k: (v.as_tuple() if isinstance(v, Viewport) else v)
                 for k, v in vars(args).items() if k != "handler"}
    return RunManifest(
        command=command,
        arguments={k: (str(v) if isinstance(v, Path) else v) for k, v in arguments.items()},
        settings=get_settings().model_dump(),
        version=__version__,
        results=results or {},
    )


# ============== model ==============

def cmd_model(args: argparse.Namespace) -> int:
    rows = []
    header = list(csv_io.MODEL_HEADER)
    if args.oracle_trials:
        header += csv_io.MODEL_MC_COLUMNS

    for n, P, A, lam, q, c in product(args.n, args.P, args.A, args.lam, args.q, args.c):
        if args.optimize:
            sweep = SweepSpec(
                g_set=args.g or POW2_RANGE, r_set=args.r or POW2_RANGE, B_set=args.B or POW2_RANGE,
                objective=Objective(args.optimize),
                fixed=FixedParams(n=n, P=P, A=A, lam=lam, q=q, c=c),
            )
            try:
                best, _ = grid_search_model(sweep)
            except LandscapeError:
                logger.warning("⚠️ n=%d: no feasible {g, r, B}, point skipped", n)
                continue
            triples = [best.triple]
        else:
            triples = list(product(args.g, args.r, args.B))

        for g, r, B in triples:
            try:
                params = ModelParams(n=n, g=g, r=r, B=B, P=P, A=A, lam=lam, q=q, c=c)
            except ValidationError as e:
                logger.warning("⚠️ skipping n=%d g=%d r=%d B=%d: %s", n, g, r, B, e.errors()[0]["msg"])
                continue
            row = csv_io.model_row(params, cost_report(params))
            if args.oracle_trials:
                sim = simulate_subdivision_work(params, args.oracle_trials, args.seed)
                row += [sim.mean, sim.stderr]
            rows.append(row)

    if not rows:
        logger.error("❌ no valid sweep point")
        return EXIT_USAGE
    csv_io.write_rows(header, rows, args.out)
    return EXIT_OK


# ============== render ==============

def cmd_render(args: argparse.Namespace) -> int:
    approach = args.approach
    if approach == "EX":
        grid = exhaustive_render(args.n, args.viewport, args.dwell, args.workers)
        stats_rows = None
    else:
        config = AskConfig(g=args.g, r=args.r, B=args.B, scheme=Scheme(args.scheme),
                           tile=args.tile, workers=args.workers)
        if approach == "ASK":
            result = AskEngine(args.n, args.viewport, args.dwell, config).render()
            grid = result.grid
            stats_rows = [csv_io.stats_row(s) for s in result.stats]
        else:
            grid, tree = recursive_render(args.n, args.viewport, args.dwell, config)
            stats_rows = None
            logger.info("recursive tree: %d tasks, depth %d, %d tile tasks",
                        tree.spawned, tree.max_depth, tree.tile_tasks)

    out = write_pgm(args.out, grid)
    if args.stats:
        if stats_rows is None:
            logger.warning("⚠️ per-level stats exist only for ASK renders; --stats ignored")
        else:
            csv_io.write_rows(csv_io.STATS_HEADER, stats_rows, args.stats)
    csv_io.write_manifest(out.with_name(out.name + ".manifest.json"), _manifest("render", args))
    logger.info("🎨 wrote %s (%dx%d)", out, grid.n, grid.n)
    return EXIT_OK


# ============== bench ==============

def cmd_bench(args: argparse.Namespace) -> int:
    approaches = [Approach(a) for a in args.approaches]
    needs_config = any(a is not Approach.EX for a in approaches)

    if args.optimal:
        best = csv_io.best_from_landscape(csv_io.read_landscape(args.optimal))
        g, r, B = best.g, best.r, best.B
        logger.info("🔧 using optimal config from %s: g=%d r=%d B=%d", args.optimal, g, r, B)
    else:
        g, r, B = args.g, args.r, args.B

    for n in args.n:
        if needs_config and not is_feasible(n, g, r, B):
            raise ConfigError(f"config g={g}, r={r}, B={B} does not tile n={n} exactly")

    def config_for(n: int) -> Optional[AskConfig]:
        if not needs_config:
            return None
        return AskConfig(g=g, r=r, B=B, tile=args.tile, workers=args.workers)

    run = run_bench(approaches, args.n, args.viewport, args.dwell, config_for, args.workers, args.reps)
    records = run.records
    csv_io.write_rows(csv_io.BENCH_HEADER, [csv_io.bench_row(rec) for rec in records], args.out)
    if args.out and args.out != "-":
        results = {"ask_le_recursive": {str(n): verdicts for n, verdicts in run.ask_vs_recursive.items()}}
        csv_io.write_manifest(Path(str(args.out) + ".manifest.json"), _manifest("bench", args, results))

    rejected = [rec for rec in records if not rec.accepted]
    if rejected:
        logger.error("❌ %d row(s) exceed %d ppm", len(rejected), MISMATCH_GATE_PPM)
        return EXIT_FAIL
    return EXIT_OK


# ============== optimize ==============

def cmd_optimize(args: argparse.Namespace) -> int:
    engine = args.engine
    objective = Objective.MIN_WALL_TIME if engine != "MODEL" else Objective(args.objective)
    sweep = SweepSpec(
        g_set=args.g_set, r_set=args.r_set, B_set=args.B_set, objective=objective,
        fixed=FixedParams(n=args.n, P=args.P, A=args.A, lam=args.lam, q=args.q, c=args.c),
    )
    try:
        if engine == "MODEL":
            best, landscape = grid_search_model(sweep)
        else:
            best, landscape = grid_search_empirical(
                sweep, Engine(engine), Scheme(args.scheme), args.n, args.viewport, args.dwell,
                args.reps, workers=args.workers, tile=args.tile,
            )
    except LandscapeError as e:
        logger.error("❌ %s", e)
        return EXIT_FAIL

    csv_io.write_rows(csv_io.LANDSCAPE_HEADER, [csv_io.landscape_row(p) for p in landscape], args.out)
    summary = f"best g={best.g} r={best.r} B={best.B} value={csv_io.fmt(best.value)}"
    if best.mismatch_ppm is not None:
        summary += f" mismatch_ppm={csv_io.fmt(best.mismatch_ppm)}"
    # 没有 --out 时摘要跟在 landscape CSV 后面
    print(summary)
    if best.mismatch_ppm is not None and best.mismatch_ppm > MISMATCH_GATE_PPM:
        return EXIT_FAIL
    return EXIT_OK


# ============== verify ==============

def cmd_verify(args: argparse.Namespace) -> int:
    a = read_pgm(args.file_a)
    b = read_pgm(args.file_b)
    mismatched = mismatch_count(a, b)
    ppm = mismatch_ppm(a, b)
    print(f"total_pixels={a.size}")
    print(f"mismatched_pixels={mismatched}")
    print(f"mismatch_ppm={csv_io.fmt(ppm)}")
    return EXIT_OK if ppm <= MISMATCH_GATE_PPM else EXIT_FAIL


# ============== parser ==============

def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(prog="ssdiv", description="Subdivision cost model and ASK reference renderer")
    parser.add_argument("--log-level", default=settings.log_level)
    parser.add_argument("--version", action="version", version=f"ssdiv {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def render_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--viewport", type=_viewport, default=DEFAULT_VIEWPORT,
                       help="re_min,re_max,im_min,im_max (default: -1.5,-1,0.5,1)")
        p.add_argument("--dwell", type=int, default=settings.dwell)
        p.add_argument("--tile", type=int, default=settings.tile)
        p.add_argument("--workers", type=int, default=settings.workers)

    def model_flags(p: argparse.ArgumentParser, many: bool) -> None:
        nargs = "+" if many else None
        p.add_argument("--P", type=float, nargs=nargs, default=[0.5] if many else 0.5)
        p.add_argument("--A", type=float, nargs=nargs, default=[512.0] if many else 512.0)
        p.add_argument("--lambda", dest="lam", type=float, nargs=nargs, default=[10.0] if many else 10.0)
        p.add_argument("--q", type=int, nargs=nargs, default=[128] if many else 128)
        p.add_argument("--c", type=int, nargs=nargs, default=[64] if many else 64)

    p = sub.add_parser("model", help="evaluate the cost model over a sweep")
    p.add_argument("--n", type=int, nargs="+", required=True)
    p.add_argument("--g", type=int, nargs="+")
    p.add_argument("--r", type=int, nargs="+")
    p.add_argument("--B", type=int, nargs="+")
    model_flags(p, many=True)
    p.add_argument("--optimize", choices=MODEL_OBJECTIVE_CHOICES,
                   help="pick the optimal {g,r,B} per point (--g/--r/--B become candidate sets)")
    p.add_argument("--oracle-trials", type=int, default=0, help="append Monte-Carlo columns")
    p.add_argument("--seed", type=int, default=settings.seed)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_model)

    p = sub.add_parser("render", help="render one image")
    p.add_argument("--approach", choices=["EX", "ASK", "REC"], default="ASK")
    p.add_argument("--n", type=int, default=512)
    p.add_argument("--g", type=int, default=32)
    p.add_argument("--r", type=int, default=4)
    p.add_argument("--B", type=int, default=16)
    p.add_argument("--scheme", choices=[s.value for s in Scheme], default=Scheme.SBR.value)
    render_flags(p)
    p.add_argument("--out", required=True, help="output PGM")
    p.add_argument("--stats", help="per-level stats CSV (ASK only)")
    p.set_defaults(handler=cmd_render)

    p = sub.add_parser("bench", help="time approaches against the exhaustive oracle")
    p.add_argument("--approaches", nargs="+", choices=[a.value for a in Approach],
                   default=[Approach.EX.value, Approach.ASK_SBR.value])
    p.add_argument("--n", type=int, nargs="+", default=[1024])
    p.add_argument("--g", type=int, default=32)
    p.add_argument("--r", type=int, default=4)
    p.add_argument("--B", type=int, default=16)
    p.add_argument("--optimal", help="landscape CSV from `optimize`; overrides --g/--r/--B")
    render_flags(p)
    p.add_argument("--reps", type=int, default=settings.reps)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_bench)

    p = sub.add_parser("optimize", help="sweep {g,r,B}")
    p.add_argument("--engine", choices=["MODEL", Engine.ASK.value, Engine.RECURSIVE.value], default="MODEL")
    p.add_argument("--scheme", choices=[s.value for s in Scheme], default=Scheme.SBR.value)
    p.add_argument("--objective", choices=MODEL_OBJECTIVE_CHOICES, default=Objective.MIN_TIME_SBR.value)
    p.add_argument("--g-set", type=int, nargs="+", default=POW2_RANGE)
    p.add_argument("--r-set", type=int, nargs="+", default=POW2_RANGE)
    p.add_argument("--B-set", type=int, nargs="+", default=POW2_RANGE)
    p.add_argument("--n", type=int, default=65536)
    model_flags(p, many=False)
    render_flags(p)
    p.add_argument("--reps", type=int, default=settings.reps)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_optimize)

    p = sub.add_parser("verify", help="compare two PGM files")
    p.add_argument("file_a")
    p.add_argument("file_b")
    p.set_defaults(handler=cmd_verify)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    setup_logging(args.log_level)

    if args.command == "model" and not args.optimize and not (args.g and args.r and args.B):
        err_console.print("model: --g, --r and --B are required unless --optimize is given")
        return EXIT_USAGE
    try:
        return args.handler(args)
    except (ConfigError, ImageFormatError, LandscapeError, ValidationError) as e:
        logger.error("❌ %s", e)
        return EXIT_USAGE
    except OSError as e:
        # 输出路径不可写等
        logger.error("❌ %s: %s", e.filename or "I/O error", e.strerror or e)
        return EXIT_USAGE
