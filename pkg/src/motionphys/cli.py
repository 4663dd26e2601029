"""Command-line front end.

    motionphys [--config F] [--jobs N] [--format table|structured|latex] [--seed S] <command> ...

Exit codes: 0 success, 1 computation error, 2 usage error.
"""
from __future__ import annotations

import argparse
import inspect
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import gradcheck, pipeline, synth
from .config import AnalysisConfig, load_config
from .core import GroundPlane, MetricsReport, SchemaError
from .io import load_motion, save_motion
from .losses import LOSS_NAMES
from .metrics import aggregate, analyze_metrics, render_table

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _assignments(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise UsageError(f"expected KEY=VALUE, got {item!r}")
        out[key.replace("-", "_")] = _parse_value(value)
    return out


def _config(args) -> AnalysisConfig:
    try:
        cfg = load_config(args.config)
        return cfg.updated(**_assignments(args.set))
    except (OSError, ValueError, TypeError) as exc:
        raise UsageError(f"bad configuration: {exc}") from exc


def _map(fn, items, jobs: int):
    """Apply ``fn`` to ``items``; results come back in input order."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# -- analyze -------------------------------------------------------------------

def _analyze_one(task) -> dict:
    path, cfg, per_frame = task
    seq = load_motion(path)
    rep = analyze_metrics(seq, config=AnalysisConfig(**cfg), name=Path(path).stem, per_frame=per_frame)
    return rep.to_dict(per_frame=per_frame)


def analyze_files(paths, config: AnalysisConfig, jobs: int = 1, per_frame: bool = False) -> dict:
    cfg = config.to_dict()
    per = _map(_analyze_one, [(str(p), cfg, per_frame) for p in paths], jobs)
    corpus = aggregate([MetricsReport.from_dict(d) for d in per])
    return {"corpus": corpus.to_dict(), "sequences": per}


def _emit_reports(reports, fmt: str) -> str:
    if fmt == "structured":
        return json.dumps([r.to_dict() for r in reports], indent=2)
    return render_table(reports, "latex" if fmt == "latex" else "table")


def cmd_analyze(args) -> int:
    if not args.inputs:
        raise UsageError("analyze needs at least one input file")
    result = analyze_files(args.inputs, _config(args), args.jobs, args.per_frame)
    if args.out:
        Path(args.out).write_text(json.dumps(result, indent=2))
    if args.format == "structured":
        print(json.dumps(result, indent=2))
    else:
        reports = [MetricsReport.from_dict(d) for d in result["sequences"]]
        reports.append(MetricsReport.from_dict(result["corpus"]))
        print(_emit_reports(reports, args.format))
    return EXIT_OK


# -- report --------------------------------------------------------------------

def load_reports(path) -> list[MetricsReport]:
    """Reports from a single-report file, a list, or an ``analyze`` output (its corpus row)."""
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict) and "corpus" in data:
        data = dict(data["corpus"], name=data["corpus"].get("name") or Path(path).stem)
    items = data if isinstance(data, list) else [data]
    if not all(isinstance(d, dict) for d in items):
        raise SchemaError(f"{path}: expected report objects")
    return [MetricsReport.from_dict(d) for d in items]


def cmd_report(args) -> int:
    reports = [r for p in args.reports for r in load_reports(p)]
    print(_emit_reports(reports, args.format))
    return EXIT_OK


# -- grad-check ----------------------------------------------------------------

def cmd_gradcheck(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    names = LOSS_NAMES if args.loss == "all" else (args.loss,)
    cfg = _config(args)
    results = [gradcheck.check_loss(n, args.trials, args.seed, cfg, perturb=args.perturb) for n in names]
    if args.format == "structured":
        print(json.dumps([{"loss": r.loss, "trials": r.trials, "max_relative_error": r.max_relative_error,
                           "passed": r.passed} for r in results], indent=2))
    else:
        for r in results:
            print(f"{r.loss:<15} trials={r.trials:<4} max_rel_err={r.max_relative_error:.3e} "
                  f"{'PASS' if r.passed else 'FAIL'}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


# -- pipeline ------------------------------------------------------------------

def _pipeline_one(task) -> dict:
    path, outdir, opts = task
    seq = load_motion(path)
    plane = GroundPlane()
    if opts["fps"]:
        seq = pipeline.resample(seq, opts["fps"])
    if opts["filter"] and not pipeline.support_filter(seq, plane):
        return {"input": path, "accepted": False, "outputs": []}
    if opts["canonicalize"]:
        seq = pipeline.canonicalize(seq, plane)
    if opts["ground"]:
        seq = pipeline.ground(seq, plane)
    src = Path(path)
    outputs = [str(Path(outdir) / src.name)]
    save_motion(seq, outputs[0])
    if opts["mirror"]:
        outputs.append(str(Path(outdir) / f"{src.stem}_mirror{src.suffix}"))
        save_motion(pipeline.mirror(seq), outputs[1])
    return {"input": path, "accepted": True, "outputs": outputs}


def cmd_pipeline(args) -> int:
    if not args.inputs:
        raise UsageError("pipeline needs at least one input file")
    Path(args.out).mkdir(parents=True, exist_ok=True)
    opts = {"fps": args.fps, "filter": args.filter, "canonicalize": args.canonicalize, "ground": args.ground,
            "mirror": args.mirror}
    results = _map(_pipeline_one, [(str(p), args.out, opts) for p in args.inputs], args.jobs)
    if args.format == "structured":
        print(json.dumps(results, indent=2))
    else:
        for r in results:
            print(f"{r['input']}: " + (", ".join(r["outputs"]) if r["accepted"] else "rejected by support filter"))
    return EXIT_OK


# -- synth ---------------------------------------------------------------------

def cmd_synth(args) -> int:
    fn = synth.GENERATORS[args.generator]
    params = _assignments(args.param)
    if "seed" in inspect.signature(fn).parameters and "seed" not in params:
        params["seed"] = args.seed
    try:
        seq = fn(**params)
    except TypeError as exc:
        raise UsageError(f"bad parameters for {args.generator}: {exc}") from exc
    save_motion(seq, args.out)
    print(args.out)
    return EXIT_OK


# -- entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="motionphys", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON or YAML analysis configuration")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one configuration value")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for per-file work")
    p.add_argument("--format", choices=("table", "structured", "latex"), default="table")
    p.add_argument("--seed", type=int, default=0)
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="compute the five metrics per sequence and for the corpus")
    a.add_argument("inputs", nargs="*")
    a.add_argument("-o", "--out", help="write the structured result here")
    a.add_argument("--per-frame", action="store_true", help="include per-frame diagnostics")
    a.set_defaults(func=cmd_analyze)

    r = sub.add_parser("report", help="render report files as a table")
    r.add_argument("reports", nargs="*")
    r.set_defaults(func=cmd_report)

    g = sub.add_parser("grad-check", help="compare loss gradients with central finite differences")
    g.add_argument("--loss", choices=("all",) + LOSS_NAMES, default="all")
    g.add_argument("--trials", type=int, default=20)
    g.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)
    g.set_defaults(func=cmd_gradcheck)

    q = sub.add_parser("pipeline", help="resample, filter, canonicalize, ground and mirror sequences")
    q.add_argument("inputs", nargs="*")
    q.add_argument("-o", "--out", required=True, help="output directory")
    q.add_argument("--fps", type=float, default=None)
    q.add_argument("--filter", action="store_true")
    q.add_argument("--canonicalize", action="store_true")
    q.add_argument("--ground", action="store_true")
    q.add_argument("--mirror", action="store_true", help="also write a mirrored copy")
    q.set_defaults(func=cmd_pipeline)

    s = sub.add_parser("synth", help="write a procedural oracle sequence")
    s.add_argument("generator", choices=sorted(synth.GENERATORS))
    s.add_argument("param", nargs="*", metavar="KEY=VALUE")
    s.add_argument("-o", "--out", required=True)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.jobs < 1:
        print("motionphys: error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"motionphys: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # computation or data error: report and fail
        print(f"motionphys: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
