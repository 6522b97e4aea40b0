"""Command-line interface.

Subcommands: ``generate`` (raw datasets), ``homogenize`` (datasets evened
out over one salient variable, with a before/after report), ``stats``
(per-variable histograms and KL-to-uniform of an existing dataset) and
``karel-run`` (execute one program on one grid).

Datasets are JSON Lines with LF newlines and a fixed key order, so a given
command line and seed reproduce files byte for byte. Every written dataset
gets a sibling ``<out>.manifest.json`` recording the command, the resolved
seed and parameters, and SHA-256 digests of all outputs. When ``--seed`` is
absent the ``HOMOGEN_SEED`` environment variable is used, then 0.

Exit codes: 0 success, 1 crash reported by ``karel-run``, 2 usage errors,
3 sampling stalls (draw budget or grid retries exhausted).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import random
import sys
from pathlib import Path
from typing import Any

from . import __version__, calc
from .diagnostics import Histogram, ReportRow, kl_to_uniform, write_report_csv, write_report_json
from .homogenizer import (
    BudgetExhaustedError,
    HomogenizerConfig,
    HomogenizerRun,
    SalientSpec,
    expected_tries_bound,
)
from .karel import gen as karel_gen
from .karel.interp import branch_arms, execute
from .karel.lang import KarelSyntaxError, parse_program
from .karel.world import grid_from_json, grid_to_json

EXIT_OK = 0
EXIT_CRASH = 1
EXIT_USAGE = 2
EXIT_STALL = 3

# The raw-baseline comparison stream runs on seed + this offset.
BASELINE_SEED_OFFSET = 1


class UsageError(ValueError):
    pass


def resolve_seed(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get("HOMOGEN_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"HOMOGEN_SEED must be an integer, got {env!r}") from None
    return 0


def _json_line(obj: Any) -> str:
    return json.dumps(obj, separators=(",", ":")) + "\n"


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(
    out_path: Path,
    argv: list[str],
    seed: int,
    params: dict[str, Any],
    outputs: list[Path],
    substreams: dict[str, int] | None = None,
) -> Path:
    manifest = {
        "tool": "homogen",
        "version": __version__,
        "command": argv,
        "seed": seed,
        "substreams": substreams or {"main": seed},
        "params": params,
        "outputs": {path.name: _sha256(path) for path in outputs},
    }
    manifest_path = out_path.with_name(out_path.name + ".manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return manifest_path


# ---------------------------------------------------------------------------
# sources and salient specs per domain


def _calc_sampler(args: argparse.Namespace) -> calc.CalcSampler:
    if args.dist == "dcfg":
        return calc.Dcfg(p=args.p) if args.p is not None else calc.Dcfg()
    if args.dist == "t2t":
        return calc.T2t(max_depth=args.max_depth)
    if args.dist == "rcfg":
        return calc.Rcfg(p=args.p) if args.p is not None else calc.Rcfg()
    if args.dist == "bal":
        return calc.Bal()
    raise UsageError(f"unknown calc distribution {args.dist!r}")


def _calc_params(args: argparse.Namespace) -> dict[str, Any]:
    sampler = _calc_sampler(args)
    return {"domain": "calc", "dist": args.dist, "sampler": repr(sampler)}


def _karel_grid_sampler(args: argparse.Namespace) -> karel_gen.GridSampler:
    if args.grids == "uniform":
        return karel_gen.sample_uniform_grid
    if args.grids == "narrow":
        if args.r_wall is None or args.r_marker is None:
            raise UsageError("narrow grids need --r-wall and --r-marker")
        try:
            dist = karel_gen.MarkerCountDist(args.marker_dist)
            params = karel_gen.NarrowGridParams(
                r_wall=args.r_wall, r_marker=args.r_marker, marker_dist=dist
            )
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        return lambda rng: karel_gen.sample_narrow_grid(rng, params)
    raise UsageError(f"unknown grid distribution {args.grids!r}")


def _karel_pairs(args: argparse.Namespace) -> int | str:
    if args.pairs == "uniform":
        return "uniform"
    try:
        pairs = int(args.pairs)
    except ValueError:
        raise UsageError("--pairs must be an integer in 1..5 or 'uniform'") from None
    if not 1 <= pairs <= 5:
        raise UsageError("--pairs must be in 1..5")
    return pairs


def _karel_params(args: argparse.Namespace) -> dict[str, Any]:
    params: dict[str, Any] = {"domain": "karel", "grids": args.grids, "pairs": args.pairs}
    if args.grids == "narrow":
        params |= {
            "r_wall": args.r_wall,
            "r_marker": args.r_marker,
            "marker_dist": args.marker_dist,
        }
    if getattr(args, "classic_prune", False):
        params["classic_prune"] = True
    return params


def _karel_task_source(args: argparse.Namespace):
    return karel_gen.task_source(
        _karel_grid_sampler(args),
        n_pairs=_karel_pairs(args),
        step_limit=args.step_limit,
        program_filter=(
            karel_gen.satisfies_action_pruning if getattr(args, "classic_prune", False) else None
        ),
    )


def _record_source_and_spec(args: argparse.Namespace, variable: str | None):
    """Per-domain record sampler plus, when asked, the salient spec over records."""
    if args.domain == "calc":
        sampler = _calc_sampler(args)
        source = lambda rng: calc.sample_record(rng, sampler)  # noqa: E731
        params = _calc_params(args)
        if variable is None:
            return source, None, params
        specs = calc.salient_specs()
        if variable not in specs:
            raise UsageError(
                f"unknown calc variable {variable!r}; choose from {', '.join(sorted(specs))}"
            )
        base = specs[variable]
        spec = SalientSpec(base.name, base.domain, lambda rec: base.extract(rec["expr"]))
        return source, spec, params

    task_src = _karel_task_source(args)
    source = lambda rng: karel_gen.task_to_json(task_src(rng))  # noqa: E731
    params = _karel_params(args)
    if variable is None:
        return source, None, params
    specs = karel_gen.salient_specs()
    if variable not in specs:
        raise UsageError(
            f"unknown karel variable {variable!r}; choose from {', '.join(sorted(specs))}"
        )
    base = specs[variable]
    spec = SalientSpec(
        base.name, base.domain, lambda rec: base.extract(karel_gen.task_from_json(rec))
    )
    return source, spec, params


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate(args: argparse.Namespace, argv: list[str]) -> int:
    seed = resolve_seed(args.seed)
    source, _, params = _record_source_and_spec(args, None)
    params |= {"count": args.count}
    rng = random.Random(seed)
    out_path = Path(args.out)
    with out_path.open("w", encoding="utf-8", newline="\n") as fp:
        for _ in range(args.count):
            fp.write(_json_line(source(rng)))
    _write_manifest(out_path, argv, seed, params, [out_path])
    print(f"wrote {args.count} records to {out_path}")
    return EXIT_OK


def cmd_homogenize(args: argparse.Namespace, argv: list[str]) -> int:
    seed = resolve_seed(args.seed)
    source, spec, params = _record_source_and_spec(args, args.var)
    params |= {"variable": args.var, "epsilon": args.eps, "count": args.count}
    if args.max_draws is not None:
        params["max_draws"] = args.max_draws
    try:
        config = HomogenizerConfig(
            epsilon=args.eps, target_size=args.count, seed=seed, max_draws=args.max_draws
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    out_path = Path(args.out)
    run = HomogenizerRun(source, spec, config)
    with out_path.open("w", encoding="utf-8", newline="\n") as fp:
        for record in run:
            fp.write(_json_line(record))

    baseline_seed = seed + BASELINE_SEED_OFFSET
    baseline_rng = random.Random(baseline_seed)
    baseline_values = [spec.extract(source(baseline_rng)) for _ in range(args.count)]
    before = Histogram.from_values(spec.domain, baseline_values)
    after = Histogram.from_values(spec.domain, _read_after_values(out_path, spec))
    kl_before = kl_to_uniform(before)
    kl_after = kl_to_uniform(after)
    reduction = 100.0 * (1.0 - kl_after / kl_before) if kl_before > 0 else 0.0
    row = ReportRow(
        variable=spec.name,
        epsilon=args.eps,
        kl_before=kl_before,
        kl_after=kl_after,
        reduction_pct=reduction,
        draws_per_accept=run.draws_used / args.count,
        bound=expected_tries_bound(args.eps) if args.eps > 0 else None,
    )
    report_json = out_path.with_name(out_path.name + ".report.json")
    report_csv = out_path.with_name(out_path.name + ".report.csv")
    with report_json.open("w", encoding="utf-8", newline="\n") as fp:
        write_report_json([row], fp)
    with report_csv.open("w", encoding="utf-8", newline="\n") as fp:
        write_report_csv([row], fp)
    _write_manifest(
        out_path,
        argv,
        seed,
        params,
        [out_path, report_json, report_csv],
        substreams={"main": seed, "baseline": baseline_seed},
    )
    print(
        f"wrote {args.count} records to {out_path} "
        f"(draws/accept {row.draws_per_accept:.2f}, KL {kl_before:.4f} -> {kl_after:.4f})"
    )
    return EXIT_OK


def _read_after_values(out_path: Path, spec: SalientSpec) -> list[Any]:
    values = []
    with out_path.open("r", encoding="utf-8") as fp:
        for line in fp:
            values.append(spec.extract(json.loads(line)))
    return values


def _dataset_variable_values(path: Path, variables: list[str] | None):
    """Infer the dataset's domain and extract salient values per variable."""
    records = []
    with path.open("r", encoding="utf-8") as fp:
        for lineno, line in enumerate(fp, start=1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise UsageError(f"{path}: line {lineno}: invalid JSON ({exc.msg})") from None
    if not records:
        raise UsageError(f"{path}: empty dataset")

    first = records[0]
    if "expr" in first:
        specs = calc.salient_specs()
        def value_of(spec, record, lineno):
            try:
                return spec.extract(record["expr"])
            except (KeyError, TypeError, calc.CalcParseError) as exc:
                raise UsageError(f"{path}: line {lineno}: bad record ({exc})") from None
    elif "program" in first:
        specs = karel_gen.salient_specs()
        def value_of(spec, record, lineno):
            try:
                return spec.extract(karel_gen.task_from_json(record))
            except (ValueError, KarelSyntaxError) as exc:
                raise UsageError(f"{path}: line {lineno}: bad record ({exc})") from None
    else:
        raise UsageError(f"{path}: records look neither like calc nor karel data")

    chosen = variables if variables else sorted(specs)
    unknown = [v for v in chosen if v not in specs]
    if unknown:
        raise UsageError(
            f"unknown variable(s) {', '.join(unknown)}; choose from {', '.join(sorted(specs))}"
        )
    out = {}
    for name in chosen:
        spec = specs[name]
        values = [value_of(spec, record, i + 1) for i, record in enumerate(records)]
        out[name] = (spec, values)
    return out


def cmd_stats(args: argparse.Namespace, argv: list[str]) -> int:
    variables = args.vars.split(",") if args.vars else None
    per_variable = _dataset_variable_values(Path(args.dataset), variables)
    report: dict[str, Any] = {"dataset": args.dataset, "variables": {}}
    csv_lines = ["variable,kl_to_uniform,value,count"]
    for name, (spec, values) in per_variable.items():
        histogram = Histogram.from_values(spec.domain, values)
        kl = kl_to_uniform(histogram)
        nonzero = {str(v): c for v, c in histogram.counts.items() if c}
        report["variables"][name] = {
            "count": histogram.total,
            "kl_to_uniform": kl,
            "histogram": nonzero,
        }
        for value, count in nonzero.items():
            csv_lines.append(f"{name},{kl},{value},{count}")
    if args.format == "json":
        text = json.dumps(report, indent=2) + "\n"
    else:
        text = "\n".join(csv_lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_karel_run(args: argparse.Namespace, argv: list[str]) -> int:
    program_path = Path(args.program)
    grid_path = Path(args.grid)
    try:
        program = parse_program(program_path.read_text(encoding="utf-8"))
    except (OSError, KarelSyntaxError) as exc:
        raise UsageError(f"{program_path}: {exc}") from None
    try:
        grid = grid_from_json(json.loads(grid_path.read_text(encoding="utf-8")))
    except (OSError, ValueError) as exc:
        raise UsageError(f"{grid_path}: {exc}") from None

    result = execute(program, grid, step_limit=args.step_limit)
    arms = branch_arms(program)
    coverage = f"coverage: {len(result.branches_taken)}/{len(arms)} arms"
    if result.success:
        print(json.dumps(grid_to_json(result.output), separators=(",", ":")))
        print(coverage)
        return EXIT_OK
    print(f"crash: {result.crash.value}")
    print(coverage)
    return EXIT_CRASH


# ---------------------------------------------------------------------------
# parser


def _add_domain_arguments(parser: argparse.ArgumentParser, *, homogenize: bool = False) -> None:
    sub = parser.add_subparsers(dest="domain", required=True)

    calc_p = sub.add_parser("calc", help="mod-10 calculator expressions")
    calc_p.add_argument(
        "--dist", choices=("dcfg", "t2t", "rcfg", "bal"), default="dcfg",
        help="expression sampler",
    )
    calc_p.add_argument("--p", type=float, default=None, help="recursion rate for dcfg/rcfg")
    calc_p.add_argument("--max-depth", type=int, default=8, help="t2t depth ceiling")

    karel_p = sub.add_parser("karel", help="Karel synthesis tasks")
    karel_p.add_argument(
        "--grids", choices=("uniform", "narrow"), default="uniform",
        help="input grid distribution",
    )
    karel_p.add_argument("--r-wall", type=float, default=None, help="narrow wall cell rate")
    karel_p.add_argument("--r-marker", type=float, default=None, help="narrow marker cell rate")
    karel_p.add_argument(
        "--marker-dist", choices=tuple(d.value for d in karel_gen.MarkerCountDist),
        default="geom", help="narrow pile-size distribution",
    )
    karel_p.add_argument(
        "--pairs", default="5",
        help="shown pairs per task: 1..5 or 'uniform' for a per-task draw",
    )
    karel_p.add_argument(
        "--step-limit", type=int, default=200, help="action budget per execution"
    )
    karel_p.add_argument(
        "--classic-prune", action="store_true",
        help="only keep programs with two or more actions including a move",
    )

    for p in (calc_p, karel_p):
        if homogenize:
            p.add_argument("--var", required=True, help="salient variable to even out")
            p.add_argument(
                "--eps", type=float, default=0.025,
                help="uniformity/throughput trade-off (default 0.025)",
            )
            p.add_argument(
                "--max-draws", type=int, default=None,
                help="source draw budget (default: 20x the expected need)",
            )
        p.add_argument("--count", type=int, required=True, help="records to write")
        p.add_argument("--seed", type=int, default=None, help="RNG seed (default HOMOGEN_SEED or 0)")
        p.add_argument("--out", required=True, help="output JSONL path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="homogen",
        description="Generate and homogenize synthetic program-synthesis datasets.",
    )
    parser.add_argument("--version", action="version", version=f"homogen {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    generate = sub.add_parser("generate", help="write a raw dataset")
    _add_domain_arguments(generate)
    generate.set_defaults(func=cmd_generate)

    homogenize_p = sub.add_parser(
        "homogenize", help="write a dataset evened out over one salient variable"
    )
    _add_domain_arguments(homogenize_p, homogenize=True)
    homogenize_p.set_defaults(func=cmd_homogenize)

    stats = sub.add_parser("stats", help="histograms and KL-to-uniform of a dataset")
    stats.add_argument("dataset", help="JSONL dataset path")
    stats.add_argument("--vars", default=None, help="comma-separated variables (default: all)")
    stats.add_argument("--format", choices=("json", "csv"), default="json")
    stats.add_argument("--out", default=None, help="write here instead of stdout")
    stats.set_defaults(func=cmd_stats)

    karel_run = sub.add_parser("karel-run", help="run one program on one grid")
    karel_run.add_argument("program", help="program text file")
    karel_run.add_argument("grid", help="grid JSON file")
    karel_run.add_argument("--step-limit", type=int, default=200)
    karel_run.set_defaults(func=cmd_karel_run)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help/--version and 2 for usage errors.
        return int(exc.code or 0)
    try:
        return args.func(args, argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExhaustedError as exc:
        print(
            f"error: draw budget exhausted after {exc.draws_used} draws "
            f"({exc.accepted} accepted)",
            file=sys.stderr,
        )
        return EXIT_STALL
    except karel_gen.GenerationStallError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STALL


if __name__ == "__main__":
    sys.exit(main())
