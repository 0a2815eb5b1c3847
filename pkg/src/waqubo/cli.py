"""Command-line front end: ``waqubo {gen,solve,check,qubo,bench,report}``.

Every subcommand accepts ``--config FILE`` with a JSON object of defaults for
its flags (keys use the flag names with underscores); explicit flags win.
Relative output paths that are not given explicitly land in
``$WAQUBO_OUTPUT_DIR`` (default: the current directory).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Sequence

from .annealer import AnnealParams
from .bench import (
    SOLVER_ALIASES,
    SOLVERS,
    BenchConfig,
    DatasetSpec,
    generate_dataset,
    load_manifest,
    normalize_solvers,
    report,
    run_benchmark,
)
from .graph import (
    Graph,
    InstanceGenerationError,
    conflict_graph,
    erdos_renyi,
    ldf_coloring,
    parse_dimacs,
    read_path_instance,
    write_dimacs,
)
from .qubo import PenaltyCoefficients, build_original_qubo, build_proposed_qubo, write_qubo
from .solution import ColoringSolution, read_solution, write_solution
from .solver import _penalties_for, check_coloring, colors_to_matrix, solve_exact, solve_wa, solve_wa_binary_search

logger = logging.getLogger("waqubo")

OUTPUT_ENV = "WAQUBO_OUTPUT_DIR"
_ANNEAL_FIELDS = {
    "n_iterations": int,
    "n_attempts": int,
    "zeta": float,
    "zeta_rule": str,
    "zeta_scale": float,
    "sigma": float,
    "pump_start": float,
    "pump_end": float,
    "step": float,
    "quantization_cap": float,
    "workers": int,
}


class CliError(Exception):
    """User-facing failure; printed without a traceback."""


def _output_path(value: str | None, default_name: str) -> Path:
    if value is not None:
        return Path(value)
    return Path(os.environ.get(OUTPUT_ENV, ".")) / default_name


def _parse_penalties(text: str) -> str | PenaltyCoefficients:
    if text in ("heuristic", "certified"):
        return text
    try:
        c0, c1, c2 = (float(v) for v in text.split(","))
    except ValueError:
        raise CliError(f"--penalties must be heuristic, certified or c0,c1,c2 (got {text!r})") from None
    try:
        return PenaltyCoefficients(c0, c1, c2)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _parse_overrides(items: Sequence[str] | None) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in _ANNEAL_FIELDS:
            raise CliError(f"bad --anneal {item!r}; use KEY=VALUE with KEY in {', '.join(_ANNEAL_FIELDS)}")
        try:
            out[key] = _ANNEAL_FIELDS[key](value)
        except ValueError:
            raise CliError(f"bad value in --anneal {item!r}") from None
    if out:
        # reject invalid combinations up front rather than mid-run
        try:
            AnnealParams(n_iterations=1).with_updates(**out)
        except ValueError as exc:
            raise CliError(str(exc)) from None
    return out


def _read_graph(path: str) -> Graph:
    """DIMACS graph or JSON path instance (reduced to its conflict graph)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None
    try:
        if text.lstrip().startswith("{"):
            return conflict_graph(read_path_instance(path))
        return parse_dimacs(text)
    except (ValueError, KeyError, TypeError) as exc:
        raise CliError(f"cannot parse {path}: {exc}") from None


# -- subcommands -------------------------------------------------------------------


def cmd_gen(args: argparse.Namespace) -> int:
    if args.dataset is not None:
        if args.dataset == "default":
            spec = DatasetSpec(base_seed=args.seed)
        else:
            spec = _dataset_from_json(args.dataset, args.seed)
        if args.nodes:
            spec = DatasetSpec(args.nodes, spec.probabilities, spec.instances_per_cell, spec.base_seed)
        if args.per_cell is not None:
            spec = DatasetSpec(spec.node_counts, spec.probabilities, args.per_cell, spec.base_seed)
        out = _output_path(args.output, "dataset")
        manifest = generate_dataset(spec, out)
        print(f"wrote {len(manifest.cells)} instances to {out}")
        return 0
    if args.n is None or args.p is None:
        raise CliError("gen needs --n and --p, or --dataset")
    g = erdos_renyi(args.n, args.p, args.seed)
    out = _output_path(args.output, f"gnp_n{args.n}_p{args.p}_s{args.seed}.col")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_dimacs(g, out, comments=[f"G({args.n}, {args.p}) seed {g.seed}"])
    print(f"wrote {out}: {g.n_vertices} vertices, {g.n_edges} edges, seed {g.seed}")
    return 0


def _dataset_from_json(path: str, seed: int) -> DatasetSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot read dataset spec {path}: {exc}") from None
    base = DatasetSpec(base_seed=seed)
    return DatasetSpec(
        node_counts=doc.get("node_counts", base.node_counts),
        probabilities=doc.get("probabilities", base.probabilities),
        instances_per_cell=doc.get("instances_per_cell", base.instances_per_cell),
        base_seed=doc.get("base_seed", seed),
    )


def _solve(g: Graph, args: argparse.Namespace) -> ColoringSolution:
    solver = SOLVER_ALIASES.get(args.solver, args.solver)
    overrides = _parse_overrides(args.anneal)
    if args.workers is not None:
        overrides["workers"] = args.workers
    if solver == "ldf":
        return ldf_coloring(g)
    if solver == "exact":
        return solve_exact(g, time_limit=args.time_limit)
    if solver == "simcim-proposed":
        return solve_wa(
            g,
            penalties=_parse_penalties(args.penalties),
            p=args.p,
            seed=args.seed,
            overrides=overrides,
            time_limit=args.time_limit,
        )
    return solve_wa_binary_search(
        g, seed=args.seed, overrides=overrides, time_limit=args.time_limit
    )


def cmd_solve(args: argparse.Namespace) -> int:
    g = _read_graph(args.input)
    sol = _solve(g, args)
    if sol.n_colors and not check_coloring(g, colors_to_matrix(sol.colors, sol.n_colors)):
        raise CliError("internal error: solver returned an improper coloring")
    out = _output_path(args.output, Path(args.input).stem + ".solution.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_solution(sol, out)
    print(f"{sol.solver} {sol.n_colors} {str(sol.feasible).lower()} {sol.wall_time:.3f}")
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    g = _read_graph(args.graph)
    try:
        sol = read_solution(args.solution)
    except OSError as exc:
        raise CliError(f"cannot read {args.solution}: {exc.strerror}") from None
    except ValueError as exc:
        raise CliError(f"cannot parse solution {args.solution}: {exc}") from None
    problems = []
    if len(sol.colors) != g.n_vertices:
        problems.append(f"solution colors {len(sol.colors)} vertices, graph has {g.n_vertices}")
    else:
        missing = [v for v, c in enumerate(sol.colors) if c < 0]
        if missing:
            problems.append(f"uncolored vertices: {missing}")
        conflicts = [(u, v) for u, v in g.edges if sol.colors[u] >= 0 and sol.colors[u] == sol.colors[v]]
        for u, v in conflicts:
            problems.append(f"conflict edge ({u}, {v}) color {sol.colors[u]}")
        distinct = len({c for c in sol.colors if c >= 0})
        if distinct != sol.n_colors:
            problems.append(f"n_colors is {sol.n_colors} but {distinct} distinct colors are used")
    if problems:
        for line in problems:
            print(line)
        print("INVALID")
        return 1
    print(f"OK {sol.n_colors} colors")
    return 0


def cmd_qubo(args: argparse.Namespace) -> int:
    g = _read_graph(args.input)
    if args.W == "from-ldf":
        W = ldf_coloring(g).n_colors
    else:
        try:
            W = int(args.W)
        except ValueError:
            raise CliError(f"--W must be an integer or from-ldf (got {args.W!r})") from None
    if W < 1:
        raise CliError(f"--W must be >= 1 (got {W})")
    if args.encoding == "proposed":
        c = _penalties_for(g, W, _parse_penalties(args.penalties), args.p)
        q = build_proposed_qubo(g, W, c)
        summary = f"penalties c0={c.c0:g} c1={c.c1:g} c2={c.c2:g}"
    else:
        q = build_original_qubo(g, W, args.penalty)
        summary = f"penalty {args.penalty:g}"
    out = _output_path(args.output, Path(args.input).stem + f".{args.encoding}.qubo")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_qubo(q, out)
    print(f"K={q.dimension} W={W} {summary}")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    try:
        manifest = load_manifest(args.dataset)
    except (FileNotFoundError, ValueError) as exc:
        raise CliError(str(exc)) from None
    manifest = manifest.select(max_n=args.max_n, node_counts=args.nodes or None)
    if not manifest.cells:
        raise CliError("no instances left after --max-n/--nodes filtering")
    try:
        solvers = normalize_solvers(args.solvers.split(","))
    except ValueError as exc:
        raise CliError(str(exc)) from None
    overrides = _parse_overrides(args.anneal)
    if args.workers is not None:
        overrides["workers"] = args.workers
    cfg = BenchConfig(time_limit=args.time_limit, seed=args.seed, anneal_overrides=overrides)
    out = _output_path(args.output, "bench")
    records = run_benchmark(manifest, solvers, out / "records.csv", cfg, jobs=args.jobs)
    rep = report(records, out)
    print(rep.markdown())
    print(f"records: {out / 'records.csv'}  report: {out / 'report.md'}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    try:
        rep = report(args.records, _output_path(args.output, "report"))
    except FileNotFoundError as exc:
        raise CliError(f"cannot read {args.records}: {exc.strerror}") from None
    except (ValueError, KeyError) as exc:
        raise CliError(f"bad records file {args.records}: {exc}") from None
    print(rep.markdown())
    return 0


# -- parser ------------------------------------------------------------------------


def _add_anneal_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--time-limit", type=float, default=None, help="seconds per solve")
    p.add_argument("--workers", type=int, default=None, help="threads for annealing attempts")
    p.add_argument(
        "--anneal",
        action="append",
        metavar="KEY=VALUE",
        help="annealer override, repeatable (e.g. n_iterations=2000)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="waqubo", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random graph or a benchmark dataset")
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dataset", help="'default' for the full grid, or a JSON dataset spec")
    p.add_argument("--nodes", type=int, nargs="+", help="restrict dataset node counts")
    p.add_argument("--per-cell", type=int, help="instances per (n, p) cell")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="color a DIMACS graph or a JSON path instance")
    p.add_argument("input")
    p.add_argument("--solver", default="simcim", choices=sorted({*SOLVERS, *SOLVER_ALIASES}))
    p.add_argument("--penalties", default="heuristic", help="heuristic, certified or c0,c1,c2")
    p.add_argument("--p", type=float, default=None, help="edge probability for heuristic penalties")
    _add_anneal_flags(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("check", help="verify a solution against its graph")
    p.add_argument("graph")
    p.add_argument("solution")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("qubo", help="export the QUBO of a graph")
    p.add_argument("input")
    p.add_argument("--encoding", choices=("proposed", "original"), default="proposed")
    p.add_argument("--W", default="from-ldf", help="color bound, or from-ldf")
    p.add_argument("--penalties", default="heuristic", help="proposed encoding: heuristic, certified or c0,c1,c2")
    p.add_argument("--penalty", type=float, default=1.0, help="original encoding penalty")
    p.add_argument("--p", type=float, default=None)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_qubo)

    p = sub.add_parser("bench", help="run solvers over a dataset and write records + report")
    p.add_argument("--dataset", required=True, help="dataset directory or manifest.json")
    p.add_argument("--solvers", default="ldf,simcim")
    p.add_argument("--max-n", type=int)
    p.add_argument("--nodes", type=int, nargs="+")
    p.add_argument("--jobs", type=int, default=1, help="instances solved in parallel")
    _add_anneal_flags(p)
    p.set_defaults(time_limit=300.0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="summarize a records CSV")
    p.add_argument("records")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_report)

    for name, sp in sub.choices.items():
        sp.add_argument("--config", help="JSON file of flag defaults")
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str], args: argparse.Namespace) -> argparse.Namespace:
    try:
        doc = json.loads(Path(args.config).read_text())
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(doc, dict):
        raise CliError("config must be a JSON object")
    sub = parser._subparsers._group_actions[0].choices[args.command]  # type: ignore[union-attr]
    known = {a.dest for a in sub._actions}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise CliError(f"unknown config keys: {', '.join(unknown)}")
    sub.set_defaults(**doc)
    return parser.parse_args(argv)


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.config:
            args = _apply_config(parser, argv, args)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, InstanceGenerationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
