"""Benchmark dataset generation, the benchmark runner and report tables.

Dataset layout: one DIMACS file per instance plus ``manifest.json``::

    {"base_seed": 0, "cells": [{"n": 10, "p": 0.1, "seed": 123, "file": "...", "edges": 9}, ...]}

Records are streamed to CSV, one row per (instance, solver), so a partial run
can be inspected or resumed.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .graph import Graph, erdos_renyi, ldf_coloring, read_dimacs, write_dimacs
from .solution import ColoringSolution
from .solver import solve_exact, solve_wa, solve_wa_binary_search

logger = logging.getLogger(__name__)

RECORD_COLUMNS = (
    "n",
    "p",
    "seed",
    "solver",
    "n_colors",
    "wall_time_s",
    "feasible",
    "outer_iterations",
    "qubo_dim",
    "status",
)
SOLVERS = ("ldf", "simcim-proposed", "simcim-binary-search", "exact")
SOLVER_ALIASES = {"simcim": "simcim-proposed", "binary-search": "simcim-binary-search"}
# seeds of consecutive grid cells start this far apart; one cell never
# consumes this many resamples on the default grid
CELL_SEED_STRIDE = 1_000_000


def _default_nodes() -> list[int]:
    return list(range(10, 101, 10))


def _default_probs() -> list[float]:
    return [round(0.1 * k, 1) for k in range(1, 10)]


@dataclass(frozen=True)
class DatasetSpec:
    node_counts: Sequence[int] = field(default_factory=_default_nodes)
    probabilities: Sequence[float] = field(default_factory=_default_probs)
    instances_per_cell: int = 10
    base_seed: int = 0

    @property
    def n_instances(self) -> int:
        return len(self.node_counts) * len(self.probabilities) * self.instances_per_cell


@dataclass(frozen=True)
class Instance:
    n: int
    p: float
    seed: int
    file: str
    edges: int


@dataclass(frozen=True)
class Manifest:
    base_seed: int
    cells: tuple[Instance, ...]
    root: Path = Path(".")

    def to_dict(self) -> dict:
        return {"base_seed": self.base_seed, "cells": [asdict(c) for c in self.cells]}

    def graph(self, inst: Instance) -> Graph:
        return read_dimacs(self.root / inst.file)

    def select(self, max_n: int | None = None, node_counts: Iterable[int] | None = None) -> Manifest:
        keep = set(node_counts) if node_counts is not None else None
        cells = tuple(
            c
            for c in self.cells
            if (max_n is None or c.n <= max_n) and (keep is None or c.n in keep)
        )
        return Manifest(self.base_seed, cells, self.root)


def instance_filename(n: int, p: float, k: int) -> str:
    return f"n{n:03d}_p{p:.1f}_{k:02d}.col"


def generate_dataset(spec: DatasetSpec, out_dir: str | Path) -> Manifest:
    """Write one connected G(n, p) graph per instance and a manifest.

    Cell ``c`` of the (n, p) grid starts drawing at
    ``base_seed + c * CELL_SEED_STRIDE``; its instances take successive
    accepted seeds, each search resuming one past the previous hit, so all
    instances in a cell have distinct seeds.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells: list[Instance] = []
    cell = 0
    for n in spec.node_counts:
        for p in spec.probabilities:
            seed = spec.base_seed + cell * CELL_SEED_STRIDE
            for k in range(spec.instances_per_cell):
                g = erdos_renyi(n, p, seed)
                name = instance_filename(n, p, k)
                write_dimacs(g, out / name, comments=[f"G({n}, {p}) seed {g.seed}"])
                cells.append(Instance(n=n, p=p, seed=g.seed, file=name, edges=g.n_edges))
                seed = g.seed + 1
            cell += 1
    manifest = Manifest(spec.base_seed, tuple(cells), out)
    (out / "manifest.json").write_text(json.dumps(manifest.to_dict(), indent=1) + "\n")
    return manifest


def load_manifest(path: str | Path) -> Manifest:
    """Load ``manifest.json`` (pass the file or the dataset directory)."""
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.json"
    if not path.exists():
        raise FileNotFoundError(f"no manifest at {path}")
    doc = json.loads(path.read_text())
    cells = tuple(
        Instance(n=int(c["n"]), p=float(c["p"]), seed=int(c["seed"]), file=c["file"], edges=int(c["edges"]))
        for c in doc["cells"]
    )
    if not cells:
        raise ValueError(f"manifest {path} lists no instances")
    return Manifest(int(doc["base_seed"]), cells, path.parent)


@dataclass(frozen=True)
class BenchRecord:
    n: int
    p: float
    seed: int
    solver: str
    n_colors: int
    wall_time: float
    feasible: bool
    outer_iterations: int
    qubo_dim: int
    status: str = "ok"

    def row(self) -> list:
        return [
            self.n,
            f"{self.p:.1f}",
            self.seed,
            self.solver,
            self.n_colors,
            f"{self.wall_time:.6f}",
            int(self.feasible),
            self.outer_iterations,
            self.qubo_dim,
            self.status,
        ]

    @classmethod
    def from_row(cls, row: dict) -> BenchRecord:
        return cls(
            n=int(row["n"]),
            p=float(row["p"]),
            seed=int(row["seed"]),
            solver=row["solver"],
            n_colors=int(row["n_colors"]),
            wall_time=float(row["wall_time_s"]),
            feasible=row["feasible"] in ("1", "True", "true"),
            outer_iterations=int(row["outer_iterations"]),
            qubo_dim=int(row["qubo_dim"]),
            status=row.get("status") or "ok",
        )


def normalize_solvers(names: Iterable[str]) -> list[str]:
    out = []
    for name in names:
        name = SOLVER_ALIASES.get(name.strip(), name.strip())
        if name not in SOLVERS:
            raise ValueError(f"unknown solver {name!r}; choose from {', '.join(SOLVERS)}")
        out.append(name)
    return out


@dataclass(frozen=True)
class BenchConfig:
    """Solver settings shared by every instance of a run.

    ``time_limit`` caps each (instance, solver) pair in seconds.
    ``anneal_overrides`` is applied on top of the size-scaled annealer
    defaults, e.g. ``{"workers": 2}`` for attempt-level parallelism.
    """

    time_limit: float | None = 300.0
    seed: int = 0
    anneal_overrides: dict = field(default_factory=dict)


def run_solver(g: Graph, p: float, solver: str, cfg: BenchConfig) -> tuple[ColoringSolution, int]:
    """Solve one instance; returns the solution and the largest QUBO dimension built."""
    if solver == "ldf":
        return ldf_coloring(g), 0
    if solver == "exact":
        return solve_exact(g, time_limit=cfg.time_limit), 0
    ldf_k = ldf_coloring(g).n_colors
    if solver == "simcim-proposed":
        sol = solve_wa(
            g, p=p, seed=cfg.seed, overrides=cfg.anneal_overrides, time_limit=cfg.time_limit
        )
        return sol, (g.n_vertices + 1) * ldf_k
    if solver == "simcim-binary-search":
        sol = solve_wa_binary_search(
            g, seed=cfg.seed, overrides=cfg.anneal_overrides, time_limit=cfg.time_limit
        )
        return sol, g.n_vertices * ((1 + ldf_k) // 2) if ldf_k > 1 else 0
    raise ValueError(f"unknown solver {solver!r}")


def _bench_instance(args: tuple[Path, Instance, tuple[str, ...], BenchConfig]) -> list[BenchRecord]:
    root, inst, solvers, cfg = args
    g = read_dimacs(root / inst.file)
    records = []
    for solver in solvers:
        try:
            sol, dim = run_solver(g, inst.p, solver, cfg)
        except Exception:
            logger.exception("solver %s failed on %s", solver, inst.file)
            records.append(BenchRecord(inst.n, inst.p, inst.seed, solver, 0, 0.0, False, 0, 0, "error"))
            continue
        status = "timeout" if sol.truncated else "ok"
        records.append(
            BenchRecord(
                n=inst.n,
                p=inst.p,
                seed=inst.seed,
                solver=solver,
                n_colors=sol.n_colors,
                wall_time=sol.wall_time,
                feasible=sol.feasible,
                outer_iterations=sol.outer_iterations,
                qubo_dim=dim,
                status=status,
            )
        )
    return records


def run_benchmark(
    manifest: Manifest,
    solvers: Sequence[str],
    out: str | Path,
    config: BenchConfig | None = None,
    jobs: int = 1,
) -> list[BenchRecord]:
    """Run every solver on every manifest instance, streaming records to CSV.

    Rows are written in manifest order whatever ``jobs`` is, so the file
    content (wall times aside) is reproducible. A solver that raises yields
    a record with ``status=error`` and the run continues.
    """
    solvers = tuple(normalize_solvers(solvers))
    if not manifest.cells:
        raise ValueError("manifest has no instances")
    config = config or BenchConfig()
    tasks = [(manifest.root, inst, solvers, config) for inst in manifest.cells]
    records: list[BenchRecord] = []
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_COLUMNS)
        fh.flush()
        if jobs > 1:
            with ProcessPoolExecutor(jobs) as pool:
                results: Iterator[list[BenchRecord]] = pool.map(_bench_instance, tasks)
                for recs in results:
                    _emit(writer, fh, recs, records)
        else:
            for task in tasks:
                _emit(writer, fh, _bench_instance(task), records)
    return records


def _emit(writer, fh, recs: list[BenchRecord], sink: list[BenchRecord]) -> None:
    for r in recs:
        writer.writerow(r.row())
        logger.info("n=%d p=%.1f seed=%d %s -> %d colors", r.n, r.p, r.seed, r.solver, r.n_colors)
    fh.flush()
    sink.extend(recs)


def read_records(path: str | Path) -> list[BenchRecord]:
    with open(path, newline="") as fh:
        return [BenchRecord.from_row(row) for row in csv.DictReader(fh)]


# -- reporting ---------------------------------------------------------------------


@dataclass(frozen=True)
class Report:
    """Mean colors and mean time-to-solution per node count and solver."""

    solvers: tuple[str, ...]
    node_counts: tuple[int, ...]
    colors: dict[tuple[int, str], float]
    times: dict[tuple[int, str], float]
    counts: dict[tuple[int, str], int]

    def table_rows(self, metric: str) -> list[list[str]]:
        data = self.colors if metric == "colors" else self.times
        fmt = "{:.2f}" if metric == "colors" else "{:.3f}"
        rows = []
        for n in self.node_counts:
            row = [str(n)]
            for s in self.solvers:
                v = data.get((n, s))
                row.append("-" if v is None else fmt.format(v))
            rows.append(row)
        return rows

    def comparison_rows(self) -> list[list[str]]:
        """Original (binary search) vs proposed encoding, colors and time."""
        a, b = "simcim-binary-search", "simcim-proposed"
        rows = []
        for n in self.node_counts:
            if (n, a) in self.colors and (n, b) in self.colors:
                rows.append(
                    [
                        str(n),
                        f"{self.colors[n, a]:.2f}",
                        f"{self.times[n, a]:.3f}",
                        f"{self.colors[n, b]:.2f}",
                        f"{self.times[n, b]:.3f}",
                    ]
                )
        return rows

    def markdown(self) -> str:
        head = ["nodes", *self.solvers]
        parts = [
            "Time is time-to-solution: seconds from solver start until its best "
            "feasible coloring was found.",
            "",
            "### Average number of colors",
            "",
            _md_table(head, self.table_rows("colors")),
            "",
            "### Average time-to-solution (s)",
            "",
            _md_table(head, self.table_rows("time")),
        ]
        comp = self.comparison_rows()
        if comp:
            parts += [
                "",
                "### Original vs proposed QUBO transformation",
                "",
                _md_table(
                    ["nodes", "original colors", "original time", "proposed colors", "proposed time"],
                    comp,
                ),
            ]
        return "\n".join(parts) + "\n"


def _md_table(head: list[str], rows: list[list[str]]) -> str:
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    lines += ["| " + " | ".join(r) + " |" for r in rows]
    return "\n".join(lines)


def report(records: Sequence[BenchRecord] | str | Path, out_dir: str | Path | None = None) -> Report:
    """Average records by node count and solver; optionally write CSV + Markdown tables.

    Only feasible records with ``status=ok`` or ``timeout`` enter the means.
    """
    if isinstance(records, (str, Path)):
        records = read_records(records)
    usable = [r for r in records if r.feasible and r.status != "error"]
    if not usable:
        raise ValueError("no usable benchmark records")
    solvers = tuple(s for s in SOLVERS if any(r.solver == s for r in usable))
    node_counts = tuple(sorted({r.n for r in usable}))
    colors: dict[tuple[int, str], float] = {}
    times: dict[tuple[int, str], float] = {}
    counts: dict[tuple[int, str], int] = {}
    for n in node_counts:
        for s in solvers:
            sel = [r for r in usable if r.n == n and r.solver == s]
            if sel:
                colors[n, s] = float(np.mean([r.n_colors for r in sel]))
                times[n, s] = float(np.mean([r.wall_time for r in sel]))
                counts[n, s] = len(sel)
    rep = Report(solvers, node_counts, colors, times, counts)
    if out_dir is not None:
        write_report(rep, out_dir)
    return rep


def write_report(rep: Report, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "colors.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", *rep.solvers])
        w.writerows(rep.table_rows("colors"))
    with open(out / "times.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", *rep.solvers])
        w.writerows(rep.table_rows("time"))
    comp = rep.comparison_rows()
    if comp:
        with open(out / "comparison.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "original_colors", "original_time", "proposed_colors", "proposed_time"])
            w.writerows(comp)
    (out / "report.md").write_text(rep.markdown())
