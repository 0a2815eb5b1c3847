"""Coloring results and their JSON representation."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

SOLVER_TAGS = ("ldf", "simcim-proposed", "simcim-binary-search", "exact")


@dataclass(frozen=True)
class ColoringSolution:
    """Per-vertex colors plus bookkeeping about how they were obtained.

    ``colors`` uses contiguous indices ``0..n_colors-1``; an entry of ``-1``
    marks a vertex with no unique color (only possible when infeasible).
    ``wall_time`` is the time until this solution was found, in seconds.
    """

    colors: tuple[int, ...]
    n_colors: int
    feasible: bool
    energy: float | None
    solver: str
    wall_time: float
    outer_iterations: int = 0
    truncated: bool = False

    def to_dict(self) -> dict:
        return {
            "solver": self.solver,
            "n_colors": self.n_colors,
            "colors": list(self.colors),
            "feasible": self.feasible,
            "energy": self.energy,
            "wall_time_s": self.wall_time,
            "outer_iterations": self.outer_iterations,
            "truncated": self.truncated,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> ColoringSolution:
        try:
            return cls(
                colors=tuple(int(c) for c in doc["colors"]),
                n_colors=int(doc["n_colors"]),
                feasible=bool(doc["feasible"]),
                energy=None if doc.get("energy") is None else float(doc["energy"]),
                solver=str(doc["solver"]),
                wall_time=float(doc.get("wall_time_s", 0.0)),
                outer_iterations=int(doc.get("outer_iterations", 0)),
                truncated=bool(doc.get("truncated", False)),
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed solution document: {exc}") from exc

    def with_updates(self, **changes) -> ColoringSolution:
        fields = {**self.__dict__, **changes}
        return ColoringSolution(**fields)


def relabel(colors: Sequence[int]) -> tuple[tuple[int, ...], int]:
    """Map used colors onto ``0..k-1`` preserving their order; ``-1`` stays."""
    used = sorted({c for c in colors if c >= 0})
    mapping = {c: i for i, c in enumerate(used)}
    return tuple(mapping.get(c, -1) for c in colors), len(used)


def write_solution(sol: ColoringSolution, path: str | Path) -> None:
    Path(path).write_text(json.dumps(sol.to_dict(), indent=2) + "\n")


def read_solution(path: str | Path) -> ColoringSolution:
    return ColoringSolution.from_dict(json.loads(Path(path).read_text()))
