"""QUBO encodings of graph coloring, penalty selection and Ising conversion.

Two encodings are provided:

* ``proposed``: variables ``s = (w, x)`` with ``K = (N_V + 1) W`` entries, where
  ``w_i`` flags color ``i`` as used and ``x[v, i]`` assigns color ``i`` to
  vertex ``v`` (vertex-major after the ``W`` color flags). The energy is
  ``c0 H0 + c1 (H1 + H2) + c2 H3`` so its minimum directly counts colors.
* ``original``: only ``x`` (``K = N_V W``), energy ``penalty (H1 + H2)``; zero
  exactly on proper colorings with at most ``W`` colors.

Energies are ``s^T Q s + offset`` for binary ``s`` with a dense symmetric ``Q``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from .graph import Graph

Encoding = Literal["proposed", "original"]


@dataclass(frozen=True)
class PenaltyCoefficients:
    c0: float
    c1: float
    c2: float
    certified: bool = False

    def __post_init__(self) -> None:
        if min(self.c0, self.c1, self.c2) <= 0:
            raise ValueError(f"penalty coefficients must be positive, got {self}")

    def satisfies_bounds(self, W: int, n_edges: int) -> bool:
        """Strict sufficient conditions under which the QUBO optimum is the IP optimum."""
        return self.c1 > 2 * n_edges * W * self.c2 + W * self.c0 and self.c2 > W * self.c0


def heuristic_penalties(n_vertices: int, p: float) -> PenaltyCoefficients:
    """Fixed trial-run penalties: ``c0 = 1``, ``c1 = 10 + p N_V``, ``c2 = 2.5``.

    ``p`` is the edge probability the instance was generated with; for
    graphs of unknown origin pass ``Graph.density()``.
    """
    if n_vertices < 1:
        raise ValueError("n_vertices must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    return PenaltyCoefficients(1.0, 10.0 + p * n_vertices, 2.5)


def certified_penalties(W: int, n_edges: int) -> PenaltyCoefficients:
    """Smallest integer penalties (with ``c0 = 1``) meeting the strict bounds."""
    if W < 1:
        raise ValueError("W must be >= 1")
    c0 = 1
    c2 = W * c0 + 1
    c1 = 2 * n_edges * W * c2 + W * c0 + 1
    return PenaltyCoefficients(float(c0), float(c1), float(c2), certified=True)


@dataclass(frozen=True)
class QuboLayout:
    encoding: Encoding
    W: int
    n_vertices: int

    @property
    def dimension(self) -> int:
        if self.encoding == "proposed":
            return (self.n_vertices + 1) * self.W
        return self.n_vertices * self.W

    @property
    def x_offset(self) -> int:
        """Index of ``x[0, 0]`` in ``s``."""
        return self.W if self.encoding == "proposed" else 0

    def x_index(self, v: int, i: int) -> int:
        return self.x_offset + v * self.W + i

    def split(self, s: np.ndarray) -> tuple[np.ndarray | None, np.ndarray]:
        """Return ``(w, x)``; ``w`` is None for the original encoding."""
        s = np.asarray(s)
        if s.shape != (self.dimension,):
            raise ValueError(f"expected vector of length {self.dimension}, got {s.shape}")
        x = s[self.x_offset:].reshape(self.n_vertices, self.W)
        w = s[: self.W] if self.encoding == "proposed" else None
        return w, x


@dataclass(frozen=True)
class QuboProblem:
    """Dense symmetric ``Q`` with constant ``offset``.

    ``layout`` and ``penalties`` are None for matrices read back from the
    text export, which only carries the numbers.
    """

    Q: np.ndarray
    offset: float
    layout: QuboLayout | None = None
    penalties: PenaltyCoefficients | None = None

    def __post_init__(self) -> None:
        Q = np.array(self.Q, dtype=np.float64)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValueError("Q must be square")
        if not np.array_equal(Q, Q.T):
            raise ValueError("Q must be symmetric")
        if self.layout is not None and self.layout.dimension != Q.shape[0]:
            raise ValueError("layout dimension does not match Q")
        Q.flags.writeable = False
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dimension(self) -> int:
        return self.Q.shape[0]


def _validate_W(W: int) -> None:
    if W < 1:
        raise ValueError(f"W must be >= 1, got {W}")


def build_proposed_qubo(
    g: Graph, W: int, c: PenaltyCoefficients, *, literal_blocks: bool = False
) -> QuboProblem:
    """Assemble the color-minimizing QUBO from Kronecker-product blocks.

    With ``literal_blocks=False`` the matrix reproduces ``c0 H0 + c1 (H1 + H2)
    + c2 H3`` exactly: the edge block is halved because the adjacency matrix
    counts every edge twice, and the ``x``-only part of ``H3`` (``c2 d_v`` on
    each ``x[v, i]``) sits on the diagonal. ``literal_blocks=True`` uses the
    blocks verbatim (full adjacency weight, no diagonal ``H3`` term).
    """
    _validate_W(W)
    n = g.n_vertices
    eye_w = np.eye(W)
    ones_w = np.ones((W, W))
    A = g.adjacency.astype(np.float64)
    D = g.degrees.astype(np.float64)

    edge_weight = c.c1 if literal_blocks else c.c1 / 2
    Q11 = c.c0 * eye_w
    Q12 = -(c.c2 / 2) * np.kron(D[None, :], eye_w)
    Q22 = c.c1 * np.kron(np.eye(n), ones_w - 2 * eye_w) + edge_weight * np.kron(A, eye_w)
    if not literal_blocks:
        Q22 += np.diag(np.repeat(c.c2 * D, W))

    Q = np.block([[Q11, Q12], [Q12.T, Q22]])
    return QuboProblem(Q, c.c1 * n, QuboLayout("proposed", W, n), c)


def build_original_qubo(g: Graph, W: int, penalty: float = 1.0) -> QuboProblem:
    """Decision encoding: ``penalty (H1 + H2)`` over ``x`` only."""
    _validate_W(W)
    if penalty <= 0:
        raise ValueError("penalty must be positive")
    n = g.n_vertices
    eye_w = np.eye(W)
    A = g.adjacency.astype(np.float64)
    Q = penalty * (np.kron(np.eye(n), np.ones((W, W)) - 2 * eye_w) + 0.5 * np.kron(A, eye_w))
    pc = PenaltyCoefficients(1.0, float(penalty), 1.0)
    return QuboProblem(Q, penalty * n, QuboLayout("original", W, n), pc)


def hamiltonian_terms(g: Graph, W: int, w, x) -> tuple[int, int, int, int]:
    """Evaluate ``(H0, H1, H2, H3)`` straight from their defining sums."""
    w = [int(b) for b in np.asarray(w).ravel()]
    x = np.asarray(x, dtype=np.int64)
    if len(w) != W or x.shape != (g.n_vertices, W):
        raise ValueError("w must have W entries and x shape (N_V, W)")
    rows = x.tolist()
    h0 = sum(w)
    h1 = sum((1 - sum(row)) ** 2 for row in rows)
    h2 = 0
    h3 = 0
    for u, v in g.edges:
        for i in range(W):
            h2 += rows[u][i] * rows[v][i]
            h3 += (1 - w[i]) * (rows[u][i] + rows[v][i])
    return h0, h1, h2, h3


def energy(q: QuboProblem, s) -> float:
    """``s^T Q s + offset``."""
    s = np.asarray(s, dtype=np.float64)
    if s.shape != (q.dimension,):
        raise ValueError(f"expected vector of length {q.dimension}, got {s.shape}")
    return float(s @ q.Q @ s) + q.offset


def energies(q: QuboProblem, S: np.ndarray) -> np.ndarray:
    """Row-wise energies for a batch of binary vectors."""
    S = np.asarray(S, dtype=np.float64)
    return np.einsum("ij,ij->i", S @ q.Q, S) + q.offset


@dataclass(frozen=True)
class IsingProblem:
    """``sum_i h_i s_i + sum_{i<j} J_ij s_i s_j + offset`` over spins ``s = +-1``."""

    J: np.ndarray
    h: np.ndarray
    offset: float = 0.0

    def __post_init__(self) -> None:
        J = np.array(self.J, dtype=np.float64)
        h = np.array(self.h, dtype=np.float64).ravel()
        if J.shape != (h.size, h.size):
            raise ValueError("J must be square and match h")
        if not np.array_equal(J, J.T) or np.any(J.diagonal() != 0):
            raise ValueError("J must be symmetric with zero diagonal")
        J.flags.writeable = False
        h.flags.writeable = False
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dimension(self) -> int:
        return self.h.size

    def energy(self, spins) -> float:
        s = np.asarray(spins, dtype=np.float64)
        if s.shape != (self.dimension,):
            raise ValueError(f"expected {self.dimension} spins, got {s.shape}")
        return float(self.h @ s + 0.5 * (s @ self.J @ s)) + self.offset

    def energies(self, S: np.ndarray) -> np.ndarray:
        S = np.asarray(S, dtype=np.float64)
        return S @ self.h + 0.5 * np.einsum("ij,ij->i", S @ self.J, S) + self.offset


def to_ising(q: QuboProblem) -> IsingProblem:
    """Substitute ``b = (s + 1) / 2``; energies are preserved exactly."""
    Q = q.Q
    J = Q / 2
    np.fill_diagonal(J, 0.0)
    h = Q.sum(axis=1) / 2
    offset = q.offset + (Q.sum() + np.trace(Q)) / 4
    return IsingProblem(J, h, offset)


def spins_to_binary(spins) -> np.ndarray:
    return (np.asarray(spins) > 0).astype(np.int8)


def binary_to_spins(bits) -> np.ndarray:
    return 2.0 * np.asarray(bits, dtype=np.float64) - 1.0


# -- text export ----------------------------------------------------------------


def format_qubo(q: QuboProblem) -> str:
    """Header ``K offset`` then ``i j value`` for nonzero upper-triangle entries."""
    lines = [f"{q.dimension} {q.offset!r}"]
    iu, ju = np.nonzero(np.triu(q.Q))
    for i, j in zip(iu.tolist(), ju.tolist()):
        lines.append(f"{i} {j} {float(q.Q[i, j])!r}")
    return "\n".join(lines) + "\n"


def parse_qubo(text: str) -> QuboProblem:
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not lines or len(lines[0]) != 2:
        raise ValueError("missing 'K offset' header")
    K, offset = int(lines[0][0]), float(lines[0][1])
    Q = np.zeros((K, K))
    for parts in lines[1:]:
        if len(parts) != 3:
            raise ValueError(f"bad entry line {' '.join(parts)!r}")
        i, j, val = int(parts[0]), int(parts[1]), float(parts[2])
        if not (0 <= i <= j < K):
            raise ValueError(f"entry ({i}, {j}) outside upper triangle of {K}x{K}")
        Q[i, j] = Q[j, i] = val
    return QuboProblem(Q, offset)


def write_qubo(q: QuboProblem, path: str | Path) -> None:
    Path(path).write_text(format_qubo(q))


def read_qubo(path: str | Path) -> QuboProblem:
    return parse_qubo(Path(path).read_text())
