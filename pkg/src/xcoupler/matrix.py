"""(N+2) coupling matrices and topology masks.

Rows and columns are ordered ``[S, 1, ..., N, L]``: index 0 is the source,
index ``N + 1`` the load, and resonator ``k`` sits at index ``k``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

SYMMETRY_TOL = 1e-9


def default_labels(order: int) -> tuple[str, ...]:
    return ("S", *(str(k) for k in range(1, order + 1)), "L")


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    """Symmetric real (N+2)x(N+2) coupling matrix.

    Input within ``SYMMETRY_TOL`` of symmetric is symmetrized so that the
    stored values are exactly symmetric; anything further off is rejected.
    """

    values: np.ndarray
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"coupling matrix must be square, got shape {v.shape}")
        if v.shape[0] < 3:
            raise ValueError("coupling matrix needs at least one resonator (size >= 3)")
        if not np.all(np.isfinite(v)):
            raise ValueError("coupling matrix has non-finite entries")
        asym = np.abs(v - v.T)
        if asym.max() > SYMMETRY_TOL:
            i, j = np.unravel_index(np.argmax(asym), asym.shape)
            raise ValueError(
                f"coupling matrix is not symmetric: entry ({i},{j})={v[i, j]!r} "
                f"vs ({j},{i})={v[j, i]!r}"
            )
        v = 0.5 * (v + v.T)
        if v[0, 0] != 0.0 or v[-1, -1] != 0.0:
            raise ValueError("source and load self-couplings must be zero")
        object.__setattr__(self, "values", _readonly(v))
        n = v.shape[0] - 2
        labels = tuple(self.labels) if self.labels else default_labels(n)
        if len(labels) != n + 2:
            raise ValueError(f"{len(labels)} labels given for a matrix of order {n}")
        object.__setattr__(self, "labels", labels)

    @property
    def order(self) -> int:
        return self.values.shape[0] - 2

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, idx):
        return self.values[idx]

    def __eq__(self, other):
        if not isinstance(other, CouplingMatrix):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.values, other.values)

    __hash__ = None

    def with_values(self, values: np.ndarray) -> "CouplingMatrix":
        return CouplingMatrix(values, self.labels)

    def resonator_block(self) -> np.ndarray:
        return self.values[1:-1, 1:-1].copy()

    def copy_values(self) -> np.ndarray:
        return np.array(self.values)

    def __repr__(self):
        return f"CouplingMatrix(order={self.order},\n{np.array2string(self.values, precision=5)})"


@dataclass(frozen=True, eq=False)
class TopologyMask:
    """Symmetric boolean pattern of permitted couplings.

    Resonator self-couplings are always permitted; the S-S and L-L entries
    never are. The direct S-L entry is only set when asked for explicitly.
    """

    allowed: np.ndarray

    def __post_init__(self):
        a = np.array(self.allowed, dtype=bool)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 3:
            raise ValueError(f"mask must be square with size >= 3, got shape {a.shape}")
        if not np.array_equal(a, a.T):
            raise ValueError("topology mask must be symmetric")
        a = a.copy()
        n = a.shape[0]
        a[np.arange(1, n - 1), np.arange(1, n - 1)] = True
        a[0, 0] = a[-1, -1] = False
        object.__setattr__(self, "allowed", _readonly(a))

    @property
    def order(self) -> int:
        return self.allowed.shape[0] - 2

    @classmethod
    def from_edges(cls, order: int, edges: Iterable[tuple[int, int]]) -> "TopologyMask":
        a = np.zeros((order + 2, order + 2), dtype=bool)
        for i, j in edges:
            a[i, j] = a[j, i] = True
        return cls(a)

    @classmethod
    def full(cls, order: int, source_load: bool = True) -> "TopologyMask":
        a = np.ones((order + 2, order + 2), dtype=bool)
        if not source_load:
            a[0, -1] = a[-1, 0] = False
        return cls(a)

    @classmethod
    def transversal(cls, order: int) -> "TopologyMask":
        load = order + 1
        return cls.from_edges(
            order, [(0, k) for k in range(1, order + 1)] + [(k, load) for k in range(1, order + 1)]
        )

    @classmethod
    def fig7(cls) -> "TopologyMask":
        """Three bar resonators in line (1-2-3) plus a cavity mode (4) coupled to 1 and 3."""
        return cls.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 5), (1, 4), (3, 4)])

    @classmethod
    def from_matrix(cls, m: CouplingMatrix, tol: float = 0.0) -> "TopologyMask":
        return cls(np.abs(m.values) > tol)

    def is_full(self) -> bool:
        a = self.allowed.copy()
        a[0, 0] = a[-1, -1] = True
        return bool(a.all())

    def forbidden_upper(self) -> tuple[np.ndarray, np.ndarray]:
        """Row/column indices of forbidden off-diagonal entries (upper triangle)."""
        iu, ju = np.triu_indices(self.allowed.shape[0], 1)
        bad = ~self.allowed[iu, ju]
        return iu[bad], ju[bad]

    def connects_source_to_load(self) -> bool:
        adj = self.allowed.copy()
        np.fill_diagonal(adj, False)
        return _reachable(adj, 0, adj.shape[0] - 1)

    def admits(self, m: CouplingMatrix, tol: float = 1e-8) -> bool:
        return bool(np.all(np.abs(m.values[~self.allowed]) <= tol))


def _reachable(adj: np.ndarray, start: int, goal: int) -> bool:
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        if u == goal:
            return True
        for v in np.flatnonzero(adj[u]):
            if v not in seen:
                seen.add(int(v))
                queue.append(int(v))
    return False


def normalize_signs(m: CouplingMatrix, tol: float = 1e-12) -> CouplingMatrix:
    """Resolve the diagonal +/-1 similarity freedom.

    Couplings along a breadth-first tree grown from the load (neighbours
    visited in ascending index) are made positive; the signs of the
    remaining couplings follow. Only the S21 phase can change.
    """
    v = m.copy_values()
    n = v.shape[0]
    adj = np.abs(v) > tol
    np.fill_diagonal(adj, False)
    root = n - 1
    seen = {root}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for w in np.flatnonzero(adj[u]):
            w = int(w)
            if w in seen:
                continue
            seen.add(w)
            if v[u, w] < 0:
                v[w, :] *= -1.0
                v[:, w] *= -1.0
            queue.append(w)
    return m.with_values(v + 0.0)  # no negative zeros


def matrix_from_entries(order: int, entries: dict[tuple[int, int], float],
                        labels: Sequence[str] = ()) -> CouplingMatrix:
    v = np.zeros((order + 2, order + 2))
    for (i, j), x in entries.items():
        v[i, j] = v[j, i] = x
    return CouplingMatrix(v, tuple(labels))
