"""Zero-diagonal doubly-stochastic transition matrices over candidate angles.

Rows and columns are indexed by sorted position.  The uniform matrix spreads
mass evenly over the other candidates; the distance-informed matrix maximises
sum(D * P) over the zero-diagonal Birkhoff polytope with a small dense
simplex.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

TWO_PI = 2.0 * math.pi


class Distance(str, enum.Enum):
    UNIFORM = "uniform"
    ANGULAR = "angular"
    EUCLIDEAN = "euclidean"


class TransitionError(ValueError):
    pass


@dataclass(frozen=True)
class TransitionMatrix:
    entries: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.entries, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] < 2:
            raise TransitionError(f"need a square matrix of order >= 2, got shape {p.shape}")
        p.setflags(write=False)
        object.__setattr__(self, "entries", p)

    @property
    def order(self) -> int:
        return self.entries.shape[0]

    def objective(self, distances) -> float:
        return float(np.sum(np.asarray(distances) * self.entries))

    def check(self, tol: float = 1e-9):
        """Raise unless the matrix is a zero-diagonal doubly-stochastic matrix."""
        p = self.entries
        if np.any(p < 0) or np.any(p > 1):
            raise TransitionError("entries must lie in [0, 1]")
        if np.any(np.diag(p) != 0):
            raise TransitionError("diagonal must be exactly zero")
        if np.max(np.abs(p.sum(axis=1) - 1)) > tol or np.max(np.abs(p.sum(axis=0) - 1)) > tol:
            raise TransitionError("rows and columns must sum to one")


def uniform_matrix(order: int) -> TransitionMatrix:
    if order < 2:
        raise TransitionError(f"order must be >= 2, got {order}")
    p = np.full((order, order), 1.0 / (order - 1))
    np.fill_diagonal(p, 0.0)
    return TransitionMatrix(p)


def angular_distance(a, b):
    """Great-circle distance between angles: min(|a-b|, 2pi - |a-b|)."""
    diff = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    out = np.minimum(diff, TWO_PI - diff)
    return float(out) if out.ndim == 0 else out


def euclidean_distance(state_r, state_s) -> float:
    state_r = np.asarray(state_r, dtype=float)
    state_s = np.asarray(state_s, dtype=float)
    if state_r.shape != state_s.shape:
        raise ValueError(f"shape mismatch: {state_r.shape} vs {state_s.shape}")
    return float(np.linalg.norm(state_r - state_s))


def angular_distance_matrix(angles) -> np.ndarray:
    angles = np.asarray(angles, dtype=float)
    return angular_distance(angles[:, None], angles[None, :])


def euclidean_distance_matrix(states) -> np.ndarray:
    return cdist(np.asarray(states, dtype=float), np.asarray(states, dtype=float))


# --- linear program ---------------------------------------------------------


def _offdiag_pairs(order: int):
    r, s = np.nonzero(~np.eye(order, dtype=bool))
    return r, s


def _constraint_matrix(order: int):
    # row sums for every r, column sums for s < order-1 (the last is implied)
    r, s = _offdiag_pairs(order)
    n_var = r.size
    a = np.zeros((2 * order - 1, n_var))
    a[r, np.arange(n_var)] = 1.0
    keep = s < order - 1
    a[order + s[keep], np.arange(n_var)[keep]] = 1.0
    return a, r, s


def _initial_basis(order: int, r, s) -> np.ndarray:
    # The edges (i, i+1) and (i, i+2) trace a Hamiltonian path through the
    # bipartite row/column graph, i.e. a spanning-tree basis whose basic
    # solution is the cyclic-shift permutation.
    lookup = {(int(a), int(b)): j for j, (a, b) in enumerate(zip(r, s))}
    basis = [lookup[(i, (i + 1) % order)] for i in range(order)]
    basis += [lookup[(i, (i + 2) % order)] for i in range(order - 1)]
    return np.array(basis)


_LP_CACHE: dict[int, tuple] = {}


def _lp_structure(order: int):
    if order not in _LP_CACHE:
        a, r, s = _constraint_matrix(order)
        basis = _initial_basis(order, r, s)
        tab = np.linalg.solve(a[:, basis], np.column_stack([a, np.ones(a.shape[0])]))
        tab = np.rint(tab)  # totally unimodular: the exact tableau is integral
        tab.setflags(write=False)
        _LP_CACHE[order] = (r, s, basis, tab)
    return _LP_CACHE[order]


def _simplex(distances: np.ndarray, max_pivots: int):
    order = distances.shape[0]
    r, s, basis, tab0 = _lp_structure(order)
    cost = distances[r, s]
    tab = tab0.copy()
    basis = basis.copy()
    n_var = cost.size
    tol = 1e-11 * max(1.0, float(np.max(np.abs(cost))))
    # reduced costs kept as an extra row and updated with each pivot
    reduced = cost - cost[basis] @ tab[:, :n_var]
    reduced[basis] = 0.0
    degenerate_run = 0
    for pivots in range(max_pivots):
        if degenerate_run > order:
            hits = np.flatnonzero(reduced > tol)
            if hits.size == 0:
                return basis, tab, pivots
            enter = int(hits[0])  # Bland
        else:
            enter = int(np.argmax(reduced))
            if reduced[enter] <= tol:
                return basis, tab, pivots
        col = tab[:, enter].copy()
        rows = np.flatnonzero(col > 0.5)  # tableau entries are exactly 0 or +-1
        if rows.size == 0:
            raise TransitionError("LP unbounded; this cannot happen for a bounded polytope")
        ratios = tab[rows, -1]
        best = ratios.min()
        tied = rows[ratios == best]
        leave = int(tied[np.argmin(basis[tied])])
        degenerate_run = degenerate_run + 1 if best == 0 else 0
        piv = tab[leave]
        touched = np.flatnonzero(col)
        touched = touched[touched != leave]
        tab[touched] -= col[touched, None] * piv
        reduced -= reduced[enter] * piv[:n_var]
        reduced[enter] = 0.0
        basis[leave] = enter
    raise TransitionError(f"simplex did not converge in {max_pivots} pivots")


def solve_transition_lp(distances, method: str = "simplex") -> TransitionMatrix:
    """Transition matrix maximising sum(D * P) over zero-diagonal doubly-stochastic P.

    ``method="simplex"`` runs the dense primal simplex (Dantzig pricing with
    a Bland fallback on degenerate runs, lowest-index tie breaks);
    ``method="assignment"`` hands the equivalent assignment problem to
    scipy's Jonker-Volgenant solver.  Both return a vertex of the polytope,
    i.e. a derangement permutation matrix, deterministically.
    """
    d = np.asarray(distances, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise TransitionError(f"distance matrix must be square, got shape {d.shape}")
    order = d.shape[0]
    if order < 2:
        raise TransitionError(f"order must be >= 2, got {order}")
    if not np.all(np.isfinite(d)) or np.any(d < 0):
        raise TransitionError("distances must be finite and nonnegative")
    if order == 2:
        return TransitionMatrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
    p = np.zeros((order, order))
    if method == "simplex":
        basis, tab, _ = _simplex(d, max_pivots=50 * order * order)
        r, s, _, _ = _lp_structure(order)
        values = np.rint(tab[:, -1])
        p[r[basis], s[basis]] = values
    elif method == "assignment":
        cost = -d.copy()
        np.fill_diagonal(cost, np.inf)
        rows, cols = linear_sum_assignment(cost)
        p[rows, cols] = 1.0
    else:
        raise ValueError(f"unknown LP method {method!r}")
    return TransitionMatrix(p)


def build_matrix(kind, sorted_angles, states=None, lp_method: str = "simplex") -> TransitionMatrix:
    """Transition matrix for candidates at ``sorted_angles``.

    ``states`` (one row per sorted angle) is needed only for the Euclidean
    distance.
    """
    kind = Distance(kind)
    order = len(sorted_angles)
    if kind is Distance.UNIFORM:
        return uniform_matrix(order)
    if kind is Distance.ANGULAR:
        d = angular_distance_matrix(sorted_angles)
    else:
        if states is None:
            raise ValueError("euclidean distance needs the candidate states")
        d = euclidean_distance_matrix(states)
    return solve_transition_lp(d, method=lp_method)


def sample_row(matrix: TransitionMatrix, row: int, rng: np.random.Generator) -> int:
    """Draw a column from ``row``; rows with one nonzero entry use no randomness."""
    p = matrix.entries[row]
    support = np.flatnonzero(p > 0)
    if support.size == 1:
        return int(support[0])
    cum = np.cumsum(p[support])
    u = rng.random() * cum[-1]
    idx = int(np.searchsorted(cum, u, side="right"))
    return int(support[min(idx, support.size - 1)])
