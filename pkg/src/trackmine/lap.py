"""Relaxed linear assignment with infeasible pairs.

Payoffs are maximised over partial matchings (rows and columns may stay
unassigned); ``-inf`` marks a forbidden pair. The optimisation criterion is
lexicographic: maximum number of matched pairs first, then maximum total
payoff, then the lexicographically smallest sorted pair list.

The cardinality-first rule is realised by adding a bonus larger than
``min(rows, cols) * payoff_range`` to every feasible pair before handing the
matrix to :func:`scipy.optimize.linear_sum_assignment`.
"""

import logging
import math
from collections.abc import Iterable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from trackmine.errors import SizeLimitError

logger = logging.getLogger(__name__)

NEG_INF = float("-inf")
BRUTE_FORCE_LIMIT = 10

Pair = tuple[int, int]


def as_payoff_matrix(p: Sequence[Sequence[float]] | np.ndarray) -> np.ndarray:
    """Coerce nested lists to a float matrix; NaN and +inf are rejected."""
    arr = np.asarray(p, dtype=np.float64)
    if arr.size == 0:
        return arr.reshape(arr.shape if arr.ndim == 2 else (0, 0))
    if arr.ndim != 2:
        raise ValueError(f"Payoff matrix must be 2-D, got shape {arr.shape}")
    if np.isnan(arr).any() or np.isposinf(arr).any():
        raise ValueError("Payoff matrix entries must be finite or -inf")
    return arr


def assignment_payoff(p: np.ndarray, pairs: Iterable[Pair]) -> float:
    """Total payoff of a pair set, summed in sorted pair order."""
    return math.fsum(float(p[i, j]) for i, j in sorted(pairs))


def _values_equal(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-9)


def _optimum(p: np.ndarray, rows: list[int], cols: list[int]) -> list[Pair]:
    """Max-cardinality, max-payoff matching restricted to a sub-grid."""
    if not rows or not cols:
        return []
    sub = p[np.ix_(rows, cols)]
    feasible = np.isfinite(sub)
    if not feasible.any():
        return []

    finite = sub[feasible]
    low = float(finite.min())
    spread = float(finite.max()) - low
    bonus = spread * min(len(rows), len(cols)) + 1.0
    weights = np.where(feasible, sub - low + bonus, 0.0)

    row_idx, col_idx = linear_sum_assignment(weights, maximize=True)
    return sorted(
        (rows[r], cols[c]) for r, c in zip(row_idx, col_idx, strict=True) if feasible[r, c]
    )


def solve_relaxed_lap(p: Sequence[Sequence[float]] | np.ndarray) -> list[Pair]:
    """Solve the relaxed assignment problem.

    Returns the sorted list of matched (row, col) pairs. Among all
    maximum-cardinality, maximum-payoff assignments the lexicographically
    smallest pair list is returned, so results do not depend on solver
    internals.
    """
    matrix = as_payoff_matrix(p)
    if matrix.size == 0:
        return []
    n_rows, n_cols = matrix.shape

    best = _optimum(matrix, list(range(n_rows)), list(range(n_cols)))
    target_card = len(best)
    if target_card == 0:
        return []
    target_value = assignment_payoff(matrix, best)

    current = dict(best)
    fixed: list[Pair] = []
    used_cols: set[int] = set()

    for i in range(n_rows):
        candidates = [
            j for j in range(n_cols) if j not in used_cols and math.isfinite(matrix[i, j])
        ]
        if i in current:
            candidates = [j for j in candidates if j <= current[i]]

        chosen: int | None = None
        for j in candidates:
            if current.get(i) == j:
                chosen = j
                break
            rest_rows = list(range(i + 1, n_rows))
            rest_cols = [c for c in range(n_cols) if c not in used_cols and c != j]
            rest = _optimum(matrix, rest_rows, rest_cols)
            trial = [*fixed, (i, j), *rest]
            if len(trial) == target_card and _values_equal(
                assignment_payoff(matrix, trial), target_value
            ):
                chosen = j
                current = dict(trial)
                break

        if chosen is not None:
            fixed.append((i, chosen))
            used_cols.add(chosen)

    logger.debug(
        f"LAP {n_rows}x{n_cols}: {len(fixed)} pairs, payoff {assignment_payoff(matrix, fixed):.6f}"
    )
    return fixed


def brute_force_lap(p: Sequence[Sequence[float]] | np.ndarray) -> list[Pair]:
    """Exhaustive reference solver with the same criterion as solve_relaxed_lap."""
    matrix = as_payoff_matrix(p)
    if matrix.size == 0:
        return []
    n_rows, n_cols = matrix.shape
    if n_rows > BRUTE_FORCE_LIMIT or n_cols > BRUTE_FORCE_LIMIT:
        raise SizeLimitError(
            f"brute_force_lap supports at most {BRUTE_FORCE_LIMIT}x{BRUTE_FORCE_LIMIT}, "
            f"got {n_rows}x{n_cols}"
        )

    best_pairs: list[Pair] = []
    best_value = 0.0
    chosen: list[Pair] = []
    used = [False] * n_cols

    def _consider() -> None:
        nonlocal best_pairs, best_value
        if len(chosen) < len(best_pairs):
            return
        value = assignment_payoff(matrix, chosen)
        if len(chosen) > len(best_pairs):
            better = True
        elif _values_equal(value, best_value):
            better = chosen < best_pairs
        else:
            better = value > best_value
        if better:
            best_pairs = list(chosen)
            best_value = value

    def _recurse(i: int) -> None:
        if i == n_rows:
            _consider()
            return
        _recurse(i + 1)
        for j in range(n_cols):
            if used[j] or not math.isfinite(matrix[i, j]):
                continue
            used[j] = True
            chosen.append((i, j))
            _recurse(i + 1)
            chosen.pop()
            used[j] = False

    _recurse(0)
    return best_pairs
