"""Exact data association between one frame pair via binary flow flags.

Variables, all in {0, 1}:
  f_link(i, j)   previous object i linked to current detection j
  f_in(j)        a trajectory starts at current detection j
  f_out(i)       a trajectory ends at previous object i
  f_det_prev(i)  previous object i is a true positive
  f_det_curr(j)  current detection j is a true positive

subject to  f_det_curr(j) = sum_i f_link(i, j) + f_in(j)   for every j
            f_det_prev(i) = sum_j f_link(i, j) + f_out(i)  for every i

maximizing  sum s_in*f_in + sum s_link*f_link + sum s_det_prev*f_det_prev
          + sum s_det_curr*f_det_curr + sum s_out*f_out.

The constraints force the links to form a bipartite matching, so the program
reduces exactly to max-weight matching with node prizes: an unmatched previous
node i is worth u(i) = max(0, s_det_prev(i) + s_out(i)), an unmatched current
node j is worth v(j) = max(0, s_det_curr(j) + s_in(j)), and a matched pair is
worth w(i, j) = s_det_prev(i) + s_det_curr(j) + s_link(i, j).  Matching on the
adjusted gains w' = w - u - v (keeping only w' > 0 edges) is optimal and
polynomial, so no external MIP solver is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .matching import positive_matching
from .scoring import ScoreSet

# Above this many free flags the brute-force enumerator refuses to run, and
# solve_exact skips its canonical tie-break refinement (ties between distinct
# optimal solutions are then broken by the matching's deterministic scan).
BRUTEFORCE_FLAG_LIMIT = 25


@dataclass(frozen=True)
class AssociationProblem:
    scores: ScoreSet


@dataclass
class AssociationSolution:
    """Binary flow flags plus the objective they achieve."""

    f_in: np.ndarray
    f_out: np.ndarray
    f_det_prev: np.ndarray
    f_det_curr: np.ndarray
    f_link: np.ndarray
    objective: float

    def link_pairs(self) -> list[tuple[int, int]]:
        return [(int(i), int(j)) for i, j in np.argwhere(self.f_link == 1)]

    def flag_vector(self) -> tuple[int, ...]:
        """Row-major f_link, then f_in, then f_out; the tie-break sort key."""
        return tuple(
            int(x)
            for x in np.concatenate(
                [self.f_link.reshape(-1), self.f_in, self.f_out]
            )
        )


def _as_flags(values, shape) -> np.ndarray:
    arr = np.asarray(values, dtype=np.int64).reshape(shape)
    return arr


def make_solution(scores: ScoreSet, f_link, f_in, f_out) -> AssociationSolution:
    """Assemble a solution from the free flags; f_det follows from the constraints."""
    n, m = scores.n_prev, scores.n_curr
    f_link = _as_flags(f_link, (n, m))
    f_in = _as_flags(f_in, (m,))
    f_out = _as_flags(f_out, (n,))
    sol = AssociationSolution(
        f_in=f_in,
        f_out=f_out,
        f_det_prev=f_link.sum(axis=1) + f_out,
        f_det_curr=f_link.sum(axis=0) + f_in,
        f_link=f_link,
        objective=0.0,
    )
    sol.objective = objective_value(AssociationProblem(scores), sol)
    return sol


def objective_value(problem: AssociationProblem, sol: AssociationSolution) -> float:
    """Exact objective of a solution.

    Uses math.fsum over every active term, so the result is the correctly
    rounded true sum regardless of term order; two solutions with equal
    mathematical objectives always compare equal.
    """
    s = problem.scores
    n, m = s.n_prev, s.n_curr
    if (
        sol.f_in.shape != (m,)
        or sol.f_out.shape != (n,)
        or sol.f_det_prev.shape != (n,)
        or sol.f_det_curr.shape != (m,)
        or sol.f_link.shape != (n, m)
    ):
        raise ValueError("solution shape does not match the score set")
    terms = []
    terms.extend(s.s_in[j] for j in range(m) if sol.f_in[j])
    terms.extend(
        s.s_link[i, j] for i in range(n) for j in range(m) if sol.f_link[i, j]
    )
    terms.extend(s.s_det_prev[i] for i in range(n) if sol.f_det_prev[i])
    terms.extend(s.s_det_curr[j] for j in range(m) if sol.f_det_curr[j])
    terms.extend(s.s_out[i] for i in range(n) if sol.f_out[i])
    return math.fsum(terms)


def check_feasible(problem: AssociationProblem, sol: AssociationSolution) -> bool:
    """True iff all flags are binary and both constraint families hold exactly."""
    arrays = (sol.f_in, sol.f_out, sol.f_det_prev, sol.f_det_curr, sol.f_link)
    if any(not np.isin(a, (0, 1)).all() for a in arrays):
        return False
    curr_ok = np.array_equal(sol.f_det_curr, sol.f_link.sum(axis=0) + sol.f_in)
    prev_ok = np.array_equal(sol.f_det_prev, sol.f_link.sum(axis=1) + sol.f_out)
    return bool(curr_ok and prev_ok)


def _node_gains(scores: ScoreSet):
    u = np.maximum(0.0, scores.s_det_prev + scores.s_out)
    v = np.maximum(0.0, scores.s_det_curr + scores.s_in)
    w = scores.s_det_prev[:, None] + scores.s_det_curr[None, :] + scores.s_link
    return u, v, w - u[:, None] - v[None, :]


def _lex_refine(adjusted: np.ndarray, target: float) -> list[tuple[int, int]]:
    """Lexicographically smallest optimal matching on the adjusted gains.

    Scans the f_link positions in row-major order; a position is fixed to 0
    whenever some optimal matching avoids it (checked by re-solving with the
    cell banned), otherwise it is forced into the matching.  Greedy first-fit
    zeroing yields the lexicographically smallest flag vector among optima.
    """
    gain = adjusted.copy()
    n, m = gain.shape
    forced: list[tuple[int, int]] = []
    forced_gain: list[float] = []
    free_rows = list(range(n))
    free_cols = list(range(m))

    def best_with(g: np.ndarray) -> float:
        sub = g[np.ix_(free_rows, free_cols)]
        pairs = positive_matching(sub)
        total = [g[free_rows[i], free_cols[j]] for i, j in pairs]
        return math.fsum(sorted(forced_gain + total))

    for i in range(n):
        for j in range(m):
            if adjusted[i, j] <= 0.0:
                continue
            if i not in free_rows or j not in free_cols:
                continue
            banned = gain.copy()
            banned[i, j] = 0.0
            if best_with(banned) == target:
                gain = banned
            else:
                forced.append((i, j))
                forced_gain.append(float(gain[i, j]))
                free_rows.remove(i)
                free_cols.remove(j)
    return forced


def solve_exact(problem: AssociationProblem) -> AssociationSolution:
    """Feasible solution maximizing the objective.

    Ties between equally scoring solutions resolve to the lexicographically
    smallest flag vector (f_link row-major, then f_in, then f_out); for
    problems above BRUTEFORCE_FLAG_LIMIT free flags the tie-break falls back
    to the matching's deterministic scan order.
    """
    s = problem.scores
    n, m = s.n_prev, s.n_curr
    u, v, adjusted = _node_gains(s)
    pairs = positive_matching(adjusted)
    if n * m + n + m <= BRUTEFORCE_FLAG_LIMIT and pairs:
        target = math.fsum(sorted(adjusted[i, j] for i, j in pairs))
        pairs = _lex_refine(adjusted, target)

    f_link = np.zeros((n, m), dtype=np.int64)
    for i, j in pairs:
        f_link[i, j] = 1
    matched_prev = f_link.sum(axis=1) > 0
    matched_curr = f_link.sum(axis=0) > 0
    # Unmatched nodes activate only when strictly profitable, so exact zero
    # prizes stay inactive (the lexicographically smaller choice).
    f_out = ((~matched_prev) & (s.s_det_prev + s.s_out > 0.0)).astype(np.int64)
    f_in = ((~matched_curr) & (s.s_det_curr + s.s_in > 0.0)).astype(np.int64)
    return make_solution(s, f_link, f_in, f_out)


@lru_cache(maxsize=64)
def _link_patterns(n: int, m: int) -> np.ndarray:
    """All binary n x m link matrices with row and column sums <= 1.

    Any pattern violating those sums is infeasible for every choice of the
    remaining flags, because f_det would have to exceed 1.
    """
    total = n * m
    if total == 0:
        return np.zeros((1, n, m), dtype=np.int64)
    ints = np.arange(2 ** total, dtype=np.int64)
    bits = (ints[:, None] >> np.arange(total, dtype=np.int64)) & 1
    mats = bits.reshape(-1, n, m)
    ok = (mats.sum(axis=2) <= 1).all(axis=1) & (mats.sum(axis=1) <= 1).all(axis=1)
    return mats[ok]


_ENUM_CHUNK = 1 << 12


def _bits_range(width: int, lo: int, hi: int) -> np.ndarray:
    """Bit patterns of the integers [lo, hi), one row per integer."""
    if width == 0:
        return np.zeros((hi - lo, 0), dtype=np.int64)
    ints = np.arange(lo, hi, dtype=np.int64)
    return (ints[:, None] >> np.arange(width, dtype=np.int64)) & 1


def solve_bruteforce(problem: AssociationProblem) -> AssociationSolution:
    """Exhaustive oracle: enumerate every assignment of the free flags.

    f_det_prev/f_det_curr are determined by the constraints, so the free flags
    are f_link, f_in and f_out; infeasible combinations are filtered out and
    the maximum is returned under the same lexicographic tie-break as
    solve_exact.  Refuses problems with more than BRUTEFORCE_FLAG_LIMIT flags.
    The f_in/f_out axes are enumerated in chunks to bound memory.
    """
    s = problem.scores
    n, m = s.n_prev, s.n_curr
    if n * m + n + m > BRUTEFORCE_FLAG_LIMIT:
        raise ValueError(
            f"instance has {n * m + n + m} free flags, "
            f"brute force is limited to {BRUTEFORCE_FLAG_LIMIT}"
        )
    links = _link_patterns(n, m)  # (K, n, m)
    linked_prev = links.sum(axis=2)  # (K, n)
    linked_curr = links.sum(axis=1)  # (K, m)
    base = (
        (links * s.s_link[None, :, :]).sum(axis=(1, 2))
        + linked_prev @ s.s_det_prev
        + linked_curr @ s.s_det_curr
    )  # (K,)

    best = -np.inf
    best_key = None
    best_combo = None
    for alo in range(0, 2 ** m, _ENUM_CHUNK):
        in_bits = _bits_range(m, alo, min(alo + _ENUM_CHUNK, 2 ** m))
        in_gain = in_bits @ (s.s_in + s.s_det_curr)  # (A,)
        # f_in may only fire on detections that are not linked; same for f_out.
        in_ok = ~((in_bits[None, :, :] & (linked_curr[:, None, :] > 0)).any(axis=2))
        for blo in range(0, 2 ** n, _ENUM_CHUNK):
            out_bits = _bits_range(n, blo, min(blo + _ENUM_CHUNK, 2 ** n))
            out_gain = out_bits @ (s.s_out + s.s_det_prev)  # (B,)
            out_ok = ~((out_bits[None, :, :] & (linked_prev[:, None, :] > 0)).any(axis=2))

            obj = base[:, None, None] + in_gain[None, :, None] + out_gain[None, None, :]
            feasible = in_ok[:, :, None] & out_ok[:, None, :]
            obj = np.where(feasible, obj, -np.inf)
            local = obj.max()
            if local == -np.inf or local < best:
                continue
            combos = [
                (links[k], in_bits[a], out_bits[b])
                for k, a, b in np.argwhere(obj == local)
            ]
            combo = min(
                combos,
                key=lambda c: (tuple(c[0].reshape(-1)), tuple(c[1]), tuple(c[2])),
            )
            key = (tuple(combo[0].reshape(-1)), tuple(combo[1]), tuple(combo[2]))
            if local > best or key < best_key:
                best, best_key, best_combo = local, key, combo
    return make_solution(s, *best_combo)
