"""Mutual attraction matrices and distance measures between instances.

The mutual attraction vector of an agent ``a`` records, entry by entry, where
``a`` sits in the preferences of the agents ``a`` ranks 1st, 2nd, and so on.
Stacking these vectors gives the instance's mutual attraction matrix, and the
mutual attraction distance (MAD) between two instances is the minimum, over
bijections between their agent sets, of the summed L1 distance of matched
rows.  That minimum is an assignment problem, solved exactly here.

All positions are 1-based: entries of a matrix for ``N`` agents lie in
``[1, N-1]`` (``[1, n]`` per side for SM).
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .instances import InstanceError, Pref, SMInstance, SRInstance


class MAPair(NamedTuple):
    """The per-side mutual attraction matrices of an SM instance."""

    men: np.ndarray
    women: np.ndarray


def mutual_attraction_matrix(inst: SRInstance) -> np.ndarray:
    """Row ``a``, entry ``i``: position of ``a`` in the prefs of ``a``'s i-th choice."""
    n = inst.num_agents
    out = np.empty((n, n - 1), dtype=np.int64)
    pos = inst.positions
    for a, row in enumerate(inst.prefs):
        for i, other in enumerate(row):
            out[a, i] = pos[other][a]
    return out


def mutual_attraction_pair(inst: SMInstance) -> MAPair:
    n = inst.n
    men = np.empty((n, n), dtype=np.int64)
    women = np.empty((n, n), dtype=np.int64)
    pos = inst.positions
    for a, row in enumerate(inst.men_prefs):
        for i, w in enumerate(row):
            men[a, i] = pos[w][a]
    for a, row in enumerate(inst.women_prefs):
        for i, m in enumerate(row):
            women[a, i] = pos[m][n + a]
    return MAPair(men, women)


def _row_l1_costs(m1: np.ndarray, m2: np.ndarray) -> np.ndarray:
    if m1.shape != m2.shape:
        raise InstanceError(f"matrix shapes differ: {m1.shape} vs {m2.shape}")
    return np.abs(m1[:, None, :].astype(np.int64)
                  - m2[None, :, :].astype(np.int64)).sum(axis=2)


def mad_distance(m1: np.ndarray, m2: np.ndarray) -> int:
    """Exact mutual attraction distance between two equal-shape matrices.

    Minimizes the summed L1 row distance over all row bijections via an exact
    O(n^3) assignment solve; costs are integers, so the optimum is an integer
    and independent of tie-breaking.
    """
    costs = _row_l1_costs(np.asarray(m1), np.asarray(m2))
    rows, cols = linear_sum_assignment(costs)
    return int(costs[rows, cols].sum())


def mad_distance_sm(p1: MAPair, p2: MAPair) -> int:
    """MAD between SM instances: sides may be matched straight or crossed."""
    if p1.men.shape != p2.men.shape:
        raise InstanceError("SM matrix pairs have different sizes")
    straight = mad_distance(p1.men, p2.men) + mad_distance(p1.women, p2.women)
    crossed = mad_distance(p1.men, p2.women) + mad_distance(p1.women, p2.men)
    return min(straight, crossed)


def max_mad(two_n: int) -> int:
    """Largest possible MAD between instances on ``two_n`` agents: 4(n-1)n^2."""
    if two_n < 4 or two_n % 2 != 0:
        raise InstanceError("max_mad needs an even agent count >= 4")
    n = two_n // 2
    return 4 * (n - 1) * n * n


def normalized_mad(d: int, two_n: int) -> float:
    """Divide a raw distance by the diameter of the space on ``two_n`` agents."""
    return d / max_mad(two_n)


# ---------------------------------------------------------------------------
# Distances between single preference orders
# ---------------------------------------------------------------------------

def _positions_in(order: Pref) -> dict[int, int]:
    return {x: i for i, x in enumerate(order)}


def swap_distance(o1: Pref, o2: Pref) -> int:
    """Kendall-tau distance: the number of pairs the two orders rank oppositely."""
    pos2 = _positions_in(o2)
    if len(o1) != len(o2) or set(o1) != set(pos2):
        raise InstanceError("orders must rank the same element set")
    seq = [pos2[x] for x in o1]
    inversions = 0
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                inversions += 1
    return inversions


def spearman_distance(o1: Pref, o2: Pref) -> int:
    """Spearman footrule: summed absolute position displacement."""
    pos2 = _positions_in(o2)
    if len(o1) != len(o2) or set(o1) != set(pos2):
        raise InstanceError("orders must rank the same element set")
    return sum(abs(i - pos2[x]) for i, x in enumerate(o1))


# ---------------------------------------------------------------------------
# Exhaustive lifted distances
# ---------------------------------------------------------------------------

HARD_AGENT_LIMIT = 12


def _position_table(inst: SRInstance) -> np.ndarray:
    """pos[a, b] = 1-based position of b in a's ranking (0 on the diagonal)."""
    n = inst.num_agents
    pos = np.zeros((n, n), dtype=np.int64)
    for a, row in enumerate(inst.prefs):
        for i, b in enumerate(row):
            pos[a, b] = i + 1
    return pos


def lifted_distance_exact(i1: SRInstance, i2: SRInstance, metric: str = "spear",
                          agent_limit: int = 8) -> int:
    """Lift an order distance to instances: min over all agent bijections of the
    summed per-agent distance.  Exhaustive over all N! bijections, so this is
    for small instances only (no polynomial algorithm is known)."""
    n = i1.num_agents
    if i2.num_agents != n:
        raise InstanceError("lifted distance needs equal agent counts")
    if n > min(agent_limit, HARD_AGENT_LIMIT):
        raise InstanceError(f"{n} agents exceeds the exhaustive-search limit "
                            f"({min(agent_limit, HARD_AGENT_LIMIT)})")
    if metric == "spear":
        return _lifted_spear(i1, i2)
    if metric == "swap":
        return _lifted_swap(i1, i2)
    raise InstanceError(f"unknown metric {metric!r}")


@lru_cache(maxsize=4)
def _bijection_gather(n: int):
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    a_idx, b_idx = zip(*[(a, b) for a in range(n) for b in range(n) if a != b])
    a_idx = np.array(a_idx)
    b_idx = np.array(b_idx)
    return perms[:, a_idx], perms[:, b_idx], a_idx, b_idx


def _lifted_spear(i1: SRInstance, i2: SRInstance) -> int:
    n = i1.num_agents
    p1 = _position_table(i1)
    p2 = _position_table(i2)
    # For bijection s, the distance is sum over a != b of |p1[a,b] - p2[s(a),s(b)]|.
    perm_a, perm_b, a_idx, b_idx = _bijection_gather(n)
    diff = np.abs(p1[a_idx, b_idx][None, :] - p2[perm_a, perm_b])
    return int(diff.sum(axis=1).min())


def _lifted_swap(i1: SRInstance, i2: SRInstance) -> int:
    n = i1.num_agents
    best = None
    pos2 = [_positions_in(row) for row in i2.prefs]
    for perm in itertools.permutations(range(n)):
        total = 0
        for a, row in enumerate(i1.prefs):
            target = pos2[perm[a]]
            seq = [target[perm[b]] for b in row]
            for i in range(len(seq)):
                si = seq[i]
                for j in range(i + 1, len(seq)):
                    if si > seq[j]:
                        total += 1
            if best is not None and total >= best:
                break
        if best is None or total < best:
            best = total
    return best


# ---------------------------------------------------------------------------
# Positionwise distance
# ---------------------------------------------------------------------------

def positionwise_matrix(inst: SRInstance) -> np.ndarray:
    """Row ``a``, entry ``j``: how many other agents rank ``a`` in position j+1."""
    n = inst.num_agents
    out = np.zeros((n, n - 1), dtype=np.int64)
    for a, row in enumerate(inst.prefs):
        for i, b in enumerate(row):
            out[b, i] += 1
    return out


def positionwise_from_attraction(m: np.ndarray) -> np.ndarray:
    """The position-count rows are the row-histograms of a mutual attraction matrix."""
    m = np.asarray(m)
    cols = m.shape[1]
    out = np.zeros((m.shape[0], cols), dtype=np.int64)
    for a, row in enumerate(m):
        for v in row:
            out[a, v - 1] += 1
    return out


def positionwise_distance(i1: SRInstance, i2: SRInstance) -> int:
    """Min over agent bijections of the summed L1 distance of position-count rows."""
    if i1.num_agents != i2.num_agents:
        raise InstanceError("positionwise distance needs equal agent counts")
    return positionwise_distance_matrices(positionwise_matrix(i1),
                                          positionwise_matrix(i2))


def positionwise_distance_matrices(pw1: np.ndarray, pw2: np.ndarray) -> int:
    costs = _row_l1_costs(np.asarray(pw1), np.asarray(pw2))
    rows, cols = linear_sum_assignment(costs)
    return int(costs[rows, cols].sum())


# ---------------------------------------------------------------------------
# Scalar features of a matrix
# ---------------------------------------------------------------------------

def mutuality(m: np.ndarray) -> int:
    """Total difference between mutual evaluations: sum |M[a,i] - i| (1-based i).

    Zero iff every pair of agents ranks each other in the same position.
    """
    m = np.asarray(m, dtype=np.int64)
    cols = np.arange(1, m.shape[1] + 1, dtype=np.int64)
    return int(np.abs(m - cols).sum())


def rank_distortion(m: np.ndarray) -> int:
    """Per-agent disagreement about its quality: sum over ordered entry pairs
    of |M[a,i] - M[a,j]|.  Zero iff every row is constant."""
    m = np.asarray(m, dtype=np.int64)
    total = 0
    width = m.shape[1]
    coeff = 2 * np.arange(width, dtype=np.int64) - (width - 1)
    for row in m:
        total += int((np.sort(row) * coeff).sum())
    return 2 * total


def pearson_correlation(xs: Sequence[float], ys: Sequence[float]) -> float:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise InstanceError("correlation needs two equal-length sequences (>= 2)")
    xc = x - x.mean()
    yc = y - y.mean()
    denom = np.sqrt((xc * xc).sum() * (yc * yc).sum())
    if denom == 0:
        raise InstanceError("correlation undefined for zero-variance input")
    return float((xc * yc).sum() / denom)


def export_matrix_csv(m: np.ndarray) -> str:
    """One row per agent, comma-separated integers, no header."""
    return "\n".join(",".join(str(int(v)) for v in row) for row in np.asarray(m)) + "\n"


def parse_matrix_csv(text: str) -> np.ndarray:
    rows = [ln for ln in text.splitlines() if ln.strip()]
    return np.array([[int(tok) for tok in ln.split(",")] for ln in rows],
                    dtype=np.int64)
