"""Stability algorithms and exact desk-scale optimization over matchings.

The solvers work on both SR and SM instances where the notion makes sense.
NP-hard objectives (egalitarian stable matching, minimum blocking pairs) are
solved exactly by enumeration / branch-and-bound, which is entirely feasible
at the desk scale this package targets; size caps keep the exponential parts
honest.  Positions are 1-based everywhere, matching the matrix conventions.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable, Optional

import networkx as nx
import numpy as np
from scipy.optimize import linear_sum_assignment

from .instances import Instance, InstanceError, Matching, SMInstance, SRInstance


@dataclass(frozen=True)
class BlockingReport:
    matching: Matching
    blocking: tuple[tuple[int, int], ...]

    @property
    def count(self) -> int:
        return len(self.blocking)


@dataclass
class SolveResult:
    objective: str
    matching: Optional[Matching]
    value: Optional[float]
    nodes: int = 0
    millis: float = 0.0
    status: str = "optimal"  # optimal | infeasible | bounds
    bounds: Optional[tuple[int, int]] = None


def _validate_matching(inst: Instance, matching: Matching) -> None:
    num = inst.num_agents
    for a, b in matching.pairs:
        if not (0 <= a < num and 0 <= b < num):
            raise InstanceError(f"matching references unknown agent in ({a}, {b})")
        if isinstance(inst, SMInstance) and (a < inst.n) == (b < inst.n):
            raise InstanceError(f"SM matching pair ({a}, {b}) is not man-woman")


def _blocks(pos, partner, a: int, b: int) -> bool:
    pa = partner.get(a)
    pb = partner.get(b)
    return ((pa is None or pos[a][b] < pos[a][pa])
            and (pb is None or pos[b][a] < pos[b][pb]))


def blocking_pairs(inst: Instance, matching: Matching) -> BlockingReport:
    """Enumerate every pair that prefers each other to its current situation."""
    _validate_matching(inst, matching)
    pos = inst.positions
    partner = matching.partner
    found = []
    if isinstance(inst, SRInstance):
        n = inst.num_agents
        pairs: Iterable[tuple[int, int]] = ((a, b) for a in range(n)
                                            for b in range(a + 1, n))
    else:
        n = inst.n
        pairs = ((m, w) for m in range(n) for w in range(n, 2 * n))
    for a, b in pairs:
        if _blocks(pos, partner, a, b):
            found.append((a, b))
    return BlockingReport(matching, tuple(found))


def is_stable(inst: Instance, matching: Matching) -> bool:
    return blocking_pairs(inst, matching).count == 0


# ---------------------------------------------------------------------------
# Irving's stable roommates algorithm
# ---------------------------------------------------------------------------

class _Table:
    """Mutable preference table with symmetric pair deletion.

    Keeps, per agent, head/tail cursors into the original ranking so that
    first/second/last lookups skip deleted entries lazily.
    """

    def __init__(self, inst: SRInstance):
        self.pref = inst.prefs
        n = inst.num_agents
        self.rank = [{b: i for i, b in enumerate(row)} for row in inst.prefs]
        self.alive = [[True] * n for _ in range(n)]
        self.count = [n - 1] * n
        self.head = [0] * n
        self.tail = [n - 2] * n

    def remove(self, x: int, y: int) -> None:
        if self.alive[x][y]:
            self.alive[x][y] = self.alive[y][x] = False
            self.count[x] -= 1
            self.count[y] -= 1

    def first(self, a: int) -> int:
        row = self.pref[a]
        while not self.alive[a][row[self.head[a]]]:
            self.head[a] += 1
        return row[self.head[a]]

    def last(self, a: int) -> int:
        row = self.pref[a]
        while not self.alive[a][row[self.tail[a]]]:
            self.tail[a] -= 1
        return row[self.tail[a]]

    def second(self, a: int) -> int:
        row = self.pref[a]
        self.first(a)
        for i in range(self.head[a] + 1, len(row)):
            if self.alive[a][row[i]]:
                return row[i]
        raise InstanceError("second() on a singleton list")

    def truncate_after(self, y: int, x: int) -> None:
        """Delete from y's list everyone y likes strictly less than x."""
        row = self.pref[y]
        for i in range(self.rank[y][x] + 1, len(row)):
            if self.alive[y][row[i]]:
                self.remove(y, row[i])


def irving_stable_matching(inst: SRInstance) -> Optional[Matching]:
    """The classical two-phase algorithm: a stable matching, or None if none exists.

    Phase 1 runs the proposal round until everyone's proposal is held, then
    truncates each list below the held proposer.  Phase 2 repeatedly finds a
    rotation (the cycle of the second-choice / last-holder walk) and
    eliminates it.  An emptied list at any point certifies unsolvability.
    """
    n = inst.num_agents
    if n % 2 != 0:
        raise InstanceError("stable matchings are computed for even agent counts")
    table = _Table(inst)
    held_by: list[Optional[int]] = [None] * n

    # Phase 1: proposals.
    stack = list(range(n - 1, -1, -1))
    while stack:
        x = stack.pop()
        while True:
            if table.count[x] == 0:
                return None
            y = table.first(x)
            holder = held_by[y]
            if holder is None:
                held_by[y] = x
                break
            if table.rank[y][x] < table.rank[y][holder]:
                held_by[y] = x
                table.remove(holder, y)
                stack.append(holder)
                break
            table.remove(x, y)

    for y in range(n):
        table.truncate_after(y, held_by[y])

    # Phase 2: rotation elimination.
    while True:
        if any(c == 0 for c in table.count):
            return None
        start = next((a for a in range(n) if table.count[a] > 1), None)
        if start is None:
            return Matching.of((a, table.first(a)) for a in range(n))
        seen: dict[int, int] = {}
        seq: list[int] = []
        cur = start
        while cur not in seen:
            seen[cur] = len(seq)
            seq.append(cur)
            cur = table.last(table.second(cur))
        cycle = seq[seen[cur]:]
        for x, y in [(x, table.second(x)) for x in cycle]:
            table.truncate_after(y, x)


# ---------------------------------------------------------------------------
# Gale-Shapley for stable marriage
# ---------------------------------------------------------------------------

def gale_shapley(inst: SMInstance, proposing: str = "men") -> Matching:
    """Deferred acceptance; the proposing side gets its optimal stable partners."""
    if proposing not in ("men", "women"):
        raise InstanceError("proposing side must be 'men' or 'women'")
    n = inst.n
    if proposing == "men":
        proposers = list(range(n))
        prop_prefs = inst.men_prefs
    else:
        proposers = list(range(n, 2 * n))
        prop_prefs = inst.women_prefs
    pos = inst.positions
    engaged: dict[int, int] = {}  # receiver -> proposer
    next_choice = {p: 0 for p in proposers}
    free = list(reversed(proposers))
    while free:
        p = free.pop()
        r = prop_prefs[p % n][next_choice[p]]
        next_choice[p] += 1
        current = engaged.get(r)
        if current is None:
            engaged[r] = p
        elif pos[r][p] < pos[r][current]:
            engaged[r] = p
            free.append(current)
        else:
            free.append(p)
    return Matching.of(engaged.items())


# ---------------------------------------------------------------------------
# Matching objectives
# ---------------------------------------------------------------------------

def summed_rank(inst: Instance, matching: Matching) -> int:
    """Sum over matched agents of the 1-based rank of their partner."""
    pos = inst.positions
    return sum(pos[a][b] + pos[b][a] for a, b in matching.pairs)


def max_rank(inst: Instance, matching: Matching) -> int:
    pos = inst.positions
    return max(max(pos[a][b], pos[b][a]) for a, b in matching.pairs)


def avg_blocking_pairs_random(inst: Instance, samples: int = 100, seed: int = 0) -> float:
    """Mean blocking-pair count over uniform random perfect matchings.

    SR matchings pair a uniformly random agent permutation consecutively
    (exchangeability makes that uniform over perfect matchings); SM matchings
    use a uniformly random side bijection.  Deterministic in the seed.
    """
    if samples < 1:
        raise InstanceError("need at least one sample")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    total = 0
    for _ in range(samples):
        if isinstance(inst, SRInstance):
            perm = rng.permutation(inst.num_agents)
            m = Matching.of((int(perm[i]), int(perm[i + 1]))
                            for i in range(0, inst.num_agents, 2))
        else:
            perm = rng.permutation(inst.n)
            m = Matching.of((i, inst.n + int(perm[i])) for i in range(inst.n))
        total += blocking_pairs(inst, m).count
    return total / samples


def min_weight_perfect_matching(inst: Instance) -> tuple[Matching, int]:
    """Perfect matching minimizing the summed rank agents give their partner.

    SR instances need an exact general-graph solver (blossom, via networkx);
    the SM case is a straight assignment problem.
    """
    if isinstance(inst, SRInstance):
        n = inst.num_agents
        if n % 2 != 0:
            raise InstanceError("perfect matchings need an even agent count")
        pos = inst.positions
        graph = nx.Graph()
        graph.add_nodes_from(range(n))
        for a in range(n):
            for b in range(a + 1, n):
                graph.add_edge(a, b, weight=pos[a][b] + pos[b][a])
        pairs = nx.min_weight_matching(graph)
        matching = Matching.of(pairs)
    else:
        n = inst.n
        pos = inst.positions
        cost = np.empty((n, n), dtype=np.int64)
        for m in range(n):
            for w in range(n):
                cost[m, w] = pos[m][n + w] + pos[n + w][m]
        rows, cols = linear_sum_assignment(cost)
        matching = Matching.of((int(r), inst.n + int(c)) for r, c in zip(rows, cols))
    return matching, summed_rank(inst, matching)


# ---------------------------------------------------------------------------
# Enumerating the stable set
# ---------------------------------------------------------------------------

@dataclass
class EnumerationResult:
    matchings: list[Matching]
    truncated: bool
    nodes: int


def enumerate_stable_matchings(inst: Instance, cap: Optional[int] = None,
                               agent_limit: int = 20) -> EnumerationResult:
    """All stable matchings, by backtracking with blocking-pair pruning.

    Agents are matched in ascending-id order, candidate partners tried in the
    current agent's preference order; a branch dies as soon as the decided
    pairs contain a blocking pair (every pair is checked once both ends are
    decided, so surviving complete matchings are exactly the stable ones).
    """
    num = inst.num_agents
    if num > agent_limit:
        raise InstanceError(f"{num} agents exceeds the enumeration limit {agent_limit}")
    if isinstance(inst, SRInstance) and num % 2 != 0:
        raise InstanceError("stable matchings are computed for even agent counts")
    pos = inst.positions
    sr = isinstance(inst, SRInstance)
    drivers = range(num) if sr else range(inst.n)
    results: list[Matching] = []
    partner: dict[int, int] = {}
    state = {"nodes": 0, "truncated": False}

    def compatible(a: int, b: int) -> bool:
        for x, other in ((a, b), (b, a)):
            px = pos[x]
            limit = px[other]
            for c, pc in partner.items():
                if c == a or c == b:
                    continue
                if c in px and px[c] < limit and pos[c][x] < pos[c][pc]:
                    return False
        return True

    def extend(idx: int) -> None:
        if state["truncated"]:
            return
        while idx < len(drivers) and drivers[idx] in partner:
            idx += 1
        if idx == len(drivers):
            results.append(Matching.of(
                (a, b) for a, b in partner.items() if a < b))
            if cap is not None and len(results) >= cap:
                state["truncated"] = True
            return
        a = drivers[idx]
        candidates = inst.prefs[a] if sr else inst.men_prefs[a]
        for b in candidates:
            if b in partner:
                continue
            state["nodes"] += 1
            if not compatible(a, b):
                continue
            partner[a] = b
            partner[b] = a
            extend(idx + 1)
            del partner[a], partner[b]
            if state["truncated"]:
                return

    extend(0)
    for m in results:
        report = blocking_pairs(inst, m)
        if report.count:
            raise AssertionError("enumeration produced an unstable matching")
    return EnumerationResult(results, state["truncated"], state["nodes"])


OBJECTIVES = ("min_summed_rank", "max_summed_rank", "min_regret")


def optimal_stable_matching(inst: Instance, objective: str) -> SolveResult:
    """Optimize an objective over the full stable set (exact, desk scale)."""
    if objective not in OBJECTIVES:
        raise InstanceError(f"unknown objective {objective!r}")
    start = time.perf_counter()
    enum = enumerate_stable_matchings(inst)
    millis = (time.perf_counter() - start) * 1000
    if not enum.matchings:
        return SolveResult(objective, None, None, enum.nodes, millis, "infeasible")
    if objective == "min_regret":
        score = lambda m: max_rank(inst, m)
        pick = min
    elif objective == "min_summed_rank":
        score = lambda m: summed_rank(inst, m)
        pick = min
    else:
        score = lambda m: summed_rank(inst, m)
        pick = max
    best = pick(enum.matchings, key=lambda m: (score(m), m.sorted_pairs()))
    return SolveResult(objective, best, score(best), enum.nodes, millis)


# ---------------------------------------------------------------------------
# Minimum blocking pairs over perfect matchings
# ---------------------------------------------------------------------------

def min_blocking_pairs_matching(inst: Instance, limit_k: int = 5,
                                exact_agent_limit: int = 16) -> SolveResult:
    """Perfect matching with the globally minimum number of blocking pairs.

    Iterative deepening on the allowed count k, with branch-and-bound over
    partner assignments (blocking pairs among decided agents only ever grow).
    Instances above ``exact_agent_limit`` agents are probed up to ``limit_k``
    only; if that fails, a (lower, upper) bound interval is reported instead
    of an exact value.
    """
    start = time.perf_counter()
    num = inst.num_agents
    if isinstance(inst, SRInstance) and num % 2 != 0:
        raise InstanceError("perfect matchings need an even agent count")
    heuristic, _ = min_weight_perfect_matching(inst)
    upper = blocking_pairs(inst, heuristic).count
    k_cap = upper if num <= exact_agent_limit else min(limit_k, upper)
    pos = inst.positions
    sr = isinstance(inst, SRInstance)
    drivers = range(num) if sr else range(inst.n)
    nodes = 0

    def search(budget: int) -> Optional[Matching]:
        nonlocal nodes
        partner: dict[int, int] = {}

        def added_blocks(a: int, b: int) -> int:
            fresh = 0
            for x, other in ((a, b), (b, a)):
                px = pos[x]
                limit = px[other]
                for c, pc in partner.items():
                    if c == a or c == b:
                        continue
                    if c in px and px[c] < limit and pos[c][x] < pos[c][pc]:
                        fresh += 1
            return fresh

        def extend(idx: int, used: int) -> Optional[Matching]:
            nonlocal nodes
            while idx < len(drivers) and drivers[idx] in partner:
                idx += 1
            if idx == len(drivers):
                return Matching.of((a, b) for a, b in partner.items() if a < b)
            a = drivers[idx]
            candidates = inst.prefs[a] if sr else inst.men_prefs[a]
            for b in candidates:
                if b in partner:
                    continue
                nodes += 1
                cost = added_blocks(a, b)
                if used + cost > budget:
                    continue
                partner[a] = b
                partner[b] = a
                found = extend(idx + 1, used + cost)
                del partner[a], partner[b]
                if found is not None:
                    return found
            return None

        return extend(0, 0)

    for k in range(0, k_cap + 1):
        found = search(k)
        if found is not None:
            millis = (time.perf_counter() - start) * 1000
            return SolveResult("min_blocking_pairs", found, k, nodes, millis)
    millis = (time.perf_counter() - start) * 1000
    return SolveResult("min_blocking_pairs", heuristic, None, nodes, millis,
                       status="bounds", bounds=(k_cap + 1, upper))
