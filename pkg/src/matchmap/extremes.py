"""The four extreme mutual attraction matrices and their realizations.

Four canonical matrices anchor the far corners of instance space:

* ``id`` (identity): everyone agrees on a single quality order of the agents.
  Realized exactly by master-list profiles, and by nothing else.
* ``ma`` (mutual agreement): every pair ranks each other in the same position.
  Realizations correspond to round-robin tournaments (1-factorizations of the
  complete graph); we build the classical circle-method schedule.
* ``md`` (mutual disagreement): every pair ranks each other in opposite
  positions.  Realized by cyclic-shift profiles (among others).
* ``ch`` (chaos): a modular-arithmetic matrix with no structural story; it
  sits near uniformly random instances on the map.  It is realizable exactly
  when 2n-1 is not divisible by 3, and then uniquely.

For SM instances the analogues are matrix *pairs*; ``ch`` has no SM analogue.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .attraction import MAPair
from .instances import InstanceError, Pref, SMInstance, SRInstance

SR_KINDS = ("id", "ma", "md", "ch")
SM_KINDS = ("id", "ma", "md")


class UnrealizableError(InstanceError):
    """Requested a realization that provably does not exist."""


def _check_kind(kind: str, kinds) -> None:
    if kind not in kinds:
        raise InstanceError(f"unknown extreme kind {kind!r}; expected one of {kinds}")


def _check_size(two_n: int) -> None:
    if two_n < 4 or two_n % 2 != 0:
        raise InstanceError("extreme matrices need an even agent count >= 4")


def chaos_realizable(two_n: int) -> bool:
    return (two_n - 1) % 3 != 0


def extreme_matrix(kind: str, two_n: int) -> np.ndarray:
    """The defining matrix, shape (2n, 2n-1), entries in [1, 2n-1].

    The matrix itself exists for every even size (it is used as a map anchor
    even where unrealizable); only :func:`realize_extreme` is size-restricted.
    """
    _check_kind(kind, SR_KINDS)
    _check_size(two_n)
    m = two_n - 1
    cols = np.arange(1, m + 1, dtype=np.int64)
    if kind == "ma":
        return np.tile(cols, (two_n, 1))
    if kind == "md":
        return np.tile(two_n - cols, (two_n, 1))
    if kind == "id":
        rows = np.arange(1, two_n + 1, dtype=np.int64)[:, None]
        return np.where(cols[None, :] >= rows, rows, rows - 1)
    # chaos: first row is 1..2n-1; row i > 1 walks i + n*j - n - 1 (mod 2n-1),
    # with residues represented in [1, 2n-1].
    n = two_n // 2
    out = np.empty((two_n, m), dtype=np.int64)
    out[0] = cols
    rows = np.arange(2, two_n + 1, dtype=np.int64)[:, None]
    out[1:] = (rows + n * cols[None, :] - n - 2) % m + 1
    return out


def realize_extreme(kind: str, two_n: int) -> SRInstance:
    """An SR instance whose mutual attraction matrix is ``extreme_matrix(kind, two_n)``."""
    _check_kind(kind, SR_KINDS)
    _check_size(two_n)
    if kind == "id":
        return master_list_instance(tuple(range(two_n)))
    if kind == "md":
        return cyclic_instance(two_n)
    if kind == "ma":
        return round_robin_instance(two_n)
    return _chaos_instance(two_n)


def master_list_instance(master: Pref) -> SRInstance:
    """Everyone ranks by the shared master list (with themselves deleted)."""
    return SRInstance(tuple(tuple(b for b in master if b != a)
                            for a in range(len(master))))


def cyclic_instance(two_n: int) -> SRInstance:
    """Agent i ranks i+1, i+2, ... cyclically; realizes mutual disagreement."""
    return SRInstance(tuple(tuple((a + k) % two_n for k in range(1, two_n))
                            for a in range(two_n)))


def round_robin_instance(two_n: int) -> SRInstance:
    """Circle-method round robin: agent 0 fixed, agents 1..2n-1 rotate.

    On day r (0-based), agent 0 meets 1 + (r mod 2n-1) and the remaining
    agents pair up symmetrically around that pivot.  Every agent ranks its
    day-r opponent in position r+1, which makes all evaluations mutual.
    """
    m = two_n - 1
    prefs = [[0] * m for _ in range(two_n)]
    for day in range(m):
        pairs = [(0, 1 + day % m)]
        pairs += [(1 + (day - k) % m, 1 + (day + k) % m) for k in range(1, m // 2 + 1)]
        for a, b in pairs:
            prefs[a][day] = b
            prefs[b][day] = a
    return SRInstance(tuple(tuple(row) for row in prefs))


def _chaos_instance(two_n: int) -> SRInstance:
    if not chaos_realizable(two_n):
        raise UnrealizableError(
            f"chaos matrix is not realizable for {two_n} agents (2n-1 divisible by 3)")
    c = extreme_matrix("ch", two_n)
    m = two_n - 1
    # In the (unique) realization, the partner of agent i at position j is the
    # agent i* whose row holds j in column c[i][j]; rows 2..2n contain each
    # value once per column, so i* is well defined.  The self-hit i* == i
    # happens exactly when c[i][j] == j and then the partner is agent 1.
    col_lookup = np.zeros((m + 1, m + 1), dtype=np.int64)  # [column j][value v] -> row
    for i in range(1, two_n):
        for j in range(1, m + 1):
            col_lookup[j][c[i, j - 1]] = i
    prefs = []
    for i in range(two_n):
        row = []
        for j in range(1, m + 1):
            partner = int(col_lookup[int(c[i, j - 1])][j])
            if partner == i:
                partner = 0
            row.append(partner)
        prefs.append(tuple(row))
    return SRInstance(tuple(prefs))


# ---------------------------------------------------------------------------
# Closed-form distances between the extremes
# ---------------------------------------------------------------------------

def closed_form_extreme_distance(x: str, y: str, n: int) -> int:
    """Exact MAD between two extreme matrices on 2n agents, in closed form.

    No exact closed form is available for the (id, ch) pair; requesting it
    raises (its distance is 8/3 n^3 up to an O(n^2) term, and it can always be
    computed directly via ``mad_distance``).
    """
    _check_kind(x, SR_KINDS)
    _check_kind(y, SR_KINDS)
    if n < 1:
        raise InstanceError("closed forms need n >= 1")
    pair = frozenset((x, y))
    if len(pair) == 1:
        return 0
    if pair in (frozenset(("id", "ma")), frozenset(("ma", "ch"))):
        value = Fraction(8, 3) * n**3 - 4 * n**2 + Fraction(4, 3) * n
    elif pair in (frozenset(("id", "md")), frozenset(("md", "ch"))):
        value = Fraction(8, 3) * n**3 - 2 * n**2 - Fraction(2, 3) * n
    elif pair == frozenset(("ma", "md")):
        value = Fraction(4 * (n - 1) * n**2)
    else:  # id-ch
        raise InstanceError("no exact closed form for the (id, ch) distance: "
                            "asymptotic only")
    assert value.denominator == 1
    return int(value)


def normalized_extreme_distance(x: str, y: str) -> Fraction:
    """Limit of (closed form) / (space diameter 4(n-1)n^2) as n grows."""
    _check_kind(x, SR_KINDS)
    _check_kind(y, SR_KINDS)
    if x == y:
        return Fraction(0)
    if frozenset((x, y)) == frozenset(("ma", "md")):
        return Fraction(1)
    return Fraction(2, 3)


# ---------------------------------------------------------------------------
# SM analogues: matrix pairs and realizations
# ---------------------------------------------------------------------------

def sm_extreme_pair(kind: str, n: int) -> MAPair:
    _check_kind(kind, SM_KINDS)
    if n < 1:
        raise InstanceError("SM extreme pairs need n >= 1")
    if kind == "id":
        side = np.tile(np.arange(1, n + 1, dtype=np.int64)[:, None], (1, n))
    elif kind == "ma":
        side = np.tile(np.arange(1, n + 1, dtype=np.int64), (n, 1))
    else:
        side = np.tile(np.arange(n, 0, -1, dtype=np.int64), (n, 1))
    return MAPair(side, side.copy())


def realize_sm_extreme(kind: str, n: int) -> SMInstance:
    """An SM instance whose attraction pair is ``sm_extreme_pair(kind, n)``."""
    _check_kind(kind, SM_KINDS)
    if n < 1:
        raise InstanceError("SM realizations need n >= 1")
    women = tuple(range(n, 2 * n))
    men = tuple(range(n))
    if kind == "id":
        # Common master lists on both sides.
        return SMInstance(tuple(women for _ in range(n)),
                          tuple(men for _ in range(n)))
    if kind == "ma":
        # Rotate the columns of the complete bipartite graph: on day j,
        # man i meets woman i+j (mod n), so positions agree on both sides.
        men_prefs = tuple(tuple(n + (i + j) % n for j in range(n)) for i in range(n))
        women_prefs = tuple(tuple((w - j) % n for j in range(n)) for w in range(n))
        return SMInstance(men_prefs, women_prefs)
    # Mutual disagreement: man i starts his list at woman i, woman i starts
    # her list one past man i; the offset makes every evaluation diametrical.
    men_prefs = tuple(tuple(n + (i + j) % n for j in range(n)) for i in range(n))
    women_prefs = tuple(tuple((w + 1 + j) % n for j in range(n)) for w in range(n))
    return SMInstance(men_prefs, women_prefs)
