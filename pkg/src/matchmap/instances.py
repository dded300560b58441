"""Core data model for stable roommates (SR) and stable marriage (SM) instances.

Agents are 0-based integers throughout, including in files.  An SR instance
over ``N`` agents gives every agent a strict, complete ranking of all other
agents.  An SM instance over ``n`` men and ``n`` women uses a single id space:
men are ``0..n-1``, women are ``n..2n-1``; every man ranks all women and every
woman ranks all men.

The instance file format (UTF-8, LF newlines) is::

    sr <num_agents>        or        sm <n>
    0: 1 2 3
    1: 0 2 3
    ...

one line per agent in id order, rankings most-preferred first.  Lines starting
with ``#`` are comments.  Serialization is canonical: no trailing spaces and a
single trailing newline, so parse/serialize round-trips byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence, Union

Pref = tuple[int, ...]


class InstanceError(ValueError):
    """A structurally invalid instance (bad ranking, bad sizes, bad mapping)."""


class InstanceParseError(InstanceError):
    """A malformed instance file; ``line`` is the 1-based offending line."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"{message} at line {line}"
        super().__init__(message)
        self.line = line


def _check_rankings(prefs: Sequence[Pref], owner_ids: Sequence[int],
                    expected: Sequence[frozenset[int]]) -> None:
    for owner, ranking, want in zip(owner_ids, prefs, expected):
        if owner in ranking:
            raise InstanceError(f"agent {owner} ranks itself")
        if len(set(ranking)) != len(ranking):
            raise InstanceError(f"agent {owner} has a duplicate in its ranking")
        if set(ranking) != want:
            raise InstanceError(f"agent {owner}'s ranking is not a permutation "
                                f"of the required agents")


@dataclass(frozen=True)
class SRInstance:
    """A stable roommates instance: one strict ranking of all others per agent.

    Instances are immutable and hashable; all operations on them are pure.
    Odd agent counts are representable (a few distance-level constructions
    need them) but are rejected by the file parser and by all generators and
    solvers, which work with even-sized instances only.
    """

    prefs: tuple[Pref, ...]

    def __post_init__(self):
        n = len(self.prefs)
        if n < 2:
            raise InstanceError("an SR instance needs at least 2 agents")
        everyone = frozenset(range(n))
        _check_rankings(self.prefs, range(n),
                        [everyone - {a} for a in range(n)])

    @property
    def num_agents(self) -> int:
        return len(self.prefs)

    @cached_property
    def positions(self) -> tuple[dict[int, int], ...]:
        """Per agent, a map partner -> 1-based position in that agent's ranking."""
        return tuple({b: i + 1 for i, b in enumerate(row)} for row in self.prefs)

    def position_of(self, agent: int, other: int) -> int:
        return self.positions[agent][other]


@dataclass(frozen=True)
class SMInstance:
    """A stable marriage instance with equal sides sharing one id space.

    ``men_prefs[i]`` is man ``i``'s ranking of the women ``n..2n-1``;
    ``women_prefs[j]`` is woman ``n+j``'s ranking of the men ``0..n-1``.
    """

    men_prefs: tuple[Pref, ...]
    women_prefs: tuple[Pref, ...]

    def __post_init__(self):
        n = len(self.men_prefs)
        if n < 1 or len(self.women_prefs) != n:
            raise InstanceError("SM instance sides must be equal and non-empty")
        women = frozenset(range(n, 2 * n))
        men = frozenset(range(n))
        _check_rankings(self.men_prefs, range(n), [women] * n)
        _check_rankings(self.women_prefs, range(n, 2 * n), [men] * n)

    @property
    def n(self) -> int:
        return len(self.men_prefs)

    @property
    def num_agents(self) -> int:
        return 2 * self.n

    @cached_property
    def positions(self) -> tuple[dict[int, int], ...]:
        """Map partner -> 1-based position, indexed by global agent id."""
        rows = self.men_prefs + self.women_prefs
        return tuple({b: i + 1 for i, b in enumerate(row)} for row in rows)

    def position_of(self, agent: int, other: int) -> int:
        return self.positions[agent][other]


Instance = Union[SRInstance, SMInstance]


@dataclass(frozen=True)
class Matching:
    """A set of disjoint unordered agent pairs."""

    pairs: frozenset[tuple[int, int]]

    def __post_init__(self):
        seen: set[int] = set()
        for a, b in self.pairs:
            if a >= b:
                raise InstanceError(f"pair ({a}, {b}) is not normalized")
            if a in seen or b in seen:
                raise InstanceError("matching pairs are not disjoint")
            seen.update((a, b))

    @classmethod
    def of(cls, pairs: Iterable[tuple[int, int]]) -> "Matching":
        return cls(frozenset((min(a, b), max(a, b)) for a, b in pairs))

    @cached_property
    def partner(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for a, b in self.pairs:
            out[a] = b
            out[b] = a
        return out

    def is_perfect(self, num_agents: int) -> bool:
        return len(self.partner) == num_agents

    def sorted_pairs(self) -> list[tuple[int, int]]:
        return sorted(self.pairs)


# ---------------------------------------------------------------------------
# File format
# ---------------------------------------------------------------------------

def parse_instance(text: str) -> Instance:
    """Parse an instance file; see the module docstring for the format.

    Raises :class:`InstanceParseError` (with the offending line number) on a
    malformed header, an odd SR agent count, a duplicate/missing/out-of-range
    agent in a ranking, or a self-ranking.
    """
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(text.splitlines())]
    rows = [(no, ln) for no, ln in lines if ln and not ln.startswith("#")]
    if not rows:
        raise InstanceParseError("empty instance file", 1)

    head_no, head = rows[0]
    parts = head.split()
    if len(parts) != 2 or parts[0] not in ("sr", "sm") or not parts[1].isdigit():
        raise InstanceParseError(f"malformed header {head!r}", head_no)
    kind, count = parts[0], int(parts[1])
    if count <= 0:
        raise InstanceParseError("agent count must be positive", head_no)
    if kind == "sr" and count % 2 != 0:
        raise InstanceParseError(f"odd SR agent count {count}", head_no)

    num_rows = count if kind == "sr" else 2 * count
    body = rows[1:]
    if len(body) != num_rows:
        raise InstanceParseError(
            f"expected {num_rows} agent lines, found {len(body)}", head_no)

    rankings: list[Pref] = []
    for expect_id, (no, ln) in enumerate(body):
        left, colon, right = ln.partition(":")
        if not colon:
            raise InstanceParseError(f"missing ':' in agent line {ln!r}", no)
        try:
            agent = int(left)
        except ValueError:
            raise InstanceParseError(f"bad agent id {left.strip()!r}", no) from None
        if agent != expect_id:
            raise InstanceParseError(
                f"agent lines out of order: expected {expect_id}, got {agent}", no)
        try:
            ranking = tuple(int(tok) for tok in right.split())
        except ValueError:
            raise InstanceParseError("non-integer entry in ranking", no) from None
        if agent in ranking:
            raise InstanceParseError("self-ranking", no)
        if len(set(ranking)) != len(ranking):
            raise InstanceParseError("duplicate agent in ranking", no)
        if kind == "sr":
            want = set(range(count)) - {agent}
        elif agent < count:
            want = set(range(count, 2 * count))
        else:
            want = set(range(count))
        if set(ranking) != want:
            raise InstanceParseError("ranking is not a permutation of the "
                                     "required agents", no)
        rankings.append(ranking)

    if kind == "sr":
        return SRInstance(tuple(rankings))
    return SMInstance(tuple(rankings[:count]), tuple(rankings[count:]))


def serialize_instance(inst: Instance) -> str:
    """Canonical text form; ``parse_instance(serialize_instance(x)) == x``."""
    if isinstance(inst, SRInstance):
        head = f"sr {inst.num_agents}"
        rows = inst.prefs
    else:
        head = f"sm {inst.n}"
        rows = inst.men_prefs + inst.women_prefs
    lines = [head]
    lines.extend(f"{a}: {' '.join(str(b) for b in row)}" for a, row in enumerate(rows))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Relabeling and isomorphism
# ---------------------------------------------------------------------------

def _check_bijection(sigma: Sequence[int], n: int) -> None:
    if len(sigma) != n or sorted(sigma) != list(range(n)):
        raise InstanceError("sigma is not a bijection on the agent set")


def relabel(inst: SRInstance, sigma: Sequence[int]) -> SRInstance:
    """Rename agents: agent ``sigma[a]`` gets ``a``'s ranking mapped through sigma."""
    n = inst.num_agents
    _check_bijection(sigma, n)
    prefs: list[Pref] = [()] * n
    for a, row in enumerate(inst.prefs):
        prefs[sigma[a]] = tuple(sigma[b] for b in row)
    return SRInstance(tuple(prefs))


def check_isomorphic(i1: SRInstance, i2: SRInstance) -> tuple[bool, tuple[int, ...] | None]:
    """Decide whether two SR instances are the same up to renaming agents.

    Fixing where agent 0 of ``i1`` is sent determines the whole mapping (its
    ranking must map onto the image's ranking position by position), so only
    ``N`` candidate mappings need checking: O(n^3) overall.  Returns the
    witness for the smallest image of agent 0 that works, or ``(False, None)``.
    """
    n = i1.num_agents
    if i2.num_agents != n:
        raise InstanceError("isomorphism check needs equal agent counts")
    anchor_row = i1.prefs[0]
    for image in range(n):
        sigma = [-1] * n
        sigma[0] = image
        for pos, b in enumerate(anchor_row):
            sigma[b] = i2.prefs[image][pos]
        if relabel(i1, sigma).prefs == i2.prefs:
            return True, tuple(sigma)
    return False, None
