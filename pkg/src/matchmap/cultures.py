"""Statistical cultures: seeded random generators for SR and SM instances.

Ten models are provided (names as used on the CLI):

``ic``
    Impartial culture: every ranking uniform at random.
``2ic``
    Two groups (sizes floor(p*N) and the rest); each agent prefers everyone
    in its own group, uniformly at random within the blocks.
``mallows``
    A uniformly drawn central order, each agent's ranking a Mallows sample
    around it.  Dispersion is the *normalized* parameter ``norm_phi``: the
    expected swap distance of a sample from the center is
    ``norm_phi * m(m-1)/4`` for orders of length m, so 0 pins the center and
    1 is uniform.
``euclidean``
    Uniform points in [0,1]^d; rank others by increasing distance.
``reverse_euclidean``
    Like euclidean, but a floor(p*N)-sized group ranks by *decreasing*
    distance.
``mallows_euclidean``
    Euclidean rankings, then a Mallows resample around each.
``expectations_euclidean``
    Each agent has a location p and a Gaussian "advertised" point q (mean p,
    std sigma, unclamped); a ranks b by the distance from a's location to b's
    advertised point.
``fame_euclidean``
    Euclidean plus a uniform fame bonus f^b in [0, f]; a ranks b by
    dist(a, b) - f^b.
``attributes``
    Uniform profile p and weight w vectors in [0,1]^d; a ranks b decreasingly
    by the inner product <w^a, p^b>.
``mallows_md``
    Mallows noise around the cyclic mutual-disagreement profile.

Sampling is fully deterministic: ``generate(spec, N)`` is a pure function of
the spec (name, params, 64-bit seed) and the size.  The dataset builder
derives one child seed per instance from (master seed, culture index,
instance index), so instances can be produced in any order or in parallel
with identical results.

Exact distance/score ties in the geometric models have probability zero but
are broken by ascending agent id so that determinism is unconditional.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import numpy as np

from .attraction import export_matrix_csv
from .extremes import SR_KINDS, cyclic_instance, extreme_matrix, realize_sm_extreme
from .instances import InstanceError, Pref, SMInstance, SRInstance, serialize_instance


@dataclass(frozen=True)
class CultureSpec:
    name: str
    params: Mapping[str, float] = field(default_factory=dict)
    seed: int = 0

    def params_label(self) -> str:
        return ";".join(f"{k}={_fmt_param(v)}" for k, v in sorted(self.params.items()))


def _fmt_param(v: float) -> str:
    return f"{v:g}"


def _rng(seed: int) -> np.random.Generator:
    # PCG64 via SeedSequence: documented-stable streams for a given numpy line.
    return np.random.default_rng(np.random.SeedSequence(seed))


def derive_seed(master_seed: int, culture_index: int, instance_index: int) -> int:
    """Per-instance child seed; order-independent across the dataset."""
    ss = np.random.SeedSequence([master_seed, culture_index, instance_index])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


# ---------------------------------------------------------------------------
# Mallows model
# ---------------------------------------------------------------------------

def expected_swap_distance(phi: float, m: int) -> float:
    """Expected swap distance of a Mallows(phi) sample from its center (length m)."""
    if phi == 1.0:
        return m * (m - 1) / 4
    total = 0.0
    for t in range(2, m + 1):
        powers = phi ** np.arange(t)
        total += float((np.arange(t) * powers).sum() / powers.sum())
    return total


@lru_cache(maxsize=None)
def norm_phi_to_phi(norm_phi: float, m: int) -> float:
    """Dispersion phi whose expected swap distance is norm_phi * m(m-1)/4.

    Solved by bisection on the monotone expected-distance curve to 1e-10;
    the endpoints are exact by construction.
    """
    if not 0.0 <= norm_phi <= 1.0:
        raise InstanceError(f"norm_phi must be in [0, 1], got {norm_phi}")
    if m < 2 or norm_phi in (0.0, 1.0):
        return float(norm_phi)
    target = norm_phi * m * (m - 1) / 4
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = (lo + hi) / 2
        err = expected_swap_distance(mid, m) - target
        if abs(err) <= 1e-10:
            return mid
        if err < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15:
            break
    return (lo + hi) / 2


def mallows_sample(center: Pref, norm_phi: float, rng: np.random.Generator) -> Pref:
    """Exact Mallows sample around ``center`` by repeated insertion."""
    return _rim_sample(center, norm_phi_to_phi(norm_phi, len(center)), rng)


def _rim_sample(center: Sequence[int], phi: float, rng: np.random.Generator) -> Pref:
    # Inserting the t-th item of the center at slot s (0 = top of t slots)
    # creates t-1-s inversions, so slot weights are phi^(t-1-s).
    out: list[int] = []
    for t, item in enumerate(center, start=1):
        weights = phi ** np.arange(t - 1, -1, -1, dtype=float)
        cum = np.cumsum(weights)
        slot = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
        out.insert(min(slot, t - 1), item)
    return tuple(out)


# ---------------------------------------------------------------------------
# SR generators
# ---------------------------------------------------------------------------

def _perm(rng: np.random.Generator, items: Sequence[int]) -> list[int]:
    arr = np.array(items, dtype=np.int64)
    return [int(x) for x in arr[rng.permutation(len(arr))]]


def _sorted_prefs(n_agents: int, key) -> list[Pref]:
    prefs = []
    for a in range(n_agents):
        others = [b for b in range(n_agents) if b != a]
        prefs.append(tuple(sorted(others, key=lambda b: (key(a, b), b))))
    return prefs


def _split(p: float, ids: Sequence[int]) -> tuple[list[int], list[int]]:
    cut = int(np.floor(p * len(ids)))
    return list(ids[:cut]), list(ids[cut:])


def _gen_ic(rng, n_agents, params):
    return [tuple(_perm(rng, [b for b in range(n_agents) if b != a]))
            for a in range(n_agents)]


def _gen_2ic(rng, n_agents, params):
    group1, group2 = _split(params["p"], range(n_agents))
    prefs = []
    for a in range(n_agents):
        o1 = _perm(rng, [b for b in group1 if b != a])
        o2 = _perm(rng, [b for b in group2 if b != a])
        prefs.append(tuple(o1 + o2 if a in group1 else o2 + o1))
    return prefs


def _gen_mallows(rng, n_agents, params):
    center = _perm(rng, range(n_agents))
    nf = params["norm_phi"]
    phi = norm_phi_to_phi(nf, n_agents)
    return [tuple(x for x in _rim_sample(center, phi, rng) if x != a)
            for a in range(n_agents)]


def _euclidean_points(rng, n_agents, d):
    return rng.random((n_agents, int(d)))


def _gen_euclidean(rng, n_agents, params):
    pts = _euclidean_points(rng, n_agents, params["d"])
    return _sorted_prefs(n_agents, lambda a, b: float(np.linalg.norm(pts[a] - pts[b])))


def _gen_reverse_euclidean(rng, n_agents, params):
    reversed_group, _ = _split(params["p"], range(n_agents))
    flipped = set(reversed_group)
    pts = _euclidean_points(rng, n_agents, params["d"])

    def key(a, b):
        dist = float(np.linalg.norm(pts[a] - pts[b]))
        return -dist if a in flipped else dist

    return _sorted_prefs(n_agents, key)


def _gen_mallows_euclidean(rng, n_agents, params):
    base = _gen_euclidean(rng, n_agents, {"d": params["d"]})
    phi = norm_phi_to_phi(params["norm_phi"], n_agents - 1)
    return [_rim_sample(row, phi, rng) for row in base]


def _gen_expectations_euclidean(rng, n_agents, params):
    pts = _euclidean_points(rng, n_agents, params["d"])
    advertised = rng.normal(pts, params["sigma"])
    return _sorted_prefs(n_agents,
                         lambda a, b: float(np.linalg.norm(pts[a] - advertised[b])))


def _gen_fame_euclidean(rng, n_agents, params):
    pts = _euclidean_points(rng, n_agents, params["d"])
    fame = rng.uniform(0.0, params["f"], n_agents) if params["f"] > 0 else np.zeros(n_agents)
    return _sorted_prefs(n_agents,
                         lambda a, b: float(np.linalg.norm(pts[a] - pts[b])) - fame[b])


def _gen_attributes(rng, n_agents, params):
    pts = _euclidean_points(rng, n_agents, params["d"])
    weights = rng.random((n_agents, int(params["d"])))
    return _sorted_prefs(n_agents, lambda a, b: -float(weights[a] @ pts[b]))


def _gen_mallows_md(rng, n_agents, params):
    base = cyclic_instance(n_agents).prefs
    phi = norm_phi_to_phi(params["norm_phi"], n_agents - 1)
    return [_rim_sample(row, phi, rng) for row in base]


# ---------------------------------------------------------------------------
# SM generators (same models, bipartite; ids: men 0..n-1, women n..2n-1)
# ---------------------------------------------------------------------------

def _sm_sorted(n: int, key) -> tuple[tuple[Pref, ...], tuple[Pref, ...]]:
    men = tuple(tuple(sorted(range(n, 2 * n), key=lambda b: (key(a, b), b)))
                for a in range(n))
    women = tuple(tuple(sorted(range(n), key=lambda b: (key(n + w, b), b)))
                  for w in range(n))
    return men, women


def _sm_ic(rng, n, params):
    men = tuple(tuple(_perm(rng, range(n, 2 * n))) for _ in range(n))
    women = tuple(tuple(_perm(rng, range(n))) for _ in range(n))
    return men, women


def _sm_2ic(rng, n, params):
    u1, u2 = _split(params["p"], range(n))
    w1, w2 = _split(params["p"], range(n, 2 * n))
    men = []
    for a in range(n):
        o1, o2 = _perm(rng, w1), _perm(rng, w2)
        men.append(tuple(o1 + o2 if a in u1 else o2 + o1))
    women = []
    for w in range(n, 2 * n):
        o1, o2 = _perm(rng, u1), _perm(rng, u2)
        women.append(tuple(o1 + o2 if w in w1 else o2 + o1))
    return tuple(men), tuple(women)


def _sm_mallows(rng, n, params):
    phi = norm_phi_to_phi(params["norm_phi"], n)
    center_w = _perm(rng, range(n, 2 * n))
    center_m = _perm(rng, range(n))
    men = tuple(_rim_sample(center_w, phi, rng) for _ in range(n))
    women = tuple(_rim_sample(center_m, phi, rng) for _ in range(n))
    return men, women


def _sm_euclidean(rng, n, params):
    pts = _euclidean_points(rng, 2 * n, params["d"])
    return _sm_sorted(n, lambda a, b: float(np.linalg.norm(pts[a] - pts[b])))


def _sm_reverse_euclidean(rng, n, params):
    u1, _ = _split(params["p"], range(n))
    w1, _ = _split(params["p"], range(n, 2 * n))
    flipped = set(u1) | set(w1)
    pts = _euclidean_points(rng, 2 * n, params["d"])

    def key(a, b):
        dist = float(np.linalg.norm(pts[a] - pts[b]))
        return -dist if a in flipped else dist

    return _sm_sorted(n, key)


def _sm_mallows_euclidean(rng, n, params):
    men, women = _sm_euclidean(rng, n, {"d": params["d"]})
    phi = norm_phi_to_phi(params["norm_phi"], n)
    men = tuple(_rim_sample(row, phi, rng) for row in men)
    women = tuple(_rim_sample(row, phi, rng) for row in women)
    return men, women


def _sm_expectations_euclidean(rng, n, params):
    pts = _euclidean_points(rng, 2 * n, params["d"])
    advertised = rng.normal(pts, params["sigma"])
    return _sm_sorted(n, lambda a, b: float(np.linalg.norm(pts[a] - advertised[b])))


def _sm_fame_euclidean(rng, n, params):
    pts = _euclidean_points(rng, 2 * n, params["d"])
    fame = rng.uniform(0.0, params["f"], 2 * n) if params["f"] > 0 else np.zeros(2 * n)
    return _sm_sorted(n, lambda a, b: float(np.linalg.norm(pts[a] - pts[b])) - fame[b])


def _sm_attributes(rng, n, params):
    pts = _euclidean_points(rng, 2 * n, params["d"])
    weights = rng.random((2 * n, int(params["d"])))
    return _sm_sorted(n, lambda a, b: -float(weights[a] @ pts[b]))


def _sm_mallows_md(rng, n, params):
    base = realize_sm_extreme("md", n)
    phi = norm_phi_to_phi(params["norm_phi"], n)
    men = tuple(_rim_sample(row, phi, rng) for row in base.men_prefs)
    women = tuple(_rim_sample(row, phi, rng) for row in base.women_prefs)
    return men, women


# ---------------------------------------------------------------------------
# Registry and entry points
# ---------------------------------------------------------------------------

def _in_range(lo, hi):
    return lambda v: lo <= v <= hi


_PARAM_CHECKS: dict[str, Callable[[float], bool]] = {
    "p2ic": _in_range(0.0, 0.5),
    "p": _in_range(0.0, 1.0),
    "norm_phi": _in_range(0.0, 1.0),
    "d": lambda v: v >= 1 and float(v).is_integer(),
    "sigma": lambda v: v > 0,
    "f": _in_range(0.0, 1.0),
}

# name -> (required params, SR generator, SM generator)
CULTURES: dict[str, tuple[tuple[str, ...], Callable, Callable]] = {
    "ic": ((), _gen_ic, _sm_ic),
    "2ic": (("p",), _gen_2ic, _sm_2ic),
    "mallows": (("norm_phi",), _gen_mallows, _sm_mallows),
    "euclidean": (("d",), _gen_euclidean, _sm_euclidean),
    "reverse_euclidean": (("d", "p"), _gen_reverse_euclidean, _sm_reverse_euclidean),
    "mallows_euclidean": (("d", "norm_phi"), _gen_mallows_euclidean, _sm_mallows_euclidean),
    "expectations_euclidean": (("d", "sigma"), _gen_expectations_euclidean,
                               _sm_expectations_euclidean),
    "fame_euclidean": (("d", "f"), _gen_fame_euclidean, _sm_fame_euclidean),
    "attributes": (("d",), _gen_attributes, _sm_attributes),
    "mallows_md": (("norm_phi",), _gen_mallows_md, _sm_mallows_md),
}


def validate_spec(spec: CultureSpec) -> None:
    if spec.name not in CULTURES:
        raise InstanceError(f"unknown culture {spec.name!r}")
    required = CULTURES[spec.name][0]
    missing = [k for k in required if k not in spec.params]
    extra = [k for k in spec.params if k not in required]
    if missing or extra:
        raise InstanceError(f"culture {spec.name!r} takes params {required}, "
                            f"missing {missing}, unexpected {extra}")
    for k, v in spec.params.items():
        check = _PARAM_CHECKS["p2ic"] if (spec.name == "2ic" and k == "p") else _PARAM_CHECKS[k]
        if not check(v):
            raise InstanceError(f"parameter {k}={v} out of range for culture {spec.name!r}")


def generate(spec: CultureSpec, two_n: int) -> SRInstance:
    """Sample one SR instance; identical arguments give identical output."""
    validate_spec(spec)
    if two_n < 4 or two_n % 2 != 0:
        raise InstanceError("SR generation needs an even agent count >= 4")
    gen = CULTURES[spec.name][1]
    prefs = gen(_rng(spec.seed), two_n, dict(spec.params))
    return SRInstance(tuple(tuple(row) for row in prefs))


def generate_sm(spec: CultureSpec, n: int) -> SMInstance:
    """Sample one SM instance (both sides from the same culture)."""
    validate_spec(spec)
    if n < 1:
        raise InstanceError("SM generation needs n >= 1")
    gen = CULTURES[spec.name][2]
    men, women = gen(_rng(spec.seed), n, dict(spec.params))
    return SMInstance(tuple(tuple(r) for r in men), tuple(tuple(r) for r in women))


# ---------------------------------------------------------------------------
# The standard dataset: 23 configurations x 20 instances, plus 4 anchors
# ---------------------------------------------------------------------------

STANDARD_GRID: tuple[tuple[str, Mapping[str, float]], ...] = (
    ("ic", {}),
    ("2ic", {"p": 0.25}),
    ("2ic", {"p": 0.5}),
    ("mallows", {"norm_phi": 0.2}),
    ("mallows", {"norm_phi": 0.4}),
    ("mallows", {"norm_phi": 0.6}),
    ("mallows", {"norm_phi": 0.8}),
    ("euclidean", {"d": 1}),
    ("euclidean", {"d": 2}),
    ("reverse_euclidean", {"d": 2, "p": 0.05}),
    ("reverse_euclidean", {"d": 2, "p": 0.15}),
    ("reverse_euclidean", {"d": 2, "p": 0.25}),
    ("mallows_euclidean", {"d": 2, "norm_phi": 0.2}),
    ("mallows_euclidean", {"d": 2, "norm_phi": 0.4}),
    ("expectations_euclidean", {"d": 2, "sigma": 0.2}),
    ("expectations_euclidean", {"d": 2, "sigma": 0.4}),
    ("fame_euclidean", {"d": 2, "f": 0.2}),
    ("fame_euclidean", {"d": 2, "f": 0.4}),
    ("attributes", {"d": 2}),
    ("attributes", {"d": 5}),
    ("mallows_md", {"norm_phi": 0.2}),
    ("mallows_md", {"norm_phi": 0.4}),
    ("mallows_md", {"norm_phi": 0.6}),
)

INSTANCES_PER_CONFIG = 20


def config_label(name: str, params: Mapping[str, float]) -> str:
    tail = "".join(f"-{k}{_fmt_param(v)}" for k, v in sorted(params.items()))
    return f"{name}{tail}"


@dataclass(frozen=True)
class ManifestEntry:
    instance_id: str
    culture: str          # culture name, or "anchor" for extreme matrices
    params: Mapping[str, float]
    seed: int | None
    path: str             # relative to the manifest's directory

    @property
    def is_anchor(self) -> bool:
        return self.culture == "anchor"

    def label(self) -> str:
        if self.is_anchor:
            return self.instance_id
        return config_label(self.culture, self.params)


@dataclass
class DatasetManifest:
    agents: int
    master_seed: int
    entries: list[ManifestEntry]

    def instance_entries(self) -> list[ManifestEntry]:
        return [e for e in self.entries if not e.is_anchor]

    def anchor_entries(self) -> list[ManifestEntry]:
        return [e for e in self.entries if e.is_anchor]


def build_dataset(two_n: int, master_seed: int, out_dir: str) -> DatasetManifest:
    """Write the standard dataset (460 instances + 4 anchor matrices) to disk.

    Rebuilding with the same arguments reproduces every file byte for byte.
    Returns the manifest, which is also written as ``manifest.csv``.
    """
    if two_n % 2 != 0:
        raise InstanceError("dataset needs an even agent count")
    os.makedirs(out_dir, exist_ok=True)
    entries: list[ManifestEntry] = []
    for kind in SR_KINDS:
        path = f"{kind}.ma.csv"
        write_atomic(os.path.join(out_dir, path),
                      export_matrix_csv(extreme_matrix(kind, two_n)))
        entries.append(ManifestEntry(kind, "anchor", {}, None, path))
    for ci, (name, params) in enumerate(STANDARD_GRID):
        label = config_label(name, params)
        for k in range(INSTANCES_PER_CONFIG):
            seed = derive_seed(master_seed, ci, k)
            inst = generate(CultureSpec(name, params, seed), two_n)
            instance_id = f"{label}-{k:02d}"
            path = f"{instance_id}.sr"
            write_atomic(os.path.join(out_dir, path), serialize_instance(inst))
            entries.append(ManifestEntry(instance_id, name, params, seed, path))
    manifest = DatasetManifest(two_n, master_seed, entries)
    write_atomic(os.path.join(out_dir, "manifest.csv"), manifest_to_csv(manifest))
    return manifest


def manifest_to_csv(manifest: DatasetManifest) -> str:
    buf = io.StringIO()
    buf.write(f"# agents={manifest.agents} master_seed={manifest.master_seed}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", "culture", "params", "seed", "path"])
    for e in manifest.entries:
        params = ";".join(f"{k}={_fmt_param(v)}" for k, v in sorted(e.params.items()))
        writer.writerow([e.instance_id, e.culture, params,
                         "" if e.seed is None else e.seed, e.path])
    return buf.getvalue()


def parse_manifest_csv(text: str) -> DatasetManifest:
    agents = master_seed = 0
    lines = text.splitlines()
    body = []
    for ln in lines:
        if ln.startswith("#"):
            for tok in ln[1:].split():
                key, _, val = tok.partition("=")
                if key == "agents":
                    agents = int(val)
                elif key == "master_seed":
                    master_seed = int(val)
        elif ln.strip():
            body.append(ln)
    entries = []
    for row in csv.DictReader(body):
        params: dict[str, float] = {}
        if row["params"]:
            for item in row["params"].split(";"):
                k, _, v = item.partition("=")
                params[k] = float(v)
        entries.append(ManifestEntry(row["id"], row["culture"], params,
                                     int(row["seed"]) if row["seed"] else None,
                                     row["path"]))
    return DatasetManifest(agents, master_seed, entries)


def load_manifest(path: str) -> DatasetManifest:
    with open(path, encoding="utf-8") as fh:
        return parse_manifest_csv(fh.read())


def write_atomic(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)
