"""Pairwise distance matrices, 2-D embedding, and per-instance feature tables.

The embedding minimizes the weighted stress

    sum_{i<j} w_ij (||x_i - x_j|| - d_ij)^2,   w_ij = d_ij^-2

by majorization (SMACOF): each iteration applies the Guttman transform, which
never increases the stress, so the optimizer is monotone by construction.
Initial positions sit on a circle in id order (radius = mean distance, angles
jittered by the seed) with the layout rotation pinned -- the first point on
the positive x-axis, the second above it -- so runs are comparable.

Pairs at distance zero (possible: distinct instances can share a mutual
attraction matrix) get a small weight floor instead of the infinite 1/d^2 so
they co-locate without dividing by zero, and they are excluded (and counted)
in distortion reports.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import solvers
from .attraction import (mad_distance, max_mad, mutual_attraction_matrix,
                         mutuality, parse_matrix_csv,
                         positionwise_distance_matrices,
                         positionwise_from_attraction, positionwise_matrix,
                         rank_distortion)
from .attraction import lifted_distance_exact
from .cultures import DatasetManifest, ManifestEntry, derive_seed
from .instances import InstanceError, SRInstance, parse_instance

METRICS = ("mad", "positionwise", "spear_exact")
SPEAR_AGENT_CAP = 8


@dataclass
class DistanceMatrix:
    ids: list[str]
    values: np.ndarray  # symmetric, zero diagonal
    metric: str

    def index(self, instance_id: str) -> int:
        return self.ids.index(instance_id)


@dataclass
class Embedding:
    ids: list[str]
    coords: np.ndarray  # (N, 2)
    seed: int
    iterations: int
    stress_trace: list[float]

    @property
    def stress(self) -> float:
        return self.stress_trace[-1]


def load_entry_instance(entry: ManifestEntry, base_dir: str) -> SRInstance | None:
    """The parsed instance, or None for matrix-only anchors."""
    if entry.is_anchor:
        return None
    with open(os.path.join(base_dir, entry.path), encoding="utf-8") as fh:
        inst = parse_instance(fh.read())
    if not isinstance(inst, SRInstance):
        raise InstanceError(f"{entry.path} is not an SR instance")
    return inst


def load_entry_matrix(entry: ManifestEntry, base_dir: str) -> np.ndarray:
    """The mutual attraction matrix of an entry (anchors store it directly)."""
    if entry.is_anchor:
        with open(os.path.join(base_dir, entry.path), encoding="utf-8") as fh:
            return parse_matrix_csv(fh.read())
    return mutual_attraction_matrix(load_entry_instance(entry, base_dir))


def distance_matrix(manifest: DatasetManifest, metric: str, base_dir: str,
                    threads: int = 1) -> DistanceMatrix:
    """All pairwise distances for a dataset; independent of thread count."""
    if metric not in METRICS:
        raise InstanceError(f"unknown metric {metric!r}; expected one of {METRICS}")
    entries = manifest.entries
    ids = [e.instance_id for e in entries]

    if metric == "spear_exact":
        if any(e.is_anchor for e in entries):
            raise InstanceError("spear_exact needs preference orders; matrix-only "
                                "anchors cannot be embedded with it")
        instances = [load_entry_instance(e, base_dir) for e in entries]
        sizes = {inst.num_agents for inst in instances}
        if len(sizes) > 1:
            raise InstanceError(f"mixed agent counts in dataset: {sorted(sizes)}")
        if max(sizes) > SPEAR_AGENT_CAP:
            raise InstanceError(f"spear_exact is exhaustive and capped at "
                                f"{SPEAR_AGENT_CAP} agents, dataset has {max(sizes)}")
        pair_fn = lambda i, j: lifted_distance_exact(instances[i], instances[j])
    else:
        mats = [load_entry_matrix(e, base_dir) for e in entries]
        shapes = {m.shape for m in mats}
        if len(shapes) > 1:
            raise InstanceError(f"mixed matrix shapes in dataset: {sorted(shapes)}")
        if metric == "positionwise":
            mats = [positionwise_from_attraction(m) for m in mats]
            pair_fn = lambda i, j: positionwise_distance_matrices(mats[i], mats[j])
        else:
            pair_fn = lambda i, j: mad_distance(mats[i], mats[j])

    n = len(ids)
    values = np.zeros((n, n), dtype=np.int64)

    def fill_row(i: int) -> list[tuple[int, int, int]]:
        return [(i, j, pair_fn(i, j)) for j in range(i + 1, n)]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = pool.map(fill_row, range(n))
    else:
        rows = map(fill_row, range(n))
    for row in rows:
        for i, j, d in row:
            values[i, j] = values[j, i] = d
    return DistanceMatrix(ids, values, metric)


# ---------------------------------------------------------------------------
# Kamada-Kawai style embedding by stress majorization
# ---------------------------------------------------------------------------

def kamada_kawai_embed(dist: DistanceMatrix, seed: int = 0, max_iters: int = 2000,
                       tol: float = 1e-9) -> Embedding:
    d = np.asarray(dist.values, dtype=float)
    n = d.shape[0]
    if n < 2:
        raise InstanceError("embedding needs at least 2 points")
    off = d[~np.eye(n, dtype=bool)]
    if not off.any():
        raise InstanceError("cannot embed an all-zero distance matrix")

    mean_nonzero = off[off > 0].mean()
    weights = np.zeros_like(d)
    nonzero = d > 0
    weights[nonzero] = 1.0 / d[nonzero] ** 2
    floor = (0.01 * mean_nonzero) ** -2
    weights[~nonzero] = floor
    np.fill_diagonal(weights, 0.0)

    coords = _initial_layout(n, off.mean(), seed)
    lap = -weights.copy()
    np.fill_diagonal(lap, weights.sum(axis=1))
    lap_pinv = np.linalg.pinv(lap)

    trace = [_stress(coords, d, weights)]
    for _ in range(max_iters):
        coords = _guttman_step(coords, d, weights, lap_pinv)
        trace.append(_stress(coords, d, weights))
        if trace[-2] == 0 or abs(trace[-2] - trace[-1]) <= tol * max(trace[-2], 1e-300):
            break
    return Embedding(list(dist.ids), coords, seed, len(trace) - 1, trace)


def _initial_layout(n: int, radius: float, seed: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([seed, n]))
    step = 2 * math.pi / n
    angles = np.arange(n) * step + rng.uniform(-0.25, 0.25, n) * step
    coords = radius * np.column_stack([np.cos(angles), np.sin(angles)])
    # Pin the rotation: first point on the positive x-axis, second above it.
    theta = math.atan2(coords[0, 1], coords[0, 0])
    rot = np.array([[math.cos(-theta), -math.sin(-theta)],
                    [math.sin(-theta), math.cos(-theta)]])
    coords = coords @ rot.T
    if n > 1 and coords[1, 1] < 0:
        coords[:, 1] = -coords[:, 1]
    return coords


def _pairwise_norms(coords: np.ndarray) -> np.ndarray:
    diff = coords[:, None, :] - coords[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=2))


def _stress(coords: np.ndarray, d: np.ndarray, weights: np.ndarray) -> float:
    norms = _pairwise_norms(coords)
    mask = np.triu(np.ones_like(d, dtype=bool), k=1)
    return float((weights[mask] * (norms[mask] - d[mask]) ** 2).sum())


def _guttman_step(coords, d, weights, lap_pinv):
    norms = _pairwise_norms(coords)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(norms > 0, d / np.where(norms > 0, norms, 1.0), 0.0)
    b = -weights * ratio
    np.fill_diagonal(b, 0.0)
    np.fill_diagonal(b, -b.sum(axis=1))
    return lap_pinv @ (b @ coords)


# ---------------------------------------------------------------------------
# Embedding quality
# ---------------------------------------------------------------------------

@dataclass
class DistortionReport:
    average: float
    per_instance: dict[str, float]
    histogram: list[tuple[float, float, int]]  # (lo, hi, count) of embed/true ratios
    excluded_pairs: int
    scale: float  # divisor applied to Euclidean distances before comparing


def distortion_report(dist: DistanceMatrix, emb: Embedding, two_n: int) -> DistortionReport:
    """Pairwise distortion max(d/e, e/d) between normalized distances.

    True distances are normalized by the space diameter; map distances are
    divided by the scale that equates their mean with the true mean (the
    report records that scale).  Zero-distance pairs are excluded and counted.
    """
    if dist.ids != emb.ids:
        raise InstanceError("distance matrix and embedding ids differ")
    n = len(dist.ids)
    true_norm = np.asarray(dist.values, dtype=float) / max_mad(two_n)
    euclid = _pairwise_norms(emb.coords)
    mask = np.triu(np.ones((n, n), dtype=bool), k=1)
    scale = float(euclid[mask].mean() / true_norm[mask].mean())
    embed_norm = euclid / scale

    per_sum = np.zeros(n)
    per_cnt = np.zeros(n, dtype=int)
    ratios = []
    distortions = []
    excluded = 0
    for i in range(n):
        for j in range(i + 1, n):
            t, e = true_norm[i, j], embed_norm[i, j]
            if t == 0 or e == 0:
                excluded += 1
                continue
            ratios.append(e / t)
            dst = max(e / t, t / e)
            distortions.append(dst)
            per_sum[i] += dst
            per_sum[j] += dst
            per_cnt[i] += 1
            per_cnt[j] += 1
    if not distortions:
        raise InstanceError("no comparable pairs for a distortion report")
    per_instance = {emb.ids[i]: per_sum[i] / per_cnt[i]
                    for i in range(n) if per_cnt[i]}
    top = max(1.0, math.ceil(max(ratios) * 10) / 10)
    edges = np.arange(0.0, top + 1e-9, 0.1)
    counts, _ = np.histogram(ratios, bins=edges)
    histogram = [(round(float(edges[k]), 1), round(float(edges[k + 1]), 1), int(c))
                 for k, c in enumerate(counts)]
    return DistortionReport(float(np.mean(distortions)), per_instance,
                            histogram, excluded, scale)


# ---------------------------------------------------------------------------
# Feature table
# ---------------------------------------------------------------------------

FEATURES = ("mutuality", "rank_distortion", "has_stable", "min_bp",
            "avg_bp_random", "min_weight_bp", "egal_rank", "max_rank",
            "rank_diff", "min_regret", "solve_ms")

_STABLE_SET_FEATURES = {"egal_rank", "max_rank", "rank_diff", "min_regret", "solve_ms"}


def feature_table(manifest: DatasetManifest, base_dir: str,
                  features: Sequence[str], bp_samples: int = 100,
                  bp_seed: int = 0, stable_agent_limit: int = 20,
                  minbp_agent_limit: int = 16,
                  limit_k: int = 5) -> tuple[list[str], list[dict]]:
    """One row per dataset entry; infeasible cells stay absent (None).

    Anchor rows only carry the matrix-level features (mutuality and rank
    distortion); solver features beyond the size caps are left absent rather
    than estimated.
    """
    for f in features:
        if f not in FEATURES:
            raise InstanceError(f"unknown feature {f!r}; expected one of {FEATURES}")
    header = ["id", "culture"] + list(features)
    rows = []
    for idx, entry in enumerate(manifest.entries):
        row: dict[str, object] = {"id": entry.instance_id, "culture": entry.label()}
        matrix = load_entry_matrix(entry, base_dir)
        inst = load_entry_instance(entry, base_dir)
        cells = _entry_features(inst, matrix, set(features), idx, bp_samples,
                                bp_seed, stable_agent_limit, minbp_agent_limit,
                                limit_k)
        row.update({f: cells.get(f) for f in features})
        rows.append(row)
    return header, rows


def _entry_features(inst, matrix, wanted, idx, bp_samples, bp_seed,
                    stable_agent_limit, minbp_agent_limit, limit_k):
    out: dict[str, object] = {}
    if "mutuality" in wanted:
        out["mutuality"] = mutuality(matrix)
    if "rank_distortion" in wanted:
        out["rank_distortion"] = rank_distortion(matrix)
    if inst is None:
        return out
    stable = None
    if "has_stable" in wanted or wanted & _STABLE_SET_FEATURES:
        stable = solvers.irving_stable_matching(inst)
        if "has_stable" in wanted:
            out["has_stable"] = stable is not None
    if "avg_bp_random" in wanted:
        out["avg_bp_random"] = solvers.avg_blocking_pairs_random(
            inst, bp_samples, derive_seed(bp_seed, 1, idx))
    if "min_weight_bp" in wanted:
        mw, _ = solvers.min_weight_perfect_matching(inst)
        out["min_weight_bp"] = solvers.blocking_pairs(inst, mw).count
    if "min_bp" in wanted and inst.num_agents <= max(minbp_agent_limit, 0):
        res = solvers.min_blocking_pairs_matching(inst, limit_k, minbp_agent_limit)
        if res.status == "optimal":
            out["min_bp"] = res.value
    if wanted & _STABLE_SET_FEATURES and inst.num_agents <= stable_agent_limit \
            and stable is not None:
        egal = solvers.optimal_stable_matching(inst, "min_summed_rank")
        worst = solvers.optimal_stable_matching(inst, "max_summed_rank")
        regret = solvers.optimal_stable_matching(inst, "min_regret")
        out["egal_rank"] = egal.value
        out["max_rank"] = worst.value
        out["rank_diff"] = worst.value - egal.value
        out["min_regret"] = regret.value
        out["solve_ms"] = round(egal.millis, 3)
    return out


# ---------------------------------------------------------------------------
# Culture-pair mean distance table
# ---------------------------------------------------------------------------

def culture_distance_table(manifest: DatasetManifest,
                           dist: DistanceMatrix) -> tuple[list[str], np.ndarray]:
    """Mean normalized distance between (and within) culture configurations.

    Anchors come first, then one row per configuration; the diagonal is the
    mean distance of two instances sampled from the same configuration.
    """
    order: list[str] = []
    members: dict[str, list[int]] = {}
    for entry in manifest.entries:
        label = entry.label()
        if label not in members:
            members[label] = []
            order.append(label)
        members[label].append(dist.index(entry.instance_id))
    diameter = max_mad(manifest.agents)
    table = np.zeros((len(order), len(order)))
    for i, la in enumerate(order):
        for j, lb in enumerate(order):
            idx_a, idx_b = members[la], members[lb]
            if i == j:
                vals = [dist.values[a, b] for k, a in enumerate(idx_a)
                        for b in idx_a[k + 1:]]
                table[i, j] = float(np.mean(vals)) / diameter if vals else 0.0
            else:
                block = dist.values[np.ix_(idx_a, idx_b)]
                table[i, j] = float(block.mean()) / diameter
    return order, table


# ---------------------------------------------------------------------------
# CSV formats
# ---------------------------------------------------------------------------

def distance_matrix_to_csv(dist: DistanceMatrix) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id"] + dist.ids)
    for i, name in enumerate(dist.ids):
        writer.writerow([name] + [int(v) for v in dist.values[i]])
    return buf.getvalue()


def parse_distance_csv(text: str, metric: str = "mad") -> DistanceMatrix:
    rows = list(csv.reader(io.StringIO(text)))
    ids = rows[0][1:]
    values = np.array([[int(v) for v in row[1:]] for row in rows[1:]], dtype=np.int64)
    return DistanceMatrix(ids, values, metric)


def embedding_to_csv(emb: Embedding) -> str:
    lines = ["id,x,y"]
    for name, (x, y) in zip(emb.ids, emb.coords):
        lines.append(f"{name},{x:.9g},{y:.9g}")
    return "\n".join(lines) + "\n"


def parse_embedding_csv(text: str) -> tuple[list[str], np.ndarray]:
    rows = list(csv.reader(io.StringIO(text)))
    ids = [row[0] for row in rows[1:]]
    coords = np.array([[float(row[1]), float(row[2])] for row in rows[1:]])
    return ids, coords


def features_to_csv(header: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if row.get(col) is None else _fmt_cell(row[col])
                         for col in header])
    return buf.getvalue()


def _fmt_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def culture_table_to_csv(labels: list[str], table: np.ndarray) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["culture"] + labels)
    for i, label in enumerate(labels):
        writer.writerow([label] + [f"{v:.4f}" for v in table[i]])
    return buf.getvalue()
