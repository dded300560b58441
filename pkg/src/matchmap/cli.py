"""Command-line surface: generate -> dist -> embed -> stats -> render.

Every command exits 0 on success and nonzero with a one-line diagnostic on
failure; output files are written to a temporary name and renamed, so a
failing command leaves no partial artifacts.  ``solve`` reports "no stable
matching" as a regular (exit 0) outcome, not an error.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from . import mapping, render, solvers
from .cultures import (CultureSpec, DatasetManifest, ManifestEntry,
                       build_dataset, config_label, derive_seed, generate,
                       generate_sm, load_manifest, manifest_to_csv,
                       validate_spec, write_atomic)
from .instances import (InstanceError, SMInstance, SRInstance, parse_instance,
                        serialize_instance)


class CLIError(Exception):
    pass


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CLIError, InstanceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matchmap",
        description="Maps of stable roommates / stable marriage instances")
    sub = parser.add_subparsers(required=True)

    p = sub.add_parser("generate", help="sample instances from a culture")
    p.add_argument("--standard", action="store_true",
                   help="build the standard 460-instance dataset plus anchors")
    p.add_argument("--culture")
    p.add_argument("--param", action="append", default=[], metavar="K=V")
    p.add_argument("--agents", type=int, default=10,
                   help="agent count (for --sm: per side)")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--sm", action="store_true", help="generate SM instances")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("dist", help="pairwise distance matrix over a dataset")
    p.add_argument("--data", required=True, help="dataset directory (with manifest.csv)")
    p.add_argument("--metric", default="mad", choices=mapping.METRICS)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("embed", help="embed a distance matrix into the plane")
    p.add_argument("--dist", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iters", type=int, default=2000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("stats", help="per-instance feature table")
    p.add_argument("--data", required=True)
    p.add_argument("--features", required=True,
                   help="comma-separated, from: " + ",".join(mapping.FEATURES))
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("solve", help="run a solver task on one instance file")
    p.add_argument("--instance", required=True)
    p.add_argument("--task", required=True,
                   choices=["irving", "gs", "min-bp", "min-weight", "egal",
                            "max-rank", "min-regret", "avg-bp"])
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--proposing", default="men", choices=["men", "women"])
    p.add_argument("--limit-k", type=int, default=5)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("render", help="draw the map as an SVG scatter plot")
    p.add_argument("--embedding", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--stats", help="feature CSV (needed for feature coloring)")
    p.add_argument("--color-by", default="culture",
                   help="'culture' or a feature column name")
    p.add_argument("--log", action="store_true", help="log-scale feature colors")
    p.add_argument("--size", type=int, default=800)
    p.add_argument("--no-legend", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("pipeline", help="run generate/dist/embed/stats/render")
    p.add_argument("--standard", action="store_true", required=True)
    p.add_argument("--agents", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--metric", default="mad", choices=mapping.METRICS)
    p.add_argument("--iters", type=int, default=2000)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--features",
                   default="mutuality,rank_distortion,has_stable,avg_bp_random,"
                           "min_weight_bp,egal_rank,max_rank,rank_diff,"
                           "min_regret,solve_ms")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pipeline)
    return parser


def _parse_params(items) -> dict[str, float]:
    params = {}
    for item in items:
        key, sep, val = item.partition("=")
        if not sep:
            raise CLIError(f"bad --param {item!r}, expected K=V")
        try:
            params[key] = float(val)
        except ValueError:
            raise CLIError(f"bad --param value in {item!r}") from None
    return params


def cmd_generate(args) -> int:
    if args.standard:
        manifest = build_dataset(args.agents, args.seed, args.out)
        print(f"wrote {len(manifest.instance_entries())} instances + "
              f"{len(manifest.anchor_entries())} anchors to {args.out}")
        return 0
    if not args.culture:
        raise CLIError("need --standard or --culture")
    params = _parse_params(args.param)
    validate_spec(CultureSpec(args.culture, params, 0))  # fail before touching disk
    os.makedirs(args.out, exist_ok=True)
    label = config_label(args.culture, params)
    entries = []
    for k in range(args.count):
        seed = derive_seed(args.seed, 0, k)
        spec = CultureSpec(args.culture, params, seed)
        inst = generate_sm(spec, args.agents) if args.sm else generate(spec, args.agents)
        instance_id = f"{label}-{k:02d}"
        path = f"{instance_id}.{'sm' if args.sm else 'sr'}"
        write_atomic(os.path.join(args.out, path), serialize_instance(inst))
        entries.append(ManifestEntry(instance_id, args.culture, params, seed, path))
    manifest = DatasetManifest(args.agents if args.sm else args.agents,
                               args.seed, entries)
    write_atomic(os.path.join(args.out, "manifest.csv"), manifest_to_csv(manifest))
    print(f"wrote {len(entries)} instances to {args.out}")
    return 0


def _load_data(data_dir: str) -> DatasetManifest:
    path = os.path.join(data_dir, "manifest.csv")
    if not os.path.exists(path):
        raise CLIError(f"no manifest.csv in {data_dir}")
    return load_manifest(path)


def cmd_dist(args) -> int:
    manifest = _load_data(args.data)
    dm = mapping.distance_matrix(manifest, args.metric, args.data,
                                 threads=args.threads)
    write_atomic(args.out, mapping.distance_matrix_to_csv(dm))
    print(f"wrote {len(dm.ids)}x{len(dm.ids)} {args.metric} matrix to {args.out}")
    return 0


def cmd_embed(args) -> int:
    with open(args.dist, encoding="utf-8") as fh:
        dm = mapping.parse_distance_csv(fh.read())
    emb = mapping.kamada_kawai_embed(dm, seed=args.seed, max_iters=args.iters)
    write_atomic(args.out, mapping.embedding_to_csv(emb))
    print(f"embedded {len(emb.ids)} points in {emb.iterations} iterations "
          f"(stress {emb.stress:.6g}) -> {args.out}")
    return 0


def cmd_stats(args) -> int:
    manifest = _load_data(args.data)
    features = [f.strip() for f in args.features.split(",") if f.strip()]
    header, rows = mapping.feature_table(manifest, args.data, features,
                                         bp_samples=args.samples,
                                         bp_seed=args.seed)
    write_atomic(args.out, mapping.features_to_csv(header, rows))
    print(f"wrote {len(rows)} feature rows to {args.out}")
    return 0


def _emit_record(fields: dict) -> None:
    for key, value in fields.items():
        print(f"{key}: {value}")


def _matching_str(matching) -> str:
    if matching is None:
        return ""
    return " ".join(f"{a}-{b}" for a, b in matching.sorted_pairs())


def cmd_solve(args) -> int:
    with open(args.instance, encoding="utf-8") as fh:
        inst = parse_instance(fh.read())
    task = args.task
    record: dict[str, object]
    start = time.perf_counter()
    if task == "irving":
        if not isinstance(inst, SRInstance):
            raise CLIError("irving runs on SR instances")
        matching = solvers.irving_stable_matching(inst)
        millis = (time.perf_counter() - start) * 1000
        record = {"objective": "stable_matching",
                  "status": "stable" if matching else "no stable matching",
                  "value": solvers.summed_rank(inst, matching) if matching else "",
                  "matching": _matching_str(matching),
                  "nodes": 0, "milliseconds": f"{millis:.3f}"}
    elif task == "gs":
        if not isinstance(inst, SMInstance):
            raise CLIError("gs runs on SM instances")
        matching = solvers.gale_shapley(inst, args.proposing)
        millis = (time.perf_counter() - start) * 1000
        record = {"objective": f"gale_shapley_{args.proposing}",
                  "status": "stable",
                  "value": solvers.summed_rank(inst, matching),
                  "matching": _matching_str(matching),
                  "nodes": 0, "milliseconds": f"{millis:.3f}"}
    elif task == "avg-bp":
        value = solvers.avg_blocking_pairs_random(inst, args.samples, args.seed)
        millis = (time.perf_counter() - start) * 1000
        record = {"objective": "avg_blocking_pairs_random",
                  "status": "ok", "value": f"{value:.9g}", "matching": "",
                  "nodes": args.samples, "milliseconds": f"{millis:.3f}"}
    elif task == "min-weight":
        matching, total = solvers.min_weight_perfect_matching(inst)
        millis = (time.perf_counter() - start) * 1000
        record = {"objective": "min_weight_perfect_matching",
                  "status": "optimal", "value": total,
                  "matching": _matching_str(matching),
                  "nodes": 0, "milliseconds": f"{millis:.3f}"}
    elif task == "min-bp":
        res = solvers.min_blocking_pairs_matching(inst, limit_k=args.limit_k)
        record = {"objective": res.objective, "status": res.status,
                  "value": res.value if res.value is not None
                  else f"{res.bounds[0]}..{res.bounds[1]}",
                  "matching": _matching_str(res.matching),
                  "nodes": res.nodes, "milliseconds": f"{res.millis:.3f}"}
    else:
        objective = {"egal": "min_summed_rank", "max-rank": "max_summed_rank",
                     "min-regret": "min_regret"}[task]
        res = solvers.optimal_stable_matching(inst, objective)
        record = {"objective": res.objective,
                  "status": res.status if res.status != "infeasible"
                  else "no stable matching",
                  "value": "" if res.value is None else res.value,
                  "matching": _matching_str(res.matching),
                  "nodes": res.nodes, "milliseconds": f"{res.millis:.3f}"}
    _emit_record(record)
    return 0


def _read_features_csv(path: str) -> tuple[dict[str, dict[str, float | None]], list[str]]:
    import csv as _csv
    with open(path, encoding="utf-8", newline="") as fh:
        reader = _csv.DictReader(fh)
        columns = [c for c in reader.fieldnames if c not in ("id", "culture")]
        table: dict[str, dict[str, float | None]] = {}
        for row in reader:
            cells = {}
            for col in columns:
                raw = row[col]
                if raw == "" or raw is None:
                    cells[col] = None
                elif raw in ("true", "false"):
                    cells[col] = 1.0 if raw == "true" else 0.0
                else:
                    cells[col] = float(raw)
            table[row["id"]] = cells
    return table, columns


def cmd_render(args) -> int:
    manifest = _load_data(args.data)
    with open(args.embedding, encoding="utf-8") as fh:
        ids, coords = mapping.parse_embedding_csv(fh.read())
    cultures = {e.instance_id: e.label() for e in manifest.entries}
    missing = [i for i in ids if i not in cultures]
    if missing:
        raise CLIError(f"embedding ids not in manifest: {missing[:3]}")
    anchors = [e.instance_id for e in manifest.anchor_entries()]
    if args.color_by == "culture":
        config = render.RenderConfig(mode="culture", size=args.size,
                                     legend=not args.no_legend)
        svg = render.render_map(ids, coords, cultures, anchors, config)
    else:
        if not args.stats:
            raise CLIError("feature coloring needs --stats")
        table, columns = _read_features_csv(args.stats)
        if args.color_by not in columns:
            raise CLIError(f"feature {args.color_by!r} not in {args.stats} "
                           f"(has: {', '.join(columns)})")
        values = {i: table.get(i, {}).get(args.color_by) for i in ids}
        config = render.RenderConfig(mode="feature", feature=args.color_by,
                                     log_scale=args.log, size=args.size,
                                     legend=not args.no_legend)
        svg = render.render_map(ids, coords, cultures, anchors, config, values)
    write_atomic(args.out, svg)
    print(f"wrote {args.out}")
    return 0


def cmd_pipeline(args) -> int:
    t_all = time.perf_counter()
    os.makedirs(args.out, exist_ok=True)
    data_dir = os.path.join(args.out, "ds")
    timings: list[tuple[str, float, str]] = []

    def step(name, fn):
        t0 = time.perf_counter()
        result = fn()
        timings.append((name, time.perf_counter() - t0, result))
        return result

    manifest = None

    def gen():
        nonlocal manifest
        manifest = build_dataset(args.agents, args.seed, data_dir)
        return f"{len(manifest.entries)} entries"

    step("generate", gen)

    dm = None

    def dist():
        nonlocal dm
        dm = mapping.distance_matrix(manifest, args.metric, data_dir,
                                     threads=args.threads)
        write_atomic(os.path.join(args.out, "dist.csv"),
                     mapping.distance_matrix_to_csv(dm))
        labels, table = mapping.culture_distance_table(manifest, dm)
        write_atomic(os.path.join(args.out, "culture_distances.csv"),
                     mapping.culture_table_to_csv(labels, table))
        return f"{len(dm.ids)}x{len(dm.ids)} pairs"

    step("dist", dist)

    emb = None

    def embed():
        nonlocal emb
        emb = mapping.kamada_kawai_embed(dm, seed=args.seed, max_iters=args.iters)
        write_atomic(os.path.join(args.out, "emb.csv"),
                     mapping.embedding_to_csv(emb))
        return f"{emb.iterations} iterations, stress {emb.stress:.6g}"

    step("embed", embed)

    def stats():
        features = [f.strip() for f in args.features.split(",") if f.strip()]
        header, rows = mapping.feature_table(manifest, data_dir, features,
                                             bp_seed=args.seed)
        write_atomic(os.path.join(args.out, "stats.csv"),
                     mapping.features_to_csv(header, rows))
        return f"{len(rows)} rows"

    step("stats", stats)

    def draw():
        cultures = {e.instance_id: e.label() for e in manifest.entries}
        anchors = [e.instance_id for e in manifest.anchor_entries()]
        svg = render.render_map(emb.ids, emb.coords, cultures, anchors,
                                render.RenderConfig(mode="culture"))
        write_atomic(os.path.join(args.out, "map.svg"), svg)
        return "map.svg"

    step("render", draw)

    head = f"pipeline: agents={args.agents} seed={args.seed} metric={args.metric}"
    stable_lines = [head] + [f"  {name:<9} {result}" for name, _, result in timings]
    write_atomic(os.path.join(args.out, "summary.txt"),
                 "\n".join(stable_lines) + "\n")
    print(head)
    for name, secs, result in timings:
        print(f"  {name:<9} {secs:8.2f}s  {result}")
    print(f"  total     {time.perf_counter() - t_all:8.2f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
