"""Command-line frontend.

Subcommands: score (one pair), batch (manifest -> CSV of scores), bench
(manifest -> correlation report JSON + scatter CSVs), maps (dump every
intermediate map for one image), config (print the effective
configuration).  Exit codes: 0 success, 1 internal failure, 2 usage or
input error.  RESIFT_CONFIG names a default config file.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

from . import bench as bench_mod
from .config import ReSiftConfig, format_config, load_config
from .errors import ResiftError
from .imageio import ScalarMap, dump_map, load_image
from .score import intermediate_maps, resift_score
from .sift import build_scale_space

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INPUT = 2


def _effective_config(path) -> ReSiftConfig:
    cfg = ReSiftConfig()
    env_path = os.environ.get("RESIFT_CONFIG")
    if env_path:
        cfg = load_config(env_path, cfg)
    if path:
        cfg = load_config(path, cfg)
    return cfg


def _fmt_value(v) -> str:
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return "inf" if v is not None else "none"
    return f"{v:.6g}"


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def cmd_score(args) -> int:
    cfg = _effective_config(args.config)
    ref = load_image(args.ref)
    dist = load_image(args.dist)
    result = resift_score(ref, dist, cfg)
    if args.json:
        payload = {
            "score": result.score,
            "matches": result.matched_count,
            "dist": _json_safe(result.percentile_distance),
            "timings_ms": result.timings_ms,
        }
        print(json.dumps(payload, sort_keys=True))
    else:
        print(
            f"score={_fmt_value(result.score)} matches={result.matched_count} "
            f"dist={_fmt_value(result.percentile_distance)}"
        )
    return EXIT_OK


def cmd_batch(args) -> int:
    cfg = _effective_config(args.config)
    records = bench_mod.parse_manifest(args.manifest)
    errors = []
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["ref", "dist", "score", "matches", "dist_threshold"])
        for rec in records:
            try:
                result = resift_score(load_image(rec.ref_path), load_image(rec.dist_path), cfg)
                writer.writerow(
                    [
                        rec.ref_path,
                        rec.dist_path,
                        repr(result.score),
                        result.matched_count,
                        _fmt_value(result.percentile_distance),
                    ]
                )
            except ResiftError as exc:
                writer.writerow([rec.ref_path, rec.dist_path, "NA", "NA", "NA"])
                errors.append(f"line {rec.line}: {type(exc).__name__}: {exc}")
    if errors:
        with open(f"{args.out}.errors", "w", encoding="utf-8") as fh:
            fh.write("\n".join(errors) + "\n")
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _effective_config(args.config)
    scatter_dir = args.scatter_dir
    if scatter_dir is None:
        scatter_dir = os.path.dirname(os.path.abspath(args.report)) or "."
    report = bench_mod.run_benchmark(
        args.manifest,
        cfg,
        database=args.database,
        category=args.category,
        jobs=args.jobs,
        scatter_dir=scatter_dir,
    )
    with open(args.report, "w", encoding="utf-8") as fh:
        fh.write(bench_mod.report_to_json(report))
    return EXIT_OK


def cmd_maps(args) -> int:
    cfg = _effective_config(args.config)
    img = load_image(args.ref)
    os.makedirs(args.dump_dir, exist_ok=True)
    maps = intermediate_maps(img, cfg)
    for name, smap in maps.items():
        dump_map(smap, os.path.join(args.dump_dir, f"{name}.f32"))
    scaled = ScalarMap(maps["pooled"].values * cfg.sift.input_scale)
    space = sift_mod.build_scale_space(scaled, cfg.sift)
    for octave, dog in enumerate(space.dogs):
        for layer in range(dog.shape[0]):
            dump_map(
                ScalarMap(dog[layer]),
                os.path.join(args.dump_dir, f"dog_o{octave}_l{layer}.f32"),
            )
    return EXIT_OK


def cmd_config(args) -> int:
    cfg = _effective_config(args.config)
    sys.stdout.write(format_config(cfg))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resift",
        description="Full-reference image quality scoring by reliability-weighted "
        "descriptor matching, with a correlation benchmark harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_score = sub.add_parser("score", help="score one reference/distorted pair")
    p_score.add_argument("--ref", required=True)
    p_score.add_argument("--dist", required=True)
    p_score.add_argument("--config", default=None)
    p_score.add_argument("--json", action="store_true")
    p_score.set_defaults(func=cmd_score)

    p_batch = sub.add_parser("batch", help="score every pair in a manifest")
    p_batch.add_argument("--manifest", required=True)
    p_batch.add_argument("--out", required=True)
    p_batch.add_argument("--config", default=None)
    p_batch.set_defaults(func=cmd_batch)

    p_bench = sub.add_parser("bench", help="run the correlation benchmark")
    p_bench.add_argument("--manifest", required=True)
    p_bench.add_argument("--report", required=True)
    p_bench.add_argument("--scatter-dir", default=None)
    p_bench.add_argument("--database", default=None)
    p_bench.add_argument("--category", default=None)
    p_bench.add_argument("--jobs", type=int, default=1)
    p_bench.add_argument("--config", default=None)
    p_bench.set_defaults(func=cmd_bench)

    p_maps = sub.add_parser("maps", help="dump intermediate maps for one image")
    p_maps.add_argument("--ref", required=True)
    p_maps.add_argument("--dump-dir", required=True)
    p_maps.add_argument("--config", default=None)
    p_maps.set_defaults(func=cmd_maps)

    p_config = sub.add_parser("config", help="print the effective configuration")
    p_config.add_argument("--show", action="store_true", default=True)
    p_config.add_argument("--config", default=None)
    p_config.set_defaults(func=cmd_config)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except ResiftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # internal failure
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
