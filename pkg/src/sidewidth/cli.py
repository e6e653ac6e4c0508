"""Command-line entry point for the full measurement pipeline.

Commands: synth, measure, eval, sweep, ablate, protocol, sample, aggregate,
plot, validate. Exit codes: 0 success, 1 the pipeline produced nothing,
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import sys

import numpy as np

from sidewidth import evaluate, ingest, netsample, pipeline, synth
from sidewidth.config import ConfigError, PipelineConfig, load_config

EXIT_OK = 0
EXIT_EMPTY = 1
EXIT_USAGE = 2

DEFAULT_SWEEP_HEIGHTS = [2.0, 2.25, 2.5, 2.75, 3.0]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sidewidth", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--seed", type=int, help="global RNG seed (overrides config)")
    p.add_argument("--workers", type=int, help="worker count for batch commands")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth", help="generate a synthetic benchmark")
    sp.add_argument("--n", type=int, required=True, help="number of scenes")
    sp.add_argument("--width-min", type=float, default=0.56)
    sp.add_argument("--width-max", type=float, default=3.94)
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--noise", type=float, default=0.0, help="depth noise sigma as a fraction")
    sp.add_argument("--scale-min", type=float, default=1.0, help="global scale range low")
    sp.add_argument("--scale-max", type=float, default=1.0, help="global scale range high")
    sp.add_argument("--camera-height", type=float, default=2.5, help="true camera height (m)")
    sp.add_argument("--road-width", type=float, default=6.0)
    sp.add_argument("--with-depth", action="store_true", help="also write (H,W,1) depth tensors")
    sp.add_argument("--image-width", type=int, default=synth.DEFAULT_IMAGE_WIDTH)
    sp.add_argument("--image-height", type=int, default=synth.DEFAULT_IMAGE_HEIGHT)
    sp.add_argument("--fx", type=float, default=synth.DEFAULT_FX)
    sp.add_argument("--fy", type=float, default=synth.DEFAULT_FY)
    sp.add_argument("--tilt", type=float, default=synth.DEFAULT_MOUNT_TILT_DEG)
    sp.set_defaults(func=cmd_synth)

    mp = sub.add_parser("measure", help="measure widths for a manifest")
    mp.add_argument("--manifest", required=True)
    mp.add_argument("--out", required=True, help="JSON-lines results path")
    mp.add_argument("--h-cam", type=float,
                    help="camera height prior for entries without one (m)")
    mp.set_defaults(func=cmd_measure)

    ep = sub.add_parser("eval", help="score results against reference widths")
    ep.add_argument("--results", required=True)
    ep.add_argument("--manifest", required=True)
    ep.add_argument("--out", help="metrics CSV path")
    ep.add_argument("--plot", help="SVG output path")
    ep.add_argument("--label", default="run")
    ep.set_defaults(func=cmd_eval)

    wp = sub.add_parser("sweep", help="camera-height sensitivity sweep")
    wp.add_argument("--manifest", required=True)
    wp.add_argument("--heights", type=float, nargs="+", default=DEFAULT_SWEEP_HEIGHTS)
    wp.add_argument("--out", help="metrics CSV path")
    wp.add_argument("--plot", help="SVG output path")
    wp.set_defaults(func=cmd_sweep)

    ap = sub.add_parser("ablate", help="run pipeline ablation variants")
    ap.add_argument("--manifest", required=True)
    ap.add_argument("--variants", nargs="+", default=list(pipeline.VARIANTS),
                    choices=list(pipeline.VARIANTS))
    ap.add_argument("--out", help="metrics CSV path")
    ap.add_argument("--plot", help="SVG output path")
    ap.set_defaults(func=cmd_ablate)

    pp = sub.add_parser("protocol", help="run one geometry-evaluation category")
    pp.add_argument("--manifest", required=True)
    pp.add_argument("--category", type=int, required=True, choices=[1, 2, 3])
    pp.add_argument("--out", help="metrics CSV path")
    pp.add_argument("--label")
    pp.set_defaults(func=cmd_protocol)

    np_ = sub.add_parser("sample", help="sample imaging points along a street network")
    np_.add_argument("--network", required=True, help="GeoJSON FeatureCollection of LineStrings")
    np_.add_argument("--out", required=True, help="sample-plan CSV path")
    np_.add_argument("--interval", type=float, help="sampling interval (m)")
    np_.add_argument("--dedup-cell", type=float, help="dedup grid cell (m)")
    np_.set_defaults(func=cmd_sample)

    gp = sub.add_parser("aggregate", help="aggregate measurements to street segments")
    gp.add_argument("--results", required=True)
    gp.add_argument("--manifest", required=True)
    gp.add_argument("--network", required=True)
    gp.add_argument("--out", required=True, help="segment GeoJSON path")
    gp.set_defaults(func=cmd_aggregate)

    lp = sub.add_parser("plot", help="bar chart of MAE across metrics CSVs")
    lp.add_argument("--csv", nargs="+", required=True)
    lp.add_argument("--out", required=True, help="SVG output path")
    lp.add_argument("--ref-label", help="row label for the dashed reference line "
                                        "(default: lowest MAE)")
    lp.set_defaults(func=cmd_plot)

    vp = sub.add_parser("validate", help="validate manifest and referenced files")
    vp.add_argument("--manifest", required=True)
    vp.set_defaults(func=cmd_validate)
    return p


def _load_cfg(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if args.workers is not None:
        cfg = dataclasses.replace(cfg, workers=args.workers)
    return cfg.validate()


def cmd_synth(args, cfg, parser) -> int:
    if args.n < 1:
        parser.error("--n must be >= 1")
    cam = synth.default_camera(args.image_width, args.image_height, args.fx, args.fy)
    manifest = synth.generate_benchmark(
        args.n, (args.width_min, args.width_max), cfg.seed, args.out,
        noise_sigma_frac=args.noise, global_scale_range=(args.scale_min, args.scale_max),
        camera_height_m=args.camera_height, road_width_m=args.road_width,
        mount_tilt_deg=args.tilt, cam=cam, with_depth=args.with_depth)
    print(f"wrote {args.n} scenes, manifest {manifest}")
    return EXIT_OK


def cmd_measure(args, cfg, parser) -> int:
    entries = ingest.load_manifest(args.manifest)
    results = pipeline.run_manifest(entries, cfg, h_cam_default=args.h_cam)
    pipeline.write_results_jsonl(args.out, results)
    n_accepted = sum(1 for r, _ in results if r.status == "accepted")
    n_rej = sum(1 for r, _ in results if r.status == "rejected")
    n_fail = sum(1 for r, _ in results if r.status == "failed")
    print(f"measured {len(results)} images: {n_accepted} accepted, {n_rej} rejected, {n_fail} failed")
    return EXIT_OK if n_accepted > 0 else EXIT_EMPTY


def cmd_eval(args, cfg, parser) -> int:
    entries = ingest.load_manifest(args.manifest)
    records = pipeline.load_results_jsonl(args.results)
    pairs, n_rejected = evaluate.pairs_from_results(records, entries)
    if not pairs:
        print("error: no accepted measurements with reference widths", file=sys.stderr)
        return EXIT_EMPTY
    report = evaluate.compute_metrics(pairs)
    report.n_rejected = n_rejected
    rows = [(args.label, report)]
    if args.out:
        evaluate.write_metrics_csv(args.out, rows)
    if args.plot:
        evaluate.write_mae_bar_svg(args.plot, [(args.label, report.mae_m)])
    print(evaluate.format_metrics_table(rows))
    return EXIT_OK


def cmd_sweep(args, cfg, parser) -> int:
    entries = ingest.load_manifest(args.manifest)
    sweep = evaluate.sweep_camera_height(entries, args.heights, cfg)
    rows = [(f"h_cam={h:.2f}", report) for h, report in sweep]
    if args.out:
        evaluate.write_metrics_csv(args.out, rows)
    if args.plot:
        evaluate.write_mae_bar_svg(args.plot, [(label, r.mae_m) for label, r in rows],
                                   title="MAE by assumed camera height")
    print(evaluate.format_metrics_table(rows))
    return EXIT_OK if rows else EXIT_EMPTY


def cmd_ablate(args, cfg, parser) -> int:
    entries = ingest.load_manifest(args.manifest)
    rows = []
    for variant in args.variants:
        rows.append((variant, evaluate.run_ablation(entries, variant, cfg)))
    if args.out:
        evaluate.write_metrics_csv(args.out, rows)
    if args.plot:
        maes = [(label, r.mae_m) for label, r in rows]
        ref = min((m for _, m in maes if m is not None), default=None)
        evaluate.write_mae_bar_svg(args.plot, maes, ref_mae=ref, title="MAE by ablation variant")
    print(evaluate.format_metrics_table(rows))
    return EXIT_OK


def cmd_protocol(args, cfg, parser) -> int:
    entries = ingest.load_manifest(args.manifest)
    spec = evaluate.ProtocolSpec.for_category(args.category)
    report = evaluate.run_protocol(entries, spec, cfg)
    label = args.label or f"category{args.category}"
    rows = [(label, report)]
    if args.out:
        evaluate.write_metrics_csv(args.out, rows)
    print(evaluate.format_metrics_table(rows))
    return EXIT_OK if report.n_evaluated else EXIT_EMPTY


def cmd_sample(args, cfg, parser) -> int:
    segments = netsample.load_network_geojson(args.network)
    interval = args.interval if args.interval is not None else cfg.sample_interval_m
    cell = args.dedup_cell if args.dedup_cell is not None else cfg.dedup_cell_m
    points = []
    for segment in segments:
        points.extend(netsample.sample_segment(segment, interval))
    points = netsample.dedup_grid(points, cell)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["segment_id", "lon", "lat", "chainage_m", "heading_deg"])
        for p in points:
            for heading in p.headings_deg:
                writer.writerow([p.segment_id, repr(p.position[0]), repr(p.position[1]),
                                 repr(p.chainage_m), repr(heading)])
    print(f"wrote {len(points)} sample points ({2 * len(points)} headings) from "
          f"{len(segments)} segments")
    return EXIT_OK if points else EXIT_EMPTY


def cmd_aggregate(args, cfg, parser) -> int:
    entries = ingest.load_manifest(args.manifest)
    records = pipeline.load_results_jsonl(args.results)
    segments = netsample.load_network_geojson(args.network)
    pairs = netsample.pairs_from_results(records, entries)
    segment_records = netsample.aggregate_segments(pairs)
    netsample.save_segment_records_geojson(args.out, segment_records, segments)
    coverage = netsample.coverage_report(segment_records, segments)
    med = (f"{coverage.median_of_medians_m:.2f} m"
           if coverage.median_of_medians_m is not None else "n/a")
    print(f"covered {coverage.covered}/{coverage.total} segments "
          f"({coverage.coverage_pct}%), median of medians {med}")
    return EXIT_OK if segment_records else EXIT_EMPTY


def cmd_plot(args, cfg, parser) -> int:
    rows = []
    for path in args.csv:
        for record in evaluate.read_metrics_csv(path):
            mae = float(record["mae_m"]) if record["mae_m"] else None
            rows.append((record["variant"], mae))
    ref = None
    if args.ref_label is not None:
        for label, mae in rows:
            if label == args.ref_label:
                ref = mae
    else:
        ref = min((m for _, m in rows if m is not None), default=None)
    evaluate.write_mae_bar_svg(args.out, rows, ref_mae=ref)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_validate(args, cfg, parser) -> int:
    try:
        entries = ingest.load_manifest(args.manifest)
    except ingest.IngestError as exc:
        print(f"INVALID manifest: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    n_bad = 0
    for entry in entries:
        problems = []
        geometry = "?"
        try:
            arr = np.load(entry.point_map_path, mmap_mode="r", allow_pickle=False)
            if arr.ndim == 3 and arr.shape[2] == 3:
                pm = ingest.load_point_map(entry.point_map_path)
                geometry = "point_map"
            elif arr.ndim == 3 and arr.shape[2] == 1:
                ingest.load_depth_map(entry.point_map_path)
                pm = None
                geometry = "depth_map"
            else:
                raise ingest.IngestError(
                    f"{entry.point_map_path}: wrong shape {arr.shape} for a geometry tensor")
        except Exception as exc:
            problems.append(str(exc))
            pm = None
        try:
            mask = ingest.load_mask(entry.mask_path, cfg.class_map())
            if pm is not None:
                ingest.validate_pair(pm, mask)
        except Exception as exc:
            problems.append(str(exc))
        if problems:
            n_bad += 1
            print(f"INVALID {entry.image_id}: " + "; ".join(problems))
        else:
            print(f"OK {entry.image_id} ({geometry})")
    print(f"validated {len(entries)} entries, {n_bad} invalid")
    return EXIT_OK if n_bad == 0 else EXIT_EMPTY


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_cfg(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args, cfg, parser)
    except (ingest.IngestError, netsample.NetworkError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
