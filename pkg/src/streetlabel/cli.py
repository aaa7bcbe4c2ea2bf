"""``streetlabel`` command line: label, filter, split, eval and crop."""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from collections import Counter
from pathlib import Path
from typing import Optional, Sequence

from . import metrics
from .index import MatchConfig, build_index
from .labeler import LabelConfig, label_pose
from .manifest import (
    FLAG_AMBIGUOUS,
    FLAG_NO_MATCH,
    LABEL_FIELDS,
    LABEL_KINDS,
    FilterPolicy,
    ManifestError,
    ManifestRow,
    SplitSpec,
    filter_rows,
    manifest_to_csv,
    read_manifest,
    split_rows,
    write_manifest,
)
from .osm import OsmParseError, load_network
from .pano import CropSpec, RasterBuffer, crop_pixel_map, dedupe_poses, parse_pano_metadata, resample

log = logging.getLogger("streetlabel")

CONFIG_ENV = "STREETLABEL_CONFIG"
EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _add_label_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("labeling")
    g.add_argument("--max-match-dist", type=float, default=25.0, metavar="M")
    g.add_argument("--heading-weight", type=float, default=5.0, metavar="W", help="score meters per radian (default 5)")
    g.add_argument("--drivable-angle", type=float, default=22.5, metavar="DEG")
    g.add_argument("--intersection-true", type=float, default=30.0, metavar="M")
    g.add_argument("--intersection-false", type=float, default=100.0, metavar="M")
    g.add_argument("--max-search", type=float, default=150.0, metavar="M")
    g.add_argument("--min-continuation", type=float, default=15.0, metavar="M")
    g.add_argument("--left-hand-traffic", action="store_true")
    g.add_argument("--cell-size", type=float, default=50.0, metavar="M")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="streetlabel", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("label", help="label camera poses against an OSM road network")
    p.add_argument("--osm", required=True, metavar="PATH")
    p.add_argument("--poses", required=True, metavar="PATH")
    p.add_argument("--out", required=True, metavar="PATH")
    p.add_argument("--csv", metavar="PATH", help="also write the manifest as CSV")
    p.add_argument("--summary", metavar="PATH", help="write the summary JSON here as well as stdout")
    p.add_argument("--yaw-sweep", type=_float_list, default=[0.0], metavar="DEG_LIST")
    p.add_argument("--min-spacing", type=float, default=5.0, metavar="M", help="pose dedupe spacing, 0 disables")
    p.add_argument("--jobs", type=int, default=1, metavar="N")
    _add_label_flags(p)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("filter", help="drop rows by policy")
    p.add_argument("manifest", metavar="MANIFEST")
    p.add_argument("--out", required=True, metavar="PATH")
    p.add_argument("--keep-ambiguous", action="store_true")
    p.add_argument("--keep-no-match", action="store_true")
    p.add_argument("--keep-perpendicular", action="store_true")
    p.add_argument("--min-lanes", type=int)
    p.add_argument("--max-lanes", type=int)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("split", help="spatially blocked train/val/test split")
    p.add_argument("manifest", metavar="MANIFEST")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--ratios", type=_float_list, default=[0.8, 0.1, 0.1], metavar="A,B,C")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--block-size", type=float, default=500.0, metavar="M")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("eval", help="score predictions against a truth manifest")
    p.add_argument("--pred", required=True, metavar="PATH")
    p.add_argument("--truth", required=True, metavar="PATH")
    p.add_argument("--report", metavar="PATH", help="write report lines (JSON) here")
    p.add_argument("--heading-sign", action="store_true",
                   help="score heading angle as a left/right rotation class instead of MAE")
    p.add_argument("--resize-factor", type=float, metavar="RF",
                   help="correct predicted heading angles by RF before scoring")
    p.add_argument("--rf-mode", choices=["multiply", "divide"], default="multiply")
    p.add_argument("--trend", action="store_true", help="truth is in different units; label the comparison as a trend")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("crop", help="perspective crops from equirectangular panoramas")
    p.add_argument("--poses", required=True, metavar="PATH")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--pano-template", metavar="TEMPLATE", help="panorama path, e.g. 'panos/{pano_id}.jpg'")
    p.add_argument("--yaw-sweep", type=_float_list, default=[0.0], metavar="DEG_LIST")
    p.add_argument("--size", type=int, default=227)
    p.add_argument("--fov", type=float, default=100.0, metavar="DEG")
    p.add_argument("--pitch", type=float, default=0.0, metavar="DEG")
    p.add_argument("--format", default="png")
    p.add_argument("--params-only", action="store_true", help="only write crop parameters")
    p.set_defaults(func=cmd_crop)

    _apply_config_file(sub)
    return parser


def _apply_config_file(sub) -> None:
    path = os.environ.get(CONFIG_ENV)
    if not path:
        return
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, ValueError) as exc:
        log.warning("ignoring config file %s: %s", path, exc)
        return
    for name, p in sub.choices.items():
        section = dict(cfg.get(name, {})) if isinstance(cfg.get(name), dict) else {}
        common = {k.replace("-", "_"): v for k, v in cfg.items() if not isinstance(v, dict)}
        known = {a.dest for a in p._actions}
        values = {k: v for k, v in {**common, **{k.replace("-", "_"): v for k, v in section.items()}}.items() if k in known}
        p.set_defaults(**values)


def label_config_from_args(args) -> LabelConfig:
    return LabelConfig(
        drivable_angle_rad=math.radians(args.drivable_angle),
        intersection_true_m=args.intersection_true,
        intersection_false_m=args.intersection_false,
        max_search_m=args.max_search,
        min_continuation_m=args.min_continuation,
        right_hand_traffic=not args.left_hand_traffic,
        match=MatchConfig(max_match_dist_m=args.max_match_dist, heading_weight=args.heading_weight),
    )


def label_rows(poses, network, index, config: LabelConfig, yaw_offsets_deg=(0.0,)):
    for pose in poses:
        for yaw in yaw_offsets_deg:
            view = pose.rotated(math.radians(yaw)) if yaw else pose
            yield ManifestRow.from_record(view, label_pose(view, network, index, config), yaw)


_worker: dict = {}


def _worker_init(osm_path, cell_size, config):
    net = load_network(osm_path)
    _worker.update(network=net, index=build_index(net, cell_size), config=config)


def _worker_label(job):
    pose, yaws = job
    return list(label_rows([pose], _worker["network"], _worker["index"], _worker["config"], yaws))


def summarize(rows: Sequence[ManifestRow]) -> dict:
    labels = {}
    for name in LABEL_FIELDS:
        c = Counter()
        for r in rows:
            v = getattr(r, name)
            if v is None:
                c["null"] += 1
            elif LABEL_KINDS[name] == "regression" and name != "num_lanes":
                c["present"] += 1
            else:
                c[json.dumps(v)] += 1
        labels[name] = dict(sorted(c.items()))
    return {
        "rows": len(rows),
        "no_match": sum(FLAG_NO_MATCH in r.flags for r in rows),
        "ambiguous": sum(FLAG_AMBIGUOUS in r.flags for r in rows),
        "labels": labels,
    }


def _read_poses(path):
    try:
        with open(path, encoding="utf-8") as fh:
            poses, diags = parse_pano_metadata(fh)
    except OSError as exc:
        raise DataError(f"cannot read poses: {exc}")
    if not poses:
        raise DataError("no poses" + (f" ({len(diags)} invalid records)" if diags else ""))
    return poses


def cmd_label(args) -> int:
    config = label_config_from_args(args)
    try:
        network = load_network(args.osm)
    except OSError as exc:
        raise DataError(f"cannot read OSM file: {exc}")
    except OsmParseError as exc:
        raise DataError(f"corrupt OSM file: {exc}")
    poses = dedupe_poses(_read_poses(args.poses), args.min_spacing)
    yaws = list(args.yaw_sweep) or [0.0]

    if args.jobs > 1:
        import multiprocessing

        with multiprocessing.Pool(args.jobs, _worker_init, (args.osm, args.cell_size, config)) as pool:
            rows = [r for chunk in pool.imap(_worker_label, ((p, yaws) for p in poses), chunksize=64) for r in chunk]
    else:
        index = build_index(network, args.cell_size)
        rows = list(label_rows(poses, network, index, config, yaws))

    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        write_manifest(rows, fh)
    if args.csv:
        Path(args.csv).write_text(manifest_to_csv(rows), encoding="utf-8")
    summary = summarize(rows)
    text = json.dumps(summary, indent=2, sort_keys=True)
    print(text)
    if args.summary:
        Path(args.summary).write_text(text + "\n", encoding="utf-8")
    if summary["rows"] == summary["no_match"]:
        raise DataError("no pose matched a road")
    return EXIT_OK


def _load_manifest(path) -> list[ManifestRow]:
    try:
        with open(path, encoding="utf-8") as fh:
            return read_manifest(fh)
    except OSError as exc:
        raise DataError(f"cannot read manifest: {exc}")
    except ManifestError as exc:
        raise DataError(f"{path}: {exc}")


def cmd_filter(args) -> int:
    rows = _load_manifest(args.manifest)
    policy = FilterPolicy(
        drop_ambiguous=not args.keep_ambiguous,
        drop_no_match=not args.keep_no_match,
        drop_perpendicular=not args.keep_perpendicular,
        min_lanes=args.min_lanes,
        max_lanes=args.max_lanes,
    )
    kept = filter_rows(rows, policy)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        write_manifest(kept, fh)
    print(f"kept {len(kept)} of {len(rows)} rows")
    return EXIT_OK


def cmd_split(args) -> int:
    try:
        spec = SplitSpec(tuple(args.ratios), args.seed, args.block_size)
    except ManifestError as exc:
        raise DataError(str(exc))
    rows = _load_manifest(args.manifest)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, part in zip(("train", "val", "test"), split_rows(rows, spec)):
        with open(out / f"{name}.jsonl", "w", encoding="utf-8", newline="\n") as fh:
            write_manifest(part, fh)
        print(f"{name}: {len(part)} rows")
    return EXIT_OK


def _read_jsonl(path) -> list[dict]:
    try:
        with open(path, encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}")
    except ValueError as exc:
        raise DataError(f"{path}: {exc}")


def cmd_eval(args) -> int:
    preds = _read_jsonl(args.pred)
    truth = [r.to_dict() for r in _load_manifest(args.truth)]
    kinds = dict(LABEL_KINDS)
    if args.resize_factor is not None:
        corr = metrics.ResizeCorrection(rf=args.resize_factor, mode=args.rf_mode)
        for p in preds:
            if p.get("heading_angle_deg") is not None:
                p["heading_angle_deg"] = math.degrees(metrics.apply_resize_factor(math.radians(p["heading_angle_deg"]), corr))
    if args.heading_sign:
        for rows in (preds, truth):
            for r in rows:
                v = r.get("heading_angle_deg")
                cls = None if v is None else metrics.heading_sign_class(math.radians(v))
                r["heading_sign"] = None if cls in (None, metrics.ON_AXIS) else cls == metrics.POSITIVE_ROTATION
        del kinds["heading_angle_deg"]
        kinds["heading_sign"] = metrics.BINARY
    try:
        report = metrics.eval_report(
            preds, truth, kinds, key=lambda r: (r.get("pano_id"), float(r.get("yaw_offset_deg") or 0.0))
        )
    except (metrics.MetricError, TypeError) as exc:
        raise DataError(str(exc))
    if args.trend:
        report.comparison = "trend"
    print(f"joined rows: {report.joined_rows}  comparison: {report.comparison}")
    print(report.table())
    if args.report:
        with open(args.report, "w", encoding="utf-8", newline="\n") as fh:
            for d in report.to_dicts():
                d["comparison"] = report.comparison
                fh.write(json.dumps(d) + "\n")
    return EXIT_OK


def crop_name(pano_id: str, yaw_deg: float, ext: str = "png") -> str:
    return f"{pano_id}_{yaw_deg:g}.{ext}"


def cmd_crop(args) -> int:
    poses = _read_poses(args.poses)
    if not args.params_only and not args.pano_template:
        raise DataError("--pano-template is required unless --params-only is given")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = 0
    with open(out / "crops.jsonl", "w", encoding="utf-8", newline="\n") as params:
        for pose in poses:
            pano = None
            if not args.params_only:
                path = args.pano_template.format(pano_id=pose.pano_id)
                try:
                    from PIL import Image

                    with Image.open(path) as im:
                        arr = im.convert("RGB")
                        pano = RasterBuffer.from_bytes(arr.width, arr.height, arr.tobytes())
                except OSError as exc:
                    log.warning("skipping %s: %s", pose.pano_id, exc)
                    continue
            src_w = pano.width if pano else pose.source_width_px
            src_h = pano.height if pano else pose.source_height_px
            for yaw in args.yaw_sweep:
                spec = CropSpec(src_w, src_h, args.size, args.size, math.radians(args.fov),
                                math.radians(yaw), math.radians(args.pitch))
                name = crop_name(pose.pano_id, yaw, args.format)
                if pano is not None:
                    from PIL import Image

                    crop = resample(pano, spec)
                    Image.fromarray(crop.data).save(out / name)
                    written += 1
                sx, sy = crop_pixel_map(spec)
                c = (args.size - 1) // 2
                params.write(json.dumps({
                    "pano_id": pose.pano_id,
                    "file": name if pano is not None else None,
                    "yaw_offset_deg": yaw,
                    "heading_deg": math.degrees(pose.rotated(math.radians(yaw)).heading),
                    "hfov_deg": args.fov,
                    "pitch_deg": args.pitch,
                    "out_size_px": [spec.out_width, spec.out_height],
                    "focal_px": spec.focal_px,
                    "source_size_px": [src_w, src_h],
                    "center_source_px": [float(sx[c, c]), float(sy[c, c])],
                }) + "\n")
    print(f"{written} crops written to {out}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except DataError as exc:
        print(f"streetlabel {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"streetlabel {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
