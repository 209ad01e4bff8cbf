"""``rocapkit`` command line.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Diagnostics are a single line on standard error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DataError, NumericalError, RocapError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3

log = logging.getLogger("rocapkit")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _write_json(path, data) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(data, indent=1) + "\n")


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise DataError(f"no such file: {path}") from None
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: invalid JSON ({e})") from None


def _pick(value, cfg, key, what):
    if value is not None:
        return value
    if key in cfg.paths:
        return cfg.paths[key]
    raise UsageError(f"{what} is required (option or config paths.{key})")


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("ROCAPKIT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"ROCAPKIT_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


# --------------------------------------------------------------------------
# subcommands

def cmd_calibrate(args, cfg) -> int:
    from .camera import estimate_planar_pose, read_corners_csv
    from .handeye import Station, calibrate, calibration_to_json
    from .kinematics import forward_kinematics
    from .transforms import transform_from_list

    stations_path = Path(_pick(args.stations, cfg, "stations", "--stations"))
    data = _read_json(stations_path)
    if not isinstance(data, list):
        raise DataError("stations file must hold a JSON list")
    stations = []
    try:
        for n, s in enumerate(data):
            if "base_to_gripper" in s:
                b_g = transform_from_list(s["base_to_gripper"])
            else:
                b_g = forward_kinematics(cfg.chain, s["joint_state"])
            if "camera_to_target" in s:
                c_t = transform_from_list(s["camera_to_target"])
            else:
                corners = read_corners_csv(stations_path.parent / s["corners"])
                c_t = estimate_planar_pose(cfg.intrinsics, cfg.checkerboard, corners)
            stations.append(Station(b_g, c_t))
    except (KeyError, ValueError, OSError) as e:
        raise DataError(f"station {n}: {e}") from None
    result = calibrate(stations, args.pairing)
    out = _pick(args.out, cfg, "calibration", "--out")
    _write_json(out, calibration_to_json(result))
    print(f"calibrated from {len(stations)} stations ({result.n_pairs} pairs): "
          f"rot rms {np.degrees(result.rot_residual_rms):.4f} deg, "
          f"trans rms {result.trans_residual_rms * 1000:.3f} mm")
    return EXIT_OK


def cmd_plan(args, cfg) -> int:
    from .sampler import (build_capture_plan, dedup_by_arc, export_coverage, filter_reachable,
                          plan_to_dict, sample_euler_grid)

    sp = cfg.sampler
    step = args.step if args.step is not None else sp["step_deg"]
    threshold = args.threshold if args.threshold is not None else sp["threshold"]
    obj = cfg.object(args.object)
    samples = dedup_by_arc(sample_euler_grid(step), threshold)
    samples = filter_reachable(samples, cfg.chain, sp["capture_position"], cfg.tool_offset,
                               cfg.home, cfg.stage_seed("plan"), _threads(args),
                               sp["position_jitter"])
    coverage = _pick(args.coverage, cfg, "coverage", "--coverage")
    Path(coverage).parent.mkdir(parents=True, exist_ok=True)
    export_coverage(samples, coverage)
    plan = build_capture_plan(samples, obj, cfg.chain, sp["capture_position"], sp["ordering"])
    _write_json(_pick(args.out, cfg, "plan", "--out"), plan_to_dict(plan))
    n_ret = sum(s.retained for s in samples)
    n_reach = sum(s.reachable for s in samples)
    print(f"{len(samples)} samples, {n_ret} retained, {n_reach} reachable; "
          f"{len(plan.waypoints)} waypoints ({plan.n_pauses} operator pauses)")
    return EXIT_OK


def _wait_for_operator(event) -> None:
    print(f"change the object to state {event['state_id']!r}, then press Enter",
          file=sys.stderr)
    sys.stdin.readline()


def cmd_capture(args, cfg) -> int:
    from .capture import run_capture
    from .handeye import calibration_from_json
    from .sampler import plan_from_dict

    plan = plan_from_dict(_read_json(_pick(args.plan, cfg, "plan", "--plan")))
    cal_path = args.calibration or cfg.paths.get("calibration")
    if cal_path is None or not Path(cal_path).exists():
        from .errors import CalibrationMissing
        raise CalibrationMissing(f"calibration file not found: {cal_path}")
    calibration = calibration_from_json(_read_json(cal_path))
    obj = cfg.object(args.object or plan.object_ref)
    out = Path(_pick(args.out, cfg, "manifest", "--out"))
    frames = args.frames or cfg.paths.get("frames")
    acknowledge = _wait_for_operator if args.wait else None
    manifest = run_capture(plan, calibration, cfg.intrinsics, obj,
                           mode="dry_run" if args.dry_run else "sim",
                           seed=cfg.stage_seed("capture"), chain=cfg.chain,
                           frame_dir=frames, image_ext=cfg.render["image_ext"],
                           relative_to=out.parent, object_extent=cfg.render["object_extent"],
                           acknowledge=acknowledge, calibration_ref=str(cal_path))
    _write_json(out, manifest.to_dict())
    for e in manifest.events:
        print(f"operator marker: state {e['state_id']} at waypoint {e['waypoint']}",
              file=sys.stderr)
    print(f"{len(manifest.records)} records, {len(manifest.events)} operator markers")
    return EXIT_OK


def _load_manifest(path):
    from .capture import Manifest

    try:
        return Manifest.from_dict(_read_json(path))
    except (KeyError, ValueError, TypeError) as e:
        raise DataError(f"{path}: malformed manifest ({e})") from None


def cmd_annotate(args, cfg) -> int:
    from .annotate import make_prompts, write_prompts
    from .capture import read_image
    from .errors import FullyBehind, OutsideImage

    mpath = Path(_pick(args.manifest, cfg, "manifest", "--manifest"))
    manifest = _load_manifest(mpath)
    a = cfg.annotate
    green = {"hue_range": tuple(a["hue_range"]), "min_sat": a["min_sat"],
             "min_val": a["min_val"], "min_count": a["min_count"]}
    prompts, skipped = [], 0
    for r in manifest.records:
        image = None
        if r.image_path:
            p = mpath.parent / r.image_path
            if p.exists():
                image = read_image(p)
                if image.ndim != 3:
                    image = None
        try:
            prompts.append(make_prompts(r, manifest.intrinsics, image, a["cube_size"], **green))
        except (FullyBehind, OutsideImage):
            skipped += 1
    out = _pick(args.out, cfg, "prompts", "--out")
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    write_prompts(out, prompts)
    print(f"{len(prompts)} prompt sets written, {skipped} records not visible")
    return EXIT_OK


def cmd_validate_masks(args, cfg) -> int:
    from .annotate import find_mask, mask_report_to_dict, read_prompts, validate_mask
    from .capture import read_image

    ppath = Path(_pick(args.prompts, cfg, "prompts", "--prompts"))
    prompts = read_prompts(ppath)
    mask_dir = Path(_pick(args.masks, cfg, "masks", "--masks"))
    ratio = args.min_inside_ratio if args.min_inside_ratio is not None \
        else cfg.annotate["min_inside_ratio"]
    reports, missing = [], 0
    for p in prompts:
        mp = find_mask(mask_dir, p.record_id)
        if mp is None:
            missing += 1
            continue
        mask = read_image(mp)
        shape = None
        if p.image_path and (ppath.parent / p.image_path).exists():
            shape = read_image(ppath.parent / p.image_path).shape
        reports.append(mask_report_to_dict(validate_mask(mask, p, ratio, shape)))
    if args.out:
        _write_json(args.out, reports)
    n_acc = sum(r["verdict"] == "accept" for r in reports)
    print(f"{n_acc} accepted, {len(reports) - n_acc} discarded, {missing} without mask")
    return EXIT_OK


def cmd_augment(args, cfg) -> int:
    from .annotate import augment, sample_augment_params
    from .capture import read_image, write_image

    mpath = Path(_pick(args.manifest, cfg, "manifest", "--manifest"))
    manifest = _load_manifest(mpath)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng_seed = cfg.stage_seed("augment")
    derived = []
    for k, r in enumerate(manifest.records):
        if not r.image_path:
            continue
        img = read_image(mpath.parent / r.image_path)
        params = sample_augment_params(cfg.augmentation, rng_seed + k, args.n)
        for j, p in enumerate(params):
            dst = out_dir / f"{r.record_id}_aug{j:02d}{Path(r.image_path).suffix}"
            write_image(dst, augment(img, p))
            derived.append({"record_id": r.record_id,
                            "image_path": os.path.relpath(dst, mpath.parent),
                            "exposure_gain": p.exposure_gain, "contrast": p.contrast,
                            "saturation": p.saturation, "seed": p.seed})
    manifest.augmentations = derived
    _write_json(args.out or mpath, manifest.to_dict())
    print(f"{len(derived)} augmented images")
    return EXIT_OK


def cmd_evaluate(args, cfg) -> int:
    from .evalkit import evaluate, read_predictions

    manifest = _load_manifest(_pick(args.manifest, cfg, "manifest", "--manifest"))
    ppath = _pick(args.predictions, cfg, "predictions", "--predictions")
    try:
        preds = read_predictions(ppath)
    except FileNotFoundError:
        raise DataError(f"no such file: {ppath}") from None
    except (KeyError, ValueError, TypeError) as e:
        raise DataError(f"{ppath}: malformed predictions ({e})") from None
    report = evaluate(preds, manifest, args.threshold, args.strict, args.method, args.condition)
    if args.out:
        _write_json(args.out, report.to_dict())
    print(f"{report.mean_accuracy:.1f}")
    return EXIT_OK


def cmd_report(args, cfg) -> int:
    from .evalkit import EvalReport, render_report

    reports = []
    for path in args.reports:
        data = _read_json(path)
        for d in data if isinstance(data, list) else [data]:
            reports.append(EvalReport.from_dict(d))
    if not reports:
        raise DataError("no reports given")
    text, csv_text = render_report(reports)
    sys.stdout.write(text)
    out = args.csv or cfg.paths.get("report")
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(csv_text)
    return EXIT_OK


def cmd_init_config(args, cfg) -> int:
    from .config import default_config

    text = json.dumps(default_config(), indent=1) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rocapkit", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"rocapkit {__version__}")
    p.add_argument("--config", help="toolkit config JSON (defaults built in)")
    p.add_argument("--threads", type=int, help="worker processes (env ROCAPKIT_THREADS)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    s = sub.add_parser("calibrate", help="solve eye-to-hand calibration from stations")
    s.add_argument("--stations")
    s.add_argument("--out")
    s.add_argument("--pairing", choices=["auto", "all", "consecutive"], default="auto")
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("plan", help="sample orientations and build a capture plan")
    s.add_argument("--out")
    s.add_argument("--coverage")
    s.add_argument("--object")
    s.add_argument("--step", type=float)
    s.add_argument("--threshold", type=float)
    s.set_defaults(func=cmd_plan)

    s = sub.add_parser("capture", help="run a simulated capture session")
    mode = s.add_mutually_exclusive_group(required=True)
    mode.add_argument("--sim", action="store_true")
    mode.add_argument("--dry-run", action="store_true")
    s.add_argument("--plan")
    s.add_argument("--calibration")
    s.add_argument("--object")
    s.add_argument("--out")
    s.add_argument("--frames", help="directory for rendered frames (sim mode)")
    s.add_argument("--wait", action="store_true", help="block for operator at manual state changes")
    s.set_defaults(func=cmd_capture)

    s = sub.add_parser("annotate", help="write segmentation prompts for a manifest")
    s.add_argument("--manifest")
    s.add_argument("--out")
    s.set_defaults(func=cmd_annotate)

    s = sub.add_parser("validate-masks", help="check externally produced masks against prompts")
    s.add_argument("--prompts")
    s.add_argument("--masks")
    s.add_argument("--out")
    s.add_argument("--min-inside-ratio", type=float)
    s.set_defaults(func=cmd_validate_masks)

    s = sub.add_parser("augment", help="photometric augmentation of captured frames")
    s.add_argument("--manifest")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--out", help="manifest to write (default: update in place)")
    s.add_argument("-n", type=int, default=1, help="augmented copies per frame")
    s.set_defaults(func=cmd_augment)

    s = sub.add_parser("evaluate", help="orientation accuracy of predictions")
    s.add_argument("--manifest")
    s.add_argument("--predictions")
    s.add_argument("--threshold", type=float, default=0.35)
    s.add_argument("--strict", action="store_true")
    s.add_argument("--method", default="ours")
    s.add_argument("--condition")
    s.add_argument("--out")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("report", help="render evaluation reports as a comparison table")
    s.add_argument("reports", nargs="+")
    s.add_argument("--csv")
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("init-config", help="print the default config")
    s.add_argument("--out")
    s.set_defaults(func=cmd_init_config)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"rocapkit: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)
    if args.command is None:
        print("rocapkit: a subcommand is required (see --help)", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        from .config import load_config

        cfg = load_config(args.config)
        return args.func(args, cfg)
    except UsageError as e:
        print(f"rocapkit {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as e:
        print(f"rocapkit {args.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DataError, RocapError) as e:
        print(f"rocapkit {args.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_DATA
    except OSError as e:
        print(f"rocapkit {args.command}: {e}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
