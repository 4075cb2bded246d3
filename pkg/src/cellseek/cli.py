"""Command-line front-end; every subcommand is a thin wrapper over the core
package and writes a run manifest next to its outputs.

Exit codes: 0 success, 1 internal error, 2 usage or input error.  All
diagnostics go to stderr; data only lands in files.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from . import config as config_mod
from .bench import (
    GenerationError,
    NoiseSpec,
    SceneSpec,
    add_noise,
    aggregate,
    evaluate_detections,
    format_table,
    generate,
    parse_scene,
    random_scene,
    scene_to_text,
    truth_from_json,
    truth_to_json,
)
from .detector import DetectionReport, detect, detect_on_edges
from .edgemap import EdgeMap
from .imaging import GrayImage, PnmError, load_image, overlay_ellipses, save_image, to_binary
from .segmentation import ConfigError, morphological_edges, segment, wbc_mask

STANDARD_CONDITIONS = (
    ("clean", None, 0.0),
    ("salt_pepper_5", "salt_pepper", 0.05),
    ("salt_pepper_10", "salt_pepper", 0.10),
    ("gaussian_5", "gaussian", 5.0),
    ("gaussian_10", "gaussian", 10.0),
)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(outdir: Path, stem: str, subcommand: str, inputs: list[Path], outputs: list[Path], cfg: dict) -> Path:
    manifest = {
        "subcommand": subcommand,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": {str(p): _sha256(p) for p in outputs},
        "config": cfg,
        "seed": cfg.get("seed"),
    }
    path = outdir / f"{stem}.manifest.json"
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return path


def _resolved_config(args) -> dict:
    file_layer = None
    if getattr(args, "config", None):
        file_layer = config_mod.parse_config_text(Path(args.config).read_text())
    flag_layer = {
        key: getattr(args, attr, None)
        for key, attr in (
            ("seed", "seed"),
            ("threshold", "threshold"),
            ("max_ellipses", "max_ellipses"),
            ("population", "population"),
            ("factor", "factor"),
            ("crossover", "crossover"),
            ("iterations", "iterations"),
            ("suppression_radius", "suppression_radius"),
            ("min_axis", "min_axis"),
            ("dilate", "dilate"),
            ("patience", "patience"),
            ("num_classes", "num_classes"),
            ("em_iterations", "em_iterations"),
            ("diffusion_steps", "diffusion_steps"),
            ("diffusion_lambda", "diffusion_lambda"),
            ("wbc_class", "wbc_class"),
            ("iou", "iou"),
        )
    }
    return config_mod.resolve(file_layer, flag_layer)


def _out(args) -> Path:
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    return outdir


def cmd_segment(args) -> int:
    cfg = _resolved_config(args)
    img = load_image(args.input)
    seg_cfg = config_mod.build_seg_config(cfg)
    cmap = segment(img, seg_cfg)
    if cmap.degenerate:
        print("warning: degenerate image, single intensity class", file=sys.stderr)
    mask = wbc_mask(cmap, seg_cfg)

    outdir = _out(args)
    stem = Path(args.input).stem
    labels_path = outdir / f"{stem}.labels.pgm"
    mask_path = outdir / f"{stem}.mask.pgm"
    save_image(GrayImage(cmap.labels.astype(np.uint8)), labels_path)
    save_image(mask, mask_path)
    _write_manifest(outdir, stem, "segment", [Path(args.input)], [labels_path, mask_path], cfg)
    return 0


def cmd_edges(args) -> int:
    cfg = _resolved_config(args)
    mask = to_binary(load_image(args.input))
    em = morphological_edges(mask)
    outdir = _out(args)
    stem = Path(args.input).stem
    edges_path = outdir / f"{stem}.edges.pgm"
    save_image(em.to_binary_image(), edges_path)
    _write_manifest(outdir, stem, "edges", [Path(args.input)], [edges_path], cfg)
    return 0


def cmd_detect(args) -> int:
    cfg = _resolved_config(args)
    det_cfg = config_mod.build_detector_config(cfg)
    img = load_image(args.input)
    if args.edges_only:
        em = EdgeMap.from_binary_image(to_binary(img))
        report = detect_on_edges(em, det_cfg, seed=cfg["seed"])
    else:
        report = detect(img, det_cfg, seed=cfg["seed"])
    if report.diagnostic:
        print(f"note: {report.diagnostic}", file=sys.stderr)
    print(
        f"{len(report.ellipses)} ellipse(s) in {report.rounds} round(s), {report.wall_time_s:.2f}s",
        file=sys.stderr,
    )

    outdir = _out(args)
    stem = Path(args.input).stem
    report_path = outdir / f"{stem}.report.json"
    overlay_path = outdir / f"{stem}.overlay.ppm"
    report_path.write_text(report.to_json())
    save_image(overlay_ellipses(img, [e for e, _ in report.ellipses]), overlay_path)
    _write_manifest(outdir, stem, "detect", [Path(args.input)], [report_path, overlay_path], cfg)
    return 0


def _scene_from_args(args, cfg: dict) -> SceneSpec:
    if args.spec:
        return parse_scene(Path(args.spec).read_text())
    return random_scene(
        args.width,
        args.height,
        args.cells,
        rng_seed=cfg["seed"],
        distractors=args.distractors,
        overlapping_pairs=args.overlap_pairs,
        deform=args.deform,
    )


def cmd_synth(args) -> int:
    cfg = _resolved_config(args)
    spec = _scene_from_args(args, cfg)
    img, truth = generate(spec)
    outdir = _out(args)
    name = args.name
    img_path = outdir / f"{name}.pgm"
    truth_path = outdir / f"{name}.truth.json"
    scene_path = outdir / f"{name}.scene"
    save_image(img, img_path)
    truth_path.write_text(truth_to_json(truth, (spec.width, spec.height)))
    scene_path.write_text(scene_to_text(spec))
    inputs = [Path(args.spec)] if args.spec else []
    _write_manifest(outdir, name, "synth", inputs, [img_path, truth_path, scene_path], cfg)
    return 0


def cmd_noise(args) -> int:
    cfg = _resolved_config(args)
    img = load_image(args.input)
    spec = NoiseSpec(args.noise, args.level, rng_seed=cfg["seed"])
    noisy = add_noise(img, spec)
    outdir = _out(args)
    stem = Path(args.input).stem
    tag = f"{args.noise}_{args.level:g}".replace(".", "p")
    out_path = outdir / f"{stem}.{tag}.pgm"
    save_image(noisy, out_path)
    _write_manifest(outdir, stem, "noise", [Path(args.input)], [out_path], cfg)
    return 0


def _condition_seed(master: int, scene_idx: int, cond_idx: int, stream: int) -> int:
    ss = np.random.SeedSequence((master, scene_idx, cond_idx, stream))
    return int(ss.generate_state(1, np.uint64)[0])


def cmd_bench(args) -> int:
    cfg = _resolved_config(args)
    det_cfg = config_mod.build_detector_config(cfg)
    spec_dir = Path(args.spec_dir)
    scene_files = sorted(spec_dir.glob("*.scene"))
    if not scene_files:
        raise FileNotFoundError(f"no .scene files under {spec_dir}")

    if args.noise:
        conditions = [(f"{args.noise}_{args.level:g}".replace(".", "p"), args.noise, args.level)]
        if args.include_clean:
            conditions.insert(0, ("clean", None, 0.0))
    else:
        conditions = list(STANDARD_CONDITIONS)

    scenes = []
    for path in scene_files:
        spec = parse_scene(path.read_text())
        img, truth = generate(spec)
        scenes.append((path.stem, spec, img, truth))

    outdir = _out(args)
    outputs = []
    rows = []
    for cond_idx, (label, kind, level) in enumerate(conditions):
        per_scene = {}
        results = []
        for scene_idx, (name, spec, img, truth) in enumerate(scenes):
            work = img
            if kind is not None:
                noise_seed = _condition_seed(cfg["seed"], scene_idx, cond_idx, 1)
                work = add_noise(img, NoiseSpec(kind, level, rng_seed=noise_seed))
            det_seed = _condition_seed(cfg["seed"], scene_idx, cond_idx, 0)
            report = detect(work, det_cfg, seed=det_seed)
            res = evaluate_detections(report, truth, (spec.width, spec.height), iou_threshold=cfg["iou"])
            per_scene[name] = res.to_dict()
            results.append(res)
            print(
                f"[{label}] {name}: {res.detected}/{res.ground_truth} detected, "
                f"{res.false_alarms} false alarms ({report.rounds} rounds)",
                file=sys.stderr,
            )
        agg = aggregate(results)
        rows.append((label, agg))
        cond_path = outdir / f"eval_{label}.json"
        cond_path.write_text(
            json.dumps(
                {"condition": label, "aggregate": agg.to_dict(), "scenes": per_scene},
                sort_keys=True,
                indent=2,
            )
            + "\n"
        )
        outputs.append(cond_path)

    table_path = outdir / "table.txt"
    table_path.write_text(format_table(rows))
    outputs.append(table_path)
    _write_manifest(outdir, "bench", "bench", scene_files, outputs, cfg)
    print(format_table(rows), file=sys.stderr, end="")
    return 0


def cmd_eval(args) -> int:
    cfg = _resolved_config(args)
    report_data = json.loads(Path(args.report).read_text())
    detections = DetectionReport.ellipses_from_dict(report_data)
    truth, frame = truth_from_json(Path(args.truth).read_text())
    res = evaluate_detections(detections, truth, frame, iou_threshold=cfg["iou"])
    outdir = _out(args)
    stem = Path(args.report).stem.replace(".report", "")
    eval_path = outdir / f"{stem}.eval.json"
    eval_path.write_text(json.dumps(res.to_dict(), sort_keys=True, indent=2) + "\n")
    table_path = outdir / f"{stem}.eval.txt"
    table_path.write_text(format_table([(stem, res)]))
    _write_manifest(outdir, stem, "eval", [Path(args.report), Path(args.truth)], [eval_path, table_path], cfg)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="master RNG seed")
    p.add_argument("--config", default=None, help="key=value config file")


def _add_detector_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threshold", type=float, default=None, help="acceptance threshold on J")
    p.add_argument("--max-ellipses", dest="max_ellipses", type=int, default=None)
    p.add_argument("--population", type=int, default=None, help="DE population size")
    p.add_argument("--factor", type=float, default=None, help="DE mutation factor")
    p.add_argument("--crossover", type=float, default=None, help="DE crossover rate")
    p.add_argument("--iterations", type=int, default=None, help="DE generations per round")
    p.add_argument("--suppression-radius", dest="suppression_radius", type=int, default=None)
    p.add_argument("--min-axis", dest="min_axis", type=float, default=None)
    p.add_argument("--dilate", type=int, default=None, help="edge membership dilation radius")
    p.add_argument("--patience", type=int, default=None, help="consecutive failed rounds tolerated")


def _add_seg_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--num-classes", dest="num_classes", type=int, default=None)
    p.add_argument("--em-iterations", dest="em_iterations", type=int, default=None)
    p.add_argument("--diffusion-steps", dest="diffusion_steps", type=int, default=None)
    p.add_argument("--diffusion-lambda", dest="diffusion_lambda", type=float, default=None)
    p.add_argument("--wbc-class", dest="wbc_class", default=None, help="'lowest-mean' or a class index")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cellseek", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="classify pixels and emit label/mask PGMs")
    p.add_argument("input")
    p.add_argument("output", help="output directory")
    _add_common(p)
    _add_seg_flags(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("edges", help="morphological edge map of a binary mask PGM")
    p.add_argument("input")
    p.add_argument("output")
    _add_common(p)
    p.set_defaults(func=cmd_edges)

    p = sub.add_parser("detect", help="detect ellipses; emits report JSON + overlay PPM")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--edges-only", action="store_true", help="input is a pre-made edge PGM")
    _add_common(p)
    _add_detector_flags(p)
    _add_seg_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("synth", help="render a synthetic scene with ground truth")
    p.add_argument("output")
    p.add_argument("--spec", default=None, help="scene spec file (key=value)")
    p.add_argument("--name", default="scene", help="output file stem")
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--cells", type=int, default=4)
    p.add_argument("--distractors", type=int, default=2)
    p.add_argument("--overlap-pairs", dest="overlap_pairs", type=int, default=0)
    p.add_argument("--deform", type=float, default=0.0)
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("noise", help="corrupt an image with salt & pepper or gaussian noise")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--noise", required=True, choices=list(bench_mod.NOISE_KINDS))
    p.add_argument("--level", type=float, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("bench", help="run the detector over a scene directory, clean + noisy")
    p.add_argument("spec_dir")
    p.add_argument("output")
    p.add_argument("--noise", default=None, choices=list(bench_mod.NOISE_KINDS), help="restrict to one noise kind")
    p.add_argument("--level", type=float, default=0.05)
    p.add_argument("--include-clean", action="store_true", help="with --noise, also run the clean condition")
    p.add_argument("--iou", type=float, default=None)
    _add_common(p)
    _add_detector_flags(p)
    _add_seg_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("eval", help="score a detection report against ground truth")
    p.add_argument("--report", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("output")
    p.add_argument("--iou", type=float, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (
        PnmError,
        FileNotFoundError,
        IsADirectoryError,
        NotADirectoryError,
        GenerationError,
        ConfigError,
        config_mod.BadConfig,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
