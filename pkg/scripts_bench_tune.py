"""Tuning driver for the acceptance benchmark (not part of the package)."""
import sys
import time

import numpy as np

from cellseek.bench import NoiseSpec, add_noise, aggregate, evaluate_detections, random_scene, generate, ellipse_mask
from cellseek.config import resolve, build_detector_config
from cellseek.detector import detect


def build_suite():
    scenes = []
    for i in range(20):
        n_cells = 3 + (i % 4)
        pairs = 1 if i % 3 == 0 else 0
        spec = random_scene(
            256, 256, n_cells,
            rng_seed=1000 + i,
            overlapping_pairs=pairs,
            distractors=2,
        )
        scenes.append(spec)
    return scenes


def condition_seed(master, scene_idx, cond_idx, stream):
    ss = np.random.SeedSequence((master, scene_idx, cond_idx, stream))
    return int(ss.generate_state(1, np.uint64)[0])


def main(diffusion_steps=10, dilate=0, patience=25):
    cfg = resolve({"diffusion_steps": diffusion_steps, "dilate": dilate, "patience": patience})
    det_cfg = build_detector_config(cfg)
    scenes = build_suite()
    overlapping = 0
    for spec in scenes:
        masks = [ellipse_mask(t.as_ellipse(), (spec.width, spec.height)) for t in spec.ellipses]
        if any((masks[a] & masks[b]).any() for a in range(len(masks)) for b in range(a + 1, len(masks))):
            overlapping += 1
    print(f"scenes with overlap: {overlapping}/20")

    conditions = [
        ("clean", None, 0.0),
        ("sp5", "salt_pepper", 0.05),
        ("sp10", "salt_pepper", 0.10),
        ("g5", "gaussian", 5.0),
        ("g10", "gaussian", 10.0),
    ]
    master = 20260810
    rendered = [generate(s) for s in scenes]
    for cond_idx, (label, kind, level) in enumerate(conditions):
        t0 = time.perf_counter()
        results = []
        rounds_total = 0
        for scene_idx, (spec, (img, truth)) in enumerate(zip(scenes, rendered)):
            work = img
            if kind:
                work = add_noise(img, NoiseSpec(kind, level, rng_seed=condition_seed(master, scene_idx, cond_idx, 1)))
            rep = detect(work, det_cfg, seed=condition_seed(master, scene_idx, cond_idx, 0))
            rounds_total += rep.rounds
            results.append(evaluate_detections(rep, truth, (spec.width, spec.height)))
        agg = aggregate(results)
        dt = time.perf_counter() - t0
        print(f"{label:6s}: DR={100*agg.dr:6.2f}% FAR={100*agg.far:5.2f}% "
              f"({agg.detected}/{agg.ground_truth} det, {agg.false_alarms} fa) "
              f"rounds={rounds_total} time={dt:.0f}s")


if __name__ == "__main__":
    kwargs = {}
    for arg in sys.argv[1:]:
        k, v = arg.split("=")
        kwargs[k] = int(v)
    main(**kwargs)
