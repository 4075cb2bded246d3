"""Full detection pipeline: segment, extract edges, peel off ellipses.

Each round runs one complete DE optimization over the current edge map with
a seed derived from the master seed and the round index.  A round whose best
candidate clears the acceptance threshold (and the minimum-axis filter)
contributes an ellipse; its perimeter neighborhood is then removed from the
working edge map so later rounds find the remaining structures.

On edge maps holding several objects, a single DE run discovers one of them
only with moderate probability (a candidate needs all five genes on the same
boundary), so non-accepting rounds are retried with fresh derived seeds up
to `patience` consecutive failures before the loop stops.  patience=1 gives
the strict stop-on-first-failure rule.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import de
from .edgemap import EdgeMap
from .fitness import EdgeObjective, FitnessValue
from .geometry import Ellipse
from .imaging import GrayImage
from .raster import EmptyPerimeter, rasterize
from .segmentation import SegmentationConfig, morphological_edges, segment, wbc_mask


@dataclass(frozen=True)
class DetectorConfig:
    de: de.DEConfig = field(default_factory=de.DEConfig)
    seg: SegmentationConfig = field(default_factory=SegmentationConfig)
    accept_threshold: float = 0.30
    max_ellipses: int = 12
    suppression_radius: int = 2
    min_axis: float = 3.0
    dilate: int = 0
    patience: int = 25

    def __post_init__(self) -> None:
        if not 0.0 < self.accept_threshold < 1.0:
            raise ValueError("accept_threshold must be in (0, 1)")
        if self.max_ellipses < 1:
            raise ValueError("max_ellipses must be >= 1")
        if self.suppression_radius < 1:
            raise ValueError("suppression_radius must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")

    def snapshot(self) -> dict:
        return {
            "population_size": self.de.population_size,
            "mutation_factor": self.de.mutation_factor,
            "crossover_rate": self.de.crossover_rate,
            "iterations": self.de.iterations,
            "strict_improvement": self.de.strict_improvement,
            "num_classes": self.seg.num_classes,
            "em_iterations": self.seg.em_iterations,
            "diffusion_steps": self.seg.diffusion_steps,
            "diffusion_lambda": self.seg.diffusion_lambda,
            "wbc_class": self.seg.wbc_class,
            "accept_threshold": self.accept_threshold,
            "max_ellipses": self.max_ellipses,
            "suppression_radius": self.suppression_radius,
            "min_axis": self.min_axis,
            "dilate": self.dilate,
            "patience": self.patience,
            "rng_algorithm": de.RNG_ALGORITHM,
        }


@dataclass
class DetectionReport:
    ellipses: list[tuple[Ellipse, FitnessValue]]
    rounds: int
    config: dict
    seed: int
    history: list[list[float]]
    wall_time_s: float = 0.0
    diagnostic: str | None = None

    def to_dict(self) -> dict:
        return {
            "ellipses": [
                {
                    "x0": e.x0,
                    "y0": e.y0,
                    "r_max": e.r_max,
                    "r_min": e.r_min,
                    "theta": e.theta,
                    "j": fit.j,
                }
                for e, fit in self.ellipses
            ],
            "seed": self.seed,
            "config": self.config,
            "rounds": self.rounds,
            "history": self.history,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @staticmethod
    def ellipses_from_dict(data: dict) -> list[Ellipse]:
        return [
            Ellipse(d["x0"], d["y0"], d["r_max"], d["r_min"], d["theta"])
            for d in data["ellipses"]
        ]


def round_seed(master_seed: int, round_index: int) -> int:
    """Per-round DE seed: first state word of SeedSequence((master, round))."""
    ss = np.random.SeedSequence((master_seed, round_index))
    return int(ss.generate_state(1, np.uint64)[0])


def _suppression_zone(e: Ellipse, frame: tuple[int, int], radius: int) -> np.ndarray:
    """Chebyshev-radius neighborhood of the ellipse perimeter as a mask."""
    width, height = frame
    zone = np.zeros((height, width), dtype=bool)
    try:
        perim = rasterize(e, frame)
    except EmptyPerimeter:
        return zone
    zone[perim.points[:, 1], perim.points[:, 0]] = True
    padded = np.pad(zone, radius, mode="constant", constant_values=False)
    out = zone.copy()
    for dy in range(2 * radius + 1):
        for dx in range(2 * radius + 1):
            out |= padded[dy : dy + height, dx : dx + width]
    return out


def detect_on_edges(em: EdgeMap, cfg: DetectorConfig, seed: int = 0) -> DetectionReport:
    """Repeated DE detection over a raw edge map (no preprocessing)."""
    if len(em) < 5:
        raise de.InsufficientEdges(f"edge map holds {len(em)} pixels, need 5")
    t0 = time.perf_counter()
    report = _detect_loop(em, cfg, seed)
    report.wall_time_s = time.perf_counter() - t0
    return report


def detect(img: GrayImage, cfg: DetectorConfig, seed: int = 0) -> DetectionReport:
    """Segment the image, build its edge map and run the detection loop.

    Preprocessing failures (flat image, too few edges) yield an empty report
    carrying a diagnostic, not an exception.
    """
    t0 = time.perf_counter()
    if img.width < 16 or img.height < 16:
        raise ValueError("detect needs an image of at least 16x16 pixels")
    cmap = segment(img, cfg.seg)
    if cmap.degenerate:
        return DetectionReport(
            [], 0, cfg.snapshot(), seed, [], time.perf_counter() - t0,
            diagnostic="degenerate segmentation: image has a single intensity",
        )
    em = morphological_edges(wbc_mask(cmap, cfg.seg))
    if len(em) < 5:
        return DetectionReport(
            [], 0, cfg.snapshot(), seed, [], time.perf_counter() - t0,
            diagnostic=f"insufficient edges after preprocessing ({len(em)})",
        )
    report = _detect_loop(em, cfg, seed)
    report.wall_time_s = time.perf_counter() - t0
    return report


def _detect_loop(em: EdgeMap, cfg: DetectorConfig, seed: int) -> DetectionReport:
    frame = (em.width, em.height)
    accepted: list[tuple[Ellipse, FitnessValue]] = []
    history: list[list[float]] = []
    rounds = 0
    failures = 0

    while len(accepted) < cfg.max_ellipses and len(em) >= 5 and failures < cfg.patience:
        objective = EdgeObjective(em, dilate=cfg.dilate)
        decfg = replace(cfg.de, rng_seed=round_seed(seed, rounds))
        best, fit, hist = de.run(decfg, objective, len(em))
        rounds += 1
        history.append(hist)

        ellipse = objective.decode(best.genes) if fit.j <= cfg.accept_threshold else None
        if ellipse is None or ellipse.r_min < cfg.min_axis:
            failures += 1
            continue
        failures = 0
        accepted.append((ellipse, fit))
        em = em.without(_suppression_zone(ellipse, frame, cfg.suppression_radius))

    return DetectionReport(accepted, rounds, cfg.snapshot(), seed, history)
