"""Ground-truthed synthetic scenes, noise injection and DR/FAR scoring.

Scenes are flat-background grayscale images with filled elliptical "cells",
optional star-shaped distractor blobs and optional boundary deformation.
Because every scene carries its exact ground truth, detector output can be
scored as detection rate (detected / ground truth) and false alarm rate
(false alarms / ground truth) under per-pixel mask-IoU matching.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .detector import DetectionReport
from .geometry import Ellipse
from .imaging import GrayImage
from .numeric import round_half_away_arr

DEFAULT_IOU_THRESHOLD = 0.5
NOISE_KINDS = ("salt_pepper", "gaussian")
STANDARD_NOISE_LEVELS = {"salt_pepper": (0.05, 0.10), "gaussian": (5.0, 10.0)}


class GenerationError(ValueError):
    """Scene constraints could not be satisfied."""


@dataclass(frozen=True)
class GroundTruthEllipse:
    x0: float
    y0: float
    r_max: float
    r_min: float
    theta: float
    fill: int = 40

    def as_ellipse(self) -> Ellipse:
        return Ellipse(self.x0, self.y0, self.r_max, self.r_min, self.theta)


@dataclass(frozen=True)
class SceneSpec:
    width: int
    height: int
    ellipses: tuple[GroundTruthEllipse, ...] = ()
    background: int = 200
    distractors: int = 0
    distractor_fill: int = 40
    allow_overlap: bool = True
    deform: float = 0.0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.width < 8 or self.height < 8:
            raise ValueError("scene frame too small")
        if not 0.0 <= self.deform <= 0.1:
            raise ValueError("deform is a radial fraction in [0, 0.1]")


@dataclass(frozen=True)
class NoiseSpec:
    kind: str
    level: float
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"kind must be one of {NOISE_KINDS}")
        if self.kind == "salt_pepper" and not 0.0 <= self.level <= 1.0:
            raise ValueError("salt & pepper density must be in [0, 1]")
        if self.kind == "gaussian" and self.level < 0.0:
            raise ValueError("gaussian sigma must be >= 0")


@dataclass(frozen=True)
class EvalResult:
    ground_truth: int
    detected: int
    missing: int
    false_alarms: int
    dr: float
    far: float
    matches: tuple[tuple[int, int, float], ...] = ()  # (detection, truth, iou)

    def to_dict(self) -> dict:
        return {
            "ground_truth": self.ground_truth,
            "detected": self.detected,
            "missing": self.missing,
            "false_alarms": self.false_alarms,
            "dr": self.dr,
            "far": self.far,
            "matches": [list(m) for m in self.matches],
        }


def rates_from_counts(detected: int, ground_truth: int, false_alarms: int) -> tuple[float, float]:
    """(DR, FAR), both normalized by the ground-truth count."""
    if ground_truth == 0:
        return 1.0, 0.0
    return detected / ground_truth, false_alarms / ground_truth


def ellipse_mask(e: Ellipse, frame: tuple[int, int]) -> np.ndarray:
    """Boolean mask of pixel centers inside the ellipse (per-pixel test)."""
    width, height = frame
    mask = np.zeros((height, width), dtype=bool)
    x_lo = max(0, int(math.floor(e.x0 - e.r_max - 1)))
    x_hi = min(width - 1, int(math.ceil(e.x0 + e.r_max + 1)))
    y_lo = max(0, int(math.floor(e.y0 - e.r_max - 1)))
    y_hi = min(height - 1, int(math.ceil(e.y0 + e.r_max + 1)))
    if x_lo > x_hi or y_lo > y_hi:
        return mask
    xs = np.arange(x_lo, x_hi + 1, dtype=np.float64) - e.x0
    ys = np.arange(y_lo, y_hi + 1, dtype=np.float64) - e.y0
    gx, gy = np.meshgrid(xs, ys)
    ct, st = math.cos(e.theta), math.sin(e.theta)
    u = gx * ct + gy * st
    v = -gx * st + gy * ct
    inside = (u / e.r_max) ** 2 + (v / e.r_min) ** 2 <= 1.0
    mask[y_lo : y_hi + 1, x_lo : x_hi + 1] = inside
    return mask


def _polygon_mask(verts: np.ndarray, frame: tuple[int, int]) -> np.ndarray:
    """Even-odd fill of a closed polygon over pixel centers."""
    width, height = frame
    mask = np.zeros((height, width), dtype=bool)
    x_lo = max(0, int(math.floor(verts[:, 0].min())))
    x_hi = min(width - 1, int(math.ceil(verts[:, 0].max())))
    y_lo = max(0, int(math.floor(verts[:, 1].min())))
    y_hi = min(height - 1, int(math.ceil(verts[:, 1].max())))
    if x_lo > x_hi or y_lo > y_hi:
        return mask
    xs = np.arange(x_lo, x_hi + 1, dtype=np.float64)
    ys = np.arange(y_lo, y_hi + 1, dtype=np.float64)
    px, py = np.meshgrid(xs, ys)
    inside = np.zeros(px.shape, dtype=bool)
    x1s, y1s = verts[:, 0], verts[:, 1]
    x2s, y2s = np.roll(x1s, -1), np.roll(y1s, -1)
    for x1, y1, x2, y2 in zip(x1s, y1s, x2s, y2s):
        if y1 == y2:
            continue
        crosses = (y1 > py) != (y2 > py)
        x_at = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (px < x_at)
    mask[y_lo : y_hi + 1, x_lo : x_hi + 1] = inside
    return mask


def _deformed_cell_mask(gt: GroundTruthEllipse, deform: float, frame: tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    """Polygonized cell with per-vertex radial jitter up to deform * r_min."""
    n_verts = 72
    t = np.linspace(0.0, 2.0 * math.pi, n_verts, endpoint=False)
    ct, st = math.cos(gt.theta), math.sin(gt.theta)
    bx = gt.r_max * np.cos(t)
    by = gt.r_min * np.sin(t)
    vx = bx * ct - by * st
    vy = bx * st + by * ct
    norm = np.hypot(vx, vy)
    jitter = rng.uniform(-deform, deform, n_verts) * gt.r_min
    scale = 1.0 + jitter / norm
    verts = np.column_stack([gt.x0 + vx * scale, gt.y0 + vy * scale])
    return _polygon_mask(verts, frame)


def _distractor_mask(frame: tuple[int, int], rng: np.random.Generator, cell_masks: list[np.ndarray]) -> np.ndarray:
    """Star-shaped blob placed clear of the cells; None is never returned —
    raises GenerationError after 100 attempts."""
    width, height = frame
    occupied = np.zeros((height, width), dtype=bool)
    for m in cell_masks:
        occupied |= m
    for _ in range(100):
        r_b = rng.uniform(4.0, 8.0)
        cx = rng.uniform(r_b + 2, width - r_b - 3)
        cy = rng.uniform(r_b + 2, height - r_b - 3)
        n_verts = 8
        angles = np.sort(rng.uniform(0.0, 2.0 * math.pi, n_verts))
        radii = r_b * rng.uniform(0.5, 1.5, n_verts)
        verts = np.column_stack([cx + radii * np.cos(angles), cy + radii * np.sin(angles)])
        blob = _polygon_mask(verts, frame)
        grown = np.pad(blob, 3)
        grown = (
            grown[:-6, 3:-3] | grown[6:, 3:-3] | grown[3:-3, :-6] | grown[3:-3, 6:] | grown[3:-3, 3:-3]
        )
        if blob.any() and not (grown & occupied).any():
            return blob
    raise GenerationError("could not place a distractor blob in 100 attempts")


def generate(spec: SceneSpec) -> tuple[GrayImage, list[GroundTruthEllipse]]:
    """Render the scene and return it with its exact ground truth."""
    frame = (spec.width, spec.height)
    rng = np.random.Generator(np.random.PCG64(spec.rng_seed))
    img = np.full((spec.height, spec.width), spec.background, dtype=np.uint8)

    cell_masks = []
    for gt in spec.ellipses:
        if not (0 <= gt.x0 < spec.width and 0 <= gt.y0 < spec.height):
            raise GenerationError(f"cell center ({gt.x0}, {gt.y0}) outside frame")
        if spec.deform > 0.0:
            mask = _deformed_cell_mask(gt, spec.deform, frame, rng)
        else:
            mask = ellipse_mask(gt.as_ellipse(), frame)
        img[mask] = gt.fill
        cell_masks.append(mask)

    for _ in range(spec.distractors):
        blob = _distractor_mask(frame, rng, cell_masks)
        img[blob] = spec.distractor_fill

    return GrayImage(img), list(spec.ellipses)


def random_scene(
    width: int,
    height: int,
    n_ellipses: int,
    rng_seed: int,
    r_max_range: tuple[float, float] = (10.0, 20.0),
    aspect_range: tuple[float, float] = (0.55, 0.95),
    fill: int = 40,
    background: int = 200,
    distractors: int = 2,
    distractor_fill: int = 120,
    overlapping_pairs: int = 0,
    deform: float = 0.0,
    margin: float = 3.0,
) -> SceneSpec:
    """Place cells at random; `overlapping_pairs` of them are deliberately
    placed as mildly overlapping couples (center gap 82-92% of the radius
    sum), the rest disjoint.  Distractor blobs default to a mid intensity,
    the role red cells play in smears: a class of their own that never joins
    the cell mask.  Raises GenerationError when placement fails 100 times in
    a row."""
    if 2 * overlapping_pairs > n_ellipses:
        raise GenerationError("more overlapping pairs than ellipses")
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    placed: list[GroundTruthEllipse] = []

    def sample_axes() -> tuple[float, float]:
        r_max = rng.uniform(*r_max_range)
        return r_max, r_max * rng.uniform(*aspect_range)

    def fits(x0: float, y0: float, r_max: float, exclude: set[int]) -> bool:
        if not (margin + r_max <= x0 <= width - 1 - margin - r_max):
            return False
        if not (margin + r_max <= y0 <= height - 1 - margin - r_max):
            return False
        for i, other in enumerate(placed):
            if i in exclude:
                continue
            gap = math.hypot(x0 - other.x0, y0 - other.y0)
            if gap < 1.05 * (r_max + other.r_max):
                return False
        return True

    def place_one(exclude: set[int] | None = None, anchor: GroundTruthEllipse | None = None) -> GroundTruthEllipse:
        exclude = exclude or set()
        for _ in range(100):
            r_max, r_min = sample_axes()
            theta = rng.uniform(-math.pi / 2, math.pi / 2)
            if anchor is None:
                x0 = rng.uniform(margin + r_max, width - 1 - margin - r_max)
                y0 = rng.uniform(margin + r_max, height - 1 - margin - r_max)
            else:
                d = rng.uniform(0.82, 0.92) * (r_max + anchor.r_max)
                phi = rng.uniform(0.0, 2.0 * math.pi)
                x0 = anchor.x0 + d * math.cos(phi)
                y0 = anchor.y0 + d * math.sin(phi)
            if fits(x0, y0, r_max, exclude):
                gt = GroundTruthEllipse(x0, y0, r_max, r_min, theta, fill)
                placed.append(gt)
                return gt
        raise GenerationError("could not place an ellipse in 100 attempts")

    for _ in range(overlapping_pairs):
        first = place_one()
        place_one(exclude={len(placed) - 1}, anchor=first)
    for _ in range(n_ellipses - 2 * overlapping_pairs):
        place_one()

    return SceneSpec(
        width=width,
        height=height,
        ellipses=tuple(placed),
        background=background,
        distractors=distractors,
        distractor_fill=distractor_fill,
        allow_overlap=overlapping_pairs > 0,
        deform=deform,
        rng_seed=rng_seed,
    )


def add_noise(img: GrayImage, spec: NoiseSpec) -> GrayImage:
    """Salt & pepper: each pixel replaced by 0 or 255 (even odds) with
    probability `level`.  Gaussian: add N(0, level^2), round, clamp."""
    rng = np.random.Generator(np.random.PCG64(spec.rng_seed))
    if spec.kind == "salt_pepper":
        u = rng.random(img.pixels.shape)
        out = img.pixels.copy()
        out[u < spec.level / 2.0] = 0
        out[(u >= spec.level / 2.0) & (u < spec.level)] = 255
        return GrayImage(out)
    noisy = img.pixels.astype(np.float64) + rng.normal(0.0, spec.level, img.pixels.shape)
    return GrayImage(np.clip(round_half_away_arr(noisy), 0, 255).astype(np.uint8))


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    inter = int(np.count_nonzero(a & b))
    union = int(np.count_nonzero(a | b))
    return inter / union if union else 0.0


def evaluate_detections(
    detections: DetectionReport | list[Ellipse],
    truths: list[GroundTruthEllipse],
    frame: tuple[int, int],
    iou_threshold: float = DEFAULT_IOU_THRESHOLD,
) -> EvalResult:
    """Greedy one-to-one matching by descending mask IoU.

    A detection counts iff its IoU with an unmatched truth reaches the
    threshold; IoU ties resolve to the lower detection index, then the lower
    truth index.  Unmatched truths are missing, unmatched detections are
    false alarms.
    """
    if isinstance(detections, DetectionReport):
        dets = [e for e, _ in detections.ellipses]
    else:
        dets = list(detections)

    det_masks = [ellipse_mask(e, frame) for e in dets]
    truth_masks = [ellipse_mask(t.as_ellipse(), frame) for t in truths]

    pairs = []
    for di, dm in enumerate(det_masks):
        for ti, tm in enumerate(truth_masks):
            iou = mask_iou(dm, tm)
            if iou >= iou_threshold:
                pairs.append((-iou, di, ti))
    pairs.sort()

    det_used: set[int] = set()
    truth_used: set[int] = set()
    matches: list[tuple[int, int, float]] = []
    for neg_iou, di, ti in pairs:
        if di in det_used or ti in truth_used:
            continue
        det_used.add(di)
        truth_used.add(ti)
        matches.append((di, ti, -neg_iou))

    detected = len(matches)
    missing = len(truths) - detected
    false_alarms = len(dets) - detected
    dr, far = rates_from_counts(detected, len(truths), false_alarms)
    return EvalResult(len(truths), detected, missing, false_alarms, dr, far, tuple(matches))


def aggregate(results: list[EvalResult]) -> EvalResult:
    """Pool counts over scenes and recompute the rates."""
    gt = sum(r.ground_truth for r in results)
    detected = sum(r.detected for r in results)
    false_alarms = sum(r.false_alarms for r in results)
    dr, far = rates_from_counts(detected, gt, false_alarms)
    return EvalResult(gt, detected, gt - detected, false_alarms, dr, far)


_TABLE_COLUMNS = ("Condition", "Leukocytes detected", "Missing", "False alarms", "DR", "FAR")


def format_table(rows: list[tuple[str, EvalResult]]) -> str:
    """Aligned text table with one row per benchmark condition."""
    cells = [_TABLE_COLUMNS]
    for label, r in rows:
        cells.append(
            (label, str(r.detected), str(r.missing), str(r.false_alarms),
             f"{100.0 * r.dr:.2f}%", f"{100.0 * r.far:.2f}%")
        )
    widths = [max(len(row[c]) for row in cells) for c in range(len(_TABLE_COLUMNS))]
    lines = []
    for row in cells:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


def _parse_scalar(value: str):
    low = value.strip().lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(low)
    except ValueError:
        pass
    try:
        return float(low)
    except ValueError:
        return value.strip()


def parse_scene(text: str) -> SceneSpec:
    """SceneSpec from key=value lines; '#' starts a comment.

    Repeated `ellipse` keys list cells as
    ``ellipse = x0, y0, r_max, r_min, theta, fill``.
    """
    fields: dict = {}
    ellipses: list[GroundTruthEllipse] = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad scene line: {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key == "ellipse":
            parts = [float(p) for p in value.split(",")]
            if len(parts) != 6:
                raise ValueError(f"ellipse needs 6 values, got {len(parts)}")
            ellipses.append(GroundTruthEllipse(*parts[:5], fill=int(parts[5])))
        elif key == "seed":
            fields["rng_seed"] = int(value)
        else:
            fields[key] = _parse_scalar(value)
    return SceneSpec(ellipses=tuple(ellipses), **fields)


def scene_to_text(spec: SceneSpec) -> str:
    lines = [
        f"width = {spec.width}",
        f"height = {spec.height}",
        f"background = {spec.background}",
        f"distractors = {spec.distractors}",
        f"distractor_fill = {spec.distractor_fill}",
        f"allow_overlap = {str(spec.allow_overlap).lower()}",
        f"deform = {spec.deform}",
        f"seed = {spec.rng_seed}",
    ]
    for e in spec.ellipses:
        lines.append(f"ellipse = {e.x0!r}, {e.y0!r}, {e.r_max!r}, {e.r_min!r}, {e.theta!r}, {e.fill}")
    return "\n".join(lines) + "\n"


def truth_to_json(truths: list[GroundTruthEllipse], frame: tuple[int, int]) -> str:
    return json.dumps(
        {
            "width": frame[0],
            "height": frame[1],
            "ellipses": [
                {"x0": t.x0, "y0": t.y0, "r_max": t.r_max, "r_min": t.r_min, "theta": t.theta, "fill": t.fill}
                for t in truths
            ],
        },
        sort_keys=True,
        indent=2,
    ) + "\n"


def truth_from_json(text: str) -> tuple[list[GroundTruthEllipse], tuple[int, int]]:
    data = json.loads(text)
    truths = [
        GroundTruthEllipse(d["x0"], d["y0"], d["r_max"], d["r_min"], d["theta"], d.get("fill", 40))
        for d in data["ellipses"]
    ]
    return truths, (data["width"], data["height"])
