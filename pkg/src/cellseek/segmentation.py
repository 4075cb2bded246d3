"""Pixel classification into K intensity classes and morphological edges.

The classifier is a 1-D Gaussian mixture fitted to the intensity histogram
with a fixed number of EM iterations, optionally preceded by a few steps of
discrete heat diffusion on the intensities for spatial regularization of
noisy inputs.  Initialization is deterministic (histogram quantiles), so the
seed only matters when the quantile means collapse and need jittering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .edgemap import EdgeMap
from .imaging import BinaryImage, GrayImage

_VAR_FLOOR = 0.25  # intensity^2; keeps saturated components finite


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SegmentationConfig:
    num_classes: int = 3
    em_iterations: int = 10
    diffusion_steps: int = 0
    diffusion_lambda: float = 0.1
    wbc_class: int | str = "lowest-mean"
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.num_classes < 2:
            raise ConfigError("num_classes must be >= 2")
        if self.em_iterations < 1:
            raise ConfigError("em_iterations must be >= 1")
        if not 0.0 <= self.diffusion_lambda <= 0.25:
            raise ConfigError("diffusion_lambda must be in [0, 0.25]")


@dataclass(frozen=True)
class ClassMap:
    """Per-pixel class labels plus fitted class means (ascending)."""

    labels: np.ndarray
    class_means: tuple[float, ...]
    degenerate: bool = False

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]


def _diffuse(pixels: np.ndarray, steps: int, lam: float) -> np.ndarray:
    """Zero-flux discrete heat diffusion with a 4-neighbor Laplacian."""
    img = pixels.astype(np.float64)
    for _ in range(steps):
        padded = np.pad(img, 1, mode="edge")
        lap = (
            padded[:-2, 1:-1]
            + padded[2:, 1:-1]
            + padded[1:-1, :-2]
            + padded[1:-1, 2:]
            - 4.0 * img
        )
        img = img + lam * lap
    return img


def _initial_means(hist: np.ndarray, k: int) -> np.ndarray:
    """Evenly spaced means over the occupied intensity range.

    Mass quantiles collapse onto the background mode when it dominates the
    histogram (typical for smear-like images), so the spread is taken over
    the value range instead; distinct whenever the image is not flat.
    """
    nonzero = np.nonzero(hist)[0]
    lo, hi = float(nonzero[0]), float(nonzero[-1])
    return lo + (2.0 * np.arange(k) + 1.0) / (2.0 * k) * (hi - lo)


def _em_fit(hist: np.ndarray, cfg: SegmentationConfig) -> tuple[np.ndarray, np.ndarray]:
    """Weighted EM over the 256-bin histogram.

    Returns (labels-per-intensity LUT, class means sorted ascending).
    """
    k = cfg.num_classes
    values = np.arange(256, dtype=np.float64)
    weights_v = hist.astype(np.float64)
    n = weights_v.sum()

    means = _initial_means(hist, k)
    if len(set(means.tolist())) != k:
        # unreachable for non-flat images; nudge apart with the seed just in case
        rng = np.random.Generator(np.random.PCG64(cfg.rng_seed))
        for _ in range(64):
            if len(set(means.tolist())) == k:
                break
            means = np.clip(means + rng.uniform(-1.0, 1.0, k), 0.0, 255.0)

    global_var = float(np.average((values - np.average(values, weights=weights_v)) ** 2, weights=weights_v))
    variances = np.full(k, max(global_var / k, _VAR_FLOOR))
    mix = np.full(k, 1.0 / k)

    for _ in range(cfg.em_iterations):
        # E-step in the log domain; softmax keeps saturated bins exact
        logp = (
            np.log(mix)[None, :]
            - 0.5 * np.log(2.0 * math.pi * variances)[None, :]
            - (values[:, None] - means[None, :]) ** 2 / (2.0 * variances[None, :])
        )
        logp -= logp.max(axis=1, keepdims=True)
        resp = np.exp(logp)
        resp /= resp.sum(axis=1, keepdims=True)

        mass = (resp * weights_v[:, None]).sum(axis=0)
        for c in range(k):
            if mass[c] <= 0.0:
                continue  # empty component keeps its parameters
            means[c] = float((resp[:, c] * weights_v * values).sum() / mass[c])
            variances[c] = max(
                float((resp[:, c] * weights_v * (values - means[c]) ** 2).sum() / mass[c]),
                _VAR_FLOOR,
            )
        mix = np.where(mass > 0.0, mass / n, 0.0)
        if mix.sum() > 0:
            mix = mix / mix.sum()

    order = np.argsort(means, kind="stable")
    means, variances, mix = means[order], variances[order], mix[order]

    # Posterior argmax per intensity value; ties resolve to the lowest index.
    with np.errstate(divide="ignore"):
        log_mix = np.where(mix > 0.0, np.log(np.where(mix > 0.0, mix, 1.0)), -np.inf)
    logp = (
        log_mix[None, :]
        - 0.5 * np.log(2.0 * math.pi * variances)[None, :]
        - (values[:, None] - means[None, :]) ** 2 / (2.0 * variances[None, :])
    )
    lut = np.argmax(logp, axis=1).astype(np.uint8)
    return lut, means


def segment(img: GrayImage, cfg: SegmentationConfig) -> ClassMap:
    """Classify every pixel into one of cfg.num_classes intensity classes.

    Deterministic for a fixed config and seed.  A flat image cannot support
    more than one class; it yields all-zero labels with the degenerate flag
    set instead of an error.
    """
    pixels = img.pixels
    if cfg.diffusion_steps > 0:
        diffused = _diffuse(pixels, cfg.diffusion_steps, cfg.diffusion_lambda)
        work = np.clip(np.floor(diffused + 0.5), 0.0, 255.0).astype(np.uint8)
    else:
        work = pixels

    lo, hi = int(work.min()), int(work.max())
    if lo == hi:
        means = tuple(float(lo) for _ in range(cfg.num_classes))
        return ClassMap(np.zeros_like(work, dtype=np.uint8), means, degenerate=True)

    hist = np.bincount(work.ravel(), minlength=256)
    lut, means = _em_fit(hist, cfg)
    return ClassMap(lut[work], tuple(float(m) for m in means))


def wbc_mask(cmap: ClassMap, cfg: SegmentationConfig) -> BinaryImage:
    """Mask of the class holding the target cells.

    By default that is the class with the lowest mean (stained nuclei are
    the darkest structures in grayscale smears); an explicit class index can
    be configured instead.
    """
    if cfg.wbc_class == "lowest-mean":
        target = 0  # class_means are sorted ascending
    else:
        target = int(cfg.wbc_class)
        if not 0 <= target < cfg.num_classes:
            raise ConfigError(f"wbc_class index {target} out of range")
    return BinaryImage(cmap.labels == target)


def erode3x3(mask: np.ndarray) -> np.ndarray:
    """Binary erosion by a 3x3 all-ones element; outside the image is False."""
    padded = np.pad(np.asarray(mask, dtype=bool), 1, mode="constant", constant_values=False)
    out = np.ones_like(mask, dtype=bool)
    h, w = mask.shape
    for dy in range(3):
        for dx in range(3):
            out &= padded[dy : dy + h, dx : dx + w]
    return out


def morphological_edges(mask: BinaryImage) -> EdgeMap:
    """Edge pixels: mask minus its 3x3 erosion.

    The outside-is-False border policy means blobs touching the frame still
    produce edge pixels along the frame.
    """
    if mask.height < 3 or mask.width < 3:
        raise ValueError("mask must be at least 3x3")
    edge = mask.bits & ~erode3x3(mask.bits)
    return EdgeMap.from_mask(edge)
