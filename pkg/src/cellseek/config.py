"""Shared configuration resolution for the CLI and the service.

Precedence: built-in defaults < config file < explicit overrides.  Config
files are key=value lines with '#' comments; keys match the flag names
below.  The defaults carry the published detector calibration (population
20, mutation factor 0.25, crossover 0.80, 200 iterations).
"""

from __future__ import annotations

from .de import DEConfig
from .detector import DetectorConfig
from .segmentation import SegmentationConfig

DEFAULTS: dict = {
    "population": 20,
    "factor": 0.25,
    "crossover": 0.80,
    "iterations": 200,
    "strict_improvement": False,
    "num_classes": 3,
    "em_iterations": 10,
    "diffusion_steps": 0,
    "diffusion_lambda": 0.1,
    "wbc_class": "lowest-mean",
    "threshold": 0.30,
    "max_ellipses": 12,
    "suppression_radius": 2,
    "min_axis": 3.0,
    "dilate": 0,
    "patience": 25,
    "iou": 0.5,
    "seed": 0,
}


class BadConfig(ValueError):
    pass


def _coerce(key: str, value):
    """Parse a raw string (or pass through a typed value) for `key`."""
    if key not in DEFAULTS:
        raise BadConfig(f"unknown config key: {key}")
    default = DEFAULTS[key]
    if isinstance(value, str):
        text = value.strip()
        if isinstance(default, bool):
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise BadConfig(f"{key} expects a boolean, got {text!r}")
        if key == "wbc_class":
            return text if text == "lowest-mean" else int(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        return text
    return value


def parse_config_text(text: str) -> dict:
    """key=value lines, '#' starts a comment."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise BadConfig(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = _coerce(key, value)
    return out


def resolve(*layers: dict | None) -> dict:
    """Merge override layers onto the defaults (None values are skipped)."""
    cfg = dict(DEFAULTS)
    for layer in layers:
        if not layer:
            continue
        for key, value in layer.items():
            if value is None:
                continue
            cfg[key] = _coerce(key, value)
    return cfg


def build_seg_config(cfg: dict) -> SegmentationConfig:
    return SegmentationConfig(
        num_classes=cfg["num_classes"],
        em_iterations=cfg["em_iterations"],
        diffusion_steps=cfg["diffusion_steps"],
        diffusion_lambda=cfg["diffusion_lambda"],
        wbc_class=cfg["wbc_class"],
        rng_seed=cfg["seed"],
    )


def build_detector_config(cfg: dict) -> DetectorConfig:
    return DetectorConfig(
        de=DEConfig(
            population_size=cfg["population"],
            mutation_factor=cfg["factor"],
            crossover_rate=cfg["crossover"],
            iterations=cfg["iterations"],
            strict_improvement=cfg["strict_improvement"],
        ),
        seg=build_seg_config(cfg),
        accept_threshold=cfg["threshold"],
        max_ellipses=cfg["max_ellipses"],
        suppression_radius=cfg["suppression_radius"],
        min_axis=cfg["min_axis"],
        dilate=cfg["dilate"],
        patience=cfg["patience"],
    )
