"""Pydantic request/response models for the detection service.

Images travel as base64-encoded PGM bytes (P2 or P5 in, canonical P5 out;
overlays are P6 PPM), so clients exchange exactly the same artifacts the CLI
reads and writes.
"""

from __future__ import annotations

from pydantic import BaseModel, Field


class ConfigOverrides(BaseModel):
    """Optional knobs; anything unset falls back to the built-in defaults."""

    population: int | None = None
    factor: float | None = None
    crossover: float | None = None
    iterations: int | None = None
    strict_improvement: bool | None = None
    num_classes: int | None = None
    em_iterations: int | None = None
    diffusion_steps: int | None = None
    diffusion_lambda: float | None = None
    wbc_class: int | str | None = None
    threshold: float | None = None
    max_ellipses: int | None = None
    suppression_radius: int | None = None
    min_axis: float | None = None
    dilate: int | None = None
    patience: int | None = None
    iou: float | None = None


class SegmentRequest(BaseModel):
    image: str = Field(description="base64 PGM (P2 or P5, maxval 255)")
    seed: int = 0
    overrides: ConfigOverrides = Field(default_factory=ConfigOverrides)


class SegmentResponse(BaseModel):
    labels: str = Field(description="base64 PGM of raw class labels")
    mask: str = Field(description="base64 PGM of the target-cell mask (0/255)")
    class_means: list[float]
    degenerate: bool


class EllipseOut(BaseModel):
    x0: float
    y0: float
    r_max: float
    r_min: float
    theta: float
    j: float


class DetectRequest(BaseModel):
    image: str
    seed: int = 0
    edges_only: bool = False
    include_overlay: bool = False
    overrides: ConfigOverrides = Field(default_factory=ConfigOverrides)


class DetectResponse(BaseModel):
    ellipses: list[EllipseOut]
    seed: int
    config: dict
    rounds: int
    history: list[list[float]]
    wall_time_s: float
    diagnostic: str | None = None
    overlay: str | None = Field(default=None, description="base64 PPM, when requested")


class SynthRequest(BaseModel):
    scene_text: str | None = Field(default=None, description="key=value scene spec")
    width: int = 256
    height: int = 256
    cells: int = 4
    distractors: int = 2
    overlap_pairs: int = 0
    deform: float = 0.0
    seed: int = 0


class TruthEllipse(BaseModel):
    x0: float
    y0: float
    r_max: float
    r_min: float
    theta: float
    fill: int = 40


class SynthResponse(BaseModel):
    image: str
    truth: list[TruthEllipse]
    scene_text: str
    width: int
    height: int


class NoiseRequest(BaseModel):
    image: str
    kind: str = Field(description="salt_pepper or gaussian")
    level: float
    seed: int = 0


class NoiseResponse(BaseModel):
    image: str


class EvalRequest(BaseModel):
    detections: list[EllipseOut]
    truth: list[TruthEllipse]
    width: int
    height: int
    iou_threshold: float = 0.5


class MatchOut(BaseModel):
    detection: int
    truth: int
    iou: float


class EvalResponse(BaseModel):
    ground_truth: int
    detected: int
    missing: int
    false_alarms: int
    dr: float
    far: float
    matches: list[MatchOut]


class HealthResponse(BaseModel):
    status: str
    version: str
