"""FastAPI service wrapping the detection package.

One process serves many clients; every endpoint is stateless and seeded
explicitly, so identical requests return identical payloads.
"""

from __future__ import annotations

import base64
import binascii

from fastapi import FastAPI, HTTPException

from .. import __version__, config
from ..bench import (
    GenerationError,
    GroundTruthEllipse,
    NoiseSpec,
    add_noise,
    evaluate_detections,
    generate,
    parse_scene,
    random_scene,
    scene_to_text,
)
from ..detector import detect, detect_on_edges
from ..edgemap import EdgeMap
from ..geometry import Ellipse
from ..imaging import GrayImage, PnmError, decode_pgm, encode_pgm, encode_ppm, overlay_ellipses, to_binary
from ..segmentation import ConfigError, segment, wbc_mask
from .models import (
    DetectRequest,
    DetectResponse,
    EllipseOut,
    EvalRequest,
    EvalResponse,
    HealthResponse,
    MatchOut,
    NoiseRequest,
    NoiseResponse,
    SegmentRequest,
    SegmentResponse,
    SynthRequest,
    SynthResponse,
    TruthEllipse,
)


def _decode_image(payload: str) -> GrayImage:
    try:
        raw = base64.b64decode(payload, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise HTTPException(status_code=422, detail=f"image is not valid base64: {exc}") from exc
    try:
        return decode_pgm(raw)
    except PnmError as exc:
        raise HTTPException(status_code=422, detail=f"bad PGM payload: {exc}") from exc


def _b64_pgm(img) -> str:
    return base64.b64encode(encode_pgm(img)).decode("ascii")


def _resolve(seed: int, overrides) -> dict:
    try:
        return config.resolve(overrides.model_dump(exclude_none=True), {"seed": seed})
    except config.BadConfig as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


def create_app() -> FastAPI:
    app = FastAPI(title="cellseek", version=__version__)

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.get("/defaults")
    def defaults() -> dict:
        return dict(config.DEFAULTS)

    @app.post("/segment", response_model=SegmentResponse)
    def segment_endpoint(req: SegmentRequest) -> SegmentResponse:
        cfg = _resolve(req.seed, req.overrides)
        img = _decode_image(req.image)
        try:
            seg_cfg = config.build_seg_config(cfg)
            cmap = segment(img, seg_cfg)
            mask = wbc_mask(cmap, seg_cfg)
        except (ConfigError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return SegmentResponse(
            labels=_b64_pgm(GrayImage(cmap.labels)),
            mask=_b64_pgm(mask),
            class_means=list(cmap.class_means),
            degenerate=cmap.degenerate,
        )

    @app.post("/detect", response_model=DetectResponse)
    def detect_endpoint(req: DetectRequest) -> DetectResponse:
        cfg = _resolve(req.seed, req.overrides)
        img = _decode_image(req.image)
        try:
            det_cfg = config.build_detector_config(cfg)
            if req.edges_only:
                report = detect_on_edges(EdgeMap.from_binary_image(to_binary(img)), det_cfg, seed=cfg["seed"])
            else:
                report = detect(img, det_cfg, seed=cfg["seed"])
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        overlay = None
        if req.include_overlay:
            rgb = overlay_ellipses(img, [e for e, _ in report.ellipses])
            overlay = base64.b64encode(encode_ppm(rgb)).decode("ascii")
        data = report.to_dict()
        return DetectResponse(
            ellipses=[EllipseOut(**e) for e in data["ellipses"]],
            seed=data["seed"],
            config=data["config"],
            rounds=data["rounds"],
            history=data["history"],
            wall_time_s=report.wall_time_s,
            diagnostic=report.diagnostic,
            overlay=overlay,
        )

    @app.post("/synth", response_model=SynthResponse)
    def synth_endpoint(req: SynthRequest) -> SynthResponse:
        try:
            if req.scene_text is not None:
                spec = parse_scene(req.scene_text)
            else:
                spec = random_scene(
                    req.width,
                    req.height,
                    req.cells,
                    rng_seed=req.seed,
                    distractors=req.distractors,
                    overlapping_pairs=req.overlap_pairs,
                    deform=req.deform,
                )
            img, truth = generate(spec)
        except (GenerationError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return SynthResponse(
            image=_b64_pgm(img),
            truth=[TruthEllipse(x0=t.x0, y0=t.y0, r_max=t.r_max, r_min=t.r_min, theta=t.theta, fill=t.fill) for t in truth],
            scene_text=scene_to_text(spec),
            width=spec.width,
            height=spec.height,
        )

    @app.post("/noise", response_model=NoiseResponse)
    def noise_endpoint(req: NoiseRequest) -> NoiseResponse:
        img = _decode_image(req.image)
        try:
            spec = NoiseSpec(req.kind, req.level, rng_seed=req.seed)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return NoiseResponse(image=_b64_pgm(add_noise(img, spec)))

    @app.post("/eval", response_model=EvalResponse)
    def eval_endpoint(req: EvalRequest) -> EvalResponse:
        dets = [Ellipse(e.x0, e.y0, e.r_max, e.r_min, e.theta) for e in req.detections]
        truth = [
            GroundTruthEllipse(t.x0, t.y0, t.r_max, t.r_min, t.theta, t.fill) for t in req.truth
        ]
        res = evaluate_detections(dets, truth, (req.width, req.height), iou_threshold=req.iou_threshold)
        return EvalResponse(
            ground_truth=res.ground_truth,
            detected=res.detected,
            missing=res.missing,
            false_alarms=res.false_alarms,
            dr=res.dr,
            far=res.far,
            matches=[MatchOut(detection=d, truth=t, iou=i) for d, t, i in res.matches],
        )

    return app


app = create_app()
