import base64

import numpy as np
import pytest
from fastapi.testclient import TestClient

from cellseek.bench import GroundTruthEllipse, SceneSpec, generate
from cellseek.imaging import decode_pgm, encode_pgm
from cellseek.service.app import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def b64_image(img) -> str:
    return base64.b64encode(encode_pgm(img)).decode("ascii")


@pytest.fixture(scope="module")
def cell_payload():
    spec = SceneSpec(
        width=128, height=128,
        ellipses=(GroundTruthEllipse(60.0, 64.0, 18.0, 12.0, 0.4),),
        rng_seed=3,
    )
    img, truth = generate(spec)
    return b64_image(img), truth


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json()["status"] == "ok"


def test_defaults_reports_calibration(client):
    r = client.get("/defaults")
    assert r.status_code == 200
    d = r.json()
    assert (d["population"], d["factor"], d["crossover"], d["iterations"]) == (20, 0.25, 0.8, 200)


def test_segment_endpoint(client):
    px = np.empty((30, 30), dtype=np.uint8)
    px[:10] = 30
    px[10:20] = 120
    px[20:] = 220
    from cellseek.imaging import GrayImage

    r = client.post("/segment", json={"image": b64_image(GrayImage(px)), "seed": 1})
    assert r.status_code == 200
    body = r.json()
    assert body["class_means"] == [30.0, 120.0, 220.0]
    assert not body["degenerate"]
    mask = decode_pgm(base64.b64decode(body["mask"]))
    assert (mask.pixels[:10] == 255).all()


def test_detect_endpoint_finds_cell(client, cell_payload):
    image, truth = cell_payload
    r = client.post("/detect", json={"image": image, "seed": 11, "include_overlay": True})
    assert r.status_code == 200
    body = r.json()
    assert len(body["ellipses"]) == 1
    e = body["ellipses"][0]
    assert abs(e["x0"] - truth[0].x0) <= 1.0
    assert abs(e["r_max"] - truth[0].r_max) <= 1.0
    assert body["rounds"] == len(body["history"])
    assert base64.b64decode(body["overlay"]).startswith(b"P6\n")


def test_detect_endpoint_deterministic(client, cell_payload):
    image, _ = cell_payload
    a = client.post("/detect", json={"image": image, "seed": 5}).json()
    b = client.post("/detect", json={"image": image, "seed": 5}).json()
    a.pop("wall_time_s")
    b.pop("wall_time_s")
    assert a == b


def test_detect_rejects_bad_base64(client):
    r = client.post("/detect", json={"image": "!!!not-base64!!!", "seed": 0})
    assert r.status_code == 422


def test_detect_rejects_bad_pgm(client):
    payload = base64.b64encode(b"JFIF not a pgm").decode("ascii")
    r = client.post("/detect", json={"image": payload, "seed": 0})
    assert r.status_code == 422


def test_detect_config_override_applies(client, cell_payload):
    image, _ = cell_payload
    r = client.post(
        "/detect",
        json={"image": image, "seed": 11, "overrides": {"max_ellipses": 1, "iterations": 100}},
    )
    assert r.status_code == 200
    body = r.json()
    assert body["config"]["max_ellipses"] == 1
    assert body["config"]["iterations"] == 100
    assert all(len(h) == 100 for h in body["history"])


def test_synth_noise_eval_round_trip(client):
    r = client.post("/synth", json={"width": 96, "height": 96, "cells": 2, "seed": 21})
    assert r.status_code == 200
    synth = r.json()
    assert len(synth["truth"]) == 2

    r = client.post("/noise", json={"image": synth["image"], "kind": "gaussian", "level": 5.0, "seed": 2})
    assert r.status_code == 200
    noisy = decode_pgm(base64.b64decode(r.json()["image"]))
    clean = decode_pgm(base64.b64decode(synth["image"]))
    assert noisy.pixels.shape == clean.pixels.shape
    assert (noisy.pixels != clean.pixels).any()

    dets = [dict(t, j=0.0) for t in ({**t, } for t in synth["truth"])]
    for d in dets:
        d.pop("fill")
    r = client.post(
        "/eval",
        json={
            "detections": dets,
            "truth": synth["truth"],
            "width": synth["width"],
            "height": synth["height"],
        },
    )
    assert r.status_code == 200
    body = r.json()
    assert body["dr"] == 1.0 and body["far"] == 0.0


def test_noise_rejects_unknown_kind(client):
    payload = base64.b64encode(b"P5\n1 1\n255\n\x00").decode("ascii")
    r = client.post("/noise", json={"image": payload, "kind": "speckle", "level": 1.0})
    assert r.status_code == 422


def test_synth_from_scene_text(client):
    scene = "width = 64\nheight = 64\nseed = 9\nellipse = 32, 32, 12, 8, 0.3, 40\n"
    r = client.post("/synth", json={"scene_text": scene})
    assert r.status_code == 200
    body = r.json()
    assert body["width"] == 64
    img = decode_pgm(base64.b64decode(body["image"]))
    assert (img.pixels == 40).any()
