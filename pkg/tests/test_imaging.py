import numpy as np
import pytest

from cellseek.geometry import Ellipse
from cellseek.imaging import (
    BinaryImage,
    GrayImage,
    PnmError,
    RgbImage,
    decode_pgm,
    encode_pgm,
    load_image,
    overlay_ellipses,
    save_image,
    to_binary,
)
from cellseek.raster import rasterize


def test_p5_identity_round_trip(tmp_path):
    f = tmp_path / "tiny.pgm"
    f.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 255, 128, 7]))
    img = load_image(f)
    assert img.width == 2 and img.height == 2
    assert img.pixels.tolist() == [[0, 255], [128, 7]]


def test_save_load_byte_identical_for_canonical_p5(tmp_path):
    f = tmp_path / "canon.pgm"
    original = b"P5\n3 2\n255\n" + bytes([1, 2, 3, 4, 5, 6])
    f.write_bytes(original)
    out = tmp_path / "copy.pgm"
    save_image(load_image(f), out)
    assert out.read_bytes() == original


def test_p2_and_p5_decode_identically(tmp_path):
    rng = np.random.default_rng(11)
    px = rng.integers(0, 256, size=(5, 7), dtype=np.uint8)
    p5 = tmp_path / "a.pgm"
    p5.write_bytes(b"P5\n7 5\n255\n" + px.tobytes())
    body = " ".join(str(v) for v in px.ravel())
    p2 = tmp_path / "b.pgm"
    p2.write_bytes(f"P2\n# a comment\n7 5\n255\n{body}\n".encode())
    assert load_image(p5) == load_image(p2)


def test_random_round_trip_property(tmp_path):
    rng = np.random.default_rng(4242)
    img = GrayImage(rng.integers(0, 256, size=(64, 64), dtype=np.uint8))
    path = tmp_path / "r.pgm"
    save_image(img, path)
    assert load_image(path) == img


def test_single_pixel_payload(tmp_path):
    path = tmp_path / "one.pgm"
    save_image(GrayImage(np.array([[42]], dtype=np.uint8)), path)
    assert path.read_bytes() == b"P5\n1 1\n255\n\x2a"


def test_binary_written_as_0_255(tmp_path):
    path = tmp_path / "m.pgm"
    save_image(BinaryImage(np.ones((3, 3), dtype=bool)), path)
    data = path.read_bytes()
    assert data.endswith(bytes([255] * 9))
    assert to_binary(load_image(path)) == BinaryImage(np.ones((3, 3), dtype=bool))


def test_maxval_other_than_255_rejected():
    with pytest.raises(PnmError):
        decode_pgm(b"P5\n1 1\n65535\n\x00\x00")


def test_malformed_header_rejected():
    with pytest.raises(PnmError):
        decode_pgm(b"P7\n1 1\n255\n\x00")
    with pytest.raises(PnmError):
        decode_pgm(b"P5\n2 2\n255\n\x00")  # truncated payload


def test_load_does_not_mutate_and_save_reads_frozen(tmp_path):
    img = GrayImage(np.zeros((4, 4), dtype=np.uint8))
    with pytest.raises(ValueError):
        img.pixels[0, 0] = 9


def test_overlay_empty_list_replicates_gray():
    img = GrayImage(np.full((8, 9), 77, dtype=np.uint8))
    rgb = overlay_ellipses(img, [])
    assert isinstance(rgb, RgbImage)
    assert np.array_equal(rgb.pixels[:, :, 0], img.pixels)
    assert np.array_equal(rgb.pixels[:, :, 1], img.pixels)
    assert np.array_equal(rgb.pixels[:, :, 2], img.pixels)


def test_overlay_marks_exactly_the_perimeter():
    img = GrayImage(np.full((32, 32), 100, dtype=np.uint8))
    e = Ellipse(10.0, 10.0, 5.0, 5.0, 0.0)
    rgb = overlay_ellipses(img, [e])
    perim = rasterize(e, (32, 32))
    marked = set(zip(*np.nonzero((rgb.pixels[:, :, 0] == 255) & (rgb.pixels[:, :, 1] == 0))))
    expected = {(int(y), int(x)) for x, y in perim.points}
    assert marked == expected


def test_overlay_clips_out_of_frame_points():
    img = GrayImage(np.full((20, 20), 50, dtype=np.uint8))
    e = Ellipse(1.0, 1.0, 8.0, 8.0, 0.0)  # big chunk of perimeter leaves the frame
    rgb = overlay_ellipses(img, [e])
    assert rgb.width == 20 and rgb.height == 20  # clipping silently drops them
