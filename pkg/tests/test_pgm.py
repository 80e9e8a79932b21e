from __future__ import annotations

import numpy as np
import pytest

from graspassist.perception import CameraIntrinsics, DepthFrame, MaskSource, ObjectMask
from graspassist.pgm import read_depth_pgm, read_mask_pgm, write_depth_pgm, write_mask_pgm

INTR = CameraIntrinsics(fx=130.0, fy=130.0, cx=79.5, cy=59.5, width=160, height=120)


def test_mask_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    bits = rng.random((120, 160)) < 0.3
    path = tmp_path / "mask.pgm"
    write_mask_pgm(path, ObjectMask(bits=bits))
    again = read_mask_pgm(path)
    assert (again.bits == bits).all()
    assert again.source is MaskSource.File


def test_mask_bytes_exact(tmp_path):
    bits = np.zeros((2, 3), dtype=bool)
    bits[0, 1] = True
    path = tmp_path / "tiny.pgm"
    write_mask_pgm(path, ObjectMask(bits=bits))
    assert path.read_bytes() == b"P5\n3 2\n255\n" + bytes([0, 255, 0, 0, 0, 0])


def test_depth_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    depth = rng.integers(0, 10000, size=(120, 160), dtype=np.uint16)
    frame = DepthFrame(timestamp=1.25, depth=depth, intrinsics=INTR, frame_index=9)
    path = tmp_path / "depth.pgm"
    write_depth_pgm(path, frame)
    again = read_depth_pgm(path)
    assert (again.depth == depth).all()
    assert again.timestamp == 1.25
    assert again.frame_index == 9
    assert again.intrinsics == INTR


def test_depth_big_endian_on_disk(tmp_path):
    depth = np.zeros((1, 2), dtype=np.uint16)
    depth[0, 0] = 0x0102
    intr = CameraIntrinsics(fx=1.0, fy=1.0, cx=0.0, cy=0.0, width=2, height=1)
    path = tmp_path / "be.pgm"
    write_depth_pgm(path, DepthFrame(timestamp=0.0, depth=depth, intrinsics=intr,
                                     frame_index=0))
    raw = path.read_bytes()
    assert raw == b"P5\n2 1\n65535\n" + bytes([0x01, 0x02, 0x00, 0x00])


def test_header_comments_tolerated(tmp_path):
    path = tmp_path / "comment.pgm"
    path.write_bytes(b"P5\n# a comment\n3 2\n255\n" + bytes(6))
    mask = read_mask_pgm(path)
    assert mask.width == 3 and mask.height == 2
    assert mask.is_empty()


def test_wrong_magic_rejected(tmp_path):
    path = tmp_path / "bad.pgm"
    path.write_bytes(b"P2\n1 1\n255\n0")
    with pytest.raises(ValueError):
        read_mask_pgm(path)


def test_wrong_maxval_rejected(tmp_path):
    path = tmp_path / "bad16.pgm"
    path.write_bytes(b"P5\n1 1\n65535\n\x00\x00")
    with pytest.raises(ValueError):
        read_mask_pgm(path)
