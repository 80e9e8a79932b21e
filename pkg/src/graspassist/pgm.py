"""Binary PGM (P5) readers and writers for masks and depth rasters.

Masks: 8-bit, 255 = object, 0 = background.
Depth: 16-bit big-endian millimeters, 0 = invalid, one file per frame
with a sidecar JSON carrying intrinsics, timestamp and frame index.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .perception import CameraIntrinsics, DepthFrame, MaskSource, ObjectMask


def _read_pgm_header(data: bytes) -> tuple[int, int, int, int]:
    """Parse a P5 header, returning (width, height, maxval, data offset)."""
    if not data.startswith(b"P5"):
        raise ValueError("not a binary PGM (P5) file")
    fields: list[int] = []
    pos = 2
    while len(fields) < 3:
        if pos >= len(data):
            raise ValueError("truncated PGM header")
        c = data[pos : pos + 1]
        if c == b"#":  # comment runs to end of line
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
        elif c.isspace():
            pos += 1
        else:
            end = pos
            while end < len(data) and not data[end : end + 1].isspace():
                end += 1
            fields.append(int(data[pos:end]))
            pos = end
    pos += 1  # single whitespace byte after maxval
    return fields[0], fields[1], fields[2], pos


def write_mask_pgm(path: str | Path, mask: ObjectMask) -> None:
    raster = np.where(mask.bits, 255, 0).astype(np.uint8)
    header = f"P5\n{mask.width} {mask.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + raster.tobytes())


def read_mask_pgm(path: str | Path) -> ObjectMask:
    data = Path(path).read_bytes()
    width, height, maxval, offset = _read_pgm_header(data)
    if maxval != 255:
        raise ValueError(f"mask PGM must be 8-bit (maxval 255), got {maxval}")
    raster = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=offset)
    bits = raster.reshape(height, width) >= 128
    return ObjectMask(bits=bits, source=MaskSource.File)


def write_depth_pgm(path: str | Path, frame: DepthFrame) -> None:
    """Write depth as 16-bit big-endian P5 plus a .json sidecar."""
    path = Path(path)
    header = f"P5\n{frame.intrinsics.width} {frame.intrinsics.height}\n65535\n"
    raster = frame.depth.astype(">u2")
    path.write_bytes(header.encode("ascii") + raster.tobytes())
    intr = frame.intrinsics
    sidecar = {
        "timestamp": frame.timestamp,
        "frame_index": frame.frame_index,
        "intrinsics": {
            "fx": intr.fx,
            "fy": intr.fy,
            "cx": intr.cx,
            "cy": intr.cy,
            "width": intr.width,
            "height": intr.height,
        },
    }
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(sidecar, sort_keys=True, indent=2) + "\n"
    )


def read_depth_pgm(path: str | Path) -> DepthFrame:
    path = Path(path)
    data = path.read_bytes()
    width, height, maxval, offset = _read_pgm_header(data)
    if maxval != 65535:
        raise ValueError(f"depth PGM must be 16-bit (maxval 65535), got {maxval}")
    raster = np.frombuffer(data, dtype=">u2", count=width * height, offset=offset)
    sidecar = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    intr = CameraIntrinsics(**sidecar["intrinsics"])
    if (intr.width, intr.height) != (width, height):
        raise ValueError("sidecar intrinsics disagree with PGM dimensions")
    return DepthFrame(
        timestamp=float(sidecar["timestamp"]),
        depth=raster.reshape(height, width).astype(np.uint16),
        intrinsics=intr,
        frame_index=int(sidecar["frame_index"]),
    )
