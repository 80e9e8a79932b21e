"""High-level perception layer: mask + depth geometry.

Turns a binary object mask and a sparse depth raster into a 3D grasp
point and a camera-to-object distance. All functions are pure and
operate on immutable inputs, so they are safe to call concurrently.

Conventions:
  - depth rasters are row-major uint16 millimeters, 0 = no return
  - pixels are addressed as (u, v) = (column, row)
  - deprojected points are metric, in the camera frame (+z forward)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DimensionMismatch, EmptyCloud, EmptyMask, InsufficientDepth

MAX_DEPTH_MM = 10000


class FrameDecision(Enum):
    Infer = "infer"
    Skip = "skip"


class MaskSource(Enum):
    GroundTruth = "ground_truth"
    File = "file"


@dataclass
class CameraIntrinsics:
    """Pinhole model: focal lengths and principal point in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the raster")


@dataclass
class DepthFrame:
    """One timestamped depth raster plus the intrinsics that produced it."""

    timestamp: float
    depth: np.ndarray  # (height, width) uint16, millimeters, 0 = invalid
    intrinsics: CameraIntrinsics
    frame_index: int

    def __post_init__(self) -> None:
        h, w = self.depth.shape
        if (w, h) != (self.intrinsics.width, self.intrinsics.height):
            raise DimensionMismatch(
                f"depth raster {w}x{h} does not match intrinsics "
                f"{self.intrinsics.width}x{self.intrinsics.height}"
            )
        if self.frame_index < 0:
            raise ValueError("frame_index must be non-negative")


@dataclass
class ObjectMask:
    """Binary segmentation raster; True marks object pixels."""

    bits: np.ndarray  # (height, width) bool
    source: MaskSource = MaskSource.GroundTruth

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def is_empty(self) -> bool:
        return not bool(self.bits.any())


@dataclass
class BoundaryCloud:
    """Deprojected boundary pixels: metric camera-frame points."""

    points: np.ndarray  # (n, 3) float64, meters
    pixel_origins: np.ndarray  # (n, 2) int, (u, v) per point

    def __post_init__(self) -> None:
        if len(self.points) != len(self.pixel_origins):
            raise ValueError("points and pixel_origins must pair up")

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class GraspPoint:
    """PCA summary of a boundary cloud.

    centroid is always meaningful; axes/variances are only meaningful
    when `degenerate` is False (at least 3 support points and a
    full-rank covariance).
    """

    centroid: np.ndarray  # (3,) meters
    axes: np.ndarray  # (3, 3) rows = principal axes, descending variance
    variances: np.ndarray  # (3,) eigenvalues, m^2, descending
    support: int
    degenerate: bool = field(default=False)


def select_frame(frame_index: int) -> FrameDecision:
    """Pick every third frame for inference (indices 0, 3, 6, ...)."""
    if frame_index < 0:
        raise ValueError("frame_index must be non-negative")
    return FrameDecision.Infer if frame_index % 3 == 0 else FrameDecision.Skip


def extract_boundary(mask: ObjectMask) -> np.ndarray:
    """Boundary pixels of a mask under 4-connectivity.

    A set pixel is boundary when at least one 4-neighbor is unset or
    falls outside the raster. Returns an (n, 2) int array of (u, v)
    in row-major order.

    Raises EmptyMask when no pixel is set.
    """
    bits = mask.bits
    if not bits.any():
        raise EmptyMask("mask has no set pixels")
    padded = np.pad(bits, 1, constant_values=False)
    interior = (
        padded[:-2, 1:-1]
        & padded[2:, 1:-1]
        & padded[1:-1, :-2]
        & padded[1:-1, 2:]
    )
    boundary = bits & ~interior
    vu = np.argwhere(boundary)  # row-major (v, u)
    return vu[:, ::-1].copy()


def deproject(u: float, v: float, depth_mm: float, intr: CameraIntrinsics) -> np.ndarray:
    """Pinhole deprojection of one pixel to a metric camera-frame point."""
    z = depth_mm / 1000.0
    x = (u - intr.cx) * z / intr.fx
    y = (v - intr.cy) * z / intr.fy
    return np.array([x, y, z])


def project(point: np.ndarray, intr: CameraIntrinsics) -> tuple[float, float, float]:
    """Inverse of deproject: (u, v, depth_mm) for a camera-frame point."""
    x, y, z = point
    u = x * intr.fx / z + intr.cx
    v = y * intr.fy / z + intr.cy
    return u, v, z * 1000.0


def align_and_lift(mask: ObjectMask, frame: DepthFrame) -> BoundaryCloud:
    """Deproject the mask's boundary pixels that carry valid depth.

    Raises DimensionMismatch when mask and frame rasters differ, and
    InsufficientDepth when fewer than 3 boundary pixels have a valid
    (nonzero) depth return -- the caller should hold its previous
    grasp point.
    """
    if (mask.width, mask.height) != (frame.intrinsics.width, frame.intrinsics.height):
        raise DimensionMismatch(
            f"mask {mask.width}x{mask.height} vs frame "
            f"{frame.intrinsics.width}x{frame.intrinsics.height}"
        )
    pixels = extract_boundary(mask)
    u = pixels[:, 0]
    v = pixels[:, 1]
    depth_mm = frame.depth[v, u].astype(np.float64)
    valid = depth_mm > 0
    if int(valid.sum()) < 3:
        raise InsufficientDepth(
            f"only {int(valid.sum())} boundary pixels have valid depth"
        )
    u = u[valid]
    v = v[valid]
    z = depth_mm[valid] / 1000.0
    intr = frame.intrinsics
    x = (u - intr.cx) * z / intr.fx
    y = (v - intr.cy) * z / intr.fy
    points = np.column_stack([x, y, z])
    return BoundaryCloud(points=points, pixel_origins=pixels[valid])


def _orient_axes(axes: np.ndarray) -> np.ndarray:
    """Flip each axis so its largest-magnitude component is positive."""
    out = axes.copy()
    for i in range(3):
        j = int(np.argmax(np.abs(out[i])))
        if out[i, j] < 0:
            out[i] = -out[i]
    return out


def compute_grasp_point(cloud: BoundaryCloud) -> GraspPoint:
    """Centroid and principal axes of a boundary cloud.

    Covariance is normalized by n (not n-1). Axes are sorted by
    descending variance and sign-fixed so the largest-magnitude
    component of each axis is positive.
    """
    n = len(cloud)
    if n == 0:
        raise EmptyCloud("cannot summarize an empty cloud")
    centroid = cloud.points.mean(axis=0)
    if n < 3:
        return GraspPoint(
            centroid=centroid,
            axes=np.eye(3),
            variances=np.zeros(3),
            support=n,
            degenerate=True,
        )
    centered = cloud.points - centroid
    cov = centered.T @ centered / n
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    variances = np.clip(eigvals[order], 0.0, None)
    axes = _orient_axes(eigvecs[:, order].T)
    rank = int(np.sum(variances > 1e-12 * max(variances[0], 1e-30)))
    return GraspPoint(
        centroid=centroid,
        axes=axes,
        variances=variances,
        support=n,
        degenerate=rank < 3,
    )


def distance_to_camera(gp: GraspPoint) -> float:
    """Camera-to-grasp-point distance in millimeters (unrounded).

    The unrounded value feeds the trigger; round with round_mm() for
    logging and display.
    """
    return float(np.linalg.norm(gp.centroid)) * 1000.0


def round_mm(distance_mm: float) -> float:
    """Round a millimeter distance to the nearest 0.1 mm for logging."""
    return round(distance_mm, 1)
