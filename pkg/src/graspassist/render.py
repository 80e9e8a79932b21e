"""Synthetic depth rendering for transparent-object proxies.

Ray-casts the scenario's analytic shape from the interpolated camera
pose, then applies the validity model transparent objects exhibit on a
structured-light sensor: depth returns survive near the silhouette
edges and mostly vanish in the interior. All randomness is
counter-based on (seed, frame_index), so frames can be rendered in any
order, or re-rendered in isolation, with identical results.
"""

from __future__ import annotations

import numpy as np

from .perception import CameraIntrinsics, DepthFrame, MaskSource, ObjectMask
from .scenario import ObjectShape, ObjectSpec, Scenario

DEFAULT_FRAME_RATE = 30.0

DEFAULT_INTRINSICS = CameraIntrinsics(
    fx=130.0, fy=130.0, cx=79.5, cy=59.5, width=160, height=120
)

_WORLD_DOWN = np.array([0.0, 1.0, 0.0])


def camera_rotation(cam_pos: np.ndarray, target: np.ndarray | None = None) -> np.ndarray:
    """World-to-camera rotation for a camera at cam_pos looking at target.

    Rows are the camera's x (right), y (down), z (forward) axes in
    world coordinates; +y down matches the raster's row direction.
    """
    if target is None:
        target = np.zeros(3)
    forward = target - cam_pos
    norm = np.linalg.norm(forward)
    if norm < 1e-12:
        raise ValueError("camera position coincides with its target")
    forward = forward / norm
    right = np.cross(_WORLD_DOWN, forward)
    right_norm = np.linalg.norm(right)
    if right_norm < 1e-9:  # looking straight up/down: pick a stable right axis
        right = np.array([1.0, 0.0, 0.0])
    else:
        right = right / right_norm
    down = np.cross(forward, right)
    return np.stack([right, down, forward])


def _ray_quadratic(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Smaller positive root of a*s^2 + b*s + c = 0, inf where none."""
    disc = b * b - 4.0 * a * c
    s = np.full(b.shape, np.inf)
    ok = (disc >= 0) & (a > 1e-18)
    sqrt_disc = np.sqrt(np.where(ok, disc, 0.0))
    near = (-b - sqrt_disc) / np.where(ok, 2.0 * a, 1.0)
    far = (-b + sqrt_disc) / np.where(ok, 2.0 * a, 1.0)
    root = np.where(near > 1e-9, near, far)
    s = np.where(ok & (root > 1e-9), root, s)
    return s


def _hit_sphere(o: np.ndarray, d: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    oc = o - center
    a = np.sum(d * d, axis=-1)
    b = 2.0 * np.sum(d * oc, axis=-1)
    c = np.full(b.shape, float(oc @ oc - radius * radius))
    return _ray_quadratic(a, b, c)


def _hit_cylinder(
    o: np.ndarray, d: np.ndarray, center_y: float, radius: float, height: float
) -> np.ndarray:
    """Finite y-axis cylinder centered at (0, center_y, 0), with caps."""
    half = height / 2.0
    a = d[..., 0] ** 2 + d[..., 2] ** 2
    b = 2.0 * (o[0] * d[..., 0] + o[2] * d[..., 2])
    c = np.full(b.shape, o[0] ** 2 + o[2] ** 2 - radius * radius)
    s_side = _ray_quadratic(a, b, c)
    side_finite = np.isfinite(s_side)
    y_hit = o[1] + np.where(side_finite, s_side, 0.0) * d[..., 1]
    s_side = np.where(side_finite & (np.abs(y_hit - center_y) <= half), s_side, np.inf)

    best = s_side
    dy = d[..., 1]
    safe_dy = np.where(np.abs(dy) > 1e-12, dy, 1.0)
    for cap_y in (center_y - half, center_y + half):
        s_cap = (cap_y - o[1]) / safe_dy
        x = o[0] + s_cap * d[..., 0]
        z = o[2] + s_cap * d[..., 2]
        valid = (
            (np.abs(dy) > 1e-12)
            & (s_cap > 1e-9)
            & (x * x + z * z <= radius * radius)
        )
        best = np.where(valid & (s_cap < best), s_cap, best)
    return best


def _hit_box(
    o: np.ndarray, d: np.ndarray, half_extents: tuple[float, float, float]
) -> np.ndarray:
    """Axis-aligned box centered at the origin (slab method)."""
    tmin = np.full(d.shape[:-1], -np.inf)
    tmax = np.full(d.shape[:-1], np.inf)
    for axis in range(3):
        h = half_extents[axis]
        da = d[..., axis]
        oa = o[axis]
        parallel = np.abs(da) < 1e-12
        safe = np.where(parallel, 1.0, da)
        t1 = (-h - oa) / safe
        t2 = (h - oa) / safe
        lo = np.minimum(t1, t2)
        hi = np.maximum(t1, t2)
        lo = np.where(parallel, np.where(np.abs(oa) <= h, -np.inf, np.inf), lo)
        hi = np.where(parallel, np.where(np.abs(oa) <= h, np.inf, -np.inf), hi)
        tmin = np.maximum(tmin, lo)
        tmax = np.minimum(tmax, hi)
    hit = (tmax >= tmin) & (tmax > 1e-9)
    entry = np.where(tmin > 1e-9, tmin, tmax)
    return np.where(hit & (entry > 1e-9), entry, np.inf)


def cast_object(o: np.ndarray, d: np.ndarray, obj: ObjectSpec) -> np.ndarray:
    """Ray parameters (camera z-depth, meters) for every ray; inf = miss."""
    dims = obj.dimensions
    if obj.shape is ObjectShape.Sphere:
        return _hit_sphere(o, d, np.zeros(3), dims["radius"])
    if obj.shape is ObjectShape.Cylinder:
        return _hit_cylinder(o, d, 0.0, dims["radius"], dims["height"])
    if obj.shape is ObjectShape.Box:
        half = (dims["width"] / 2, dims["height"] / 2, dims["depth"] / 2)
        return _hit_box(o, d, half)
    if obj.shape is ObjectShape.Stem:
        # disk on top of a thin stem; +y is down, so the disk sits at -y
        total = dims["disk_height"] + dims["stem_height"]
        disk_cy = -total / 2 + dims["disk_height"] / 2
        stem_cy = total / 2 - dims["stem_height"] / 2
        s_disk = _hit_cylinder(o, d, disk_cy, dims["disk_radius"], dims["disk_height"])
        s_stem = _hit_cylinder(o, d, stem_cy, dims["stem_radius"], dims["stem_height"])
        return np.minimum(s_disk, s_stem)
    raise ValueError(f"unsupported shape {obj.shape!r}")


def _erode4(bits: np.ndarray, iterations: int) -> np.ndarray:
    """Binary erosion under 4-connectivity, out-of-raster = unset."""
    out = bits
    for _ in range(iterations):
        padded = np.pad(out, 1, constant_values=False)
        out = (
            padded[1:-1, 1:-1]
            & padded[:-2, 1:-1]
            & padded[2:, 1:-1]
            & padded[1:-1, :-2]
            & padded[1:-1, 2:]
        )
    return out


def render_depth(
    scenario: Scenario,
    t: float,
    intrinsics: CameraIntrinsics = DEFAULT_INTRINSICS,
    frame_index: int | None = None,
    camera_offset_m: float = 0.0,
) -> tuple[DepthFrame, ObjectMask]:
    """Render one synthetic frame: exact silhouette mask plus sparse depth.

    Pixels within edge_band_px of the silhouette boundary are dropped
    with probability edge_p, interior pixels with probability
    interior_p; surviving depths carry zero-mean Gaussian noise. The
    per-pixel random draws depend only on (seed, frame_index, pixel).
    """
    if frame_index is None:
        frame_index = int(round(t * DEFAULT_FRAME_RATE))
    if frame_index < 0:
        raise ValueError("frame_index must be non-negative")

    cam_pos = scenario.camera_position(t, offset_m=camera_offset_m)
    rot = camera_rotation(cam_pos)  # world -> camera; rows are camera axes
    h, w = intrinsics.height, intrinsics.width
    u = np.arange(w, dtype=np.float64)
    v = np.arange(h, dtype=np.float64)
    uu, vv = np.meshgrid(u, v)
    # unnormalized camera-frame directions with unit z: the ray parameter
    # is then directly the camera z-depth
    d_cam = np.stack(
        [(uu - intrinsics.cx) / intrinsics.fx, (vv - intrinsics.cy) / intrinsics.fy,
         np.ones_like(uu)],
        axis=-1,
    )
    d_world = d_cam @ rot  # (h, w, 3); equals rot.T applied per ray

    depth_m = cast_object(cam_pos, d_world, scenario.object)
    mask_bits = np.isfinite(depth_m)

    depth_mm = np.zeros((h, w), dtype=np.uint16)
    if mask_bits.any():
        rng = np.random.Generator(
            np.random.Philox(key=np.array([scenario.seed, frame_index], dtype=np.uint64))
        )
        dropout_u = rng.random((h, w))
        noise = rng.normal(0.0, 1.0, (h, w))

        interior = _erode4(mask_bits, scenario.dropout.edge_band_px)
        edge_band = mask_bits & ~interior
        invalid = (edge_band & (dropout_u < scenario.dropout.edge_p)) | (
            interior & (dropout_u < scenario.dropout.interior_p)
        )
        valid = mask_bits & ~invalid
        noisy = depth_m * 1000.0 + noise * scenario.depth_noise_sigma_mm
        depth_mm[valid] = np.clip(np.rint(noisy[valid]), 1, 9999).astype(np.uint16)

    frame = DepthFrame(
        timestamp=t,
        depth=depth_mm,
        intrinsics=intrinsics,
        frame_index=frame_index,
    )
    return frame, ObjectMask(bits=mask_bits, source=MaskSource.GroundTruth)
