"""Declarative simulation scenarios: object, camera trajectory, scripts.

A scenario file is versioned JSON (schema 1). The world frame puts the
object's geometric center at the origin with +y pointing down; the
camera moves along scripted waypoints and always looks at the origin.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ScenarioError
from .voice import VoiceEvent

SCHEMA_VERSION = 1


class ObjectShape(Enum):
    Cylinder = "cylinder"
    Sphere = "sphere"
    Box = "box"
    Stem = "stem"  # stemmed-disk proxy for a wine glass


class Material(Enum):
    Glass = "glass"
    Plastic = "plastic"


class GraspType(Enum):
    Cylindrical = "cylindrical"
    Spherical = "spherical"
    Pinch = "pinch"


_REQUIRED_DIMENSIONS = {
    ObjectShape.Cylinder: ("radius", "height"),
    ObjectShape.Sphere: ("radius",),
    ObjectShape.Box: ("width", "height", "depth"),
    ObjectShape.Stem: ("disk_radius", "disk_height", "stem_radius", "stem_height"),
}

# Glass surfaces hold less friction than plastic; these drive the
# slip threshold of a held object.
DEFAULT_FRICTION = {Material.Glass: 0.20, Material.Plastic: 0.35}


@dataclass(frozen=True)
class ObjectSpec:
    name: str
    shape: ObjectShape
    dimensions: dict[str, float]
    material: Material
    grasp_type: GraspType
    friction_coeff: float = 0.0  # 0 means "use the material default"

    def __post_init__(self) -> None:
        required = _REQUIRED_DIMENSIONS[self.shape]
        missing = [k for k in required if k not in self.dimensions]
        if missing:
            raise ScenarioError(f"{self.shape.value} needs dimensions {missing}")
        for key, value in self.dimensions.items():
            if value <= 0:
                raise ScenarioError(f"dimension {key} must be positive")
        if self.friction_coeff < 0:
            raise ScenarioError("friction_coeff must be non-negative")

    @property
    def friction(self) -> float:
        return self.friction_coeff if self.friction_coeff > 0 else DEFAULT_FRICTION[self.material]


@dataclass(frozen=True)
class Waypoint:
    t: float
    pos: tuple[float, float, float]  # camera position, world meters


@dataclass(frozen=True)
class Disturbance:
    t: float
    load_nm: float  # extra tendon load from this time on (piecewise constant)


@dataclass(frozen=True)
class DropoutSpec:
    interior_p: float = 0.80
    edge_p: float = 0.05
    edge_band_px: int = 3

    def __post_init__(self) -> None:
        if not (0 <= self.interior_p <= 1 and 0 <= self.edge_p <= 1):
            raise ScenarioError("dropout probabilities must be in [0, 1]")
        if self.edge_band_px < 1:
            raise ScenarioError("edge_band_px must be >= 1")


@dataclass
class Scenario:
    name: str
    object: ObjectSpec
    trajectory: list[Waypoint]
    voice_script: list[VoiceEvent] = field(default_factory=list)
    disturbance_script: list[Disturbance] = field(default_factory=list)
    dropout: DropoutSpec = field(default_factory=DropoutSpec)
    depth_noise_sigma_mm: float = 2.0
    seed: int = 0
    duration_s: float = 15.0

    def __post_init__(self) -> None:
        if not self.trajectory:
            raise ScenarioError("trajectory needs at least one waypoint")
        times = [w.t for w in self.trajectory]
        if times != sorted(times):
            raise ScenarioError("trajectory waypoints must be time-sorted")
        if self.depth_noise_sigma_mm < 0:
            raise ScenarioError("depth_noise_sigma_mm must be non-negative")
        if self.duration_s <= 0:
            raise ScenarioError("duration_s must be positive")
        last_event = max(
            [w.t for w in self.trajectory]
            + [ev.timestamp for ev in self.voice_script]
            + [d.t for d in self.disturbance_script]
        )
        if last_event > self.duration_s:
            raise ScenarioError(
                f"duration {self.duration_s}s does not cover event at {last_event}s"
            )

    def camera_position(self, t: float, offset_m: float = 0.0) -> np.ndarray:
        """Interpolated camera position; offset shifts it along the view ray."""
        wp = self.trajectory
        if t <= wp[0].t:
            pos = np.array(wp[0].pos, dtype=float)
        elif t >= wp[-1].t:
            pos = np.array(wp[-1].pos, dtype=float)
        else:
            i = max(j for j in range(len(wp)) if wp[j].t <= t)
            a, b = wp[i], wp[min(i + 1, len(wp) - 1)]
            if b.t == a.t:
                pos = np.array(b.pos, dtype=float)
            else:
                frac = (t - a.t) / (b.t - a.t)
                pos = (1 - frac) * np.array(a.pos, dtype=float) + frac * np.array(
                    b.pos, dtype=float
                )
        if offset_m != 0.0:
            dist = float(np.linalg.norm(pos))
            if dist > 1e-9:
                new_dist = min(max(dist + offset_m, 0.050), 1.500)
                pos = pos * (new_dist / dist)
        return pos

    def disturbance_at(self, t: float) -> float:
        load = 0.0
        for d in self.disturbance_script:
            if d.t <= t:
                load = d.load_nm
        return load


def _require(obj: dict, key: str, context: str) -> Any:
    if key not in obj:
        raise ScenarioError(f"{context}: missing required field {key!r}")
    return obj[key]


def scenario_from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("scenario root must be a JSON object")
    if data.get("schema") != SCHEMA_VERSION:
        raise ScenarioError(
            f"unsupported scenario schema {data.get('schema')!r}, expected {SCHEMA_VERSION}"
        )
    try:
        obj = _require(data, "object", "scenario")
        spec = ObjectSpec(
            name=str(obj.get("name", "object")),
            shape=ObjectShape(_require(obj, "shape", "object")),
            dimensions={k: float(v) for k, v in _require(obj, "dimensions", "object").items()},
            material=Material(_require(obj, "material", "object")),
            grasp_type=GraspType(_require(obj, "grasp_type", "object")),
            friction_coeff=float(obj.get("friction_coeff", 0.0)),
        )
        trajectory = [
            Waypoint(t=float(_require(w, "t", "waypoint")), pos=tuple(map(float, w["pos"])))
            for w in _require(data, "trajectory", "scenario")
        ]
        voice = [
            VoiceEvent(
                token=str(_require(ev, "token", "voice event")),
                timestamp=float(_require(ev, "t", "voice event")),
                confidence=float(ev.get("conf", 1.0)),
            )
            for ev in data.get("voice_script", [])
        ]
        disturbances = [
            Disturbance(t=float(_require(d, "t", "disturbance")), load_nm=float(d["load_nm"]))
            for d in data.get("disturbance_script", [])
        ]
        dropout_obj = data.get("dropout", {})
        dropout = DropoutSpec(
            interior_p=float(dropout_obj.get("interior_p", 0.80)),
            edge_p=float(dropout_obj.get("edge_p", 0.05)),
            edge_band_px=int(dropout_obj.get("edge_band_px", 3)),
        )
        return Scenario(
            name=str(data.get("name", "unnamed")),
            object=spec,
            trajectory=trajectory,
            voice_script=voice,
            disturbance_script=disturbances,
            dropout=dropout,
            depth_noise_sigma_mm=float(data.get("depth_noise_sigma_mm", 2.0)),
            seed=int(data.get("seed", 0)),
            duration_s=float(_require(data, "duration_s", "scenario")),
        )
    except ScenarioError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"invalid scenario: {exc}") from exc


def scenario_to_dict(sc: Scenario) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "name": sc.name,
        "seed": sc.seed,
        "duration_s": sc.duration_s,
        "object": {
            "name": sc.object.name,
            "shape": sc.object.shape.value,
            "dimensions": sc.object.dimensions,
            "material": sc.object.material.value,
            "grasp_type": sc.object.grasp_type.value,
            "friction_coeff": sc.object.friction_coeff,
        },
        "trajectory": [{"t": w.t, "pos": list(w.pos)} for w in sc.trajectory],
        "voice_script": [
            {"t": ev.timestamp, "token": ev.token, "conf": ev.confidence}
            for ev in sc.voice_script
        ],
        "disturbance_script": [
            {"t": d.t, "load_nm": d.load_nm} for d in sc.disturbance_script
        ],
        "dropout": {
            "interior_p": sc.dropout.interior_p,
            "edge_p": sc.dropout.edge_p,
            "edge_band_px": sc.dropout.edge_band_px,
        },
        "depth_noise_sigma_mm": sc.depth_noise_sigma_mm,
    }


def load_scenario(path: str | Path) -> Scenario:
    """Parse and validate a scenario file. Raises ScenarioError with a
    line/column diagnostic on malformed JSON."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return scenario_from_dict(data)


def save_scenario(sc: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(sc), indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Built-in object set: six transparent-object proxies in three grasp groups.

STANDARD_OBJECTS: tuple[ObjectSpec, ...] = (
    ObjectSpec(
        name="glass_high",
        shape=ObjectShape.Cylinder,
        dimensions={"radius": 0.033, "height": 0.16},
        material=Material.Glass,
        grasp_type=GraspType.Cylindrical,
    ),
    ObjectSpec(
        name="glass_low",
        shape=ObjectShape.Cylinder,
        dimensions={"radius": 0.035, "height": 0.10},
        material=Material.Glass,
        grasp_type=GraspType.Cylindrical,
    ),
    ObjectSpec(
        name="plastic_ball",
        shape=ObjectShape.Sphere,
        dimensions={"radius": 0.035},
        material=Material.Plastic,
        grasp_type=GraspType.Spherical,
    ),
    ObjectSpec(
        name="glass_dome",
        shape=ObjectShape.Sphere,
        dimensions={"radius": 0.040},
        material=Material.Glass,
        grasp_type=GraspType.Spherical,
    ),
    ObjectSpec(
        name="wine_glass",
        shape=ObjectShape.Stem,
        dimensions={
            "disk_radius": 0.032,
            "disk_height": 0.015,
            "stem_radius": 0.005,
            "stem_height": 0.100,
        },
        material=Material.Glass,
        grasp_type=GraspType.Pinch,
    ),
    ObjectSpec(
        name="storage_box",
        shape=ObjectShape.Box,
        dimensions={"width": 0.040, "height": 0.045, "depth": 0.040},
        material=Material.Plastic,
        grasp_type=GraspType.Pinch,
    ),
)


def canonical_scenario(
    obj: ObjectSpec | None = None, seed: int = 0, name: str | None = None
) -> Scenario:
    """The five-stage protocol script: prompt, approach, grasp, hold
    through a wrist-rotation load, release, stop.

    The camera crosses the 400 mm trigger distance at t=3.0 s and the
    grip prompt lands at t=1.0 s, so the grasp dispatches at t=5.0 s.
    """
    if obj is None:
        obj = STANDARD_OBJECTS[0]
    return Scenario(
        name=name or f"canonical_{obj.name}",
        object=obj,
        trajectory=[
            Waypoint(t=0.0, pos=(0.0, 0.0, -0.680)),
            Waypoint(t=1.0, pos=(0.0, 0.0, -0.650)),
            Waypoint(t=2.9, pos=(0.0, 0.0, -0.425)),
            Waypoint(t=3.0, pos=(0.0, 0.0, -0.390)),
            Waypoint(t=3.4, pos=(0.0, 0.0, -0.320)),
            Waypoint(t=15.0, pos=(0.0, 0.0, -0.320)),
        ],
        voice_script=[
            VoiceEvent(token="grip", timestamp=1.0),
            VoiceEvent(token="release", timestamp=12.0),
            VoiceEvent(token="stop", timestamp=13.5),
        ],
        disturbance_script=[
            Disturbance(t=8.0, load_nm=0.6),
            Disturbance(t=11.0, load_nm=0.0),
        ],
        seed=seed,
        duration_s=15.0,
    )


def standard_suite(trials_per_object: int = 3, base_seed: int = 100) -> list[Scenario]:
    """The 6-object x N-trial evaluation suite."""
    scenarios = []
    for obj in STANDARD_OBJECTS:
        for trial in range(trials_per_object):
            seed = base_seed + 17 * len(scenarios)
            scenarios.append(
                canonical_scenario(obj, seed=seed, name=f"{obj.name}_trial{trial + 1}")
            )
    return scenarios
