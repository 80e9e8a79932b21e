"""Deterministic simulation harness.

Wires perception, the mid-layer and the actuation loop on a shared
virtual clock (100 Hz control, 30 FPS frames, one inference every three
frames) and records everything into a replayable JSON-lines event log.
Identical (scenario, config) pairs produce byte-identical logs.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .actuation import (
    RATED_TORQUE_NM,
    LowLevelController,
    MotorState,
    PidGains,
    PlantParams,
)
from .errors import EmptyMask, IncompleteLog, InsufficientDepth
from .midlayer import (
    ActuationCommand,
    CommandKind,
    DeadZoneSpec,
    MidLayerConfig,
    MidLayerInput,
    MidLayerState,
    initial_state,
    serialize_state,
    step,
)
from .perception import (
    CameraIntrinsics,
    DepthFrame,
    FrameDecision,
    GraspPoint,
    ObjectMask,
    align_and_lift,
    compute_grasp_point,
    distance_to_camera,
    round_mm,
    select_frame,
)
from .render import DEFAULT_INTRINSICS, render_depth
from .scenario import GraspType, Scenario
from .transport import (
    TAG_DEPTH_FRAME,
    Channel,
    ChannelConfig,
    command_kind_of,
    command_message,
    json_message,
    json_payload,
)
from .voice import Prompt, PromptKind, match_prompt

LOG_SCHEMA = 1


def _dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


class EventLog:
    """Append-only JSON-lines record of one simulation run.

    Line shapes:
      {"t", "dir": "meta"|"in"|"out"|"state"|"sim", "event": {...}}
      {"t", "angle", "omega", "tau", "mode"}          (telemetry)

    Replaying the "in" lines through a fresh mid-layer regenerates the
    "out" lines byte-for-byte.
    """

    def __init__(self, lines: Optional[list[str]] = None):
        self.lines: list[str] = lines if lines is not None else []

    def append(self, line: str) -> None:
        self.lines.append(line)

    def meta(self, event: dict) -> None:
        self.append(_dumps({"t": 0.0, "dir": "meta", "event": event}))

    def record_in(self, t: float, inp: MidLayerInput) -> None:
        prompt = (
            None
            if inp.prompt is None
            else {"kind": inp.prompt.kind.value, "t": inp.prompt.timestamp}
        )
        self.append(
            _dumps(
                {
                    "t": t,
                    "dir": "in",
                    "event": {
                        "type": "midlayer_input",
                        "prompt": prompt,
                        "distance_mm": inp.grasp_distance_mm,
                        "torque_nm": inp.measured_torque_nm,
                    },
                }
            )
        )

    def record_out(self, t: float, cmd: ActuationCommand) -> None:
        self.append(format_out_line(t, cmd))

    def record_state(self, t: float, record: str) -> None:
        self.append(
            _dumps({"t": t, "dir": "state", "event": {"type": "midlayer_state", "record": record}})
        )

    def sim(self, t: float, event: dict) -> None:
        self.append(_dumps({"t": t, "dir": "sim", "event": event}))

    def telemetry(self, t: float, motor: MotorState) -> None:
        self.append(
            _dumps(
                {
                    "t": t,
                    "angle": motor.angle,
                    "omega": motor.angular_velocity,
                    "tau": motor.applied_torque,
                    "mode": motor.mode.value,
                }
            )
        )

    def records(self) -> list[dict]:
        return [json.loads(line) for line in self.lines]

    def to_text(self) -> str:
        return "\n".join(self.lines) + "\n" if self.lines else ""

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def read(cls, path: str | Path) -> "EventLog":
        return cls(lines=Path(path).read_text().splitlines())


def format_out_line(t: float, cmd: ActuationCommand) -> str:
    return _dumps(
        {"t": t, "dir": "out", "event": {"type": "command", "kind": cmd.kind.value}}
    )


@dataclass(frozen=True)
class SimConfig:
    """Everything about the system under test that is not the scenario."""

    intrinsics: CameraIntrinsics = DEFAULT_INTRINSICS
    control_rate_hz: int = 100
    frame_rate_fps: float = 30.0
    midlayer: MidLayerConfig = field(default_factory=MidLayerConfig)
    gains: PidGains = field(default_factory=PidGains)
    plant: PlantParams = field(default_factory=PlantParams)
    velocity_setpoint: float = 3.0
    min_confidence: float = 0.5
    frame_channel: ChannelConfig = field(default_factory=ChannelConfig)
    command_latency_s: float = 0.0
    derive_slip_from_friction: bool = True
    slip_rate_mm_s: float = 20.0
    drop_limit_mm: float = 30.0
    seed_override: Optional[int] = None


def classify_grasp(
    mask: ObjectMask, grasp: GraspPoint, intrinsics: CameraIntrinsics
) -> Optional[GraspType]:
    """Judge the realized grasp type from the silhouette at grasp time.

    Measures the metric width of the silhouette in a finger-wide band
    around the grasp point and how that width tapers 25 mm above and
    below: a narrow contact is a pinch, a constant-width profile takes
    a cylindrical grip, a tapering one a spherical grip.
    """
    bits = mask.bits
    rows = np.flatnonzero(bits.any(axis=1))
    if rows.size == 0:
        return None
    z = float(grasp.centroid[2])
    if z <= 0:
        return None
    y_rows = (rows - intrinsics.cy) * z / intrinsics.fy
    widths = np.empty(rows.size)
    for i, v in enumerate(rows):
        cols = np.flatnonzero(bits[v])
        widths[i] = (cols[-1] - cols[0] + 1) * z / intrinsics.fx

    def band_width(center_y: float, half_band: float = 0.005) -> float:
        sel = np.abs(y_rows - center_y) <= half_band
        return float(widths[sel].mean()) if sel.any() else 0.0

    yc = float(grasp.centroid[1])
    contact_width = band_width(yc)
    if contact_width <= 0.0:
        return None
    if contact_width <= 0.045:
        return GraspType.Pinch
    taper = min(band_width(yc - 0.025), band_width(yc + 0.025)) / contact_width
    return GraspType.Cylindrical if taper >= 0.9 else GraspType.Spherical


class Simulation:
    """Stepwise simulation state: one control tick per tick() call.

    Batch runs drive it to completion on the virtual clock; the
    interactive server paces the same loop on the wall clock and
    injects operator prompts / hand offsets between ticks.
    """

    def __init__(self, scenario: Scenario, config: SimConfig = SimConfig()):
        seed = config.seed_override if config.seed_override is not None else scenario.seed
        self.scenario = replace(scenario, seed=seed)
        self.config = config
        self.seed = seed

        plant = config.plant
        if config.derive_slip_from_friction:
            plant = replace(
                plant, slip_threshold_nm=self.scenario.object.friction * RATED_TORQUE_NM
            )
        self.plant = plant
        self.controller = LowLevelController(
            gains=config.gains, params=plant, velocity_setpoint=config.velocity_setpoint
        )
        self.mid: MidLayerState = initial_state(config.midlayer)
        self._last_state_record = serialize_state(self.mid)

        self.frame_chan = Channel(replace(config.frame_channel, seed=seed + 1))
        self.cmd_chan = Channel(ChannelConfig(latency_s=config.command_latency_s))

        self.log = EventLog()
        cfg_record = json.loads(self._last_state_record)["config"]
        self.log.meta(
            {
                "type": "run_meta",
                "schema": LOG_SCHEMA,
                "scenario": self.scenario.name,
                "object": self.scenario.object.name,
                "grasp_type": self.scenario.object.grasp_type.value,
                "seed": seed,
                "control_rate_hz": config.control_rate_hz,
                "midlayer_config": cfg_record,
                "slip_threshold_nm": plant.slip_threshold_nm,
            }
        )

        self.rate = config.control_rate_hz
        self.dt = 1.0 / self.rate
        self.n_ticks = int(round(self.scenario.duration_s * self.rate))
        self.tick_index = 0
        self.t = 0.0

        self.prompts: deque[Prompt] = deque()
        self._voice_events = sorted(self.scenario.voice_script, key=lambda ev: ev.timestamp)
        self._voice_i = 0
        self._next_frame = 0

        self.hand_offset_mm = 0.0  # operator steering, interactive mode only
        self.last_tau = 0.0
        self.last_motor: MotorState = self.controller.motor
        self.last_frame: Optional[DepthFrame] = None
        self.last_mask: Optional[ObjectMask] = None
        self.last_grasp: Optional[GraspPoint] = None
        self.last_distance_mm: Optional[float] = None

        self._last_perception: Optional[tuple[ObjectMask, GraspPoint]] = None
        self.deadzone_reached = False
        self.realized: Optional[GraspType] = None
        self._held = False
        self._dropped = False
        self._in_slip_episode = False
        self._slip_events = 0
        self._slip_mm = 0.0
        self._finished = False

    @property
    def done(self) -> bool:
        return self.tick_index >= self.n_ticks

    def inject_prompt(self, prompt: Prompt) -> None:
        """Queue an operator prompt for delivery on the next tick."""
        self.prompts.append(prompt)

    def adjust_hand_offset(self, delta_mm: float) -> float:
        """Shift the camera-object distance; the resulting distance is
        clamped to [50, 1500] mm inside the trajectory interpolation."""
        self.hand_offset_mm += delta_mm
        return self.hand_offset_mm

    def tick(self) -> float:
        """Advance one control tick; returns the new simulation time."""
        self.tick_index += 1
        k = self.tick_index
        t = k / self.rate
        self.t = t
        config = self.config
        scenario = self.scenario
        fps = config.frame_rate_fps

        while self._next_frame / fps <= t + 1e-12:
            t_cap = self._next_frame / fps
            self.frame_chan.send(
                json_message(TAG_DEPTH_FRAME, {"frame": self._next_frame, "t": t_cap}), t_cap
            )
            self._next_frame += 1

        fresh_distance: Optional[float] = None
        for msg in self.frame_chan.poll(t):
            desc = json_payload(msg)
            j = int(desc["frame"])
            if select_frame(j) is not FrameDecision.Infer:
                continue
            frame, mask = render_depth(
                scenario,
                float(desc["t"]),
                config.intrinsics,
                j,
                camera_offset_m=self.hand_offset_mm / 1000.0,
            )
            self.last_frame, self.last_mask = frame, mask
            try:
                cloud = align_and_lift(mask, frame)
            except (EmptyMask, InsufficientDepth) as exc:
                self.log.sim(
                    t,
                    {"type": "perception_dropout", "frame": j, "reason": type(exc).__name__},
                )
                continue
            grasp = compute_grasp_point(cloud)
            fresh_distance = distance_to_camera(grasp)
            self.last_grasp = grasp
            self.last_distance_mm = fresh_distance
            self._last_perception = (mask, grasp)
            self.log.sim(
                t,
                {
                    "type": "perception",
                    "frame": j,
                    "distance_mm": round_mm(fresh_distance),
                    "support": grasp.support,
                },
            )

        while (
            self._voice_i < len(self._voice_events)
            and self._voice_events[self._voice_i].timestamp <= t
        ):
            prompt = match_prompt(self._voice_events[self._voice_i], config.min_confidence)
            if prompt is not None:
                self.prompts.append(prompt)
            self._voice_i += 1
        tick_prompt = self.prompts.popleft() if self.prompts else None

        inp = MidLayerInput(
            now=t,
            prompt=tick_prompt,
            grasp_distance_mm=fresh_distance,
            measured_torque_nm=self.last_tau,
        )
        self.log.record_in(t, inp)
        self.mid, commands = step(self.mid, inp)
        state_record = serialize_state(self.mid)
        for cmd in commands:
            self.log.record_out(t, cmd)
            self.cmd_chan.send(command_message(cmd), t)
            if cmd.kind is CommandKind.Maintain:
                self.deadzone_reached = True
                self._held = True
                if self._last_perception is not None:
                    self.realized = classify_grasp(
                        self._last_perception[0], self._last_perception[1], config.intrinsics
                    )
                self.log.sim(
                    t,
                    {
                        "type": "grasp_classified",
                        "realized": self.realized.value if self.realized else None,
                        "intended": scenario.object.grasp_type.value,
                    },
                )
        if state_record != self._last_state_record:
            self.log.record_state(t, state_record)
            self._last_state_record = state_record

        for msg in self.cmd_chan.poll(t):
            kind = command_kind_of(msg)
            self.controller.execute(ActuationCommand(kind, t))
            if kind in (CommandKind.Release, CommandKind.Stop):
                self._held = False
                self._in_slip_episode = False

        disturbance = scenario.disturbance_at(t)
        if self._held and not self._dropped and disturbance > self.plant.slip_threshold_nm:
            if not self._in_slip_episode:
                self._in_slip_episode = True
                self._slip_events += 1
                self.log.sim(t, {"type": "slip", "load_nm": disturbance})
            overload = (
                disturbance - self.plant.slip_threshold_nm
            ) / self.plant.slip_threshold_nm
            self._slip_mm += config.slip_rate_mm_s * overload * self.dt
            if self._slip_mm >= config.drop_limit_mm:
                self._dropped = True
                self._held = False
                self.log.sim(t, {"type": "drop", "slip_mm": self._slip_mm})
        else:
            self._in_slip_episode = False

        motor = self.controller.tick(self.dt, disturbance)
        self.last_tau = motor.applied_torque
        self.last_motor = motor
        self.log.telemetry(t, motor)
        return t

    def finish(self) -> EventLog:
        """Append the completion record (idempotent) and return the log."""
        if not self._finished:
            self._finished = True
            self.log.sim(
                self.n_ticks / self.rate,
                {
                    "type": "run_complete",
                    "deadzone_reached": self.deadzone_reached,
                    "realized_grasp": self.realized.value if self.realized else None,
                    "intended_grasp": self.scenario.object.grasp_type.value,
                    "slip_events": self._slip_events,
                    "slip_mm": self._slip_mm,
                    "dropped": self._dropped,
                },
            )
        return self.log

    def snapshot(self) -> dict:
        """Console-facing state summary for the current tick."""
        hold_progress = 0.0
        if self.mid.trigger_hold_started is not None:
            hold_progress = min(
                1.0,
                (self.t - self.mid.trigger_hold_started) / self.config.midlayer.hold_duration_s,
            )
        return {
            "t": self.t,
            "stack_depth": len(self.mid.command_stack),
            "pending_grip": self.mid.pending_grip,
            "maintain_active": self.mid.maintain_active,
            "grip_dispatched": self.mid.grip_dispatched,
            "hold_progress": hold_progress,
            "distance_mm": (
                round_mm(self.last_distance_mm) if self.last_distance_mm is not None else None
            ),
            "hand_offset_mm": self.hand_offset_mm,
        }


def run(scenario: Scenario, config: SimConfig = SimConfig()) -> EventLog:
    """Execute one scenario end to end; returns the event log.

    Pure function of (scenario, config): running twice yields
    byte-identical logs.
    """
    sim = Simulation(scenario, config)
    while not sim.done:
        sim.tick()
    return sim.finish()


@dataclass
class ReplayResult:
    ok: bool
    divergence_index: Optional[int] = None  # index into the log's out lines
    expected: Optional[str] = None
    actual: Optional[str] = None


def replay(log: EventLog) -> ReplayResult:
    """Re-drive a fresh mid-layer with the logged inputs and compare the
    regenerated command lines byte-for-byte against the logged ones."""
    meta: Optional[dict] = None
    regenerated: list[str] = []
    original: list[str] = []
    mid: Optional[MidLayerState] = None
    for line in log.lines:
        rec = json.loads(line)
        direction = rec.get("dir")
        if direction == "meta":
            meta = rec["event"]
            cfg = meta["midlayer_config"]
            mid = initial_state(
                MidLayerConfig(
                    dist_threshold_mm=cfg["dist_threshold_mm"],
                    hold_duration_s=cfg["hold_duration_s"],
                    dead_zone=DeadZoneSpec(
                        center_nm=cfg["dead_zone"]["center_nm"],
                        half_width_nm=cfg["dead_zone"]["half_width_nm"],
                        consecutive_ticks=cfg["dead_zone"]["consecutive_ticks"],
                    ),
                    grasp_point_staleness_s=cfg["grasp_point_staleness_s"],
                )
            )
        elif direction == "in":
            if mid is None:
                raise IncompleteLog("log has no meta line before inputs")
            ev = rec["event"]
            prompt = None
            if ev["prompt"] is not None:
                prompt = Prompt(
                    kind=PromptKind(ev["prompt"]["kind"]), timestamp=ev["prompt"]["t"]
                )
            inp = MidLayerInput(
                now=rec["t"],
                prompt=prompt,
                grasp_distance_mm=ev["distance_mm"],
                measured_torque_nm=ev["torque_nm"],
            )
            mid, commands = step(mid, inp)
            for cmd in commands:
                regenerated.append(format_out_line(rec["t"], cmd))
        elif direction == "out":
            original.append(line)
    if meta is None:
        raise IncompleteLog("log has no meta line")
    for i, (exp, act) in enumerate(zip(original, regenerated)):
        if exp != act:
            return ReplayResult(ok=False, divergence_index=i, expected=exp, actual=act)
    if len(original) != len(regenerated):
        i = min(len(original), len(regenerated))
        return ReplayResult(
            ok=False,
            divergence_index=i,
            expected=original[i] if i < len(original) else "<nothing>",
            actual=regenerated[i] if i < len(regenerated) else "<nothing>",
        )
    return ReplayResult(ok=True)
