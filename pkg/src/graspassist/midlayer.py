"""Mid-level control layer: multimodal arbitration of voice, depth and torque.

One step() call per control tick. The layer keeps a LIFO stack of grip
intents, arms a distance trigger while a grip is pending, and latches a
Maintain state once the motor torque has sat inside the dead zone. The
semantics implemented here, in tick priority order:

 1. While Maintain is latched, every prompt except Release is dropped.
 2. A Grip prompt pushes a grip intent and marks it pending. A second
    Grip while one is pending pushes another entry but does not restart
    the hold timer.
 3. While pending and a fresh distance is available: at or below the
    threshold the hold timer runs; above it, or when the distance goes
    stale, the timer resets. Once the hold has lasted the full duration
    continuously, a Grip command is dispatched; the intent stays on the
    stack (only Release removes it).
 4. A Release prompt always emits Release, removes one grip entry if
    present, and clears the pending flag, hold timer and Maintain latch.
 5. A Stop prompt emits Stop, clears the pending flag and (because the
    motor is halted) the Maintain latch and the dispatched-grip flag.
 6. After a dispatched, unreleased grip, torque samples inside the dead
    zone for the configured consecutive ticks emit Maintain exactly once
    per dispatch; latching Maintain consumes any pending grip intent.
 7. With no grip pending, distance and torque move nothing except
    rule 6, which is gated on the dispatched grip instead.

Distance inputs arrive at perception rate (roughly every tenth tick);
the latest value is cached and reused until it goes stale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .errors import ClockRegression, MalformedRecord
from .voice import Prompt, PromptKind


class CommandKind(Enum):
    Grip = "grip"
    Release = "release"
    Stop = "stop"
    Maintain = "maintain"


@dataclass(frozen=True)
class ActuationCommand:
    kind: CommandKind
    timestamp: float


@dataclass(frozen=True)
class DeadZoneSpec:
    """Torque band whose sustained occupancy signals a loaded grasp."""

    center_nm: float = 2.35
    half_width_nm: float = 0.10
    consecutive_ticks: int = 5

    def __post_init__(self) -> None:
        if not 0 < self.half_width_nm < self.center_nm:
            raise ValueError("half_width must be positive and below center")
        if self.consecutive_ticks < 1:
            raise ValueError("consecutive_ticks must be >= 1")

    def contains(self, torque_nm: float) -> bool:
        return abs(torque_nm - self.center_nm) <= self.half_width_nm


@dataclass(frozen=True)
class MidLayerConfig:
    dist_threshold_mm: float = 400.0
    hold_duration_s: float = 2.0
    dead_zone: DeadZoneSpec = field(default_factory=DeadZoneSpec)
    grasp_point_staleness_s: float = 0.5

    def __post_init__(self) -> None:
        if self.dist_threshold_mm <= 0 or self.hold_duration_s <= 0:
            raise ValueError("threshold and hold duration must be positive")
        if self.grasp_point_staleness_s <= 0:
            raise ValueError("staleness window must be positive")


@dataclass
class MidLayerInput:
    """Everything the layer sees on one tick."""

    now: float
    prompt: Optional[Prompt] = None
    grasp_distance_mm: Optional[float] = None
    measured_torque_nm: float = 0.0


@dataclass
class MidLayerState:
    config: MidLayerConfig
    command_stack: list[str] = field(default_factory=list)
    pending_grip: bool = False
    trigger_hold_started: Optional[float] = None
    maintain_active: bool = False
    grip_dispatched: bool = False
    maintain_armed: bool = False
    deadzone_run: int = 0
    last_distance_mm: Optional[float] = None
    last_distance_time: Optional[float] = None
    last_now: Optional[float] = None

    def copy(self) -> "MidLayerState":
        return MidLayerState(
            config=self.config,
            command_stack=list(self.command_stack),
            pending_grip=self.pending_grip,
            trigger_hold_started=self.trigger_hold_started,
            maintain_active=self.maintain_active,
            grip_dispatched=self.grip_dispatched,
            maintain_armed=self.maintain_armed,
            deadzone_run=self.deadzone_run,
            last_distance_mm=self.last_distance_mm,
            last_distance_time=self.last_distance_time,
            last_now=self.last_now,
        )


def initial_state(config: Optional[MidLayerConfig] = None) -> MidLayerState:
    return MidLayerState(config=config if config is not None else MidLayerConfig())


def _effective_distance(state: MidLayerState, now: float) -> Optional[float]:
    """Cached distance, or None once it has gone stale."""
    if state.last_distance_time is None:
        return None
    if now - state.last_distance_time > state.config.grasp_point_staleness_s:
        return None
    return state.last_distance_mm


def step(
    state: MidLayerState, inp: MidLayerInput
) -> tuple[MidLayerState, list[ActuationCommand]]:
    """Advance the layer by one tick; returns the new state and any commands."""
    if state.last_now is not None and inp.now <= state.last_now:
        raise ClockRegression(f"tick time {inp.now} did not advance past {state.last_now}")
    cfg = state.config
    new = state.copy()
    new.last_now = inp.now
    out: list[ActuationCommand] = []

    if inp.grasp_distance_mm is not None:
        new.last_distance_mm = inp.grasp_distance_mm
        new.last_distance_time = inp.now

    prompt = inp.prompt
    if new.maintain_active and prompt is not None and prompt.kind is not PromptKind.Release:
        prompt = None  # Maintain gating: only Release gets through

    if prompt is not None:
        if prompt.kind is PromptKind.Grip:
            new.command_stack.append("grip")
            new.pending_grip = True
        elif prompt.kind is PromptKind.Release:
            out.append(ActuationCommand(CommandKind.Release, inp.now))
            if new.command_stack:
                new.command_stack.pop()
            new.maintain_active = False
            new.pending_grip = False
            new.trigger_hold_started = None
            new.grip_dispatched = False
            new.maintain_armed = False
            new.deadzone_run = 0
        elif prompt.kind is PromptKind.Stop:
            out.append(ActuationCommand(CommandKind.Stop, inp.now))
            new.pending_grip = False
            new.trigger_hold_started = None
            new.maintain_active = False
            new.grip_dispatched = False
            new.maintain_armed = False
            new.deadzone_run = 0

    if new.pending_grip:
        distance = _effective_distance(new, inp.now)
        if distance is not None and distance <= cfg.dist_threshold_mm:
            if new.trigger_hold_started is None:
                new.trigger_hold_started = inp.now
            if inp.now - new.trigger_hold_started >= cfg.hold_duration_s:
                out.append(ActuationCommand(CommandKind.Grip, inp.now))
                new.pending_grip = False
                new.trigger_hold_started = None
                new.grip_dispatched = True
                new.maintain_armed = True
                new.deadzone_run = 0
        else:
            new.trigger_hold_started = None
    else:
        new.trigger_hold_started = None

    if new.grip_dispatched:
        if cfg.dead_zone.contains(inp.measured_torque_nm):
            new.deadzone_run += 1
        else:
            new.deadzone_run = 0
        if new.maintain_armed and new.deadzone_run >= cfg.dead_zone.consecutive_ticks:
            out.append(ActuationCommand(CommandKind.Maintain, inp.now))
            new.maintain_active = True
            new.maintain_armed = False
            # the object is held: any pending grip intent is consumed
            new.pending_grip = False
            new.trigger_hold_started = None
    else:
        new.deadzone_run = 0

    return new, out


_SCHEMA = 1


def serialize_state(state: MidLayerState) -> str:
    """Canonical single-line JSON record for log replay and snapshots."""
    cfg = state.config
    record = {
        "schema": _SCHEMA,
        "config": {
            "dist_threshold_mm": cfg.dist_threshold_mm,
            "hold_duration_s": cfg.hold_duration_s,
            "dead_zone": {
                "center_nm": cfg.dead_zone.center_nm,
                "half_width_nm": cfg.dead_zone.half_width_nm,
                "consecutive_ticks": cfg.dead_zone.consecutive_ticks,
            },
            "grasp_point_staleness_s": cfg.grasp_point_staleness_s,
        },
        "stack_depth": len(state.command_stack),
        "pending_grip": state.pending_grip,
        "trigger_hold_started": state.trigger_hold_started,
        "maintain_active": state.maintain_active,
        "grip_dispatched": state.grip_dispatched,
        "maintain_armed": state.maintain_armed,
        "deadzone_run": state.deadzone_run,
        "last_distance_mm": state.last_distance_mm,
        "last_distance_time": state.last_distance_time,
        "last_now": state.last_now,
    }
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def deserialize_state(record: str) -> MidLayerState:
    try:
        obj = json.loads(record)
        if obj.get("schema") != _SCHEMA:
            raise MalformedRecord(f"unsupported schema {obj.get('schema')!r}")
        cfg_obj = obj["config"]
        config = MidLayerConfig(
            dist_threshold_mm=float(cfg_obj["dist_threshold_mm"]),
            hold_duration_s=float(cfg_obj["hold_duration_s"]),
            dead_zone=DeadZoneSpec(
                center_nm=float(cfg_obj["dead_zone"]["center_nm"]),
                half_width_nm=float(cfg_obj["dead_zone"]["half_width_nm"]),
                consecutive_ticks=int(cfg_obj["dead_zone"]["consecutive_ticks"]),
            ),
            grasp_point_staleness_s=float(cfg_obj["grasp_point_staleness_s"]),
        )
        return MidLayerState(
            config=config,
            command_stack=["grip"] * int(obj["stack_depth"]),
            pending_grip=bool(obj["pending_grip"]),
            trigger_hold_started=obj["trigger_hold_started"],
            maintain_active=bool(obj["maintain_active"]),
            grip_dispatched=bool(obj["grip_dispatched"]),
            maintain_armed=bool(obj["maintain_armed"]),
            deadzone_run=int(obj["deadzone_run"]),
            last_distance_mm=obj["last_distance_mm"],
            last_distance_time=obj["last_distance_time"],
            last_now=obj["last_now"],
        )
    except MalformedRecord:
        raise
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise MalformedRecord(str(exc)) from exc
