"""Low-level layer: velocity PID with torque saturation and a 1-DoF
tendon-motor plant model.

The controller reconciles "velocity control" with "rated constant
torque": a velocity loop whose output saturates at the rated 2.35 Nm,
so that during grasp loading the loop rides the saturation rail and
the motor effectively applies constant torque.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

from .errors import NonFiniteState, UnknownCommand
from .midlayer import ActuationCommand, CommandKind, DeadZoneSpec

RATED_TORQUE_NM = 2.35  # 24 kgcm at 4.8 V
PULLEY_RADIUS_M = 0.015  # 30 mm diameter pulley
DEFAULT_VELOCITY_SETPOINT = 3.0  # rad/s


@dataclass(frozen=True)
class PidGains:
    kp: float = 0.05
    ki: float = 0.5
    kd: float = 0.001
    integral_limit: float = 4.7
    output_limit_nm: float = RATED_TORQUE_NM

    def __post_init__(self) -> None:
        if min(self.kp, self.ki, self.kd) < 0:
            raise ValueError("gains must be non-negative")
        if self.integral_limit <= 0 or self.output_limit_nm <= 0:
            raise ValueError("limits must be positive")


@dataclass(frozen=True)
class PidCarry:
    """Internal controller state threaded between steps."""

    integral: float = 0.0
    prev_error: float = 0.0


def pid_step(
    gains: PidGains,
    setpoint: float,
    measured: float,
    dt: float,
    carry: PidCarry,
    freeze_integral: bool = False,
) -> tuple[float, PidCarry]:
    """One discrete PID update; returns (saturated torque, new carry).

    The integral accumulates error*dt clamped to +-integral_limit;
    with freeze_integral the stored integral is used but not updated
    (position hold with standing torque).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    error = setpoint - measured
    if freeze_integral:
        integral = carry.integral
    else:
        integral = carry.integral + error * dt
        integral = max(-gains.integral_limit, min(gains.integral_limit, integral))
    derivative = (error - carry.prev_error) / dt
    output = gains.kp * error + gains.ki * integral + gains.kd * derivative
    output = max(-gains.output_limit_nm, min(gains.output_limit_nm, output))
    return output, PidCarry(integral=integral, prev_error=error)


class MotorMode(Enum):
    Forward = "forward"
    Reverse = "reverse"
    Halted = "halted"


@dataclass(frozen=True)
class PlantParams:
    inertia: float = 2e-3  # kg m^2, reflected at the pulley
    viscous_friction: float = 0.025  # Nm s/rad
    pulley_radius_m: float = PULLEY_RADIUS_M
    contact_angle: float = 2.0  # rad of winding before the tendon loads
    contact_stiffness: float = 2.0  # Nm/rad past contact
    slip_threshold_nm: float = 0.1  # disturbance above this slips a held object

    def __post_init__(self) -> None:
        for name in (
            "inertia",
            "viscous_friction",
            "pulley_radius_m",
            "contact_angle",
            "contact_stiffness",
            "slip_threshold_nm",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class MotorState:
    angle: float = 0.0  # rad, + = grip/forward winding
    angular_velocity: float = 0.0  # rad/s
    applied_torque: float = 0.0  # Nm, signed
    load_torque: float = 0.0  # Nm
    mode: MotorMode = MotorMode.Halted


def plant_step(
    state: MotorState,
    params: PlantParams,
    torque_command: float,
    disturbance_nm: float,
    dt: float,
) -> MotorState:
    """Semi-implicit Euler step of the tendon-motor plant.

    Contact load is zero before contact_angle and grows linearly with
    stiffness past it; disturbance adds on top. Halted mode forces the
    commanded torque to zero (friction and load still act).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    tau_cmd = 0.0 if state.mode is MotorMode.Halted else torque_command
    spring = (
        params.contact_stiffness * (state.angle - params.contact_angle)
        if state.angle > params.contact_angle
        else 0.0
    )
    load = spring + disturbance_nm
    accel = (tau_cmd - load - params.viscous_friction * state.angular_velocity) / params.inertia
    omega = state.angular_velocity + dt * accel
    angle = state.angle + dt * omega
    if not (math.isfinite(omega) and math.isfinite(angle)):
        raise NonFiniteState(
            f"integration diverged: angle={angle}, omega={omega} (check params/dt)"
        )
    return MotorState(
        angle=angle,
        angular_velocity=omega,
        applied_torque=tau_cmd,
        load_torque=load,
        mode=state.mode,
    )


def dead_zone_reached(torque_history: list[float], spec: DeadZoneSpec) -> bool:
    """True when the most recent consecutive_ticks samples all sit in band."""
    n = spec.consecutive_ticks
    if len(torque_history) < n:
        raise ValueError(f"need at least {n} samples, got {len(torque_history)}")
    return all(spec.contains(tau) for tau in torque_history[-n:])


@dataclass
class LowLevelController:
    """Executes actuation commands and closes the velocity loop each tick.

    Grip drives forward at +velocity_setpoint; Release reverses until
    the winding angle returns to zero, then halts; Stop halts at once;
    Maintain holds position with the integral term frozen so standing
    torque persists on the held object.
    """

    gains: PidGains = field(default_factory=PidGains)
    params: PlantParams = field(default_factory=PlantParams)
    velocity_setpoint: float = DEFAULT_VELOCITY_SETPOINT
    motor: MotorState = field(default_factory=MotorState)
    carry: PidCarry = field(default_factory=PidCarry)
    setpoint: float = 0.0
    maintain_hold: bool = False

    def execute(self, cmd: ActuationCommand) -> None:
        if cmd.kind is CommandKind.Grip:
            self.motor = replace(self.motor, mode=MotorMode.Forward)
            self.setpoint = self.velocity_setpoint
            self.maintain_hold = False
            self.carry = PidCarry()
        elif cmd.kind is CommandKind.Release:
            self.motor = replace(self.motor, mode=MotorMode.Reverse)
            self.setpoint = -self.velocity_setpoint
            self.maintain_hold = False
            self.carry = PidCarry()
        elif cmd.kind is CommandKind.Stop:
            self.motor = replace(self.motor, mode=MotorMode.Halted, applied_torque=0.0)
            self.setpoint = 0.0
            self.maintain_hold = False
            self.carry = PidCarry()
        elif cmd.kind is CommandKind.Maintain:
            self.setpoint = 0.0
            self.maintain_hold = True  # integral frozen at its current value
        else:
            raise UnknownCommand(f"unknown actuation command {cmd.kind!r}")

    def tick(self, dt: float, disturbance_nm: float = 0.0) -> MotorState:
        """Advance controller and plant by one tick; returns the new state."""
        if self.motor.mode is MotorMode.Reverse and self.motor.angle <= 0.0:
            # back at the home position: release completed
            self.motor = replace(self.motor, mode=MotorMode.Halted)
            self.setpoint = 0.0
        if self.motor.mode is MotorMode.Halted:
            torque = 0.0
        else:
            torque, self.carry = pid_step(
                self.gains,
                self.setpoint,
                self.motor.angular_velocity,
                dt,
                self.carry,
                freeze_integral=self.maintain_hold,
            )
        self.motor = plant_step(self.motor, self.params, torque, disturbance_nm, dt)
        return self.motor
