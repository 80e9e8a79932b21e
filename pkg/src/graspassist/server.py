"""Operator console endpoint: the simulation loop paced on the wall
clock with a websocket broadcasting state and accepting operator input.

Wire format on the socket is the package's binary framing, one frame
per websocket binary message. Outbound: telemetry (down-sampled to
30 Hz), depth/mask composites (10 Hz, half resolution), and state
snapshots. Inbound: OperatorInput payloads
  {"kind": "prompt", "prompt": "grip"|"release"|"stop"}
  {"kind": "hand_offset", "delta_mm": <float>}

The simulation advances whether or not a client is connected.
"""

from __future__ import annotations

import asyncio
import logging
from pathlib import Path
from typing import Optional

import numpy as np
import websockets

from .harness import SimConfig, Simulation
from .scenario import Scenario
from .transport import (
    TAG_DEPTH_FRAME,
    TAG_OPERATOR_INPUT,
    TAG_TELEMETRY,
    decode,
    encode,
    json_message,
    json_payload,
)
from .voice import Prompt, PromptKind

logger = logging.getLogger(__name__)

TAG_STATE = TAG_TELEMETRY  # state snapshots ride the telemetry tag with a type field

TELEMETRY_INTERVAL_S = 1.0 / 30.0
FRAME_INTERVAL_S = 1.0 / 10.0
COMPOSITE_SCALE = 2  # console composites at half resolution


class ConsoleServer:
    """Hosts one interactive simulation and any number of console clients."""

    def __init__(
        self,
        scenario: Scenario,
        config: SimConfig = SimConfig(),
        host: str = "127.0.0.1",
        port: int = 8765,
        speed: float = 1.0,
        log_path: Optional[str | Path] = None,
    ):
        if speed <= 0:
            raise ValueError("speed must be positive")
        self.sim = Simulation(scenario, config)
        self.host = host
        self.port = port
        self.speed = speed
        self.log_path = Path(log_path) if log_path is not None else None
        self.clients: set = set()
        self._last_telemetry = -1.0
        self._last_frame = -1.0

    def _composite_payload(self) -> Optional[dict]:
        frame, mask = self.sim.last_frame, self.sim.last_mask
        if frame is None or mask is None:
            return None
        s = COMPOSITE_SCALE
        depth = frame.depth[::s, ::s]
        bits = mask.bits[::s, ::s]
        grasp = None
        if self.sim.last_grasp is not None and self.sim.last_distance_mm is not None:
            intr = frame.intrinsics
            c = self.sim.last_grasp.centroid
            if c[2] > 0:
                grasp = {
                    "u": float(c[0] * intr.fx / c[2] + intr.cx) / s,
                    "v": float(c[1] * intr.fy / c[2] + intr.cy) / s,
                    "distance_mm": round(self.sim.last_distance_mm, 1),
                }
        return {
            "type": "composite",
            "t": self.sim.t,
            "frame": frame.frame_index,
            "width": depth.shape[1],
            "height": depth.shape[0],
            "depth_mm": depth.astype(int).ravel().tolist(),
            "mask": np.where(bits, 1, 0).astype(int).ravel().tolist(),
            "grasp": grasp,
        }

    async def _broadcast(self, data: bytes) -> None:
        stale = []
        for ws in self.clients:
            try:
                await ws.send(data)
            except websockets.ConnectionClosed:
                stale.append(ws)
        for ws in stale:
            self.clients.discard(ws)

    async def _publish(self) -> None:
        sim = self.sim
        if sim.t - self._last_telemetry >= TELEMETRY_INTERVAL_S - 1e-9:
            self._last_telemetry = sim.t
            motor = sim.last_motor
            await self._broadcast(
                encode(
                    json_message(
                        TAG_TELEMETRY,
                        {
                            "type": "telemetry",
                            "t": sim.t,
                            "angle": motor.angle,
                            "omega": motor.angular_velocity,
                            "tau": motor.applied_torque,
                            "mode": motor.mode.value,
                        },
                    )
                )
            )
            snapshot = dict(sim.snapshot())
            snapshot["type"] = "state"
            await self._broadcast(encode(json_message(TAG_TELEMETRY, snapshot)))
        if sim.t - self._last_frame >= FRAME_INTERVAL_S - 1e-9:
            payload = self._composite_payload()
            if payload is not None:
                self._last_frame = sim.t
                await self._broadcast(encode(json_message(TAG_DEPTH_FRAME, payload)))

    def _apply_operator_input(self, obj: dict) -> None:
        kind = obj.get("kind")
        if kind == "prompt":
            try:
                prompt_kind = PromptKind(obj.get("prompt"))
            except ValueError:
                logger.warning("ignoring unknown prompt %r", obj.get("prompt"))
                return
            self.sim.inject_prompt(Prompt(kind=prompt_kind, timestamp=self.sim.t))
        elif kind == "hand_offset":
            try:
                delta = float(obj.get("delta_mm", 0.0))
            except (TypeError, ValueError):
                return
            self.sim.adjust_hand_offset(delta)
        else:
            logger.warning("ignoring operator input kind %r", kind)

    async def _handler(self, ws) -> None:
        self.clients.add(ws)
        logger.info("console connected (%d clients)", len(self.clients))
        try:
            async for raw in ws:
                if isinstance(raw, str):
                    continue
                try:
                    msg = decode(raw)
                except Exception:
                    continue
                if msg.tag == TAG_OPERATOR_INPUT:
                    self._apply_operator_input(json_payload(msg))
        except websockets.ConnectionClosed:
            pass
        finally:
            self.clients.discard(ws)

    async def run(self) -> None:
        """Serve until the scenario duration has elapsed; flush the log."""
        loop = asyncio.get_running_loop()
        async with websockets.serve(self._handler, self.host, self.port):
            logger.info("console endpoint on ws://%s:%d", self.host, self.port)
            wall_start = loop.time()
            try:
                while not self.sim.done:
                    target = (loop.time() - wall_start) * self.speed
                    while not self.sim.done and self.sim.t < target:
                        self.sim.tick()
                    await self._publish()
                    await asyncio.sleep(0.005)
            finally:
                self.sim.finish()
                if self.log_path is not None:
                    self.sim.log.write(self.log_path)
                    logger.info("event log flushed to %s", self.log_path)


def serve(
    scenario: Scenario,
    config: SimConfig = SimConfig(),
    host: str = "127.0.0.1",
    port: int = 8765,
    speed: float = 1.0,
    log_path: Optional[str | Path] = None,
) -> None:
    """Blocking entry point for the console endpoint."""
    server = ConsoleServer(
        scenario, config, host=host, port=port, speed=speed, log_path=log_path
    )
    try:
        asyncio.run(server.run())
    except KeyboardInterrupt:
        pass
