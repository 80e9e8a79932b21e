from __future__ import annotations

import asyncio
import json
import socket
from dataclasses import replace

import websockets

from graspassist.harness import run
from graspassist.scenario import Scenario, Waypoint, canonical_scenario
from graspassist.server import ConsoleServer
from graspassist.transport import (
    TAG_DEPTH_FRAME,
    TAG_OPERATOR_INPUT,
    TAG_TELEMETRY,
    decode,
    encode,
    json_message,
    json_payload,
)


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def out_kinds(lines):
    return [
        json.loads(line)["event"]["kind"]
        for line in lines
        if json.loads(line).get("dir") == "out"
    ]


def short_scenario(duration_s: float, seed: int = 2) -> Scenario:
    base = canonical_scenario(seed=seed)
    return Scenario(
        name="short",
        object=base.object,
        trajectory=[
            Waypoint(t=0.0, pos=(0.0, 0.0, -0.650)),
            Waypoint(t=duration_s, pos=(0.0, 0.0, -0.450)),
        ],
        voice_script=[],
        disturbance_script=[],
        seed=seed,
        duration_s=duration_s,
    )


def test_headless_serve_advances_and_flushes(tmp_path):
    sc = short_scenario(2.0)
    log_path = tmp_path / "events.jsonl"
    server = ConsoleServer(sc, port=free_port(), speed=50.0, log_path=log_path)
    asyncio.run(server.run())
    lines = log_path.read_text().splitlines()
    telemetry = [l for l in lines if "angle" in json.loads(l)]
    assert len(telemetry) == 200  # 2 s at 100 Hz, no client attached
    assert json.loads(lines[-1])["event"]["type"] == "run_complete"


def test_scripted_client_matches_voice_run(tmp_path):
    sc = canonical_scenario(seed=6)
    voiced = run(sc)
    expected = out_kinds(voiced.lines)
    assert expected == ["grip", "maintain", "release", "stop"]

    # same world, no voice, generous duration: equivalence is modulo
    # timestamps, and the wall-clock handshake may slide the prompts
    silent = replace(sc, voice_script=[], duration_s=30.0)
    port = free_port()
    log_path = tmp_path / "events.jsonl"
    speed = 20.0
    server = ConsoleServer(silent, port=port, speed=speed, log_path=log_path)

    async def client():
        uri = f"ws://127.0.0.1:{port}"
        async with websockets.connect(uri) as ws:
            saw_telemetry = saw_composite = False
            sent_release = sent_stop = False

            async def send_prompt(word):
                await ws.send(
                    encode(json_message(TAG_OPERATOR_INPUT,
                                        {"kind": "prompt", "prompt": word}))
                )

            await asyncio.sleep(1.0 / speed)
            await send_prompt("grip")
            try:
                while True:
                    raw = await asyncio.wait_for(ws.recv(), timeout=1.0)
                    msg = decode(raw)
                    if msg.tag == TAG_TELEMETRY:
                        saw_telemetry = True
                        payload = json_payload(msg)
                        # operator protocol: release once the grasp is held,
                        # then stop a beat later
                        if (
                            payload.get("type") == "state"
                            and payload.get("maintain_active")
                            and not sent_release
                        ):
                            sent_release = True
                            await send_prompt("release")
                            await asyncio.sleep(1.5 / speed)
                            sent_stop = True
                            await send_prompt("stop")
                    elif msg.tag == TAG_DEPTH_FRAME:
                        payload = json_payload(msg)
                        assert payload["width"] * payload["height"] == len(payload["depth_mm"])
                        saw_composite = True
            except (asyncio.TimeoutError, websockets.ConnectionClosed):
                pass
            assert saw_telemetry and saw_composite
            assert sent_release and sent_stop

    async def main():
        server_task = asyncio.create_task(server.run())
        await asyncio.sleep(0.05)
        client_task = asyncio.create_task(client())
        await asyncio.gather(server_task, client_task)

    asyncio.run(main())
    lines = log_path.read_text().splitlines()
    assert out_kinds(lines) == expected  # identical transitions, modulo timestamps


def test_hand_offset_clamped_and_applied(tmp_path):
    sc = short_scenario(4.0)
    port = free_port()
    server = ConsoleServer(sc, port=port, speed=20.0,
                           log_path=tmp_path / "events.jsonl")

    distances = []

    async def client():
        async with websockets.connect(f"ws://127.0.0.1:{port}") as ws:
            await ws.send(
                encode(json_message(TAG_OPERATOR_INPUT,
                                    {"kind": "hand_offset", "delta_mm": -200.0}))
            )
            try:
                while True:
                    raw = await asyncio.wait_for(ws.recv(), timeout=0.5)
                    msg = decode(raw)
                    if msg.tag == TAG_TELEMETRY:
                        payload = json_payload(msg)
                        if payload.get("type") == "state" and payload["distance_mm"]:
                            distances.append(payload["distance_mm"])
            except (asyncio.TimeoutError, websockets.ConnectionClosed):
                pass

    async def main():
        server_task = asyncio.create_task(server.run())
        await asyncio.sleep(0.05)
        await asyncio.gather(server_task, client())

    asyncio.run(main())
    # canonical start distance ~650 mm; a -200 mm offset pulls it well under
    assert distances and min(distances) < 500
