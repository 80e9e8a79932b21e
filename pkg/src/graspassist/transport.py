"""Framed message channels modeling the two physical links.

Commands ride a reliable, in-order channel (Bluetooth serial
assumption); frames ride a lossy, latency-injectable channel (Wi-Fi).
Framing is 4-byte big-endian length (counting tag + payload), then a
1-byte tag, then the payload. Command tags carry no payload; data tags
carry UTF-8 JSON.
"""

from __future__ import annotations

import json
import random
import struct
from dataclasses import dataclass, field
from typing import Any, Optional

from .errors import OversizedFrame, TruncatedFrame, UnknownTag
from .midlayer import ActuationCommand, CommandKind

TAG_GRIP = 0x01
TAG_RELEASE = 0x02
TAG_STOP = 0x03
TAG_MAINTAIN = 0x04
TAG_DEPTH_FRAME = 0x10
TAG_TELEMETRY = 0x11
TAG_PROMPT = 0x12
TAG_OPERATOR_INPUT = 0x13

COMMAND_TAGS = {TAG_GRIP, TAG_RELEASE, TAG_STOP, TAG_MAINTAIN}
DATA_TAGS = {TAG_DEPTH_FRAME, TAG_TELEMETRY, TAG_PROMPT, TAG_OPERATOR_INPUT}
VALID_TAGS = COMMAND_TAGS | DATA_TAGS

MAX_FRAME_BYTES = 16 * 1024 * 1024

_COMMAND_TO_TAG = {
    CommandKind.Grip: TAG_GRIP,
    CommandKind.Release: TAG_RELEASE,
    CommandKind.Stop: TAG_STOP,
    CommandKind.Maintain: TAG_MAINTAIN,
}
_TAG_TO_COMMAND = {tag: kind for kind, tag in _COMMAND_TO_TAG.items()}


@dataclass(frozen=True)
class WireMessage:
    tag: int
    payload: bytes = b""

    def __post_init__(self) -> None:
        if self.tag not in VALID_TAGS:
            raise UnknownTag(f"0x{self.tag:02x}")
        if self.tag in COMMAND_TAGS and self.payload:
            raise ValueError("command messages carry no payload")


def command_message(cmd: ActuationCommand) -> WireMessage:
    return WireMessage(tag=_COMMAND_TO_TAG[cmd.kind])


def command_kind_of(msg: WireMessage) -> CommandKind:
    if msg.tag not in _TAG_TO_COMMAND:
        raise UnknownTag(f"0x{msg.tag:02x} is not a command tag")
    return _TAG_TO_COMMAND[msg.tag]


def json_message(tag: int, obj: Any) -> WireMessage:
    """Data message with a canonical (sorted, compact) JSON payload."""
    payload = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return WireMessage(tag=tag, payload=payload)


def json_payload(msg: WireMessage) -> Any:
    return json.loads(msg.payload.decode("utf-8"))


def encode(msg: WireMessage) -> bytes:
    """Canonical byte encoding: length prefix, tag, payload."""
    body = struct.pack(">B", msg.tag) + msg.payload
    if len(body) > MAX_FRAME_BYTES:
        raise OversizedFrame(f"{len(body)} bytes exceeds {MAX_FRAME_BYTES}")
    return struct.pack(">I", len(body)) + body


def decode(data: bytes) -> WireMessage:
    """Decode exactly one complete frame.

    Raises TruncatedFrame on short input, OversizedFrame on a declared
    length above the cap, UnknownTag on an unassigned tag byte.
    """
    msg, consumed = decode_prefix(data)
    if consumed != len(data):
        raise TruncatedFrame(f"{len(data) - consumed} trailing bytes after frame")
    return msg


def decode_prefix(data: bytes) -> tuple[WireMessage, int]:
    """Decode one frame off the front of a buffer; returns (msg, bytes used)."""
    if len(data) < 4:
        raise TruncatedFrame("incomplete length prefix")
    (length,) = struct.unpack(">I", data[:4])
    if length > MAX_FRAME_BYTES:
        raise OversizedFrame(f"declared {length} bytes exceeds {MAX_FRAME_BYTES}")
    if length < 1:
        raise TruncatedFrame("frame length must cover the tag byte")
    if len(data) < 4 + length:
        raise TruncatedFrame(f"need {4 + length} bytes, have {len(data)}")
    tag = data[4]
    if tag not in VALID_TAGS:
        raise UnknownTag(f"0x{tag:02x}")
    payload = bytes(data[5 : 4 + length])
    if tag in COMMAND_TAGS and payload:
        raise TruncatedFrame("command frames must not carry a payload")
    return WireMessage(tag=tag, payload=payload), 4 + length


@dataclass(frozen=True)
class ChannelConfig:
    latency_s: float = 0.0
    jitter_s: float = 0.0
    drop_probability: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.latency_s < 0 or self.jitter_s < 0:
            raise ValueError("delays must be non-negative")
        if not 0.0 <= self.drop_probability <= 1.0:
            raise ValueError("drop_probability must be in [0, 1]")


@dataclass
class Channel:
    """Multi-producer, single-consumer message queue with injectable delay.

    Delivery time is send time + latency + uniform jitter drawn from the
    channel's seeded RNG; the same seed always yields the same schedule.
    Messages may be dropped only when drop_probability > 0.
    """

    config: ChannelConfig = field(default_factory=ChannelConfig)
    _rng: random.Random = field(init=False, repr=False)
    _pending: list[tuple[float, int, WireMessage]] = field(default_factory=list, repr=False)
    _seq: int = field(default=0, repr=False)

    def __post_init__(self) -> None:
        self._rng = random.Random(self.config.seed)

    def send(self, msg: WireMessage, now: float) -> Optional[float]:
        """Queue a message; returns its delivery time, or None if dropped."""
        cfg = self.config
        if cfg.drop_probability > 0 and self._rng.random() < cfg.drop_probability:
            return None
        jitter = self._rng.uniform(0.0, cfg.jitter_s) if cfg.jitter_s > 0 else 0.0
        delivery = now + cfg.latency_s + jitter
        self._pending.append((delivery, self._seq, msg))
        self._seq += 1
        return delivery

    def poll(self, now: float) -> list[WireMessage]:
        """All messages whose delivery time has arrived, in delivery order
        (ties broken by send order)."""
        due = [entry for entry in self._pending if entry[0] <= now]
        if not due:
            return []
        self._pending = [entry for entry in self._pending if entry[0] > now]
        due.sort(key=lambda entry: (entry[0], entry[1]))
        return [msg for _, _, msg in due]


def reliable_command_channel(latency_s: float = 0.0) -> Channel:
    """Command link: loss-free by design (drop_probability pinned to 0)."""
    return Channel(config=ChannelConfig(latency_s=latency_s))
