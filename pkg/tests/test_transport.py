from __future__ import annotations

import random

import pytest

from graspassist.errors import OversizedFrame, TruncatedFrame, UnknownTag
from graspassist.midlayer import ActuationCommand, CommandKind
from graspassist.transport import (
    TAG_DEPTH_FRAME,
    TAG_GRIP,
    TAG_MAINTAIN,
    TAG_OPERATOR_INPUT,
    TAG_PROMPT,
    TAG_RELEASE,
    TAG_STOP,
    TAG_TELEMETRY,
    Channel,
    ChannelConfig,
    WireMessage,
    command_kind_of,
    command_message,
    decode,
    decode_prefix,
    encode,
    json_message,
    json_payload,
    reliable_command_channel,
)

GOLDEN_COMMANDS = [
    (CommandKind.Grip, bytes([0, 0, 0, 1, 0x01])),
    (CommandKind.Release, bytes([0, 0, 0, 1, 0x02])),
    (CommandKind.Stop, bytes([0, 0, 0, 1, 0x03])),
    (CommandKind.Maintain, bytes([0, 0, 0, 1, 0x04])),
]


class TestFraming:
    @pytest.mark.parametrize("kind,golden", GOLDEN_COMMANDS)
    def test_golden_command_bytes(self, kind, golden):
        msg = command_message(ActuationCommand(kind, 0.0))
        assert encode(msg) == golden
        assert command_kind_of(decode(golden)) is kind

    def test_json_round_trip(self):
        msg = json_message(TAG_TELEMETRY, {"t": 1.5, "tau": 2.35})
        again = decode(encode(msg))
        assert again == msg
        assert json_payload(again) == {"t": 1.5, "tau": 2.35}

    def test_encode_canonical(self):
        a = json_message(TAG_PROMPT, {"kind": "grip", "t": 1.0})
        b = json_message(TAG_PROMPT, {"t": 1.0, "kind": "grip"})
        assert encode(a) == encode(b)

    def test_round_trip_random_messages(self):
        rng = random.Random(12)
        tags = [TAG_DEPTH_FRAME, TAG_TELEMETRY, TAG_PROMPT, TAG_OPERATOR_INPUT]
        for _ in range(300):
            payload = bytes(rng.randint(0, 255) for _ in range(rng.randint(0, 200)))
            msg = WireMessage(tag=rng.choice(tags), payload=payload)
            assert decode(encode(msg)) == msg

    def test_truncated_inputs(self):
        full = encode(json_message(TAG_TELEMETRY, {"x": 1}))
        for cut in range(len(full)):
            with pytest.raises(TruncatedFrame):
                decode(full[:cut])

    def test_unknown_tag(self):
        with pytest.raises(UnknownTag):
            decode(bytes([0, 0, 0, 1, 0x7F]))

    def test_oversized(self):
        with pytest.raises(OversizedFrame):
            decode(bytes([0xFF, 0xFF, 0xFF, 0xFF]) + b"x")

    def test_decode_never_crashes_on_fuzz(self):
        rng = random.Random(55)
        defined = (TruncatedFrame, UnknownTag, OversizedFrame)
        for _ in range(2000):
            blob = bytes(rng.randint(0, 255) for _ in range(rng.randint(0, 64)))
            try:
                decode(blob)
            except defined:
                pass

    def test_decode_prefix_consumes_one_frame(self):
        first = encode(command_message(ActuationCommand(CommandKind.Grip, 0.0)))
        second = encode(json_message(TAG_TELEMETRY, {"t": 2.0}))
        msg, used = decode_prefix(first + second)
        assert used == len(first)
        assert msg.tag == TAG_GRIP
        msg2, used2 = decode_prefix((first + second)[used:])
        assert msg2.tag == TAG_TELEMETRY
        assert used2 == len(second)

    def test_command_payload_rejected(self):
        with pytest.raises(ValueError):
            WireMessage(tag=TAG_MAINTAIN, payload=b"x")


class TestChannel:
    def msg(self, n=0):
        return json_message(TAG_TELEMETRY, {"n": n})

    def test_zero_latency_immediate(self):
        ch = Channel()
        ch.send(self.msg(), 1.0)
        assert ch.poll(1.0) == [self.msg()]
        assert ch.poll(1.0) == []

    def test_fixed_latency(self):
        ch = Channel(ChannelConfig(latency_s=0.05))
        ch.send(self.msg(), 1.00)
        assert ch.poll(1.049) == []
        assert ch.poll(1.05) == [self.msg()]

    def test_fifo_without_jitter(self):
        ch = Channel(ChannelConfig(latency_s=0.01))
        for n in range(20):
            ch.send(self.msg(n), n * 0.001)
        got = ch.poll(10.0)
        assert [json_payload(m)["n"] for m in got] == list(range(20))

    def test_jitter_schedule_reproducible(self):
        cfg = ChannelConfig(latency_s=0.0, jitter_s=0.02, seed=42)
        ch1, ch2 = Channel(cfg), Channel(cfg)
        deliveries1 = [ch1.send(self.msg(n), 0.0) for n in range(100)]
        deliveries2 = [ch2.send(self.msg(n), 0.0) for n in range(100)]
        assert deliveries1 == deliveries2
        # delivery order equals an offline sort by (delivery time, send order)
        expected = [
            json_payload(m)["n"]
            for _, _, m in sorted(
                ((d, n, self.msg(n)) for n, d in enumerate(deliveries1)),
                key=lambda x: (x[0], x[1]),
            )
        ]
        got = [json_payload(m)["n"] for m in ch1.poll(1.0)]
        assert got == expected

    def test_drops_only_when_configured(self):
        lossless = Channel(ChannelConfig(drop_probability=0.0, seed=1))
        for n in range(200):
            assert lossless.send(self.msg(n), 0.0) is not None
        lossy = Channel(ChannelConfig(drop_probability=0.5, seed=1))
        delivered = sum(1 for n in range(200) if lossy.send(self.msg(n), 0.0) is not None)
        assert 0 < delivered < 200
        assert len(lossy.poll(1.0)) == delivered  # no duplicates

    def test_command_channel_pinned_lossless(self):
        ch = reliable_command_channel(latency_s=0.02)
        assert ch.config.drop_probability == 0.0

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            ChannelConfig(latency_s=-1)
        with pytest.raises(ValueError):
            ChannelConfig(drop_probability=1.5)
