"""Voice front end: timestamped transcript tokens to control prompts.

Stands in for a streaming ASR engine; consumes its output contract
(token, time, confidence) and matches against the closed three-word
vocabulary. No fuzzy matching: out-of-vocabulary tokens are dropped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Optional

DEFAULT_MIN_CONFIDENCE = 0.5


class PromptKind(Enum):
    Grip = "grip"
    Release = "release"
    Stop = "stop"


_VOCABULARY = {kind.value: kind for kind in PromptKind}


@dataclass(frozen=True)
class VoiceEvent:
    token: str
    timestamp: float
    confidence: float = 1.0

    def __post_init__(self) -> None:
        if not self.token:
            raise ValueError("token must be non-empty")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must be in [0, 1]")


@dataclass(frozen=True)
class Prompt:
    kind: PromptKind
    timestamp: float


def match_prompt(
    ev: VoiceEvent, min_confidence: float = DEFAULT_MIN_CONFIDENCE
) -> Optional[Prompt]:
    """Map a transcript token to a Prompt, or None if it does not match.

    The token must equal one of grip/release/stop after case folding
    (whole-token, no fuzzy matching) and meet the confidence threshold
    (inclusive).
    """
    if not 0.0 <= min_confidence <= 1.0:
        raise ValueError("min_confidence must be in [0, 1]")
    kind = _VOCABULARY.get(ev.token.casefold())
    if kind is None or ev.confidence < min_confidence:
        return None
    return Prompt(kind=kind, timestamp=ev.timestamp)


def match_stream(
    events: Iterable[VoiceEvent], min_confidence: float = DEFAULT_MIN_CONFIDENCE
) -> Iterator[Prompt]:
    """Filter a transcript stream down to prompts, order-preserving."""
    for ev in events:
        prompt = match_prompt(ev, min_confidence)
        if prompt is not None:
            yield prompt


def read_transcript(path: str | Path) -> list[VoiceEvent]:
    """Load a JSON-lines transcript: {"t": seconds, "token": word, "conf": 0..1}."""
    events = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        obj = json.loads(line)
        events.append(
            VoiceEvent(
                token=str(obj["token"]),
                timestamp=float(obj["t"]),
                confidence=float(obj.get("conf", 1.0)),
            )
        )
    return events
