"""Grasping Ability Score: the 0 / 0.5 / 1 rubric applied to run logs.

Grasping: 1 when the contact torque entered the dead zone and the
realized grasp matches the scripted grasp type, 0.5 when it entered
with a mismatched grasp, 0 when it never did. Maintaining: 1 when the
held object never slipped under the disturbance, 0.5 when it slipped
without being dropped, 0 when contact was lost (or nothing was held).
Aggregates are means expressed as percentages.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import IncompleteLog
from .harness import EventLog
from .scenario import GraspType, Scenario

_RUBRIC_VALUES = (0.0, 0.5, 1.0)


@dataclass(frozen=True)
class GasScore:
    grasping: float
    maintaining: float

    def __post_init__(self) -> None:
        if self.grasping not in _RUBRIC_VALUES or self.maintaining not in _RUBRIC_VALUES:
            raise ValueError("rubric scores must be one of 0, 0.5, 1")

    @property
    def gas(self) -> float:
        return (self.grasping + self.maintaining) / 2.0


def score(log: EventLog, scenario: Scenario) -> GasScore:
    """Apply the rubric to one run. Raises IncompleteLog when the log
    lacks its completion record."""
    summary = None
    for rec in log.records():
        if rec.get("dir") == "sim" and rec["event"].get("type") == "run_complete":
            summary = rec["event"]
            break
    if summary is None:
        raise IncompleteLog("log has no run_complete record")

    if not summary["deadzone_reached"]:
        return GasScore(grasping=0.0, maintaining=0.0)

    intended = scenario.object.grasp_type.value
    grasping = 1.0 if summary["realized_grasp"] == intended else 0.5

    if summary["dropped"]:
        maintaining = 0.0
    elif summary["slip_events"] > 0:
        maintaining = 0.5
    else:
        maintaining = 1.0
    return GasScore(grasping=grasping, maintaining=maintaining)


@dataclass(frozen=True)
class ScoreRow:
    label: str
    grasping_pct: float
    maintaining_pct: float

    @property
    def gas_pct(self) -> float:
        return (self.grasping_pct + self.maintaining_pct) / 2.0


def aggregate(results: list[tuple[Scenario, GasScore]]) -> list[ScoreRow]:
    """Per-grasp-type mean percentages plus an overall average row."""
    rows = []
    for grasp_type in GraspType:
        trials = [s for sc, s in results if sc.object.grasp_type is grasp_type]
        if not trials:
            continue
        rows.append(
            ScoreRow(
                label=grasp_type.value,
                grasping_pct=100.0 * sum(s.grasping for s in trials) / len(trials),
                maintaining_pct=100.0 * sum(s.maintaining for s in trials) / len(trials),
            )
        )
    if results:
        all_scores = [s for _, s in results]
        rows.append(
            ScoreRow(
                label="average",
                grasping_pct=100.0 * sum(s.grasping for s in all_scores) / len(all_scores),
                maintaining_pct=100.0
                * sum(s.maintaining for s in all_scores)
                / len(all_scores),
            )
        )
    return rows
