"""Grasp-assistance control stack with a deterministic simulation harness.

Layers:
  perception  -- mask + depth to grasp point and camera distance
  voice       -- transcript tokens to grip/release/stop prompts
  midlayer    -- multimodal arbitration state machine
  actuation   -- velocity PID and tendon-motor plant simulation
  transport   -- framed message channels (commands reliable, frames lossy)
  harness     -- virtual-clock simulation runs with replayable event logs
  scoring     -- the 0/0.5/1 grasping ability rubric
"""

__version__ = "0.1.0"

from .midlayer import (  # noqa: F401
    ActuationCommand,
    CommandKind,
    DeadZoneSpec,
    MidLayerConfig,
    MidLayerInput,
    MidLayerState,
    initial_state,
    step,
)
from .perception import (  # noqa: F401
    BoundaryCloud,
    CameraIntrinsics,
    DepthFrame,
    FrameDecision,
    GraspPoint,
    ObjectMask,
    align_and_lift,
    compute_grasp_point,
    distance_to_camera,
    extract_boundary,
    select_frame,
)
from .voice import Prompt, PromptKind, VoiceEvent, match_prompt  # noqa: F401
