"""Cross-embodiment manipulation via 2D keypoint motion tracks.

The package trains a policy that predicts short-horizon pixel-space
trajectories of end-effector keypoints in two camera views, then lifts the
predictions back to 6DoF end-effector deltas with stereo triangulation and
rigid-transform fitting. A small kinematic tabletop simulator provides both
"robot" (parallel gripper) and "human" (hand) demonstration sources.
"""

from . import geometry
from .errors import TrackPolicyError

__version__ = "0.1.0"

__all__ = ["geometry", "TrackPolicyError", "__version__"]
