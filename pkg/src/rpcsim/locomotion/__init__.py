from .footsteps import (Footstep, FootstepPlan, StepCommand, plan_footsteps,
                        raibert_foothold)
from .dcm import DcmPlan, compute_dcm_plan, dcm_backward_recursion, evaluate_dcm
from .swing import SwingTrajectory, swing_trajectory
from .mpc import (GrfTrajectory, MpcReference, MpcSetup, solve_srbd_mpc,
                  srbd_state, build_reference)
from .gait import GaitSchedule

__all__ = [
    "Footstep", "FootstepPlan", "StepCommand", "plan_footsteps",
    "raibert_foothold",
    "DcmPlan", "compute_dcm_plan", "dcm_backward_recursion", "evaluate_dcm",
    "SwingTrajectory", "swing_trajectory",
    "GrfTrajectory", "MpcReference", "MpcSetup", "solve_srbd_mpc",
    "srbd_state", "build_reference",
    "GaitSchedule",
]
