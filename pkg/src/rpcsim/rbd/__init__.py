from .model import JointType, Link, RobotModel, RobotState, integrate_state
from .dynamics import DynamicsCache, update_kinematics, GRAVITY
from .urdf import load_model, parse_model
from . import spatial

__all__ = [
    "JointType", "Link", "RobotModel", "RobotState", "integrate_state",
    "DynamicsCache", "update_kinematics", "GRAVITY",
    "load_model", "parse_model", "spatial",
]
