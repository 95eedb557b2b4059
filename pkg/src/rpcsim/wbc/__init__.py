from .tasks import (Task, TaskKind, task_command, task_jacobian, task_state,
                    joint_task, selected_joint_task, link_pos_task,
                    link_ori_task, com_task)
from .contacts import (Contact, ContactKind, ContactSet, RollingJointConstraint,
                       point_contact, surface_contact, internal_constraint_rows)
from .container import TciContainer
from .ihwbc import Ihwbc, IhwbcSettings, WbcResult
from .wbic import Wbic, WbicSettings

__all__ = [
    "Task", "TaskKind", "task_command", "task_jacobian", "task_state",
    "joint_task", "selected_joint_task", "link_pos_task", "link_ori_task",
    "com_task",
    "Contact", "ContactKind", "ContactSet", "RollingJointConstraint",
    "point_contact", "surface_contact", "internal_constraint_rows",
    "TciContainer", "Ihwbc", "IhwbcSettings", "WbcResult", "Wbic",
    "WbicSettings",
]
