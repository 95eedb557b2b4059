"""Shared registry of tasks, contacts, and internal constraints.

Owned and mutated only by the control loop between WBC solves; the gain
handler submits changes through the architecture's parameter queue.
"""
from __future__ import annotations

from ..errors import ConfigError
from .contacts import Contact, RollingJointConstraint
from .tasks import Task


class TciContainer:
    def __init__(self):
        self.tasks = []
        self.contacts = []
        self.internal_constraints = []
        self._task_by_name = {}
        self._contact_by_name = {}

    def add_task(self, task: Task) -> Task:
        key = (task.kind, task.link)
        for t in self.tasks:
            if (t.kind, t.link) == key and task.link is not None:
                raise ConfigError(
                    f"duplicate task for kind={task.kind.value} link={task.link}")
        if task.name in self._task_by_name:
            raise ConfigError(f"duplicate task name '{task.name}'")
        self.tasks.append(task)
        self._task_by_name[task.name] = task
        return task

    def add_contact(self, contact: Contact) -> Contact:
        if contact.name in self._contact_by_name:
            raise ConfigError(f"duplicate contact name '{contact.name}'")
        self.contacts.append(contact)
        self._contact_by_name[contact.name] = contact
        return contact

    def add_internal_constraint(self, ic: RollingJointConstraint):
        self.internal_constraints.append(ic)
        return ic

    def task(self, name) -> Task:
        return self._task_by_name[name]

    def contact(self, name) -> Contact:
        return self._contact_by_name[name]

    def active_tasks(self):
        return [t for t in self.tasks if t.active]

    def active_contacts(self):
        return [c for c in self.contacts if c.active]
