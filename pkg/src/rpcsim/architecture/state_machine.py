"""Finite-state-machine engine.

Each state implements first_visit (once per entry, before any one_step),
one_step (every tick), end_of_state (checked after one_step), and
next_state.  Transition targets are declared up front and validated at
construction so a typo fails at startup, not mid-run.
"""
from __future__ import annotations

from ..errors import ConfigError


class State:
    name = "?"
    transitions = ()

    def first_visit(self, ctx):
        pass

    def one_step(self, ctx):
        pass

    def end_of_state(self, ctx) -> bool:
        return False

    def next_state(self, ctx) -> str:
        raise NotImplementedError


class StateMachine:
    def __init__(self, name, states, initial):
        self.name = name
        self.states = dict(states)
        for st in self.states.values():
            for target in st.transitions:
                if target not in self.states:
                    raise ConfigError(
                        f"machine '{name}': state '{st.name}' declares a "
                        f"transition to unregistered state '{target}'")
        if initial not in self.states:
            raise ConfigError(f"machine '{name}': unknown initial state '{initial}'")
        self.active = initial
        self.entry_time = 0.0
        self._fresh = True
        self.trace = []           # (t, state) transition record
        self.pending_interrupts = []

    @property
    def state(self) -> State:
        return self.states[self.active]

    def interrupt(self, code):
        self.pending_interrupts.append(code)

    def consume_interrupt(self, code) -> bool:
        if code in self.pending_interrupts:
            self.pending_interrupts.remove(code)
            return True
        return False

    def step(self, ctx, t):
        st = self.state
        if self._fresh:
            self.entry_time = t
            self.trace.append((t, self.active))
            st.first_visit(ctx)
            self._fresh = False
        st.one_step(ctx)
        if st.end_of_state(ctx):
            nxt = st.next_state(ctx)
            if nxt not in st.transitions:
                raise ConfigError(
                    f"machine '{self.name}': state '{st.name}' attempted an "
                    f"undeclared transition to '{nxt}'")
            self.active = nxt
            self._fresh = True
        # Interrupts are consumed the tick they arrive or dropped (no-ops).
        self.pending_interrupts.clear()

    def time_in_state(self, t):
        return t - self.entry_time
