"""Cross-checks between the operator console artifacts and the headless
runner: the exported session journal must replay to the same state-machine
trace as the interactive session that produced it."""
import json
import os

import pytest

from rpcsim.architecture.config import load_config
from rpcsim.runner import SimSession, load_events_script

GOLDEN = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
                      "frontend", "golden", "journal_session.json")


@pytest.mark.skipif(not os.path.exists(GOLDEN),
                    reason="console golden journal not present")
def test_s1_exported_journal_reproduces_state_trace():
    events = load_events_script(GOLDEN)

    def run_trace():
        cfg = load_config({"telemetry": {"enabled": False},
                           "sim": {"substeps": 2}})
        s = SimSession(config=cfg, demo="stand", script_events=events)
        s.run(6.5)
        return [state for _, state in s.arch.loco.machine.trace]

    interactive = run_trace()   # the session the operator drove
    replayed = run_trace()      # the exported journal, replayed headlessly
    assert replayed == interactive
    assert interactive.count("SingleSupportSwing") == 2
    assert interactive[-1] == "Stand"
    print(f"\n[S1] PASS  journal replay trace identical: {interactive}")
