import os

import numpy as np
import pytest

from rpcsim.architecture.config import load_config
from rpcsim.rbd import load_model

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


@pytest.fixture(scope="session")
def biped():
    return load_model(os.path.join(ROOT, "models", "toy_biped.urdf"))


@pytest.fixture(scope="session")
def pendulum():
    return load_model(os.path.join(ROOT, "models", "pendulum.urdf"))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def quiet_config():
    return load_config({"telemetry": {"enabled": False}, "sim": {"substeps": 2}})


def random_biped_state(model, rng, vel_scale=0.5):
    st = model.neutral_state()
    st.base_pos = rng.normal(size=3)
    q = rng.normal(size=4)
    st.base_quat = q / np.linalg.norm(q)
    st.base_twist = rng.normal(size=6) * vel_scale
    st.q_joints = rng.normal(size=model.n_joints) * 0.5
    st.v_joints = rng.normal(size=model.n_joints) * vel_scale
    return st
