"""Acceptance criteria, one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
report.  Heavy closed-loop scenarios are shared through module fixtures.
"""
import math
import os
import tempfile
import time

import numpy as np
import pytest

from conftest import random_biped_state
from oracles import active_set_enumeration, random_feasible_qp
from rpcsim import qp
from rpcsim.architecture.config import load_config
from rpcsim.architecture.control import standing_state
from rpcsim.estimation import FootFrame, KalmanEstimator, KfNoise, KinematicEstimator
from rpcsim.interface import Command, SensorData
from rpcsim.locomotion import (MpcReference, MpcSetup, StepCommand,
                               build_reference, compute_dcm_plan,
                               dcm_backward_recursion, evaluate_dcm,
                               plan_footsteps, solve_srbd_mpc)
from rpcsim.locomotion.mpc import _step_matrices
from rpcsim.rbd import integrate_state, spatial, update_kinematics
from rpcsim.runner import SimSession, build_world, replay_commands
from rpcsim.wbc import (Ihwbc, IhwbcSettings, TciContainer, Wbic, WbicSettings,
                        com_task, joint_task, link_ori_task, surface_contact,
                        task_jacobian)


def report(name, detail):
    print(f"\n[{name}] PASS  {detail}")


def quiet_cfg(**overrides):
    doc = {"telemetry": {"enabled": False}, "sim": {"substeps": 2}}
    for k, v in overrides.items():
        doc.setdefault(k, {}).update(v)
    return load_config(doc)


def com_z(session):
    return update_kinematics(session.model, session.world.state).com_position[2]


def mid_feet(session):
    c = update_kinematics(session.model, session.world.state)
    li = session.model.link_index("l_foot")
    ri = session.model.link_index("r_foot")
    return 0.5 * (c.p[li][:2] + c.p[ri][:2])


def test_p1_dynamics_correctness(biped, rng):
    t0 = time.perf_counter()
    h = 1e-6
    n_states = 1000
    worst = 0.0
    link_ids = list(range(len(biped.links)))
    for _ in range(n_states):
        st = random_biped_state(biped, rng)
        cache = update_kinematics(biped, st)
        A = cache.mass_matrix
        assert np.max(np.abs(A - A.T)) < 1e-10
        np.linalg.cholesky(A)
        jacs = {i: cache.link_jacobian(i) for i in link_ids}
        J_com = cache.com_jacobian()
        caches_p = []
        caches_m = []
        for k in range(biped.n_v):
            dv = np.zeros(biped.n_v)
            dv[k] = 1.0
            caches_p.append(update_kinematics(biped, integrate_state(biped, st, dv, h)))
            caches_m.append(update_kinematics(biped, integrate_state(biped, st, -dv, h)))
        for k in range(biped.n_v):
            cp, cm = caches_p[k], caches_m[k]
            for i in link_ids:
                dlin = (cp.p[i] - cm.p[i]) / (2 * h)
                dang = spatial.so3_log(cp.R[i] @ cm.R[i].T) / (2 * h)
                col = jacs[i][:, k]
                scale = max(1.0, float(np.max(np.abs(col))))
                err = max(np.max(np.abs(dlin - col[3:])),
                          np.max(np.abs(dang - col[:3]))) / scale
                worst = max(worst, err)
            dcom = (cp.com_position - cm.com_position) / (2 * h)
            scale = max(1.0, float(np.max(np.abs(J_com[:, k]))))
            worst = max(worst, np.max(np.abs(dcom - J_com[:, k])) / scale)
        assert worst < 1e-6
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0
    report("P1", f"1000 states, worst jacobian rel err {worst:.2e}, "
                 f"{elapsed:.1f}s < 30s")


def test_p2_qp_oracle_equivalence(rng):
    t0 = time.perf_counter()
    worst_x = worst_obj = 0.0
    for _ in range(100):
        H, f, A, lb, ub = random_feasible_qp(rng, n_max=8, m_max=6)
        r = qp.solve(qp.QpProblem(H=H, f=f, A_in=A, lb_in=lb, ub_in=ub),
                     qp.QpSettings(regularization=0.0, eps_abs=1e-10,
                                   eps_rel=1e-10))
        assert r.optimal
        xe, obje = active_set_enumeration(H, f, A, lb, ub)
        worst_x = max(worst_x, float(np.max(np.abs(r.x - xe))))
        worst_obj = max(worst_obj, abs(r.objective - obje))
    elapsed = time.perf_counter() - t0
    assert worst_x < 1e-6 and worst_obj < 1e-6
    assert elapsed < 10.0
    report("P2", f"worst |x| err {worst_x:.2e}, obj err {worst_obj:.2e}, "
                 f"{elapsed:.1f}s < 10s")


def test_p3_dcm_plan_properties(rng):
    feet = {"left": (0.0, 0.1, 0.0), "right": (0.0, -0.1, 0.0)}
    plan = plan_footsteps(feet, StepCommand(n_steps=4, stride=0.1))
    d = compute_dcm_plan(plan, z_com=0.55)
    cont = max(np.max(np.abs(d.xi_eos[i - 1] - d.xi_ini[i]))
               for i in range(1, len(d.vrp_points)))
    assert cont < 1e-12

    vrps = np.array([[0.0, 0.0, 0.0], [0.1, 0.0, 0.0]])
    xi_ini, _ = dcm_backward_recursion(vrps, np.array([1.0, 1.0]), 3.0)
    spot_err = abs(xi_ini[0][0] - 0.1 * math.exp(-3.0))
    assert spot_err < 1e-12

    h = 1e-6
    worst_fd = 0.0
    for t in rng.uniform(0.05, d.t_end - 0.05, size=300):
        if any(abs(t - b[0]) < 5e-3 or abs(t - b[1]) < 5e-3 for b in d.blends):
            continue
        fd = (evaluate_dcm(d, t + h)["dcm"] - evaluate_dcm(d, t - h)["dcm"]) / (2 * h)
        v = evaluate_dcm(d, t)["dcm_vel"]
        worst_fd = max(worst_fd, float(np.max(np.abs(fd - v)))
                       / max(1.0, float(np.max(np.abs(v)))))
    assert worst_fd < 1e-5
    report("P3", f"continuity {cont:.1e}, spot err {spot_err:.1e}, "
                 f"fd rel err {worst_fd:.1e}")


def test_p4_mpc_static_consistency():
    mass, inertia, z = 16.0, np.diag([0.3, 0.25, 0.1]), 0.55
    setup = MpcSetup(horizon=10, dt=0.025, mass=mass, inertia_body=inertia,
                     mu=0.5, r_weight=0.0)
    state = np.zeros(13)
    state[3:6] = [0.0, 0.0, z]
    state[12] = 1.0
    sched = np.ones((10, 2), dtype=bool)
    fp = np.zeros((10, 2, 3))
    fp[:, 0] = [0.0, 0.1, 0.0]
    fp[:, 1] = [0.0, -0.1, 0.0]
    ref = MpcReference(0, 0, 0, z)
    out = solve_srbd_mpc(setup, state, sched, fp, ref)
    fz_err = float(np.max(np.abs(out.forces[:, :, 2] - mass * 9.81 / 2)))
    assert fz_err < 1e-6
    pyr = 0.0
    for k in range(10):
        for i in range(2):
            f = out.forces[k, i]
            pyr = max(pyr, abs(f[0]) - 0.5 * f[2], abs(f[1]) - 0.5 * f[2],
                      -f[2], f[2] - setup.f_max)
    assert pyr <= 1e-8
    x_ref = build_reference(state, ref, setup)
    x = state.copy()
    pred_err = 0.0
    for k in range(10):
        Ak, Bk = _step_matrices(setup, 0.0, fp[k], sched[k], x_ref[k, 3:6])
        x = Ak @ x + Bk @ out.forces[k][sched[k]].reshape(-1)
        pred_err = max(pred_err, float(np.max(np.abs(x - out.states[k + 1]))))
    assert pred_err < 1e-8
    report("P4", f"fz err {fz_err:.2e} N, pyramid residual {pyr:.1e}, "
                 f"prediction err {pred_err:.1e}")


def test_p5_wbc_contracts(biped, pendulum):
    # (a) 10 s standing run: unactuated residual on every Optimal solve.
    s = SimSession(config=quiet_cfg(), demo="stand")
    worst_resid = 0.0
    statuses = set()
    for _ in range(10000):
        s.step()
        res = s.arch.last_result
        statuses.add(res.status)
        if res.optimal:
            worst_resid = max(worst_resid, res.dynamics_residual)
    assert statuses == {"Optimal"}
    assert worst_resid < 1e-6

    # (b) WBIC priority invariance to 1e-10.
    cfg = quiet_cfg()
    st = standing_state(biped, cfg)
    cache = update_kinematics(biped, st)

    def torso_motion(com_offset):
        tci = TciContainer()
        t0 = tci.add_task(link_ori_task("torso_ori", "torso", kp=1.0, priority=1))
        t0.set_target(x_des=spatial.quat_from_rotvec(np.array([0.05, 0, 0])))
        t1 = tci.add_task(com_task(kp=1.0, priority=2))
        t1.set_target(x_des=cache.com_position + np.array([com_offset, 0, 0]))
        for name, f in cfg["robot"]["feet"].items():
            tci.add_contact(surface_contact(name, f["link"],
                                            np.asarray(f["corners"]), mu=0.5,
                                            max_fz=400.0))
        res = Wbic(biped, WbicSettings(), dt=1e-3).solve(tci, cache, st)
        J0, _ = task_jacobian(t0, cache)
        return J0 @ np.concatenate([np.zeros(6), res.q_cmd - st.q_joints])

    inv_err = float(np.max(np.abs(torso_motion(0.01) - torso_motion(0.10))))
    assert inv_err < 1e-10

    # (c) 1-DOF analytic torque to 1e-9.
    stp = pendulum.neutral_state()
    stp.q_joints[0] = 0.7
    stp.v_joints[0] = 0.3
    cp = update_kinematics(pendulum, stp)
    tci = TciContainer()
    t = tci.add_task(joint_task("posture", 1, kp=100.0, kd=10.0))
    t.set_target(x_des=[1.0], v_des=[0.0])
    ctrl = Ihwbc(pendulum, IhwbcSettings(
        qddot_reg=0.0, torque_limits=False,
        qp_settings=qp.QpSettings(regularization=0.0)), dt=1e-3)
    res = ctrl.solve(tci, cp, stp)
    acc_cmd = 100.0 * 0.3 + 10.0 * (-0.3)
    tau_err = abs(res.tau[0] - (cp.mass_matrix[0, 0] * acc_cmd
                                + cp.gravity_forces[0] + cp.bias_forces[0]))
    assert tau_err < 1e-9
    report("P5", f"standing residual {worst_resid:.1e}, priority invariance "
                 f"{inv_err:.1e}, 1-DOF tau err {tau_err:.1e}")


def test_p6_dcm_stepping_demo():
    t0 = time.perf_counter()
    s = SimSession(config=quiet_cfg(), demo="step-in-place")
    z_nominal = com_z(s)
    home = mid_feet(s)
    zmin = z_nominal
    for _ in range(int(14.0 / 0.001)):
        s.step()
        if s.tick_count % 100 == 0:
            zmin = min(zmin, com_z(s))
    elapsed = time.perf_counter() - t0
    swings = [st for _, st in s.arch.loco.machine.trace].count("SingleSupportSwing")
    disp = float(np.linalg.norm(mid_feet(s) - home))
    assert swings == 8
    assert zmin >= 0.75 * z_nominal
    assert disp < 0.05
    assert s.arch.loco.machine.active == "Stand"
    assert elapsed < 60.0
    report("P6", f"8 swings, min com z {zmin:.3f} >= {0.75 * z_nominal:.3f}, "
                 f"mid-feet displacement {disp:.3f} m < 0.05, "
                 f"{elapsed:.1f}s < 60s")


def test_p7_mpc_walking_demo():
    s = SimSession(config=quiet_cfg(), demo="mpc-walk")
    z_nominal = com_z(s)
    zmin = z_nominal
    vx_err = []
    yaw_seg_end = None
    for _ in range(int(13.0 / 0.001)):
        s.step()
        if s.tick_count % 50 != 0:
            continue
        c = update_kinematics(s.model, s.world.state)
        zmin = min(zmin, c.com_position[2])
        t = s.sensors.t
        yaw = spatial.yaw_of(c.R[0])
        if 1.4 <= t <= 6.4:
            heading = np.array([math.cos(yaw), math.sin(yaw)])
            vx_err.append(abs(float(c.com_velocity[:2] @ heading) - 0.3))
        if yaw_seg_end is None and t >= 11.4:
            yaw_seg_end = yaw
    mean_v_err = float(np.mean(vx_err))
    heading_err = abs(yaw_seg_end - 0.3 * 5.0)
    assert zmin >= 0.75 * z_nominal
    assert mean_v_err < 0.08
    assert heading_err < 0.15
    report("P7", f"mean v err {mean_v_err:.3f} < 0.08 m/s, heading err "
                 f"{heading_err:.3f} < 0.15 rad, min com z {zmin:.3f}")


def test_p8_determinism_and_replay(tmp_path):
    def run(path):
        cfg = load_config({"sim": {"substeps": 2}})
        s = SimSession(config=cfg, demo="step-in-place", log_path=str(path))
        s.run(2.5)
        s.close()

    p1, p2 = tmp_path / "a.rpclog", tmp_path / "b.rpclog"
    run(p1)
    run(p2)
    identical = p1.read_bytes() == p2.read_bytes()
    assert identical
    orig, replayed = replay_commands(str(p1))
    assert len(orig) > 0
    assert orig == replayed
    report("P8", f"two runs byte-identical ({p1.stat().st_size} bytes); "
                 f"replayed {len(replayed)} command records byte-identically")


def test_p9_estimators(biped):
    cfg = quiet_cfg()
    # Settle a standing world to get a physical state.
    world = build_world(biped, cfg)
    world.reset(standing_state(biped, cfg))
    hold = Command(np.asarray(cfg["sim"]["initial_q"]), np.zeros(10),
                   np.zeros(10))
    for _ in range(4000):
        world.step(hold)
    frames = [FootFrame(n, f["link"], np.asarray(f["center"]))
              for n, f in cfg["robot"]["feet"].items()]

    # (a) kinematic estimator on exact standing kinematics.
    truth = world.state.copy()
    sensors = SensorData(
        t=0.0, imu_quat=truth.base_quat.copy(),
        imu_gyro=truth.base_twist[:3].copy(),
        imu_acc=truth.base_rot().T @ np.array([0.0, 0.0, 9.81]),
        joint_pos=truth.q_joints.copy(), joint_vel=truth.v_joints.copy(),
        contacts={"left": True, "right": True})
    kin = KinematicEstimator(biped, frames, dt=1e-3)
    kin.initialize(truth.copy())
    kin_err = 0.0
    for _ in range(500):
        out = kin.update(sensors)
        kin_err = max(kin_err, float(np.max(np.abs(out.base_pos - truth.base_pos))))
    assert kin_err < 1e-10

    # (b) KF error < 1e-6 m after 1 s at 1 kHz.
    kf = KalmanEstimator(biped, frames, dt=1e-3,
                         noise=KfNoise(acc=0.5, foot_stationary=1e-7, meas=1e-6))
    init = world.state.copy()
    init.base_pos = init.base_pos + np.array([5e-4, -5e-4, 5e-4])
    tc = update_kinematics(biped, world.state)
    feet_true = {f.name: tc.R[biped.link_index(f.link)] @ f.offset
                 + tc.p[biped.link_index(f.link)] for f in frames}
    kf.initialize(init, foot_positions=feet_true, base_cov=1e-2, foot_cov=1e-12)
    for _ in range(1000):
        s = world.step(hold)
        out = kf.update(s)
    kf_err = float(np.max(np.abs(out.base_pos - world.state.base_pos)))
    assert kf_err < 1e-6

    # (c) closed-loop stepping with either estimator (one trigger = 2 swings).
    swing_counts = {}
    for est_type in ("kinematic", "kf"):
        s = SimSession(config=quiet_cfg(estimator={"type": est_type}),
                       demo="stand",
                       script_events=[{"t": 0.5, "kind": "interrupt",
                                       "code": "step-in-place"}])
        z0 = com_z(s)
        zmin = z0
        for _ in range(int(5.0 / 0.001)):
            s.step()
            if s.tick_count % 100 == 0:
                zmin = min(zmin, com_z(s))
        swings = [st for _, st in s.arch.loco.machine.trace].count(
            "SingleSupportSwing")
        assert zmin >= 0.75 * z0, est_type
        assert swings == 2, est_type
        assert s.arch.loco.machine.active == "Stand", est_type
        swing_counts[est_type] = swings
    report("P9", f"kinematic err {kin_err:.1e} < 1e-10, KF err {kf_err:.1e} "
                 f"< 1e-6, stepping with both estimators: {swing_counts}")


def test_p10_live_tuning_path(tmp_path):
    import json as jsonlib
    import threading
    from fastapi.testclient import TestClient
    from rpcsim.telemetry.server import build_app

    cfg = load_config({"sim": {"substeps": 2}})
    s = SimSession(config=cfg, demo="stand", log_path=str(tmp_path / "p10.rpclog"))
    app = build_app(s)
    sub = s.hub.subscribe(prefix="wbc.task.com", maxsize=500000)
    kp0 = np.asarray(cfg["tasks"]["com"]["kp"], dtype=float)

    # Reach a converged Stand before opening the live-tuning path.
    s.run(1.0)
    stop = threading.Event()

    def loop():
        while not stop.is_set() and s.sensors.t < 6.0:
            s.step()

    th = threading.Thread(target=loop, daemon=True)
    th.start()
    client = TestClient(app)
    with client.websocket_connect("/params") as ws:
        ws.send_text(jsonlib.dumps({"op": "set", "key": "task.com.kp",
                                    "value": (kp0 / 2).tolist()}))
        reply = ws.receive_json()
        ack_t = s.arch.t
    assert reply == {"result": "ack"}
    time.sleep(0.2)
    stop.set()
    th.join(timeout=5.0)
    s.close()

    # The logged task command reflects the halved gain within one tick of
    # the ack: cmd = kp o err, so the implied gain flips at the boundary.
    records = {}
    while not sub.queue.empty():
        rec = sub.queue.get_nowait()
        records.setdefault(rec.t, {})[rec.channel] = np.asarray(rec.payload)
    ts = sorted(records)
    flipped_at = None
    for t in ts:
        r = records[t]
        if "wbc.task.com.cmd" not in r or "wbc.task.com.err" not in r:
            continue
        err = r["wbc.task.com.err"]
        if np.max(np.abs(err)) < 1e-12:
            continue
        k = int(np.argmax(np.abs(err)))
        implied = r["wbc.task.com.cmd"][k] / err[k]
        if abs(implied - kp0[k] / 2) < 1e-6:
            flipped_at = t
            break
        assert abs(implied - kp0[k]) < 1e-6, f"unexpected gain at t={t}"
    assert flipped_at is not None
    assert flipped_at <= ack_t + 0.0011
    report("P10", f"set acked at t={ack_t:.3f}s, halved gain visible in "
                  f"wbc.task.com.cmd at t={flipped_at:.3f}s")
