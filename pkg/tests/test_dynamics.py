import numpy as np
import pytest

from motionphys import synth
from motionphys.config import AnalysisConfig
from motionphys.core import GroundPlane, MotionSequence, SequenceTooShortError
from motionphys.dynamics import (CopSampler, ZMPUndefinedError, analyze_frame, analyze_sequence, angular_momentum_rate,
                                 base_of_support, center_of_mass, center_of_pressure, com_acceleration, gi_moment,
                                 inertia_force, pressure_field, second_difference, sequence_masses,
                                 vertex_accelerations, zmp)
from motionphys.geometry import mass_distribution
from motionphys.rotations import axis_angle_to_matrix


def test_center_of_mass_examples(rng):
    v, _ = synth.box_mesh((0, 0, 0), (1, 1, 1))
    np.testing.assert_allclose(center_of_mass(v, np.ones(len(v))), [0.5, 0.5, 0.5], atol=1e-15)
    pts = np.array([[1.0, 0, 0], [1.0, 0, 0], [-1.0, 0, 0], [-1.0, 0, 0]])
    np.testing.assert_allclose(center_of_mass(pts, np.ones(4)), 0.0, atol=1e-15)
    v, m = rng.normal(size=(50, 3)), rng.uniform(0, 3, 50)
    np.testing.assert_allclose(center_of_mass(v, m), (v * m[:, None]).sum(0) / m.sum(), atol=1e-12)


def test_second_differences():
    fps = 30.0
    t = np.arange(8)
    assert np.all(com_acceleration(np.ones((8, 3)), fps) == 0.0)
    linear = np.stack([0.3 * t, -0.1 * t, 2.0 + 0 * t], 1) / fps
    np.testing.assert_allclose(com_acceleration(linear, fps), 0.0, atol=1e-9)
    fall = np.stack([0 * t, 0 * t, 0.5 * 9.81 * t ** 2 / fps ** 2], 1)
    np.testing.assert_allclose(com_acceleration(fall, fps)[1:-1], [[0, 0, 9.81]] * 6, atol=1e-6)
    per_vertex = np.repeat(fall[:, None], 5, axis=1)
    np.testing.assert_allclose(vertex_accelerations(per_vertex, fps)[1:-1], 9.81 * np.eye(3)[2] * np.ones((6, 5, 3)),
                               atol=1e-6)
    a = second_difference(fall ** 2, fps)
    np.testing.assert_array_equal(a[0], a[1])
    np.testing.assert_array_equal(a[-1], a[-2])
    with pytest.raises(SequenceTooShortError):
        second_difference(np.zeros((2, 3)), fps)


def test_inertia_force_examples(rng):
    np.testing.assert_allclose(inertia_force(70.0, np.zeros(3)), [0, 0, -686.7])
    np.testing.assert_allclose(inertia_force(70.0, [0, 0, -9.81]), 0.0, atol=1e-12)
    m, a = rng.uniform(1, 100), rng.normal(size=3)
    np.testing.assert_allclose(inertia_force(m, a), [-m * a[0], -m * a[1], -m * 9.81 - m * a[2]])


def test_angular_momentum_rate_examples(rng):
    v = rng.normal(size=(10, 3))
    assert np.all(angular_momentum_rate(v, np.zeros((10, 3)), np.ones(10), v.mean(0)) == 0.0)
    one = angular_momentum_rate([[1.0, 0, 0]], [[0, 2.0, 0]], [3.0], [0, 0, 0])
    np.testing.assert_allclose(one, [0, 0, 6.0])
    a, m, g = rng.normal(size=(10, 3)), rng.uniform(0, 2, 10), rng.normal(size=3)
    ref = sum(m[i] * np.cross(v[i] - g, a[i]) for i in range(10))
    np.testing.assert_allclose(angular_momentum_rate(v, a, m, g), ref, atol=1e-12)


def test_gi_moment_examples():
    cm, g = np.zeros(3), np.array([0, 0, 0.9])
    np.testing.assert_allclose(gi_moment(cm, g, 70.0, np.zeros(3), np.zeros(3)), 0.0, atol=1e-12)
    h, a, m = 0.9, 2.0, 70.0
    M = gi_moment(cm, g, m, [a, 0, 0], np.zeros(3))
    np.testing.assert_allclose(M, np.cross([0, 0, h], [0, 0, -m * 9.81]) - np.cross([0, 0, h], [m * a, 0, 0]))
    np.testing.assert_allclose(M, [0, -m * h * a, 0])
    hd = np.array([0.1, -0.2, 0.3])
    np.testing.assert_allclose(gi_moment(cm, cm, m, np.zeros(3), hd), -hd)


def test_zmp_point_mass_cart_table():
    x, z, xdd, m = 0.3, 0.8, 1.5, 50.0
    G = np.array([x, 0, z])
    cm = np.array([x, 0, 0])
    F = inertia_force(m, [xdd, 0, 0])
    M = gi_moment(cm, G, m, [xdd, 0, 0], np.zeros(3))
    Z = zmp(cm, F, M)
    assert Z[0] == pytest.approx(x - z / 9.81 * xdd, abs=1e-12)
    assert Z[2] == 0.0
    # the opposite sign on the moment term moves the point the wrong way
    n = np.array([0.0, 0.0, 1.0])
    flipped = cm - np.cross(n, M) / (F @ n)
    assert abs(flipped[0] - (x - z / 9.81 * xdd)) > 0.2


def test_zmp_undefined_in_free_fall():
    cm = np.zeros(3)
    F = inertia_force(60.0, [0, 0, -9.81])
    with pytest.raises(ZMPUndefinedError):
        zmp(cm, F, np.zeros(3))


def test_pressure_field_examples():
    assert pressure_field(0.0) == 1.0
    assert pressure_field(-0.01) == pytest.approx(2.0)
    assert pressure_field(0.1) == pytest.approx(np.exp(-1.0))
    h = np.linspace(-1, 1, 101)
    assert np.all(pressure_field(h) > 0)


def test_center_of_pressure_examples(rng):
    p = rng.normal(size=(20, 3))
    np.testing.assert_allclose(center_of_pressure(p, np.ones(20)), p.mean(0), atol=1e-14)
    pts = np.array([[0.0, 0, -1.0], [1.0, 0, 0.3], [2.0, 1, 0.5]])
    cop = center_of_pressure(pts, pressure_field(pts[:, 2]))
    assert np.linalg.norm(cop - pts[0]) < 0.02
    feet = np.array([[-0.1, 0, 0.0], [0.1, 0, 0.0]])
    np.testing.assert_allclose(center_of_pressure(feet, pressure_field(feet[:, 2])), 0.0, atol=1e-15)


def test_cop_inside_convex_hull_of_points(rng):
    from motionphys.geometry import convex_hull_2d, hull_contains

    pts = np.c_[rng.normal(size=(40, 2)), rng.uniform(-0.05, 0.3, 40)]
    cop = center_of_pressure(pts, pressure_field(pts[:, 2]))
    assert hull_contains(convex_hull_2d(pts[:, :2]), cop[:2])


def test_base_of_support_examples(figure):
    stand = figure.body.vertices
    hull = base_of_support(stand)
    feet = np.r_[figure.body.foot_vertex_sets["left"], figure.body.foot_vertex_sets["right"]]
    bottom = feet[stand[feet, 2] < 1e-12]
    xy = stand[bottom, :2]
    from motionphys.geometry import hull_contains
    assert all(hull_contains(hull, p) for p in xy)
    lo, hi = hull.hull.min(0), hull.hull.max(0)
    np.testing.assert_allclose(lo, xy.min(0), atol=1e-12)
    np.testing.assert_allclose(hi, xy.max(0), atol=1e-12)
    assert base_of_support(stand + [0, 0, 0.5]).empty
    tip = np.array([[0, 0, 0.0], [0, 0, 1.0], [1, 0, 1.0]])
    assert base_of_support(tip).kind == "point"


def test_static_stand_frame(figure):
    seq = synth.static_stand(figure, T=5)
    f = analyze_frame(seq, 2)
    np.testing.assert_allclose(f.zmp, f.com_projection, atol=1e-12)
    assert f.support_gate and f.zmp_defined
    assert abs(f.zmp[2]) < 1e-9 and abs(f.com_projection[2]) < 1e-9


def test_jump_apex_gate(figure):
    seq = synth.static_stand(figure, T=5).translated([0, 0, 0.4])
    f = analyze_frame(seq, 2)
    assert not f.support_gate
    assert not analyze_sequence(seq).stability_frames.any()


def test_cart_table_frames_match_trace():
    seq = synth.cart_table(mass_height=0.9, accel_amplitude=2.5, frequency=0.8, T=60, fps=100.0)
    ref = np.asarray(seq.metadata["traces"]["zmp_x"])
    for t in (1, 17, 30, 58):
        assert abs(analyze_frame(seq, t).zmp[0] - ref[t]) < 1e-3
    still = synth.cart_table(accel_amplitude=0.0, T=10)
    tr = analyze_sequence(still)
    np.testing.assert_allclose(tr.zmp[1:-1, :2], tr.com[1:-1, :2], atol=1e-12)


def test_cart_table_offset_linear_in_height():
    kw = dict(accel_amplitude=2.0, frequency=1.0, phase=0.4, T=50, fps=100.0)
    a = analyze_sequence(synth.cart_table(mass_height=0.5, **kw))
    b = analyze_sequence(synth.cart_table(mass_height=1.0, **kw))
    off_a = (a.zmp - a.com_projection)[1:-1, 0]
    off_b = (b.zmp - b.com_projection)[1:-1, 0]
    np.testing.assert_allclose(off_b, 2 * off_a, rtol=1e-9, atol=1e-12)


def test_frame_and_sequence_agree(figure):
    seq = synth.sway(figure, T=8, seed=2)
    tr = analyze_sequence(seq)
    for t in range(8):
        f = analyze_frame(seq, t)
        np.testing.assert_allclose(f.zmp, tr.zmp[t], atol=1e-9)
        np.testing.assert_allclose(f.cop, tr.cop[t], atol=1e-12)
        np.testing.assert_allclose(f.angular_momentum_rate, tr.angular_momentum_rate[t], rtol=1e-9, atol=1e-9)
        assert f.support_gate == tr.support_gate[t]
        np.testing.assert_allclose(f.support.hull, tr.supports[t].hull, atol=1e-12) if not f.support.empty else None


def test_zmp_on_tilted_plane(figure):
    plane = GroundPlane(origin=[0.1, -0.2, 0.05], normal=[0.1, 0.2, 1.0])
    seq = synth.sway(figure, T=6, seed=4)
    tr = analyze_sequence(seq, plane=plane)
    assert np.all(np.abs(plane.height(tr.zmp[1:-1])) < 1e-9)
    assert np.all(np.abs(plane.height(tr.com_projection)) < 1e-9)


def _rotz(seq, angle):
    R = axis_angle_to_matrix((0, 0, 1), angle)
    return seq.replace(vertices=seq.vertices @ R.T, joints=seq.joints @ R.T,
                       root_translation=seq.root_translation @ R.T), R


def test_translation_and_yaw_equivariance(figure):
    seq = synth.sway(figure, T=8, seed=5)
    base = analyze_sequence(seq)
    d = np.array([1.3, -0.7, 0.0])
    moved = analyze_sequence(seq.translated(d))
    for k in ("com", "com_projection", "cop"):
        np.testing.assert_allclose(getattr(moved, k), getattr(base, k) + d, atol=1e-9)
    np.testing.assert_allclose(moved.zmp[1:-1], base.zmp[1:-1] + d, atol=1e-9)
    np.testing.assert_allclose(moved.angular_momentum_rate, base.angular_momentum_rate, atol=1e-8)
    rot, R = _rotz(seq, 0.9)
    tr = analyze_sequence(rot)
    np.testing.assert_allclose(tr.zmp[1:-1], base.zmp[1:-1] @ R.T, atol=1e-9)
    np.testing.assert_allclose(tr.cop, base.cop @ R.T, atol=1e-9)


def test_angular_momentum_sign_is_discriminated_by_torque_balance():
    """The flipped lever convention (G - v_i) disagrees with the torque-balance point for a spinning body."""
    from oracles import torque_balance_point

    body = synth.box_body(0.4, divisions=(2, 2, 2))
    T, fps = 5, 20.0
    t = np.arange(T) / fps
    frames = [body.vertices @ axis_angle_to_matrix((1, 0, 0), 3.0 * tk ** 2).T + [0, 0, 0.5] for tk in t]
    verts = np.stack(frames)
    seq = MotionSequence(fps=fps, vertices=verts, joints=np.zeros((T, 24, 3)),
                         rotations_6d=np.tile([1.0, 0, 0, 0, 1, 0], (T, 24, 1)), root_translation=verts.mean(1),
                         body=body)
    masses = sequence_masses(seq)
    tr = analyze_sequence(seq, masses, supports=False)
    ref = torque_balance_point(verts, masses.vertex_masses, fps, 2, np.zeros(3), np.array([0, 0, 1.0]))
    assert np.linalg.norm(tr.zmp[2] - ref) < 1e-6
    flipped = tr.com_projection[2] + np.cross([0, 0, 1.0], tr.moment[2] + 2 * tr.angular_momentum_rate[2]) / (
        tr.inertia_force[2, 2])
    assert np.linalg.norm(flipped - ref) > 1e-2


def test_surface_samples_cop(figure):
    cfg = AnalysisConfig(cop_points="surface", cop_samples=500, cop_seed=1)
    sampler = CopSampler.from_config(figure.body, cfg)
    pts = sampler.points(figure.body.vertices)
    assert pts.shape == (500, 3)
    seq = synth.static_stand(figure, T=4)
    tr = analyze_sequence(seq, config=cfg)
    again = analyze_sequence(seq, config=cfg)
    np.testing.assert_array_equal(tr.cop, again.cop)


def test_masses_come_from_first_frame(figure):
    seq = synth.sway(figure, T=6, seed=0)
    a = sequence_masses(seq)
    b = mass_distribution(seq.body, seq.vertices[0])
    np.testing.assert_array_equal(a.vertex_masses, b.vertex_masses)
