import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import lowest_heights

from motionphys import gradcheck, synth
from motionphys.core import FOOT_JOINTS, LossWeights
from motionphys.losses import (LossValue, dynamic_stability_loss, evaluate, float_loss, geman_mcclure, gradient,
                               penetration_loss, position_cycle_loss, rotation_cycle_loss, slide_loss, smooth_l1,
                               total_loss)
from motionphys.rotations import axis_angle_to_matrix, matrix_to_sixd, random_rotation


def test_ground_losses_examples(figure, plane):
    stand = synth.static_stand(figure, T=4)
    assert penetration_loss(stand).value == 0.0 and float_loss(stand).value == 0.0
    assert penetration_loss(stand.translated([0, 0, -0.05])).value == pytest.approx(0.05)
    assert float_loss(stand.translated([0, 0, 0.03])).value == pytest.approx(0.03)


def test_ground_losses_random_brute_force(figure, plane):
    seq = synth.sway(figure, T=10, seed=3).translated([0, 0, 0.01])
    h = lowest_heights(seq.vertices, plane.origin, plane.normal)
    assert penetration_loss(seq).value == pytest.approx(np.maximum(0, -h).mean(), abs=1e-15)
    assert float_loss(seq).value == pytest.approx(np.maximum(0, h).mean(), abs=1e-15)


def test_ground_loss_gradients(figure):
    hover = synth.static_stand(figure, T=5).translated([0, 0, 0.1])
    g = gradient("penetrate", hover, "vertex_positions")
    assert g.shape == hover.vertices.shape and not g.any()
    gr = gradient("float", hover, "root_translation")
    np.testing.assert_allclose(gr, np.tile([0, 0, 1 / 5], (5, 1)), atol=1e-15)
    gv = gradient("float", hover, "vertex_positions")
    np.testing.assert_allclose(gv.sum(axis=1), gr, atol=1e-15)  # tied bottom vertices share the frame's 1/T
    assert (gv[0, :, 2] > 0).sum() > 1


def test_ground_losses_never_both_positive_per_frame(figure):
    seq = synth.bounce(figure, amplitude=0.05, T=20)
    h = seq.metadata["traces"]["lowest_height"]
    for t in range(seq.num_frames):
        one = seq.replace(vertices=seq.vertices[[t] * 3], joints=seq.joints[[t] * 3],
                          rotations_6d=seq.rotations_6d[[t] * 3], root_translation=seq.root_translation[[t] * 3])
        assert penetration_loss(one).value * float_loss(one).value == 0.0
        assert (penetration_loss(one).value > 0) == (h[t] < 0)


def test_slide_examples(figure):
    assert slide_loss(synth.static_stand(figure, T=5)).value == 0.0
    assert slide_loss(synth.glide(figure, speed=1.0, T=8)).value == pytest.approx(1.0, abs=1e-12)
    air = slide_loss(synth.static_stand(figure, T=5).translated([0, 0, 0.5]))
    assert air.value == 0.0 and "no contact" in air.flags


def test_slide_walk_against_per_joint_oracle(figure):
    seq = synth.walk(figure, speed=1.2, T=40, lift=0.1)
    J = seq.joints
    num, den = 0.0, 0
    for t in range(seq.num_frames - 1):
        for j in FOOT_JOINTS:
            if J[t, j, 2] < 0.05 and J[t + 1, j, 2] < 0.05:
                num += np.hypot(*(J[t + 1, j, :2] - J[t, j, :2])) * seq.fps
                den += 1
    assert den > 0
    assert slide_loss(seq).value == pytest.approx(num / den, rel=1e-12)


def test_slide_vertical_shift_invariance(figure):
    seq = synth.walk(figure, T=30)
    shifted = seq.translated([0, 0, 0.001])
    assert slide_loss(shifted).value == pytest.approx(slide_loss(seq).value, rel=1e-12)


def test_geman_mcclure_properties():
    s = 0.1
    assert geman_mcclure(0.0, s) == 0.0
    assert geman_mcclure(s, s) == pytest.approx(s ** 2 / 2)
    assert geman_mcclure(1e6, s) == pytest.approx(s ** 2, rel=1e-9)
    x = np.linspace(0, 100, 10001)
    v = geman_mcclure(x, s)
    assert np.all(np.diff(v) >= 0) and np.all(v < s ** 2)


def test_stability_loss_zero_when_cop_equals_zmp(figure):
    lv = dynamic_stability_loss(synth.static_stand(figure, T=6))
    assert lv.value < 1e-30 and not lv.flags


def test_stability_loss_gated_out(figure):
    lv = dynamic_stability_loss(synth.static_stand(figure, T=6).translated([0, 0, 0.5]), wrt="vertex_positions")
    assert lv.value == 0.0 and "no supported frames" in lv.flags
    assert not lv.gradient.any()


def test_stability_loss_bounded(figure):
    seq = synth.sway(figure, T=10, seed=1, amplitude=1.0)
    lv = dynamic_stability_loss(seq, sigma=0.1)
    assert 0 <= lv.value < 0.01


def test_stability_gradient_on_thirty_vertex_sequence():
    rng = np.random.default_rng(10)
    trial = gradcheck.random_trial(rng, T=5)
    assert trial.seq.body.num_vertices <= 30

    def f(s):
        return dynamic_stability_loss(s, trial.masses).value

    g = dynamic_stability_loss(trial.seq, trial.masses, wrt="vertex_positions").gradient
    fd = gradcheck.finite_difference(f, trial.seq, "vertex_positions")
    assert gradcheck.relative_error(g, fd) < 1e-4


def test_rotation_cycle_examples(rng):
    r = matrix_to_sixd(random_rotation(rng, (4, 24)))
    assert rotation_cycle_loss(r, r).value == 0.0
    R = random_rotation(rng, (4, 24))
    other = R.copy()
    other[2, 5] = R[2, 5] @ axis_angle_to_matrix((0, 1, 0), np.pi / 2)
    assert rotation_cycle_loss(matrix_to_sixd(other), matrix_to_sixd(R)).value == pytest.approx(np.pi / 2, abs=1e-9)


def test_rotation_cycle_random_matches_elementwise(rng):
    a, b = rng.normal(size=(3, 24, 6)), rng.normal(size=(3, 24, 6))

    def gs(r):
        x = r[:3] / np.linalg.norm(r[:3])
        y = r[3:] - (x @ r[3:]) * x
        y /= np.linalg.norm(y)
        return np.stack([x, y, np.cross(x, y)], axis=1)

    ref = sum(np.arccos(np.clip((np.trace(gs(a[t, j]) @ gs(b[t, j]).T) - 1) / 2, -1, 1))
              for t in range(3) for j in range(24))
    assert rotation_cycle_loss(a, b).value == pytest.approx(ref, rel=1e-12)


def test_position_cycle_examples():
    x = np.zeros((6, 3))
    assert position_cycle_loss(x, x).value == 0.0
    assert position_cycle_loss(x + 0.5, x).value == pytest.approx(6 * 3 * 0.5 ** 2 / 2)
    assert position_cycle_loss(x + 2.0, x).value == pytest.approx(6 * 3 * (2.0 - 0.5))
    assert smooth_l1(1.0) == pytest.approx(0.5)


def test_total_loss_composition(rng):
    comps = {k: LossValue(float(v)) for k, v in zip(
        ("rotation_cycle", "position_cycle", "penetrate", "float", "slide", "dyn_stability"), rng.uniform(0, 1, 6))}
    w = LossWeights(0.3, 2.0, 0.01)
    val = total_loss(comps, w).value
    c = {k: v.value for k, v in comps.items()}
    ref = 0.3 * (c["rotation_cycle"] + c["position_cycle"]) + 2.0 * (c["penetrate"] + c["float"] + c["slide"]) \
        + 0.01 * c["dyn_stability"]
    assert val == pytest.approx(ref, rel=1e-14)
    zeros = {k: LossValue(0.0) for k in comps}
    assert total_loss(zeros).value == 0.0
    single = dict(zeros, slide=LossValue(0.7))
    assert total_loss(single, w).value == pytest.approx(2.0 * 0.7)
    doubled = total_loss(comps, LossWeights(0.3, 4.0, 0.01)).value - val
    assert doubled == pytest.approx(2.0 * (c["penetrate"] + c["float"] + c["slide"]), rel=1e-12)


def test_total_gradient_is_weighted_sum():
    rng = np.random.default_rng(11)
    trial = gradcheck.random_trial(rng)
    kw = dict(reference=trial.reference, masses=trial.masses)
    w = LossWeights(0.5, 2.0, 3.0)
    tot = evaluate("total", trial.seq, "vertex_positions", weights=w, **kw).gradient
    parts = {n: evaluate(n, trial.seq, "vertex_positions", **kw).gradient
             for n in ("penetrate", "float", "slide", "dyn_stability")}
    np.testing.assert_allclose(tot, 2.0 * (parts["penetrate"] + parts["float"] + parts["slide"])
                               + 3.0 * parts["dyn_stability"], atol=1e-15)


def test_gradient_shapes_match_inputs(figure):
    seq = synth.sway(figure, T=4, seed=0)
    assert gradient("penetrate", seq, "vertex_positions").shape == seq.vertices.shape
    assert gradient("penetrate", seq, "root_translation").shape == (4, 3)
    assert gradient("slide", seq, "joint_positions").shape == seq.joints.shape
    with pytest.raises(ValueError):
        gradient("penetrate", seq, "nonsense")
    with pytest.raises(ValueError):
        evaluate("rotation_cycle", seq)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.01, 0.5), st.floats(-0.2, 0.2))
def test_stability_loss_translation_invariant(dx, dy):
    seq = synth.cart_table(support_half_width=0.3, T=12, fps=50.0)
    a = dynamic_stability_loss(seq).value
    b = dynamic_stability_loss(seq.translated([dx, dy, 0.0])).value
    assert b == pytest.approx(a, rel=1e-9, abs=1e-15)
