import numpy as np
import pytest

from oracles import signed_volume

from motionphys import synth
from motionphys.geometry import mesh_volume, part_volumes
from motionphys.io import load_motion, save_motion
from motionphys.metrics import float_metric, penetrate_metric


@pytest.mark.parametrize("name", sorted(synth.GENERATORS))
def test_generators_are_deterministic(name):
    fn = synth.GENERATORS[name]
    a, b = fn(), fn()
    np.testing.assert_array_equal(a.vertices, b.vertices)
    np.testing.assert_array_equal(a.rotations_6d, b.rotations_6d)
    assert a.metadata == b.metadata


@pytest.mark.parametrize("name", ["static-pose", "sway"])
def test_seed_changes_output(name):
    fn = synth.GENERATORS[name]
    assert not np.allclose(fn(seed=1).vertices, fn(seed=2).vertices)


def test_single_part_body():
    fig = synth.humanoid(parts=1)
    assert fig.body.num_parts == 1 and set(np.unique(fig.body.part_labels)) == {1}
    vols = part_volumes(fig.body)
    assert vols.shape == (1,) and vols[0] > 0
    np.testing.assert_allclose(vols.sum(), part_volumes(synth.humanoid(parts=10).body).sum(), rtol=1e-12)
    with pytest.raises(ValueError):
        synth.humanoid(parts=11)


def test_part_volumes_positive_and_symmetric(figure):
    vols = part_volumes(figure.body)
    assert vols.shape == (10,) and np.all(vols > 0)
    for left, right in ((3, 4), (5, 6), (7, 8), (9, 10)):
        assert vols[left - 1] == pytest.approx(vols[right - 1], rel=1e-12)


def test_capsule_volume_converges():
    r, length = 0.05, 0.3
    exact = np.pi * r ** 2 * length + 4.0 / 3.0 * np.pi * r ** 3
    errors = []
    for n in (8, 16, 64):
        v, f = synth.capsule_mesh((0, 0, 0), (0, 0, length), r, n_around=n, n_cap=n // 4)
        vol = mesh_volume(v, f)
        assert vol == pytest.approx(signed_volume(v, f), rel=1e-12) and vol > 0
        errors.append(abs(vol - exact) / exact)
    assert errors[0] > errors[1] > errors[2] and errors[2] < 5e-3


def test_box_mesh_volume_and_outward():
    v, f = synth.box_mesh((0, 0, 0), (0.2, 0.3, 0.4), (3, 2, 5))
    assert signed_volume(v, f) == pytest.approx(0.024, rel=1e-12)
    assert len(np.unique(v, axis=0)) == len(v)


def test_humanoid_geometry():
    fig = synth.humanoid(height=1.8)
    v = fig.body.vertices
    assert v[:, 2].min() == 0.0
    assert v[:, 2].max() == pytest.approx(1.8, rel=0.05)
    vmap = fig.body.vertex_mirror_map
    np.testing.assert_array_equal(vmap[vmap], np.arange(len(v)))
    np.testing.assert_array_equal(v[vmap] * [-1, 1, 1], v)
    assert synth.humanoid(resolution=4).body.num_vertices >= 6890


def test_pose_identity_reproduces_rest(figure):
    v, j, r = synth.pose(figure)
    np.testing.assert_allclose(v, figure.body.vertices, atol=1e-12)
    np.testing.assert_allclose(j, figure.rest_joints, atol=1e-12)
    np.testing.assert_allclose(r, np.tile([1.0, 0, 0, 0, 1, 0], (len(j), 1)), atol=1e-15)


def test_static_pose_is_grounded_and_still(figure):
    seq = synth.static_pose(figure, seed=7)
    assert seq.vertices[..., 2].min() == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_array_equal(seq.vertices[0], seq.vertices[-1])


@pytest.mark.parametrize("suffix", [".json", ".npz"])
def test_round_trip_through_io(tmp_path, figure, suffix):
    seq = synth.walk(figure, T=8)
    path = tmp_path / f"walk{suffix}"
    save_motion(seq, path)
    back = load_motion(path)
    for name in ("vertices", "joints", "rotations_6d", "root_translation"):
        np.testing.assert_array_equal(getattr(back, name), getattr(seq, name))
    np.testing.assert_array_equal(back.body.faces, seq.body.faces)
    np.testing.assert_array_equal(back.body.part_labels, seq.body.part_labels)
    assert back.fps == seq.fps


def test_bounce_trace_and_phase_swap(figure):
    up = synth.bounce(figure, amplitude=0.05, T=40, phase=0.0)
    down = synth.bounce(figure, amplitude=0.05, T=40, phase=np.pi)
    np.testing.assert_allclose(up.vertices[..., 2].min(axis=1), up.metadata["traces"]["lowest_height"], atol=1e-15)
    # a half-period phase shift mirrors the height signal, swapping hover and penetration
    assert penetrate_metric(up) == pytest.approx(float_metric(down), abs=1e-12)
    assert float_metric(up) == pytest.approx(penetrate_metric(down), abs=1e-12)
    assert penetrate_metric(up) > 1.0


def test_glide_speed(figure):
    seq = synth.glide(figure, speed=0.5, T=10, fps=20.0)
    step = np.diff(seq.root_translation, axis=0)
    np.testing.assert_allclose(step, np.tile([0.0, -0.5 / 20.0, 0.0], (9, 1)), atol=1e-15)
