"""Both kernel backends agree with each other and with loop oracles."""
import numpy as np
import pytest

from oracles import lowest_heights

from motionphys import kernels

BACKENDS = [kernels.numpy_kernels] + ([kernels.numba_kernels] if kernels.numba_kernels is not None else [])


@pytest.fixture
def cloud(rng):
    verts = rng.normal(size=(6, 40, 3))
    masses = rng.uniform(0.5, 2.0, 40)
    n = rng.normal(size=3)
    return verts, masses, rng.normal(size=3), n / np.linalg.norm(n)


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.name)
def test_lowest_heights(backend, cloud):
    verts, _, o, n = cloud
    h, idx = backend.lowest_heights(verts, o, n)
    np.testing.assert_allclose(h, lowest_heights(verts, o, n), atol=1e-14)
    np.testing.assert_allclose(((verts[np.arange(6), idx] - o) @ n), h, atol=1e-14)


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.name)
def test_com_and_angular_momentum(backend, cloud):
    verts, m, _, _ = cloud
    fps = 30.0
    com = backend.com_series(verts, m)
    np.testing.assert_allclose(com, np.array([sum(m[i] * v[i] for i in range(40)) / m.sum() for v in verts]),
                               atol=1e-12)
    hd = backend.angular_momentum_rate(verts, m, com, fps)
    for t in range(1, 5):
        a = (verts[t + 1] - 2 * verts[t] + verts[t - 1]) * fps ** 2
        ref = sum(m[i] * np.cross(verts[t, i] - com[t], a[i]) for i in range(40))
        np.testing.assert_allclose(hd[t], ref, rtol=1e-10, atol=1e-9)


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.name)
def test_pressure_cop(backend, cloud):
    verts, _, o, n = cloud
    cop = backend.pressure_cop(verts, o, n, 100.0, 10.0)
    for t in range(6):
        h = (verts[t] - o) @ n
        w = np.array([1 - 100 * x if x < 0 else np.exp(-10 * x) for x in h])
        np.testing.assert_allclose(cop[t], w @ verts[t] / w.sum(), atol=1e-12)


@pytest.mark.skipif(kernels.numba_kernels is None, reason="numba not installed")
def test_backends_agree_on_hull(rng):
    for _ in range(20):
        pts = rng.normal(size=(int(rng.integers(0, 60)), 2))
        a = kernels.numpy_kernels.convex_hull(pts, 1e-12)
        b = kernels.numba_kernels.convex_hull(pts, 1e-12)
        np.testing.assert_array_equal(a, b)


def test_env_flag_selects_numpy(monkeypatch):
    import importlib
    import subprocess
    import sys

    out = subprocess.run([sys.executable, "-c", "from motionphys import kernels; print(kernels.active.name)"],
                         env={**__import__("os").environ, "MOTIONPHYS_DISABLE_NUMBA": "1"},
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    assert importlib.import_module("motionphys.kernels").active is not None
