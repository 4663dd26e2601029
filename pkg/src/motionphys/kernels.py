"""Hot per-vertex kernels with two interchangeable backends.

The numba backend is used by default. Set ``MOTIONPHYS_DISABLE_NUMBA=1``
before import to run the pure-numpy path instead. Both backends are always
importable as ``numba_kernels`` / ``numpy_kernels`` so they can be compared.
"""
from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_AVAILABLE and os.environ.get("MOTIONPHYS_DISABLE_NUMBA", "0") not in ("1", "true", "yes")

HULL_TOL = 1e-12


# --------------------------------------------------------------------------
# numpy backend
# --------------------------------------------------------------------------

def _lowest_heights_np(verts, origin, normal):
    h = (verts - origin) @ normal
    idx = np.argmin(h, axis=1)
    return h[np.arange(h.shape[0]), idx], idx


def _com_series_np(verts, masses):
    return np.einsum("n,tnk->tk", masses, verts) / masses.sum()


def _angular_momentum_rate_np(verts, masses, com, fps):
    acc = np.empty_like(verts)
    acc[1:-1] = (verts[2:] - 2.0 * verts[1:-1] + verts[:-2]) * (fps * fps)
    acc[0] = acc[1]
    acc[-1] = acc[-2]
    r = verts - com[:, None, :]
    return np.einsum("n,tnk->tk", masses, np.cross(r, acc))


def _pressure_cop_np(points, origin, normal, alpha, gamma):
    h = (points - origin) @ normal
    rho = np.where(h < 0.0, 1.0 - alpha * h, np.exp(-gamma * np.maximum(h, 0.0)))
    return np.einsum("tn,tnk->tk", rho, points) / rho.sum(axis=1)[:, None]


def _monotone_chain(pts, tol):
    """Indices of the CCW convex hull of ``pts`` (n, 2); collinear points dropped."""
    n = pts.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.int64)
    order = np.argsort(pts[:, 1], kind="mergesort")
    order = order[np.argsort(pts[order, 0], kind="mergesort")]
    hull = np.empty(2 * n + 1, dtype=np.int64)
    k = 0
    for ii in range(n):
        i = order[ii]
        while k >= 2:
            a = hull[k - 2]
            b = hull[k - 1]
            cr = (pts[b, 0] - pts[a, 0]) * (pts[i, 1] - pts[a, 1]) - (pts[b, 1] - pts[a, 1]) * (pts[i, 0] - pts[a, 0])
            if cr <= tol:
                k -= 1
            else:
                break
        hull[k] = i
        k += 1
    lower = k + 1
    for ii in range(n - 2, -1, -1):
        i = order[ii]
        while k >= lower:
            a = hull[k - 2]
            b = hull[k - 1]
            cr = (pts[b, 0] - pts[a, 0]) * (pts[i, 1] - pts[a, 1]) - (pts[b, 1] - pts[a, 1]) * (pts[i, 0] - pts[a, 0])
            if cr <= tol:
                k -= 1
            else:
                break
        hull[k] = i
        k += 1
    k -= 1  # last point repeats the first
    if k < 1:
        k = 1
    out = hull[:k].copy()
    # coincident input points collapse to a single vertex
    if k == 2:
        a = out[0]
        b = out[1]
        if pts[a, 0] == pts[b, 0] and pts[a, 1] == pts[b, 1]:
            out = out[:1].copy()
    return out


numpy_kernels = SimpleNamespace(
    name="numpy",
    lowest_heights=_lowest_heights_np,
    com_series=_com_series_np,
    angular_momentum_rate=_angular_momentum_rate_np,
    pressure_cop=_pressure_cop_np,
    convex_hull=_monotone_chain,
)


# --------------------------------------------------------------------------
# numba backend
# --------------------------------------------------------------------------

if NUMBA_AVAILABLE:

    @njit(cache=True)
    def _lowest_heights_nb(verts, origin, normal):
        t_count, n = verts.shape[0], verts.shape[1]
        hmin = np.empty(t_count)
        idx = np.empty(t_count, dtype=np.int64)
        for t in range(t_count):
            best = np.inf
            bi = 0
            for i in range(n):
                h = ((verts[t, i, 0] - origin[0]) * normal[0]
                     + (verts[t, i, 1] - origin[1]) * normal[1]
                     + (verts[t, i, 2] - origin[2]) * normal[2])
                if h < best:
                    best = h
                    bi = i
            hmin[t] = best
            idx[t] = bi
        return hmin, idx

    @njit(cache=True)
    def _com_series_nb(verts, masses):
        t_count, n = verts.shape[0], verts.shape[1]
        total = masses.sum()
        out = np.zeros((t_count, 3))
        for t in range(t_count):
            sx = 0.0
            sy = 0.0
            sz = 0.0
            for i in range(n):
                m = masses[i]
                sx += m * verts[t, i, 0]
                sy += m * verts[t, i, 1]
                sz += m * verts[t, i, 2]
            out[t, 0] = sx / total
            out[t, 1] = sy / total
            out[t, 2] = sz / total
        return out

    @njit(cache=True)
    def _angular_momentum_rate_nb(verts, masses, com, fps):
        t_count, n = verts.shape[0], verts.shape[1]
        f2 = fps * fps
        out = np.zeros((t_count, 3))
        for t in range(t_count):
            c = t
            if c < 1:
                c = 1
            if c > t_count - 2:
                c = t_count - 2
            hx = 0.0
            hy = 0.0
            hz = 0.0
            for i in range(n):
                ax = (verts[c + 1, i, 0] - 2.0 * verts[c, i, 0] + verts[c - 1, i, 0]) * f2
                ay = (verts[c + 1, i, 1] - 2.0 * verts[c, i, 1] + verts[c - 1, i, 1]) * f2
                az = (verts[c + 1, i, 2] - 2.0 * verts[c, i, 2] + verts[c - 1, i, 2]) * f2
                rx = verts[t, i, 0] - com[t, 0]
                ry = verts[t, i, 1] - com[t, 1]
                rz = verts[t, i, 2] - com[t, 2]
                m = masses[i]
                hx += m * (ry * az - rz * ay)
                hy += m * (rz * ax - rx * az)
                hz += m * (rx * ay - ry * ax)
            out[t, 0] = hx
            out[t, 1] = hy
            out[t, 2] = hz
        return out

    @njit(cache=True)
    def _pressure_cop_nb(points, origin, normal, alpha, gamma):
        t_count, n = points.shape[0], points.shape[1]
        out = np.zeros((t_count, 3))
        for t in range(t_count):
            s = 0.0
            px = 0.0
            py = 0.0
            pz = 0.0
            for i in range(n):
                h = ((points[t, i, 0] - origin[0]) * normal[0]
                     + (points[t, i, 1] - origin[1]) * normal[1]
                     + (points[t, i, 2] - origin[2]) * normal[2])
                if h < 0.0:
                    rho = 1.0 - alpha * h
                else:
                    rho = np.exp(-gamma * h)
                s += rho
                px += rho * points[t, i, 0]
                py += rho * points[t, i, 1]
                pz += rho * points[t, i, 2]
            out[t, 0] = px / s
            out[t, 1] = py / s
            out[t, 2] = pz / s
        return out

    numba_kernels = SimpleNamespace(
        name="numba",
        lowest_heights=_lowest_heights_nb,
        com_series=_com_series_nb,
        angular_momentum_rate=_angular_momentum_rate_nb,
        pressure_cop=_pressure_cop_nb,
        convex_hull=njit(cache=True)(_monotone_chain),
    )
else:  # pragma: no cover
    numba_kernels = None

active = numba_kernels if USE_NUMBA else numpy_kernels


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def lowest_heights(verts, origin, normal):
    return active.lowest_heights(_f64(verts), _f64(origin), _f64(normal))


def com_series(verts, masses):
    return active.com_series(_f64(verts), _f64(masses))


def angular_momentum_rate(verts, masses, com, fps):
    return active.angular_momentum_rate(_f64(verts), _f64(masses), _f64(com), float(fps))


def pressure_cop(points, origin, normal, alpha, gamma):
    return active.pressure_cop(_f64(points), _f64(origin), _f64(normal), float(alpha), float(gamma))


def convex_hull(points2d, tol=HULL_TOL):
    return active.convex_hull(_f64(points2d).reshape(-1, 2), float(tol))
