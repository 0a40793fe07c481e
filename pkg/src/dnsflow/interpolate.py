"""Off-grid sampling of velocity fields.

Multilinear (default) and tensor-cubic (4-point Lagrange) interpolation.
Periodic grids wrap query coordinates modulo the extent; dirichlet grids
return the zero vector for points outside the closed box and use zero
ghost values where a cubic stencil reaches past a wall.
"""

from __future__ import annotations

import enum

import numpy as np

from .fields import BoundaryCondition, GridSpec, VelocityField


class InterpOrder(enum.Enum):
    LINEAR = "linear"
    CUBIC = "cubic"

    @classmethod
    def parse(cls, text: str) -> "InterpOrder":
        key = text.strip().lower()
        for o in cls:
            if o.value == key:
                return o
        raise ValueError(f"unknown interpolation order {text!r}")


def _cubic_weights(t: np.ndarray):
    """Lagrange weights on the stencil {-1, 0, 1, 2} at offset t in [0, 1]."""
    return (
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    )


def _sample_periodic(spec: GridSpec, comp: np.ndarray, xq, yq, order):
    nx, ny = spec.cells
    dx = spec.spacing
    sx = np.mod(xq, spec.extent[0]) / dx
    sy = np.mod(yq, spec.extent[1]) / dx
    i0 = np.floor(sx).astype(np.int64)
    j0 = np.floor(sy).astype(np.int64)
    # mod can round up to the extent itself
    i0 = np.minimum(i0, nx - 1)
    j0 = np.minimum(j0, ny - 1)
    tx = sx - i0
    ty = sy - j0
    if order is InterpOrder.LINEAR:
        out = np.zeros_like(tx)
        for di, wi in ((0, 1.0 - tx), (1, tx)):
            for dj, wj in ((0, 1.0 - ty), (1, ty)):
                out += wi * wj * comp[(i0 + di) % nx, (j0 + dj) % ny]
        return out
    wx = _cubic_weights(tx)
    wy = _cubic_weights(ty)
    out = np.zeros_like(tx)
    for di in range(4):
        row = (i0 + di - 1) % nx
        for dj in range(4):
            out += wx[di] * wy[dj] * comp[row, (j0 + dj - 1) % ny]
    return out


def _sample_dirichlet(spec: GridSpec, comp: np.ndarray, xq, yq, order):
    nx, ny = spec.cells
    dx = spec.spacing
    inside = ((xq >= 0.0) & (xq <= spec.extent[0])
              & (yq >= 0.0) & (yq <= spec.extent[1]))
    sx = np.clip(xq / dx, 0.0, nx * (1.0 - 1e-15))
    sy = np.clip(yq / dx, 0.0, ny * (1.0 - 1e-15))
    i0 = np.floor(sx).astype(np.int64)
    j0 = np.floor(sy).astype(np.int64)
    i0 = np.minimum(i0, nx - 1)
    j0 = np.minimum(j0, ny - 1)
    tx = sx - i0
    ty = sy - j0
    if order is InterpOrder.LINEAR:
        out = ((1.0 - tx) * (1.0 - ty) * comp[i0, j0]
               + tx * (1.0 - ty) * comp[i0 + 1, j0]
               + (1.0 - tx) * ty * comp[i0, j0 + 1]
               + tx * ty * comp[i0 + 1, j0 + 1])
        return np.where(inside, out, 0.0)
    # zero ghost layer: the stencil may reach one node past each wall
    padded = np.zeros((nx + 3, ny + 3))
    padded[1:nx + 2, 1:ny + 2] = comp
    wx = _cubic_weights(tx)
    wy = _cubic_weights(ty)
    out = np.zeros_like(tx)
    for di in range(4):
        row = i0 + di  # padded index of node i0 + di - 1
        for dj in range(4):
            out += wx[di] * wy[dj] * padded[row, j0 + dj]
    return np.where(inside, out, 0.0)


def sample_offgrid(v: VelocityField, points: np.ndarray,
                   order: InterpOrder = InterpOrder.LINEAR) -> np.ndarray:
    """Interpolate each velocity component at the query points.

    ``points`` has shape (..., 2); the result has the same shape. Points
    outside a dirichlet box get the zero vector (the field is extended
    by zero outside the domain); periodic coordinates are wrapped.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.shape[-1] != 2:
        raise ValueError("points must have a trailing axis of length 2")
    if not np.all(np.isfinite(pts)):
        raise ValueError("query points must be finite")
    xq = pts[..., 0]
    yq = pts[..., 1]
    sample = (_sample_periodic if v.spec.bc is BoundaryCondition.PERIODIC
              else _sample_dirichlet)
    out = np.empty_like(pts)
    for c in range(2):
        out[..., c] = sample(v.spec, v.data[c], xq, yq, order)
    return out
