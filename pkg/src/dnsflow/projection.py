"""Helmholtz-Leray decomposition and the implicit Stokes step.

Periodic backend: direct mode-by-mode solves in Fourier space (the
projection and the Laplacian commute on the torus).

Dirichlet backend: the velocity unknowns live on interior nodes (walls
pinned to zero) and the pressure on all nodes. The divergence constraint
is enforced through the weighted adjoint of the interior central
gradient, which coincides with the public divergence operator at every
node for wall-pinned fields. The pressure Schur complement
h G^T W (I - h nu L)^{-1} G is symmetric positive semidefinite, so the
outer Uzawa iteration is a plain conjugate-gradient loop with an inner
CG Helmholtz solve per application.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .fields import (
    BoundaryCondition,
    GridSpec,
    ScalarField,
    VelocityField,
    _spectral_kit,
    divergence,
    quadrature_weights,
)


class ProjectionError(RuntimeError):
    """Conjugate-gradient loop failed to reach its tolerance."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual {residual:.3e} "
                         f"after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class HelmholtzParts:
    solenoidal: VelocityField
    potential: ScalarField


@dataclass(frozen=True)
class StokesInfo:
    converged: bool
    outer_iterations: int
    max_divergence: float
    momentum_residual: float


def _cg(apply_a, b, x0, rel_tol, max_iters, stop_fn=None, abs_tol=0.0):
    """Hand-rolled CG; returns (x, iterations, converged)."""
    x = x0.copy()
    r = b - apply_a(x)
    b_norm = float(np.sqrt(np.sum(b * b)))
    if b_norm == 0.0:
        return np.zeros_like(b), 0, True
    tol = max(rel_tol * b_norm, abs_tol)
    d = r.copy()
    rs = float(np.sum(r * r))
    k = 0
    while k < max_iters:
        if stop_fn is not None:
            if stop_fn(r):
                return x, k, True
        elif np.sqrt(rs) <= tol:
            return x, k, True
        ad = apply_a(d)
        dad = float(np.sum(d * ad))
        if dad <= 0.0:
            break
        alpha = rs / dad
        x += alpha * d
        r -= alpha * ad
        rs_new = float(np.sum(r * r))
        d = r + (rs_new / rs) * d
        rs = rs_new
        k += 1
    done = (stop_fn(r) if stop_fn is not None
            else np.sqrt(rs) <= tol)
    return x, k, bool(done)


# ---------------------------------------------------------------------------
# periodic backend

def _leray_periodic(u: VelocityField) -> HelmholtzParts:
    spec = u.spec
    KX, KY, K2 = _spectral_kit(spec)
    shape = spec.node_shape
    du = 1j * KX * np.fft.rfft2(u.data[0]) + 1j * KY * np.fft.rfft2(u.data[1])
    with np.errstate(divide="ignore", invalid="ignore"):
        phi_hat = np.where(K2 > 0.0, du / (-K2), 0.0)
    gx = np.fft.irfft2(1j * KX * phi_hat, s=shape)
    gy = np.fft.irfft2(1j * KY * phi_hat, s=shape)
    sol = VelocityField(spec, np.stack([u.data[0] - gx, u.data[1] - gy]))
    pot = ScalarField(spec, np.fft.irfft2(phi_hat, s=shape)).demeaned()
    return HelmholtzParts(sol, pot)


def _stokes_periodic(w: VelocityField, h: float, nu: float):
    spec = w.spec
    KX, KY, K2 = _spectral_kit(spec)
    shape = spec.node_shape
    wu_hat = np.fft.rfft2(w.data[0])
    wv_hat = np.fft.rfft2(w.data[1])
    div_hat = 1j * KX * wu_hat + 1j * KY * wv_hat
    with np.errstate(divide="ignore", invalid="ignore"):
        phi_hat = np.where(K2 > 0.0, div_hat / (-K2), 0.0)
        p_hat = np.where(K2 > 0.0, div_hat / (-h * K2), 0.0)
    pu_hat = wu_hat - 1j * KX * phi_hat
    pv_hat = wv_hat - 1j * KY * phi_hat
    sym = 1.0 + h * nu * K2
    v = VelocityField(spec, np.stack([
        np.fft.irfft2(pu_hat / sym, s=shape),
        np.fft.irfft2(pv_hat / sym, s=shape),
    ]))
    p = ScalarField(spec, np.fft.irfft2(p_hat, s=shape)).demeaned()
    return v, p, StokesInfo(True, 0, float(np.max(np.abs(divergence(v).data))),
                            0.0)


# ---------------------------------------------------------------------------
# dirichlet backend

@lru_cache(maxsize=32)
def _dirichlet_ops(spec: GridSpec):
    dx = spec.spacing
    w = quadrature_weights(spec)

    def grad_interior(p):
        gx = np.zeros_like(p)
        gy = np.zeros_like(p)
        gx[1:-1, 1:-1] = (p[2:, 1:-1] - p[:-2, 1:-1]) / (2.0 * dx)
        gy[1:-1, 1:-1] = (p[1:-1, 2:] - p[1:-1, :-2]) / (2.0 * dx)
        return gx, gy

    def grad_t_weighted(u, v):
        """G^T W_v over interior momentum rows (uniform weight dx^2)."""
        out = np.zeros_like(u)
        c = dx / 2.0  # dx^2 / (2 dx)
        out[2:, 1:-1] += c * u[1:-1, 1:-1]
        out[:-2, 1:-1] -= c * u[1:-1, 1:-1]
        out[1:-1, 2:] += c * v[1:-1, 1:-1]
        out[1:-1, :-2] -= c * v[1:-1, 1:-1]
        return out

    def lap_interior(f):
        out = np.zeros_like(f)
        out[1:-1, 1:-1] = (f[2:, 1:-1] + f[:-2, 1:-1] + f[1:-1, 2:]
                           + f[1:-1, :-2] - 4.0 * f[1:-1, 1:-1]) / (dx * dx)
        return out

    return grad_interior, grad_t_weighted, lap_interior, w


def _pin_walls(arr: np.ndarray) -> np.ndarray:
    arr[0, :] = arr[-1, :] = arr[:, 0] = arr[:, -1] = 0.0
    return arr


def _leray_dirichlet(u: VelocityField, rel_tol: float,
                     max_iters: int | None) -> HelmholtzParts:
    spec = u.spec
    grad_i, grad_t, _, w = _dirichlet_ops(spec)
    if max_iters is None:
        max_iters = 100 * max(spec.cells)
    b = grad_t(u.data[0], u.data[1])

    def apply_l(p):
        gx, gy = grad_i(p)
        return grad_t(gx, gy)

    # roundoff level of assembling b: inputs that are already weakly
    # divergence-free must short-circuit, not feed noise to CG
    umax = float(np.max(np.abs(u.data)))
    floor = (64.0 * np.finfo(float).eps * spec.spacing * umax
             * math.sqrt(spec.node_count))
    phi, k, ok = _cg(apply_l, b, np.zeros_like(b), rel_tol, max_iters,
                     abs_tol=floor)
    if not ok:
        res = float(np.sqrt(np.sum((b - apply_l(phi)) ** 2)))
        raise ProjectionError("Neumann Poisson CG did not converge", res, k)
    gx, gy = grad_i(phi)
    sol = np.stack([u.data[0] - gx, u.data[1] - gy])
    _pin_walls(sol[0])
    _pin_walls(sol[1])
    return HelmholtzParts(VelocityField(spec, sol),
                          ScalarField(spec, phi).demeaned())


class StokesSolver:
    """Reusable solver context for the dirichlet implicit step.

    Owns the warm-started pressure iterate and CG scratch; one context
    must not be shared mutably across threads.
    """

    def __init__(self, spec: GridSpec, h: float, nu: float = 1.0,
                 div_tol: float = 1e-9, rel_tol: float = 1e-10,
                 inner_tol: float = 1e-13, max_outer: int | None = None):
        if not spec.bc is BoundaryCondition.DIRICHLET_ZERO:
            raise ValueError("StokesSolver context is for the dirichlet backend")
        self.spec = spec
        self.h = float(h)
        self.nu = float(nu)
        self.div_tol = div_tol
        self.rel_tol = rel_tol
        self.inner_tol = inner_tol
        self.max_outer = max_outer if max_outer is not None else 10 * max(spec.cells)
        self._grad_i, self._grad_t, self._lap, self._w = _dirichlet_ops(spec)
        self._p = np.zeros(spec.node_shape)
        self.total_inner = 0

    def _helmholtz(self, f):
        return f - self.h * self.nu * self._lap(f)

    def _ainv(self, f):
        sol, k, ok = _cg(self._helmholtz, f, np.zeros_like(f),
                         self.inner_tol, 50 * max(self.spec.cells))
        self.total_inner += k
        out = np.zeros_like(f)
        out[1:-1, 1:-1] = sol[1:-1, 1:-1]
        return out

    def _schur(self, p):
        gx, gy = self._grad_i(p)
        return self.h * self._grad_t(self._ainv(gx), self._ainv(gy))

    def solve(self, w_field: VelocityField):
        spec = self.spec
        h = self.h
        au = self._ainv(w_field.data[0])
        av = self._ainv(w_field.data[1])
        b = self._grad_t(au, av)

        def div_small(r):
            # r = W_s * (adjoint divergence of the current velocity)
            return float(np.max(np.abs(r / self._w))) <= self.div_tol

        p, outer, ok = _cg(self._schur, b, self._p, self.rel_tol,
                           self.max_outer, stop_fn=div_small)
        self._p = p.copy()
        gx, gy = self._grad_i(p)
        vu = self._ainv(w_field.data[0] - h * gx)
        vv = self._ainv(w_field.data[1] - h * gy)
        v = VelocityField(spec, np.stack([vu, vv]))
        p_field = ScalarField(spec, p).demeaned()
        mom = (vu - h * self.nu * self._lap(vu) + h * gx - w_field.data[0],
               vv - h * self.nu * self._lap(vv) + h * gy - w_field.data[1])
        mom_res = float(np.sqrt(np.sum(
            self._w[1:-1, 1:-1] * (mom[0][1:-1, 1:-1] ** 2
                                   + mom[1][1:-1, 1:-1] ** 2))))
        max_div = float(np.max(np.abs(divergence(v).data)))
        return v, p_field, StokesInfo(bool(ok), outer, max_div, mom_res)


# ---------------------------------------------------------------------------
# public entry points

def leray_project(u: VelocityField, rel_tol: float = 1e-10,
                  max_iters: int | None = None) -> HelmholtzParts:
    """Split u into a divergence-free part plus a gradient.

    The potential solves the discrete Poisson problem driven by the
    divergence of u (spectral division on the torus, Neumann CG on the
    box); the solenoidal part is u minus its gradient.
    """
    if u.spec.is_periodic:
        return _leray_periodic(u)
    return _leray_dirichlet(u, rel_tol, max_iters)


def solve_implicit_stokes(w: VelocityField, h: float, nu: float = 1.0,
                          solver: StokesSolver | None = None,
                          ) -> tuple[VelocityField, ScalarField, StokesInfo]:
    """Solve v - h nu lap(v) + h grad(p) = w with div(v) = 0.

    Periodic: exact in one pass, mode by mode. Dirichlet: CG-accelerated
    Uzawa iteration on the pressure; on hitting the iteration cap the
    best iterate is returned with ``info.converged`` False.
    """
    if h <= 0.0:
        raise ValueError("time step h must be positive")
    if w.spec.is_periodic:
        return _stokes_periodic(w, h, nu)
    if solver is None:
        solver = StokesSolver(w.spec, h, nu)
    if solver.h != h or solver.nu != nu or solver.spec != w.spec:
        raise ValueError("solver context does not match this solve")
    return solver.solve(w)
