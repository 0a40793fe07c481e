"""Uniform-grid fields and discrete differential operators.

Two backends share one node-collocated layout:

* periodic: n x n nodes on [0, L) x [0, L), spectral derivatives via the
  real FFT, rectangle-rule quadrature (exact for trig polynomials below
  the Nyquist limit).
* dirichlet: (n+1) x (n+1) nodes on [0, L] x [0, L], central differences
  with one-sided closures at the walls, trapezoidal quadrature. Velocity
  samples on the walls are pinned to zero.

Fields are immutable after construction; every operator is a pure
function returning a new field.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np

TWO_PI = 2.0 * math.pi


class BoundaryCondition(enum.Enum):
    PERIODIC = "periodic"
    DIRICHLET_ZERO = "dirichlet"

    @classmethod
    def parse(cls, text: str) -> "BoundaryCondition":
        key = text.strip().lower()
        for bc in cls:
            if bc.value == key:
                return bc
        raise ValueError(f"unknown boundary condition {text!r}")


def _as_pair(value, name: str) -> tuple:
    if np.isscalar(value):
        return (value, value)
    pair = tuple(value)
    if len(pair) != 2:
        raise ValueError(f"{name} must be a scalar or a pair, got {value!r}")
    return pair


@dataclass(frozen=True)
class GridSpec:
    """Geometry of the computational grid.

    ``cells`` counts grid cells per axis; the node count per axis is
    ``cells`` (periodic) or ``cells + 1`` (dirichlet). Cells must be
    square: extent/cells has to agree across axes.
    """

    cells: tuple[int, int]
    extent: tuple[float, float] = (TWO_PI, TWO_PI)
    bc: BoundaryCondition = BoundaryCondition.PERIODIC
    dim: int = 2

    def __init__(self, cells, extent=(TWO_PI, TWO_PI),
                 bc=BoundaryCondition.PERIODIC, dim=2):
        object.__setattr__(self, "cells", tuple(int(c) for c in _as_pair(cells, "cells")))
        object.__setattr__(self, "extent", tuple(float(e) for e in _as_pair(extent, "extent")))
        object.__setattr__(self, "bc", bc)
        object.__setattr__(self, "dim", int(dim))
        self._validate()

    def _validate(self) -> None:
        if self.dim != 2:
            raise ValueError("only dim = 2 is implemented")
        for n in self.cells:
            if n < 8:
                raise ValueError(f"need >= 8 cells per axis, got {n}")
        for L in self.extent:
            if not (L > 0.0):
                raise ValueError("extent must be positive")
        hx = self.extent[0] / self.cells[0]
        hy = self.extent[1] / self.cells[1]
        if not math.isclose(hx, hy, rel_tol=1e-12):
            raise ValueError(f"cells must be square: spacings {hx} != {hy}")
        if self.bc is BoundaryCondition.PERIODIC:
            for n in self.cells:
                if n % 2 != 0:
                    raise ValueError("periodic grids need an even cell count "
                                     "(real-FFT layout)")

    @property
    def is_periodic(self) -> bool:
        return self.bc is BoundaryCondition.PERIODIC

    @property
    def spacing(self) -> float:
        return self.extent[0] / self.cells[0]

    @property
    def node_shape(self) -> tuple[int, int]:
        if self.is_periodic:
            return self.cells
        return (self.cells[0] + 1, self.cells[1] + 1)

    @property
    def node_count(self) -> int:
        nx, ny = self.node_shape
        return nx * ny

    def axis_nodes(self, axis: int) -> np.ndarray:
        return np.arange(self.node_shape[axis]) * self.spacing

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.axis_nodes(0), self.axis_nodes(1), indexing="ij")


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class ScalarField:
    """Scalar samples on the grid nodes (pressure, potentials, ...).

    Pressure-like outputs of the solvers are normalized to zero mean
    (gauge fixing); general scalar fields carry no mean constraint.
    """

    spec: GridSpec
    data: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        data = _freeze(self.data)
        if data.shape != self.spec.node_shape:
            raise ValueError(f"scalar data shape {data.shape} does not match "
                             f"grid nodes {self.spec.node_shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("scalar field contains non-finite samples")
        object.__setattr__(self, "data", data)

    @classmethod
    def zeros(cls, spec: GridSpec) -> "ScalarField":
        return cls(spec, np.zeros(spec.node_shape))

    @classmethod
    def from_function(cls, spec: GridSpec, fn) -> "ScalarField":
        X, Y = spec.mesh()
        return cls(spec, np.asarray(fn(X, Y), dtype=np.float64))

    def mean(self) -> float:
        w = quadrature_weights(self.spec)
        return float(np.sum(w * self.data) / np.sum(w))

    def demeaned(self) -> "ScalarField":
        return ScalarField(self.spec, self.data - self.mean())

    def __add__(self, other: "ScalarField") -> "ScalarField":
        _check_same_spec(self, other)
        return ScalarField(self.spec, self.data + other.data)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        _check_same_spec(self, other)
        return ScalarField(self.spec, self.data - other.data)

    def __mul__(self, a: float) -> "ScalarField":
        return ScalarField(self.spec, self.data * float(a))

    __rmul__ = __mul__


@dataclass(frozen=True)
class VelocityField:
    """Vector samples on the grid nodes, one array slice per component.

    On the dirichlet backend valid velocity fields vanish on the walls;
    derived fields such as gradients may legally violate that (they are
    not constrained on the boundary), so wall pinning is checked by the
    named constructors and by :meth:`is_boundary_compliant`, not by the
    raw dataclass.
    """

    spec: GridSpec
    data: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        data = _freeze(self.data)
        if data.shape != (2,) + self.spec.node_shape:
            raise ValueError(f"velocity data shape {data.shape} does not match "
                             f"(2, *{self.spec.node_shape})")
        if not np.all(np.isfinite(data)):
            raise ValueError("velocity field contains non-finite samples")
        object.__setattr__(self, "data", data)

    @property
    def u(self) -> np.ndarray:
        return self.data[0]

    @property
    def v(self) -> np.ndarray:
        return self.data[1]

    @classmethod
    def zeros(cls, spec: GridSpec) -> "VelocityField":
        return cls(spec, np.zeros((2,) + spec.node_shape))

    @classmethod
    def from_components(cls, spec: GridSpec, u, v) -> "VelocityField":
        fld = cls(spec, np.stack([np.asarray(u, dtype=np.float64),
                                  np.asarray(v, dtype=np.float64)]))
        if not fld.is_boundary_compliant():
            raise ValueError("dirichlet velocity field must vanish on the walls")
        return fld

    @classmethod
    def from_function(cls, spec: GridSpec, fn) -> "VelocityField":
        """Sample an analytic (u, v) closure; wall samples are pinned."""
        X, Y = spec.mesh()
        u, v = fn(X, Y)
        data = np.stack([np.asarray(u, dtype=np.float64),
                         np.asarray(v, dtype=np.float64)])
        if spec.bc is BoundaryCondition.DIRICHLET_ZERO:
            data = data.copy()
            data[:, 0, :] = data[:, -1, :] = 0.0
            data[:, :, 0] = data[:, :, -1] = 0.0
        return cls(spec, data)

    def is_boundary_compliant(self) -> bool:
        if self.spec.is_periodic:
            return True
        d = self.data
        return bool(np.all(d[:, 0, :] == 0.0) and np.all(d[:, -1, :] == 0.0)
                    and np.all(d[:, :, 0] == 0.0) and np.all(d[:, :, -1] == 0.0))

    def component(self, c: int) -> ScalarField:
        return ScalarField(self.spec, self.data[c])

    def __add__(self, other: "VelocityField") -> "VelocityField":
        _check_same_spec(self, other)
        return VelocityField(self.spec, self.data + other.data)

    def __sub__(self, other: "VelocityField") -> "VelocityField":
        _check_same_spec(self, other)
        return VelocityField(self.spec, self.data - other.data)

    def __mul__(self, a: float) -> "VelocityField":
        return VelocityField(self.spec, self.data * float(a))

    __rmul__ = __mul__

    def __neg__(self) -> "VelocityField":
        return VelocityField(self.spec, -self.data)


def _check_same_spec(a, b) -> None:
    if a.spec != b.spec:
        raise ValueError("fields live on different grids")


# ---------------------------------------------------------------------------
# spectral kit (periodic backend)

@lru_cache(maxsize=32)
def _spectral_kit(spec: GridSpec):
    """Derivative wavenumbers for the real-FFT layout.

    The Nyquist wavenumber is zeroed so first derivatives stay
    skew-adjoint and real; the Laplacian symbol is the composition
    -(kx^2 + ky^2) of the masked symbols, which makes div(grad f)
    identical to the Laplacian to machine precision.
    """
    nx, ny = spec.cells
    dx = spec.spacing
    kx = TWO_PI * np.fft.fftfreq(nx, d=dx)
    kx[nx // 2] = 0.0
    ky = TWO_PI * np.fft.rfftfreq(ny, d=dx)
    ky[-1] = 0.0
    KX = np.broadcast_to(kx[:, None], (nx, ny // 2 + 1)).copy()
    KY = np.broadcast_to(ky[None, :], (nx, ny // 2 + 1)).copy()
    K2 = KX**2 + KY**2
    KX.flags.writeable = False
    KY.flags.writeable = False
    K2.flags.writeable = False
    return KX, KY, K2


def _spectral_ddx(spec: GridSpec, data: np.ndarray, axis: int) -> np.ndarray:
    KX, KY, _ = _spectral_kit(spec)
    K = KX if axis == 0 else KY
    return np.fft.irfft2(1j * K * np.fft.rfft2(data), s=data.shape)


# ---------------------------------------------------------------------------
# finite-difference kit (dirichlet backend)

def _fd_partial(data: np.ndarray, axis: int, dx: float) -> np.ndarray:
    """Central differences, second-order one-sided rows at the walls."""
    out = np.empty_like(data)
    d = np.moveaxis(data, axis, 0)
    o = np.moveaxis(out, axis, 0)
    o[1:-1] = (d[2:] - d[:-2]) / (2.0 * dx)
    o[0] = (-3.0 * d[0] + 4.0 * d[1] - d[2]) / (2.0 * dx)
    o[-1] = (3.0 * d[-1] - 4.0 * d[-2] + d[-3]) / (2.0 * dx)
    return out


def _fd_divergence(spec: GridSpec, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Central interior; first-order one-sided normal derivative at walls.

    The wall closure matches the weighted-adjoint divergence used by the
    projection solvers, so a projected wall-pinned field has small
    divergence at every node, walls included.
    """
    dx = spec.spacing
    out = np.zeros_like(u)
    out[1:-1, :] += (u[2:, :] - u[:-2, :]) / (2.0 * dx)
    out[0, :] += (u[1, :] - u[0, :]) / dx
    out[-1, :] += (u[-1, :] - u[-2, :]) / dx
    out[:, 1:-1] += (v[:, 2:] - v[:, :-2]) / (2.0 * dx)
    out[:, 0] += (v[:, 1] - v[:, 0]) / dx
    out[:, -1] += (v[:, -1] - v[:, -2]) / dx
    return out


def _fd_laplacian(spec: GridSpec, data: np.ndarray) -> np.ndarray:
    """Five-point stencil on interior nodes; wall rows return 0."""
    dx2 = spec.spacing ** 2
    out = np.zeros_like(data)
    out[1:-1, 1:-1] = (data[2:, 1:-1] + data[:-2, 1:-1]
                       + data[1:-1, 2:] + data[1:-1, :-2]
                       - 4.0 * data[1:-1, 1:-1]) / dx2
    return out


# ---------------------------------------------------------------------------
# public operators

def partial_derivative(f: ScalarField, axis: int) -> ScalarField:
    spec = f.spec
    if spec.is_periodic:
        return ScalarField(spec, _spectral_ddx(spec, f.data, axis))
    return ScalarField(spec, _fd_partial(f.data, axis, spec.spacing))


def gradient(f: ScalarField) -> VelocityField:
    """Discrete gradient; spectral (periodic) or central/one-sided (dirichlet).

    The result is not constrained to vanish on the walls.
    """
    gx = partial_derivative(f, 0)
    gy = partial_derivative(f, 1)
    return VelocityField(f.spec, np.stack([gx.data, gy.data]))


def divergence(v: VelocityField) -> ScalarField:
    spec = v.spec
    if spec.is_periodic:
        out = _spectral_ddx(spec, v.u, 0) + _spectral_ddx(spec, v.v, 1)
        return ScalarField(spec, out)
    return ScalarField(spec, _fd_divergence(spec, v.u, v.v))


def laplacian(v: VelocityField) -> VelocityField:
    spec = v.spec
    if spec.is_periodic:
        _, _, K2 = _spectral_kit(spec)
        out = np.stack([
            np.fft.irfft2(-K2 * np.fft.rfft2(v.data[c]), s=spec.node_shape)
            for c in range(2)
        ])
        return VelocityField(spec, out)
    return VelocityField(spec, np.stack([_fd_laplacian(spec, v.data[c])
                                         for c in range(2)]))


@lru_cache(maxsize=32)
def quadrature_weights(spec: GridSpec) -> np.ndarray:
    """Rectangle rule (periodic) or trapezoid rule (dirichlet) node weights."""
    dx = spec.spacing
    if spec.is_periodic:
        w = np.full(spec.node_shape, dx * dx)
    else:
        w1x = np.full(spec.node_shape[0], dx)
        w1x[0] = w1x[-1] = 0.5 * dx
        w1y = np.full(spec.node_shape[1], dx)
        w1y[0] = w1y[-1] = 0.5 * dx
        w = w1x[:, None] * w1y[None, :]
    w.flags.writeable = False
    return w


def integrate_scalar(f: ScalarField) -> float:
    return float(np.sum(quadrature_weights(f.spec) * f.data))


def inner_product_l2(a: VelocityField, b: VelocityField) -> float:
    """Quadrature of the pointwise dot product of two vector fields."""
    _check_same_spec(a, b)
    w = quadrature_weights(a.spec)
    return float(np.sum(w * (a.data[0] * b.data[0] + a.data[1] * b.data[1])))


def norm_l2(a: VelocityField) -> float:
    return math.sqrt(max(inner_product_l2(a, a), 0.0))


def grad_norm_sq(v: VelocityField) -> float:
    """Integral of |Dv|^2 (the full Jacobian, both components)."""
    total = 0.0
    for c in range(2):
        g = gradient(v.component(c))
        total += inner_product_l2(g, g)
    return total


def grad_max_norm(v: VelocityField) -> float:
    """Max over nodes of the Frobenius norm of the velocity Jacobian."""
    acc = np.zeros(v.spec.node_shape)
    for c in range(2):
        g = gradient(v.component(c))
        acc += g.data[0] ** 2 + g.data[1] ** 2
    return float(np.sqrt(np.max(acc)))


def advection_term(v: VelocityField) -> VelocityField:
    """(v . D) v computed with the backend's derivative operators."""
    out = np.empty((2,) + v.spec.node_shape)
    for c in range(2):
        g = gradient(v.component(c))
        out[c] = v.data[0] * g.data[0] + v.data[1] * g.data[1]
    return VelocityField(v.spec, out)
