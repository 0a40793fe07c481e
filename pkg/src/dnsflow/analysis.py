"""Executable checks for the scheme's energy and weak-form statements.

Everything here is read-only over completed trajectories: the per-step
energy inequality and its cumulative exponential bound, the gradient
scaling monitor, the material-derivative quadrature identity, the
time interpolants and the discrete weak-form residual.
"""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .fields import (
    GridSpec,
    VelocityField,
    advection_term,
    grad_max_norm,
    grad_norm_sq,
    gradient,
    inner_product_l2,
    norm_l2,
    quadrature_weights,
)
from .scheme import Trajectory, backtrace


# ---------------------------------------------------------------------------
# energy ledger

@dataclass(frozen=True)
class LedgerRow:
    n: int
    t: float
    kinetic_shifted: float   # int |v_n - v_{n-1}(x - h v_{n-1})|^2 / 2h
    kinetic_plain: float     # int |v_n - v_{n-1}|^2 / 2h
    dirichlet: float         # int |D v_n|^2
    dirichlet_prev: float
    fitted_c: float


@dataclass(frozen=True)
class EnergyLedger:
    rows: tuple[LedgerRow, ...]
    initial_dirichlet: float

    def __len__(self) -> int:
        return len(self.rows)


def _fitted_c(kinetic_plain: float, dirichlet: float,
              dirichlet_prev: float) -> float:
    """Smallest C >= 0 with kinetic + dirichlet <= (1 + C h) dirichlet_prev,
    in units of 1/h (the caller divides by h)."""
    if dirichlet_prev > 0.0:
        return max(0.0, (kinetic_plain + dirichlet - dirichlet_prev)
                   / dirichlet_prev)
    if kinetic_plain + dirichlet > 0.0:
        return math.inf
    return 0.0


def _make_row(n: int, h: float, v: VelocityField, v_prev: VelocityField,
              w: VelocityField, dirichlet_prev: float) -> LedgerRow:
    ds = v - w
    dp = v - v_prev
    kin_s = inner_product_l2(ds, ds) / (2.0 * h)
    kin_p = inner_product_l2(dp, dp) / (2.0 * h)
    dirichlet = grad_norm_sq(v)
    c = _fitted_c(kin_p, dirichlet, dirichlet_prev)
    if math.isfinite(c):
        c = c / h
    return LedgerRow(n=n, t=n * h, kinetic_shifted=kin_s, kinetic_plain=kin_p,
                     dirichlet=dirichlet, dirichlet_prev=dirichlet_prev,
                     fitted_c=c)


def ledger_from_results(traj: Trajectory) -> EnergyLedger:
    """Assemble the ledger from the run's own step records."""
    h = traj.cfg.h
    rows = []
    dirichlet_prev = grad_norm_sq(traj.snapshots[0])
    initial = dirichlet_prev
    for n, res in enumerate(traj.results, start=1):
        row = _make_row(n, h, res.v, traj.snapshots[n - 1], res.w,
                        dirichlet_prev)
        rows.append(row)
        dirichlet_prev = row.dirichlet
    return EnergyLedger(tuple(rows), initial)


def build_energy_ledger(traj: Trajectory) -> EnergyLedger:
    """Recompute every ledger term from the stored snapshots alone.

    The back-traced field is recomputed here, so this builder picks up
    any post-run modification of the snapshots.
    """
    cfg = traj.cfg
    rows = []
    dirichlet_prev = grad_norm_sq(traj.snapshots[0])
    initial = dirichlet_prev
    for n in range(1, len(traj.snapshots)):
        v_prev = traj.snapshots[n - 1]
        v = traj.snapshots[n]
        w = backtrace(v_prev, cfg.h, cfg.interp_order)
        row = _make_row(n, cfg.h, v, v_prev, w, dirichlet_prev)
        rows.append(row)
        dirichlet_prev = row.dirichlet
    return EnergyLedger(tuple(rows), initial)


def ledger_to_csv(ledger: EnergyLedger) -> str:
    out = io.StringIO()
    out.write("n,t,kinetic_shifted,kinetic_plain,dirichlet,fitted_c\n")
    for r in ledger.rows:
        out.write(f"{r.n},{r.t:.17g},{r.kinetic_shifted:.17g},"
                  f"{r.kinetic_plain:.17g},{r.dirichlet:.17g},"
                  f"{r.fitted_c:.17g}\n")
    return out.getvalue()


# ---------------------------------------------------------------------------
# per-step inequality and cumulative estimate

@dataclass(frozen=True)
class StepInequalityRow:
    n: int
    holds: bool
    fitted_c: float
    vacuous_failure: bool


@dataclass(frozen=True)
class StepInequalityReport:
    rows: tuple[StepInequalityRow, ...]
    max_fitted_c: float
    all_hold: bool


def check_step_inequality(ledger: EnergyLedger) -> StepInequalityReport:
    """Per-step dissipation bound with the plain velocity increment.

    A step holds when a finite C >= 0 makes
    kinetic_plain + dirichlet <= (1 + C h) dirichlet_prev. A zero
    previous Dirichlet energy with a positive left side is a vacuous
    failure: the flow generated energy from nothing.
    """
    rows = []
    for r in ledger.rows:
        vacuous = (r.dirichlet_prev == 0.0
                   and r.kinetic_plain + r.dirichlet > 0.0)
        holds = math.isfinite(r.fitted_c) and not vacuous
        rows.append(StepInequalityRow(n=r.n, holds=holds, fitted_c=r.fitted_c,
                                      vacuous_failure=vacuous))
    max_c = max((r.fitted_c for r in rows), default=0.0)
    return StepInequalityReport(tuple(rows), max_c,
                                all(r.holds for r in rows))


@dataclass(frozen=True)
class CumulativeReport:
    holds: bool
    c_prime: float
    bound: float
    max_lhs: float
    tightest_c: float


def check_cumulative_estimate(ledger: EnergyLedger, T: float) -> CumulativeReport:
    """Exponential-in-time bound on the accumulated energy.

    For every n the partial sum of shifted kinetic terms plus half the
    current Dirichlet energy must stay below C' e^{C' T} times the
    initial Dirichlet energy, with C' = max(max fitted C, 1).
    """
    e0 = ledger.initial_dirichlet
    step_report = check_step_inequality(ledger)
    c_prime = max(step_report.max_fitted_c, 1.0)
    lhs = 0.0
    max_lhs = 0.0
    kin_sum = 0.0
    for r in ledger.rows:
        kin_sum += r.kinetic_shifted
        lhs = kin_sum + 0.5 * r.dirichlet
        max_lhs = max(max_lhs, lhs)
    if not math.isfinite(c_prime):
        return CumulativeReport(False, c_prime, math.inf, max_lhs, math.inf)
    bound = c_prime * math.exp(c_prime * T) * e0
    holds = max_lhs <= bound or max_lhs == 0.0
    tightest = _tightest_constant(max_lhs, e0, T)
    return CumulativeReport(holds, c_prime, bound, max_lhs, tightest)


def _tightest_constant(max_lhs: float, e0: float, T: float) -> float:
    if max_lhs == 0.0:
        return 0.0
    if e0 == 0.0:
        return math.inf
    target = max_lhs / e0
    lo, hi = 0.0, 1.0
    while hi * math.exp(hi * T) < target:
        hi *= 2.0
        if hi > 1e12:
            return math.inf
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid * math.exp(mid * T) < target:
            lo = mid
        else:
            hi = mid
    return hi


def stable_within_factor(values: Sequence[float], factor: float = 2.0,
                         floor: float = 1e-9) -> bool:
    """h-independence surrogate: the values vary by less than ``factor``.

    All-below-floor collections (trivially dissipative runs fit with
    C = 0 everywhere) count as stable.
    """
    vals = [float(v) for v in values]
    if not vals or not all(math.isfinite(v) for v in vals):
        return False
    hi = max(vals)
    if hi <= floor:
        return True
    lo = max(min(vals), floor)
    return hi / lo < factor


# ---------------------------------------------------------------------------
# gradient scaling monitor

@dataclass(frozen=True)
class GradientScalingReport:
    h_values: tuple[float, ...]
    max_gradients: tuple[float, ...]
    alpha: float
    within_assumption: bool  # alpha <= 0.5 + 0.1


def monitor_assumption_a(trajectories: Sequence[Trajectory]) -> GradientScalingReport:
    """Fit max_n |Dv_n|_inf ~ h^(-alpha) across an h-ladder of runs."""
    if len(trajectories) < 2:
        raise ValueError("need at least two runs to fit a scaling exponent")
    hs = []
    grads = []
    for traj in trajectories:
        hs.append(traj.cfg.h)
        grads.append(max(grad_max_norm(v) for v in traj.snapshots[1:]))
    if max(grads) <= 1e-14:
        alpha = 0.0
    else:
        logs = np.log(np.maximum(grads, 1e-300))
        alpha = float(-np.polyfit(np.log(hs), logs, 1)[0])
    return GradientScalingReport(tuple(hs), tuple(grads), alpha,
                                 alpha <= 0.6)


# ---------------------------------------------------------------------------
# material-derivative identity

@dataclass(frozen=True)
class AnalyticVectorField:
    """A smooth field given by closures for values and the Jacobian."""

    value: Callable  # (x, y) -> (u, v)
    jacobian: Callable  # (x, y) -> ((du/dx, du/dy), (dv/dx, dv/dy))


def constant_analytic_field(c1: float, c2: float) -> AnalyticVectorField:
    def value(x, y):
        return np.full_like(x, c1), np.full_like(x, c2)

    def jac(x, y):
        z = np.zeros_like(x)
        return (z, z), (z, z)

    return AnalyticVectorField(value, jac)


def material_derivative_identity(field: AnalyticVectorField, h: float,
                                 quad_nodes: int, spec: GridSpec) -> float:
    """L2 gap between the back-trace difference quotient and the
    line-integrated directional derivative.

    Left side: [v(x) - v(x - h v(x))] / h. Right side: composite
    midpoint quadrature of v(x) . Dv(x - h tau v(x)) over tau in [0, 1].
    Zero for constant fields regardless of h and the node count.
    """
    if quad_nodes < 2:
        raise ValueError("need at least 2 quadrature nodes")
    if h <= 0.0:
        raise ValueError("time step h must be positive")
    X, Y = spec.mesh()
    vx, vy = field.value(X, Y)
    bx, by = field.value(X - h * vx, Y - h * vy)
    lhs_x = (vx - bx) / h
    lhs_y = (vy - by) / h
    rhs_x = np.zeros_like(X)
    rhs_y = np.zeros_like(X)
    for m in range(quad_nodes):
        tau = (m + 0.5) / quad_nodes
        (jxx, jxy), (jyx, jyy) = field.jacobian(X - h * tau * vx,
                                                Y - h * tau * vy)
        rhs_x += vx * jxx + vy * jxy
        rhs_y += vx * jyx + vy * jyy
    rhs_x /= quad_nodes
    rhs_y /= quad_nodes
    w = quadrature_weights(spec)
    gap2 = (lhs_x - rhs_x) ** 2 + (lhs_y - rhs_y) ** 2
    return float(np.sqrt(np.sum(w * gap2)))


# ---------------------------------------------------------------------------
# time interpolants

class InterpolantMode(enum.Enum):
    PIECEWISE_CONSTANT = "piecewise_constant"
    PIECEWISE_LINEAR = "piecewise_linear"


@dataclass(frozen=True)
class TimeInterpolant:
    """Sampler over (0, T] for the stored snapshot sequence.

    Piecewise constant returns v_n on (t_{n-1}, t_n]; piecewise linear
    returns the convex combination matching v_n at the nodes.
    """

    times: np.ndarray
    snapshots: tuple[VelocityField, ...]
    mode: InterpolantMode

    @classmethod
    def from_trajectory(cls, traj: Trajectory,
                        mode: InterpolantMode) -> "TimeInterpolant":
        return cls(np.asarray(traj.times, dtype=np.float64),
                   tuple(traj.snapshots), mode)

    def __call__(self, t: float) -> VelocityField:
        times = self.times
        if t < times[0] - 1e-14 or t > times[-1] + 1e-14:
            raise ValueError(f"time {t} outside [{times[0]}, {times[-1]}]")
        if t <= times[0]:
            return self.snapshots[0]
        n = int(np.searchsorted(times, t, side="left"))
        n = min(max(n, 1), len(times) - 1)
        if self.mode is InterpolantMode.PIECEWISE_CONSTANT:
            return self.snapshots[n]
        h = times[n] - times[n - 1]
        theta = (t - times[n - 1]) / h
        return self.snapshots[n] * theta + self.snapshots[n - 1] * (1.0 - theta)


def max_step_increment(traj: Trajectory) -> float:
    """max_n |v_n - v_{n-1}|_L2, the gap between the two interpolants."""
    return max(
        norm_l2(traj.snapshots[n] - traj.snapshots[n - 1])
        for n in range(1, len(traj.snapshots))
    )


# ---------------------------------------------------------------------------
# test functions and the weak-form residual

@dataclass(frozen=True)
class TestFunction:
    """Analytic space-time test field phi with its derivatives.

    ``value``/``dt``/``jacobian`` are closures of (X, Y, t); the flags
    certify analytic divergence-freedom (spot-checked on construction)
    and vanishing at t = 0 and t = T.
    """

    value: Callable
    dt: Callable
    jacobian: Callable
    divergence_free: bool
    compact_time_support: bool
    label: str = ""


def _spot_check_divergence(jac, rng: np.random.Generator, t_max: float) -> bool:
    x = rng.uniform(0.0, 2.0 * math.pi, size=100)
    y = rng.uniform(0.0, 2.0 * math.pi, size=100)
    t = rng.uniform(0.0, t_max, size=100)
    (jxx, _), (_, jyy) = jac(x, y, t)
    return bool(np.max(np.abs(jxx + jyy)) < 1e-12)


def solenoidal_test_function(T: float, modes=((1, 1, 1.0),)) -> TestFunction:
    """Time bump times the curl of a trigonometric stream function.

    phi = eta(t) * (d psi / dy, -d psi / dx) with
    psi = sum_m amp_m sin(k1_m x) sin(k2_m y) and
    eta(t) = 16 t^2 (T - t)^2 / T^4, so div phi = 0 analytically and
    phi vanishes at t = 0 and t = T. ``modes`` is a sequence of
    (k1, k2, amplitude) triples.
    """
    modes = tuple((int(k1), int(k2), float(a)) for (k1, k2, a) in modes)

    def eta(t):
        return 16.0 * t * t * (T - t) * (T - t) / T**4

    def eta_dt(t):
        return 16.0 * (2.0 * t * (T - t) * (T - t)
                       - 2.0 * t * t * (T - t)) / T**4

    def space(x, y):
        u = np.zeros_like(x)
        v = np.zeros_like(x)
        for k1, k2, a in modes:
            u += a * k2 * np.sin(k1 * x) * np.cos(k2 * y)
            v += -a * k1 * np.cos(k1 * x) * np.sin(k2 * y)
        return u, v

    def value(x, y, t):
        u, v = space(x, y)
        e = eta(t)
        return e * u, e * v

    def dt(x, y, t):
        u, v = space(x, y)
        e = eta_dt(t)
        return e * u, e * v

    def jacobian(x, y, t):
        e = eta(t)
        p1x = np.zeros_like(x)
        p1y = np.zeros_like(x)
        p2x = np.zeros_like(x)
        p2y = np.zeros_like(x)
        for k1, k2, a in modes:
            sx, cx = np.sin(k1 * x), np.cos(k1 * x)
            sy, cy = np.sin(k2 * y), np.cos(k2 * y)
            p1x += e * a * k1 * k2 * cx * cy
            p1y += -e * a * k2 * k2 * sx * sy
            p2x += e * a * k1 * k1 * sx * sy
            p2y += -e * a * k1 * k2 * cx * cy
        return (p1x, p1y), (p2x, p2y)

    rng = np.random.default_rng(20260808)
    ok = _spot_check_divergence(jacobian, rng, T)
    label = "curl[" + " + ".join(f"{a:g} sin({k1}x)sin({k2}y)"
                                 for k1, k2, a in modes) + "] * bump"
    return TestFunction(value, dt, jacobian, divergence_free=ok,
                        compact_time_support=True, label=label)


def default_test_functions(T: float) -> list[TestFunction]:
    """Five distinct solenoidal test fields.

    Every member carries a (1, 1) stream mode so it pairs with the
    low-order content of smooth residuals; the extra odd-odd modes make
    the family genuinely independent.
    """
    mode_sets = [
        ((1, 1, 1.0),),
        ((1, 1, 1.0), (3, 1, 0.6)),
        ((1, 1, 1.0), (1, 3, -0.4)),
        ((1, 1, 1.0), (3, 3, 0.8)),
        ((1, 1, 1.0), (3, 3, 0.3), (3, 1, -0.2)),
    ]
    return [solenoidal_test_function(T, modes) for modes in mode_sets]


@dataclass(frozen=True)
class WeakFormReport:
    linear_residual: float      # -int <v_h, phi_t> + int <Dv_bar, Dphi>
    nonlinear_residual: float   # linear + int <(v_bar . D) v_bar, phi>


def weak_residual(traj: Trajectory, phi: TestFunction,
                  time_quad_nodes: int = 5) -> WeakFormReport:
    """Discrete weak-form residual of the trajectory against phi.

    The v-side factors are affine or constant in t on each step
    interval, so per-interval Gauss-Legendre quadrature with a handful
    of nodes integrates the products with the polynomial time bump
    exactly. Rejects test functions without compact support in time.
    """
    if not phi.compact_time_support:
        raise ValueError("test function must vanish at t = 0 and t = T "
                         "(compact support in time)")
    if not phi.divergence_free:
        raise ValueError("test function must be divergence-free")
    if time_quad_nodes < 2:
        raise ValueError("need at least 2 time quadrature nodes per interval")
    spec = traj.cfg.grid
    X, Y = spec.mesh()
    w = quadrature_weights(spec)
    gl_nodes, gl_weights = np.polynomial.legendre.leggauss(time_quad_nodes)
    times = traj.times
    linear = 0.0
    advect = 0.0
    for n in range(1, len(traj.snapshots)):
        v_prev = traj.snapshots[n - 1]
        v_n = traj.snapshots[n]
        t0, t1 = times[n - 1], times[n]
        half = 0.5 * (t1 - t0)
        mid = 0.5 * (t0 + t1)
        dvx = gradient(v_n.component(0))
        dvy = gradient(v_n.component(1))
        adv = advection_term(v_n)
        for q in range(time_quad_nodes):
            t = mid + half * gl_nodes[q]
            wq = half * gl_weights[q]
            theta = (t - t0) / (t1 - t0)
            ptx, pty = phi.dt(X, Y, t)
            vh_x = theta * v_n.data[0] + (1.0 - theta) * v_prev.data[0]
            vh_y = theta * v_n.data[1] + (1.0 - theta) * v_prev.data[1]
            linear -= wq * float(np.sum(w * (vh_x * ptx + vh_y * pty)))
            (j1x, j1y), (j2x, j2y) = phi.jacobian(X, Y, t)
            linear += wq * float(np.sum(w * (dvx.data[0] * j1x
                                             + dvx.data[1] * j1y
                                             + dvy.data[0] * j2x
                                             + dvy.data[1] * j2y)))
            pvx, pvy = phi.value(X, Y, t)
            advect += wq * float(np.sum(w * (adv.data[0] * pvx
                                             + adv.data[1] * pvy)))
    return WeakFormReport(linear_residual=linear,
                          nonlinear_residual=linear + advect)
