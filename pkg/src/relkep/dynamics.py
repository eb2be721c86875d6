"""Hamiltonian form of the unforced equation and an adaptive Dormand-Prince integrator.

Integration runs in Cartesian momentum coordinates ``(x, p)``; the polar
vector field is kept for checking the closed-form orbits against it.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .core import CollisionError, DomainError, EnergyMomentum, PhysicalParams, momentum_map_inv


@dataclass(frozen=True)
class HamState:
    r: float
    theta: float
    l: float
    ang_mom: float

    def __post_init__(self):
        if not self.r > 0:
            raise DomainError("HamState needs r > 0")


@dataclass(frozen=True, eq=False)
class CartState:
    x: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if np.hypot(*x) == 0.0:
            raise DomainError("CartState needs x != 0")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.x, self.p])


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    y: np.ndarray  # rows (x, y, px, py)
    stats: dict = field(default_factory=dict)

    @property
    def states(self) -> list:
        return [CartState(row[:2], row[2:]) for row in self.y]

    def to_csv(self, params: PhysicalParams) -> str:
        h, L = trajectory_invariants(params, self)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "x", "y", "px", "py", "h", "L"])
        for t, row, hh, LL in zip(self.times, self.y, h, L):
            w.writerow([repr(float(v)) for v in (t, *row, hh, LL)])
        return buf.getvalue()


@dataclass(frozen=True)
class HamTangent:
    r: float
    theta: float
    l: float
    ang_mom: float


def vector_field(params: PhysicalParams, s: HamState) -> HamTangent:
    """Right-hand side of the polar Hamiltonian system."""
    if not s.r > 0:
        raise DomainError("vector field needs r > 0")
    m, c, a = params.m, params.c, params.alpha
    root = math.sqrt(1.0 + (s.l**2 + s.ang_mom**2 / s.r**2) / (m * c) ** 2)
    return HamTangent(
        r=s.l / (m * root),
        theta=s.ang_mom / (m * s.r**2 * root),
        l=s.ang_mom**2 / (m * s.r**3 * root) - a / s.r**2,
        ang_mom=0.0,
    )


def invariants_of(params: PhysicalParams, s: CartState) -> EnergyMomentum:
    """Energy and angular momentum of a phase-space point."""
    r = float(np.hypot(*s.x))
    if r == 0.0:
        raise DomainError("invariants undefined at the origin")
    mc = params.m * params.c
    h = params.m * params.c**2 * math.sqrt(1.0 + float(s.p @ s.p) / mc**2) - params.alpha / r
    L = float(s.x[0] * s.p[1] - s.x[1] * s.p[0])
    return EnergyMomentum(h, L)


def trajectory_invariants(params: PhysicalParams, traj: Trajectory):
    x, p = traj.y[:, :2], traj.y[:, 2:]
    mc = params.m * params.c
    r = np.hypot(x[:, 0], x[:, 1])
    h = params.m * params.c**2 * np.sqrt(1.0 + np.sum(p * p, axis=1) / mc**2) - params.alpha / r
    L = x[:, 0] * p[:, 1] - x[:, 1] * p[:, 0]
    return h, L


def _rhs(params: PhysicalParams):
    a = params.alpha

    def f(y):
        x, p = y[:2], y[2:]
        r = math.hypot(x[0], x[1])
        v = momentum_map_inv(params, p)
        return np.concatenate([v, -a * x / r**3])

    return f


# Dormand-Prince 5(4)
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


def _dp_step(f, y, h, k1=None):
    """One Dormand-Prince step; returns (y5, error vector, derivative at y5)."""
    k = np.empty((7, y.size))
    k[0] = f(y) if k1 is None else k1
    for i in range(1, 7):
        k[i] = f(y + h * (np.asarray(_A[i]) @ k[:i]))
    y5 = y + h * (_B5 @ k)
    err = h * ((_B5 - _B4) @ k)
    return y5, err, k[6]


def integrate(params: PhysicalParams, s0: CartState, t_end: float, tol: float = 1e-10,
              t_stops=(), h0: float | None = None, max_steps: int = 2_000_000) -> Trajectory:
    """Integrate the unforced equation from ``s0`` over ``[0, t_end]``.

    Steps are controlled by a PI controller on the embedded error estimate with
    ``atol = rtol = tol``; every time in ``t_stops`` (and ``t_end``) is hit exactly.
    A step size collapsing below round-off raises :class:`CollisionError`.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    if not t_end > 0:
        raise DomainError("t_end must be positive")
    f = _rhs(params)
    y = s0.as_array().copy()
    stops = sorted({float(s) for s in t_stops if 0 < s < t_end} | {float(t_end)})
    t = 0.0
    r0 = math.hypot(y[0], y[1])
    h = h0 if h0 is not None else 1e-3 * min(t_end, r0 / params.c)
    times, ys = [0.0], [y.copy()]
    k1 = f(y)
    err_prev = 1.0
    n_acc = n_rej = 0
    stop_i = 0
    safety, beta1, beta2 = 0.9, 0.7 / 5, 0.4 / 5
    while stop_i < len(stops):
        target = stops[stop_i]
        if n_acc + n_rej > max_steps:
            raise CollisionError("step budget exhausted", t)
        hit = t + h >= target * (1.0 - 1e-15)
        step = target - t if hit else h
        if step <= 1e-14 * max(1.0, abs(t)):
            raise CollisionError(f"step size underflow at t = {t!r}", t)
        y_new, err, k_last = _dp_step(f, y, step, k1)
        scale = tol + tol * np.maximum(np.abs(y), np.abs(y_new))
        e = math.sqrt(np.mean((err / scale) ** 2))
        if not math.isfinite(e):
            h = 0.25 * step
            n_rej += 1
            continue
        if e <= 1.0:
            t = target if hit else t + step
            y, k1 = y_new, k_last
            times.append(t)
            ys.append(y.copy())
            n_acc += 1
            if hit:
                stop_i += 1
            e = max(e, 1e-10)
            fac = safety * e**-beta1 * err_prev**beta2
            err_prev = e
            h = step * min(5.0, max(0.2, fac))
            if hit and stop_i < len(stops):
                h = max(h, step)
        else:
            n_rej += 1
            h = step * max(0.1, safety * e ** (-1 / 5))
        if math.hypot(y[0], y[1]) == 0.0:
            raise CollisionError("trajectory reached the origin", t)
    traj = Trajectory(np.array(times), np.array(ys), {"accepted": n_acc, "rejected": n_rej, "tol": tol})
    hh, LL = trajectory_invariants(params, traj)
    traj.stats["energy_drift"] = float(np.max(np.abs(hh - hh[0])))
    traj.stats["momentum_drift"] = float(np.max(np.abs(LL - LL[0])))
    return traj


def state_at(params: PhysicalParams, traj: Trajectory, t: float) -> np.ndarray:
    """State at time ``t``: exact at a node, otherwise one partial step from the node before."""
    i = int(np.searchsorted(traj.times, t, side="right") - 1)
    i = min(max(i, 0), len(traj.times) - 1)
    if abs(traj.times[i] - t) <= 1e-14 * max(1.0, abs(t)):
        return traj.y[i].copy()
    if i == len(traj.times) - 1:
        raise DomainError("time outside the trajectory")
    y5, _, _ = _dp_step(_rhs(params), traj.y[i], t - traj.times[i])
    return y5


def periodicity_residual(params: PhysicalParams, traj: Trajectory, T: float) -> float:
    """Distance between the states at ``0`` and ``T``; positions in units of the
    smallest radius seen, momenta in units of ``m c``."""
    if traj.times[-1] < T * (1.0 - 1e-14):
        raise DomainError("trajectory does not reach T")
    y0 = traj.y[0]
    yT = state_at(params, traj, T)
    r_min = float(np.min(np.hypot(traj.y[:, 0], traj.y[:, 1])))
    dx = np.hypot(*(yT[:2] - y0[:2])) / r_min
    dp = np.hypot(*(yT[2:] - y0[2:])) / (params.m * params.c)
    return float(math.hypot(dx, dp))


def perihelion_passages(params: PhysicalParams, traj: Trajectory, t_tol: float = 1e-12):
    """Times and states where ``d|x|^2/dt`` changes sign from negative to positive.

    Each crossing is located by bisection, re-stepping from the preceding node.
    """
    f = _rhs(params)

    def g(y):
        return float(y[:2] @ momentum_map_inv(params, y[2:]))

    gs = np.array([g(row) for row in traj.y])
    found_t, found_y = [], []
    for i in range(len(gs) - 1):
        if gs[i] < 0.0 <= gs[i + 1]:
            t0, y0 = traj.times[i], traj.y[i]
            lo, hi = 0.0, traj.times[i + 1] - t0
            while hi - lo > t_tol:
                mid = 0.5 * (lo + hi)
                ym = _dp_step(f, y0, mid)[0]
                if g(ym) < 0.0:
                    lo = mid
                else:
                    hi = mid
            tau = 0.5 * (lo + hi)
            found_t.append(t0 + tau)
            found_y.append(_dp_step(f, y0, tau)[0])
    return np.array(found_t), np.array(found_y).reshape(-1, 4)


def unwrapped_angles(traj: Trajectory) -> np.ndarray:
    return np.unwrap(np.arctan2(traj.y[:, 1], traj.y[:, 0]))


def trajectory_winding(traj: Trajectory) -> float:
    th = unwrapped_angles(traj)
    return (th[-1] - th[0]) / (2.0 * math.pi)
