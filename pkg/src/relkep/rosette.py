"""Non-circular periodic solutions of type (n, k): existence, geometry, timing, action."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

from .core import DomainError, EnergyMomentum, NoSuchOrbitError, PhysicalParams, ProblemSpec
from .loops import Loop

INF = math.inf

_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def threshold_T_star(params: PhysicalParams) -> float:
    return 2.0 * math.pi * params.alpha / (params.m * params.c**3)


def threshold_u(params: PhysicalParams, k: int, n: int) -> float:
    """Period above which type (n, k) solutions exist; ``math.inf`` for ``n == k``."""
    if k < 1:
        raise DomainError("k must be at least 1")
    if not 0 <= n <= k:
        raise DomainError(f"n must lie in [0, {k}], got {n}")
    if n == k:
        return INF
    return n * k**3 / (k * k - n * n) ** 1.5 * threshold_T_star(params)


@dataclass(frozen=True)
class ClassificationReport:
    spec: ProblemSpec
    i_T: int
    thresholds: tuple  # u_n^k for n = 0..k

    @property
    def rosette_thresholds(self) -> list:
        """Thresholds ``u_1 .. u_{k-1}``."""
        return list(self.thresholds[1:-1])


def classify(spec: ProblemSpec) -> ClassificationReport:
    """Index ``i_T`` with ``u_{i_T} < T <= u_{i_T+1}``: the number of rosettes."""
    k = spec.k_abs
    us = tuple(threshold_u(spec.params, k, n) for n in range(k + 1))
    i_T = max(n for n in range(k) if us[n] < spec.T) if spec.T > 0 else 0
    return ClassificationReport(spec, i_T, us)


@dataclass(frozen=True)
class RosetteOrbit:
    spec: ProblemSpec
    n: int
    h: float
    L: float
    conic_B: float
    ecc_e: float
    ecc_E: float
    T_h: float
    delta_theta: float
    r_min: float
    r_max: float

    @property
    def params(self) -> PhysicalParams:
        return self.spec.params

    @property
    def energy_momentum(self) -> EnergyMomentum:
        return EnergyMomentum(self.h, self.L)

    @property
    def angular_frequency_ratio(self) -> float:
        """``sqrt(1 - alpha^2 / (L^2 c^2))``, equal to ``n / k``."""
        p = self.params
        return math.sqrt(1.0 - (p.alpha / (self.L * p.c)) ** 2)

    def initial_state(self):
        """Perihelion state ``(x, p)`` with the orbit's orientation."""
        x = np.array([self.r_min, 0.0])
        p = np.array([0.0, self.spec.orientation * self.L / self.r_min])
        return x, p


def rosette_orbit(spec: ProblemSpec, n: int) -> RosetteOrbit:
    """Closed-form data of the type (n, |k|) solution; ``NoSuchOrbitError`` if absent."""
    p = spec.params
    k = spec.k_abs
    i_T = classify(spec).i_T
    if not 1 <= n <= i_T:
        raise NoSuchOrbitError(
            f"no non-circular solution of type ({n}, {k}) for T = {spec.T!r} (i_T = {i_T})"
        )
    m, c, a = p.m, p.c, p.alpha
    # m^2 c^4 - h^2, from T = n T_h
    gap = (2.0 * math.pi * a * m**2 * c**3 * n / spec.T) ** (2 / 3)
    h = math.sqrt(m**2 * c**4 - gap)
    L = a / c * k / math.sqrt(k * k - n * n)
    Lc2 = a**2 * n * n / (k * k - n * n)  # L^2 c^2 - alpha^2
    B = a * h / Lc2
    e = math.sqrt(max(a**2 * m**2 * c**4 - gap * L**2 * c**2, 0.0)) / Lc2
    E = e / B
    T_h = 2.0 * math.pi * a * m**2 * c**3 / gap**1.5
    dtheta = 2.0 * math.pi / math.sqrt(1.0 - (a / (L * c)) ** 2)
    return RosetteOrbit(
        spec=spec, n=n, h=h, L=L, conic_B=B, ecc_e=e, ecc_E=E, T_h=T_h,
        delta_theta=dtheta, r_min=1.0 / (B * (1.0 + E)), r_max=1.0 / (B * (1.0 - E)),
    )


def radius_of_angle(orbit: RosetteOrbit, theta):
    theta = np.asarray(theta, dtype=float)
    r = 1.0 / (orbit.conic_B * (1.0 + orbit.ecc_E * np.cos(orbit.angular_frequency_ratio * theta)))
    return float(r) if r.ndim == 0 else r


def _dt_dtheta(orbit: RosetteOrbit, theta):
    r = radius_of_angle(orbit, theta)
    p = orbit.params
    return (orbit.h * r * r + p.alpha * r) / (orbit.L * p.c**2)


class _AngleTimeMap:
    """Tabulated ``t(theta)`` on ``[0, 2 pi k]`` with exact local corrections."""

    def __init__(self, orbit: RosetteOrbit):
        self.orbit = orbit
        k = orbit.spec.k_abs
        total = 2.0 * math.pi * k
        per_period = 64 * k
        segs = orbit.n * per_period
        # keep panels well inside the analyticity strip of 1/(1 + E cos)
        E = orbit.ecc_E
        if E > 0:
            strip = math.acosh(1.0 / E) / orbit.angular_frequency_ratio
            segs = max(segs, int(math.ceil(total / (0.25 * strip))))
        self.theta = np.linspace(0.0, total, segs + 1)
        pieces = np.empty(segs)
        for i in range(segs):
            pieces[i] = quad(
                lambda th: _dt_dtheta(orbit, th), self.theta[i], self.theta[i + 1],
                epsabs=0.0, epsrel=1e-13, limit=200,
            )[0]
        self.t = np.concatenate([[0.0], np.cumsum(pieces)])
        self.inverse = PchipInterpolator(self.t, self.theta)

    def time(self, theta):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        idx = np.clip(np.searchsorted(self.theta, theta, side="right") - 1, 0, len(self.theta) - 2)
        a = self.theta[idx]
        half = 0.5 * (theta - a)
        nodes = a[:, None] + half[:, None] * (_GL_X[None, :] + 1.0)
        integral = half * (_dt_dtheta(self.orbit, nodes) @ _GL_W)
        return self.t[idx] + integral

    def angle(self, t, iterations: int = 6):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        theta = self.inverse(t)
        for _ in range(iterations):
            theta = theta - (self.time(theta) - t) / _dt_dtheta(self.orbit, theta)
        return theta


@lru_cache(maxsize=32)
def _time_map(orbit: RosetteOrbit) -> _AngleTimeMap:
    return _AngleTimeMap(orbit)


def time_of_angle(orbit: RosetteOrbit, theta):
    """Time at which the polar angle (perihelion at ``theta = 0``) reaches ``theta``."""
    out = _time_map(orbit).time(theta)
    return float(out[0]) if np.ndim(theta) == 0 else out


def angle_of_time(orbit: RosetteOrbit, t):
    out = _time_map(orbit).angle(t)
    return float(out[0]) if np.ndim(t) == 0 else out


def sample_loop(orbit: RosetteOrbit, N: int) -> Loop:
    """Loop through the orbit at ``N`` uniform times, starting at perihelion."""
    if N < 16:
        raise DomainError("sample_loop needs N >= 16")
    t = np.arange(N) * orbit.spec.T / N
    theta = angle_of_time(orbit, t)
    r = radius_of_angle(orbit, theta)
    nodes = np.stack([r * np.cos(theta), orbit.spec.orientation * r * np.sin(theta)], axis=1)
    return Loop(orbit.spec.T, nodes)


def rosette_action_formula(spec: ProblemSpec, n: float) -> float:
    """Closed-form level for real ``n`` in ``[0, k]``, with no existence check."""
    p = spec.params
    k = spec.k_abs
    if not 0 <= n <= k:
        raise DomainError("n must lie in [0, k]")
    a = p.m ** (2 / 3) * p.c**2
    b = (2.0 * math.pi * p.alpha * n / spec.T) ** (2 / 3)
    if b > a:
        raise DomainError("period too short for the level formula")
    # m c^2 T - (T/c)(a - b)^{3/2}, written as a difference of cubes
    d = a - b
    head = spec.T / p.c * b * (3.0 * a * a - 3.0 * a * b + b * b) / (a**1.5 + d**1.5)
    return head + 2.0 * math.pi * p.alpha / p.c * math.sqrt(k * k - n * n)


def rosette_action(spec: ProblemSpec, n: int) -> float:
    rosette_orbit(spec, n)  # existence
    return rosette_action_formula(spec, n)


def action_spectrum(spec: ProblemSpec) -> list:
    """``[(n, I_n)]`` for every existing rosette, ``n = 1 .. i_T``."""
    i_T = classify(spec).i_T
    return [(n, rosette_action_formula(spec, n)) for n in range(1, i_T + 1)]


def rosette_action_asymptotic(spec: ProblemSpec, n: int) -> float:
    if n < 1:
        raise DomainError("n must be at least 1")
    p = spec.params
    k = spec.k_abs
    a = 2.0 * math.pi * p.alpha * n
    T = spec.T
    return (
        1.5 * a ** (2 / 3) * p.m ** (1 / 3) * T ** (1 / 3)
        + 2.0 * math.pi * p.alpha / p.c * math.sqrt(k * k - n * n)
        - 15.0 / 8.0 * a ** (4 / 3) / (p.m ** (1 / 3) * p.c**2) * T ** (-1 / 3)
    )
