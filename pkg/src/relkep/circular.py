"""Circular T-periodic solutions with prescribed winding number."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import PhysicalParams, ProblemSpec
from .loops import Loop


def _rhs(spec: ProblemSpec) -> float:
    p = spec.params
    return p.m * p.alpha**2 * p.c * spec.T / (2.0 * math.pi * spec.k_abs)


def _lhs(params: PhysicalParams, L: float) -> float:
    # L^2 sqrt(L^2 c^2 - alpha^2), factored to keep precision near L = alpha/c
    lc = L * params.c
    return L * L * math.sqrt(max((lc - params.alpha) * (lc + params.alpha), 0.0))


def angular_momentum_residual(spec: ProblemSpec, L: float) -> float:
    """Relative residual of the circular-orbit equation for ``L``."""
    rhs = _rhs(spec)
    return abs(_lhs(spec.params, L) - rhs) / (1.0 + rhs)


def cardano_U(spec: ProblemSpec) -> float:
    """The sum of real cube roots in the Cardano solution for ``L^2``.

    The first radicand ``a - sqrt(1 + s)`` is evaluated through its conjugate,
    ``(s^2/4) / (a + sqrt(1 + s))``, which stays accurate for large ``T``.
    """
    p = spec.params
    k = spec.k_abs
    s = 16.0 * math.pi**2 * k**2 * p.alpha**2 / (27.0 * p.m**2 * p.c**6 * spec.T**2)
    a = 1.0 + 0.5 * s
    r = math.sqrt(1.0 + s)
    small = 0.25 * s * s / (a + r)
    return np.cbrt(small) + np.cbrt(a + r)


def _cardano_X(spec: ProblemSpec) -> float:
    p = spec.params
    k = spec.k_abs
    coeff = (
        3.0
        * p.m ** (2 / 3)
        * p.c**2
        * spec.T ** (2 / 3)
        / (2.0 * math.pi ** (2 / 3) * k ** (2 / 3) * p.alpha ** (2 / 3))
    )
    return coeff * cardano_U(spec) + 1.0


def solve_angular_momentum_cardano(spec: ProblemSpec) -> float:
    p = spec.params
    L2 = p.alpha**2 / (3.0 * p.c**2) * _cardano_X(spec)
    return math.sqrt(L2)


def solve_momentum_gap(spec: ProblemSpec) -> float:
    """``y = L^2 c^2 - alpha^2`` for the circular solution.

    In ``y`` the defining equation is the cubic ``(y + alpha^2)^2 y = rhs^2 c^4``
    with a single positive root. Solving for ``y`` rather than ``L`` keeps full
    relative precision when ``L`` is close to ``alpha/c`` (short periods).
    Bisection on ``[0, min(rhs^2 c^4/alpha^4, (rhs c^2)^{2/3})]``, then Newton.
    """
    p = spec.params
    a2 = p.alpha**2
    target = _rhs(spec) * p.c**2  # sqrt of the cubic's constant term

    def g(y):
        # (y + a2) sqrt(y) - target, monotone in y
        return (y + a2) * math.sqrt(y) - target

    lo, hi = 0.0, min((target / a2) ** 2, target ** (2 / 3))
    hi = hi * (1.0 + 1e-12)
    while g(hi) < 0.0:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-10 * hi:
            break
    y = 0.5 * (lo + hi)
    for _ in range(8):
        sy = math.sqrt(y)
        step = g(y) / (sy + 0.5 * (y + a2) / sy)
        y_new = y - step
        if not (lo <= y_new <= hi):
            break
        y = y_new
        if abs(step) <= 1e-16 * y:
            break
    return y


def solve_angular_momentum(spec: ProblemSpec) -> float:
    """Root ``L > alpha/c`` of ``L^2 sqrt(L^2 c^2 - alpha^2) = m alpha^2 c T / (2 pi k)``."""
    p = spec.params
    return math.sqrt(solve_momentum_gap(spec) + p.alpha**2) / p.c


@dataclass(frozen=True)
class CircularOrbit:
    """``x(t) = R exp(i omega t)``; ``omega`` and ``L`` carry the sign of ``k``."""

    R: float
    omega: float
    L: float
    h: float
    spec: ProblemSpec

    @property
    def speed(self) -> float:
        return abs(self.omega) * self.R

    def position(self, t):
        t = np.asarray(t, dtype=float)
        ph = self.omega * t
        return np.stack([self.R * np.cos(ph), self.R * np.sin(ph)], axis=-1)

    def velocity(self, t):
        t = np.asarray(t, dtype=float)
        ph = self.omega * t
        w = self.omega * self.R
        return np.stack([-w * np.sin(ph), w * np.cos(ph)], axis=-1)

    def sample(self, N: int) -> Loop:
        t = np.arange(N) * self.spec.T / N
        return Loop(self.spec.T, self.position(t))


def circular_orbit(spec: ProblemSpec) -> CircularOrbit:
    p = spec.params
    y = solve_momentum_gap(spec)
    root = math.sqrt(y)
    L = math.sqrt(y + p.alpha**2) / p.c
    R = L * root / (p.m * p.alpha * p.c)
    omega = p.m * p.alpha**2 * p.c / (L * L * root)
    # m c^2 gamma - alpha/R with gamma = L c/sqrt(y) collapses to m c^2 sqrt(y)/(L c)
    h = p.m * p.c**2 * root / (L * p.c)
    sgn = spec.orientation
    return CircularOrbit(R=R, omega=sgn * omega, L=sgn * L, h=h, spec=spec)


def circular_action(spec: ProblemSpec) -> float:
    """Action level of the circular solution.

    Equal to ``m c^2 T - m^2 c^2 alpha^2 T^2 / (2 pi k L^3) + 2 pi k L``; evaluated
    as ``T [F(omega R) + alpha/R]``, which avoids the cancellation of the first
    two terms at large ``T``.
    """
    p = spec.params
    orb = circular_orbit(spec)
    y = solve_momentum_gap(spec)
    Lc = math.sqrt(y + p.alpha**2)
    # F(alpha/L) = m c^2 (1 - sqrt(y)/(L c)) = m c^2 alpha^2 / (L c (L c + sqrt(y)))
    kinetic = p.m * p.c**2 * p.alpha**2 / (Lc * (Lc + math.sqrt(y)))
    return spec.T * (kinetic + p.alpha / orb.R)


def circular_action_closed_form(spec: ProblemSpec) -> float:
    p = spec.params
    k = spec.k_abs
    L = solve_angular_momentum(spec)
    return (
        p.m * p.c**2 * spec.T
        - p.m**2 * p.c**2 * p.alpha**2 * spec.T**2 / (2.0 * math.pi * k * L**3)
        + 2.0 * math.pi * k * L
    )


def circular_action_cardano(spec: ProblemSpec) -> float:
    """Action level with ``L`` expressed through the Cardano quantity ``U(T)``."""
    p = spec.params
    k = spec.k_abs
    T = spec.T
    X = _cardano_X(spec)
    return (
        p.m * p.c**2 * T
        - p.m**2 * p.c**2 * p.alpha**2 / (2.0 * math.pi * k) * (math.sqrt(3.0) * p.c / p.alpha) ** 3 * T**2 * X**-1.5
        + 2.0 * math.pi * k * p.alpha / (math.sqrt(3.0) * p.c) * math.sqrt(X)
    )


def circular_action_asymptotic(spec: ProblemSpec) -> float:
    """Two-term large-``T`` expansion of :func:`circular_action`."""
    p = spec.params
    a = 2.0 * math.pi * p.alpha * spec.k_abs
    T = spec.T
    return 1.5 * a ** (2 / 3) * p.m ** (1 / 3) * T ** (1 / 3) + a ** (4 / 3) / (
        8.0 * p.m ** (1 / 3) * p.c**2
    ) * T ** (-1 / 3)
