"""Physical constants, the relativistic kinetic density and the phase-plane region Sigma."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """An input lies outside the domain where a formula is defined."""


class NoSuchOrbitError(DomainError):
    """A requested periodic orbit does not exist for the given data."""


class ResolutionError(DomainError):
    """A discrete loop is too coarse to resolve its winding number."""


class CollisionError(DomainError):
    """Numerical integration ran into the singularity at the origin."""

    def __init__(self, message: str, t: float):
        super().__init__(message)
        self.t = t


@dataclass(frozen=True)
class PhysicalParams:
    m: float = 1.0
    c: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        for name in ("m", "c", "alpha"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class ProblemSpec:
    """Period ``T`` and winding number ``k`` of the sought solution.

    Negative ``k`` is accepted and stored as given; ``k_abs`` and ``orientation``
    let callers work with the counterclockwise problem and reflect at the end.
    """

    T: float
    k: int
    params: PhysicalParams = PhysicalParams()

    def __post_init__(self):
        if not (math.isfinite(self.T) and self.T > 0):
            raise DomainError(f"period T must be positive, got {self.T!r}")
        if int(self.k) != self.k:
            raise DomainError(f"winding number must be an integer, got {self.k!r}")
        if self.k == 0:
            raise DomainError("winding number k = 0 has no periodic solution class here")
        object.__setattr__(self, "k", int(self.k))

    @property
    def k_abs(self) -> int:
        return abs(self.k)

    @property
    def orientation(self) -> int:
        return 1 if self.k > 0 else -1

    def positive(self) -> "ProblemSpec":
        """The same problem with counterclockwise winding."""
        return self if self.k > 0 else ProblemSpec(self.T, -self.k, self.params)


@dataclass(frozen=True)
class EnergyMomentum:
    h: float
    L: float


def kinetic_density(params: PhysicalParams, v) -> float:
    """Relativistic kinetic energy ``m c^2 (1 - sqrt(1 - |v|^2/c^2))``.

    Accepts a single 2-vector or an ``(N, 2)`` array. Speeds above ``c`` raise
    :class:`DomainError`; the boundary ``|v| = c`` is allowed.
    """
    v = np.asarray(v, dtype=float)
    s2 = np.sum(v * v, axis=-1) / params.c**2
    if np.any(s2 > 1.0):
        raise DomainError("speed exceeds c")
    # 1 - sqrt(1 - s2) written without cancellation
    out = params.m * params.c**2 * s2 / (1.0 + np.sqrt(1.0 - s2))
    return float(out) if np.ndim(out) == 0 else out


def lorentz_factor(params: PhysicalParams, v):
    v = np.asarray(v, dtype=float)
    s2 = np.sum(v * v, axis=-1) / params.c**2
    if np.any(s2 >= 1.0):
        raise DomainError("speed must be strictly below c")
    return 1.0 / np.sqrt(1.0 - s2)


def momentum_map(params: PhysicalParams, v) -> np.ndarray:
    """Gradient of :func:`kinetic_density`: ``p = m v / sqrt(1 - |v|^2/c^2)``."""
    v = np.asarray(v, dtype=float)
    gamma = lorentz_factor(params, v)
    return params.m * v * np.asarray(gamma)[..., None]


def momentum_map_inv(params: PhysicalParams, p) -> np.ndarray:
    """Velocity with momentum ``p``; defined on the whole plane, image is the open c-ball."""
    p = np.asarray(p, dtype=float)
    mc = params.m * params.c
    denom = params.m * np.sqrt(1.0 + np.sum(p * p, axis=-1) / mc**2)
    return p / np.asarray(denom)[..., None]


def in_sigma(params: PhysicalParams, em: EnergyMomentum) -> bool:
    """Whether ``(h, L)`` lies in the region of non-circular bounded motions."""
    m, c, a = params.m, params.c, params.alpha
    h, L = em.h, em.L
    if not (0.0 < h < m * c**2):
        return False
    upper = a**2 * m**2 * c**2 / (m**2 * c**4 - h**2)
    return a**2 / c**2 < L**2 < upper


def sigma_margin(params: PhysicalParams, em: EnergyMomentum) -> float:
    """Smallest relative slack of the strict inequalities defining Sigma (negative outside)."""
    m, c, a = params.m, params.c, params.alpha
    h, L2 = em.h, em.L**2
    mc2 = m * c**2
    slacks = [h / mc2, 1.0 - h / mc2, L2 * c**2 / a**2 - 1.0]
    if h < mc2:
        upper = a**2 * m**2 * c**2 / (m**2 * c**4 - h**2)
        slacks.append(1.0 - L2 / upper)
    else:
        slacks.append(-1.0)
    return min(slacks)
