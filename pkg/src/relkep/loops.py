"""Discretized T-periodic planar loops and the discrete relativistic action.

A loop is stored by its values at ``N`` uniform time nodes ``t_j = j T / N``.
Velocities come from trigonometric (FFT) differentiation and integrals from
the trapezoid rule, so both are exact for trigonometric polynomials the grid
resolves.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .core import DomainError, PhysicalParams, ResolutionError, kinetic_density

MIN_NODES = 16


@dataclass(frozen=True, eq=False)
class Loop:
    T: float
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] != 2:
            raise DomainError("loop nodes must have shape (N, 2)")
        if nodes.shape[0] < MIN_NODES:
            raise DomainError(f"a loop needs at least {MIN_NODES} nodes")
        if not self.T > 0:
            raise DomainError("loop period must be positive")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "T", float(self.T))

    @property
    def N(self) -> int:
        return self.nodes.shape[0]

    @property
    def dt(self) -> float:
        return self.T / self.N

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.N) * self.dt

    def velocities(self) -> np.ndarray:
        return spectral_derivative(self.nodes, self.T)

    def to_json(self) -> str:
        return json.dumps({"T": self.T, "nodes": self.nodes.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "Loop":
        data = json.loads(text)
        return cls(data["T"], np.asarray(data["nodes"], dtype=float))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "x", "y"])
        for t, (x, y) in zip(self.times, self.nodes):
            w.writerow([repr(float(t)), repr(float(x)), repr(float(y))])
        return buf.getvalue()


@dataclass(frozen=True)
class ActionBreakdown:
    kinetic: float
    keplerian: float
    forcing: float = 0.0
    total: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total", self.kinetic + self.keplerian + self.forcing)

    @property
    def finite(self) -> bool:
        return math.isfinite(self.total)

    def as_dict(self) -> dict:
        return {"kinetic": self.kinetic, "keplerian": self.keplerian,
                "forcing": self.forcing, "total": self.total}


def _wavenumbers(N: int, T: float) -> np.ndarray:
    kk = np.arange(N // 2 + 1, dtype=float)
    if N % 2 == 0:
        kk[-1] = 0.0  # Nyquist mode has no real derivative
    return 2j * np.pi * kk / T


def spectral_derivative(values: np.ndarray, T: float) -> np.ndarray:
    """d/dt of periodic samples along axis 0 by trigonometric interpolation."""
    N = values.shape[0]
    ik = _wavenumbers(N, T)
    shape = (-1,) + (1,) * (values.ndim - 1)
    return np.fft.irfft(np.fft.rfft(values, axis=0) * ik.reshape(shape), n=N, axis=0)


def winding_number(loop: Loop) -> int:
    """Signed number of turns of the closed polygon through the nodes.

    Raises :class:`DomainError` if a node sits at the origin and
    :class:`ResolutionError` if two consecutive nodes are half a turn or more
    apart as seen from the origin.
    """
    x = loop.nodes
    if np.any(np.hypot(x[:, 0], x[:, 1]) == 0.0):
        raise DomainError("loop passes through the origin")
    y = np.roll(x, -1, axis=0)
    cross = x[:, 0] * y[:, 1] - x[:, 1] * y[:, 0]
    dot = np.sum(x * y, axis=1)
    turns = np.arctan2(cross, dot)
    if np.any(np.abs(turns) >= math.pi * (1.0 - 1e-12)):
        raise ResolutionError("consecutive nodes turn by half a revolution or more")
    total = turns.sum() / (2.0 * math.pi)
    return int(round(total))


def min_radius(loop: Loop) -> float:
    return float(np.hypot(loop.nodes[:, 0], loop.nodes[:, 1]).min())


def max_radius(loop: Loop) -> float:
    return float(np.hypot(loop.nodes[:, 0], loop.nodes[:, 1]).max())


def max_speed(loop: Loop) -> float:
    v = loop.velocities()
    return float(np.hypot(v[:, 0], v[:, 1]).max())


def sup_bound_check(loop: Loop, params: PhysicalParams) -> bool:
    """A loop with nonzero winding and speed at most c stays in the ball of radius cT."""
    return max_radius(loop) <= params.c * loop.T


def _potential_terms(potential, t, x):
    if potential is None:
        return 0.0, None
    return np.asarray(potential.value(t, x), dtype=float), np.asarray(potential.gradient(t, x), dtype=float)


def discrete_action(params: PhysicalParams, loop: Loop, potential=None) -> ActionBreakdown:
    """Trapezoid-rule action of the loop; ``inf`` components mark infeasibility."""
    dt = loop.dt
    x = loop.nodes
    v = loop.velocities()
    s2 = np.sum(v * v, axis=1) / params.c**2
    if np.any(s2 > 1.0) or not np.all(np.isfinite(s2)):
        kinetic = math.inf
    else:
        kinetic = float(np.sum(kinetic_density(params, v)) * dt)
    r = np.hypot(x[:, 0], x[:, 1])
    keplerian = math.inf if np.any(r == 0.0) else float(np.sum(params.alpha / r) * dt)
    forcing = 0.0
    if potential is not None:
        forcing = float(np.sum(potential.value(loop.times, x)) * dt)
    return ActionBreakdown(kinetic, keplerian, forcing)


def _momenta(params: PhysicalParams, v: np.ndarray) -> np.ndarray:
    s2 = np.sum(v * v, axis=1) / params.c**2
    if np.any(s2 >= 1.0):
        raise DomainError("gradient undefined: some node speed reaches c")
    return params.m * v / np.sqrt(1.0 - s2)[:, None]


def discrete_action_gradient(params: PhysicalParams, loop: Loop, potential=None) -> np.ndarray:
    """Exact gradient of :func:`discrete_action` with respect to the nodes.

    The spectral differentiation matrix is antisymmetric, so its adjoint
    applied to the momenta is ``-D p``.
    """
    x = loop.nodes
    r = np.hypot(x[:, 0], x[:, 1])
    if np.any(r == 0.0):
        raise DomainError("gradient undefined: loop passes through the origin")
    p = _momenta(params, loop.velocities())
    g = -spectral_derivative(p, loop.T) - params.alpha * x / r[:, None] ** 3
    if potential is not None:
        g = g + np.asarray(potential.gradient(loop.times, x), dtype=float)
    return g * loop.dt


def el_defect(params: PhysicalParams, loop: Loop, potential=None) -> np.ndarray:
    """Per-node Euler-Lagrange defect ``d/dt p - (-alpha x/|x|^3 + grad U)``."""
    return -discrete_action_gradient(params, loop, potential) / loop.dt


def resample(loop: Loop, M: int) -> Loop:
    """Trigonometric interpolation of the loop onto ``M`` uniform nodes."""
    if M < MIN_NODES:
        raise DomainError(f"need at least {MIN_NODES} nodes")
    N = loop.N
    if M == N:
        return Loop(loop.T, loop.nodes.copy())
    X = np.fft.rfft(loop.nodes, axis=0)
    Y = np.zeros((M // 2 + 1, 2), dtype=complex)
    if M > N:
        Y[: N // 2 + 1] = X
        if N % 2 == 0:
            Y[N // 2] *= 0.5
    else:
        Y[:] = X[: M // 2 + 1]
        if M % 2 == 0:
            Y[M // 2] = 2.0 * Y[M // 2].real
    Y *= M / N
    return Loop(loop.T, np.fft.irfft(Y, n=M, axis=0))


def time_shift(loop: Loop, s: float) -> Loop:
    """The loop ``t -> x(t + s)`` evaluated through its trigonometric interpolant."""
    N = loop.N
    X = np.fft.rfft(loop.nodes, axis=0)
    kk = np.arange(N // 2 + 1)
    phase = np.exp(2j * np.pi * kk * s / loop.T)
    if N % 2 == 0:
        phase[-1] = math.cos(math.pi * N * s / loop.T)
    return Loop(loop.T, np.fft.irfft(X * phase[:, None], n=N, axis=0))


def rotate(loop: Loop, phi: float) -> Loop:
    c, s = math.cos(phi), math.sin(phi)
    rot = np.array([[c, -s], [s, c]])
    return Loop(loop.T, loop.nodes @ rot.T)


def reflect(loop: Loop) -> Loop:
    """Mirror image across the horizontal axis; flips the winding number."""
    return Loop(loop.T, loop.nodes * np.array([1.0, -1.0]))


def spectral_tail(loop: Loop) -> float:
    """Share of the velocity's spectral energy in the top half of the resolved
    frequencies (as a norm ratio). Small values mean the grid resolves the loop."""
    V = np.fft.rfft(loop.velocities(), axis=0)
    energy = np.sum(np.abs(V) ** 2, axis=1)
    total = energy.sum()
    if total == 0.0:
        return 0.0
    return float(math.sqrt(energy[loop.N // 4:].sum() / total))


def radial_minima_count(loop: Loop, rel_tol: float = 1e-9, circle_tol: float = 1e-6) -> int:
    """Number of strict local minima of ``j -> |x_j|`` around the loop.

    A loop whose radius varies by at most ``circle_tol * max radius`` counts as
    a circle and has no minima. Otherwise consecutive radii agreeing within
    ``rel_tol * max radius`` are merged before counting.
    """
    r = np.hypot(loop.nodes[:, 0], loop.nodes[:, 1])
    if r.max() - r.min() <= circle_tol * r.max():
        return 0
    tol = rel_tol * r.max()
    # collapse plateaus, cyclically
    d = np.diff(np.append(r, r[0]))
    signs = np.where(d > tol, 1, np.where(d < -tol, -1, 0))
    signs = signs[signs != 0]
    if signs.size == 0:
        return 0
    nxt = np.roll(signs, -1)
    return int(np.sum((signs == -1) & (nxt == 1)))
