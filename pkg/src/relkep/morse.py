"""Morse index of the circular solution by Fourier-Galerkin eigencounting.

The second variation at the circular orbit is restricted to trigonometric
polynomials of degree ``modes`` in each coordinate; negative eigenvalues of
the resulting symmetric matrix are counted and compared with the closed
index formula.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .circular import CircularOrbit, circular_orbit
from .core import ProblemSpec
from .rosette import classify


@dataclass(frozen=True)
class LinearizedCoeffs:
    """``A(t)`` (kinetic Hessian) and ``W(t)`` (potential Hessian) along the circle."""

    A: Callable
    W: Callable
    orbit: CircularOrbit


@dataclass(frozen=True)
class MorseReport:
    index: int
    nullity: int
    modes: int
    omega_prime: float
    formula_index: int
    caveat: bool = False

    def as_dict(self) -> dict:
        return asdict(self)


def linearization_coeffs(spec: ProblemSpec) -> LinearizedCoeffs:
    """Coefficients of the linearized equation ``d/dt (A q') = W q``.

    The kinetic Hessian is ``m gamma Id + (m/c^2) gamma^3 v (x) v`` with
    ``v = x_C'(t)`` the orbit velocity.
    """
    orbit = circular_orbit(spec)
    p = spec.params
    m, c, a = p.m, p.c, p.alpha
    gamma = 1.0 / math.sqrt(1.0 - (orbit.speed / c) ** 2)

    def A(t):
        v = orbit.velocity(t)
        return m / c**2 * gamma**3 * np.einsum("...i,...j->...ij", v, v) + m * gamma * np.eye(2)

    def W(t):
        x = orbit.position(t)
        R = orbit.R
        return 3.0 * a / R**5 * np.einsum("...i,...j->...ij", x, x) - a / R**3 * np.eye(2)

    return LinearizedCoeffs(A, W, orbit)


def trig_basis(T: float, modes: int, t):
    """Values and derivatives of ``1, cos(2 pi j t/T), sin(2 pi j t/T)``, ``j = 1..modes``."""
    t = np.asarray(t, dtype=float)
    nu = 2.0 * math.pi * np.arange(1, modes + 1) / T
    arg = np.multiply.outer(t, nu)
    c, s = np.cos(arg), np.sin(arg)
    one = np.ones(t.shape + (1,))
    phi = np.concatenate([one, c, s], axis=-1)
    dphi = np.concatenate([0.0 * one, -nu * s, nu * c], axis=-1)
    return phi, dphi


def galerkin_form(coeffs: LinearizedCoeffs, modes: int) -> np.ndarray:
    """Matrix ``M`` with ``tau(q) = c^T M c`` for ``q = sum c_i e_i`` in the basis
    ``trig_basis x {e_1, e_2}`` (first all x-components, then all y-components).

    ``A`` and ``W`` contain harmonics up to ``4 pi |k| / T``; the trapezoid rule
    on ``4 modes + 4|k| + 8`` nodes integrates every entry exactly.
    """
    if modes < 4:
        raise ValueError("modes must be at least 4")
    orbit = coeffs.orbit
    T = orbit.spec.T
    N = 4 * modes + 4 * orbit.spec.k_abs + 8
    t = np.arange(N) * T / N
    phi, dphi = trig_basis(T, modes, t)
    A = coeffs.A(t)
    W = coeffs.W(t)
    w = T / N
    blocks = np.empty((2, 2), dtype=object)
    for i in range(2):
        for j in range(2):
            blocks[i, j] = 0.5 * w * (
                (dphi * A[:, i, j][:, None]).T @ dphi + (phi * W[:, i, j][:, None]).T @ phi
            )
    M = np.block([[blocks[0, 0], blocks[0, 1]], [blocks[1, 0], blocks[1, 1]]])
    return 0.5 * (M + M.T)


def quadratic_form(coeffs: LinearizedCoeffs, q: Callable, dq: Callable, nodes: int = 4096) -> float:
    """``tau(q)`` by the trapezoid rule, for ``q``, ``dq`` mapping ``(N,)`` times to ``(N, 2)``."""
    T = coeffs.orbit.spec.T
    t = np.arange(nodes) * T / nodes
    qv, dqv = q(t), dq(t)
    dens = np.einsum("ti,tij,tj->t", dqv, coeffs.A(t), dqv) + np.einsum("ti,tij,tj->t", qv, coeffs.W(t), qv)
    return 0.5 * float(dens.sum()) * T / nodes


def jacobi_eigvalsh(a: np.ndarray, tol: float = 1e-15, max_sweeps: int = 60) -> np.ndarray:
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.

    Sweeps use a round-robin ordering, so each round applies ``n/2`` disjoint
    rotations at once. Iterates until the off-diagonal Frobenius norm falls
    below ``tol`` times the norm of the matrix. Returns eigenvalues in
    ascending order.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if n == 1:
        return a.diagonal().copy()
    size = n + (n % 2)
    if size != n:
        a = np.pad(a, ((0, 1), (0, 1)))
    scale = np.linalg.norm(a)
    if scale == 0:
        return np.zeros(n)
    players = list(range(size))
    for _ in range(max_sweeps):
        off = math.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0))
        if off <= tol * scale:
            break
        for _r in range(size - 1):
            half = size // 2
            P = np.array(players[:half])
            Q = np.array(players[::-1][:half])
            _rotate_pairs(a, P, Q)
            players = [players[0]] + [players[-1]] + players[1:-1]
    ev = np.diag(a).copy()
    if size != n:
        # the padding row stays decoupled at zero; drop one zero
        ev = np.delete(ev, size - 1)
    return np.sort(ev)


def _rotate_pairs(a, P, Q):
    apq = a[P, Q]
    active = apq != 0.0
    if not np.any(active):
        return
    P, Q, apq = P[active], Q[active], apq[active]
    # tan of the rotation angle, sgn(theta)/(|theta| + sqrt(theta^2 + 1)) with
    # theta = d/(2 apq), rewritten so that tiny apq cannot overflow
    d = a[Q, Q] - a[P, P]
    t = np.where(d >= 0.0, 1.0, -1.0) * 2.0 * apq / (np.abs(d) + np.hypot(d, 2.0 * apq))
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c
    rp, rq = a[P, :].copy(), a[Q, :].copy()
    a[P, :] = c[:, None] * rp - s[:, None] * rq
    a[Q, :] = s[:, None] * rp + c[:, None] * rq
    cp, cq = a[:, P].copy(), a[:, Q].copy()
    a[:, P] = cp * c - cq * s
    a[:, Q] = cp * s + cq * c
    a[P, Q] = 0.0
    a[Q, P] = 0.0


def conley_zehnder_formula(spec: ProblemSpec, int_tol: float = 1e-9) -> int:
    """Closed-form Morse index of the circular orbit from the rotation number
    ``T omega' / (2 pi) = k sqrt(1 - alpha^2 / (L^2 c^2))``."""
    orbit = circular_orbit(spec)
    p = spec.params
    L = abs(orbit.L)
    x = spec.k_abs * math.sqrt(1.0 - (p.alpha / (L * p.c)) ** 2)
    nearest = round(x)
    if nearest >= 1 and abs(x - nearest) <= int_tol * max(1.0, x):
        xi = 2 * nearest - 1
    else:
        xi = 2 * math.floor(x) + 1
    return xi - 1


def _near_threshold(spec: ProblemSpec, rel: float = 1e-9) -> bool:
    us = classify(spec).thresholds[1:-1]
    return any(abs(spec.T - u) <= rel * u for u in us)


def morse_index(spec: ProblemSpec, modes: int = 64, zero_tol: float = 1e-8, method: str = "lapack") -> MorseReport:
    """Negative and zero eigenvalue counts of the Galerkin second variation.

    ``zero_tol`` is relative to the largest eigenvalue magnitude. ``method`` is
    ``"lapack"`` or ``"jacobi"``.
    """
    if modes < 16:
        raise ValueError("modes must be at least 16")
    coeffs = linearization_coeffs(spec)
    M = galerkin_form(coeffs, modes)
    if method == "lapack":
        ev = np.linalg.eigvalsh(M)
    elif method == "jacobi":
        ev = jacobi_eigvalsh(M)
    else:
        raise ValueError(f"unknown eigen method {method!r}")
    cut = zero_tol * np.max(np.abs(ev))
    p = spec.params
    L = abs(coeffs.orbit.L)
    return MorseReport(
        index=int(np.sum(ev < -cut)),
        nullity=int(np.sum(np.abs(ev) <= cut)),
        modes=modes,
        omega_prime=p.alpha**2 * p.m / L**3,
        formula_index=2 * classify(spec).i_T,
        caveat=_near_threshold(spec),
    )
