"""Direct minimization of the discrete action over loops with a fixed winding number."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import DomainError, PhysicalParams, ProblemSpec
from .loops import (
    ActionBreakdown,
    Loop,
    discrete_action,
    discrete_action_gradient,
    el_defect,
    max_speed,
    min_radius,
    radial_minima_count,
    resample,
    spectral_tail,
    rotate,
    time_shift,
    winding_number,
)
from .rosette import classify, rosette_orbit, sample_loop


@dataclass(frozen=True)
class ForcedPotential:
    """Time-periodic potential ``U(t, x)`` added to the Keplerian term.

    ``value(t, x)`` maps times of shape ``(N,)`` and points of shape ``(N, 2)`` to
    ``(N,)``; ``gradient`` returns the x-gradient with shape ``(N, 2)``.
    """

    value: Callable
    gradient: Callable
    period: float
    label: str = "custom"

    def periodicity_defect(self, rng, samples: int = 64, scale: float = 10.0) -> float:
        t = rng.uniform(0.0, self.period, samples)
        x = rng.uniform(-scale, scale, (samples, 2))
        return float(np.max(np.abs(self.value(t + self.period, x) - self.value(t, x))))

    def gradient_defect(self, rng, samples: int = 32, scale: float = 10.0, step: float = 1e-6) -> float:
        """Largest relative mismatch between ``gradient`` and central differences of ``value``."""
        t = rng.uniform(0.0, self.period, samples)
        x = rng.uniform(-scale, scale, (samples, 2))
        g = np.asarray(self.gradient(t, x))
        fd = np.empty_like(g)
        for i in range(2):
            e = np.zeros(2)
            e[i] = step
            fd[:, i] = (self.value(t, x + e) - self.value(t, x - e)) / (2 * step)
        return float(np.max(np.abs(g - fd)) / (1.0 + np.max(np.abs(g))))


def harmonic_forcing(eps: float, T: float, q: int = 1, phase: float = 0.0, direction=(1.0, 0.0)) -> ForcedPotential:
    """``U(t, x) = eps cos(2 pi q t / T + phase) <d, x>`` with ``d`` normalized."""
    d = np.asarray(direction, dtype=float)
    norm = np.hypot(*d)
    if norm == 0:
        raise DomainError("forcing direction must be nonzero")
    d = d / norm
    w = 2.0 * math.pi * q / T

    def value(t, x):
        return eps * np.cos(w * np.asarray(t) + phase) * (np.asarray(x) @ d)

    def gradient(t, x):
        amp = eps * np.cos(w * np.asarray(t) + phase)
        return amp[..., None] * d

    label = f"eps={eps!r},q={q},phase={phase!r},direction={d.tolist()}"
    return ForcedPotential(value, gradient, T, label)


@dataclass(frozen=True)
class MinimizeOptions:
    gtol: float = 1e-8
    max_iter: int = 20000
    memory: int = 12
    # relative size of a one-lobe radial modulation added to the initial loop;
    # a uniform circle is invariant under the descent flow and would never leave it
    symmetry_break: float = 1e-3
    speed_margin: float = 1e-9
    max_backtracks: int = 60
    armijo: float = 1e-4
    # relative size of action changes treated as summation noise
    roundoff: float = 1e-13
    # spectral tail above which the final loop is reported as under-resolved
    resolution_tol: float = 1e-4
    # after convergence, re-perturb along the one-lobe mode and descend again;
    # catches iterates that stalled next to a saddle
    escape_restarts: int = 2
    # iterations without progress (action decrease beyond roundoff or the
    # gradient norm halving) before giving up
    stall_iter: int = 2000


@dataclass(frozen=True, eq=False)
class MinimizeReport:
    loop: Loop
    action: ActionBreakdown
    grad_norm: float
    iterations: int
    converged: bool
    el_residual: float
    winding: int
    message: str = ""
    history: tuple = field(default=(), repr=False)
    resolution: float = 0.0
    resolved: bool = True

    @property
    def radial_minima(self) -> int:
        return radial_minima_count(self.loop)

    def as_dict(self, include_loop: bool = True) -> dict:
        out = {
            "action": self.action.as_dict(),
            "grad_norm": self.grad_norm,
            "iterations": self.iterations,
            "converged": self.converged,
            "el_residual": self.el_residual,
            "winding": self.winding,
            "radial_minima": self.radial_minima,
            "message": self.message,
            "nodes": self.loop.N,
            "resolution": self.resolution,
            "resolved": self.resolved,
        }
        if include_loop:
            out["loop"] = {"T": self.loop.T, "nodes": self.loop.nodes.tolist()}
        return out


def initial_loop(spec: ProblemSpec, N: int) -> Loop:
    """Circle of radius ``c T / (4 pi |k|)`` run ``k`` times; its speed is ``c / 2``."""
    if N < 64:
        raise DomainError("initial_loop needs N >= 64")
    p = spec.params
    rho = p.c * spec.T / (4.0 * math.pi * spec.k_abs)
    t = np.arange(N) * spec.T / N
    ph = 2.0 * math.pi * spec.k * t / spec.T
    return Loop(spec.T, np.stack([rho * np.cos(ph), rho * np.sin(ph)], axis=1))


def el_residual(params: PhysicalParams, loop: Loop, potential=None) -> float:
    """Sup norm of the discrete Euler-Lagrange defect in units of ``alpha / r_min^2``."""
    r_min = min_radius(loop)
    defect = el_defect(params, loop, potential)
    return float(np.max(np.hypot(defect[:, 0], defect[:, 1])) / (params.alpha / r_min**2))


class _Objective:
    def __init__(self, params, T, N, potential, k, speed_limit):
        self.params = params
        self.T = T
        self.N = N
        self.potential = potential
        self.k = k
        self.speed_limit = speed_limit
        self.dt = T / N

    def loop(self, z):
        return Loop(self.T, z.reshape(self.N, 2))

    def feasible_value(self, z):
        """Action at ``z`` or ``None`` when ``z`` leaves the admissible set."""
        loop = self.loop(z)
        if not np.all(np.isfinite(loop.nodes)):
            return None
        if min_radius(loop) == 0.0 or max_speed(loop) >= self.speed_limit:
            return None
        try:
            if winding_number(loop) != self.k:
                return None
        except DomainError:
            return None
        a = discrete_action(self.params, loop, self.potential)
        return a.total if a.finite else None

    def grad(self, z):
        return discrete_action_gradient(self.params, self.loop(z), self.potential).ravel()


def _sobolev_weights(params: PhysicalParams, T: float, N: int, sigma: float) -> np.ndarray:
    dt = T / N
    kk = np.arange(N // 2 + 1, dtype=float)
    if N % 2 == 0:
        kk[-1] = 0.0
    w = (2.0 * math.pi * kk / T) ** 2
    return dt * (params.m * w + sigma)


def _precondition(v, weights, N):
    V = np.fft.rfft(v.reshape(N, 2), axis=0) / weights[:, None]
    return np.fft.irfft(V, n=N, axis=0).ravel()


def _modulate(nodes, T, t, eps):
    return nodes * (1.0 + eps * np.cos(2.0 * math.pi * t / T))[:, None]


def _escape_point(obj, z, T, f):
    """Best admissible point along a negative-curvature one-lobe direction at ``z``.

    The Hessian is projected (by central differences of the gradient) onto the
    radial and tangential displacements ``x cos``, ``x sin``, ``Jx cos``,
    ``Jx sin`` of one lobe per period. If the projection has a negative
    eigenvalue, amplitudes up to ``0.9`` of either sign along its eigenvector are
    scanned. Returns ``(None, f)`` when nothing lowers the action.
    """
    loop = obj.loop(z)
    x = loop.nodes
    M = 2.0 * math.pi * loop.times / T
    Jx = np.column_stack([-x[:, 1], x[:, 0]])
    basis = [x * np.cos(M)[:, None], x * np.sin(M)[:, None], Jx * np.cos(M)[:, None], Jx * np.sin(M)[:, None]]
    V = np.array([b.ravel() for b in basis])
    h = 1e-5
    HV = []
    for v in V:
        zp, zm = z + h * v, z - h * v
        if obj.feasible_value(zp) is None or obj.feasible_value(zm) is None:
            return None, f
        HV.append((obj.grad(zp) - obj.grad(zm)) / (2.0 * h))
    H = V @ np.array(HV).T
    w, U = np.linalg.eigh(0.5 * (H + H.T))
    if w[0] >= 0.0:
        return None, f
    d = U[:, 0] @ V
    d = d / np.max(np.hypot(*d.reshape(-1, 2).T) / np.hypot(x[:, 0], x[:, 1]))
    best, fbest = None, f
    for eps in np.geomspace(1e-3, 0.9, 24):
        for sign in (1.0, -1.0):
            trial = z + sign * eps * d
            ft = obj.feasible_value(trial)
            if ft is not None and ft < fbest:
                best, fbest = trial, ft
    return best, fbest


def _descend(obj, z, f, weights, opts, max_iter):
    """L-BFGS iterations from an admissible ``z``; returns the final state and bookkeeping."""
    N = obj.N
    g = obj.grad(z)
    history = [f]
    s_list, y_list = [], []
    it = 0
    converged = False
    message = "max_iter reached"
    best, best_g, best_it = f, math.inf, 0
    for it in range(1, max_iter + 1):
        gnorm = float(np.linalg.norm(g)) / math.sqrt(obj.dt)
        if gnorm < 0.5 * best_g:
            best_g, best_it = gnorm, it
        if gnorm <= opts.gtol * (1.0 + abs(f)):
            converged = True
            message = "gradient tolerance reached"
            it -= 1
            break
        if it - best_it > opts.stall_iter:
            message = "stalled at round-off level"
            it -= 1
            break
        d = _lbfgs_direction(g, s_list, y_list, weights, N)
        if d @ g >= 0:
            s_list.clear()
            y_list.clear()
            d = -_precondition(g, weights, N)
        accepted = _line_search(obj, z, f, g, d, opts)
        if accepted is None and s_list:
            s_list.clear()
            y_list.clear()
            d = -_precondition(g, weights, N)
            accepted = _line_search(obj, z, f, g, d, opts)
        if accepted is None:
            message = "line search failed"
            it -= 1
            break
        z_new, f_new, g_new = accepted
        s, y = z_new - z, g_new - g
        if s @ y > 1e-16 * np.linalg.norm(s) * np.linalg.norm(y):
            s_list.append(s)
            y_list.append(y)
            if len(s_list) > opts.memory:
                s_list.pop(0)
                y_list.pop(0)
        z, f, g = z_new, f_new, g_new
        history.append(f)
        if f < best - 10.0 * opts.roundoff * max(1.0, abs(best)):
            best, best_it = f, it
    return z, f, g, it, converged, message, history


def minimize(spec: ProblemSpec, potential=None, init: Loop | None = None,
             opts: MinimizeOptions | None = None, N: int = 512) -> MinimizeReport:
    """Minimize the discrete action over loops of winding ``spec.k``.

    Limited-memory BFGS with a Fourier (H^1-type) preconditioner and a
    backtracking search. ``grad_norm`` is the L^2(0, T) norm of the action's
    gradient, i.e. of the Euler-Lagrange defect, so the stopping test does not
    loosen as ``N`` grows. Trial points that are non-finite, reach the speed
    ``c (1 - speed_margin)``, touch the origin or change the winding number are
    rejected, so every accepted iterate is admissible; the action never
    increases by more than ``opts.roundoff`` relative.
    """
    opts = opts or MinimizeOptions()
    params = spec.params
    if init is None:
        init = initial_loop(spec, N)
    N = init.N
    nodes = init.nodes.copy()
    if opts.symmetry_break:
        t = init.times
        nodes = _modulate(nodes, spec.T, t, opts.symmetry_break)
    obj = _Objective(params, spec.T, N, potential, spec.k, params.c * (1.0 - opts.speed_margin))
    z = nodes.ravel()
    f = obj.feasible_value(z)
    if f is None:
        raise DomainError("initial loop is not admissible (winding, speed or finiteness)")
    rho = max(np.hypot(nodes[:, 0], nodes[:, 1]).mean(), 1e-300)
    weights = _sobolev_weights(params, spec.T, N, params.alpha / rho**3)
    z, f, g, it, converged, message, history = _descend(obj, z, f, weights, opts, opts.max_iter)
    for _ in range(opts.escape_restarts):
        if message == "line search failed" or it >= opts.max_iter:
            break
        kicked, fk = _escape_point(obj, z, spec.T, f)
        if kicked is None:
            break
        z2, f2, g2, it2, conv2, msg2, hist2 = _descend(obj, kicked, fk, weights, opts, opts.max_iter - it)
        it += it2
        if f2 < f - 1e2 * opts.roundoff * max(1.0, abs(f)):
            z, f, g, converged, message = z2, f2, g2, conv2, msg2
            history.extend(hist2)
        else:
            break
    loop = obj.loop(z)
    gnorm = float(np.linalg.norm(g)) / math.sqrt(obj.dt)
    if not converged and gnorm <= opts.gtol * (1.0 + abs(f)):
        converged = True
    tail = spectral_tail(loop)
    return MinimizeReport(
        loop=loop,
        action=discrete_action(params, loop, potential),
        grad_norm=gnorm,
        iterations=it,
        converged=converged,
        el_residual=el_residual(params, loop, potential),
        winding=winding_number(loop),
        message=message,
        history=tuple(history),
        resolution=tail,
        resolved=tail <= opts.resolution_tol,
    )


def suggest_nodes(spec: ProblemSpec, tail_tol: float = 1e-5, n_min: int = 512, n_max: int = 16384) -> int:
    """Grid size for :func:`minimize`.

    When rosettes exist the unforced minimizer is the ``(1, |k|)`` rosette,
    whose pericentre passage can be much shorter than ``T / 512``; the grid is
    doubled from ``n_min`` until that orbit's :func:`spectral_tail` drops below
    ``tail_tol``. Otherwise ``n_min`` is returned.
    """
    if classify(spec).i_T == 0:
        return n_min
    orbit = rosette_orbit(spec, 1)
    N = n_min
    while N < n_max and spectral_tail(sample_loop(orbit, N)) > tail_tol:
        N *= 2
    return N


def convergence_study(spec: ProblemSpec, potential=None, N0: int = 512, levels: int = 3,
                      opts: MinimizeOptions | None = None) -> list:
    """Minimize on ``N0, 2 N0, ...`` nodes, each level started from the previous
    minimizer resampled; returns one report per level.

    Successive actions settling is the practical test that ``N0`` was fine enough.
    """
    if levels < 1:
        raise ValueError("levels must be at least 1")
    reports = [minimize(spec, potential, opts=opts, N=N0)]
    for _ in range(levels - 1):
        prev = reports[-1].loop
        reports.append(minimize(spec, potential, init=resample(prev, 2 * prev.N), opts=opts))
    return reports


def _lbfgs_direction(g, s_list, y_list, weights, N):
    q = g.copy()
    alphas = []
    for s, y in zip(reversed(s_list), reversed(y_list)):
        a = (s @ q) / (y @ s)
        alphas.append(a)
        q -= a * y
    r = _precondition(q, weights, N)
    if s_list:
        s, y = s_list[-1], y_list[-1]
        r *= (s @ y) / (y @ _precondition(y, weights, N))
    for (s, y), a in zip(zip(s_list, y_list), reversed(alphas)):
        b = (y @ r) / (y @ s)
        r += (a - b) * s
    return -r


def _line_search(obj, z, f, g, d, opts):
    """Backtracking search; returns ``(z, f, grad)`` or ``None``.

    Besides the Armijo test, a trial whose action differs from ``f`` by no more
    than round-off is accepted when the approximate Wolfe conditions hold for
    its directional derivative; near a minimizer Armijo alone cannot tell the
    decrease apart from summation noise.
    """
    slope = float(g @ d)
    noise = opts.roundoff * (1.0 + abs(f))
    step = 1.0
    for _ in range(opts.max_backtracks):
        trial = z + step * d
        f_trial = obj.feasible_value(trial)
        if f_trial is None:
            step *= 0.25
            continue
        if f_trial <= f + opts.armijo * step * slope:
            return trial, f_trial, obj.grad(trial)
        if f_trial <= f + noise:
            g_trial = obj.grad(trial)
            dd = float(g_trial @ d)
            if 0.9 * slope <= dd <= -0.8 * slope:
                return trial, f_trial, g_trial
        step *= 0.5
    return None


def loop_invariants(params: PhysicalParams, loop: Loop):
    """Per-node energy and angular momentum of a loop, using its spectral velocity."""
    x = loop.nodes
    v = loop.velocities()
    s2 = np.sum(v * v, axis=1) / params.c**2
    gamma = 1.0 / np.sqrt(1.0 - s2)
    p = params.m * v * gamma[:, None]
    r = np.hypot(x[:, 0], x[:, 1])
    h = params.m * params.c**2 * gamma - params.alpha / r
    L = x[:, 0] * p[:, 1] - x[:, 1] * p[:, 0]
    return h, L


def symmetry_distance(a: Loop, b: Loop) -> float:
    """Sup distance between two loops modulo time translation and rotation.

    ``min over (s, phi) of max_j |a(t_j) - R_phi b(t_j + s)|``, with ``b`` shifted
    through its trigonometric interpolant. Both loops must share ``T``.
    """
    from scipy.optimize import minimize as _nm

    if b.N != a.N:
        b = resample(b, a.N)
    za = a.nodes[:, 0] + 1j * a.nodes[:, 1]
    zb = b.nodes[:, 0] + 1j * b.nodes[:, 1]
    best = (math.inf, 0.0, 0.0)
    for shift in range(a.N):
        zr = np.roll(zb, -shift)
        phi = float(np.angle(np.vdot(zr, za)))
        dist = float(np.max(np.abs(za - np.exp(1j * phi) * zr)))
        if dist < best[0]:
            best = (dist, shift * a.dt, phi)

    def sup(params_):
        s, phi = params_
        bb = rotate(time_shift(b, s), phi)
        return float(np.max(np.hypot(*(a.nodes - bb.nodes).T)))

    res = _nm(sup, x0=[best[1], best[2]], method="Nelder-Mead",
              options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
    return min(best[0], float(res.fun))


def hausdorff_node_distance(a: Loop, b: Loop, rotation: bool = True) -> float:
    """Hausdorff distance between the node sets of two loops.

    Node sets ignore time parametrization; with ``rotation`` the distance is
    also minimized over rotations of ``b`` about the origin.
    """
    from scipy.optimize import minimize_scalar
    from scipy.spatial.distance import directed_hausdorff

    def dist(phi):
        bb = b.nodes if phi == 0.0 else rotate(b, phi).nodes
        return max(directed_hausdorff(a.nodes, bb)[0], directed_hausdorff(bb, a.nodes)[0])

    if not rotation:
        return float(dist(0.0))
    grid = np.linspace(0.0, 2.0 * math.pi, 181)[:-1]
    vals = [dist(phi) for phi in grid]
    i = int(np.argmin(vals))
    h = grid[1] - grid[0]
    # the distance has a kink at its minimum, where golden section still converges
    res = minimize_scalar(dist, bracket=(grid[i] - h, grid[i], grid[i] + h), method="golden",
                          options={"xtol": 1e-13})
    return float(min(vals[i], res.fun))
