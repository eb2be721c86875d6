import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relkep.circular import circular_action, circular_orbit
from relkep.core import DomainError, PhysicalParams, ProblemSpec
from relkep.loops import Loop, discrete_action, rotate, time_shift, winding_number
from relkep.rosette import rosette_action, rosette_orbit, sample_loop
from relkep.varsolver import (
    ForcedPotential,
    MinimizeOptions,
    convergence_study,
    el_residual,
    harmonic_forcing,
    hausdorff_node_distance,
    initial_loop,
    loop_invariants,
    minimize,
    suggest_nodes,
    symmetry_distance,
)
from relkep.core import EnergyMomentum, in_sigma
from relkep.loops import spectral_tail

P = PhysicalParams()
SPEC = ProblemSpec(8 * math.pi, 2)
I12 = 24.242796841911057


@pytest.fixture(scope="module")
def unforced_8pi():
    return minimize(SPEC, opts=MinimizeOptions(gtol=1e-10))


def test_harmonic_forcing(rng):
    U = harmonic_forcing(0.1, 10.0, q=2, phase=0.5, direction=(3.0, 4.0))
    t = np.array([0.0, 2.5])
    x = np.array([[1.0, 1.0], [2.0, -1.0]])
    d = np.array([0.6, 0.8])
    np.testing.assert_allclose(U.value(t, x), 0.1 * np.cos(2 * math.pi * 2 * t / 10 + 0.5) * (x @ d))
    assert U.periodicity_defect(rng) < 1e-12
    assert U.gradient_defect(rng) < 1e-8
    assert "q=2" in U.label
    with pytest.raises(DomainError):
        harmonic_forcing(0.1, 10.0, direction=(0.0, 0.0))


def test_custom_potential_defects(rng):
    bad = ForcedPotential(lambda t, x: np.cos(t) * x[:, 0], lambda t, x: np.zeros_like(x), period=3.0)
    assert bad.periodicity_defect(rng) > 1e-3
    assert bad.gradient_defect(rng) > 1e-3


@pytest.mark.parametrize("k", [1, 2, -3])
def test_initial_loop(k):
    spec = ProblemSpec(20.0, k)
    loop = initial_loop(spec, 128)
    assert winding_number(loop) == k
    r = np.hypot(*loop.nodes.T)
    np.testing.assert_allclose(r, 20.0 / (4 * math.pi * abs(k)))
    with pytest.raises(DomainError):
        initial_loop(spec, 32)


def test_el_residual_on_exact_orbits():
    assert el_residual(P, circular_orbit(SPEC).sample(256)) < 1e-10
    assert el_residual(P, sample_loop(rosette_orbit(SPEC, 1), 1024)) < 1e-6


def test_loop_invariants_on_rosette():
    orb = rosette_orbit(SPEC, 1)
    h, L = loop_invariants(P, sample_loop(orb, 2048))
    np.testing.assert_allclose(h, orb.h, rtol=1e-9)
    np.testing.assert_allclose(L, orb.L, rtol=1e-9)


def test_minimize_circular_case():
    spec = ProblemSpec(4 * math.pi, 1)
    rep = minimize(spec, N=256, opts=MinimizeOptions(gtol=1e-10))
    assert rep.converged and rep.winding == 1
    assert rep.action.total == pytest.approx(4 * math.pi, rel=1e-8)
    assert rep.el_residual < 1e-6
    assert rep.radial_minima == 0
    assert all(b <= a * (1 + 1e-13) for a, b in zip(rep.history, rep.history[1:]))


def test_minimize_finds_rosette(unforced_8pi):
    rep = unforced_8pi
    assert rep.converged and rep.winding == 2
    assert rep.action.total == pytest.approx(I12, rel=1e-8)
    assert rep.action.total < circular_action(SPEC)
    assert rep.el_residual <= 1e-6
    assert rep.radial_minima == 1
    orb = rosette_orbit(SPEC, 1)
    assert symmetry_distance(rep.loop, sample_loop(orb, rep.loop.N)) < 1e-4
    d = rep.as_dict(include_loop=True)
    assert d["winding"] == 2 and len(d["loop"]["nodes"]) == 512
    assert "loop" not in rep.as_dict(include_loop=False)


def test_minimize_negative_winding_mirrors():
    rep = minimize(ProblemSpec(8 * math.pi, -2), N=256, opts=MinimizeOptions(gtol=1e-9))
    assert rep.winding == -2
    assert rep.action.total == pytest.approx(I12, rel=1e-6)


def test_minimize_from_given_loop_keeps_orbit():
    loop = sample_loop(rosette_orbit(SPEC, 1), 256)
    rep = minimize(SPEC, init=loop, opts=MinimizeOptions(symmetry_break=0.0, gtol=1e-10))
    assert rep.action.total == pytest.approx(discrete_action(P, loop).total, rel=1e-10)
    assert rep.iterations <= 50


def test_minimize_rejects_bad_init():
    T = 1.0
    t = np.arange(64) * T / 64
    fast = Loop(T, np.stack([np.cos(2 * math.pi * t), np.sin(2 * math.pi * t)], axis=1))
    with pytest.raises(DomainError):
        minimize(ProblemSpec(T, 1), init=fast)


def test_forced_minimizer(unforced_8pi):
    U = harmonic_forcing(1e-2, SPEC.T, q=1)
    rep = minimize(SPEC, U, opts=MinimizeOptions(gtol=1e-10))
    assert rep.converged and rep.winding == 2
    assert rep.el_residual <= 1e-5
    assert rep.action.forcing != 0.0
    # forcing with eps = 0.01 moves the orbit by O(eps)
    assert 1e-3 < symmetry_distance(rep.loop, unforced_8pi.loop) < 0.5


def test_symmetry_distance_modulo_shift_and_rotation():
    loop = sample_loop(rosette_orbit(SPEC, 1), 256)
    moved = rotate(time_shift(loop, 3.7), 0.9)
    assert symmetry_distance(loop, moved) < 1e-9
    assert hausdorff_node_distance(loop, rotate(loop, 0.9)) < 1e-8
    assert symmetry_distance(loop, circular_orbit(SPEC).sample(256)) > 0.5
    bigger = Loop(loop.T, 1.01 * loop.nodes)
    assert hausdorff_node_distance(loop, bigger, rotation=False) == pytest.approx(
        0.01 * np.hypot(*loop.nodes.T).max(), rel=1e-2
    )


def test_minimizer_invariants_in_sigma(unforced_8pi):
    h, L = loop_invariants(P, unforced_8pi.loop)
    em = EnergyMomentum(float(np.median(h)), float(np.median(L)))
    assert in_sigma(P, em)
    orb = rosette_orbit(SPEC, 1)
    assert abs(em.h - orb.h) <= 1e-3 * orb.h
    assert abs(em.L - orb.L) <= 1e-3 * orb.L


def test_minimizer_invariants_circular_case():
    spec = ProblemSpec(4 * math.pi, 1)
    rep = minimize(spec, N=256)
    h, L = loop_invariants(P, rep.loop)
    orb = circular_orbit(spec)
    em = EnergyMomentum(float(np.median(h)), float(np.median(L)))
    assert abs(em.L - orb.L) <= 1e-3 * orb.L
    assert abs(em.h - orb.h) <= 1e-3 * orb.h


def test_minimize_escapes_exact_circle():
    # the circle is a critical point; started exactly on it with no kick, the
    # descent can only leave through the negative-curvature escape
    circle = circular_orbit(SPEC).sample(256)
    rep = minimize(SPEC, init=circle, opts=MinimizeOptions(symmetry_break=0.0))
    assert rep.action.total == pytest.approx(I12, rel=1e-6)
    assert rep.radial_minima == 1
    stuck = minimize(SPEC, init=circle, opts=MinimizeOptions(symmetry_break=0.0, escape_restarts=0))
    assert stuck.action.total == pytest.approx(circular_action(SPEC), rel=1e-8)


def test_minimize_escape_leaves_true_minimum_alone():
    spec = ProblemSpec(4 * math.pi, 1)
    a = minimize(spec, N=256, opts=MinimizeOptions(escape_restarts=0))
    b = minimize(spec, N=256)
    assert b.action.total == pytest.approx(a.action.total, rel=1e-12)


def test_stall_is_reported():
    rep = minimize(SPEC, N=256, opts=MinimizeOptions(gtol=1e-16, stall_iter=20))
    assert not rep.converged
    assert rep.message == "stalled at round-off level"
    assert rep.iterations < 20000


def test_convergence_study_settles():
    spec = ProblemSpec(4 * math.pi, 1)
    reports = convergence_study(spec, N0=128, levels=3)
    assert [r.loop.N for r in reports] == [128, 256, 512]
    actions = [r.action.total for r in reports]
    assert max(actions) - min(actions) <= 1e-10 * actions[0]
    with pytest.raises(ValueError):
        convergence_study(spec, levels=0)


def test_suggest_nodes():
    assert suggest_nodes(SPEC) == 512
    spec = ProblemSpec(40.0, 3)
    N = suggest_nodes(spec)
    assert N >= 1024 and N & (N - 1) == 0
    assert spectral_tail(sample_loop(rosette_orbit(spec, 1), N)) <= 1e-5
    assert spectral_tail(sample_loop(rosette_orbit(spec, 1), N // 2)) > 1e-5
    assert suggest_nodes(ProblemSpec(2.0, 1)) == 512


def test_initial_loop_is_not_a_solution():
    assert el_residual(P, initial_loop(SPEC, 512)) > 1e-2


@given(T=st.floats(2.0, 60.0), k=st.integers(1, 4), n_exp=st.integers(6, 8))
@settings(max_examples=12)
def test_minimize_iterates_stay_admissible(T, k, n_exp):
    spec = ProblemSpec(T, k)
    init = initial_loop(spec, 2**n_exp)
    rep = minimize(spec, init=init, opts=MinimizeOptions(max_iter=150))
    r_init = float(np.hypot(*init.nodes[0]))
    assert winding_number(rep.loop) == k
    assert np.hypot(*rep.loop.nodes.T).max() <= P.c * T + r_init
    assert np.hypot(*rep.loop.velocities().T).max() < P.c
    h = rep.history
    assert all(b <= a + 1e-13 * (1 + abs(a)) for a, b in zip(h, h[1:]))
