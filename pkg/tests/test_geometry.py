import numpy as np
import pytest

from edsim.geometry import (EPhasePoint, EPhaseTangent, apply_J,
                            commutator_identity_gap, embedding_metric,
                            fs_length_squared, functional_gradient,
                            geometry_battery, hamiltonian_flow_step,
                            kernel_expectation,
                            kernel_gradient, killing_residual, metric,
                            normalization_functional, poisson_bracket,
                            project_tgf, random_tgf_tangent, scalar_product,
                            symplectic, tgf_residuals, transition_information_metric,
                            unitary_kernel_flow)
from edsim.grids import particles_on_line, single_particle


def rand_point(k, seed=0, hbar=1.0, phase_scale=0.5):
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(10.0 * np.ones(k + 1))
    p = np.maximum(p, 5e-3)
    p /= p.sum()
    phi = phase_scale * hbar * rng.uniform(-1, 1, k + 1)
    return EPhasePoint(p, phi, hbar).canonical()


def rand_hermitian(n, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * 0.5 * (a + a.conj().T)


def test_point_validation_and_canonical_representative():
    pt = rand_point(7, seed=1)
    assert abs(pt.mean_phase) < 1e-13
    assert abs(pt.probs.sum() - 1.0) < 1e-12
    with pytest.raises(ValueError):
        EPhasePoint(np.array([0.6, 0.6]), np.zeros(2))
    with pytest.raises(ValueError):
        EPhasePoint(np.array([-0.1, 1.1]), np.zeros(2))
    with pytest.raises(ValueError):
        EPhasePoint(np.full(66, 1 / 66), np.zeros(66))
    back = EPhasePoint.from_psi(pt.psi).canonical()
    assert np.allclose(back.probs, pt.probs, atol=1e-14)
    assert np.allclose(back.phases, pt.phases, atol=1e-13)


def test_symplectic_form_components():
    rng = np.random.default_rng(2)
    v = EPhaseTangent(rng.standard_normal(5), rng.standard_normal(5))
    u = EPhaseTangent(rng.standard_normal(5), rng.standard_normal(5))
    assert symplectic(v, v) == 0.0
    assert np.isclose(symplectic(v, u), -symplectic(u, v), rtol=1e-14)
    e_p = EPhaseTangent(np.eye(5)[2], np.zeros(5))
    e_phi = EPhaseTangent(np.zeros(5), np.eye(5)[2])
    assert symplectic(e_p, e_phi) == 1.0


def test_tangent_gauge_fixing_projection():
    pt = rand_point(9, seed=3)
    rng = np.random.default_rng(4)
    raw = EPhaseTangent(rng.standard_normal(10), rng.standard_normal(10))
    v = project_tgf(pt, raw)
    res = tgf_residuals(pt, v)
    assert res[0] < 1e-13 and res[1] < 1e-13
    w = random_tgf_tangent(pt, rng)
    assert max(tgf_residuals(pt, w)) < 1e-12
    assert np.isclose(metric(pt, w, w), 1.0, rtol=1e-12)


def test_embedding_metric_reduces_to_phase_space_metric():
    pt = rand_point(11, seed=5)
    rng = np.random.default_rng(6)
    v = random_tgf_tangent(pt, rng)
    u = random_tgf_tangent(pt, rng)
    assert np.isclose(embedding_metric(pt, v, u), metric(pt, v, u),
                      rtol=1e-12)
    raw = EPhaseTangent(rng.standard_normal(12), rng.standard_normal(12))
    a_fn = lambda s: 3.0
    b_fn = lambda s: 1.5
    got = embedding_metric(pt, raw, raw, a_fn, b_fn)
    p = pt.probs
    core = np.sum(1.0 / (2 * p) * raw.dp**2 + 2 * p * raw.dphi**2)
    expect = (3.0 - 1.5) / 4 * raw.dp.sum() ** 2 + 1.5 / 2 * core
    assert np.isclose(got, expect, rtol=1e-12)


def test_fs_length_ignores_pure_gauge_directions():
    pt = rand_point(6, seed=7)
    gauge = EPhaseTangent(np.zeros(7), np.full(7, 0.37))
    assert fs_length_squared(pt, gauge) < 1e-28
    assert fs_length_squared(pt, gauge, method="minimize") < 1e-16


def test_fs_length_two_outcome_value():
    pt = EPhasePoint(np.array([0.5, 0.5]), np.zeros(2))
    eps = 1e-3
    v = EPhaseTangent(np.array([eps, -eps]), np.zeros(2))
    assert np.isclose(fs_length_squared(pt, v), 2.0 * eps**2, rtol=1e-12)


def test_fs_length_closed_form_equals_minimization():
    for seed in range(5):
        pt = rand_point(16, seed=seed)
        rng = np.random.default_rng(100 + seed)
        v = EPhaseTangent(project_tgf(pt, EPhaseTangent(
            rng.standard_normal(17), np.zeros(17))).dp,
            rng.standard_normal(17))
        closed = fs_length_squared(pt, v)
        minimized = fs_length_squared(pt, v, method="minimize")
        assert abs(closed - minimized) < 1e-10 * max(closed, 1.0)


def test_fs_length_rejects_variation_on_dead_outcome():
    pt = EPhasePoint(np.array([0.0, 0.5, 0.5]), np.zeros(3))
    v = EPhaseTangent(np.array([1e-3, -1e-3, 0.0]), np.zeros(3))
    with pytest.raises(ValueError):
        fs_length_squared(pt, v)


def test_complex_structure_squares_to_minus_one():
    pt = rand_point(12, seed=8)
    rng = np.random.default_rng(9)
    for _ in range(5):
        v = random_tgf_tangent(pt, rng)
        jv = apply_J(pt, v)
        jjv = apply_J(pt, jv)
        assert np.max(np.abs(jjv.dp + v.dp)) < 1e-10
        assert np.max(np.abs(jjv.dphi + v.dphi)) < 1e-10


def test_complex_structure_is_compatible_with_metric_and_form():
    pt = rand_point(10, seed=10)
    rng = np.random.default_rng(11)
    for _ in range(5):
        v = random_tgf_tangent(pt, rng)
        u = random_tgf_tangent(pt, rng)
        jv = apply_J(pt, v)
        assert np.isclose(metric(pt, jv, jv), metric(pt, v, v), rtol=1e-10)
        assert np.isclose(metric(pt, jv, u), symplectic(v, u), rtol=0,
                          atol=1e-10)


def test_complex_structure_closes_on_gauge_fixed_vectors():
    pt = rand_point(8, seed=12)
    rng = np.random.default_rng(13)
    v = random_tgf_tangent(pt, rng)
    jv = apply_J(pt, v, check_tgf=False)
    assert max(tgf_residuals(pt, jv)) < 1e-13


def test_poisson_bracket_canonical_pairs():
    pt = rand_point(5, seed=14)
    f = lambda p, phi: float(p[2])
    g = lambda p, phi: float(phi[2])
    assert np.isclose(poisson_bracket(f, g, pt), 1.0, rtol=1e-10)
    assert poisson_bracket(f, f, pt) == 0.0
    g_other = lambda p, phi: float(phi[3])
    assert abs(poisson_bracket(f, g_other, pt)) < 1e-12


def test_normalization_generator_commutes_with_kernel_expectations():
    pt = rand_point(6, seed=15)
    h = kernel_expectation(rand_hermitian(7, seed=16))
    pb = poisson_bracket(normalization_functional, h, pt)
    assert abs(pb) < 1e-8


def test_flow_of_normalization_constraint_shifts_phases():
    pt = rand_point(5, seed=17)
    moved = hamiltonian_flow_step(normalization_functional, pt, 0.3,
                                  recenter=False)
    assert np.allclose(moved.probs, pt.probs, atol=1e-12)
    assert np.allclose(moved.phases, pt.phases + 0.3, atol=1e-10)
    canonical = hamiltonian_flow_step(normalization_functional, pt, 0.3)
    assert np.allclose(canonical.phases, pt.phases, atol=1e-10)
    assert np.isclose(canonical.meta["gauge_shift"], 0.3, atol=1e-10)


def test_flow_zero_step_is_identity():
    pt = rand_point(4, seed=18)
    h = kernel_expectation(rand_hermitian(5, seed=19))
    same = hamiltonian_flow_step(h, pt, 0.0)
    assert np.allclose(same.probs, pt.probs, atol=1e-14)
    assert np.allclose(same.phases, pt.phases, atol=1e-12)


def test_flow_rejects_steps_leaving_the_simplex():
    pt = EPhasePoint(np.array([0.01, 0.99]), np.zeros(2))
    f = lambda p, phi: float(-5.0 * phi[0])
    with pytest.raises(ValueError, match="d_lambda"):
        hamiltonian_flow_step(f, pt, 0.01)
    with pytest.raises(ValueError, match="simplex"):
        hamiltonian_flow_step(f, pt, 1e-3)


def test_flow_matches_unitary_evolution_to_second_order():
    pt = rand_point(3, seed=20)
    q = rand_hermitian(4, seed=21)
    f = kernel_expectation(q)
    errs = []
    for dlam in (2e-2, 1e-2, 5e-3):
        euler = hamiltonian_flow_step(f, pt, dlam).canonical()
        exact = unitary_kernel_flow(pt, q, dlam).canonical()
        errs.append(np.linalg.norm(euler.psi - exact.psi))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.15)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.15)
    assert errs[2] < 1e-4


def test_killing_residual_separates_isometries():
    pt = rand_point(8, seed=22)
    hermitian = kernel_expectation(rand_hermitian(9, seed=23))
    assert killing_residual(hermitian, pt, n_probes=10, seed=1) < 1e-6
    quadratic = lambda p, phi: float(np.sum(p**2))
    assert killing_residual(quadratic, pt, n_probes=10, seed=1) > 1e-3
    # the normalization constraint is a pure gauge shift: residual is exactly
    # zero with its analytic gradient, and finite-difference noise otherwise
    n_grad = lambda p, phi: (-np.ones_like(p), np.zeros_like(phi))
    assert killing_residual(normalization_functional, pt,
                            n_probes=5, seed=1, grad=n_grad) < 1e-14
    assert killing_residual(normalization_functional, pt,
                            n_probes=5, seed=1) < 1e-7


def test_analytic_kernel_gradient_matches_finite_differences():
    pt = rand_point(7, seed=31)
    q = rand_hermitian(8, seed=32)
    gp, gphi = kernel_gradient(q)(pt.probs, pt.phases)
    fp, fphi = functional_gradient(kernel_expectation(q), pt)
    assert np.max(np.abs(gp - fp)) < 1e-5
    assert np.max(np.abs(gphi - fphi)) < 1e-8


def test_directed_probes_catch_concentrated_violations():
    # a functional quadratic in a single high-weight outcome produces a
    # Lie derivative supported on that coordinate alone; random probes
    # spread over all outcomes dilute it but directed self-pairs do not
    pt = rand_point(40, seed=33)
    j = int(np.argmax(pt.probs))
    local = lambda p, phi: float(p[j] ** 2)
    g = killing_residual(local, pt, n_probes=10, seed=2, directed=True)
    assert g > 1e-3


def test_scalar_product_reduces_to_complex_inner_product():
    rng = np.random.default_rng(24)
    for hbar in (1.0, 0.7):
        a = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        b = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        got = scalar_product(a, b, hbar)
        assert abs(got - np.vdot(a, b)) < 1e-12 * np.abs(np.vdot(a, b))
    norm = scalar_product(a, a, 1.0)
    assert abs(norm.imag) < 1e-14 and norm.real > 0
    e0, e1 = np.eye(4)[0], np.eye(4)[1]
    assert abs(scalar_product(e0, e1)) < 1e-15


def test_bracket_equals_commutator_expectation():
    pt = rand_point(3, seed=25)
    u = rand_hermitian(4, seed=26)
    v = rand_hermitian(4, seed=27)
    assert commutator_identity_gap(u, v, pt) < 1e-6
    same = commutator_identity_gap(u, u, pt)
    assert same < 1e-8


def test_information_metric_single_particle_value():
    sys1 = single_particle(mass=1.0, eta=1.0, gamma_exponent=3.0)
    rep = transition_information_metric(sys1, dt=0.1)
    assert abs(rep["gamma_matrix"][0, 0] - 1000.0) < 10.0
    assert rep["max_rel_deviation"] < 0.01
    assert abs(rep["mass_normalization"] - 1.0) < 1e-9


def test_information_metric_mass_tensor_structure():
    sys2 = particles_on_line([1.0, 2.0], eta=0.5, gamma_exponent=3.0)
    rep = transition_information_metric(sys2, dt=0.1)
    g = rep["gamma_matrix"]
    assert abs(g[1, 1] / g[0, 0] - 2.0) < 0.01
    assert rep["off_diagonal_max"] < 1e-6 * g.max()
    expected = 1.0 / (0.5 * 0.1**3)
    assert abs(g[0, 0] - expected) < 0.01 * expected


def test_information_metric_with_drift_field_stays_close():
    sys1 = single_particle(mass=1.0, eta=1.0, gamma_exponent=3.0)
    dt = 0.01
    mean_fn = lambda x: 0.2 * np.tanh(x) * dt
    rep = transition_information_metric(sys1, dt=dt, mean_fn=mean_fn)
    assert rep["max_rel_deviation"] < 0.01


def test_functional_gradient_noise_floor():
    pt = rand_point(5, seed=28)
    f = kernel_expectation(rand_hermitian(6, seed=29))
    dp1, dphi1 = functional_gradient(f, pt, h_fd=1e-5)
    dp2, dphi2 = functional_gradient(f, pt, h_fd=2e-5)
    assert np.max(np.abs(dp1 - dp2)) < 1e-8
    assert np.max(np.abs(dphi1 - dphi2)) < 1e-8


def test_battery_passes_at_small_scale():
    rep = geometry_battery(outcomes=12, probes=25, kernels=4, seed=5)
    assert rep["all_passed"]
    assert rep["j_squared_max_dev"] < 1e-10
    assert rep["killing_hermitian_max"] < 1e-6
    assert rep["killing_counterexample"] > 1e-3
    assert rep["commutator_identity_max_gap"] < 1e-6
    assert rep["normalization_flow_ok"]
