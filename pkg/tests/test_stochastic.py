import numpy as np
import pytest

from edsim.grids import ConfigGrid, ScalarField, single_particle
from edsim.quantum import (WaveState, evolve_trajectory, free_potentials,
                           gaussian_packet, madelung)
from edsim.stochastic import (Ensemble, TransitionParams,
                              bohmian_trajectories, center_of_mass_report,
                              draw_initial_positions, drift_velocity_field,
                              fluctuation_covariance, interpolate_vector,
                              max_deviation_from_deterministic, noise_sigmas,
                              path_length_scaling, sample_step,
                              scaling_exponent, simulate_ensemble, with_eta)


def test_params_labels_and_validation():
    assert TransitionParams(0.1, 1e-3, 1.0).process_label == "ES"
    assert TransitionParams(0.1, 1e-3, 3.0).process_label == "OU"
    assert TransitionParams(0.1, 1e-3, 2.5).process_label == "fractional"
    with pytest.raises(ValueError):
        TransitionParams(-0.1, 1e-3, 1.0)
    with pytest.raises(ValueError):
        TransitionParams(0.1, -1e-3, 1.0)
    with pytest.raises(ValueError):
        TransitionParams(0.1, 1e-3, 0.0)
    sys1 = single_particle(mass=2.0, eta=1e-4, gamma_exponent=3.0)
    p = TransitionParams.from_system(sys1, 0.05)
    assert p.eta == 1e-4 and p.process_label == "OU"


def test_noise_sigma_formula():
    sys1 = single_particle(dim=1, mass=2.0, eta=1e-3, gamma_exponent=3.0)
    p = TransitionParams(0.01, 1e-3, 3.0)
    sig = noise_sigmas(sys1, p)
    assert np.allclose(sig, np.sqrt(1e-3 * 0.01**3 / 2.0), rtol=1e-14)


def test_with_eta_replaces_only_noise_constants():
    sys1 = single_particle(mass=1.5, eta=1e-3)
    sys2 = with_eta(sys1, 1e-6, gamma_exponent=1.0)
    assert sys2.eta == 1e-6 and sys2.gamma_exponent == 1.0
    assert sys2.masses == sys1.masses


def test_interpolation_exact_for_linear_fields():
    grid = ConfigGrid((40, 32), (4.0, 3.2), (False, False))
    xx, yy = grid.meshgrid()
    values = np.stack([2.0 * xx + 3.0 * yy - 1.0, xx * yy])
    rng = np.random.default_rng(3)
    lo = [grid.axis_coords(a)[0] for a in range(2)]
    hi = [grid.axis_coords(a)[-1] for a in range(2)]
    pts = np.column_stack([rng.uniform(lo[a], hi[a], 300) for a in range(2)])
    out = interpolate_vector(grid, values, pts)
    expect = np.column_stack([2 * pts[:, 0] + 3 * pts[:, 1] - 1,
                              pts[:, 0] * pts[:, 1]])
    assert np.max(np.abs(out - expect)) < 1e-12


def test_interpolation_periodic_wrap_and_clamp():
    grid = ConfigGrid((16,), (8.0,), (True,), origin=(-4.0,))
    values = np.stack([np.full(16, 2.5)])
    pts = np.array([[-3.97], [3.99], [0.0], [7.5]])
    out = interpolate_vector(grid, values, pts)
    assert np.allclose(out, 2.5, rtol=1e-14)
    gridw = ConfigGrid((16,), (8.0,), (False,), origin=(-4.0,))
    xs = gridw.axis_coords(0)
    vals = np.stack([xs.copy()])
    outside = interpolate_vector(gridw, vals, np.array([[-5.0], [5.0]]))
    assert np.allclose(outside[:, 0], [xs[0], xs[-1]], rtol=1e-14)


def test_initial_draw_matches_density_moments():
    grid = ConfigGrid((128,), (16.0,), (True,), origin=(-8.0,))
    state = gaussian_packet(grid, center=0.5, sigma=1.2)
    rng = np.random.default_rng(11)
    m = 200_000
    pos = draw_initial_positions(state, m, rng)
    x = grid.axis_coords(0)
    p = state.rho / state.rho.sum()
    mean_ref = float(np.sum(p * x))
    var_ref = float(np.sum(p * (x - mean_ref) ** 2)) + grid.spacing[0] ** 2 / 12
    se_mean = np.sqrt(var_ref / m)
    assert abs(pos[:, 0].mean() - mean_ref) < 5 * se_mean
    assert abs(np.var(pos[:, 0]) - var_ref) < 5 * var_ref * np.sqrt(2.0 / m)


def test_sample_step_zero_noise_moves_by_drift():
    grid = ConfigGrid((64,), (8.0,), (False,), origin=(0.0,))
    x = grid.axis_coords(0)
    from edsim.grids import VectorField
    drift = VectorField(grid, np.stack([0.5 * x + 0.1]))
    sys1 = single_particle(eta=1e-3)
    p = TransitionParams(0.2, 1e-3, 3.0)
    pos = np.array([[2.0], [4.0], [6.0]])
    rng = np.random.default_rng(0)
    new, diag = sample_step(pos, drift, p, sys1, rng,
                            noise=np.zeros_like(pos))
    assert np.allclose(new[:, 0], pos[:, 0] + 0.2 * (0.5 * pos[:, 0] + 0.1),
                       rtol=1e-12)
    assert not diag["escaped"].any()


def test_sample_step_flags_escapes_at_hard_walls():
    grid = ConfigGrid((32,), (4.0,), (False,), origin=(0.0,))
    from edsim.grids import VectorField
    drift = VectorField(grid, np.zeros((1, 32)))
    sys1 = single_particle(eta=1.0, gamma_exponent=1.0)
    p = TransitionParams(0.1, 1.0, 1.0)
    pos = np.array([[3.9], [2.0]])
    noise = np.array([[3.0], [0.0]])
    rng = np.random.default_rng(0)
    new, diag = sample_step(pos, drift, p, sys1, rng, noise=noise)
    assert diag["escaped"].tolist() == [True, False]


def test_current_drift_vanishes_for_real_state():
    grid = ConfigGrid((128,), (20.0,), (True,), origin=(-10.0,))
    state = gaussian_packet(grid, 0.0, 1.5)
    sys1 = single_particle(eta=1e-3)
    pair = madelung(state)
    v = drift_velocity_field(pair, None, sys1, mode="current")
    assert np.max(np.abs(v.values)) < 1e-10


def test_osmotic_drift_matches_log_density_gradient():
    grid = ConfigGrid((256,), (24.0,), (True,), origin=(-12.0,))
    s = 1.2
    state = gaussian_packet(grid, 0.0, s)
    sys1 = single_particle(mass=1.7, eta=2e-3, gamma_exponent=1.0)
    pair = madelung(state)
    v = drift_velocity_field(pair, None, sys1, mode="ES")
    x = grid.axis_coords(0)
    expect = (2e-3 / (2 * 1.7)) * (-x / s**2)
    inner = np.abs(x) < 4 * s
    assert np.max(np.abs(v.values[0][inner] - expect[inner])) < 1e-6


def _stationary_timeline(grid, state, steps, dt):
    return [WaveState(grid, state.psi, time=k * dt) for k in range(steps + 1)]


def test_velocity_increment_covariance_matches_ou_law():
    grid = ConfigGrid((128,), (20.0,), (True,), origin=(-10.0,))
    state = gaussian_packet(grid, 0.0, 2.0)
    sys1 = single_particle(mass=1.3, eta=1e-2, gamma_exponent=3.0)
    dt = 0.01
    timeline = _stationary_timeline(grid, state, 30, dt)
    params = TransitionParams.from_system(sys1, dt)
    ens = simulate_ensemble(timeline, None, sys1, params, n_walkers=2000,
                            seed=7, record_velocities=True)
    from edsim.stochastic import velocity_increment_stats
    rep = velocity_increment_stats(ens)
    assert np.allclose(np.diag(rep["expected"]), 2 * 1e-2 * dt / 1.3,
                       rtol=1e-14)
    assert rep["rel_err_diag"][0] < 0.03


def test_fluctuation_covariance_monte_carlo():
    sys1 = single_particle(dim=2, mass=2.0, eta=1e-3, gamma_exponent=3.0)
    p = TransitionParams(0.05, 1e-3, 3.0)
    rep = fluctuation_covariance(sys1, p, n_draws=200_000, seed=1)
    diff = np.abs(np.diag(rep["covariance"]) - np.diag(rep["expected"]))
    assert np.all(diff < 4 * rep["stderr_diag"])
    off = rep["covariance"][0, 1]
    scale = np.sqrt(rep["expected"][0, 0] * rep["expected"][1, 1])
    assert abs(off) < 4 * scale / np.sqrt(200_000)


@pytest.mark.parametrize("gamma", [1.0, 3.0, 4.0])
def test_scaling_exponent_recovers_gamma(gamma):
    sys1 = single_particle(eta=5e-3, gamma_exponent=gamma)
    dt_grid = np.logspace(-3, -1, 5)
    rep = scaling_exponent(sys1, dt_grid, trials=200_000, seed=2)
    assert abs(rep["gamma_hat"] - gamma) < 0.02


def test_scaling_exponent_refuses_zero_eta():
    sys1 = single_particle(eta=0.0)
    with pytest.raises(ValueError):
        scaling_exponent(sys1, [1e-3, 1e-2], trials=100)


def test_path_length_divergence_rate():
    sys_es = single_particle(eta=1e-2, gamma_exponent=1.0)
    rep = path_length_scaling(sys_es, total_time=1.0,
                              dt_grid=[4e-3, 2e-3, 1e-3], trials=2000, seed=3)
    assert abs(rep["exponent"] - (-0.5)) < 0.05
    sys_ou = single_particle(eta=1e-2, gamma_exponent=3.0)
    rep2 = path_length_scaling(sys_ou, total_time=1.0,
                               dt_grid=[4e-3, 2e-3, 1e-3], trials=2000, seed=3)
    assert abs(rep2["exponent"] - 0.5) < 0.05


def test_deterministic_trajectories_follow_spreading_packet():
    grid = ConfigGrid((256,), (30.0,), (True,), origin=(-15.0,))
    sys1 = single_particle(eta=0.0)
    sigma0, k = 1.0, 0.3
    state = gaussian_packet(grid, 0.0, sigma0, momentum=k)
    pot = free_potentials(grid, sys1)
    dt, steps = 0.01, 100
    timeline = evolve_trajectory(state, pot, dt, steps)
    x0 = np.array([[-1.0], [0.0], [1.5]])
    paths = bohmian_trajectories(timeline, pot, sys1, x0, substeps=2)
    t = steps * dt
    sig_t = sigma0 * np.sqrt(1 + (t / (2 * sigma0**2)) ** 2)
    expect = k * t + x0[:, 0] * sig_t / sigma0
    assert np.max(np.abs(paths[-1][:, 0] - expect)) < 0.02


def test_ensemble_mean_tracks_packet_center():
    grid = ConfigGrid((256,), (30.0,), (True,), origin=(-15.0,))
    sys1 = single_particle(eta=1e-3, gamma_exponent=3.0)
    state = gaussian_packet(grid, 0.0, 1.0, momentum=0.5)
    pot = free_potentials(grid, sys1)
    dt, steps = 0.01, 40
    timeline = evolve_trajectory(state, pot, dt, steps)
    params = TransitionParams.from_system(sys1, dt)
    ens = simulate_ensemble(timeline, pot, sys1, params, n_walkers=4000,
                            seed=5)
    assert abs(ens.positions[-1][:, 0].mean() - 0.5 * 0.4) < 0.05


def test_vanishing_noise_recovers_deterministic_flow():
    grid = ConfigGrid((256,), (30.0,), (True,), origin=(-15.0,))
    state = gaussian_packet(grid, 0.0, 1.0, momentum=0.4)
    pot = free_potentials(grid, single_particle())
    dt, steps = 0.01, 30
    base = single_particle(eta=1e-2, gamma_exponent=1.0)
    timeline = evolve_trajectory(state, pot, dt, steps)
    rng = np.random.default_rng(9)
    x0 = rng.normal(0.0, 1.0, size=(300, 1))
    ref = bohmian_trajectories(timeline, pot, base, x0)
    devs = []
    for eta in (1e-2, 1e-4, 1e-6):
        sys_eta = with_eta(base, eta)
        params = TransitionParams.from_system(sys_eta, dt)
        ens = simulate_ensemble(timeline, pot, sys_eta, params,
                                n_walkers=300, seed=21,
                                initial_positions=x0)
        devs.append(max_deviation_from_deterministic(ens, ref))
    assert devs[0] > devs[1] > devs[2]
    assert devs[2] < 5e-3


def test_ensemble_runs_are_reproducible():
    grid = ConfigGrid((128,), (20.0,), (True,), origin=(-10.0,))
    state = gaussian_packet(grid, 0.0, 1.5)
    sys1 = single_particle(eta=1e-2, gamma_exponent=1.0)
    timeline = _stationary_timeline(grid, state, 10, 0.01)
    params = TransitionParams.from_system(sys1, 0.01)
    a = simulate_ensemble(timeline, None, sys1, params, 500, seed=42)
    b = simulate_ensemble(timeline, None, sys1, params, 500, seed=42)
    c = simulate_ensemble(timeline, None, sys1, params, 500, seed=43)
    assert np.array_equal(a.positions, b.positions)
    assert not np.array_equal(a.positions, c.positions)


def test_timeline_spacing_mismatch_rejected():
    grid = ConfigGrid((64,), (16.0,), (True,), origin=(-8.0,))
    state = gaussian_packet(grid, 0.0, 1.5)
    states = [WaveState(grid, state.psi, time=t) for t in (0.0, 0.1, 0.3)]
    sys1 = single_particle(eta=1e-3)
    with pytest.raises(ValueError):
        simulate_ensemble(states, None, sys1,
                          TransitionParams(0.1, 1e-3, 3.0), 10, seed=0)


def test_escape_abort_threshold():
    grid = ConfigGrid((32,), (4.0,), (False,), origin=(0.0,))
    psi = np.exp(-0.5 * ((grid.axis_coords(0) - 3.6) / 0.2) ** 2)
    state = WaveState(grid, psi.astype(complex))
    sys1 = single_particle(eta=5.0, gamma_exponent=1.0)
    timeline = _stationary_timeline(grid, state, 5, 0.05)
    params = TransitionParams.from_system(sys1, 0.05)
    with pytest.raises(RuntimeError):
        simulate_ensemble(timeline, None, sys1, params, 200, seed=1,
                          max_escape_fraction=0.0)


def test_center_of_mass_fluctuations_shrink_with_total_mass():
    rep1 = center_of_mass_report([1.0], eta=1e-2, dt=0.05, seed=4)
    rep4 = center_of_mass_report([1.0] * 4, eta=1e-2, dt=0.05, seed=5)
    assert rep1["within_tolerance"] and rep4["within_tolerance"]
    assert np.isclose(rep1["expected_variance"],
                      4 * rep4["expected_variance"], rtol=1e-12)
    assert abs(rep4["qpot_magnitude_ratio_M_vs_4M"] - 4.0) < 1e-9
