import math

import numpy as np
import pytest

import trajkrotov as tk


def small_model(**kw):
    return tk.NetworkModel(tk.NetworkSpec(n_steps=200, **kw))


def test_spec_and_model():
    spec = tk.NetworkSpec()
    assert spec.dim == 5
    assert spec.dt == pytest.approx(0.005)
    model = tk.NetworkModel(spec)
    assert np.allclose(np.abs(model.target) ** 2, [0, 0.5, 0, 0.5, 0])
    h = np.asarray(model.hamiltonian([0.0, 0.0]))
    assert h.shape == (5, 5)
    assert np.allclose(h, h.conj().T)
    with pytest.raises(ValueError):
        tk.NetworkSpec(kappa=-1.0)


def test_simulate_zero_pulses_keeps_atom_excited():
    model = small_model()
    zero = [tk.ControlField(i, 5.0, [0.0] * 200) for i in (1, 2)]
    dyn = tk.simulate_density(model, zero)
    assert np.allclose(dyn["atom_excitation"][0], 1.0, atol=1e-12)
    assert dyn["error"] == pytest.approx(0.5)
    traj = tk.simulate_trajectory(model, zero, seed=3)
    assert traj["jump_times"] == []


def test_guess_dynamics_conserve_probability():
    model = small_model()
    dyn = tk.simulate_density(model, tk.blackman_guess(model.spec, 200.0))
    total = np.asarray(dyn["vacuum_population"])
    for i in range(2):
        total = total + np.asarray(dyn["atom_excitation"][i]) + np.asarray(dyn["cavity_number"][i])
    assert np.allclose(total, 1.0, atol=1e-8)


def test_density_optimization_is_monotone():
    model = small_model()
    res = tk.optimize(model, tk.blackman_guess(model.spec), variant="density", n_iterations=5)
    assert res.error == ""
    errors = [res.initial_error] + [r.j_t_exact for r in res.records]
    assert all(b <= a + 1e-10 for a, b in zip(errors, errors[1:]))


def test_trajectory_optimization_is_reproducible():
    model = small_model()
    guess = tk.blackman_guess(model.spec)
    runs = [
        tk.optimize(model, guess, variant="cross", n_iterations=2, n_trajectories=3, seed=4, eval_exact_every=1)
        for _ in range(2)
    ]
    assert runs[0].controls[0].values == runs[1].controls[0].values
    assert 0.0 <= runs[0].records[-1].j_t_exact <= 1.0


def test_cross_increment_forms_agree():
    rng = np.random.default_rng(0)
    xis = (rng.normal(size=(3, 5)) + 1j * rng.normal(size=(3, 5))).tolist()
    psis = (rng.normal(size=(3, 5)) + 1j * rng.normal(size=(3, 5))).tolist()
    a = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    double_sum, trace_form = tk.update_increment_cross(xis, psis, a + a.conj().T)
    assert double_sum == pytest.approx(trace_form, abs=1e-12)


def test_savgol_and_power_law():
    assert np.allclose(tk.savgol_weights(), np.array([-3, 12, 17, 12, -3]) / 35, atol=1e-14)
    t = np.linspace(0, 1, 30)
    cubic = (1 - 2 * t + t**3).tolist()
    assert np.allclose(tk.savgol_smooth(cubic), cubic, atol=1e-12)
    assert tk.noise_measure(tk.ControlField(1, 1.0, cubic)) < 1e-10
    ms = [1, 2, 4, 8, 16, 32]
    fit = tk.fit_power_law(ms, [7 / math.sqrt(m) for m in ms])
    assert fit.exponent == pytest.approx(-0.5)
    assert fit.prefactor == pytest.approx(7.0)


def test_config_and_run_optimize(tmp_path):
    cfg = tk.parse_config(
        "network.n_nodes = 2\nnetwork.duration = 5\nnetwork.n_steps = 200\nkrotov.variant = density\n"
    )
    cfg.n_iterations = 0
    assert len(cfg.hash()) == 16
    res = tk.run_optimize(cfg, tmp_path)
    assert res.records == []
    assert (tmp_path / "pulse_node1.dat").read_bytes() == (tmp_path / "guess_node1.dat").read_bytes()
    with pytest.raises(ValueError, match="missing required field"):
        tk.parse_config("network.n_nodes = 2\n")


def test_quick_oracles_pass():
    checks = [c for c in tk.run_oracles(quick=True) if c.module in ("network-model", "analysis", "cli-harness")]
    assert checks
    assert all(c.passed for c in checks), [(c.name, c.detail) for c in checks if not c.passed]
