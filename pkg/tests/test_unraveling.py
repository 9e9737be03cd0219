import numpy as np
import pytest
import scipy.linalg as sla
from scipy import stats

from trajloc.liouvillian import LindbladSpec, propagate_exact, spectral_decomposition
from trajloc.models import (
    BhChainParams, XxzParams, bec_state, bh_chain_model, random_initial_state, single_qubit_decay, xxz_model,
)
from trajloc.observables import cm_callback
from trajloc.operators import PAULI
from trajloc.unraveling import (
    JumpEngine, StepSizeError, TrajectoryConfig, converged_steady_ensemble, effective_hamiltonian, ensemble_average,
    evolve, evolve_ensemble, first_convergence, gap_scaled, initial_state, spectral_gap, step, trajectory_seeds,
    window_criterion, with_dt,
)

EXCITED = np.array([1, 0], dtype=complex)


class _FixedUniform:
    """Stand-in generator that always draws the same number."""

    def __init__(self, value):
        self.value = value

    def random(self):
        return self.value


def test_effective_hamiltonian():
    H = np.diag([1.0, -1.0])
    assert np.allclose(effective_hamiltonian(LindbladSpec(H)), H)
    assert np.allclose(effective_hamiltonian(single_qubit_decay()), [[-0.5j, 0], [0, 0]])
    spec = xxz_model(XxzParams(N=3))
    Heff = effective_hamiltonian(spec)
    anti = (Heff - Heff.conj().T) / 2j
    decay = sum(g * L.conj().T @ L for g, L in spec.channels)
    assert np.allclose(anti, -0.5 * decay)


def test_dark_state_step_is_a_phase():
    p = BhChainParams(U=0.0)
    spec = bh_chain_model(p)
    psi = bec_state(p.N, p.N_b)
    engine = JumpEngine(spec, 1e-3)
    assert np.allclose(engine.jump_probabilities(psi[None]), 0)
    out = step(initial_state(psi, 0), spec, 1e-3)
    assert abs(abs(out.psi.conj() @ psi) - 1) < 1e-12
    assert out.jumps == []


def test_forced_jump_lands_in_ground_state():
    engine = JumpEngine(single_qubit_decay(), 1e-3)
    assert np.allclose(engine.jump_probabilities(EXCITED[None]), [[1e-3]])
    logs = [[]]
    out = engine.step(EXCITED[None], [_FixedUniform(0.0)], 1e-3, logs)
    assert np.allclose(out[0], [0, 1])
    assert logs == [[(1e-3, 0)]]


def test_no_jump_norm_decay_matches_expm():
    spec = single_qubit_decay()
    dt, n = 1e-3, 1000
    engine = JumpEngine(spec, dt)
    psi0 = np.array([1, 1], complex) / np.sqrt(2)
    drifted = np.linalg.matrix_power(engine.drift, n) @ psi0
    exact = sla.expm(-1j * effective_hamiltonian(spec) * n * dt) @ psi0
    assert abs(np.linalg.norm(drifted) - np.linalg.norm(exact)) < 2e-3


def test_weak_dissipation_reduces_to_schroedinger():
    H = 0.5 * PAULI["x"]
    spec = LindbladSpec(H, ((1e-12, PAULI["-"]),))
    psi0 = np.array([1, 0], complex)
    cfg = TrajectoryConfig(dt=1e-3, sample_stride=1000, seed=4)
    final = evolve(psi0, spec, cfg, 1.0)[-1].psi
    exact = sla.expm(-1j * H) @ psi0
    assert abs(exact.conj() @ final) ** 2 > 1 - 1e-4


def test_fixed_seed_is_reproducible():
    spec = xxz_model(XxzParams(N=3))
    psi0 = random_initial_state(8, 1)
    cfg = TrajectoryConfig(dt=1e-3, sample_stride=100, seed=99)
    a, b = evolve(psi0, spec, cfg, 3.0), evolve(psi0, spec, cfg, 3.0)
    assert a[-1].jumps == b[-1].jumps
    assert all(np.array_equal(x.psi, y.psi) for x, y in zip(a, b))


def test_batch_rows_equal_single_runs():
    spec = xxz_model(XxzParams(N=3))
    psi0 = random_initial_state(8, 1)
    cfg = TrajectoryConfig(dt=1e-3, sample_stride=50)
    seeds = trajectory_seeds(7, 6)
    batch = evolve_ensemble(psi0, spec, cfg, seeds, 2.0)
    for m in (0, 3, 5):
        alone = evolve_ensemble(psi0, spec, cfg, [seeds[m]], 2.0)
        assert np.array_equal(alone.psi[:, 0], batch.psi[:, m])
        assert alone.jumps[0] == batch.jumps[m]


def test_trajectory_seeds_are_distinct_and_stable():
    s = trajectory_seeds(0, 100)
    assert len(set(s)) == 100
    assert s == trajectory_seeds(0, 100)
    assert trajectory_seeds(0, 5, cell=1) != s[:5]


def test_first_jump_times_are_exponential():
    # excited qubit: waiting time density exp(-t); conditioned on a jump before t = 5
    engine = JumpEngine(single_qubit_decay(), 1e-3)
    M, n_max = 10_000, 5000
    rngs = [np.random.default_rng(s) for s in trajectory_seeds(3, M)]
    psi = np.tile(EXCITED, (M, 1))
    active = np.arange(M)
    first = np.full(M, np.inf)
    for n in range(1, n_max + 1):
        logs = [[] for _ in active]
        psi[active] = engine.step(psi[active], [rngs[m] for m in active], n * 1e-3, logs)
        jumped = np.array([bool(l) for l in logs])
        first[active[jumped]] = n * 1e-3
        active = active[~jumped]
        if active.size == 0:
            break
    times = first[np.isfinite(first)]
    cdf = lambda t: (1 - np.exp(-t)) / (1 - np.exp(-5.0))  # noqa: E731
    for side in ("less", "greater"):
        assert stats.kstest(times, cdf, alternative=side).pvalue > 0.01


def test_qubit_ensemble_population():
    M = 1000
    run = evolve_ensemble(EXCITED, single_qubit_decay(), TrajectoryConfig(sample_stride=1000),
                          trajectory_seeds(5, M), 1.0)
    sz = np.mean(np.abs(run.psi[-1, :, 0]) ** 2 - np.abs(run.psi[-1, :, 1]) ** 2)
    assert abs(sz - (2 * np.exp(-1) - 1)) < 4 / np.sqrt(M)


def test_ensemble_average_basic():
    psi = random_initial_state(5, 2)
    rho = ensemble_average([psi])
    assert np.allclose(rho, np.outer(psi, psi.conj()))
    assert np.isclose(np.trace(ensemble_average(np.array([psi, random_initial_state(5, 3)]))), 1)
    with pytest.raises(ValueError):
        ensemble_average(np.zeros((0, 5)))


def test_ensemble_converges_to_exact_solution():
    spec = xxz_model(XxzParams(N=3))
    sd = spectral_decomposition(spec)
    psi0 = random_initial_state(8, 1)
    exact = propagate_exact(sd, np.outer(psi0, psi0.conj()), 1.0)
    run = evolve_ensemble(psi0, spec, TrajectoryConfig(sample_stride=1000), trajectory_seeds(8, 500), 1.0)

    def dist(M):
        diff = ensemble_average(run.psi[-1, :M]) - exact
        return 0.5 * np.abs(np.linalg.eigvalsh(diff)).sum()

    assert dist(500) < dist(50)
    assert dist(500) < 5 / np.sqrt(500) and dist(50) < 5 / np.sqrt(50)


def test_step_size_guard():
    with pytest.raises(StepSizeError):
        evolve(EXCITED, single_qubit_decay(), TrajectoryConfig(dt=0.2, sample_stride=1), 1.0)


def test_window_criterion():
    assert not window_criterion([1.0] * 49, 20, 50)
    assert window_criterion([1.0] * 50, 20, 50)
    ramp = np.linspace(0, 1, 50)
    assert not window_criterion(ramp, 20, 50)
    # mean and sum variants differ only in the tolerance
    series = np.r_[np.zeros(34), np.ones(16)]
    assert not window_criterion(series, 20, 50, "mean")
    assert window_criterion(series, 20, 50, "sum")


def test_constant_cm_converges_at_first_full_window():
    spec = single_qubit_decay()
    cfg = TrajectoryConfig(dt=1e-3, sample_stride=5, t_max=10.0)
    res = converged_steady_ensemble(np.array([0, 1], complex), spec, cfg, [1, 2], lambda psi: np.zeros(len(psi)))
    for r in res:
        assert r.converged and len(r.cm_series) == 50
        assert np.isclose(r.t, 49 * cfg.sample_dt)


def test_dark_state_convergence_and_offline_replay():
    spec = bh_chain_model(BhChainParams(U=0.0))
    sd = spectral_decomposition(spec)
    cfg = gap_scaled(TrajectoryConfig(), spectral_gap(sd.eigenvalues))
    res = converged_steady_ensemble(random_initial_state(20, 1), spec, cfg, trajectory_seeds(2, 4),
                                    cm_callback(spec, sd))
    for r in res:
        assert r.converged
        assert r.cm_series[-1] < 1e-3
        assert first_convergence(r.cm_series, cfg.window_short, cfg.window_long) == len(r.cm_series) - 1


def test_gap_scaled_window_span():
    cfg = gap_scaled(TrajectoryConfig(dt=1e-3), gap=0.5)
    assert np.isclose(cfg.window_long * cfg.sample_dt, 20.0)
    assert cfg.t_max >= 4 * 20.0
    half = with_dt(cfg, 5e-4)
    assert half.dt == 5e-4 and np.isclose(half.sample_dt, cfg.sample_dt)
