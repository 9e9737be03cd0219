"""Quantum-jump (Monte Carlo wave function) unraveling of a Lindblad master equation.

Every trajectory owns a ``numpy.random.Generator``. One uniform is drawn per
step to decide whether a jump happens; a second one is drawn only when it
does, to pick the channel. All per-trajectory arithmetic is done row-wise
without BLAS, so a trajectory is bit-identical whether it is propagated
alone or inside a batch.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .liouvillian import LindbladSpec
from .operators import dag

RMS_MEAN = "mean"  # sqrt((s_short^2 + s_long^2) / 2)
RMS_SUM = "sum"  # sqrt(s_short^2 + s_long^2)


class StepSizeError(RuntimeError):
    """Jump probability per step exceeds the configured bound; shrink dt."""


class JumpError(RuntimeError):
    """A selected jump channel annihilates the state."""


@dataclass(frozen=True)
class TrajectoryConfig:
    dt: float = 1e-3
    t_max: float = 200.0
    sample_stride: int = 10
    window_short: int = 20
    window_long: int = 50
    seed: int = 0
    dp_max: float = 0.1
    rms: str = RMS_MEAN

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")
        if not 1 <= self.window_short <= self.window_long:
            raise ValueError("need 1 <= window_short <= window_long")
        if self.rms not in (RMS_MEAN, RMS_SUM):
            raise ValueError(f"rms must be {RMS_MEAN!r} or {RMS_SUM!r}")

    @property
    def sample_dt(self) -> float:
        return self.dt * self.sample_stride


@dataclass
class TrajectoryState:
    psi: np.ndarray
    t: float = 0.0
    jumps: list = field(default_factory=list)
    rng: np.random.Generator | None = None
    steps: int = 0

    def snapshot(self) -> TrajectoryState:
        return TrajectoryState(self.psi.copy(), self.t, list(self.jumps), None, self.steps)


def effective_hamiltonian(spec: LindbladSpec) -> np.ndarray:
    Heff = spec.H.astype(complex)
    for gamma, L in spec.channels:
        Heff = Heff - 0.5j * gamma * dag(L) @ L
    return Heff


def _rowmat(A: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """psi_m -> A psi_m for each row, BLAS-free so rows do not depend on batch size."""
    return np.einsum("ij,mj->mi", A, psi)


def _rownorm2(psi: np.ndarray) -> np.ndarray:
    return np.einsum("mi,mi->m", psi.conj(), psi).real


class JumpEngine:
    """First-order quantum-jump integrator for a fixed spec and time step."""

    def __init__(self, spec: LindbladSpec, dt: float, dp_max: float = 0.1):
        self.spec = spec
        self.dt = dt
        self.dp_max = dp_max
        self.drift = np.eye(spec.dim) - 1j * dt * effective_hamiltonian(spec)
        self.jump_ops = np.array([np.sqrt(g) * L for g, L in spec.channels]).reshape(-1, spec.dim, spec.dim)
        self.decay = sum((g * dag(L) @ L for g, L in spec.channels), np.zeros((spec.dim, spec.dim), complex))

    def jump_probabilities(self, psi: np.ndarray) -> np.ndarray:
        """Per-channel dp_k = dt gamma_k <psi|L_k^dag L_k|psi>, shape (M, K)."""
        if self.jump_ops.shape[0] == 0:
            return np.zeros((psi.shape[0], 0))
        Lpsi = np.einsum("kij,mj->mki", self.jump_ops, psi)
        return self.dt * np.einsum("mki,mki->mk", Lpsi.conj(), Lpsi).real

    def step(self, psi: np.ndarray, rngs, t_new: float, logs=None) -> np.ndarray:
        """Advance a batch of states (M, D) by one step. ``rngs`` has one generator per row."""
        dp = self.dt * np.einsum("mi,mi->m", psi.conj(), _rowmat(self.decay, psi)).real
        if np.any(dp >= self.dp_max):
            raise StepSizeError(f"jump probability {dp.max():.3g} >= {self.dp_max} at dt={self.dt}")
        u = np.array([g.random() for g in rngs])
        jump = u < dp
        out = _rowmat(self.drift, psi)
        if jump.any():
            idx = np.nonzero(jump)[0]
            dpk = self.jump_probabilities(psi[idx])
            for r, m in enumerate(idx):
                cum = np.cumsum(dpk[r])
                k = int(np.searchsorted(cum, rngs[m].random() * cum[-1], side="right"))
                k = min(k, cum.size - 1)
                new = self.jump_ops[k] @ psi[m]
                if np.linalg.norm(new) == 0:
                    raise JumpError(f"channel {k} annihilates the state at t={t_new}")
                out[m] = new
                if logs is not None:
                    logs[m].append((t_new, k))
        return out / np.sqrt(_rownorm2(out))[:, None]


def step(state: TrajectoryState, spec: LindbladSpec, dt: float, dp_max: float = 0.1) -> TrajectoryState:
    """One quantum-jump step; returns a new state sharing the generator."""
    if state.rng is None:
        raise ValueError("state has no random generator")
    engine = JumpEngine(spec, dt, dp_max)
    t_new = (state.steps + 1) * dt
    jumps = [list(state.jumps)]
    psi = engine.step(state.psi[None, :], [state.rng], t_new, jumps)[0]
    return TrajectoryState(psi, t_new, jumps[0], state.rng, state.steps + 1)


def initial_state(psi0: np.ndarray, seed: int) -> TrajectoryState:
    psi0 = np.asarray(psi0, dtype=complex)
    norm = np.linalg.norm(psi0)
    if abs(norm - 1) > 1e-10:
        raise ValueError(f"initial state must be normalized, norm={norm}")
    return TrajectoryState(psi0.copy(), 0.0, [], np.random.default_rng(seed), 0)


def trajectory_seeds(master: int, n: int, cell: int = 0) -> list[int]:
    """Seeds for trajectories 0..n-1 of a sweep cell: SeedSequence hash of (master, cell, index)."""
    out = []
    for m in range(n):
        ss = np.random.SeedSequence(entropy=int(master), spawn_key=(int(cell), m))
        out.append(int(ss.generate_state(1, dtype=np.uint64)[0]))
    return out


@dataclass
class EnsembleRun:
    """Sampled ensemble: ``psi[s, m]`` is trajectory m at ``times[s]``."""

    times: np.ndarray
    psi: np.ndarray
    jumps: list
    seeds: list


def evolve_ensemble(psi0, spec: LindbladSpec, config: TrajectoryConfig, seeds, t_end: float) -> EnsembleRun:
    """Propagate len(seeds) trajectories from the same psi0, sampling every ``sample_stride`` steps."""
    psi0 = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi0) - 1) > 1e-10:
        raise ValueError("initial state must be normalized")
    engine = JumpEngine(spec, config.dt, config.dp_max)
    rngs = [np.random.default_rng(s) for s in seeds]
    psi = np.tile(psi0, (len(seeds), 1))
    logs = [[] for _ in seeds]
    n_steps = int(round(t_end / config.dt))
    times, samples = [0.0], [psi.copy()]
    for n in range(1, n_steps + 1):
        psi = engine.step(psi, rngs, n * config.dt, logs)
        if n % config.sample_stride == 0:
            times.append(n * config.dt)
            samples.append(psi.copy())
    return EnsembleRun(np.array(times), np.array(samples), logs, list(seeds))


def evolve(psi0, spec: LindbladSpec, config: TrajectoryConfig, t_end: float | None = None) -> list[TrajectoryState]:
    """Single trajectory from ``config.seed``; snapshots at t=0 and every ``sample_stride`` steps."""
    t_end = config.t_max if t_end is None else t_end
    run = evolve_ensemble(psi0, spec, config, [config.seed], t_end)
    log = run.jumps[0]
    out = []
    for t, psi in zip(run.times, run.psi[:, 0]):
        out.append(TrajectoryState(psi, float(t), [j for j in log if j[0] <= t + 1e-12],
                                   None, int(round(t / config.dt))))
    return out


def ensemble_average(states) -> np.ndarray:
    """(1/M) sum_m |psi_m><psi_m| for an (M, D) array or a list of vectors / TrajectoryStates."""
    psi = np.array([s.psi if isinstance(s, TrajectoryState) else s for s in states], dtype=complex)
    if psi.ndim != 2 or psi.shape[0] == 0:
        raise ValueError("empty ensemble")
    return np.einsum("mi,mj->ij", psi, psi.conj()) / psi.shape[0]


def window_criterion(series, short: int, long: int, rms: str = RMS_MEAN) -> bool:
    """True when the last ``short`` and ``long`` running averages agree within the combined spread."""
    if len(series) < long:
        return False
    x = np.asarray(series, dtype=float)
    a, b = x[-short:], x[-long:]
    sa, sb = a.std(), b.std()
    spread = np.sqrt((sa**2 + sb**2) / 2) if rms == RMS_MEAN else np.sqrt(sa**2 + sb**2)
    return abs(a.mean() - b.mean()) <= spread


def first_convergence(series, short: int, long: int, rms: str = RMS_MEAN) -> int | None:
    """Index of the first sample at which :func:`window_criterion` holds (offline replay)."""
    for i in range(long - 1, len(series)):
        if window_criterion(series[: i + 1], short, long, rms):
            return i
    return None


@dataclass
class SteadySample:
    psi: np.ndarray
    t: float
    converged: bool
    cm_series: list
    jumps: list
    seed: int


def converged_steady_ensemble(psi0, spec: LindbladSpec, config: TrajectoryConfig, seeds, cm_callback) -> list[SteadySample]:
    """Run each trajectory until its CM running averages settle, or until ``t_max``.

    ``cm_callback(psi)`` maps an (M, D) batch to M center-of-mass values.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi0) - 1) > 1e-10:
        raise ValueError("initial state must be normalized")
    engine = JumpEngine(spec, config.dt, config.dp_max)
    M = len(seeds)
    rngs = [np.random.default_rng(s) for s in seeds]
    logs = [[] for _ in range(M)]
    psi = np.tile(psi0, (M, 1))
    series = [[float(c)] for c in cm_callback(psi)]
    windows = [deque(s, maxlen=config.window_long) for s in series]
    results: list[SteadySample | None] = [None] * M
    active = np.arange(M)
    max_steps = int(round(config.t_max / config.dt))
    n = 0

    def finish(m, converged):
        results[m] = SteadySample(psi[m].copy(), n * config.dt, converged, series[m], logs[m], seeds[m])

    for m in range(M):
        if window_criterion(windows[m], config.window_short, config.window_long, config.rms):
            finish(m, True)
    active = np.array([m for m in range(M) if results[m] is None], dtype=int)
    while active.size and n < max_steps:
        n += 1
        sub_logs = [logs[m] for m in active]
        psi[active] = engine.step(psi[active], [rngs[m] for m in active], n * config.dt, sub_logs)
        if n % config.sample_stride:
            continue
        cms = cm_callback(psi[active])
        keep = []
        for m, c in zip(active, cms):
            series[m].append(float(c))
            windows[m].append(float(c))
            if window_criterion(windows[m], config.window_short, config.window_long, config.rms):
                finish(m, True)
            else:
                keep.append(m)
        active = np.array(keep, dtype=int)
    for m in active:
        finish(m, False)
    return results


def converged_steady_sample(psi0, spec: LindbladSpec, config: TrajectoryConfig, cm_callback) -> SteadySample:
    """Single-trajectory version of :func:`converged_steady_ensemble` using ``config.seed``."""
    return converged_steady_ensemble(psi0, spec, config, [config.seed], cm_callback)[0]


def spectral_gap(eigenvalues: np.ndarray) -> float:
    """Slowest nonzero decay rate -Re lambda_1."""
    rates = -np.asarray(eigenvalues).real
    rates = rates[rates > 1e-12 * max(rates.max(), 1.0)]
    if rates.size == 0:
        raise ValueError("spectrum has no decaying modes")
    return float(rates.min())


def gap_scaled(config: TrajectoryConfig, gap: float, span: float = 10.0) -> TrajectoryConfig:
    """Choose ``sample_stride`` so that the long window covers ``span`` relaxation times 1/gap.

    With a fixed small stride the two running averages agree long before the
    trajectory has forgotten its initial state; tying the sampling interval to
    the slowest decay rate makes the criterion meaningful for every model.
    """
    sample_dt = span / (gap * config.window_long)
    stride = max(1, int(round(sample_dt / config.dt)))
    t_needed = 4 * config.window_long * stride * config.dt
    return replace(config, sample_stride=stride, t_max=max(config.t_max, t_needed))


def with_dt(config: TrajectoryConfig, dt: float, keep_sample_time: bool = True) -> TrajectoryConfig:
    """Same config at a new step size; by default the sampling interval in time is kept."""
    stride = config.sample_stride
    if keep_sample_time:
        stride = max(1, int(round(config.sample_dt / dt)))
    return replace(config, dt=dt, sample_stride=stride)
