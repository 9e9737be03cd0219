"""
Unraveling check: trajectories against the master equation
==========================================================

The average of many quantum-jump trajectories should approach the density
matrix from exact propagation, with a trace distance shrinking like 1/sqrt(M).
"""

import numpy as np

from trajloc import XxzParams, propagate_exact, spectral_decomposition, xxz_model, random_initial_state
from trajloc.unraveling import TrajectoryConfig, ensemble_average, evolve_ensemble, trajectory_seeds

spec = xxz_model(XxzParams(N=3))
sd = spectral_decomposition(spec)
psi0 = random_initial_state(spec.dim, 1)
rho0 = np.outer(psi0, psi0.conj())

run = evolve_ensemble(psi0, spec, TrajectoryConfig(dt=1e-3, sample_stride=250), trajectory_seeds(0, 800), 2.0)


def trace_distance(a, b):
    return 0.5 * np.abs(np.linalg.eigvalsh(a - b)).sum()


print("   t      M=50    M=200   M=800   5/sqrt(800)")
for s, t in enumerate(run.times):
    exact = propagate_exact(sd, rho0, t)
    ds = [trace_distance(ensemble_average(run.psi[s, :M]), exact) for M in (50, 200, 800)]
    print(f"{t:5.2f}  " + "  ".join(f"{d:6.3f}" for d in ds) + f"   {5 / np.sqrt(800):.3f}")
