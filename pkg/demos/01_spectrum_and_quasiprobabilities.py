"""
Where does a trajectory live in the Liouvillian spectrum?
=========================================================

Diagonalize the boundary-driven XXZ chain, follow one quantum-jump
trajectory and print how its quasiprobabilities p_a spread over the
eigenvalues at a few times and after its running averages settle.
"""

import numpy as np

from trajloc import spectral_decomposition, xxz_model, XxzParams, random_initial_state
from trajloc.observables import cm_callback, pure_quasiprobabilities, quasi_of_state, slow_fraction
from trajloc.unraveling import (
    TrajectoryConfig, converged_steady_sample, evolve, gap_scaled, spectral_gap,
)

spec = xxz_model(XxzParams(N=4, Delta=0.7, Jprime=2.0))
sd = spectral_decomposition(spec)
lam = sd.eigenvalues
print(f"D^2 = {lam.size} eigenvalues, gap {spectral_gap(lam):.4f}, "
      f"slowest rate {-lam.real.min():.3f}, <lambda> = {sd.mean_eigenvalue:.3f}")
print(f"degenerate clusters: {int(np.sum(np.bincount(sd.groups) > 1))}, "
      f"condition number {sd.condition_number:.1f}")

# %%
# A random pure initial state is spread over the whole spectrum.
psi0 = random_initial_state(spec.dim, 1)
cfg = TrajectoryConfig(dt=1e-3, sample_stride=500, seed=7)
for snap in evolve(psi0, spec, cfg, t_end=6.0)[::4]:
    q = quasi_of_state(sd, snap.psi)
    print(f"t={snap.t:5.2f}  jumps={len(snap.jumps):2d}  CM={q.cm:.3f}  IPR={q.ipr:.3f}  "
          f"|p_0|={abs(q.p[0]):.3f}  slow share={slow_fraction(q.p, sd):.2f}")

# %%
# Run until the 20- and 50-sample running averages of CM agree.
cfg = gap_scaled(TrajectoryConfig(dt=1e-3, seed=7), spectral_gap(lam))
steady = converged_steady_sample(psi0, spec, cfg, cm_callback(spec, sd))
p = pure_quasiprobabilities(sd, steady.psi)[0]
print(f"\nsettled at t_ss = {steady.t:.1f} after {len(steady.jumps)} jumps")
top = np.argsort(-np.abs(p))[:6]
print(" alpha   Re lambda   Im lambda    |p|")
for a in top:
    print(f"{a:6d}  {lam[a].real:10.4f}  {lam[a].imag:10.4f}  {abs(p[a]):.4f}")
