"""
A pure steady state: the dissipative Bose-Hubbard chain
=======================================================

At U = 0 the jump operators annihilate the zero-momentum condensate, so
every trajectory ends in that single eigenstate: CM goes to 0 and IPR to 1.
Switching on U breaks the dark state and the trajectories delocalize.
"""

import numpy as np

from trajloc import BhChainParams, bh_chain_model, purity, spectral_decomposition, steady_state
from trajloc.models import random_initial_state
from trajloc.observables import center_of_mass, cm_callback, ipr, pure_quasiprobabilities
from trajloc.unraveling import TrajectoryConfig, converged_steady_ensemble, gap_scaled, spectral_gap, trajectory_seeds

for U in (0.0, 1.0):
    spec = bh_chain_model(BhChainParams(N=4, N_b=3, U=U))
    sd = spectral_decomposition(spec)
    cfg = gap_scaled(TrajectoryConfig(dt=1e-3), spectral_gap(sd.eigenvalues))
    res = converged_steady_ensemble(random_initial_state(spec.dim, 1), spec, cfg, trajectory_seeds(0, 10),
                                    cm_callback(spec, sd))
    P = pure_quasiprobabilities(sd, np.array([r.psi for r in res]))
    cm, ip = center_of_mass(P, sd), ipr(P)
    print(f"U={U}: P_ss={purity(steady_state(sd)):.6f}  mean CM={cm.mean():.2e}  mean IPR={ip.mean():.4f}  "
          f"mean t_ss={np.mean([r.t for r in res]):.1f}")
