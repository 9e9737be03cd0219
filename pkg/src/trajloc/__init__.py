"""Quantum trajectories in the Liouvillian eigenbasis.

Build Lindblad generators for a few driven-dissipative models, decompose them
into biorthonormal left/right eigenoperators, unravel the dynamics into
quantum-jump trajectories and measure how those trajectories spread over the
Liouvillian spectrum (quasiprobabilities, center of mass, IPR).
"""

__version__ = "0.1.0"

from .liouvillian import (  # noqa: E402
    LindbladSpec, SpectralData, SpectralError, apply_liouvillian, build_superoperator, diagonalize,
    propagate_exact, purity, spectral_decomposition, steady_state,
)
from .models import (  # noqa: E402
    BhChainParams, BhDimerParams, XxzParams, bec_state, bh_chain_model, bh_dimer_model,
    coherent_initial_dimer, random_initial_state, single_qubit_decay, xxz_model,
)
from .observables import (  # noqa: E402
    bound_check, center_of_mass, ipr, ipr_alt, overlaps, pure_quasiprobabilities, quasi_of_state,
    quasiprobabilities,
)
from .operators import BasisSpec, boson_annihilation, devectorize, kron, spin_operator, vectorize  # noqa: E402
from .unraveling import (  # noqa: E402
    TrajectoryConfig, converged_steady_ensemble, converged_steady_sample, effective_hamiltonian,
    ensemble_average, evolve, evolve_ensemble, step,
)
