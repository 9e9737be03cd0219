"""Model catalog: boundary-driven XXZ chain, driven Bose-Hubbard dimer, dissipative Bose-Hubbard chain."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from math import factorial

import numpy as np

from .liouvillian import LindbladSpec
from .operators import BasisSpec, boson_annihilation, dag, hop, spin_operator

PRNG_ALGORITHM = "numpy.random.PCG64/SeedSequence"


@dataclass(frozen=True)
class XxzParams:
    N: int = 4
    J: float = 1.0
    Delta: float = 0.7
    Jprime: float = 2.0
    gamma_l_plus: float = 0.6
    gamma_r_minus: float = 1.4

    def __post_init__(self):
        if self.N < 2:
            raise ValueError(f"XXZ chain needs N >= 2, got {self.N}")
        if self.gamma_l_plus <= 0 or self.gamma_r_minus <= 0:
            raise ValueError("boundary couplings must be positive")


@dataclass(frozen=True)
class BhDimerParams:
    J: float = 2.0
    U: float = 1.0
    Delta: float = 2.5
    F: float = 3.0
    gamma: float = 1.0
    N_c: int = 3

    def __post_init__(self):
        if self.N_c < 1:
            raise ValueError(f"cutoff N_c must be >= 1, got {self.N_c}")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")


@dataclass(frozen=True)
class BhChainParams:
    N: int = 4
    J: float = 1.0
    U: float = 0.0
    gamma: float = 1.0
    N_b: int = 3

    def __post_init__(self):
        if self.N < 2:
            raise ValueError(f"chain needs N >= 2, got {self.N}")
        if self.N_b < 1:
            raise ValueError(f"N_b must be >= 1, got {self.N_b}")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")


def xxz_hamiltonian(p: XxzParams) -> np.ndarray:
    N = p.N
    s = {(j, k): spin_operator(j, k, N) for j in range(1, N + 1) for k in "xyz"}
    H = np.zeros((2**N, 2**N), dtype=complex)
    for j in range(1, N):
        H += p.J * (s[j, "x"] @ s[j + 1, "x"] + s[j, "y"] @ s[j + 1, "y"]
                    + p.Delta * s[j, "z"] @ s[j + 1, "z"])
    for j in range(1, N - 1):
        H += p.Jprime * (s[j, "x"] @ s[j + 2, "x"] + s[j, "y"] @ s[j + 2, "y"])
    return H


def xxz_model(p: XxzParams) -> LindbladSpec:
    channels = [(p.gamma_l_plus, spin_operator(1, "+", p.N)),
                (p.gamma_r_minus, spin_operator(p.N, "-", p.N))]
    return LindbladSpec(xxz_hamiltonian(p), tuple(channels),
                        {"model": "xxz", "params": asdict(p), "basis": BasisSpec.spin_chain(p.N)})


def bh_dimer_model(p: BhDimerParams) -> LindbladSpec:
    basis = BasisSpec.fock_cutoff(2, p.N_c)
    a = [boson_annihilation(j, basis) for j in (1, 2)]
    ad = [dag(x) for x in a]
    H = -p.J * (ad[1] @ a[0] + ad[0] @ a[1])
    for j in range(2):
        H = H - p.Delta * ad[j] @ a[j] + 0.5 * p.U * ad[j] @ ad[j] @ a[j] @ a[j]
    H = H + p.F * (ad[0] + a[0])
    return LindbladSpec(H, ((p.gamma, a[0]), (p.gamma, a[1])),
                        {"model": "bh_dimer", "params": asdict(p), "basis": basis})


def bh_chain_jump(j: int, basis: BasisSpec) -> np.ndarray:
    """(a_j^dag + a_{j+1}^dag)(a_j - a_{j+1}) with periodic wrap, built number-conserving."""
    k = j % basis.sites + 1
    return hop(j, j, basis) - hop(j, k, basis) + hop(k, j, basis) - hop(k, k, basis)


def bh_chain_operators(p: BhChainParams, basis: BasisSpec) -> tuple[np.ndarray, list]:
    """Hamiltonian and jump operators of the periodic chain on any Fock basis with p.N sites."""
    if basis.sites != p.N:
        raise ValueError(f"basis has {basis.sites} sites, model has {p.N}")
    H = np.zeros((basis.dim, basis.dim), dtype=complex)
    for j in range(1, p.N + 1):
        k = j % p.N + 1
        H -= p.J * (hop(j, k, basis) + hop(k, j, basis))
        n = hop(j, j, basis)
        # a^dag^2 a^2 = n (n - 1)
        H += 0.5 * p.U * n @ (n - np.eye(basis.dim))
    return H, [bh_chain_jump(j, basis) for j in range(1, p.N + 1)]


def bh_chain_model(p: BhChainParams) -> LindbladSpec:
    basis = BasisSpec.fock_fixed(p.N, p.N_b)
    H, jumps = bh_chain_operators(p, basis)
    return LindbladSpec(H, tuple((p.gamma, L) for L in jumps),
                        {"model": "bh_chain", "params": asdict(p), "basis": basis})


def total_number(basis: BasisSpec) -> np.ndarray:
    return np.diag([float(sum(s)) for s in basis.states]).astype(complex)


def total_magnetization(n_sites: int) -> np.ndarray:
    return sum(spin_operator(j, "z", n_sites) for j in range(1, n_sites + 1))


def coherent_amplitude(p: BhDimerParams, scale: float = 3.0) -> complex:
    # the detuning plays the role of the "D" in the amplitude formula
    return complex(scale * np.sqrt(p.F / complex(p.Delta, -p.gamma)))


def coherent_initial_dimer(p: BhDimerParams, scale: float = 3.0) -> np.ndarray:
    """Two-mode coherent state |alpha>|alpha> projected onto the cutoff basis and renormalized."""
    alpha = coherent_amplitude(p, scale)
    basis = BasisSpec.fock_cutoff(2, p.N_c)
    amp = lambda n: alpha**n / np.sqrt(factorial(n))  # noqa: E731
    psi = np.array([amp(n1) * amp(n2) for n1, n2 in basis.states], dtype=complex)
    return psi / np.linalg.norm(psi)


def bec_state(n_sites: int, n_bosons: int) -> np.ndarray:
    """Zero-momentum condensate (a_{q=0}^dag)^N_b / sqrt(N_b!) |vac>, normalized."""
    basis = BasisSpec.fock_fixed(n_sites, n_bosons)
    # multinomial amplitudes sqrt(N_b! / prod n_j!) for a uniform single-particle orbital
    psi = np.array([np.sqrt(factorial(n_bosons) / np.prod([factorial(n) for n in occ]))
                    for occ in basis.states], dtype=complex)
    return psi / np.linalg.norm(psi)


def random_initial_state(basis: BasisSpec | int, seed: int) -> np.ndarray:
    """Normalized state with i.i.d. standard complex normal coefficients, reproducible from ``seed``."""
    dim = basis if isinstance(basis, int) else basis.dim
    rng = np.random.default_rng(seed)
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return psi / np.linalg.norm(psi)


def single_qubit_decay(gamma: float = 1.0) -> LindbladSpec:
    """H = 0, L = sigma^- (|0> -> |1>); the steady state is |1><1|."""
    return LindbladSpec(np.zeros((2, 2)), ((gamma, spin_operator(1, "-", 1)),),
                        {"model": "qubit_decay", "params": {"gamma": gamma}, "basis": BasisSpec.spin_chain(1)})


PRESETS = {
    "xxz": (XxzParams, xxz_model),
    "bh_dimer": (BhDimerParams, bh_dimer_model),
    "bh_chain": (BhChainParams, bh_chain_model),
}


def make_params(name: str, block: dict | None = None):
    if name not in PRESETS:
        raise ValueError(f"unknown model preset {name!r}; choose from {sorted(PRESETS)}")
    cls = PRESETS[name][0]
    block = dict(block or {})
    valid = {f.name for f in fields(cls)}
    unknown = set(block) - valid
    if unknown:
        raise ValueError(f"unknown parameter(s) {sorted(unknown)} for model {name!r}")
    return cls(**block)


def build_model(name: str, block: dict | None = None) -> LindbladSpec:
    params = make_params(name, block)
    return PRESETS[name][1](params)


def model_basis(spec: LindbladSpec) -> BasisSpec | None:
    return spec.meta.get("basis")


__all__ = [
    "XxzParams", "BhDimerParams", "BhChainParams", "xxz_model", "bh_dimer_model", "bh_chain_model",
    "coherent_initial_dimer", "bec_state", "random_initial_state", "single_qubit_decay",
    "total_number", "total_magnetization", "PRESETS", "make_params", "build_model",
]
