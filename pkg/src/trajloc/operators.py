"""Hilbert-space bases, elementary operators and density-matrix vectorization.

Operators are plain dense ``complex128`` numpy arrays. Fock bases are
enumerated lexicographically in the occupation tuple ``(n_1, ..., n_sites)``.

Vectorization stacks rows: ``|i><j| -> e_i (x) e_j``, so that

    vectorize(A @ rho @ B) == kron(A, B.T) @ vectorize(rho)

and in particular ``A rho B^dagger`` is represented by ``kron(A, B.conj())``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

SPIN_CHAIN = "spin_chain"
FOCK_CUTOFF = "fock_cutoff"
FOCK_FIXED = "fock_fixed"

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    # sigma^+ = (sigma^x + i sigma^y) / 2 raises |1> -> |0> (spin up is index 0)
    "+": np.array([[0, 1], [0, 0]], dtype=complex),
    "-": np.array([[0, 0], [1, 0]], dtype=complex),
}


@dataclass(frozen=True)
class BasisSpec:
    """Basis of a finite Hilbert space.

    ``kind`` is one of ``"spin_chain"`` (``sites`` spins-1/2),
    ``"fock_cutoff"`` (``sites`` bosonic modes with total occupation
    ``<= n``) or ``"fock_fixed"`` (total occupation ``== n``).
    """

    kind: str
    sites: int
    n: int = 0
    _states: tuple = field(init=False, repr=False, compare=False, default=())

    def __post_init__(self):
        if self.sites < 1:
            raise ValueError(f"sites must be >= 1, got {self.sites}")
        if self.kind == SPIN_CHAIN:
            states = tuple(itertools.product((0, 1), repeat=self.sites))
        elif self.kind in (FOCK_CUTOFF, FOCK_FIXED):
            if self.n < 0 or (self.kind == FOCK_FIXED and self.n < 1):
                raise ValueError(f"invalid boson number {self.n} for {self.kind}")
            states = tuple(
                occ
                for occ in itertools.product(range(self.n + 1), repeat=self.sites)
                if (sum(occ) <= self.n if self.kind == FOCK_CUTOFF else sum(occ) == self.n)
            )
        else:
            raise ValueError(f"unknown basis kind {self.kind!r}")
        object.__setattr__(self, "_states", states)

    @classmethod
    def spin_chain(cls, n_sites: int) -> BasisSpec:
        return cls(SPIN_CHAIN, n_sites)

    @classmethod
    def fock_cutoff(cls, sites: int, n_max: int) -> BasisSpec:
        return cls(FOCK_CUTOFF, sites, n_max)

    @classmethod
    def fock_fixed(cls, sites: int, n_bosons: int) -> BasisSpec:
        return cls(FOCK_FIXED, sites, n_bosons)

    @property
    def dim(self) -> int:
        return len(self._states)

    @property
    def states(self) -> tuple:
        """Basis labels in enumeration order (spin: 0 = up, 1 = down)."""
        return self._states

    @cached_property
    def index(self) -> dict:
        return {s: i for i, s in enumerate(self._states)}

    @property
    def is_fock(self) -> bool:
        return self.kind in (FOCK_CUTOFF, FOCK_FIXED)


def kron(*ops: np.ndarray) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def spin_operator(site: int, kind: str, n_sites: int) -> np.ndarray:
    """Pauli operator ``kind`` in {x, y, z, +, -} on ``site`` (1-based) of an N-spin chain."""
    if not 1 <= site <= n_sites:
        raise ValueError(f"site {site} out of range 1..{n_sites}")
    if kind not in PAULI:
        raise ValueError(f"unknown Pauli kind {kind!r}")
    eye = np.eye(2, dtype=complex)
    return kron(*[PAULI[kind] if j == site else eye for j in range(1, n_sites + 1)])


def boson_annihilation(site: int, basis: BasisSpec) -> np.ndarray:
    """Truncated annihilation operator a_j (1-based site) on a Fock basis.

    Matrix elements leaving the truncated space are dropped. For a
    fixed-number basis a_j leaves the sector entirely, so the result is the
    zero matrix; use it only inside number-conserving products such as
    :func:`hop` or build those directly.
    """
    if not basis.is_fock:
        raise ValueError(f"boson operators need a Fock basis, got {basis.kind}")
    if not 1 <= site <= basis.sites:
        raise ValueError(f"site {site} out of range 1..{basis.sites}")
    j = site - 1
    a = np.zeros((basis.dim, basis.dim), dtype=complex)
    for col, occ in enumerate(basis.states):
        if occ[j] == 0:
            continue
        target = occ[:j] + (occ[j] - 1,) + occ[j + 1:]
        row = basis.index.get(target)
        if row is not None:
            a[row, col] = np.sqrt(occ[j])
    return a


def boson_creation(site: int, basis: BasisSpec) -> np.ndarray:
    return boson_annihilation(site, basis).conj().T


def hop(i: int, j: int, basis: BasisSpec) -> np.ndarray:
    """Number-conserving product a_i^dagger a_j, exact on any Fock basis."""
    if not basis.is_fock:
        raise ValueError(f"boson operators need a Fock basis, got {basis.kind}")
    for s in (i, j):
        if not 1 <= s <= basis.sites:
            raise ValueError(f"site {s} out of range 1..{basis.sites}")
    i0, j0 = i - 1, j - 1
    out = np.zeros((basis.dim, basis.dim), dtype=complex)
    for col, occ in enumerate(basis.states):
        if occ[j0] == 0:
            continue
        amp = np.sqrt(occ[j0])
        new = list(occ)
        new[j0] -= 1
        amp *= np.sqrt(new[i0] + 1)
        new[i0] += 1
        row = basis.index.get(tuple(new))
        if row is not None:
            out[row, col] += amp
    return out


def number_operator(site: int, basis: BasisSpec) -> np.ndarray:
    return hop(site, site, basis)


def vectorize(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {rho.shape}")
    return rho.reshape(-1).copy()


def devectorize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    d = int(round(np.sqrt(v.size)))
    if v.ndim != 1 or d * d != v.size:
        raise ValueError(f"vector of length {v.size} is not a vectorized square matrix")
    return v.reshape(d, d).copy()


def dag(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def is_hermitian(a: np.ndarray, rtol: float = 1e-10) -> bool:
    scale = max(np.linalg.norm(a), 1.0)
    return np.linalg.norm(a - dag(a)) <= rtol * scale
