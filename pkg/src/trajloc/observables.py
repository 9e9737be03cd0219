"""Trajectory-eigenstate overlaps, quasiprobabilities and localization measures."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .liouvillian import LindbladSpec, SpectralData
from .operators import vectorize

IMAG_TOL = 1e-8


@dataclass(frozen=True)
class OverlapCoefficients:
    c: np.ndarray  # Tr{l_a^dag rho}
    d: np.ndarray  # Tr{r_a rho}


@dataclass(frozen=True)
class QuasiDistribution:
    p: np.ndarray
    cm: float
    ipr: float
    ipr_alt: float
    purity_input: float

    @property
    def total(self) -> complex:
        return complex(self.p.sum())


def overlaps(spectral: SpectralData, rho: np.ndarray) -> OverlapCoefficients:
    rho = np.asarray(rho)
    d = spectral.dim
    if rho.shape != (d, d):
        raise ValueError(f"rho shape {rho.shape} does not match dimension {d}")
    c = spectral.left.conj().T @ vectorize(rho)
    dd = spectral.right.T @ vectorize(rho.T)
    return OverlapCoefficients(c, dd)


def pure_overlaps(spectral: SpectralData, psi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """c and d for a batch of pure states psi (M, D); returns two (M, D^2) arrays."""
    psi = np.atleast_2d(psi)
    rho = (psi[:, :, None] * psi.conj()[:, None, :]).reshape(psi.shape[0], -1)
    c = rho @ spectral.left.conj()
    # Tr{r rho} = sum_ij r_ij rho_ji and rho^T = conj(rho) for a projector
    d = rho.conj() @ spectral.right
    return c, d


def uniformize(p: np.ndarray, groups: np.ndarray) -> np.ndarray:
    """Replace p within each degenerate group by the group mean (last axis indexes eigenstates)."""
    p = np.asarray(p)
    counts = np.bincount(groups)
    if counts.max() == 1:
        return p.copy()
    flat = p.reshape(-1, p.shape[-1])
    onehot = np.zeros((groups.size, counts.size))
    onehot[np.arange(groups.size), groups] = 1.0
    sums = flat @ onehot
    return ((sums / counts) @ onehot.T).reshape(p.shape)


def _real(z, scale, what):
    z = np.asarray(z)
    bad = np.abs(z.imag) > IMAG_TOL * np.maximum(1.0, scale)
    if np.any(bad):
        raise FloatingPointError(f"{what} has imaginary part {np.abs(z.imag).max():.3g}; conjugate pairing broken")
    return z.real


def center_of_mass(p: np.ndarray, spectral: SpectralData) -> np.ndarray | float:
    """CM = Re sum_a p_a lambda_a / <lambda> (works on a single p or a batch along axis 0)."""
    mean = spectral.mean_eigenvalue
    if mean == 0:
        raise ZeroDivisionError("spectral mean is zero")
    terms = np.asarray(p) * spectral.eigenvalues
    val = terms.sum(axis=-1) / mean
    out = _real(val, np.abs(terms).sum(axis=-1) / abs(mean), "CM")
    return float(out) if np.ndim(out) == 0 else out


def ipr(p: np.ndarray):
    out = (np.abs(p) ** 2).sum(axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def ipr_alt(p: np.ndarray):
    p = np.asarray(p)
    out = _real((p**2).sum(axis=-1), (np.abs(p) ** 2).sum(axis=-1), "IPR'")
    return float(out) if np.ndim(out) == 0 else out


def quasiprobabilities(coeffs: OverlapCoefficients, spectral: SpectralData) -> QuasiDistribution:
    raw = coeffs.c * coeffs.d
    p = uniformize(raw, spectral.groups)
    return QuasiDistribution(
        p=p,
        cm=center_of_mass(p, spectral),
        ipr=ipr(p),
        ipr_alt=ipr_alt(p),
        purity_input=float(raw.sum().real),
    )


def quasi_of_state(spectral: SpectralData, rho_or_psi: np.ndarray) -> QuasiDistribution:
    x = np.asarray(rho_or_psi)
    if x.ndim == 1:
        x = np.outer(x, x.conj())
    return quasiprobabilities(overlaps(spectral, x), spectral)


def pure_quasiprobabilities(spectral: SpectralData, psi: np.ndarray) -> np.ndarray:
    """Uniformized p for a batch of pure states, shape (M, D^2)."""
    c, d = pure_overlaps(spectral, psi)
    return uniformize(c * d, spectral.groups)


def pure_state_cm(spec: LindbladSpec, mean_eigenvalue: complex, psi: np.ndarray) -> np.ndarray:
    """CM of pure states from Tr{rho L[rho]} / <lambda>, without the eigenbasis.

    For rho = |psi><psi| the Hamiltonian part drops out and
    Tr{rho L[rho]} = sum_k gamma_k (|<L_k>|^2 - <L_k^dag L_k>).
    """
    psi = np.atleast_2d(psi)
    acc = np.zeros(psi.shape[0])
    for gamma, L in spec.channels:
        Lpsi = np.einsum("ij,mj->mi", L, psi)
        mean_L = np.einsum("mi,mi->m", psi.conj(), Lpsi)
        acc += gamma * (np.abs(mean_L) ** 2 - np.einsum("mi,mi->m", Lpsi.conj(), Lpsi).real)
    return acc / mean_eigenvalue.real


def cm_callback(spec: LindbladSpec, spectral: SpectralData):
    """Batch CM function for convergence monitoring."""
    mean = spectral.mean_eigenvalue
    return lambda psi: pure_state_cm(spec, mean, psi)


def slow_fraction(p: np.ndarray, spectral: SpectralData) -> np.ndarray | float:
    """Share of sum |p_a| carried by eigenvalues with |Re lambda| below the spectral median."""
    decay = np.abs(spectral.eigenvalues.real)
    # eigenvalues tied with the median up to rounding are not "below" it
    mask = decay < np.median(decay) - spectral.deg_tol
    w = np.abs(p)
    out = w[..., mask].sum(axis=-1) / w.sum(axis=-1)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class BoundReport:
    """Statistical checks of P_ss = mean(p_0) and P_ss^2 <= mean(IPR)."""

    purity_ss: float
    mean_p0: complex
    se_p0: float
    mean_ipr: float
    se_ipr: float
    n: int

    @property
    def p0_margin(self) -> float:
        """3 SE minus |mean p_0 - P_ss| (non-negative when consistent)."""
        return 3 * self.se_p0 - abs(self.mean_p0 - self.purity_ss)

    @property
    def ipr_margin(self) -> float:
        """mean IPR + 3 SE - P_ss^2 (non-negative when the bound holds)."""
        return self.mean_ipr + 3 * self.se_ipr - self.purity_ss**2

    @property
    def p0_consistent(self) -> bool:
        return self.p0_margin >= 0

    @property
    def bound_holds(self) -> bool:
        return self.ipr_margin >= 0

    @property
    def p0_in_range(self) -> bool:
        return -3 * self.se_p0 <= self.mean_p0.real <= 1 + 3 * self.se_p0 + 1e-9


def _se(x: np.ndarray) -> float:
    return float(x.std(ddof=1) / np.sqrt(x.size)) if x.size > 1 else 0.0


def bound_check(p0: np.ndarray, iprs: np.ndarray, purity_ss: float) -> BoundReport:
    p0 = np.asarray(p0, dtype=complex)
    iprs = np.asarray(iprs, dtype=float)
    return BoundReport(purity_ss, complex(p0.mean()), _se(p0.real), float(iprs.mean()), _se(iprs), p0.size)


def write_quasi_csv(path, p: np.ndarray, spectral: SpectralData) -> None:
    """One row per eigenstate: alpha, re_lambda, im_lambda, re_p, im_p, abs_p."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "re_lambda", "im_lambda", "re_p", "im_p", "abs_p"])
        for a, (lam, pa) in enumerate(zip(spectral.eigenvalues, p)):
            w.writerow([a] + [format(float(x), ".17g") for x in (lam.real, lam.imag, pa.real, pa.imag, abs(pa))])


def read_quasi_csv(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = {k: np.array([float(r[k]) for r in rows]) for k in rows[0] if k != "alpha"}
    out["alpha"] = np.array([int(r["alpha"]) for r in rows])
    return out

