"""Lindblad generators, their biorthonormal eigendecomposition and exact propagation."""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as sla

from .operators import dag, devectorize, is_hermitian, vectorize

log = logging.getLogger(__name__)

DEG_TOL = 1e-8
COND_WARN = 1e8


class SpectralError(RuntimeError):
    """The Liouvillian cannot be decomposed into a usable biorthonormal basis."""


@dataclass(frozen=True)
class LindbladSpec:
    """Hamiltonian plus dissipative channels ``(gamma_k, L_k)``."""

    H: np.ndarray
    channels: tuple = ()
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        H = np.asarray(self.H, dtype=complex)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise ValueError(f"H must be square, got shape {H.shape}")
        if not is_hermitian(H, 1e-10):
            raise ValueError("H is not Hermitian")
        chans = []
        for gamma, L in self.channels:
            L = np.asarray(L, dtype=complex)
            if L.shape != H.shape:
                raise ValueError(f"jump operator shape {L.shape} does not match H {H.shape}")
            if not gamma > 0:
                raise ValueError(f"coupling must be positive, got {gamma}")
            chans.append((float(gamma), L))
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "channels", tuple(chans))

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    def scaled(self, s: float) -> LindbladSpec:
        """Generator multiplied by ``s > 0``."""
        return LindbladSpec(s * self.H, tuple((s * g, L) for g, L in self.channels), dict(self.meta))


def build_superoperator(spec: LindbladSpec) -> np.ndarray:
    H = spec.H
    eye = np.eye(spec.dim)
    sup = -1j * (np.kron(H, eye) - np.kron(eye, H.conj()))
    for gamma, L in spec.channels:
        LdL = dag(L) @ L
        sup += gamma * (np.kron(L, L.conj()) - 0.5 * np.kron(LdL, eye) - 0.5 * np.kron(eye, LdL.conj()))
    return sup


def apply_liouvillian(spec: LindbladSpec, rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.shape != spec.H.shape:
        raise ValueError(f"rho shape {rho.shape} does not match H {spec.H.shape}")
    out = -1j * (spec.H @ rho - rho @ spec.H)
    for gamma, L in spec.channels:
        LdL = dag(L) @ L
        out = out + gamma * (L @ rho @ dag(L) - 0.5 * (LdL @ rho + rho @ LdL))
    return out


@dataclass(frozen=True)
class SpectralData:
    """Gauge-fixed biorthonormal eigensystem of a Liouvillian.

    ``right[:, a]`` is vec(r_a) and ``left[:, a]`` is vec(l_a), so that
    ``left.conj().T @ right`` is the identity. Index 0 is the steady state.
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    groups: np.ndarray
    conj_pair: np.ndarray
    steady_index: int
    condition_number: float
    deg_tol: float

    @property
    def dim(self) -> int:
        return int(round(np.sqrt(self.eigenvalues.size)))

    @property
    def n_groups(self) -> int:
        return int(self.groups.max()) + 1

    def right_operator(self, a: int) -> np.ndarray:
        return devectorize(self.right[:, a])

    def left_operator(self, a: int) -> np.ndarray:
        return devectorize(self.left[:, a])

    @property
    def mean_eigenvalue(self) -> complex:
        return complex(self.eigenvalues.mean())

    def biorthonormality_error(self) -> float:
        gram = self.left.conj().T @ self.right
        return float(np.abs(gram - np.eye(gram.shape[0])).max())

    def regauge(self, k: np.ndarray) -> SpectralData:
        """Apply r_a -> k_a r_a, l_a -> l_a / conj(k_a)."""
        k = np.asarray(k, dtype=complex)
        if np.any(k == 0):
            raise ValueError("gauge factors must be nonzero")
        return SpectralData(
            self.eigenvalues, self.right * k, self.left / k.conj(), self.groups,
            self.conj_pair, self.steady_index, self.condition_number, self.deg_tol,
        )

    def to_json(self, path) -> None:
        """Eigenvalue table ``[{re_lambda, im_lambda, group_id, conj_partner}]``."""
        rows = [
            {"re_lambda": float(l.real), "im_lambda": float(l.imag),
             "group_id": int(g), "conj_partner": int(c)}
            for l, g, c in zip(self.eigenvalues, self.groups, self.conj_pair)
        ]
        Path(path).write_text(json.dumps(rows, indent=1))

    def dump_eigenoperators(self, directory) -> Path:
        """Write right/left eigenoperators as little-endian complex128 row-major blocks.

        Block ``a`` of ``right.bin`` holds the D x D matrix r_a; likewise for l_a.
        """
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        d = self.dim
        for name, mat in (("right", self.right), ("left", self.left)):
            # column a of mat is the row-major flattening of the operator
            np.ascontiguousarray(mat.T).astype("<c16").tofile(directory / f"{name}.bin")
        manifest = {
            "dim": d, "count": d * d, "dtype": "complex128", "byteorder": "little",
            "order": "row-major", "block_shape": [d, d],
            "files": {"right": "right.bin", "left": "left.bin"},
            "steady_index": self.steady_index,
        }
        path = directory / "manifest.json"
        path.write_text(json.dumps(manifest, indent=1))
        return path


def load_eigenoperators(directory) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :meth:`SpectralData.dump_eigenoperators`; returns (right, left) column matrices."""
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    n, d = manifest["count"], manifest["dim"]
    out = []
    for name in ("right", "left"):
        blocks = np.fromfile(directory / manifest["files"][name], dtype="<c16").reshape(n, d * d)
        out.append(blocks.T.astype(complex))
    return out[0], out[1]


def _cluster(lam: np.ndarray, tol: float) -> np.ndarray:
    """Single-linkage clustering of eigenvalues closer than ``tol``."""
    n = lam.size
    parent = np.arange(n)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    close = np.abs(lam[:, None] - lam[None, :]) < tol
    for i, j in zip(*np.nonzero(np.triu(close, 1))):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    roots = np.array([find(i) for i in range(n)])
    _, labels = np.unique(roots, return_inverse=True)
    return labels


def _hermitian_basis(V: np.ndarray, d: int) -> np.ndarray:
    """Orthonormal Hermitian basis of a dagger-closed subspace spanned by the columns of V."""
    n = V.shape[1]
    herm = []
    for v in V.T:
        X = v.reshape(d, d)
        herm.append(vectorize((X + dag(X)) / 2))
        herm.append(vectorize((X - dag(X)) / 2j))
    A = np.array(herm).T
    real_rep = np.vstack([A.real, A.imag])
    u, s, _ = np.linalg.svd(real_rep, full_matrices=False)
    if n < s.size and s[n] > 1e-6 * s[0]:
        log.warning("real eigenvalue cluster is not closed under Hermitian conjugation "
                    "(singular values %s)", s[: n + 1])
    return u[: d * d, :n] + 1j * u[d * d:, :n]


def diagonalize(superop: np.ndarray, deg_tol: float = DEG_TOL, cond_warn: float = COND_WARN) -> SpectralData:
    """Biorthonormal, conjugation-symmetric eigendecomposition of a Lindblad superoperator.

    Eigenvalues closer than ``deg_tol`` times the spectral radius form one
    degenerate group and are replaced by the group mean. Bases of groups at
    complex-conjugate eigenvalues are chosen as Hermitian conjugates of each
    other; real groups get Hermitian bases. Right eigenoperators have unit
    Frobenius norm except the steady state, which has unit trace. Left
    eigenoperators are rows of the inverse of the right eigenvector matrix.
    """
    n = superop.shape[0]
    d = int(round(np.sqrt(n)))
    if d * d != n or superop.shape != (n, n):
        raise ValueError(f"superoperator shape {superop.shape} is not D^2 x D^2")
    lam, vecs = sla.eig(superop)
    radius = float(np.abs(lam).max())
    tol = deg_tol * radius if radius > 0 else deg_tol
    labels = _cluster(lam, tol)
    n_raw = labels.max() + 1
    means = np.array([lam[labels == g].mean() for g in range(n_raw)])

    zero = np.nonzero(np.abs(means) < tol)[0]
    if zero.size == 0:
        raise SpectralError(f"no eigenvalue within {tol:.3g} of zero (closest {np.abs(means).min():.3g})")
    zg = zero[np.argmin(np.abs(means[zero]))]
    if np.count_nonzero(labels == zg) > 1:
        raise SpectralError(f"degenerate steady state: {np.count_nonzero(labels == zg)} zero eigenvalues")

    # order groups: steady first, then slowest decay first, then imaginary part
    order = sorted(range(n_raw), key=lambda g: (g != zg, -round(means[g].real / tol), means[g].imag))

    cols, eigs, group_of, partner = [], [], [], []
    done = set()
    new_id = {}
    for g in order:
        if g in done:
            continue
        idx = np.nonzero(labels == g)[0]
        mu = means[g]
        if abs(mu.imag) < tol:
            basis = _hermitian_basis(vecs[:, idx], d)
            gid = new_id.setdefault(g, len(new_id))
            start = len(cols)
            for k in range(idx.size):
                cols.append(basis[:, k])
                eigs.append(0.0 if g == zg else mu.real)
                group_of.append(gid)
                partner.append(start + k)
            done.add(g)
            continue
        dist = np.abs(means - mu.conjugate())
        h = int(np.argmin(dist))
        if dist[h] > max(tol, 1e3 * np.finfo(float).eps * radius) or h in done:
            raise SpectralError(f"no conjugate partner for eigenvalue {mu}")
        hidx = np.nonzero(labels == h)[0]
        if hidx.size != idx.size:
            raise SpectralError(f"conjugate groups at {mu} differ in size ({idx.size} vs {hidx.size})")
        mu = 0.5 * (mu + means[h].conjugate())
        q, _ = np.linalg.qr(vecs[:, idx])
        qd = np.array([vectorize(dag(v.reshape(d, d))) for v in q.T]).T
        m = idx.size
        start = len(cols)
        gid = new_id.setdefault(g, len(new_id))
        hid = new_id.setdefault(h, len(new_id))
        for k in range(m):
            cols.append(q[:, k])
            eigs.append(mu)
            group_of.append(gid)
            partner.append(start + m + k)
        for k in range(m):
            cols.append(qd[:, k])
            eigs.append(mu.conjugate())
            group_of.append(hid)
            partner.append(start + k)
        done.update((g, h))

    R = np.array(cols).T
    lam_fixed = np.array(eigs, dtype=complex)
    R[:, 0] /= np.trace(R[:, 0].reshape(d, d)).real

    cond = float(np.linalg.cond(R))
    if not np.isfinite(cond) or cond > 1e14:
        raise SpectralError(f"eigenvector matrix is numerically singular (cond={cond:.3g})")
    if cond > cond_warn:
        warnings.warn(f"Liouvillian is close to defective: eigenvector condition number {cond:.3g}",
                      RuntimeWarning, stacklevel=2)
    Rinv = np.linalg.inv(R)
    return SpectralData(
        eigenvalues=lam_fixed,
        right=R,
        left=Rinv.conj().T,
        groups=np.array(group_of),
        conj_pair=np.array(partner),
        steady_index=0,
        condition_number=cond,
        deg_tol=tol,
    )


def spectral_decomposition(spec: LindbladSpec, **kwargs) -> SpectralData:
    return diagonalize(build_superoperator(spec), **kwargs)


def propagate_exact(spectral: SpectralData, rho0: np.ndarray, t: float) -> np.ndarray:
    """rho(t) = sum_a exp(lambda_a t) Tr{l_a^dagger rho0} r_a."""
    if t < 0:
        raise ValueError("t must be non-negative")
    c = spectral.left.conj().T @ vectorize(rho0)
    return devectorize(spectral.right @ (np.exp(spectral.eigenvalues * t) * c))


def steady_state(spectral: SpectralData) -> np.ndarray:
    rho = spectral.right_operator(spectral.steady_index)
    return 0.5 * (rho + dag(rho))


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ rho)))
