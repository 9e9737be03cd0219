"""Self-contained invariant and oracle checks, run by ``trajloc validate``.

Each check returns ``(passed, detail)``. Library functions are looked up
through their modules at call time so that deliberately broken versions
(mutation canaries in the test suite) are picked up.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from . import liouvillian as lv
from . import models as md
from . import observables as ob
from . import operators as ops
from . import unraveling as un


def _rng():
    return np.random.default_rng(20240611)


def _random_spec(rng, d=3, k=2):
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    chans = tuple((float(rng.uniform(0.2, 1.5)), rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
                  for _ in range(k))
    return lv.LindbladSpec((A + A.conj().T) / 2, chans)


def _random_density(rng, d):
    X = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = X @ X.conj().T
    return rho / np.trace(rho).real


def catalog():
    return {
        "xxz_N3": md.xxz_model(md.XxzParams(N=3)),
        "xxz_N4": md.xxz_model(md.XxzParams(N=4)),
        "bh_dimer_Nc3": md.bh_dimer_model(md.BhDimerParams(N_c=3)),
        "bh_chain_N4_Nb3": md.bh_chain_model(md.BhChainParams(N=4, N_b=3)),
    }


def check_vectorization():
    rng = _rng()
    worst = 0.0
    for _ in range(10):
        A, B, rho = (rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)) for _ in range(3))
        lhs = ops.vectorize(A @ rho @ B.conj().T)
        rhs = ops.kron(A, B.conj()) @ ops.vectorize(rho)
        worst = max(worst, np.abs(lhs - rhs).max())
    return worst < 1e-12, f"max deviation {worst:.2e}"


def check_superoperator_vs_direct():
    rng = _rng()
    worst = 0.0
    for _ in range(10):
        spec = _random_spec(rng)
        rho = _random_density(rng, spec.dim)
        lhs = lv.build_superoperator(spec) @ ops.vectorize(rho)
        rhs = ops.vectorize(lv.apply_liouvillian(spec, rho))
        worst = max(worst, np.abs(lhs - rhs).max())
    return worst < 1e-12, f"max deviation {worst:.2e}"


def check_biorthonormality():
    errs = {name: lv.spectral_decomposition(spec).biorthonormality_error() for name, spec in catalog().items()}
    return max(errs.values()) < 1e-9, ", ".join(f"{k}={v:.1e}" for k, v in errs.items())


def check_sum_rules():
    rng = _rng()
    worst = 0.0
    for spec in catalog().values():
        sd = lv.spectral_decomposition(spec)
        for _ in range(5):
            rho = _random_density(rng, spec.dim)
            q = ob.quasi_of_state(sd, rho)
            worst = max(worst, abs(q.total - lv.purity(rho)))
            psi = md.random_initial_state(spec.dim, int(rng.integers(1 << 30)))
            worst = max(worst, abs(ob.quasi_of_state(sd, psi).total - 1))
    return worst < 1e-8, f"max deviation {worst:.2e}"


def check_gauge_invariance():
    rng = _rng()
    worst = 0.0
    for spec in catalog().values():
        sd = lv.spectral_decomposition(spec)
        n = sd.eigenvalues.size
        k = np.exp(rng.uniform(-1, 1, n) + 1j * rng.uniform(-np.pi, np.pi, n))
        sd2 = sd.regauge(k)
        psi = md.random_initial_state(spec.dim, 5)
        q1, q2 = ob.quasi_of_state(sd, psi), ob.quasi_of_state(sd2, psi)
        worst = max(worst, np.abs(q1.p - q2.p).max(), abs(q1.cm - q2.cm), abs(q1.ipr - q2.ipr))
    return worst < 1e-9, f"max change {worst:.2e}"


def check_cm_nonnegative():
    worst = np.inf
    for spec in catalog().values():
        sd = lv.spectral_decomposition(spec)
        psi = np.array([md.random_initial_state(spec.dim, s) for s in range(20)])
        worst = min(worst, ob.center_of_mass(ob.pure_quasiprobabilities(sd, psi), sd).min())
    return worst >= -1e-8, f"min CM {worst:.3e}"


def purity_slope_fd(sd, rho, h):
    """(1/2) dP/dtau at tau=0 from a one-sided fourth-order stencil on the exact propagator."""
    P = [lv.purity(lv.propagate_exact(sd, rho, k * h)) for k in range(5)]
    return (-25 * P[0] + 48 * P[1] - 36 * P[2] + 16 * P[3] - 3 * P[4]) / (12 * h) / 2


def check_purity_derivative():
    worst = 0.0
    for spec in catalog().values():
        sd = lv.spectral_decomposition(spec)
        h = 1e-3 / np.abs(sd.eigenvalues).max()
        psi = md.random_initial_state(spec.dim, 3)
        rho = np.outer(psi, psi.conj())
        target = sd.mean_eigenvalue.real * ob.quasi_of_state(sd, rho).cm
        worst = max(worst, abs(purity_slope_fd(sd, rho, h) - target) / max(abs(target), 1e-12))
    return worst < 1e-5, f"max relative deviation {worst:.2e}"


def check_exact_propagator():
    spec = md.xxz_model(md.XxzParams(N=3, Delta=0.3, Jprime=-0.8))
    sd = lv.spectral_decomposition(spec)
    rho0 = _random_density(_rng(), spec.dim)
    exact = lv.propagate_exact(sd, rho0, 1.0)
    oracle = ops.devectorize(sla.expm(lv.build_superoperator(spec)) @ ops.vectorize(rho0))
    dev = np.abs(exact - oracle).max()
    return dev < 1e-7, f"max deviation {dev:.2e}"


def check_pure_steady_state():
    spec = md.bh_chain_model(md.BhChainParams(U=0.0))
    sd = lv.spectral_decomposition(spec)
    P = lv.purity(lv.steady_state(sd))
    bec = md.bec_state(4, 3)
    res = np.abs(lv.apply_liouvillian(spec, np.outer(bec, bec.conj()))).max()
    return abs(P - 1) < 1e-6 and res < 1e-9, f"purity {P:.10f}, BEC residual {res:.1e}"


def check_degeneracy_uniformization():
    spec = md.xxz_model(md.XxzParams(N=4))
    sd = lv.spectral_decomposition(spec)
    psi = md.random_initial_state(spec.dim, 11)
    c, d = ob.pure_overlaps(sd, psi)
    raw = (c * d)[0]
    p = ob.uniformize(raw, sd.groups)
    sums = max(abs(p[sd.groups == g].sum() - raw[sd.groups == g].sum()) for g in range(sd.n_groups))
    pair = np.abs(p[sd.conj_pair] - p.conj()).max()
    ok = np.bincount(sd.groups).max() > 1 and sums < 1e-12 and pair < 1e-9
    return ok, f"group-sum change {sums:.1e}, pairing {pair:.1e}"


def check_qubit_ensemble():
    spec = md.single_qubit_decay()
    cfg = un.TrajectoryConfig(dt=1e-3, sample_stride=100)
    M = 400
    run = un.evolve_ensemble(np.array([1, 0], complex), spec, cfg, un.trajectory_seeds(1, M), 1.0)
    sz = np.mean(np.abs(run.psi[-1, :, 0]) ** 2 - np.abs(run.psi[-1, :, 1]) ** 2)
    exact = 2 * np.exp(-1) - 1
    return abs(sz - exact) < 4 / np.sqrt(M), f"<sz>={sz:.4f} vs {exact:.4f}"


CHECKS = {
    "vectorization_convention": check_vectorization,
    "superoperator_vs_direct": check_superoperator_vs_direct,
    "biorthonormality": check_biorthonormality,
    "sum_rules": check_sum_rules,
    "gauge_invariance": check_gauge_invariance,
    "cm_nonnegative": check_cm_nonnegative,
    "purity_derivative_identity": check_purity_derivative,
    "exact_propagator_vs_expm": check_exact_propagator,
    "pure_steady_state_bec": check_pure_steady_state,
    "degeneracy_uniformization": check_degeneracy_uniformization,
    "qubit_decay_ensemble": check_qubit_ensemble,
}


def run_all(names=None) -> list[dict]:
    out = []
    for name, fn in CHECKS.items():
        if names and name not in names:
            continue
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append({"check": name, "passed": bool(ok), "detail": detail})
    return out
