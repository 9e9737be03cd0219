import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_density, random_pure
from trajloc.liouvillian import propagate_exact, purity, spectral_decomposition, steady_state
from trajloc.models import BhChainParams, XxzParams, bec_state, bh_chain_model, xxz_model
from trajloc.observables import (
    bound_check, center_of_mass, ipr, ipr_alt, overlaps, pure_overlaps, pure_quasiprobabilities, pure_state_cm,
    quasi_of_state, read_quasi_csv, slow_fraction, uniformize, write_quasi_csv,
)
from trajloc.operators import devectorize
from trajloc.validation import purity_slope_fd

XXZ3 = xxz_model(XxzParams(N=3))
SD3 = spectral_decomposition(XXZ3)


def test_steady_state_overlaps():
    rho = steady_state(SD3)
    co = overlaps(SD3, rho)
    assert np.isclose(co.c[0], 1) and np.isclose(co.d[0], purity(rho))
    q = quasi_of_state(SD3, rho)
    assert np.isclose(q.p[0], purity(rho))
    assert np.allclose(q.p[1:], 0, atol=1e-10)


def test_left_steady_overlap_is_trace(rng):
    for _ in range(5):
        assert np.isclose(overlaps(SD3, random_density(rng, 8)).c[0], 1)


def test_reconstruction_from_coefficients(rng):
    rho = random_density(rng, 8)
    c = overlaps(SD3, rho).c
    assert np.allclose(devectorize(SD3.right @ c), rho, atol=1e-10)


def test_pure_overlaps_match_density_route(rng):
    psi = np.array([random_pure(rng, 8) for _ in range(3)])
    c, d = pure_overlaps(SD3, psi)
    for m in range(3):
        co = overlaps(SD3, np.outer(psi[m], psi[m].conj()))
        assert np.allclose(c[m], co.c) and np.allclose(d[m], co.d)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_sum_rule_mixed_states(seed):
    rho = random_density(np.random.default_rng(seed), 8)
    q = quasi_of_state(SD3, rho)
    assert abs(q.total - purity(rho)) < 1e-8
    assert q.ipr >= 1 / 64**2 - 1e-15


def test_sum_rule_pure_states_and_conjugate_pairing(rng):
    P = pure_quasiprobabilities(SD3, np.array([random_pure(rng, 8) for _ in range(20)]))
    assert np.allclose(P.sum(axis=1), 1, atol=1e-8)
    assert np.allclose(P[:, SD3.conj_pair], P.conj(), atol=1e-9)


def test_gauge_invariance(rng):
    k = rng.normal(size=64) + 1j * rng.normal(size=64)
    other = SD3.regauge(k)
    assert other.biorthonormality_error() < 1e-8
    psi = random_pure(rng, 8)
    a, b = quasi_of_state(SD3, psi), quasi_of_state(other, psi)
    assert np.abs(a.p - b.p).max() < 1e-9
    assert abs(a.cm - b.cm) < 1e-9 and abs(a.ipr - b.ipr) < 1e-9


def test_cm_of_pure_steady_state_is_zero():
    p = BhChainParams(U=0.0)
    sd = spectral_decomposition(bh_chain_model(p))
    q = quasi_of_state(sd, bec_state(p.N, p.N_b))
    assert abs(q.cm) < 1e-9 and abs(q.ipr - 1) < 1e-9


def test_cm_invariant_under_rate_scaling(rng):
    sd2 = spectral_decomposition(XXZ3.scaled(3.0))
    psi = random_pure(rng, 8)
    assert np.isclose(quasi_of_state(SD3, psi).cm, quasi_of_state(sd2, psi).cm, atol=1e-9)


def test_fast_cm_matches_eigenbasis_cm(rng):
    psi = np.array([random_pure(rng, 8) for _ in range(10)])
    slow = center_of_mass(pure_quasiprobabilities(SD3, psi), SD3)
    fast = pure_state_cm(XXZ3, SD3.mean_eigenvalue, psi)
    assert np.allclose(slow, fast, atol=1e-10)
    assert np.all(fast >= -1e-12)


def test_purity_derivative_identity(rng):
    # finite-difference oracle on the exact propagator; the helper returns (1/2) dP/dtau
    for _ in range(5):
        psi = random_pure(rng, 8)
        rho = np.outer(psi, psi.conj())
        lhs = purity_slope_fd(SD3, rho, 1e-3 / np.abs(SD3.eigenvalues).max())
        rhs = (SD3.mean_eigenvalue * quasi_of_state(SD3, psi).cm).real
        assert abs(lhs - rhs) < 1e-5 * abs(rhs)


def test_ipr_extremes():
    assert ipr(np.eye(1, 16)[0]) == 1
    assert np.isclose(ipr(np.full(16, 1 / 16)), 1 / 16)


def test_ipr_variants_agree_on_real_sector(rng):
    real = np.nonzero(np.abs(SD3.eigenvalues.imag) < 1e-12)[0]
    X = SD3.right[:, real] @ rng.normal(size=real.size)
    X = devectorize(X)
    p = quasi_of_state(SD3, X).p
    assert np.allclose(p.imag, 0, atol=1e-10)
    assert np.isclose(ipr(p), ipr_alt(p))


def test_uniformize_preserves_group_sums():
    sd = spectral_decomposition(xxz_model(XxzParams(N=4)))
    assert np.bincount(sd.groups).max() > 1
    c, d = pure_overlaps(sd, random_pure(np.random.default_rng(3), 16))
    raw = (c * d)[0]
    p = uniformize(raw, sd.groups)
    for g in range(sd.n_groups):
        assert abs(p[sd.groups == g].sum() - raw[sd.groups == g].sum()) < 1e-12
    assert np.abs(p[sd.conj_pair] - p.conj()).max() < 1e-9
    # CM only sees group sums, so it does not depend on the uniformization
    assert np.isclose(center_of_mass(raw, sd), center_of_mass(p, sd), atol=1e-10)


def test_broken_pairing_is_reported():
    p = np.zeros(64, complex)
    p[0] = 0.5
    p[np.nonzero(SD3.eigenvalues.imag > 1e-6)[0][0]] = 0.5
    with pytest.raises(FloatingPointError, match="pairing"):
        center_of_mass(p, SD3)


def test_slow_fraction_bounds(rng):
    f = slow_fraction(pure_quasiprobabilities(SD3, random_pure(rng, 8))[0], SD3)
    assert 0 <= f <= 1
    assert slow_fraction(np.eye(1, 64)[0], SD3) == 1.0


def test_bound_check_saturated_and_statistical(rng):
    rep = bound_check(np.ones(10), np.ones(10), 1.0)
    assert rep.p0_consistent and rep.bound_holds and rep.ipr_margin == 0
    p0 = 0.3 + 0.01 * rng.normal(size=200)
    rep = bound_check(p0, np.full(200, 0.2), 0.3)
    assert rep.p0_consistent and rep.bound_holds and rep.p0_in_range
    assert not bound_check(p0, np.full(200, 0.05), 0.3).bound_holds


def test_mean_p0_matches_steady_purity_for_exact_average(rng):
    # exact ensemble: the late-time density matrix is the steady state
    psi = random_pure(rng, 8)
    rho = propagate_exact(SD3, np.outer(psi, psi.conj()), 300.0)
    assert np.isclose(overlaps(SD3, rho).d[0], purity(steady_state(SD3)), atol=1e-8)


def test_quasi_csv_round_trip(tmp_path, rng):
    p = pure_quasiprobabilities(SD3, random_pure(rng, 8))[0]
    write_quasi_csv(tmp_path / "q.csv", p, SD3)
    back = read_quasi_csv(tmp_path / "q.csv")
    assert np.array_equal(back["re_p"] + 1j * back["im_p"], p)
    assert np.array_equal(back["re_lambda"] + 1j * back["im_lambda"], SD3.eigenvalues)
    assert np.isclose(back["re_p"].sum(), 1)
