import numpy as np
import pytest

from trajloc.liouvillian import apply_liouvillian, purity, spectral_decomposition, steady_state
from trajloc.models import (
    BhChainParams, BhDimerParams, XxzParams, bec_state, bh_chain_model, bh_chain_operators, bh_dimer_model,
    build_model, coherent_amplitude, coherent_initial_dimer, make_params, random_initial_state, total_magnetization,
    total_number, xxz_hamiltonian, xxz_model,
)
from trajloc.operators import BasisSpec, number_operator


def comm(a, b):
    return a @ b - b @ a


def test_xxz_two_sites_hand_expanded():
    J, Delta = 0.8, 0.3
    H = xxz_hamiltonian(XxzParams(N=2, J=J, Delta=Delta, Jprime=5.0))
    # basis |00>, |01>, |10>, |11>; the next-nearest term is absent for N = 2
    ref = np.diag([Delta, -Delta, -Delta, Delta]).astype(complex) * J
    ref[1, 2] = ref[2, 1] = 2 * J
    assert np.allclose(H, ref)


def test_xxz_dimensions_and_channels():
    spec = xxz_model(XxzParams(N=4))
    assert spec.dim == 16 and len(spec.channels) == 2
    assert [g for g, _ in spec.channels] == [0.6, 1.4]


@pytest.mark.parametrize("Jp,Delta", [(0.0, 0.0), (2.0, 0.7), (-1.3, 1.9)])
def test_xxz_conserves_magnetization(Jp, Delta):
    H = xxz_model(XxzParams(N=4, Jprime=Jp, Delta=Delta)).H
    assert np.abs(comm(H, total_magnetization(4))).max() < 1e-12


def test_bh_dimer_dimension_and_hermiticity(rng):
    spec = bh_dimer_model(BhDimerParams())
    assert spec.dim == 10 and len(spec.channels) == 2
    for _ in range(5):
        J, U, Delta, F = rng.normal(size=4)
        H = bh_dimer_model(BhDimerParams(J=J, U=U, Delta=Delta, F=F)).H
        assert np.allclose(H, H.conj().T)


def test_bh_dimer_without_drive_conserves_number():
    spec = bh_dimer_model(BhDimerParams(F=0.0, U=0.0))
    N = total_number(BasisSpec.fock_cutoff(2, 3))
    assert np.abs(comm(spec.H, N)).max() < 1e-12


def test_bh_dimer_without_drive_relaxes_to_vacuum():
    sd = spectral_decomposition(bh_dimer_model(BhDimerParams(F=0.0)))
    vac = np.zeros((10, 10))
    vac[0, 0] = 1
    assert np.allclose(steady_state(sd), vac, atol=1e-10)


def test_bh_chain_dimension():
    spec = bh_chain_model(BhChainParams())
    assert spec.dim == 20 and len(spec.channels) == 4


def test_bh_chain_strong_symmetry_on_cutoff_basis():
    # on a basis mixing particle numbers the total number is a nontrivial operator
    basis = BasisSpec.fock_cutoff(4, 3)
    H, jumps = bh_chain_operators(BhChainParams(U=0.7), basis)
    N = sum(number_operator(j, basis) for j in range(1, 5))
    assert np.abs(comm(H, N)).max() < 1e-12
    for L in jumps:
        assert np.abs(comm(L, N)).max() < 1e-12


def test_bec_is_dark_state():
    p = BhChainParams(U=0.0)
    spec = bh_chain_model(p)
    psi = bec_state(p.N, p.N_b)
    assert np.isclose(np.linalg.norm(psi), 1)
    for _, L in spec.channels:
        assert np.linalg.norm(L @ psi) < 1e-12
    assert np.abs(apply_liouvillian(spec, np.outer(psi, psi.conj()))).max() < 1e-9
    sd = spectral_decomposition(spec)
    assert abs(purity(steady_state(sd)) - 1) < 1e-6
    assert np.isclose(abs(psi.conj() @ steady_state(sd) @ psi), 1, atol=1e-8)


def test_bec_two_sites_one_boson():
    # basis order (0, 1), (1, 0)
    assert np.allclose(bec_state(2, 1), [1 / np.sqrt(2), 1 / np.sqrt(2)])


def test_coherent_state_limits():
    vac = coherent_initial_dimer(BhDimerParams(F=0.0))
    assert np.isclose(abs(vac[0]), 1)
    p = BhDimerParams(F=0.1, N_c=8)
    psi = coherent_initial_dimer(p)
    assert np.isclose(np.linalg.norm(psi), 1)
    basis = BasisSpec.fock_cutoff(2, 8)
    n1 = np.real(psi.conj() @ number_operator(1, basis) @ psi)
    assert abs(n1 - abs(coherent_amplitude(p)) ** 2) < 0.05 * abs(coherent_amplitude(p)) ** 2


def test_random_state_reproducible_and_uniform():
    a, b = random_initial_state(12, 3), random_initial_state(12, 3)
    assert np.array_equal(a, b) and np.isclose(np.linalg.norm(a), 1)
    overlaps = np.array([abs(random_initial_state(12, 2 * k).conj() @ random_initial_state(12, 2 * k + 1)) ** 2
                         for k in range(100)])
    se = overlaps.std(ddof=1) / 10
    assert abs(overlaps.mean() - 1 / 12) < 3 * se


def test_preset_parameter_handling():
    assert make_params("xxz", {"Delta": 1.5}).Delta == 1.5
    with pytest.raises(ValueError, match="unknown parameter"):
        make_params("xxz", {"delta": 1.5})
    with pytest.raises(ValueError, match="unknown model"):
        build_model("ising")
    with pytest.raises(ValueError):
        XxzParams(N=1)
    assert build_model("bh_chain").meta["model"] == "bh_chain"
