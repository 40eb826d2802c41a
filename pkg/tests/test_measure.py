import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qbayes.measure import (
    SIC_BLOCH,
    KrausChannel,
    Povm,
    ZeroProbabilityOutcome,
    born_probabilities,
    is_informationally_complete,
    kraus_update,
    lueders_channel,
    standard_povm,
)
from qbayes.qalg import DensityOperator, ket0, maximally_mixed, plus, tensor, validate_density

from conftest import random_density

KINDS = ["z_basis", "sic_qubit", "pauli6", "bell_basis", "product(sic_qubit,sic_qubit)",
         "product(z_basis,pauli6)"]


def sqrt_2x2(m):
    """Closed-form square root of a 2x2 PSD matrix."""
    s = np.sqrt(max(np.linalg.det(m).real, 0.0))
    t = np.sqrt(np.trace(m).real + 2 * s)
    return (m + s * np.eye(2)) / t


def test_born_examples():
    z = standard_povm("z_basis")
    assert np.allclose(born_probabilities(maximally_mixed(), z), [0.5, 0.5])
    assert np.allclose(born_probabilities(plus(), z), [0.5, 0.5])


def test_born_sic_matches_bloch_formula():
    sic = standard_povm("sic_qubit")
    n = np.array([0.0, 0.0, 1.0])
    oracle = [(1 + n @ a) / 4 for a in SIC_BLOCH]
    assert np.allclose(oracle, [1 / 2, 1 / 6, 1 / 6, 1 / 6])
    assert np.allclose(born_probabilities(ket0(), sic), oracle, atol=1e-15)


def test_born_dimension_mismatch():
    with pytest.raises(ValueError):
        born_probabilities(maximally_mixed(2), standard_povm("z_basis"))


@pytest.mark.parametrize("kind", KINDS)
def test_standard_povms_complete(kind):
    p = standard_povm(kind)
    assert np.max(np.abs(p.effects.sum(axis=0) - np.eye(p.dim))) <= 1e-10


def test_sic_geometry():
    gram = SIC_BLOCH @ SIC_BLOCH.T
    assert np.allclose(np.diag(gram), 1)
    off = gram[~np.eye(4, dtype=bool)]
    assert np.allclose(off, -1 / 3)


def test_product_povm_shape():
    p = standard_povm("product(sic_qubit,sic_qubit)")
    assert p.num_outcomes == 16 and p.dim == 4
    assert p.labels[5] == "1|1"
    assert standard_povm(("product", "sic_qubit", "sic_qubit")).num_outcomes == 16


def test_unknown_kind():
    with pytest.raises(ValueError):
        standard_povm("trine")


def pauli_coefficients(effects):
    paulis = [np.eye(2), np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1, -1])]
    basis = [np.kron(a, b) for a in paulis for b in paulis] if effects.shape[1] == 4 else paulis
    return np.array([[np.trace(e @ b).real for b in basis] for e in effects])


def test_informational_completeness():
    assert not is_informationally_complete(standard_povm("z_basis"))
    sic = standard_povm("sic_qubit")
    assert abs(np.linalg.det(pauli_coefficients(sic.effects))) > 1e-3
    assert is_informationally_complete(sic)
    prod = standard_povm("product(sic_qubit,sic_qubit)")
    coeffs = pauli_coefficients(prod.effects)
    assert abs(np.linalg.det(coeffs)) > 1e-6
    assert is_informationally_complete(prod)
    assert is_informationally_complete(standard_povm("pauli6"))
    assert not is_informationally_complete(standard_povm("bell_basis"))


def test_lueders_examples():
    z = standard_povm("z_basis")
    ch = lueders_channel(z)
    for k in range(2):
        assert np.allclose(ch.operators[k][0], z.effects[k])
    sic = standard_povm("sic_qubit")
    ch = lueders_channel(sic)
    for k, e in enumerate(sic.effects):
        root = ch.operators[k][0]
        assert np.allclose(root, sqrt_2x2(e), atol=1e-12)
        assert np.allclose(sorted(np.linalg.eigvalsh(root)), [0, np.sqrt(0.5)], atol=1e-12)
    trivial = Povm(np.eye(2)[None], ("all",))
    assert np.allclose(lueders_channel(trivial).operators[0][0], np.eye(2))


@pytest.mark.parametrize("kind", KINDS)
def test_lueders_completeness(kind):
    ch = lueders_channel(standard_povm(kind))
    total = sum(ch.effect(k) for k in range(len(ch.operators)))
    assert np.max(np.abs(total - np.eye(ch.dim))) <= 1e-10
    assert np.allclose(ch.induced_povm().effects, standard_povm(kind).effects, atol=1e-10)


def test_kraus_channel_rejects_incomplete():
    with pytest.raises(ValueError):
        KrausChannel((np.diag([1.0, 0.0])[None],))


def test_kraus_uses_dagger_first_convention():
    # A non-normal Kraus pair: A^dag A and A A^dag differ.
    a0 = np.array([[0, 1], [0, 0]], dtype=complex)
    a1 = np.array([[1, 0], [0, 0]], dtype=complex)
    ch = KrausChannel((a0[None], a1[None]))
    assert np.allclose(ch.effect(0), np.diag([0, 1]))
    post = kraus_update(DensityOperator(np.diag([0.0, 1.0])), ch, 0)
    assert np.allclose(post.matrix, np.diag([1, 0]))


def test_kraus_update_projection():
    ch = lueders_channel(standard_povm("z_basis"))
    assert np.allclose(kraus_update(plus(), ch, 0).matrix, ket0().matrix)


def test_kraus_update_product_factorizes():
    ch = lueders_channel(standard_povm("z_basis"))
    out = kraus_update(tensor(plus(), plus()), ch, 0, acting_site=1)
    assert np.allclose(out.matrix, tensor(ket0(), plus()).matrix)
    out2 = kraus_update(tensor(plus(), plus()), ch, 1, acting_site=2)
    assert np.allclose(out2.matrix, tensor(plus(), DensityOperator(np.diag([0.0, 1.0]))).matrix)


def test_kraus_update_zero_probability():
    ch = lueders_channel(standard_povm("z_basis"))
    with pytest.raises(ZeroProbabilityOutcome):
        kraus_update(ket0(), ch, 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(KINDS))
def test_channel_invariants(seed, kind):
    rng = np.random.default_rng(seed)
    povm = standard_povm(kind)
    ch = lueders_channel(povm)
    rho = random_density(rng, povm.dim)
    p = born_probabilities(rho, povm)
    assert abs(p.sum() - 1) <= 1e-10
    avg = np.zeros_like(rho.matrix)
    for k in range(povm.num_outcomes):
        post = kraus_update(rho, ch, k)
        assert validate_density(post.matrix).ok
        # the normalization inside kraus_update equals the Born probability
        unnorm = sum(a @ rho.matrix @ a.conj().T for a in ch.operators[k])
        assert abs(np.trace(unnorm).real - born_probabilities(rho, ch.induced_povm())[k]) <= 1e-12
        avg += p[k] * post.matrix
    assert abs(np.trace(avg) - 1) <= 1e-10
