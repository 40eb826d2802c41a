import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qbayes.qalg import (
    DensityOperator,
    ket0,
    ket1,
    max_entangled,
    maximally_mixed,
    partial_trace,
    plus,
    tensor,
    trace_distance,
    validate_density,
)

from conftest import random_density


def kron_by_loops(a, b):
    ra, ca = a.shape
    rb, cb = b.shape
    out = np.zeros((ra * rb, ca * cb), dtype=complex)
    for i in range(ra):
        for j in range(ca):
            for k in range(rb):
                for l in range(cb):
                    out[i * rb + k, j * cb + l] = a[i, j] * b[k, l]
    return out


def ptrace_by_sum(m, dims, site):
    """Explicit index sum over the traced factor."""
    n = len(dims)
    keep = [i for i in range(n) if i != site - 1]
    kdims = [dims[i] for i in keep]
    size = int(np.prod(kdims))
    out = np.zeros((size, size), dtype=complex)

    def flat(idx):
        f = 0
        for i, d in zip(idx, dims):
            f = f * d + i
        return f

    def kflat(idx):
        f = 0
        for i, d in zip(idx, kdims):
            f = f * d + i
        return f

    for row in itertools.product(*[range(d) for d in kdims]):
        for col in itertools.product(*[range(d) for d in kdims]):
            acc = 0
            for t in range(dims[site - 1]):
                r = list(row)
                c = list(col)
                r.insert(site - 1, t)
                c.insert(site - 1, t)
                acc += m[flat(r), flat(c)]
            out[kflat(row), kflat(col)] = acc
    return out


def eig2_hermitian(m):
    a, d = m[0, 0].real, m[1, 1].real
    b = m[0, 1]
    mid = 0.5 * (a + d)
    rad = np.sqrt(0.25 * (a - d) ** 2 + abs(b) ** 2)
    return mid - rad, mid + rad


def test_tensor_basis_ordering():
    out = tensor(ket0(), ket1())
    assert np.allclose(out.matrix, np.diag([0, 1, 0, 0]))
    assert out.factor_dims == (2, 2)


def test_tensor_identity_case():
    assert np.allclose(tensor(maximally_mixed(), maximally_mixed()).matrix, np.eye(4) / 4)


def test_tensor_matches_element_loops(rng):
    a, b = random_density(rng, 2), random_density(rng, 2)
    assert np.allclose(tensor(a, b).matrix, kron_by_loops(a.matrix, b.matrix), atol=1e-15)


def test_tensor_associative(rng):
    a, b, c = (random_density(rng, 2) for _ in range(3))
    left = tensor(tensor(a, b), c)
    right = tensor(a, tensor(b, c))
    assert np.max(np.abs(left.matrix - right.matrix)) <= 1e-12
    assert left.factor_dims == right.factor_dims == (2, 2, 2)


def test_partial_trace_of_max_entangled_is_mixed():
    for site in (1, 2):
        assert np.allclose(partial_trace(max_entangled(), site).matrix, np.eye(2) / 2)


def test_partial_trace_product(rng):
    s, t = random_density(rng, 2), random_density(rng, 2)
    assert np.max(np.abs(partial_trace(tensor(s, t), 2).matrix - s.matrix)) <= 1e-12


def test_partial_trace_middle_site_vs_index_sum(rng):
    rho = random_density(rng, 8, (2, 2, 2))
    got = partial_trace(rho, 2)
    assert got.factor_dims == (2, 2)
    assert np.allclose(got.matrix, ptrace_by_sum(rho.matrix, (2, 2, 2), 2), atol=1e-14)
    assert abs(np.trace(got.matrix) - 1) <= 1e-12


def test_partial_trace_mixed_dims(rng):
    rho = random_density(rng, 12, (2, 3, 2))
    for site in (1, 2, 3):
        assert np.allclose(partial_trace(rho, site).matrix, ptrace_by_sum(rho.matrix, (2, 3, 2), site), atol=1e-14)


@pytest.mark.parametrize("site", [0, 3, -1])
def test_partial_trace_site_out_of_range(site, rng):
    with pytest.raises(IndexError):
        partial_trace(random_density(rng, 4), site)


def test_trace_distance_examples(rng):
    r = random_density(rng, 2)
    assert trace_distance(r, r) == 0.0
    assert trace_distance(ket0(), ket1()) == pytest.approx(1.0, abs=1e-14)
    lo, hi = eig2_hermitian(ket0().matrix - plus().matrix)
    expected = 0.5 * (abs(lo) + abs(hi))
    assert expected == pytest.approx(1 / np.sqrt(2), abs=1e-15)
    assert trace_distance(ket0(), plus()) == pytest.approx(expected, abs=1e-14)


def test_trace_distance_dim_mismatch():
    with pytest.raises(ValueError):
        trace_distance(ket0(), max_entangled())


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_trace_distance_metric_axioms(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_density(rng, 4) for _ in range(3))
    ab, bc, ac = trace_distance(a, b), trace_distance(b, c), trace_distance(a, c)
    assert ab == pytest.approx(trace_distance(b, a), abs=1e-14)
    assert 0 <= ab <= 1
    assert ac <= ab + bc + 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([(2, 2), (2, 4), (4, 2)]))
def test_partial_trace_inverts_tensor(seed, dims):
    rng = np.random.default_rng(seed)
    a = random_density(rng, dims[0], (dims[0],))
    b = random_density(rng, dims[1], (dims[1],))
    assert np.max(np.abs(partial_trace(tensor(a, b), 2).matrix - a.matrix)) <= 1e-12


def test_validate_density_examples():
    assert validate_density(np.eye(2) / 2).ok
    bad = validate_density(np.diag([1.5, -0.5]))
    assert not bad.ok and bad.min_eigenvalue == pytest.approx(-0.5)
    assert validate_density(np.diag([0.5 + 1e-13, 0.5 - 1e-13]), tol=1e-10).ok


def test_validate_density_reports_all_defects():
    rep = validate_density(np.array([[0.6, 0.1], [0.3, 0.6]]))
    assert rep.hermiticity_defect == pytest.approx(0.2)
    assert rep.trace_defect == pytest.approx(0.2)
    assert not rep


def test_density_operator_rejects_invalid():
    with pytest.raises(ValueError):
        DensityOperator(np.diag([1.5, -0.5]))
    with pytest.raises(ValueError):
        DensityOperator(np.eye(4) / 4, (3, 2))


def test_density_operator_is_immutable():
    r = maximally_mixed()
    with pytest.raises(ValueError):
        r.matrix[0, 0] = 1.0


def test_constructors_are_valid():
    for r in (ket0(), ket1(), plus(), maximally_mixed(), maximally_mixed(2), max_entangled()):
        assert validate_density(r.matrix).ok
