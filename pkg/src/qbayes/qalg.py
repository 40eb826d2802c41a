"""Dense linear algebra for finite-dimensional quantum states.

Basis ordering: the first factor is the most significant index, so for two
factors the flat index is ``i1 * d2 + i2``.  Site indices are 1-based,
``site=1`` being the leftmost factor.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np

DEFAULT_TOL = 1e-10
MAX_DIM = 1024


@dataclass(frozen=True)
class ValidityReport:
    hermiticity_defect: float
    trace_defect: float
    min_eigenvalue: float
    tol: float

    @property
    def ok(self) -> bool:
        return (
            self.hermiticity_defect <= self.tol
            and self.trace_defect <= self.tol
            and self.min_eigenvalue >= -self.tol
        )

    def __bool__(self) -> bool:
        return self.ok


def validate_density(m, tol: float = DEFAULT_TOL) -> ValidityReport:
    """Check Hermiticity, unit trace and positivity of a square matrix.

    Never raises on an invalid matrix; inspect the returned report instead.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    herm = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    tr = float(abs(np.trace(m) - 1.0))
    hpart = 0.5 * (m + m.conj().T)
    lam_min = float(np.linalg.eigvalsh(hpart)[0])
    return ValidityReport(herm, tr, lam_min, tol)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """An immutable density matrix with tensor-factor bookkeeping.

    Parameters
    ----------
    matrix : array_like
        Square complex matrix.
    factor_dims : sequence of int, optional
        Dimensions of the tensor factors; defaults to qubit factors when the
        dimension is a power of two, otherwise a single factor.
    check : bool
        Validate the matrix at construction (default True).
    """

    matrix: np.ndarray
    factor_dims: tuple[int, ...] = field(default=())
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        dim = m.shape[0]
        if dim > MAX_DIM:
            raise ValueError(f"dimension {dim} exceeds the dense cap {MAX_DIM}")
        dims = tuple(int(d) for d in self.factor_dims) or _default_factors(dim)
        if int(np.prod(dims)) != dim:
            raise ValueError(f"factor_dims {dims} do not multiply to {dim}")
        if self.check:
            rep = validate_density(m)
            if not rep.ok:
                raise ValueError(f"not a valid density operator: {rep}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "factor_dims", dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_sites(self) -> int:
        return len(self.factor_dims)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    def __repr__(self):
        return f"DensityOperator(dim={self.dim}, factor_dims={self.factor_dims})"

    @classmethod
    def pure(cls, vec, factor_dims: Sequence[int] = ()) -> "DensityOperator":
        v = np.asarray(vec, dtype=complex).ravel()
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()), tuple(factor_dims))


def _default_factors(dim: int) -> tuple[int, ...]:
    if dim > 1 and dim & (dim - 1) == 0:
        return (2,) * (dim.bit_length() - 1)
    return (dim,)


def ket0() -> DensityOperator:
    return DensityOperator(np.diag([1.0, 0.0]))


def ket1() -> DensityOperator:
    return DensityOperator(np.diag([0.0, 1.0]))


def plus() -> DensityOperator:
    return DensityOperator(np.full((2, 2), 0.5))


def maximally_mixed(num_qubits: int = 1) -> DensityOperator:
    d = 2**num_qubits
    return DensityOperator(np.eye(d) / d)


def max_entangled() -> DensityOperator:
    """(|00> + |11>)/sqrt(2) as a density operator."""
    return DensityOperator.pure([1.0, 0.0, 0.0, 1.0], (2, 2))


def tensor(a: DensityOperator, b: DensityOperator) -> DensityOperator:
    return DensityOperator(np.kron(a.matrix, b.matrix), a.factor_dims + b.factor_dims, check=False)


def tensor_power(a: DensityOperator, n: int) -> DensityOperator:
    if n < 1:
        raise ValueError("tensor power needs n >= 1")
    return reduce(tensor, [a] * n)


def _ptrace_matrix(m: np.ndarray, dims: Sequence[int], site: int) -> np.ndarray:
    dims = list(dims)
    idx = site - 1
    left = int(np.prod(dims[:idx]))
    mid = dims[idx]
    right = int(np.prod(dims[idx + 1:]))
    t = m.reshape(left, mid, right, left, mid, right)
    out = np.einsum("ajbcjd->abcd", t)
    return out.reshape(left * right, left * right)


def partial_trace(state: DensityOperator, site: int) -> DensityOperator:
    """Trace out the factor at 1-based ``site``."""
    n = state.num_sites
    if not 1 <= site <= n:
        raise IndexError(f"site {site} out of range for {n} factors")
    if n == 1:
        raise ValueError("cannot trace out the only factor")
    dims = state.factor_dims
    out = _ptrace_matrix(state.matrix, dims, site)
    rest = dims[: site - 1] + dims[site:]
    return DensityOperator(out, rest, check=False)


def trace_distance(a, b) -> float:
    """Half the trace norm of ``a - b``."""
    ma = np.asarray(a, dtype=complex)
    mb = np.asarray(b, dtype=complex)
    if ma.shape != mb.shape:
        raise ValueError(f"dimension mismatch: {ma.shape} vs {mb.shape}")
    diff = ma - mb
    diff = 0.5 * (diff + diff.conj().T)
    lam = np.linalg.eigvalsh(diff)
    return float(min(1.0, 0.5 * np.sum(np.abs(lam))))


def project_to_density(m: np.ndarray) -> np.ndarray:
    """Nearest-by-eigenvalue-clipping density matrices for a stack of matrices."""
    m = np.asarray(m, dtype=complex)
    h = 0.5 * (m + np.swapaxes(m.conj(), -1, -2))
    lam, vec = np.linalg.eigh(h)
    lam = np.clip(lam, 0.0, None)
    lam = lam / lam.sum(axis=-1, keepdims=True)
    return (vec * lam[..., None, :]) @ np.swapaxes(vec.conj(), -1, -2)
