"""Prior sequences: exchangeable particle ensembles and the change-point prior.

Every prior exposes ``block_hilbert_dim`` and ``state_at(n)``, the n-system
state, and satisfies tr_{n+1} state_at(n+1) == state_at(n).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Protocol, runtime_checkable

import numpy as np

from . import _backend
from .qalg import MAX_DIM, DensityOperator, partial_trace, validate_density

DEFAULT_TRUNCATION = 1e-16


@runtime_checkable
class PriorSequence(Protocol):
    block_hilbert_dim: int

    def state_at(self, n: int) -> DensityOperator: ...


def _check_cap(n: int, d: int = 2) -> None:
    if n < 1:
        raise ValueError("number of systems must be >= 1")
    if d**n > MAX_DIM:
        raise ValueError(f"{n} systems of dim {d} exceed the dense cap {MAX_DIM}")


# ---------------------------------------------------------------- ensembles


@dataclass(frozen=True, eq=False)
class ParticleEnsemble:
    """Weighted mixture of i.i.d. block states.

    ``states`` has shape ``(N, D, D)`` with ``D = 2**block_size``; the
    n-system state is ``sum_i w_i sigma_i^(x n/b)`` (odd n for b=2 by tracing
    out the last system).  ``measure`` names the distribution the particles
    were drawn from; MCMC rejuvenation needs it to target the right posterior.
    """

    weights: np.ndarray
    states: np.ndarray
    block_size: int = 1
    seed: int | None = None
    name: str = field(default="ensemble", compare=False)
    measure: str = field(default="discrete", compare=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        s = np.array(self.states, dtype=np.complex128)
        if self.block_size not in (1, 2):
            raise ValueError("block_size must be 1 or 2")
        d = 2**self.block_size
        if s.ndim != 3 or s.shape[1:] != (d, d):
            raise ValueError(f"states must have shape (N, {d}, {d}), got {s.shape}")
        if w.shape != (s.shape[0],):
            raise ValueError("one weight per particle required")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")
        w.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "states", s)

    @property
    def num_particles(self) -> int:
        return self.weights.size

    @property
    def block_hilbert_dim(self) -> int:
        return 2**self.block_size

    def with_weights(self, weights) -> "ParticleEnsemble":
        return replace(self, weights=weights)

    def mean_block_state(self) -> np.ndarray:
        return np.einsum("n,nij->ij", self.weights, self.states)

    def state_at(self, n: int) -> DensityOperator:
        return ensemble_state(self, n)


def _equal(states, block_size, seed, name, measure) -> ParticleEnsemble:
    n = states.shape[0]
    return ParticleEnsemble(np.full(n, 1.0 / n), states, block_size, seed, name, measure)


def _ginibre_states(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    g = rng.standard_normal((n, d, d)) + 1j * rng.standard_normal((n, d, d))
    rho = g @ g.conj().transpose(0, 2, 1)
    tr = np.trace(rho, axis1=1, axis2=2).real
    return rho / tr[:, None, None]


def haar_pure_ensemble(num_particles: int, seed: int = 42) -> ParticleEnsemble:
    """Equal-weight Haar-random pure qubit states."""
    if num_particles < 1:
        raise ValueError("num_particles must be >= 1")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((num_particles, 2)) + 1j * rng.standard_normal((num_particles, 2))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    states = np.einsum("ni,nj->nij", z, z.conj())
    return _equal(states, 1, seed, "haar_pure", "haar")


def hs_mixed_ensemble(num_particles: int, seed: int = 42) -> ParticleEnsemble:
    """Equal-weight qubit states from the Hilbert-Schmidt measure."""
    if num_particles < 1:
        raise ValueError("num_particles must be >= 1")
    rng = np.random.default_rng(seed)
    return _equal(_ginibre_states(rng, num_particles, 2), 1, seed, "hs_mixed", "hilbert_schmidt")


def two_qubit_pair_ensemble(num_particles: int, seed: int = 42) -> ParticleEnsemble:
    """Equal-weight two-qubit block states from the Hilbert-Schmidt measure.

    Roughly three quarters of the draws are entangled (negative partial
    transpose).
    """
    if num_particles < 1:
        raise ValueError("num_particles must be >= 1")
    rng = np.random.default_rng(seed)
    return _equal(_ginibre_states(rng, num_particles, 4), 2, seed, "hs_pairwise", "hilbert_schmidt")


def plus_product_prior() -> ParticleEnsemble:
    """Single particle |+><+|: every system independently in the plus state."""
    return ParticleEnsemble(np.ones(1), np.full((1, 2, 2), 0.5), 1, None, "plus_product", "point")


def ensemble_state(e: ParticleEnsemble, n: int) -> DensityOperator:
    _check_cap(n)
    if e.block_size == 1:
        m = _backend.weighted_tensor_power(e.weights, e.states, n)
        return DensityOperator(m, (2,) * n, check=False)
    if n % 2 == 0:
        m = _backend.weighted_tensor_power(e.weights, e.states, n // 2)
        return DensityOperator(m, (2,) * n, check=False)
    if n == 1:
        reduced = np.einsum("nijkj->nik", e.states.reshape(-1, 2, 2, 2, 2))
        return DensityOperator(np.einsum("n,nij->ij", e.weights, reduced), (2,), check=False)
    _check_cap(n + 1)
    return partial_trace(ensemble_state(e, n + 1), n + 1)


# ------------------------------------------------------------ change point


def _series(offset: int, start: int, tol: float) -> float:
    """sum_{j>=start} 2^{-j(2*offset + j)}, truncated at relative ``tol``."""
    total, j = 0.0, start
    while True:
        term = 2.0 ** (-j * (2 * offset + j))
        total += term
        if term <= tol * total or term == 0.0:
            return total
        j += 1


@dataclass(frozen=True)
class ChangePointPrior:
    """The counter-inductive measure on sequences 0^k 1^w and 1^k 0^w (k >= 1).

    The original weight of a change point at k is proportional to 2^{-k^2}.
    Conditioning is exact: the observed prefix is summarized by the symbol of
    the current run and its length, or, once both symbols have appeared, by the
    single surviving sequence.

    Attributes
    ----------
    mode : {"symmetric_fresh", "conditioned"}
    run_symbol : int
        Symbol of the observed run (conditioned mode).
    run_length : int
        Number of leading ``run_symbol`` outcomes observed so far.
    resolved : bool
        True once the change point has been observed; the remaining sequence
        is then constant ``1 - run_symbol``.
    """

    mode: str = "symmetric_fresh"
    run_symbol: int = 0
    run_length: int = 0
    resolved: bool = False
    truncation_tolerance: float = DEFAULT_TRUNCATION

    block_hilbert_dim = 2

    def __post_init__(self):
        if self.mode not in ("symmetric_fresh", "conditioned"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "conditioned" and self.run_length < 1:
            raise ValueError("a conditioned prior has observed at least one symbol")

    @property
    def normalization(self) -> float:
        """The constant multiplying the surviving weights.

        Fresh prior: 1 / (2 sum_{k>=1} 2^{-k^2}).  After m identical symbols:
        1 / sum_{j>=0} 2^{-j(2m+j)}, the weights being taken relative to the
        first surviving change point.
        """
        tol = self.truncation_tolerance
        if self.mode == "symmetric_fresh":
            return 1.0 / (2.0 * _series(0, 1, tol))
        if self.resolved:
            return 1.0
        return 1.0 / _series(self.run_length, 0, tol)

    def sequence_weights(self, max_terms: int = 64) -> list[tuple[str, int, float]]:
        """Normalized weights of the surviving remaining sequences.

        Each entry is ``(lead, j, weight)`` meaning the remaining outcomes are
        ``lead`` repeated j times followed by the opposite symbol forever.
        """
        nrm = self.normalization
        if self.mode == "symmetric_fresh":
            out = []
            for k in range(1, max_terms + 1):
                w = nrm * 2.0 ** (-k * k)
                out += [("0", k, w), ("1", k, w)]
            return out
        s = str(self.run_symbol)
        if self.resolved:
            return [(s, 0, 1.0)]
        m = self.run_length
        return [(s, j, nrm * 2.0 ** (-j * (2 * m + j))) for j in range(max_terms)]

    def predictive_zero(self) -> float:
        """Probability that the next outcome is 0."""
        tol = self.truncation_tolerance
        if self.mode == "symmetric_fresh":
            return 0.5
        if self.resolved:
            return 1.0 if self.run_symbol == 1 else 0.0
        m = self.run_length
        p_same = _series(m, 1, tol) / _series(m, 0, tol)
        return p_same if self.run_symbol == 0 else 1.0 - p_same

    def state_at(self, n: int) -> DensityOperator:
        return cip_state(self, n)


def counter_inductive_prior(truncation_tolerance: float = DEFAULT_TRUNCATION) -> ChangePointPrior:
    return ChangePointPrior(truncation_tolerance=truncation_tolerance)


def _basis_index(bits: list[int]) -> int:
    idx = 0
    for b in bits:
        idx = 2 * idx + b
    return idx


def _run_diag(n: int, lead: int, offset: int, start: int, scale: float, tol: float, diag: np.ndarray):
    """Add ``lead^j (1-lead)^{n-j}`` terms with weight scale * 2^{-j(2 offset + j)}.

    Terms with j < n land on distinct basis strings; all j >= n collapse onto
    ``lead^n`` and are summed as a tail.
    """
    other = 1 - lead
    for j in range(start, n):
        diag[_basis_index([lead] * j + [other] * (n - j))] += scale * 2.0 ** (-j * (2 * offset + j))
    diag[_basis_index([lead] * n)] += scale * _series(offset, max(start, n), tol)


def cip_state(p: ChangePointPrior, n: int) -> DensityOperator:
    """Dense diagonal n-system state of the change-point prior."""
    _check_cap(n)
    diag = np.zeros(2**n)
    tol = p.truncation_tolerance
    nrm = p.normalization
    if p.mode == "symmetric_fresh":
        for lead in (0, 1):
            _run_diag(n, lead, 0, 1, nrm, tol, diag)
    elif p.resolved:
        diag[_basis_index([1 - p.run_symbol] * n)] = 1.0
    else:
        _run_diag(n, p.run_symbol, p.run_length, 0, nrm, tol, diag)
    return DensityOperator(np.diag(diag).astype(complex), (2,) * n, check=False)


def check_ensemble(e: ParticleEnsemble, tol: float = 1e-10) -> bool:
    return all(validate_density(s, tol).ok for s in e.states)
