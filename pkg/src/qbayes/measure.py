"""POVMs, Kraus channels, Born probabilities and the Kraus state update."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .qalg import DensityOperator, DEFAULT_TOL

PROB_FLOOR = 1e-12

_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)

SIC_BLOCH = np.array(
    [
        [0.0, 0.0, 1.0],
        [2 * np.sqrt(2) / 3, 0.0, -1 / 3],
        [-np.sqrt(2) / 3, np.sqrt(2 / 3), -1 / 3],
        [-np.sqrt(2) / 3, -np.sqrt(2 / 3), -1 / 3],
    ]
)


class ZeroEvidence(ValueError):
    """The prior assigns zero probability to the observed data."""

    def __init__(self, msg: str, iteration: int | None = None):
        super().__init__(msg)
        self.iteration = iteration


class ZeroProbabilityOutcome(ZeroEvidence):
    """Raised by the Kraus update when tr(rho E_k) is at or below the floor."""


def bloch_operator(vec) -> np.ndarray:
    x, y, z = vec
    return x * _SX + y * _SY + z * _SZ


@dataclass(frozen=True, eq=False)
class Povm:
    """Effects stacked as an ``(r, d, d)`` complex array, one per outcome."""

    effects: np.ndarray
    labels: tuple[str, ...]
    factors: tuple["Povm", ...] = ()

    def __post_init__(self):
        e = np.array(self.effects, dtype=complex)
        if e.ndim != 3 or e.shape[1] != e.shape[2]:
            raise ValueError(f"effects must have shape (r, d, d), got {e.shape}")
        if len(self.labels) != e.shape[0]:
            raise ValueError("one label per effect required")
        if np.max(np.abs(e - e.conj().transpose(0, 2, 1))) > DEFAULT_TOL:
            raise ValueError("effects must be Hermitian")
        if np.min(np.linalg.eigvalsh(e)) < -DEFAULT_TOL:
            raise ValueError("effects must be positive semidefinite")
        if np.max(np.abs(e.sum(axis=0) - np.eye(e.shape[1]))) > DEFAULT_TOL:
            raise ValueError("effects do not sum to the identity")
        e.setflags(write=False)
        object.__setattr__(self, "effects", e)
        object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))

    @property
    def dim(self) -> int:
        return self.effects.shape[1]

    @property
    def num_outcomes(self) -> int:
        return self.effects.shape[0]

    def index(self, label) -> int:
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise KeyError(f"unknown outcome label {label!r}; valid: {self.labels}") from None


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Per-outcome lists of Kraus operators; outcome k has effect sum_j A^dag A."""

    operators: tuple[np.ndarray, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        ops = tuple(np.array(a, dtype=complex).reshape(-1, *np.shape(a)[-2:]) for a in self.operators)
        dims = {a.shape[-1] for a in ops} | {a.shape[-2] for a in ops}
        if len(dims) != 1:
            raise ValueError("Kraus operators must be square and share one dimension")
        for a in ops:
            a.setflags(write=False)
        object.__setattr__(self, "operators", ops)
        labels = tuple(str(s) for s in self.labels) or tuple(str(k) for k in range(len(ops)))
        object.__setattr__(self, "labels", labels)
        total = sum(self.effect(k) for k in range(len(ops)))
        if np.max(np.abs(total - np.eye(self.dim))) > DEFAULT_TOL:
            raise ValueError("Kraus operators are not complete: sum A^dag A != I")

    @property
    def dim(self) -> int:
        return self.operators[0].shape[-1]

    def effect(self, k: int) -> np.ndarray:
        a = self.operators[k]
        return np.einsum("jba,jbc->ac", a.conj(), a)

    def induced_povm(self) -> Povm:
        return Povm(np.stack([self.effect(k) for k in range(len(self.operators))]), self.labels)


def born_probabilities(state, povm: Povm) -> np.ndarray:
    rho = np.asarray(state, dtype=complex)
    if rho.shape != (povm.dim, povm.dim):
        raise ValueError(f"dimension mismatch: state {rho.shape[0]} vs POVM {povm.dim}")
    p = np.einsum("ij,kji->k", rho, povm.effects).real
    p[p < 0] = 0.0
    return p


def _embed(op: np.ndarray, factor_dims: Sequence[int], site: int) -> np.ndarray:
    """Embed an operator acting on consecutive factors starting at ``site``."""
    dims = list(factor_dims)
    d = op.shape[-1]
    start = site - 1
    span, stop = 1, start
    while span < d and stop < len(dims):
        span *= dims[stop]
        stop += 1
    if span != d:
        raise ValueError(f"operator of dim {d} does not fit factors {dims} at site {site}")
    left = int(np.prod(dims[:start]))
    right = int(np.prod(dims[stop:]))
    return np.kron(np.kron(np.eye(left), op), np.eye(right))


def kraus_update(state: DensityOperator, channel: KrausChannel, outcome: int,
                 acting_site: int = 1) -> DensityOperator:
    """Post-measurement state for ``outcome`` with the channel acting at ``acting_site``.

    Raises
    ------
    ZeroProbabilityOutcome
        If the outcome has probability at or below ``PROB_FLOOR``.
    """
    if not 1 <= acting_site <= state.num_sites:
        raise IndexError(f"acting_site {acting_site} out of range")
    ops = [_embed(a, state.factor_dims, acting_site) for a in channel.operators[outcome]]
    rho = state.matrix
    out = sum(a @ rho @ a.conj().T for a in ops)
    p = float(np.trace(out).real)
    if p <= PROB_FLOOR:
        raise ZeroProbabilityOutcome(f"outcome {channel.labels[outcome]!r} has probability {p:.3g}")
    out = out / p
    out = 0.5 * (out + out.conj().T)
    return DensityOperator(out, state.factor_dims)


def psd_sqrt(m: np.ndarray) -> np.ndarray:
    lam, vec = np.linalg.eigh(m)
    return (vec * np.sqrt(np.clip(lam, 0.0, None))) @ vec.conj().T


def lueders_channel(povm: Povm) -> KrausChannel:
    """The canonical channel with one Kraus operator sqrt(E_k) per outcome."""
    return KrausChannel(tuple(psd_sqrt(e)[None] for e in povm.effects), povm.labels)


def product_povm(p: Povm, q: Povm) -> Povm:
    effects = np.einsum("aij,bkl->abikjl", p.effects, q.effects)
    d = p.dim * q.dim
    effects = effects.reshape(p.num_outcomes * q.num_outcomes, d, d)
    labels = [f"{a}|{b}" for a in p.labels for b in q.labels]
    pf = p.factors or (p,)
    qf = q.factors or (q,)
    return Povm(effects, tuple(labels), pf + qf)


def _z_basis() -> Povm:
    return Povm(np.stack([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]), ("0", "1"))


def _sic_qubit() -> Povm:
    eff = np.stack([(np.eye(2) + bloch_operator(a)) / 4 for a in SIC_BLOCH])
    return Povm(eff, ("0", "1", "2", "3"))


def _pauli6() -> Povm:
    axes = {"x": (1, 0, 0), "y": (0, 1, 0), "z": (0, 0, 1)}
    eff, labels = [], []
    for name, a in axes.items():
        for sgn, tag in ((1, "+"), (-1, "-")):
            eff.append((np.eye(2) + sgn * bloch_operator(a)) / 6)
            labels.append(name + tag)
    return Povm(np.stack(eff), tuple(labels))


def _bell_basis() -> Povm:
    s = 1 / np.sqrt(2)
    vecs = {
        "phi+": [s, 0, 0, s],
        "phi-": [s, 0, 0, -s],
        "psi+": [0, s, s, 0],
        "psi-": [0, s, -s, 0],
    }
    eff = [np.outer(v, np.conj(v)) for v in map(np.array, vecs.values())]
    return Povm(np.stack(eff), tuple(vecs))


_NAMED = {
    "z_basis": _z_basis,
    "sic_qubit": _sic_qubit,
    "pauli6": _pauli6,
    "bell_basis": _bell_basis,
}
_PRODUCT_RE = re.compile(r"^product\((.*)\)$")


def _split_args(s: str) -> list[str]:
    depth, cur, out = 0, "", []
    for ch in s:
        if ch == "," and depth == 0:
            out.append(cur.strip())
            cur = ""
            continue
        depth += (ch == "(") - (ch == ")")
        cur += ch
    out.append(cur.strip())
    return out


def standard_povm(kind) -> Povm:
    """Build a named POVM.

    ``kind`` is one of ``z_basis``, ``sic_qubit``, ``pauli6``, ``bell_basis`` or
    ``product(p,q)`` (nesting allowed); a tuple ``("product", p, q)`` also works.
    """
    if isinstance(kind, tuple) and kind and kind[0] == "product":
        return product_povm(standard_povm(kind[1]), standard_povm(kind[2]))
    if not isinstance(kind, str):
        raise ValueError(f"unknown POVM kind {kind!r}")
    name = kind.strip()
    if name in _NAMED:
        return _NAMED[name]()
    m = _PRODUCT_RE.match(name)
    if m:
        args = _split_args(m.group(1))
        if len(args) != 2:
            raise ValueError(f"product POVM takes two arguments: {kind!r}")
        return product_povm(standard_povm(args[0]), standard_povm(args[1]))
    raise ValueError(f"unknown POVM kind {kind!r}")


def is_informationally_complete(povm: Povm, tol: float = 1e-8) -> bool:
    """True iff the effects span the full d^2-dimensional operator space."""
    d = povm.dim
    stack = povm.effects.reshape(povm.num_outcomes, d * d)
    s = np.linalg.svd(stack, compute_uv=False)
    rank = int(np.sum(s > tol * max(1.0, s[0])))
    return rank == d * d
