"""Numpy implementations of the particle kernels (fallback for ``_kernels``)."""
import numpy as np

_CHUNK = 2048


def born_likelihoods(states, effect):
    """Re tr(rho_i E) for a stack of states."""
    states = np.ascontiguousarray(states, dtype=np.complex128)
    effect = np.ascontiguousarray(effect, dtype=np.complex128)
    return np.einsum("nij,ji->n", states, effect).real.copy()


def weighted_tensor_power(weights, states, n):
    """sum_i w_i rho_i^(x n), skipping zero-weight particles."""
    weights = np.asarray(weights, dtype=np.float64)
    states = np.asarray(states, dtype=np.complex128)
    d = states.shape[1]
    big = d**n
    out = np.zeros((big, big), dtype=np.complex128)
    live = np.flatnonzero(weights)
    for start in range(0, live.size, _CHUNK):
        sel = live[start:start + _CHUNK]
        w = weights[sel]
        base = states[sel]
        acc = base
        for _ in range(n - 1):
            s = acc.shape[1]
            acc = np.einsum("nij,nkl->nikjl", acc, base).reshape(-1, s * d, s * d)
        out += np.einsum("n,nij->ij", w, acc)
    return out


def systematic_resample(weights, u):
    """Systematic resampling indices for offset ``u`` in [0, 1)."""
    weights = np.asarray(weights, dtype=np.float64)
    n = weights.size
    cum = np.cumsum(weights)
    cum /= cum[-1]
    pos = (u + np.arange(n)) / n
    idx = np.searchsorted(cum, pos, side="right")
    return np.minimum(idx, n - 1).astype(np.int64)
