"""Independent reference computations shared by several test modules."""
from fractions import Fraction

import numpy as np

K_MAX = 14  # 2^{-14^2} is far below double precision


def cip_sequences():
    """Fresh counter-inductive prior as explicit (lead, k, exact weight) triples."""
    raw = [(lead, k, Fraction(1, 2 ** (k * k))) for k in range(1, K_MAX + 1) for lead in (0, 1)]
    total = sum(w for _, _, w in raw)
    return [(lead, k, w / total) for lead, k, w in raw]


def symbol_at(lead, k, t):
    """t-th symbol (0-based) of lead^k (1-lead)^omega."""
    return lead if t < k else 1 - lead


def cip_brute_force_state(prefix, n):
    """Diagonal of the n-system posterior state after observing ``prefix``, by enumeration."""
    seqs = [(lead, k, w) for lead, k, w in cip_sequences()
            if all(symbol_at(lead, k, t) == s for t, s in enumerate(prefix))]
    total = sum(w for _, _, w in seqs)
    if total == 0:
        return None
    diag = [Fraction(0)] * 2**n
    off = len(prefix)
    for lead, k, w in seqs:
        idx = 0
        for t in range(off, off + n):
            idx = 2 * idx + symbol_at(lead, k, t)
        diag[idx] += w / total
    return np.array([float(x) for x in diag])
