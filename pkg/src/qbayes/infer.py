"""Sequential Bayesian updating of prior sequences."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from . import _backend
from .measure import (
    KrausChannel,
    Povm,
    ZeroEvidence,
    born_probabilities,
    kraus_update,
    standard_povm,
)
from .priors import ChangePointPrior, ParticleEnsemble, PriorSequence
from .qalg import DensityOperator, partial_trace, project_to_density, trace_distance

log = logging.getLogger(__name__)

EVIDENCE_FLOOR = 1e-300
CHECKPOINT_EVERY = 100


# ------------------------------------------------------------ ensembles


def _block_power(states: np.ndarray, s: int) -> np.ndarray:
    acc = states
    for _ in range(s - 1):
        d, b = acc.shape[1], states.shape[1]
        acc = np.einsum("nij,nkl->nikjl", acc, states).reshape(-1, d * b, d * b)
    return acc


def _systems_per_povm(e: ParticleEnsemble, povm: Povm) -> int:
    d, s = e.block_hilbert_dim, 1
    while d**s < povm.dim:
        s += 1
    if d**s != povm.dim:
        raise ValueError(f"POVM dim {povm.dim} is not a power of the block dim {d}")
    return s


def ensemble_likelihoods(e: ParticleEnsemble, povm: Povm, outcome: int) -> np.ndarray:
    """tr(sigma_i^(x s) E_k) for each particle, s blocks covered by the POVM."""
    s = _systems_per_povm(e, povm)
    states = e.states if s == 1 else _block_power(e.states, s)
    lik = _backend.born_likelihoods(states, povm.effects[outcome])
    lik[lik < 0] = 0.0
    return lik


def bayes_update_ensemble(e: ParticleEnsemble, povm: Povm, outcome: int) -> ParticleEnsemble:
    """Reweight particles by the Born likelihood of ``outcome``.

    Particle states are untouched; only the mixing weights learn.
    """
    lik = ensemble_likelihoods(e, povm, outcome)
    w = e.weights * lik
    total = float(np.sum(w))
    if not total > EVIDENCE_FLOOR:
        raise ZeroEvidence(f"outcome {povm.labels[outcome]!r} has zero evidence under the ensemble")
    w = w / total
    w[w < EVIDENCE_FLOOR] = 0.0
    return e.with_weights(w / w.sum())


def effective_sample_size(e: ParticleEnsemble) -> float:
    return float(1.0 / np.sum(e.weights**2))


def resample_move(e: ParticleEnsemble, seed: int, shrink: float = 0.98) -> ParticleEnsemble:
    """Systematic resampling followed by a Liu-West kernel move.

    Each resampled particle is contracted toward the weighted ensemble mean,
    ``a*rho + (1-a)*mean``, then jittered by Gaussian noise whose covariance is
    ``(1 - a**2)`` times the weighted particle covariance (in the real
    coordinates of Hermitian, traceless perturbations), and finally projected
    back onto the density operators.  The contraction and jitter preserve the
    mean and spread of the cloud; the move is exactly the identity when
    ``shrink == 1`` or when all particles coincide.
    """
    if not 0.0 < shrink <= 1.0:
        raise ValueError("shrink must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    n, d = e.num_particles, e.block_hilbert_dim
    mean = e.mean_block_state()
    idx = _backend.systematic_resample(e.weights, rng.random())
    states = e.states[idx]
    if shrink < 1.0:
        x = _to_real(e.states)
        xbar = e.weights @ x
        dx = x - xbar
        cov = (e.weights[:, None] * dx).T @ dx
        h2 = 1.0 - shrink**2
        lam, vec = np.linalg.eigh(h2 * cov)
        root = vec * np.sqrt(np.clip(lam, 0.0, None))
        noise = rng.standard_normal((n, root.shape[0])) @ root.T
        moved = shrink * states + (1.0 - shrink) * mean + _from_real(noise, d)
        if np.any(noise):
            states = project_to_density(moved)
        else:
            states = moved
    return replace(e, weights=np.full(n, 1.0 / n), states=states)


def _to_real(states: np.ndarray) -> np.ndarray:
    """Real coordinates of Hermitian matrices: diagonal, then Re/Im of the upper triangle."""
    d = states.shape[1]
    iu = np.triu_indices(d, 1)
    diag = np.einsum("nii->ni", states).real
    off = states[:, iu[0], iu[1]]
    return np.concatenate([diag, off.real, off.imag], axis=1)


def _from_real(x: np.ndarray, d: int) -> np.ndarray:
    """Inverse of ``_to_real``; the diagonal is made traceless."""
    n = x.shape[0]
    iu = np.triu_indices(d, 1)
    k = len(iu[0])
    out = np.zeros((n, d, d), dtype=complex)
    diag = x[:, :d] - x[:, :d].mean(axis=1, keepdims=True)
    out[:, np.arange(d), np.arange(d)] = diag
    off = x[:, d:d + k] + 1j * x[:, d + k:]
    out[:, iu[0], iu[1]] = off
    out[:, iu[1], iu[0]] = off.conj()
    return out


class OutcomeCounts:
    """Sufficient statistics of the data seen so far: counts per (POVM, outcome)."""

    def __init__(self):
        self._povms: list[Povm] = []
        self._counts: list[np.ndarray] = []

    def add(self, povm: Povm, outcome: int) -> None:
        for p, c in zip(self._povms, self._counts):
            if p is povm:
                c[outcome] += 1
                return
        c = np.zeros(povm.num_outcomes, dtype=np.int64)
        c[outcome] = 1
        self._povms.append(povm)
        self._counts.append(c)

    def loglik(self, states: np.ndarray, block_hilbert_dim: int) -> np.ndarray:
        """Log-likelihood of all recorded data for each block state in ``states``."""
        out = np.zeros(states.shape[0])
        for p, c in zip(self._povms, self._counts):
            s = int(round(np.log(p.dim) / np.log(block_hilbert_dim)))
            big = states if s == 1 else _block_power(states, s)
            live = np.flatnonzero(c)
            lik = np.einsum("nij,kji->nk", big, p.effects[live]).real
            with np.errstate(divide="ignore"):
                out += np.log(np.clip(lik, 0.0, None)) @ c[live]
        return out


def _haar_unitaries(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    z = rng.standard_normal((n, d, d)) + 1j * rng.standard_normal((n, d, d))
    q, r = np.linalg.qr(z)
    ph = np.einsum("nii->ni", r)
    return q * (ph / np.abs(ph))[:, None, :]


def pcn_move(e: ParticleEnsemble, counts: OutcomeCounts, seed: int, steps: int = 5,
             beta: float = 0.1) -> tuple[ParticleEnsemble, float]:
    """Posterior-invariant Metropolis rejuvenation for Hilbert-Schmidt ensembles.

    Each particle is lifted to a Ginibre matrix ``G = sqrt(t rho) U`` (``t`` the
    chi-square trace, ``U`` Haar), which is the exact conditional law of G
    given rho.  Preconditioned Crank-Nicolson proposals
    ``G' = sqrt(1 - beta**2) G + beta Z`` leave the Gaussian prior invariant, so
    acceptance depends on the likelihood ratio alone.  Returns the moved
    ensemble (equal weights expected on input) and the mean acceptance rate.
    """
    if e.measure != "hilbert_schmidt":
        raise ValueError(f"pCN move targets Hilbert-Schmidt priors, not {e.measure!r}")
    rng = np.random.default_rng(seed)
    n, d = e.num_particles, e.block_hilbert_dim
    lam, vec = np.linalg.eigh(e.states)
    t = 2.0 * rng.gamma(d * d, size=n)
    root = (vec * np.sqrt(np.clip(lam, 0.0, None) * t[:, None])[:, None, :]) @ vec.conj().transpose(0, 2, 1)
    g = root @ _haar_unitaries(rng, n, d)
    rho = e.states
    ll = counts.loglik(rho, d)
    accepted = 0
    c = np.sqrt(1.0 - beta**2)
    for _ in range(steps):
        z = rng.standard_normal((n, d, d)) + 1j * rng.standard_normal((n, d, d))
        g_new = c * g + beta * z
        r_new = g_new @ g_new.conj().transpose(0, 2, 1)
        r_new /= np.trace(r_new, axis1=1, axis2=2).real[:, None, None]
        ll_new = counts.loglik(r_new, d)
        with np.errstate(invalid="ignore"):
            acc = np.log(rng.random(n)) < ll_new - ll
        g[acc], rho, ll = g_new[acc], np.where(acc[:, None, None], r_new, rho), np.where(acc, ll_new, ll)
        accepted += int(acc.sum())
    moved = replace(e, weights=np.full(n, 1.0 / n), states=rho)
    return moved, accepted / (steps * n)


# ------------------------------------------------------------ change point


def cip_condition(p: ChangePointPrior, outcome: int) -> ChangePointPrior:
    """Condition the change-point measure on the next observed symbol."""
    if outcome not in (0, 1):
        raise ValueError(f"change-point prior needs a binary outcome, got {outcome!r}")
    if p.mode == "symmetric_fresh":
        return replace(p, mode="conditioned", run_symbol=outcome, run_length=1)
    if p.resolved:
        if outcome == p.run_symbol:
            raise ZeroEvidence(f"symbol {outcome} after the change point has zero prior probability")
        return p
    if outcome == p.run_symbol:
        return replace(p, run_length=p.run_length + 1)
    return replace(p, resolved=True)


# ------------------------------------------------------------ dense oracle


def dense_sequence_update(state: DensityOperator, channel: KrausChannel, outcome: int) -> DensityOperator:
    """Measure the first system(s) with ``channel`` and discard them."""
    if state.num_sites < 2:
        raise ValueError("need at least two systems")
    post = kraus_update(state, channel, outcome, acting_site=1)
    covered, span = 0, 1
    while span < channel.dim:
        span *= post.factor_dims[covered]
        covered += 1
    for _ in range(covered):
        post = partial_trace(post, 1)
    return post


# ------------------------------------------------------------ predictive


def predictive_marginal(prior: PriorSequence, n: int = 1) -> DensityOperator:
    return prior.state_at(n)


def predictive_probabilities(prior: PriorSequence, povm: Povm) -> np.ndarray:
    """Born probabilities of the next outcome; a POVM on several systems uses their joint marginal."""
    n = 1
    while 2**n < povm.dim:
        n += 1
    return born_probabilities(predictive_marginal(prior, n), povm)


def update(prior: PriorSequence, povm: Povm, outcome: int) -> PriorSequence:
    """Dispatch one Bayesian update to the prior's representation."""
    if isinstance(prior, ParticleEnsemble):
        return bayes_update_ensemble(prior, povm, outcome)
    if isinstance(prior, ChangePointPrior):
        if povm.dim != 2 or not np.allclose(povm.effects, standard_povm("z_basis").effects):
            raise ValueError("the change-point prior is conditioned on z-basis outcomes only")
        return cip_condition(prior, outcome)
    raise TypeError(f"no update rule for {type(prior).__name__}")


# ------------------------------------------------------------ runner


@dataclass(frozen=True)
class StepRecord:
    iteration: int
    outcome: str
    pred_prob: float
    marginal_1: np.ndarray
    td_target: float
    ess: float | None
    marginal_2: np.ndarray | None = None


@dataclass
class InferenceTrajectory:
    records: list[StepRecord] = field(default_factory=list)
    final_prior: PriorSequence | None = None
    target: np.ndarray | None = None

    def __len__(self):
        return len(self.records)

    @property
    def checkpoints(self) -> list[StepRecord]:
        return [r for r in self.records if r.marginal_2 is not None]


@dataclass(frozen=True)
class RunOptions:
    """Runner settings.

    ``move`` selects the rejuvenation after resampling: ``"liu_west"`` (the
    shrink-and-jitter kernel of :func:`resample_move`) or ``"pcn"`` (resample
    then :func:`pcn_move`, Hilbert-Schmidt ensembles only).
    """

    target: DensityOperator | np.ndarray | None = None
    resample: bool = False
    ess_threshold: float = 0.5
    shrink: float = 0.98
    resample_seed: int = 42
    move: str = "liu_west"
    mcmc_steps: int = 5
    checkpoint_every: int = CHECKPOINT_EVERY


def _marginal_for_target(prior: PriorSequence, m1: np.ndarray, target: np.ndarray) -> np.ndarray:
    if target.shape[0] == 2:
        return m1
    n = int(round(np.log2(target.shape[0])))
    return prior.state_at(n).matrix


def run_inference(prior: PriorSequence, outcomes: Iterable[int], povm: Povm | Sequence[Povm],
                  options: RunOptions = RunOptions()) -> InferenceTrajectory:
    """Iterate update -> record -> optional resample over an outcome stream.

    ``povm`` is a single POVM or a schedule cycled over the steps.  Each record
    holds the predictive probability of the observed outcome (under the prior
    before the update), the one-system marginal after the update and its
    trace distance to ``options.target``.  Two-system marginals are stored
    every ``options.checkpoint_every`` steps.

    Raises
    ------
    ZeroEvidence
        With ``.iteration`` set to the 1-based step at which the data were
        excluded by the prior.
    """
    schedule = [povm] if isinstance(povm, Povm) else list(povm)
    target = None if options.target is None else np.asarray(options.target, dtype=complex)
    if options.move not in ("liu_west", "pcn"):
        raise ValueError(f"unknown move {options.move!r}")
    traj = InferenceTrajectory(target=target)
    counts = OutcomeCounts()
    beta = 0.2
    for i, k in enumerate(outcomes):
        step = i + 1
        p = schedule[i % len(schedule)]
        pred = float(predictive_probabilities(prior, p)[k])
        try:
            if pred <= 0.0:
                raise ZeroEvidence(f"outcome {p.labels[k]!r} has predictive probability 0")
            prior = update(prior, p, k)
            counts.add(p, k)
        except ZeroEvidence as exc:
            exc.iteration = step
            log.info("prior excluded the data at iteration %d", step)
            raise
        ess = effective_sample_size(prior) if isinstance(prior, ParticleEnsemble) else None
        if (options.resample and isinstance(prior, ParticleEnsemble)
                and ess < options.ess_threshold * prior.num_particles):
            seed = options.resample_seed + step
            if options.move == "pcn":
                prior = resample_move(prior, seed, 1.0)
                prior, rate = pcn_move(prior, counts, seed, options.mcmc_steps, beta)
                beta = float(np.clip(beta * np.exp(2.0 * (rate - 0.25)), 1e-4, 1.0))
            else:
                prior = resample_move(prior, seed, options.shrink)
        m1 = predictive_marginal(prior, 1).matrix
        td = float("nan") if target is None else trace_distance(_marginal_for_target(prior, m1, target), target)
        m2 = predictive_marginal(prior, 2).matrix if step % options.checkpoint_every == 0 else None
        traj.records.append(StepRecord(step, p.labels[k], pred, m1, td, ess, m2))
    traj.final_prior = prior
    return traj
