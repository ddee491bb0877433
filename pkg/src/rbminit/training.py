"""Maximum-likelihood RBM training.

Gradient ascent on the training log likelihood: each parameter's gradient
is a data expectation minus a model expectation.  At desk scale (n within
the enumeration cap) the model term is exact; beyond it, persistent
contrastive divergence estimates it from Markov chains that survive
across parameter updates.  Updates use the adam optimizer with its
canonical moment decays (0.9, 0.999, eps 1e-8), applied in the ascent
direction.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .rbm import (
    EXACT_ENUMERATION_CAP,
    Dataset,
    EnumerationCapError,
    Rbm,
    advance_chains,
    exact_marginal_stats,
    hidden_conditional_mean,
    random_visible,
    visible_log_unnorm,
)


@dataclass(frozen=True)
class Gradient:
    """Log-likelihood gradient, shaped like the parameters."""

    db: np.ndarray
    dc: np.ndarray
    dw: np.ndarray


@dataclass
class AdamState:
    """First/second-moment accumulators plus the step counter."""

    m_b: np.ndarray
    m_c: np.ndarray
    m_w: np.ndarray
    v_b: np.ndarray
    v_c: np.ndarray
    v_w: np.ndarray
    step: int = 0
    lr: float = 0.01
    decay1: float = 0.9
    decay2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_rbm(cls, rbm: Rbm, lr: float = 0.01) -> "AdamState":
        return cls(
            m_b=np.zeros(rbm.n),
            m_c=np.zeros(rbm.m),
            m_w=np.zeros((rbm.n, rbm.m)),
            v_b=np.zeros(rbm.n),
            v_c=np.zeros(rbm.m),
            v_w=np.zeros((rbm.n, rbm.m)),
            lr=lr,
        )


@dataclass(frozen=True)
class TrainConfig:
    """Training protocol knobs.

    batch_size = 0 means full batch.  `chains`, `pcd_steps` and
    `relaxation` only matter in 'pcd' mode: chains start from uniform
    random states, relax on the initial RBM, then advance `pcd_steps`
    blocked Gibbs sweeps per parameter update.  `eval_every` thins the
    recorded likelihood rows (exact full-batch mode records every epoch
    for free).
    """

    epochs: int
    batch_size: int = 0
    gradient: str = "exact"  # 'exact' | 'pcd'
    chains: int = 1000
    pcd_steps: int = 40
    relaxation: int = 500
    lr: float = 0.01
    seed: int = 0
    eval_every: int = 1

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.gradient not in ("exact", "pcd"):
            raise ValueError(f"gradient mode must be 'exact' or 'pcd', got {self.gradient!r}")
        if self.batch_size < 0:
            raise ValueError("batch_size must be >= 0 (0 = full batch)")
        if self.eval_every < 1:
            raise ValueError("eval_every must be >= 1")


class PersistentChains:
    """Visible-state Markov chains that persist across gradient calls."""

    def __init__(self, states: np.ndarray, rng: np.random.Generator):
        self.states = np.asarray(states, dtype=np.float64)
        self.rng = rng

    @classmethod
    def initialize(
        cls, rbm: Rbm, count: int, relaxation: int, rng: np.random.Generator
    ) -> "PersistentChains":
        """Uniform random visible states relaxed on the given (initial) RBM."""
        states = random_visible(rbm.n, count, rng)
        if relaxation > 0:
            states, _ = advance_chains(rbm, states, rng, sweeps=relaxation)
        return cls(states, rng)


def _data_terms(rbm: Rbm, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    v = np.asarray(points, dtype=np.float64)
    t = hidden_conditional_mean(rbm, v)
    nb = v.shape[0]
    return v.mean(axis=0), t.mean(axis=0), v.T @ t / nb


def exact_gradient(rbm: Rbm, batch: Dataset) -> Gradient:
    """Data expectations minus exact model expectations."""
    grad, _ = exact_gradient_with_ll(rbm, batch)
    return grad


def exact_gradient_with_ll(rbm: Rbm, batch: Dataset) -> Tuple[Gradient, float]:
    """Exact gradient plus the training log likelihood of the same model.

    The enumeration pass already fixes log Z, so the likelihood is free;
    the full-batch training loop records it instead of re-enumerating.
    """
    if batch.n != rbm.n:
        raise ValueError(f"dataset has n={batch.n}, rbm has n={rbm.n}")
    stats = exact_marginal_stats(rbm)
    db, dc, dw = _data_terms(rbm, batch.points)
    grad = Gradient(db=db - stats.mean_v, dc=dc - stats.mean_h, dw=dw - stats.corr_vh)
    ll = float(np.mean(visible_log_unnorm(rbm, batch.points.astype(np.float64)))) - stats.log_z
    return grad, ll


def pcd_gradient(
    rbm: Rbm, batch: Dataset, chains: PersistentChains, steps: int = 40
) -> Gradient:
    """Persistent-CD gradient: exact data term, chain-averaged model term.

    Every chain advances `steps` blocked Gibbs sweeps under the current
    parameters; the model term uses the conditional hidden means given the
    final visible states.  Chains are mutated in place and persist across
    calls.
    """
    if batch.n != rbm.n:
        raise ValueError(f"dataset has n={batch.n}, rbm has n={rbm.n}")
    chains.states, _ = advance_chains(rbm, chains.states, chains.rng, sweeps=steps)
    v = chains.states
    t = hidden_conditional_mean(rbm, v)
    nc = v.shape[0]
    db, dc, dw = _data_terms(rbm, batch.points)
    return Gradient(
        db=db - v.mean(axis=0),
        dc=dc - t.mean(axis=0),
        dw=dw - v.T @ t / nc,
    )


def adam_step(state: AdamState, rbm: Rbm, grad: Gradient) -> Tuple[Rbm, AdamState]:
    """One bias-corrected adam update in the ascent direction."""
    for g in (grad.db, grad.dc, grad.dw):
        if not np.all(np.isfinite(g)):
            raise ValueError("non-finite gradient")
    if grad.db.shape != rbm.b.shape or grad.dc.shape != rbm.c.shape or grad.dw.shape != rbm.w.shape:
        raise ValueError("gradient shapes do not match rbm")
    state.step += 1
    b1, b2 = state.decay1, state.decay2
    corr1 = 1.0 - b1**state.step
    corr2 = 1.0 - b2**state.step

    def upd(m, v, g, x):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        return x + state.lr * (m / corr1) / (np.sqrt(v / corr2) + state.epsilon)

    new = Rbm(
        b=upd(state.m_b, state.v_b, grad.db, rbm.b),
        c=upd(state.m_c, state.v_c, grad.dc, rbm.c),
        w=upd(state.m_w, state.v_w, grad.dw, rbm.w),
        hidden=rbm.hidden,
    )
    return new, state


Evaluator = Callable[[Rbm], Optional[float]]
Hook = Callable[[int, Optional[float], Rbm], None]


def _default_evaluator(data: Dataset) -> Evaluator:
    from .evaluation import exact_log_likelihood

    def ev(rbm: Rbm) -> Optional[float]:
        if rbm.n > EXACT_ENUMERATION_CAP:
            return None
        return exact_log_likelihood(rbm, data)

    return ev


def train(
    rbm: Rbm,
    data: Dataset,
    config: TrainConfig,
    evaluator: Optional[Evaluator] = None,
    hooks: Sequence[Hook] = (),
) -> Tuple[Rbm, List[Tuple[int, Optional[float]]]]:
    """Run (mini-)batch gradient ascent; returns (trained rbm, metric rows).

    Metric rows are (epoch, log likelihood of the model after that many
    epochs), starting with an epoch-0 baseline.  All randomness (chain
    init, chain transitions, batch shuffling) derives from config.seed.
    In exact full-batch mode the likelihood is recorded every epoch at no
    extra cost; other modes evaluate every `eval_every` epochs.
    """
    if config.gradient == "exact" and rbm.n > EXACT_ENUMERATION_CAP:
        raise EnumerationCapError(rbm.n)
    if data.n != rbm.n:
        raise ValueError(f"dataset has n={data.n}, rbm has n={rbm.n}")
    if evaluator is None:
        evaluator = _default_evaluator(data)

    ss = np.random.SeedSequence(config.seed)
    chain_seq, shuffle_seq = ss.spawn(2)
    shuffle_rng = np.random.default_rng(shuffle_seq)

    chains = None
    if config.gradient == "pcd":
        chains = PersistentChains.initialize(
            rbm, config.chains, config.relaxation, np.random.default_rng(chain_seq)
        )

    state = AdamState.for_rbm(rbm, lr=config.lr)
    metrics: List[Tuple[int, Optional[float]]] = []

    def record(epoch: int, ll: Optional[float]):
        metrics.append((epoch, ll))
        for hook in hooks:
            hook(epoch, ll, rbm)

    full_batch = config.batch_size == 0 or config.batch_size >= data.N
    exact_full = config.gradient == "exact" and full_batch

    if config.epochs == 0:
        record(0, evaluator(rbm))
        return rbm, metrics

    if exact_full:
        # the gradient pass evaluates the pre-update model, so each epoch's
        # pass supplies the previous epoch's likelihood row
        for epoch in range(1, config.epochs + 1):
            grad, ll_prev = exact_gradient_with_ll(rbm, data)
            record(epoch - 1, ll_prev)
            rbm, state = adam_step(state, rbm, grad)
        record(config.epochs, evaluator(rbm))
        return rbm, metrics

    record(0, evaluator(rbm))
    for epoch in range(1, config.epochs + 1):
        if full_batch:
            batches: Iterable[np.ndarray] = [data.points]
        else:
            order = shuffle_rng.permutation(data.N)
            batches = (
                data.points[order[i : i + config.batch_size]]
                for i in range(0, data.N, config.batch_size)
            )
        for chunk in batches:
            batch = Dataset(points=chunk, source=data.source)
            if config.gradient == "exact":
                grad = exact_gradient(rbm, batch)
            else:
                grad = pcd_gradient(rbm, batch, chains, steps=config.pcd_steps)
            rbm, state = adam_step(state, rbm, grad)
        if epoch % config.eval_every == 0 or epoch == config.epochs:
            record(epoch, evaluator(rbm))
    return rbm, metrics
