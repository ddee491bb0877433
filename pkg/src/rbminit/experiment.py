"""Experiment harness: beta-multiplier sweep x seeds.

Mirrors the evaluation protocol of the learning experiments: for each
multiplier in {1/4, 1/2, 1, 2, 4} (by default) of beta_max, train from a
fresh dataset-free initialization under several seeds and report the mean
and standard deviation of the training log likelihood per (multiplier,
epoch).  Runs are independent, so they may execute in a process pool;
results are assembled in a fixed order either way.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .evaluation import MaisConfig, mais_log_likelihood
from .initialization import InitSpec, beta_max_cached, init_rbm
from .rbm import EXACT_ENUMERATION_CAP, Dataset, Rbm
from .spaces import HiddenSpace
from .training import TrainConfig, train

DEFAULT_MULTIPLIERS = (0.25, 0.5, 1.0, 2.0, 4.0)


@dataclass(frozen=True)
class ExperimentSpec:
    m: int
    hidden: HiddenSpace
    c: float = 0.0
    multipliers: Tuple[float, ...] = DEFAULT_MULTIPLIERS
    epochs: int = 200
    seeds: int = 10
    gradient: str = "exact"
    evaluation: str = "exact"  # 'exact' | 'mais' | 'none'
    mais_sample_size: int = 2000
    mais_schedule_size: int = 1000
    lr: float = 0.01
    batch_size: int = 0
    chains: int = 1000
    pcd_steps: int = 40
    relaxation: int = 500
    eval_every: int = 1
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be positive")
        if self.seeds < 1:
            raise ValueError("seeds must be >= 1")
        if any(mult <= 0 for mult in self.multipliers):
            raise ValueError("beta multipliers must be positive")
        if self.evaluation not in ("exact", "mais", "none"):
            raise ValueError(f"unknown evaluation mode {self.evaluation!r}")


@dataclass(frozen=True)
class RunRecord:
    multiplier: float
    seed_index: int
    epoch: int
    log_likelihood: Optional[float]


@dataclass(frozen=True)
class SummaryRecord:
    multiplier: float
    epoch: int
    mean_ll: float
    std_ll: float
    runs: int


@dataclass(frozen=True)
class ExperimentResult:
    beta_max: float
    runs: List[RunRecord] = field(default_factory=list)
    summary: List[SummaryRecord] = field(default_factory=list)


def _derived_seed(base: int, mult_idx: int, seed_idx: int, stream: int) -> int:
    return int(
        np.random.SeedSequence([base, mult_idx, seed_idx, stream]).generate_state(1)[0]
    )


def _run_one(args) -> List[Tuple[int, Optional[float]]]:
    data, spec, beta_max, mult_idx, seed_idx = args
    multiplier = spec.multipliers[mult_idx]
    rbm = init_rbm(
        InitSpec(
            n=data.n,
            m=spec.m,
            hidden=spec.hidden,
            c=spec.c,
            beta=multiplier * beta_max,
            seed=_derived_seed(spec.seed, mult_idx, seed_idx, 0),
        )
    )
    config = TrainConfig(
        epochs=spec.epochs,
        batch_size=spec.batch_size,
        gradient=spec.gradient,
        chains=spec.chains,
        pcd_steps=spec.pcd_steps,
        relaxation=spec.relaxation,
        lr=spec.lr,
        seed=_derived_seed(spec.seed, mult_idx, seed_idx, 1),
        eval_every=spec.eval_every,
    )
    evaluator = _make_evaluator(spec, data, _derived_seed(spec.seed, mult_idx, seed_idx, 2))
    _, metrics = train(rbm, data, config, evaluator=evaluator)
    return metrics


def _make_evaluator(spec: ExperimentSpec, data: Dataset, eval_seed: int):
    if spec.evaluation == "none":
        return lambda rbm: None
    if spec.evaluation == "mais":
        cfg = MaisConfig(spec.mais_sample_size, spec.mais_schedule_size, seed=eval_seed)

        def ev(rbm: Rbm) -> float:
            ll, _ = mais_log_likelihood(rbm, data, cfg)
            return ll

        return ev
    if data.n > EXACT_ENUMERATION_CAP:
        raise ValueError(
            f"exact evaluation infeasible at n={data.n}; use evaluation='mais'"
        )
    return None  # train() falls back to its exact default


def run_experiment(data: Dataset, spec: ExperimentSpec) -> ExperimentResult:
    """Run the multiplier x seed grid and summarize per (multiplier, epoch)."""
    beta_max = beta_max_cached(spec.m / data.n, spec.c, spec.hidden)
    jobs = [
        (data, spec, beta_max, mult_idx, seed_idx)
        for mult_idx in range(len(spec.multipliers))
        for seed_idx in range(spec.seeds)
    ]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            all_metrics = list(pool.map(_run_one, jobs))
    else:
        all_metrics = [_run_one(job) for job in jobs]

    runs: List[RunRecord] = []
    by_key = {}
    for (_, _, _, mult_idx, seed_idx), metrics in zip(jobs, all_metrics):
        multiplier = spec.multipliers[mult_idx]
        for epoch, ll in metrics:
            runs.append(RunRecord(multiplier, seed_idx, epoch, ll))
            if ll is not None:
                by_key.setdefault((mult_idx, epoch), []).append(ll)

    summary = [
        SummaryRecord(
            multiplier=spec.multipliers[mult_idx],
            epoch=epoch,
            mean_ll=float(np.mean(vals)),
            std_ll=float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0,
            runs=len(vals),
        )
        for (mult_idx, epoch), vals in sorted(by_key.items())
    ]
    return ExperimentResult(beta_max=beta_max, runs=runs, summary=summary)
