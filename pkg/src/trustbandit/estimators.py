"""Estimator-style wrappers over the policy selection routines.

Each estimator consumes a flat pull log: ``X`` holds arm labels (shape
``(n,)`` or ``(n, 1)``) and ``y`` the observed rewards.  ``fit`` groups the
pulls, runs the underlying method, and exposes the resulting stochastic
policy through ``arms_`` / ``weights_`` plus the certified ``lower_bound_``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .baselines import (
    PolicyReport,
    run_behavior,
    run_combined,
    run_greedy,
    run_lcb,
    trust_report,
)
from .core import ArmDataset, ArmStats, compute_stats
from .trust import run_trust


class _PolicyEstimator(BaseEstimator):
    """Shared fit/predict plumbing; subclasses implement ``_run``."""

    def _run(self, stats: ArmStats) -> PolicyReport:
        raise NotImplementedError

    def fit(self, X, y):
        labels = np.asarray(X)
        if labels.ndim == 2 and labels.shape[1] == 1:
            labels = labels[:, 0]
        if labels.ndim != 1:
            raise ValueError("X must be a 1-d array of arm labels (or a single column)")
        rewards = np.asarray(y, dtype=float)
        if rewards.shape != labels.shape:
            raise ValueError("X and y must have the same length")
        data = ArmDataset.from_pulls([str(a) for a in labels], rewards)
        stats = compute_stats(data, sigma=self.sigma)
        report = self._run(stats)
        self.stats_ = stats
        self.report_ = report
        self.arms_ = report.arms
        self.weights_ = report.policy.weights
        self.n_arms_ = len(report.arms)
        self.value_ = report.empirical_value
        self.lower_bound_ = report.lower_bound
        return self

    def predict(self, X=None):
        """Most likely arm label; X is accepted for interface compatibility."""
        self._check_fitted()
        return self.arms_[int(np.argmax(self.weights_))]

    def sample(self, n_draws: int = 1, random_state=None):
        """Draw arm labels from the fitted stochastic policy."""
        self._check_fitted()
        if isinstance(random_state, np.random.Generator):
            rng = random_state
        else:
            rng = np.random.default_rng(random_state)
        idx = rng.choice(self.n_arms_, size=n_draws, p=self.weights_ / self.weights_.sum())
        return [self.arms_[i] for i in idx]

    def _check_fitted(self):
        if not hasattr(self, "report_"):
            raise RuntimeError("estimator is not fitted; call fit(X, y) first")


class GreedyPolicy(_PolicyEstimator):
    """Point mass on the arm with the highest sample mean (no certificate)."""

    def __init__(self, sigma="bounded_quarter"):
        self.sigma = sigma

    def _run(self, stats: ArmStats) -> PolicyReport:
        return run_greedy(stats)


class LCBPolicy(_PolicyEstimator):
    """Point mass on the arm with the highest lower confidence bound."""

    def __init__(self, delta: float = 0.1, sigma="bounded_quarter"):
        self.delta = delta
        self.sigma = sigma

    def _run(self, stats: ArmStats) -> PolicyReport:
        return run_lcb(stats, self.delta)


class BehaviorClonePolicy(_PolicyEstimator):
    """Precision-weighted imitation of the logging distribution."""

    def __init__(self, delta: float = 0.1, sigma="bounded_quarter"):
        self.delta = delta
        self.sigma = sigma

    def _run(self, stats: ArmStats) -> PolicyReport:
        return run_behavior(stats, self.delta)


class TrustRegionPolicy(_PolicyEstimator):
    """Certified improvement over the logging distribution.

    Sweeps a geometric radius grid, estimates the localized deviation scale
    by Monte Carlo, and keeps the radius with the best penalized value.
    """

    def __init__(
        self,
        delta: float = 0.1,
        sigma="bounded_quarter",
        alpha: float = 1.3,
        grid_size: int = 40,
        m: int = 200,
        seed: int = 2023,
        n_jobs=None,
        strict_m0: bool = False,
    ):
        self.delta = delta
        self.sigma = sigma
        self.alpha = alpha
        self.grid_size = grid_size
        self.m = m
        self.seed = seed
        self.n_jobs = n_jobs
        self.strict_m0 = strict_m0

    def _run(self, stats: ArmStats) -> PolicyReport:
        outcome = run_trust(
            stats,
            delta=self.delta,
            alpha=self.alpha,
            grid_size=self.grid_size,
            m=self.m,
            seed=self.seed,
            n_jobs=self.n_jobs,
            strict_m0=self.strict_m0,
        )
        self.outcome_ = outcome
        return trust_report(outcome)


class CombinedPolicy(TrustRegionPolicy):
    """Better of the trust-region policy and the LCB arm, by lower bound."""

    def _run(self, stats: ArmStats) -> PolicyReport:
        trust = super()._run(stats)
        lcb = run_lcb(stats, self.delta)
        self.trust_report_ = trust
        self.lcb_report_ = lcb
        return run_combined(trust, lcb)
