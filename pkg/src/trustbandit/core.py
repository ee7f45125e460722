"""Core domain types for offline bandit data and stochastic policies.

A dataset is a fixed table of logged pulls, one reward list per arm.  All
downstream computation runs on per-arm sufficient statistics (counts, mean
rewards, noise scales), never on the raw pulls.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

# Numerical tolerances shared across modules.
TOL_SIMPLEX = 1e-9   # simplex membership: sum-to-one and nonnegativity slack
TOL_FEAS = 1e-8      # quadratic (trust-region) feasibility slack

_SIGMA_MODES = ("bounded_quarter", "empirical_std")


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ArmDataset:
    """Logged bandit data: an ordered list of arms with their reward samples.

    Parameters
    ----------
    arms : tuple of str
        Arm labels in first-seen order. Must be unique and non-empty.
    rewards : tuple of ndarray
        One 1-d float array per arm, each with at least one sample and all
        values finite.
    """

    arms: tuple[str, ...]
    rewards: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if len(self.arms) == 0:
            raise ValueError("dataset must contain at least one arm")
        if len(set(self.arms)) != len(self.arms):
            raise ValueError("arm labels must be unique")
        if len(self.rewards) != len(self.arms):
            raise ValueError("rewards must align with arms")
        clean = []
        for name, r in zip(self.arms, self.rewards):
            arr = np.asarray(r, dtype=float).ravel()
            if arr.size == 0:
                raise ValueError(f"arm {name!r} has no samples")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"arm {name!r} has non-finite rewards")
            clean.append(_frozen(arr))
        object.__setattr__(self, "arms", tuple(str(a) for a in self.arms))
        object.__setattr__(self, "rewards", tuple(clean))

    @property
    def n_arms(self) -> int:
        return len(self.arms)

    @classmethod
    def from_pulls(cls, arms: Sequence[str], rewards: Sequence[float]) -> "ArmDataset":
        """Group flat (arm, reward) pulls by arm, preserving first-seen order."""
        if len(arms) != len(rewards):
            raise ValueError("arms and rewards must have equal length")
        by_arm: dict[str, list[float]] = {}
        for a, r in zip(arms, rewards):
            by_arm.setdefault(str(a), []).append(float(r))
        labels = tuple(by_arm)
        return cls(labels, tuple(np.asarray(by_arm[a]) for a in labels))


@dataclass(frozen=True)
class ArmStats:
    """Per-arm sufficient statistics (counts, means, noise scale).

    Invariants: n >= 1 and sigma > 0 per arm; r_hat finite.
    """

    arms: tuple[str, ...]
    n: np.ndarray
    r_hat: np.ndarray
    sigma: np.ndarray

    def __post_init__(self) -> None:
        n = np.asarray(self.n, dtype=np.int64)
        r = np.asarray(self.r_hat, dtype=float)
        s = np.asarray(self.sigma, dtype=float)
        d = len(self.arms)
        if d == 0:
            raise ValueError("stats must cover at least one arm")
        if not (n.shape == r.shape == s.shape == (d,)):
            raise ValueError("stats arrays must be 1-d and aligned with arms")
        if np.any(n < 1):
            raise ValueError("every arm needs at least one sample")
        if not np.all(np.isfinite(r)):
            raise ValueError("non-finite mean reward")
        if np.any(s <= 0) or not np.all(np.isfinite(s)):
            raise ValueError("sigma must be positive and finite for every arm")
        object.__setattr__(self, "n", _frozen(n))
        object.__setattr__(self, "r_hat", _frozen(r))
        object.__setattr__(self, "sigma", _frozen(s))

    @property
    def n_arms(self) -> int:
        return len(self.arms)

    @property
    def variance_weights(self) -> np.ndarray:
        """Per-arm noise variance of the mean estimate, sigma_i^2 / n_i."""
        return self.sigma**2 / self.n

    def fingerprint(self) -> str:
        """Stable hash of (arms, n, r_hat, sigma); used to match reports."""
        h = hashlib.sha256()
        h.update("\x1f".join(self.arms).encode())
        for a in (self.n, self.r_hat, self.sigma):
            h.update(np.ascontiguousarray(a).tobytes())
        return h.hexdigest()[:16]


@dataclass(frozen=True)
class StochasticPolicy:
    """A probability vector over the arms of a dataset."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty 1-d array")
        if np.any(w < -TOL_SIMPLEX):
            raise ValueError("negative policy weight")
        if abs(w.sum() - 1.0) > TOL_SIMPLEX:
            raise ValueError("policy weights must sum to 1")
        object.__setattr__(self, "weights", _frozen(w))

    @property
    def n_arms(self) -> int:
        return self.weights.size


@dataclass(frozen=True)
class ImprovementVector:
    """A feasible policy change delta with sum zero.

    ``eps_used`` is the minimal trust-region radius at which delta is
    feasible, i.e. the weighted norm sqrt(sum_i delta_i^2 a_i) for the
    weights a_i it was solved under.
    """

    delta: np.ndarray
    eps_used: float

    def __post_init__(self) -> None:
        d = np.asarray(self.delta, dtype=float)
        if d.ndim != 1 or d.size == 0:
            raise ValueError("delta must be a non-empty 1-d array")
        if abs(d.sum()) > TOL_SIMPLEX:
            raise ValueError("delta must sum to zero")
        if self.eps_used < 0:
            raise ValueError("eps_used must be nonnegative")
        object.__setattr__(self, "delta", _frozen(d))


def compute_stats(
    dataset: ArmDataset,
    sigma: float | Sequence[float] | str = "bounded_quarter",
) -> ArmStats:
    """Reduce a dataset to per-arm counts, empirical means and noise scales.

    Parameters
    ----------
    dataset : ArmDataset
    sigma : float, sequence of float, or str
        Noise-scale configuration. A float applies one scale to all arms; a
        sequence gives one scale per arm; ``"bounded_quarter"`` sets 1/2 for
        every arm (rewards with variance at most 1/4); ``"empirical_std"``
        uses each arm's sample standard deviation, falling back to the
        largest multi-sample std for single-sample arms.
    """
    d = dataset.n_arms
    n = np.array([r.size for r in dataset.rewards], dtype=np.int64)
    r_hat = np.array([float(r.mean()) for r in dataset.rewards])

    if isinstance(sigma, str):
        if sigma == "bounded_quarter":
            s = np.full(d, 0.5)
        elif sigma == "empirical_std":
            s = np.array(
                [r.std(ddof=1) if r.size > 1 else np.nan for r in dataset.rewards]
            )
            multi = s[~np.isnan(s)]
            if multi.size == 0:
                raise ValueError(
                    "empirical_std needs at least one arm with two samples; "
                    "pass a fixed sigma instead"
                )
            fallback = float(multi.max())
            s = np.where(np.isnan(s), fallback, s)
            if np.any(s <= 0):
                raise ValueError(
                    "empirical_std produced a zero scale (constant samples); "
                    "pass a fixed sigma instead"
                )
        else:
            raise ValueError(
                f"unknown sigma mode {sigma!r}; expected one of {_SIGMA_MODES} "
                "or a numeric scale"
            )
    else:
        s = np.asarray(sigma, dtype=float)
        if s.ndim == 0:
            s = np.full(d, float(s))
        elif s.shape != (d,):
            raise ValueError("per-arm sigma must have one entry per arm")
        if np.any(s <= 0):
            raise ValueError("sigma must be positive")

    return ArmStats(dataset.arms, n, r_hat, s)


def reference_policy(stats: ArmStats) -> StochasticPolicy:
    """Behavioral-cloning reference: weights proportional to n_i / sigma_i^2.

    Arms logged more often (or with less noise) get more mass; with equal
    counts and scales this is the uniform policy.
    """
    w = stats.n / stats.sigma**2
    return StochasticPolicy(w / w.sum())


def policy_value_empirical(policy: StochasticPolicy, stats: ArmStats) -> float:
    """Plug-in value estimate: policy weights dotted with empirical means."""
    if policy.n_arms != stats.n_arms:
        raise ValueError("policy and stats cover different numbers of arms")
    return float(policy.weights @ stats.r_hat)
