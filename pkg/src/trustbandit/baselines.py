"""Single-arm and behavioral baselines, plus the certificate-comparison
combination rule.

All baselines consume the same per-arm statistics as the trust-region
search and return a uniform report shape, so downstream scoring and
serialization treat every method alike.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .core import ArmStats, StochasticPolicy, policy_value_empirical, reference_policy
from .trust import TrustOutcome, hoeffding_width


@dataclass(frozen=True)
class PolicyReport:
    method: str
    arms: tuple[str, ...]
    policy: StochasticPolicy
    empirical_value: float
    lower_bound: float
    chosen_arm: str | None
    stats_fingerprint: str
    delta: float | None
    diagnostics: dict[str, Any] | None = None

    def __post_init__(self) -> None:
        if self.lower_bound > self.empirical_value + 1e-12:
            raise ValueError("lower bound cannot exceed the empirical value")


def _one_hot(d: int, idx: int) -> np.ndarray:
    w = np.zeros(d)
    w[idx] = 1.0
    return w


def run_greedy(stats: ArmStats) -> PolicyReport:
    """Pick the arm with the highest empirical mean; no guarantee attached."""
    idx = int(np.argmax(stats.r_hat))
    return PolicyReport(
        method="greedy",
        arms=stats.arms,
        policy=StochasticPolicy(_one_hot(stats.n_arms, idx)),
        empirical_value=float(stats.r_hat[idx]),
        lower_bound=-math.inf,
        chosen_arm=stats.arms[idx],
        stats_fingerprint=stats.fingerprint(),
        delta=None,
    )


def run_lcb(stats: ArmStats, delta: float = 0.1) -> PolicyReport:
    """Pick the arm maximizing the per-arm lower confidence bound
    r_hat_i - sqrt(2 sigma_i^2 / n_i * log(2 d / delta))."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    d = stats.n_arms
    width = np.sqrt(2.0 * stats.variance_weights * math.log(2.0 * d / delta))
    lcb = stats.r_hat - width
    idx = int(np.argmax(lcb))
    return PolicyReport(
        method="lcb",
        arms=stats.arms,
        policy=StochasticPolicy(_one_hot(d, idx)),
        empirical_value=float(stats.r_hat[idx]),
        lower_bound=float(lcb[idx]),
        chosen_arm=stats.arms[idx],
        stats_fingerprint=stats.fingerprint(),
        delta=delta,
        diagnostics={"r_hat": stats.r_hat, "width": width, "lcb": lcb},
    )


def run_behavior(stats: ArmStats, delta: float = 0.1) -> PolicyReport:
    """Clone the logging distribution; certify its value by deviation bound."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    mu_hat = reference_policy(stats)
    value = policy_value_empirical(mu_hat, stats)
    return PolicyReport(
        method="behavior",
        arms=stats.arms,
        policy=mu_hat,
        empirical_value=value,
        lower_bound=value - hoeffding_width(stats, delta),
        chosen_arm=None,
        stats_fingerprint=stats.fingerprint(),
        delta=delta,
    )


def trust_report(outcome: TrustOutcome) -> PolicyReport:
    """View a trust-region outcome through the common report shape."""
    return PolicyReport(
        method="trust",
        arms=outcome.arms,
        policy=outcome.policy,
        empirical_value=outcome.empirical_value,
        lower_bound=outcome.certificate,
        chosen_arm=None,
        stats_fingerprint=outcome.stats_fingerprint,
        delta=outcome.delta,
        diagnostics={"eps_star": outcome.eps_star},
    )


def run_combined(trust: PolicyReport | TrustOutcome, lcb: PolicyReport) -> PolicyReport:
    """Keep whichever of the two certified policies has the higher
    certificate; the single-arm pick wins ties."""
    if isinstance(trust, TrustOutcome):
        trust = trust_report(trust)
    if trust.method != "trust" or lcb.method != "lcb":
        raise ValueError("expected a trust report and an lcb report")
    if trust.stats_fingerprint != lcb.stats_fingerprint:
        raise ValueError("reports were computed on different datasets")
    if trust.delta != lcb.delta:
        raise ValueError("reports were computed at different confidence levels")
    pick = lcb if lcb.lower_bound >= trust.lower_bound else trust
    return PolicyReport(
        method="combined",
        arms=pick.arms,
        policy=pick.policy,
        empirical_value=pick.empirical_value,
        lower_bound=max(lcb.lower_bound, trust.lower_bound),
        chosen_arm=pick.chosen_arm,
        stats_fingerprint=pick.stats_fingerprint,
        delta=trust.delta,
        diagnostics={"source": pick.method},
    )
