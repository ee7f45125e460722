"""Synthetic bandit instances and experiment harnesses.

Three instance families:

* ``data-starved``: half the arms pay Uniform(0.5, 1.5) (mean one), half pay
  N(0, 1/4) (mean zero), one pull each.  Picking any single arm by its
  sample is a coin flip against the noise tail; spreading mass works.
* ``linear-means``: arm i pays N(i/d, 1/4), one pull each; a graded problem
  where single-arm selection is viable but noisy.
* ``strong-signal``: means split one/zero as above with adjustable Gaussian
  noise; used for the fixed-radius improvement check.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .core import ArmDataset, ArmStats, StochasticPolicy, compute_stats
from .baselines import (
    PolicyReport,
    run_behavior,
    run_combined,
    run_greedy,
    run_lcb,
    trust_report,
)
from .solver import TrustRegionSpec, solve_trust_region
from .trust import TrustOutcome, run_trust

INSTANCE_TAGS = ("data-starved", "linear-means", "strong-signal")


@dataclass(frozen=True)
class SyntheticInstance:
    tag: str
    means: np.ndarray
    noise_sigma: np.ndarray
    seed: int

    def __post_init__(self) -> None:
        m = np.asarray(self.means, dtype=float)
        s = np.asarray(self.noise_sigma, dtype=float)
        if m.shape != s.shape or m.ndim != 1:
            raise ValueError("means and noise_sigma must be aligned 1-d arrays")
        m.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "noise_sigma", s)


def _arm_labels(d: int) -> tuple[str, ...]:
    return tuple(f"arm{i}" for i in range(d))


def _rng(tag: str, d: int, seed: int) -> np.random.Generator:
    tag_code = INSTANCE_TAGS.index(tag)
    return np.random.default_rng([seed, d, tag_code])


def gen_data_starved(d: int, seed: int) -> tuple[SyntheticInstance, ArmDataset]:
    """One pull per arm; d/2 arms pay Uniform(0.5, 1.5), d/2 pay N(0, 1/4)."""
    if d < 2 or d % 2:
        raise ValueError("d must be an even integer >= 2")
    rng = _rng("data-starved", d, seed)
    half = d // 2
    good = rng.uniform(0.5, 1.5, half)
    bad = rng.normal(0.0, 0.5, half)
    means = np.concatenate([np.ones(half), np.zeros(half)])
    sig = np.concatenate([np.full(half, 0.5 / math.sqrt(3.0)), np.full(half, 0.5)])
    samples = np.concatenate([good, bad])
    inst = SyntheticInstance("data-starved", means, sig, seed)
    data = ArmDataset(_arm_labels(d), tuple(np.array([s]) for s in samples))
    return inst, data


def gen_linear_means(d: int, seed: int) -> tuple[SyntheticInstance, ArmDataset]:
    """One pull per arm; arm i (1-based) pays N(i/d, 1/4)."""
    if d < 1:
        raise ValueError("d must be a positive integer")
    rng = _rng("linear-means", d, seed)
    means = np.arange(1, d + 1) / d
    samples = means + rng.normal(0.0, 0.5, d)
    inst = SyntheticInstance("linear-means", means, np.full(d, 0.5), seed)
    data = ArmDataset(_arm_labels(d), tuple(np.array([s]) for s in samples))
    return inst, data


def gen_strong_signal(
    d_half: int, sigma: float, seed: int
) -> tuple[SyntheticInstance, ArmDataset]:
    """2*d_half arms with means (1,...,1,0,...,0) and N(0, sigma^2) noise."""
    if d_half < 1:
        raise ValueError("d_half must be a positive integer")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    rng = _rng("strong-signal", d_half, seed)
    d = 2 * d_half
    means = np.concatenate([np.ones(d_half), np.zeros(d_half)])
    samples = means + rng.normal(0.0, sigma, d)
    inst = SyntheticInstance("strong-signal", means, np.full(d, sigma), seed)
    data = ArmDataset(_arm_labels(d), tuple(np.array([s]) for s in samples))
    return inst, data


def generate(tag: str, d: int, seed: int, sigma: float = 0.1):
    if tag == "data-starved":
        return gen_data_starved(d, seed)
    if tag == "linear-means":
        return gen_linear_means(d, seed)
    if tag == "strong-signal":
        if d < 2 or d % 2:
            raise ValueError("strong-signal needs an even total arm count d >= 2")
        return gen_strong_signal(d // 2, sigma, seed)
    raise ValueError(f"unknown instance tag {tag!r}; expected one of {INSTANCE_TAGS}")


def true_value(policy: StochasticPolicy, instance: SyntheticInstance) -> float:
    """Expected reward of a policy under the instance's true means."""
    if policy.n_arms != instance.means.size:
        raise ValueError("policy and instance cover different numbers of arms")
    return float(policy.weights @ instance.means)


@dataclass(frozen=True)
class MethodSummary:
    mean_true_value: float
    mean_lower_bound: float
    variance_true_value: float
    min_true_value: float
    true_values: tuple[float, ...]
    lower_bounds: tuple[float, ...]


@dataclass(frozen=True)
class ExperimentSummary:
    tag: str
    d: int
    seeds: tuple[int, ...]
    methods: dict[str, MethodSummary]
    wall_clock_s: float
    config: dict = field(default_factory=dict)


DEFAULT_SEEDS = tuple(range(2023, 2031))


def _instance_sigma(tag: str, noise_sigma: float) -> float:
    # both table instances have reward noise bounded by variance 1/4
    return 0.5 if tag in ("data-starved", "linear-means") else noise_sigma


def run_experiment(
    tag: str,
    d: int,
    seeds: tuple[int, ...] = DEFAULT_SEEDS,
    *,
    delta: float = 0.1,
    alpha: float = 1.3,
    grid_size: int = 40,
    m: int = 200,
    noise_sigma: float = 0.1,
    n_jobs: int | None = None,
) -> ExperimentSummary:
    """Run every method on fresh instances and score against true means."""
    t0 = time.perf_counter()
    true_vals: dict[str, list[float]] = {k: [] for k in
                                         ("behavior", "greedy", "lcb", "trust", "combined")}
    lower: dict[str, list[float]] = {k: [] for k in true_vals}
    for seed in seeds:
        inst, data = generate(tag, d, seed, sigma=noise_sigma)
        stats = compute_stats(data, sigma=_instance_sigma(tag, noise_sigma))
        outcome = run_trust(
            stats, delta=delta, alpha=alpha, grid_size=grid_size, m=m,
            seed=seed, n_jobs=n_jobs,
        )
        reports = {
            "behavior": run_behavior(stats, delta),
            "greedy": run_greedy(stats),
            "lcb": run_lcb(stats, delta),
            "trust": trust_report(outcome),
        }
        reports["combined"] = run_combined(reports["trust"], reports["lcb"])
        for name, rep in reports.items():
            true_vals[name].append(true_value(rep.policy, inst))
            lower[name].append(rep.lower_bound)

    methods = {}
    for name, vals in true_vals.items():
        v = np.asarray(vals)
        lb = np.asarray(lower[name])
        finite_lb = lb[np.isfinite(lb)]
        methods[name] = MethodSummary(
            mean_true_value=float(v.mean()),
            mean_lower_bound=float(finite_lb.mean()) if finite_lb.size else -math.inf,
            variance_true_value=float(v.var(ddof=1)) if v.size > 1 else 0.0,
            min_true_value=float(v.min()),
            true_values=tuple(float(x) for x in v),
            lower_bounds=tuple(float(x) for x in lb),
        )
    return ExperimentSummary(
        tag=tag,
        d=d,
        seeds=tuple(seeds),
        methods=methods,
        wall_clock_s=time.perf_counter() - t0,
        config={
            "delta": delta, "alpha": alpha, "grid_size": grid_size, "m": m,
            "noise_sigma": noise_sigma,
        },
    )


@dataclass(frozen=True)
class SweepRow:
    eps: float
    eps_over_eps0: float
    objective: float
    g_hat: float
    penalized: float
    true_value: float
    certificate: float


def sweep_radius(
    tag: str,
    d: int,
    seed: int = 2023,
    *,
    delta: float = 0.1,
    alpha: float = 1.3,
    grid_size: int = 40,
    m: int = 200,
    noise_sigma: float = 0.1,
    n_jobs: int | None = None,
) -> tuple[TrustOutcome, tuple[SweepRow, ...]]:
    """Trace policy value and certificate across the whole radius grid."""
    inst, data = generate(tag, d, seed, sigma=noise_sigma)
    stats = compute_stats(data, sigma=_instance_sigma(tag, noise_sigma))
    outcome = run_trust(
        stats, delta=delta, alpha=alpha, grid_size=grid_size, m=m,
        seed=seed, n_jobs=n_jobs,
    )
    from .solver import solve_radius_profile  # local: avoids re-deriving deltas
    from .core import reference_policy

    mu_hat = reference_policy(stats)
    profile = solve_radius_profile(
        mu_hat, stats.variance_weights, stats.r_hat, outcome.grid.values
    )
    eps0 = outcome.grid.eps0
    rows = []
    for res, row in zip(profile, outcome.per_radius):
        w = StochasticPolicy(np.maximum(mu_hat.weights + res.delta.delta, 0.0))
        rows.append(
            SweepRow(
                eps=row.eps,
                eps_over_eps0=row.eps / eps0,
                objective=row.objective,
                g_hat=row.g_hat,
                penalized=row.penalized,
                true_value=true_value(w, inst),
                certificate=row.certificate,
            )
        )
    return outcome, tuple(rows)


@dataclass(frozen=True)
class StrongSignalResult:
    d_half: int
    sigma: float
    delta: float
    threshold: float
    vacuous: bool
    improvements: tuple[float, ...]
    n_pass: int
    passed: bool


def strong_signal_check(
    d_half: int,
    sigma: float = 0.1,
    delta: float = 0.1,
    seeds: tuple[int, ...] = DEFAULT_SEEDS,
) -> StrongSignalResult:
    """Fixed-radius improvement guarantee on the strong-signal family.

    At radius 1/sqrt(d_half) with unit quadratic weights, the improvement
    over the uniform policy measured on the true means should reach
    1/2 - 2*sigma in at least a 1-delta fraction of seeds.
    """
    if d_half < 8 * math.log(2.0 / delta):
        raise ValueError(
            f"d_half = {d_half} is below 8 log(2/delta) = "
            f"{8 * math.log(2 / delta):.1f}; the guarantee does not apply"
        )
    threshold = 0.5 - 2.0 * sigma
    vacuous = threshold <= 0
    d = 2 * d_half
    mu = StochasticPolicy(np.full(d, 1.0 / d))
    a = np.ones(d)
    eps = 1.0 / math.sqrt(d_half)
    improvements = []
    for seed in seeds:
        inst, data = gen_strong_signal(d_half, sigma, seed)
        r_hat = np.array([float(r[0]) for r in data.rewards])
        res = solve_trust_region(TrustRegionSpec(mu, a, eps), r_hat)
        improvements.append(float(res.delta.delta @ inst.means))
    n_pass = sum(1 for x in improvements if x >= threshold)
    need = math.ceil((1.0 - delta) * len(seeds))
    return StrongSignalResult(
        d_half=d_half,
        sigma=sigma,
        delta=delta,
        threshold=threshold,
        vacuous=vacuous,
        improvements=tuple(improvements),
        n_pass=n_pass,
        passed=vacuous or n_pass >= need,
    )
