"""Policy improvement by relative pessimism over a nested family of trust
regions.

The candidate improvement at each radius maximizes the empirical value gain;
the selected radius maximizes that gain minus the estimated noise
complexity.  The returned certificate is a high-confidence lower bound on
the true value of the selected policy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    ArmStats,
    ImprovementVector,
    StochasticPolicy,
    policy_value_empirical,
    reference_policy,
)
from .complexity import ComplexityTable, estimate_g
from .solver import max_radius, solve_radius_profile


@dataclass(frozen=True)
class RadiusGrid:
    """Geometric radius grid, decreasing from eps0 by factor alpha."""

    values: np.ndarray
    eps0: float
    alpha: float

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("grid must be non-empty")
        if v[0] != self.eps0:
            raise ValueError("grid must start at eps0")
        if np.any(v <= 0) or np.any(np.diff(v) >= 0):
            raise ValueError("grid values must be positive and strictly decreasing")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def size(self) -> int:
        return self.values.size


def build_grid(eps0: float, alpha: float = 1.3, size: int = 40) -> RadiusGrid:
    if not (eps0 > 0 and np.isfinite(eps0)):
        raise ValueError("eps0 must be positive and finite")
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    if size < 1:
        raise ValueError("size must be a positive integer")
    return RadiusGrid(eps0 / alpha ** np.arange(size), eps0, alpha)


def ceil_eps(eps: float, grid: RadiusGrid) -> float:
    """Smallest grid radius at or above eps."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    v = grid.values
    if eps > v[0] * (1.0 + 1e-12):
        raise ValueError(f"eps = {eps:g} exceeds the grid maximum {v[0]:g}")
    at_least = v >= eps * (1.0 - 1e-12)
    return float(v[at_least][-1])


def critical_radius(
    objectives: np.ndarray,
    g_table: ComplexityTable,
    deltas: list[ImprovementVector] | None = None,
) -> tuple[float, ImprovementVector | None]:
    """Radius maximizing objective(eps) - g_hat(eps); ties go to the smaller
    radius (more conservative)."""
    objectives = np.asarray(objectives, dtype=float)
    if objectives.shape != g_table.grid.shape:
        raise ValueError("objectives must align with the grid")
    penalized = objectives - g_table.g_hat
    # grid is decreasing: the first maximum of the reversed array is the
    # smallest radius attaining the maximum
    rev_idx = int(np.argmax(penalized[::-1]))
    idx = penalized.size - 1 - rev_idx
    eps_star = float(g_table.grid[idx])
    return eps_star, (deltas[idx] if deltas is not None else None)


def hoeffding_width(stats: ArmStats, delta: float) -> float:
    """Deviation width for the empirical value of a fixed policy."""
    s_total = float(np.sum(stats.n / stats.sigma**2))
    return math.sqrt(2.0 * math.log(1.0 / delta) / s_total)


def certified_lower_bound(
    empirical_value: float,
    eps_star: float,
    g_table: ComplexityTable,
    stats: ArmStats,
    delta: float,
    grid: RadiusGrid,
) -> float:
    """empirical value - g_hat(ceil(eps_star)) - deviation width."""
    eps_c = ceil_eps(eps_star, grid)
    g_val = float(g_table.g_hat[np.argmin(np.abs(g_table.grid - eps_c))])
    return empirical_value - g_val - hoeffding_width(stats, delta)


@dataclass(frozen=True)
class PerRadius:
    eps: float
    objective: float
    g_hat: float
    penalized: float
    certificate: float


@dataclass(frozen=True)
class TrustOutcome:
    arms: tuple[str, ...]
    policy: StochasticPolicy
    delta_star: ImprovementVector
    eps_star: float
    empirical_value: float
    certificate: float
    per_radius: tuple[PerRadius, ...]
    g_table: ComplexityTable
    grid: RadiusGrid
    delta: float
    stats_fingerprint: str

    def __post_init__(self) -> None:
        if self.certificate > self.empirical_value + 1e-12:
            raise ValueError("certificate cannot exceed the empirical value")


def run_trust(
    stats: ArmStats,
    *,
    delta: float = 0.1,
    alpha: float = 1.3,
    grid_size: int = 40,
    m: int = 200,
    seed: int = 2023,
    n_jobs: int | None = None,
    strict_m0: bool = False,
) -> TrustOutcome:
    """Full pipeline: reference policy, radius grid, per-radius improvement,
    complexity estimation, radius selection and certificate."""
    if stats.n_arms < 2:
        raise ValueError(
            "policy search needs at least two arms; with a single arm the "
            "behavior policy is the only candidate"
        )
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    mu_hat = reference_policy(stats)
    eps0 = max_radius(stats, mu_hat)
    grid = build_grid(eps0, alpha=alpha, size=grid_size)

    a = stats.variance_weights
    profile = solve_radius_profile(mu_hat, a, stats.r_hat, grid.values)
    objectives = np.array([p.objective for p in profile])

    g_table = estimate_g(
        stats, mu_hat, grid, m=m, delta=delta, seed=seed,
        n_jobs=n_jobs, strict_m0=strict_m0,
    )

    deltas = [p.delta for p in profile]
    eps_star, delta_star = critical_radius(objectives, g_table, deltas)
    idx = int(np.argmin(np.abs(grid.values - eps_star)))

    weights = np.maximum(mu_hat.weights + delta_star.delta, 0.0)
    policy = StochasticPolicy(weights)
    empirical_value = policy_value_empirical(policy, stats)
    certificate = certified_lower_bound(
        empirical_value, eps_star, g_table, stats, delta, grid
    )

    base = policy_value_empirical(mu_hat, stats) - hoeffding_width(stats, delta)
    per_radius = tuple(
        PerRadius(
            eps=float(e),
            objective=float(o),
            g_hat=float(g),
            penalized=float(o - g),
            certificate=float(o - g + base),
        )
        for e, o, g in zip(grid.values, objectives, g_table.g_hat)
    )
    assert per_radius[idx].penalized == max(row.penalized for row in per_radius)

    return TrustOutcome(
        arms=stats.arms,
        policy=policy,
        delta_star=delta_star,
        eps_star=eps_star,
        empirical_value=empirical_value,
        certificate=certificate,
        per_radius=per_radius,
        g_table=g_table,
        grid=grid,
        delta=delta,
        stats_fingerprint=stats.fingerprint(),
    )
