"""Monte-Carlo estimation of the localized noise complexity.

For a radius eps, the quantity of interest is a high quantile of

    sup_{delta in C(eps)} delta^T eta,      eta_i ~ N(0, sigma_i^2 / n_i),

estimated from m independent noise draws by taking an upper order statistic.
The order-statistic index m0 is chosen so that the estimate upper-bounds the
target quantile with the requested confidence; the same noise draws are
reused across all radii (common random numbers), which makes the estimated
curve monotone along each sample path.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import ArmStats, StochasticPolicy
from .solver import batch_sup_objectives


def compute_m0(m: int, delta_prime: float) -> int:
    """Largest m0 such that the binomial tail P[Bin(m, 1-d') >= m-m0+1] stays
    at or below d'.

    The order statistic X_(m-m0+1) of m draws then exceeds the (1-d')
    quantile with probability at least 1 - d'.  Evaluated in exact rational
    arithmetic, so the <= comparison at the boundary is never decided by
    rounding.  m0 = 0 means even the sample maximum is insufficient.
    """
    if m < 1:
        raise ValueError("m must be a positive integer")
    q = Fraction(delta_prime)
    if not 0 <= q <= 1:
        raise ValueError("delta_prime must lie in [0, 1]")
    p, s = q.numerator, q.denominator
    # multiply the inequality by s^m: sum_j C(m,j) (s-p)^j p^(m-j) <= p s^(m-1)
    bound = p * s ** (m - 1)
    tail = 0
    m0 = 0
    for j in range(m, -1, -1):
        tail += math.comb(m, j) * (s - p) ** j * p ** (m - j)
        if tail > bound:
            break
        m0 = m - j + 1
    return m0


def min_m_for_quantile(delta_prime: float) -> int:
    """Smallest m with compute_m0(m, delta_prime) >= 1."""
    if not 0 < delta_prime < 1:
        raise ValueError("delta_prime must lie in (0, 1)")
    # (1 - d')^m <= d' ; exact check around the log estimate
    m = max(1, math.ceil(math.log(delta_prime) / math.log1p(-delta_prime)))
    while compute_m0(m, delta_prime) < 1:
        m += 1
    while m > 1 and compute_m0(m - 1, delta_prime) >= 1:
        m -= 1
    return m


def sample_noise(stats: ArmStats, seed: int, index: int) -> np.ndarray:
    """Noise draw number ``index``: per-arm N(0, sigma_i^2 / n_i).

    Each draw comes from its own counter-based stream keyed by
    (seed, index), so results do not depend on evaluation order or on how
    draws are partitioned across workers.
    """
    gen = np.random.Generator(np.random.Philox(key=[seed, index]))
    return gen.normal(0.0, np.sqrt(stats.variance_weights))


@dataclass(frozen=True)
class ComplexityTable:
    """Estimated complexity over a radius grid (decreasing radii)."""

    grid: np.ndarray
    g_hat: np.ndarray
    m: int
    m0: int
    delta: float
    seed: int

    def __post_init__(self) -> None:
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.g_hat, dtype=float)
        if g.shape != v.shape or g.ndim != 1 or g.size == 0:
            raise ValueError("grid and g_hat must be aligned 1-d arrays")
        if np.any(np.diff(g) >= 0):
            raise ValueError("grid must be strictly decreasing")
        if np.any(v < 0):
            raise ValueError("complexity values must be nonnegative")
        if np.any(np.diff(v) > 0):
            raise ValueError("g_hat must be non-decreasing in the radius")
        g.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "g_hat", v)

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["eps", "g_hat", "m", "m0", "delta", "seed"])
            for e, g in zip(self.grid, self.g_hat):
                w.writerow([repr(float(e)), repr(float(g)), self.m, self.m0,
                            repr(float(self.delta)), self.seed])

    @classmethod
    def from_csv(cls, path: str) -> "ComplexityTable":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise ValueError(f"{path}: empty complexity table")
        return cls(
            grid=np.array([float(r["eps"]) for r in rows]),
            g_hat=np.array([float(r["g_hat"]) for r in rows]),
            m=int(rows[0]["m"]),
            m0=int(rows[0]["m0"]),
            delta=float(rows[0]["delta"]),
            seed=int(rows[0]["seed"]),
        )


def _noise_block(a: np.ndarray, seed: int, start: int, stop: int) -> np.ndarray:
    scale = np.sqrt(a)
    out = np.empty((stop - start, a.size))
    for i in range(start, stop):
        gen = np.random.Generator(np.random.Philox(key=[seed, i]))
        out[i - start] = gen.normal(0.0, scale)
    return out


def _sup_block(mu_w, a, grid_values, seed, start, stop):
    noise = _noise_block(a, seed, start, stop)
    return batch_sup_objectives(StochasticPolicy(mu_w), a, noise, grid_values)


def estimate_g(
    stats: ArmStats,
    mu_hat: StochasticPolicy,
    grid,
    m: int = 200,
    delta: float = 0.1,
    seed: int = 2023,
    n_jobs: int | None = None,
    strict_m0: bool = False,
) -> ComplexityTable:
    """Estimate the localized complexity at every grid radius.

    Parameters
    ----------
    grid : RadiusGrid or array of decreasing radii
    m : number of Monte-Carlo noise draws (shared across radii)
    delta : total failure budget; each radius is estimated at confidence
        1 - delta / (2 * n_radii)
    strict_m0 : if True, raise when m is too small for the order-statistic
        rule at the per-radius confidence; otherwise fall back to the sample
        maximum (the most conservative statistic m draws offer) with a
        warning.
    """
    grid_values = np.asarray(getattr(grid, "values", grid), dtype=float)
    if grid_values.ndim != 1 or grid_values.size == 0:
        raise ValueError("grid must be a non-empty 1-d array of radii")
    if m < 1:
        raise ValueError("m must be a positive integer")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")

    delta_prime = delta / (2 * grid_values.size)
    m0 = compute_m0(m, delta_prime)
    if m0 < 1:
        need = min_m_for_quantile(delta_prime)
        if strict_m0:
            raise ValueError(
                f"m = {m} is too small for the per-radius confidence "
                f"{delta_prime:g}; increase m to at least {need}"
            )
        warnings.warn(
            f"m = {m} cannot certify the per-radius confidence {delta_prime:g} "
            f"(needs m >= {need}); using the sample maximum instead",
            RuntimeWarning,
            stacklevel=2,
        )
        m0 = 1

    a = stats.variance_weights
    mu_w = mu_hat.weights
    block = max(1, int(1.5e6 / stats.n_arms))
    bounds = [(s, min(s + block, m)) for s in range(0, m, block)]
    if n_jobs in (None, 1) or len(bounds) == 1:
        parts = [_sup_block(mu_w, a, grid_values, seed, s, t) for s, t in bounds]
    else:
        from joblib import Parallel, delayed

        parts = Parallel(n_jobs=n_jobs)(
            delayed(_sup_block)(mu_w, a, grid_values, seed, s, t) for s, t in bounds
        )
    sup = np.vstack(parts)  # (m, n_radii), rows ordered by draw index

    sup.sort(axis=0)
    g_hat = sup[m - m0].copy()
    # isotonic pass in increasing radius (grid is decreasing) plus floor at 0:
    # zero is always feasible, so the true complexity is nonnegative and
    # non-decreasing; this only smooths solver-level rounding.
    g_hat = np.maximum(g_hat, 0.0)
    g_hat = np.maximum.accumulate(g_hat[::-1])[::-1]
    return ComplexityTable(
        grid=grid_values, g_hat=g_hat, m=m, m0=m0, delta=delta, seed=seed
    )


def compute_d_bound(stats: ArmStats) -> float:
    """Scale constant for the analytic complexity bound.

    sqrt( max(0, max_i (sigma_i^2/n_i - 2 sigma_i^2/n)) + sum_j n_j sigma_j^2 / n^2 )
    with n the total sample count.
    """
    n_total = int(stats.n.sum())
    a = stats.variance_weights
    head = max(0.0, float(np.max(a - 2.0 * stats.sigma**2 / n_total)))
    tail = float(np.sum(stats.n * stats.sigma**2)) / n_total**2
    return math.sqrt(head + tail)


def analytic_g_bound(
    stats: ArmStats, eps: float, grid_size: int, delta: float
) -> float:
    """Closed-form upper bound on the complexity at radius eps.

    min( eps sqrt(d), 4 D sqrt(log+(4 e d eps^2 / D^2)) )
      + sqrt( 2 eps^2 log(2 grid_size / delta) ),
    log+(x) = max(1, log x).
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if eps == 0.0:
        return 0.0
    d = stats.n_arms
    big_d = compute_d_bound(stats)
    direct = eps * math.sqrt(d)
    if big_d > 0:
        logplus = max(1.0, math.log(4.0 * math.e * d * eps**2 / big_d**2))
        direct = min(direct, 4.0 * big_d * math.sqrt(logplus))
    return direct + math.sqrt(2.0 * eps**2 * math.log(2.0 * grid_size / delta))
