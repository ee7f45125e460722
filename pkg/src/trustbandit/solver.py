"""Maximize a linear objective over a simplex slice intersected with an
ellipsoid.

The feasible set, parametrized by a base policy mu and per-arm weights a_i,
is

    C(eps) = { delta : delta_i + mu_i >= 0,
                       sum_i delta_i = 0,
                       sum_i a_i delta_i^2 <= eps^2 }.

``solve_trust_region`` returns argmax_{delta in C(eps)} c^T delta.  The
stationary point has the water-filling form

    delta_i = max( (c_i - nu) / (2 lam a_i), -mu_i )

with nu the multiplier of the sum constraint and lam >= 0 the multiplier of
the ellipsoid.  For fixed lam, the sum constraint is solved exactly (the sum
is piecewise linear and strictly decreasing in nu); lam itself is bracketed
and bisected until the ellipsoid is tight.  When the best vertex already
lies inside the ellipsoid the constraint is slack and no iteration runs.

A batched implementation covers the common case where a_i * mu_i is the same
for every arm (true for any reference policy with weights proportional to
1/a_i, and for uniform policies with constant a): there the clip order is
independent of lam, so each row is presorted once and every multiplier
evaluation costs O(log d) via prefix sums.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ArmStats, ImprovementVector, StochasticPolicy, reference_policy

_LAM_FLOOR = 1e-18
_LAM_CEIL = 1e18
_MAX_BISECT = 200


class SolverError(RuntimeError):
    """Raised when the multiplier search fails to converge."""


@dataclass(frozen=True)
class TrustRegionSpec:
    """Feasible-set description: base policy, quadratic weights, radius."""

    mu_hat: StochasticPolicy
    a: np.ndarray
    eps: float

    def __post_init__(self) -> None:
        a = np.asarray(self.a, dtype=float)
        if a.shape != (self.mu_hat.n_arms,):
            raise ValueError("a must have one weight per arm")
        if np.any(a <= 0) or not np.all(np.isfinite(a)):
            raise ValueError("a must be positive and finite")
        if not (self.eps >= 0 and np.isfinite(self.eps)):
            raise ValueError("eps must be a nonnegative finite number")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)


@dataclass(frozen=True)
class SolveResult:
    delta: ImprovementVector
    objective: float
    kkt_residual: float
    ball_active: bool
    lam: float
    nu: float


def max_radius(stats: ArmStats, mu_hat: StochasticPolicy | None = None) -> float:
    """Radius beyond which every vertex of the simplex is reachable.

    Equals the largest weighted distance from mu_hat to a vertex:
    max_i sqrt( sum_{j != i} mu_j^2 a_j + (1 - mu_i)^2 a_i ).
    """
    if mu_hat is None:
        mu_hat = reference_policy(stats)
    mu = mu_hat.weights
    a = stats.variance_weights
    total = float(np.sum(a * mu**2))
    per_vertex = total - a * mu**2 + a * (1.0 - mu) ** 2
    return float(np.sqrt(max(0.0, per_vertex.max())))


# ---------------------------------------------------------------------------
# batched fixed-order core
# ---------------------------------------------------------------------------


def _is_fixed_order(a: np.ndarray, mu: np.ndarray) -> bool:
    b = a * mu
    top = float(b.max())
    return bool(float(b.min()) >= top - 1e-12 * max(abs(top), 1e-300))


class _FixedOrderBatch:
    """Rows share (a, mu) with constant a*mu; each row carries its own c.

    All internal quantities live in a centered c (per-row mean subtracted);
    the optimizer and the objective value are invariant to that shift
    because feasible deltas sum to zero.
    """

    def __init__(self, a: np.ndarray, mu: np.ndarray, c_rows: np.ndarray):
        c_rows = np.atleast_2d(np.asarray(c_rows, dtype=float))
        m, d = c_rows.shape
        self.m, self.d = m, d
        self.a, self.mu = a, mu
        self.bbar = float(np.mean(2.0 * a * mu))

        self.center = c_rows.mean(axis=1)
        cc = c_rows - self.center[:, None]
        order = np.argsort(cc, axis=1, kind="stable")
        cs = np.take_along_axis(cc, order, axis=1)
        a_s = a[order]
        mu_s = mu[order]
        inv_a = 1.0 / a_s

        self.cc = cc
        self.cs = cs
        # argmax of the original rows; np.argmax takes the lowest index on ties
        self.star = np.argmax(c_rows, axis=1)

        z = np.zeros((m, 1))
        rcs = lambda x: np.concatenate(  # noqa: E731  suffix sums, shape (m, d+1)
            [np.cumsum(x[:, ::-1], axis=1)[:, ::-1], z], axis=1
        )
        pcs = lambda x: np.concatenate([z, np.cumsum(x, axis=1)], axis=1)  # noqa: E731
        self.ua = rcs(inv_a)
        self.ub = rcs(cs * inv_a)
        self.uc = rcs(cs * cs * inv_a)
        self.pm = pcs(mu_s)
        self.pn = pcs(a_s * mu_s**2)
        self.po = pcs(cs * mu_s)

        # tied-maximum block per row (count of entries equal to the max)
        self.n_tie = np.sum(cs == cs[:, -1:], axis=1)

    @classmethod
    def tiled(cls, a: np.ndarray, mu: np.ndarray, c: np.ndarray, n_rows: int):
        """One c row logically repeated n_rows times, sharing prefix sums."""
        base = cls(a, mu, c[None, :])
        out = object.__new__(cls)
        out.__dict__.update(base.__dict__)
        out.m = n_rows
        bt = lambda x: np.broadcast_to(x, (n_rows,) + x.shape[1:])  # noqa: E731
        for name in ("cc", "cs", "ua", "ub", "uc", "pm", "pn", "po"):
            setattr(out, name, bt(getattr(out, name)))
        out.center = bt(out.center[..., None])[:, 0]
        out.star = bt(out.star[..., None])[:, 0]
        out.n_tie = bt(out.n_tie[..., None])[:, 0]
        return out

    def _gather(self, arr: np.ndarray, idx: np.ndarray) -> np.ndarray:
        return np.take_along_axis(arr, idx[:, None], axis=1)[:, 0]

    def _find_cut(self, lam: np.ndarray) -> np.ndarray:
        """Smallest k with g(tau_k) <= 0; the sum-constraint root lies in
        segment k (k = number of clipped coordinates)."""
        d = self.d
        lo = np.zeros(self.m, dtype=np.int64)
        hi = np.full(self.m, d - 1, dtype=np.int64)
        while True:
            mid = (lo + hi) >> 1
            tau = self._gather(self.cs, mid) + lam * self.bbar
            gv = (self._gather(self.ub, mid) - tau * self._gather(self.ua, mid)) / (
                2.0 * lam
            ) - self._gather(self.pm, mid)
            le = gv <= 0.0
            hi = np.where(le, mid, hi)
            lo = np.where(le, lo, mid + 1)
            if np.all(lo >= hi):
                return hi

    def _eval(self, lam: np.ndarray):
        """Per-row (nu, cut, norm^2, objective) at multiplier lam > 0."""
        k = self._find_cut(lam)
        ua = self._gather(self.ua, k)
        ub = self._gather(self.ub, k)
        uc = self._gather(self.uc, k)
        pm = self._gather(self.pm, k)
        nu = (ub - 2.0 * lam * pm) / ua
        norm2 = (uc - 2.0 * nu * ub + nu * nu * ua) / (4.0 * lam * lam) + self._gather(
            self.pn, k
        )
        obj = (uc - nu * ub) / (2.0 * lam) - self._gather(self.po, k)
        return nu, k, norm2, obj

    def limit_solution(self):
        """lam -> 0+ optimum: all mass on the tied-max block, split
        proportionally to 1/a (norm-minimal).  Returns (norm^2, objective)."""
        cut = self.d - self.n_tie
        mass_out = self._gather(self.pm, cut)
        ua_t = self._gather(self.ua, cut)
        s = mass_out / ua_t
        norm2 = self._gather(self.pn, cut) + s * s * ua_t
        obj = self.cs[:, -1] - self.po[:, -1]
        return norm2, obj

    def vertex_norm2(self) -> np.ndarray:
        """Weighted distance^2 from mu to the argmax vertex (lowest index)."""
        a_star = self.a[self.star]
        mu_star = self.mu[self.star]
        total = float(np.sum(self.a * self.mu**2))
        return total - a_star * mu_star**2 + a_star * (1.0 - mu_star) ** 2

    def vertex_objective(self) -> np.ndarray:
        return self._gather(self.cc, self.star) - self.po[:, -1]

    def solve(self, eps2: np.ndarray):
        """Resolve every row at its own squared radius.

        Returns arrays (lam, nu, objective, norm2, resolved_kind) where kind
        0 = constant objective, 1 = vertex, 2 = tie split, 3 = ball tight.
        """
        m = self.m
        eps2 = np.broadcast_to(np.asarray(eps2, dtype=float), (m,))
        lam = np.zeros(m)
        nu = np.zeros(m)
        obj = np.zeros(m)
        norm2 = np.zeros(m)
        kind = np.full(m, 3, dtype=np.int8)

        spread = self.cs[:, -1] - self.cs[:, 0]
        # constant objectives and zero radii share the canonical answer delta=0
        const = (spread <= 0.0) | (eps2 <= 0.0)
        kind[const] = 0

        vn2 = self.vertex_norm2()
        vert = ~const & (vn2 <= eps2 * (1.0 + 1e-12))
        kind[vert] = 1
        obj[vert] = self.vertex_objective()[vert]
        norm2[vert] = vn2[vert]
        nu[vert] = self.cs[vert, -1]

        open_rows = ~const & ~vert
        if np.any(open_rows):
            ln2, lobj = self.limit_solution()
            tie = open_rows & (ln2 <= eps2)
            kind[tie] = 2
            obj[tie] = lobj[tie]
            norm2[tie] = ln2[tie]
            nu[tie] = self.cs[tie, -1]
            open_rows &= ~tie

        if np.any(open_rows):
            res = self._bisect(open_rows, eps2)
            for name, target in (("lam", lam), ("nu", nu), ("obj", obj), ("norm2", norm2)):
                target[open_rows] = res[name]
        return lam, nu, obj, norm2, kind

    def _bisect(self, rows: np.ndarray, eps2_full: np.ndarray):
        idx = np.flatnonzero(rows)
        eps2 = eps2_full[idx]
        sub = _SubView(self, idx)

        amed = float(np.median(self.a))
        spread = sub.cs[:, -1] - sub.cs[:, 0]
        seed = np.clip(spread / (2.0 * np.sqrt(amed * eps2)), 1e-9, 1e9)

        lo = seed.copy()
        hi = seed.copy()
        _, _, n2, _ = sub._eval(seed)
        h = n2 - eps2
        lo_ok = h >= 0.0
        hi_ok = h < 0.0
        floored = np.zeros(idx.size, dtype=bool)

        for _ in range(_MAX_BISECT):
            need = ~hi_ok
            if not np.any(need):
                break
            hi = np.where(need, np.minimum(hi * 8.0, _LAM_CEIL), hi)
            _, _, n2, _ = sub._eval(hi)
            fresh = need & (n2 - eps2 < 0.0)
            lo = np.where(need & ~fresh & (hi > lo), hi, lo)  # still violating: raise lo
            lo_ok |= need & ~fresh
            hi_ok |= fresh
            if np.any(need & (hi >= _LAM_CEIL) & ~hi_ok):
                raise SolverError("ellipsoid multiplier exceeded 1e18 without slack")
        for _ in range(_MAX_BISECT):
            need = ~lo_ok & ~floored
            if not np.any(need):
                break
            prev = lo.copy()
            lo = np.where(need, lo / 8.0, lo)
            _, _, n2, _ = sub._eval(lo)
            good = need & (n2 - eps2 >= 0.0)
            hi = np.where(need & ~good & (prev < hi), prev, hi)  # slack: tighten hi
            lo_ok |= good
            floored |= need & ~good & (lo <= _LAM_FLOOR)

        # floored rows: constraint is slack for every positive lam (exact or
        # near ties at the max); the floor solution is optimal to fp accuracy
        work = ~floored
        for _ in range(_MAX_BISECT):
            live = work & (hi > lo * (1.0 + 1e-14))
            if not np.any(live):
                break
            mid = np.sqrt(lo * hi)
            _, _, n2, _ = sub._eval(mid)
            high_side = n2 - eps2 >= 0.0
            lo = np.where(live & high_side, mid, lo)
            hi = np.where(live & ~high_side, mid, hi)

        lam = np.where(floored, np.maximum(lo, _LAM_FLOOR), np.sqrt(lo * hi))
        nu, _, norm2, obj = sub._eval(lam)
        resid = np.abs(norm2 - eps2)
        ok = floored | (resid <= 1e-9 * np.maximum(1.0, eps2)) | (
            lam * resid <= 1e-9
        )
        if not np.all(ok):
            worst = int(np.argmax(resid))
            raise SolverError(
                f"bisection did not converge: |norm^2 - eps^2| = {resid[worst]:.3e} "
                f"at lam = {lam[worst]:.3e}"
            )
        return {"lam": lam, "nu": nu, "obj": obj, "norm2": norm2}

    def materialize(self, row: int, lam: float, nu: float, kind: int) -> np.ndarray:
        """Reconstruct delta for one row in the original arm order."""
        if kind == 0:
            return np.zeros(self.d)
        if kind == 1:
            delta = -self.mu.copy()
            delta[self.star[row]] += 1.0
            return delta
        cc = np.asarray(self.cc[row])
        if kind == 2:
            cmax = cc.max()
            tied = cc == cmax
            mass_out = float(self.mu[~tied].sum())
            s = mass_out / float((1.0 / self.a[tied]).sum())
            delta = np.where(tied, s / self.a, -self.mu)
            return delta
        return np.maximum((cc - nu) / (2.0 * lam * self.a), -self.mu)


class _SubView:
    """Row-sliced view of a batch exposing ``_eval`` on the subset."""

    def __init__(self, parent: _FixedOrderBatch, idx: np.ndarray):
        self.d = parent.d
        self.m = idx.size
        self.bbar = parent.bbar
        for name in ("cs", "ua", "ub", "uc", "pm", "pn", "po"):
            setattr(self, name, getattr(parent, name)[idx])

    _gather = _FixedOrderBatch._gather
    _find_cut = _FixedOrderBatch._find_cut
    _eval = _FixedOrderBatch._eval


# ---------------------------------------------------------------------------
# general path (arbitrary a * mu): clip order depends on lam, re-sort per eval
# ---------------------------------------------------------------------------


def _eval_general(cc, a, mu, b, lam):
    t = cc + lam * b
    order = np.argsort(t, kind="stable")
    cs, a_s, mu_s, t_s = cc[order], a[order], mu[order], t[order]
    inv_a = 1.0 / a_s
    ua = np.concatenate([np.cumsum(inv_a[::-1])[::-1], [0.0]])
    ub = np.concatenate([np.cumsum((cs * inv_a)[::-1])[::-1], [0.0]])
    uc = np.concatenate([np.cumsum((cs * cs * inv_a)[::-1])[::-1], [0.0]])
    pm = np.concatenate([[0.0], np.cumsum(mu_s)])
    pn = np.concatenate([[0.0], np.cumsum(a_s * mu_s**2)])

    d = cs.size
    ks = np.arange(d)
    gv = (ub[:-1] - t_s * ua[:-1]) / (2.0 * lam) - pm[:-1]
    k = int(ks[np.argmax(gv <= 0.0)])  # gv is non-increasing; first True
    nu = (ub[k] - 2.0 * lam * pm[k]) / ua[k]
    norm2 = (uc[k] - 2.0 * nu * ub[k] + nu * nu * ua[k]) / (4.0 * lam * lam) + pn[k]
    return nu, norm2


def _solve_general(cc, a, mu, eps):
    eps2 = eps * eps
    b = 2.0 * a * mu
    amed = float(np.median(a))
    seed = float(np.clip(np.ptp(cc) / (2.0 * np.sqrt(amed) * max(eps, 1e-300)), 1e-9, 1e9))

    def h(lam):
        _, n2 = _eval_general(cc, a, mu, b, lam)
        return n2 - eps2

    lo = hi = seed
    if h(seed) >= 0.0:
        for _ in range(_MAX_BISECT):
            hi *= 8.0
            if h(hi) < 0.0:
                break
            lo = hi
            if hi >= _LAM_CEIL:
                raise SolverError("ellipsoid multiplier exceeded 1e18 without slack")
    else:
        for _ in range(_MAX_BISECT):
            lo /= 8.0
            if h(lo) >= 0.0:
                break
            if lo <= _LAM_FLOOR:
                lam = max(lo, _LAM_FLOOR)
                nu, _ = _eval_general(cc, a, mu, b, lam)
                return lam, nu
    for _ in range(_MAX_BISECT):
        if hi <= lo * (1.0 + 1e-14):
            break
        mid = np.sqrt(lo * hi)
        if h(mid) >= 0.0:
            lo = mid
        else:
            hi = mid
    lam = np.sqrt(lo * hi)
    nu, n2 = _eval_general(cc, a, mu, b, lam)
    resid = abs(n2 - eps2)
    if resid > 1e-9 * max(1.0, eps2) and lam * resid > 1e-9:
        raise SolverError(
            f"bisection did not converge: |norm^2 - eps^2| = {resid:.3e}"
        )
    return lam, nu


# ---------------------------------------------------------------------------
# public entry points
# ---------------------------------------------------------------------------


def _kkt_residual(delta, c, a, mu, lam, nu, eps):
    grad = c - nu - 2.0 * lam * a * delta
    clipped = delta <= -mu + 1e-12
    stat = float(np.max(np.where(clipped, np.maximum(grad, 0.0), np.abs(grad)), initial=0.0))
    norm2 = float(np.sum(a * delta**2))
    viol = max(
        abs(float(delta.sum())),
        float(np.max(-(delta + mu), initial=0.0)),
        max(0.0, norm2 - eps * eps),
        lam * abs(norm2 - eps * eps),
    )
    return max(stat, viol)


def solve_trust_region(spec: TrustRegionSpec, c: np.ndarray) -> SolveResult:
    """Maximize c^T delta over the feasible set described by ``spec``.

    Returns the optimal delta together with the objective, the KKT residual
    of the returned point, and whether the ellipsoid constraint binds.
    """
    mu = spec.mu_hat.weights
    a = spec.a
    c = np.asarray(c, dtype=float)
    if c.shape != mu.shape:
        raise ValueError("c must have one entry per arm")
    if not np.all(np.isfinite(c)):
        raise ValueError("c must be finite")
    d = c.size

    if spec.eps == 0.0 or d == 1:
        delta = np.zeros(d)
        return SolveResult(
            delta=ImprovementVector(delta, 0.0),
            objective=0.0,
            kkt_residual=0.0,
            ball_active=spec.eps == 0.0,
            lam=0.0,
            nu=float(c.max()),
        )

    if _is_fixed_order(a, mu):
        batch = _FixedOrderBatch(a, mu, c[None, :])
        lam, nu, _, _, kind = batch.solve(np.array([spec.eps**2]))
        delta = batch.materialize(0, float(lam[0]), float(nu[0]), int(kind[0]))
        lam_v, nu_v = float(lam[0]), float(nu[0]) + float(batch.center[0])
    else:
        cc = c - c.mean()
        cmax = cc.max()
        tied = cc == cmax
        star = int(np.argmax(cc))
        vdelta = -mu.copy()
        vdelta[star] += 1.0
        if float(np.sum(a * vdelta**2)) <= spec.eps**2 * (1.0 + 1e-12):
            delta, lam_v = vdelta, 0.0
        else:
            mass_out = float(mu[~tied].sum())
            s = mass_out / float((1.0 / a[tied]).sum())
            ldelta = np.where(tied, s / a, -mu)
            if float(np.sum(a * ldelta**2)) <= spec.eps**2:
                delta, lam_v = ldelta, 0.0
            else:
                lam_v, nu_c = _solve_general(cc, a, mu, spec.eps)
                delta = np.maximum((cc - nu_c) / (2.0 * lam_v * a), -mu)
        nu_v = (cmax if lam_v == 0.0 else nu_c) + float(c.mean())

    objective = float(c @ delta - c.mean() * delta.sum())
    eps_used = float(np.sqrt(np.sum(a * delta**2)))
    resid = _kkt_residual(delta, c, a, mu, lam_v, nu_v, spec.eps)
    return SolveResult(
        delta=ImprovementVector(delta, eps_used),
        objective=objective,
        kkt_residual=resid,
        ball_active=bool(eps_used >= spec.eps * (1.0 - 1e-6)),
        lam=lam_v,
        nu=nu_v,
    )


def solve_radius_profile(
    mu_hat: StochasticPolicy, a: np.ndarray, c: np.ndarray, eps_values: np.ndarray
) -> list[SolveResult]:
    """Solve one objective at many radii, sharing the presorted row."""
    eps_values = np.asarray(eps_values, dtype=float)
    mu = mu_hat.weights
    if not _is_fixed_order(a, mu):
        return [
            solve_trust_region(TrustRegionSpec(mu_hat, a, float(e)), c)
            for e in eps_values
        ]
    c = np.asarray(c, dtype=float)
    n = eps_values.size
    batch = _FixedOrderBatch.tiled(a, mu, c, n)
    lam, nu, obj, norm2, kind = batch.solve(eps_values**2)
    out = []
    cmean = float(c.mean())
    for i, eps in enumerate(eps_values):
        delta = batch.materialize(i, float(lam[i]), float(nu[i]), int(kind[i]))
        eps_used = float(np.sqrt(np.sum(a * delta**2)))
        resid = _kkt_residual(
            delta, c, a, mu, float(lam[i]), float(nu[i]) + cmean, float(eps)
        )
        out.append(
            SolveResult(
                delta=ImprovementVector(delta, eps_used),
                objective=float(c @ delta - cmean * delta.sum()),
                kkt_residual=resid,
                ball_active=bool(eps_used >= float(eps) * (1.0 - 1e-6)),
                lam=float(lam[i]),
                nu=float(nu[i]) + cmean,
            )
        )
    return out


def batch_sup_objectives(
    mu_hat: StochasticPolicy,
    a: np.ndarray,
    c_rows: np.ndarray,
    eps_values: np.ndarray,
    row_block: int = 0,
) -> np.ndarray:
    """Supremum objectives for many rows at many radii, shape (m, n_eps).

    Used for Monte-Carlo complexity estimation where only objective values
    are needed; deltas are never materialized.
    """
    mu = mu_hat.weights
    c_rows = np.atleast_2d(np.asarray(c_rows, dtype=float))
    eps_values = np.asarray(eps_values, dtype=float)
    m, d = c_rows.shape
    out = np.empty((m, eps_values.size))
    if not _is_fixed_order(a, mu):
        for i in range(m):
            for j, eps in enumerate(eps_values):
                out[i, j] = solve_trust_region(
                    TrustRegionSpec(mu_hat, a, float(eps)), c_rows[i]
                ).objective
        return out
    if row_block <= 0:
        row_block = max(1, int(1.5e6 / max(d, 1)))
    for start in range(0, m, row_block):
        stop = min(start + row_block, m)
        batch = _FixedOrderBatch(a, mu, c_rows[start:stop])
        for j, eps in enumerate(eps_values):
            _, _, obj, _, _ = batch.solve(np.full(stop - start, eps**2))
            out[start:stop, j] = obj
    return out
