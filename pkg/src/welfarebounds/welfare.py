"""Welfare-loss evaluation and its extremes over constrained parameter boxes.

The loss of a consumer with reference consumption ystar under price increases
delta is sum_k theta_k * log(1 + delta_k * ystar_k / theta_k).  The function
is strictly increasing and strictly concave in each theta_k wherever
delta_k * ystar_k > 0, which drives both solvers here:

  * over a plain box the extremes sit at the corners (bounds_box);
  * with an added sum(theta) = s constraint the maximum solves the separable
    stationarity condition by nested bisection, and the minimum sits at a
    vertex of the feasible polytope, enumerated exactly for K <= 20.

The kl_div reformulation (-sum kl_div(theta, theta + c) + sum c equals the
loss) is kept as an identity for cross-checking, not as a solver dependency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyConfidenceSet,
    InfeasibleConstraint,
    InvalidLevel,
    InvalidTheta,
    NegativePriceChange,
)

# Lower edge of the admissible theta space; also the default grid floor.
POSITIVITY_FLOOR = 1e-6

# Feasible sets with more goods than this get the multi-start minimum search
# instead of exact vertex enumeration.
_VERTEX_ENUM_MAX_K = 20

_LAMBDA_TOL = 1e-10
_KKT_TOL = 1e-8


@dataclass(frozen=True)
class WelfareQuery:
    """Counterfactual price increases and reference consumption for one individual."""

    delta: np.ndarray
    y_star: np.ndarray
    alpha: float

    def __post_init__(self):
        delta = np.asarray(self.delta, dtype=float)
        y_star = np.asarray(self.y_star, dtype=float)
        if delta.ndim != 1 or y_star.ndim != 1 or delta.shape != y_star.shape:
            raise ValueError("delta and y_star must be 1-d arrays of equal length")
        if not np.all(np.isfinite(delta)) or np.any(delta < 0):
            raise NegativePriceChange(
                "price changes must be finite and nonnegative; "
                "price drops are outside the model's domain"
            )
        if not np.all(np.isfinite(y_star)) or np.any(y_star <= 0):
            raise ValueError("reference consumption must be finite and positive")
        if not 0.0 < self.alpha < 1.0:
            raise InvalidLevel(f"alpha must lie strictly in (0, 1), got {self.alpha}")
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "y_star", y_star)

    @property
    def K(self) -> int:
        return self.delta.shape[0]

    @property
    def spend_change(self) -> np.ndarray:
        """Per-good extra expenditure delta_k * ystar_k at fixed consumption."""
        return self.delta * self.y_star


@dataclass(frozen=True)
class ConstraintSet:
    """Per-good theta intervals, an optional sum(theta) target, and a floor."""

    box: tuple
    sum_to: float | None = None
    positivity_floor: float = POSITIVITY_FLOOR

    def __post_init__(self):
        box = tuple(self.box)
        if not box:
            raise ValueError("constraint box must contain at least one interval")
        if self.positivity_floor <= 0:
            raise ValueError("positivity floor must be positive")
        object.__setattr__(self, "box", box)

    @property
    def K(self) -> int:
        return len(self.box)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Floored lower and raw upper endpoints; raises on any empty interval."""
        lowers = np.empty(self.K)
        uppers = np.empty(self.K)
        for k, iv in enumerate(self.box):
            if iv.empty or iv.upper < self.positivity_floor:
                raise EmptyConfidenceSet(
                    f"box interval {k} is empty below the positivity floor",
                    level=iv.level,
                )
            lowers[k] = max(iv.lower, self.positivity_floor)
            uppers[k] = iv.upper
        return lowers, uppers

    def joint_level(self) -> float:
        """Union-bound confidence level of the whole box."""
        return max(0.0, 1.0 - sum(1.0 - iv.level for iv in self.box))


@dataclass(frozen=True)
class WelfareBounds:
    """Extremes of the loss over a constraint set, with the level they hold at.

    gamma is the auxiliary vector argmax_theta + delta * ystar from the
    convex-programming reformulation; kkt_residual reports the stationarity
    and feasibility gap of the constrained maximizer (0.0 for box-only
    bounds, which are exact).  min_certified is False only when the minimum
    came from the multi-start search used beyond the vertex-enumeration
    size limit.
    """

    wl_min: float
    wl_max: float
    level: float
    argmax_theta: np.ndarray
    gamma: np.ndarray
    kkt_residual: float = 0.0
    min_certified: bool = True


def welfare_loss(theta, query: WelfareQuery) -> float:
    """Loss sum_k theta_k * log(1 + delta_k * ystar_k / theta_k).

    Goods with zero price change contribute exactly 0 and are skipped.
    Raises InvalidTheta unless every theta_k is finite and positive.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (query.K,):
        raise InvalidTheta(
            f"theta has shape {theta.shape}, query expects ({query.K},)"
        )
    if not np.all(np.isfinite(theta)) or np.any(theta <= 0):
        raise InvalidTheta("theta entries must be finite and positive")
    c = query.spend_change
    active = c > 0
    if not np.any(active):
        return 0.0
    t = theta[active]
    ca = c[active]
    # Below 1e-12 (far under the positivity floor) use the analytic limit
    # theta * log(1 + c/theta) -> 0 instead of risking c/theta overflow.
    tiny = t < 1e-12
    if np.any(tiny):
        safe = np.where(tiny, 1.0, t)
        terms = np.where(tiny, 0.0, t * np.log1p(ca / safe))
        return float(terms.sum())
    return float(np.sum(t * np.log1p(ca / t)))


def kl_div(x1, x2) -> np.ndarray:
    """Elementwise x1*log(x1/x2) - x1 + x2 for positive inputs."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    return x1 * np.log(x1 / x2) - x1 + x2


def bounds_box(constraints: ConstraintSet, query: WelfareQuery) -> WelfareBounds:
    """Loss extremes over a box: monotonicity puts them at the corners."""
    if constraints.sum_to is not None:
        raise ValueError("constraint set has a sum target; use max_constrained")
    lowers, uppers = constraints.bounds()
    if constraints.K != query.K:
        raise InvalidTheta(
            f"box has {constraints.K} goods, query has {query.K}"
        )
    wl_min = welfare_loss(lowers, query)
    wl_max = welfare_loss(uppers, query)
    return WelfareBounds(
        wl_min=wl_min,
        wl_max=wl_max,
        level=constraints.joint_level(),
        argmax_theta=uppers,
        gamma=uppers + query.spend_change,
    )


def _marginal(theta, c):
    """d/dtheta of theta*log(1 + c/theta); strictly decreasing in theta for c > 0."""
    return np.log1p(c / theta) - c / (c + theta)


def _theta_at(lam: float, c, lo, hi, iters: int = 90) -> np.ndarray:
    """Per-coordinate argmax of term_k(theta) - lam*theta over [lo, hi], c > 0."""
    a = lo.astype(float).copy()
    b = hi.astype(float).copy()
    for _ in range(iters):
        m = 0.5 * (a + b)
        go_right = _marginal(m, c) > lam
        a = np.where(go_right, m, a)
        b = np.where(go_right, b, m)
    return 0.5 * (a + b)


def _waterfill(lo: np.ndarray, hi: np.ndarray, total: float) -> np.ndarray:
    """Any feasible split of `total` over [lo, hi]; deterministic front-fill."""
    theta = lo.astype(float).copy()
    slack = total - float(lo.sum())
    for k in range(theta.shape[0]):
        if slack <= 0:
            break
        add = min(slack, hi[k] - lo[k])
        theta[k] += add
        slack -= add
    return theta


def _kkt_residual(theta, lam, c, lo, hi, target) -> float:
    """Max violation of stationarity/bound conditions plus the sum gap."""
    resid = abs(float(theta.sum()) - target)
    g = np.where(c > 0, _marginal(np.maximum(theta, 1e-300), np.maximum(c, 1e-300)), 0.0)
    at_lo = theta <= lo + 1e-11
    at_hi = theta >= hi - 1e-11
    viol = np.abs(g - lam)
    viol = np.where(at_hi & (g >= lam), 0.0, viol)
    viol = np.where(at_lo & (g <= lam), 0.0, viol)
    return max(resid, float(viol.max(initial=0.0)))


def _solve_max(c, lo, hi, target):
    """Maximize the separable loss subject to the box and sum(theta) = target."""
    active = c > 0
    theta = lo.astype(float).copy()
    if not np.any(active):
        return _waterfill(lo, hi, target), 0.0
    free = ~active
    ca, loa, hia = c[active], lo[active], hi[active]
    # Flat coordinates sit at their lower bounds unless the active ones are
    # saturated; the active budget is whatever remains of the target.
    budget = float(np.clip(target - lo[free].sum(), loa.sum(), hia.sum()))
    a, b = 0.0, float(_marginal(loa, ca).max())
    it = 0
    while (b - a) > _LAMBDA_TOL and it < 200:
        m = 0.5 * (a + b)
        if float(_theta_at(m, ca, loa, hia).sum()) > budget:
            a = m
        else:
            b = m
        it += 1
    lam = 0.5 * (a + b)
    ta = _theta_at(lam, ca, loa, hia)
    # Spread any residual over coordinates strictly inside their bounds.
    gap = budget - float(ta.sum())
    interior = (ta > loa + 1e-12) & (ta < hia - 1e-12)
    n_int = int(interior.sum())
    if gap != 0.0 and n_int:
        ta = np.where(interior, np.clip(ta + gap / n_int, loa, hia), ta)
    theta[active] = ta
    if np.any(free):
        theta[free] = _waterfill(lo[free], hi[free], target - float(ta.sum()))
    return theta, lam


def _term_values(theta: np.ndarray, c) -> np.ndarray:
    """Loss terms theta*log1p(c/theta) elementwise; zero where c is zero."""
    theta = np.asarray(theta, dtype=float)
    c = np.broadcast_to(np.asarray(c, dtype=float), theta.shape)
    out = np.zeros(theta.shape)
    mask = c > 0
    out[mask] = theta[mask] * np.log1p(c[mask] / theta[mask])
    return out


def _vertex_min(c, lo, hi, target):
    """Exact minimum by enumerating polytope vertices (one free coordinate)."""
    K = lo.shape[0]
    term_lo = _term_values(lo, c)
    term_hi = _term_values(hi, c)
    best_val = math.inf
    best_theta = None
    for j in range(K):
        idx = np.delete(np.arange(K), j)
        m = K - 1
        base_sum = float(lo[idx].sum())
        span = (hi - lo)[idx]
        dterm = (term_hi - term_lo)[idx]
        base_term = float(term_lo[idx].sum())
        npat = 1 << m
        for start in range(0, npat, 1 << 16):
            stop = min(npat, start + (1 << 16))
            codes = np.arange(start, stop, dtype=np.uint64)
            bits = ((codes[:, None] >> np.arange(m, dtype=np.uint64)[None, :]) & 1).astype(float)
            tj = target - base_sum - bits @ span
            ok = (tj >= lo[j] - 1e-12) & (tj <= hi[j] + 1e-12)
            if not ok.any():
                continue
            bits_ok = bits[ok]
            tj_ok = np.clip(tj[ok], lo[j], hi[j])
            obj = base_term + bits_ok @ dterm + _term_values(tj_ok, c[j])
            i = int(np.argmin(obj))
            if obj[i] < best_val:
                best_val = float(obj[i])
                theta = np.empty(K)
                theta[idx] = np.where(bits_ok[i] == 1.0, hi[idx], lo[idx])
                theta[j] = tj_ok[i]
                best_theta = theta
    if best_theta is None:
        raise InfeasibleConstraint("no polytope vertex satisfies the sum constraint")
    return best_theta


def _exchange_min(c, lo, hi, target, starts: int = 8, sweeps: int = 200):
    """Multi-start pairwise mass exchange; reaches a local vertex minimum."""
    K = lo.shape[0]
    rng = np.random.default_rng(0)
    best_val = math.inf
    best_theta = None
    for _ in range(starts):
        order = rng.permutation(K)
        theta = np.empty(K)
        theta[order] = _waterfill(lo[order], hi[order], target)
        for _ in range(sweeps):
            improved = False
            for i in range(K):
                for j in range(i + 1, K):
                    # transfer d from j to i; concavity puts the pair minimum
                    # at an endpoint of the feasible transfer range
                    d_lo = max(lo[i] - theta[i], theta[j] - hi[j])
                    d_hi = min(hi[i] - theta[i], theta[j] - lo[j])
                    if d_hi - d_lo <= 1e-14:
                        continue
                    cur = _pair_value(theta[i], theta[j], c[i], c[j])
                    best_d = None
                    for d in (d_lo, d_hi):
                        cand = _pair_value(theta[i] + d, theta[j] - d, c[i], c[j])
                        if cand < cur - 1e-14:
                            cur = cand
                            best_d = d
                    if best_d is not None:
                        theta[i] += best_d
                        theta[j] -= best_d
                        improved = True
            if not improved:
                break
        val = float(_term_values(theta, c).sum())
        if val < best_val:
            best_val = val
            best_theta = theta.copy()
    return best_theta


def _pair_value(ti, tj, ci, cj):
    v = 0.0
    if ci > 0:
        v += ti * math.log1p(ci / ti)
    if cj > 0:
        v += tj * math.log1p(cj / tj)
    return v


def max_constrained(constraints: ConstraintSet, query: WelfareQuery) -> WelfareBounds:
    """Loss extremes under the box plus sum(theta) = sum_to.

    The maximizer solves, coordinate by coordinate, the stationarity
    condition log1p(c/theta) - c/(c+theta) = lambda (strictly decreasing in
    theta) with an outer bisection on lambda to meet the sum; this is exact
    for the concave separable objective.  The minimum is taken over polytope
    vertices, enumerated exactly up to K = 20 goods and located by
    multi-start exchange above that (flagged via min_certified).
    """
    if constraints.sum_to is None:
        raise ValueError("constraint set has no sum target; use bounds_box")
    lowers, uppers = constraints.bounds()
    if constraints.K != query.K:
        raise InvalidTheta(
            f"box has {constraints.K} goods, query has {query.K}"
        )
    target = float(constraints.sum_to)
    eps = 1e-12 * max(1.0, abs(target))
    if not (lowers.sum() - eps <= target <= uppers.sum() + eps):
        raise InfeasibleConstraint(
            f"sum target {target:g} lies outside [{lowers.sum():g}, {uppers.sum():g}]"
        )
    c = query.spend_change
    theta_max, lam = _solve_max(c, lowers, uppers, target)
    kkt = _kkt_residual(theta_max, lam, c, lowers, uppers, target)
    if constraints.K <= _VERTEX_ENUM_MAX_K:
        theta_min = _vertex_min(c, lowers, uppers, target)
        certified = True
    else:
        theta_min = _exchange_min(c, lowers, uppers, target)
        certified = False
    wl_max = welfare_loss(theta_max, query)
    wl_min = welfare_loss(theta_min, query)
    return WelfareBounds(
        wl_min=min(wl_min, wl_max),
        wl_max=wl_max,
        level=constraints.joint_level(),
        argmax_theta=theta_max,
        gamma=theta_max + c,
        kkt_residual=kkt,
        min_certified=certified,
    )
