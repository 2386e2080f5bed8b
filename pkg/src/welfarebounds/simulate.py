"""Synthetic demand data and Monte Carlo studies of the inference pipeline.

All randomness flows through counter-based Philox streams keyed by a spawn
path (purpose, replication, good), so replication r of good k reads the same
numbers no matter how many other streams ran before it; parallel and serial
executions agree bit for bit.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .confset import GridSpec, cs_xi
from .errors import EmptyConfidenceSet, InfeasibleConstraint
from .regress import GoodSample, Interval
from .welfare import (
    POSITIVITY_FLOOR,
    ConstraintSet,
    WelfareQuery,
    bounds_box,
    max_constrained,
    welfare_loss,
)

PRICE_LAW = "uniform(1,2)"
SHOCK_LAW = "uniform(0,1)"

# Spawn-path purpose codes.
_DRAW = 0
_QUERY = 1
_CS = 2

# Three-good study constants.
TABLE1_THETA = (0.2, 0.3, 0.5)
TABLE1_DELTA = (0.5, 0.8, 0.2)
TABLE1_YSTAR = (0.2, 0.6, 0.8)
TABLE1_ALPHA = 0.1
DEFAULT_N_VALUES = (200, 1000, 5000)


def substream(seed: int, *path: int) -> np.random.Generator:
    """Counter-based generator for one (purpose, replication, good, ...) path."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=path)
    return np.random.Generator(np.random.Philox(ss))


def child_seed(seed: int, *path: int) -> int:
    """Deterministic integer seed derived from a spawn path."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=path)
    return int(ss.generate_state(1)[0])


@dataclass(frozen=True)
class DgpConfig:
    """Random quasilinear demand generator.

    Prices are U[1,2] and shocks U[0,1] (guaranteeing an interior solution),
    quantity follows theta/(price - shock), and the instrument is the price
    itself unless `endogeneity` is set, in which case price mixes in the
    shock with that weight and an exogenous U[1,1.5] driver serves as the
    instrument.
    """

    theta: np.ndarray
    n: int
    seed: int
    endogeneity: float | None = None
    price_law: str = PRICE_LAW
    shock_law: str = SHOCK_LAW

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        if theta.ndim != 1 or theta.shape[0] < 1:
            raise ValueError("theta must be a nonempty 1-d array")
        if np.any(theta <= 0) or np.any(theta > 1):
            raise ValueError("theta entries must lie in (0, 1]")
        if self.n < 1:
            raise ValueError(f"need a positive sample size, got {self.n}")
        if self.price_law != PRICE_LAW or self.shock_law != SHOCK_LAW:
            raise ValueError("only uniform(1,2) prices and uniform(0,1) shocks are supported")
        object.__setattr__(self, "theta", theta)

    @property
    def K(self) -> int:
        return self.theta.shape[0]


def draw_sample(config: DgpConfig, rep: int = 0, return_latent: bool = False):
    """One synthetic draw per good; price - theta/quantity equals the shock.

    With return_latent=True also returns the per-good shock arrays for
    testing the generator identity.
    """
    samples = []
    latents = []
    for k in range(config.K):
        rng = substream(config.seed, _DRAW, rep, k)
        if config.endogeneity is None:
            price = rng.uniform(1.0, 2.0, config.n)
            shock = rng.uniform(0.0, 1.0, config.n)
            z = price.copy()
        else:
            z = rng.uniform(1.0, 1.5, config.n)
            shock = rng.uniform(0.0, 1.0, config.n)
            price = z + config.endogeneity * shock + rng.uniform(0.0, 0.1, config.n)
        quantity = config.theta[k] / (price - shock)
        samples.append(
            GoodSample(
                price=price,
                quantity=quantity,
                instrument=z,
                good_id=f"good{k + 1}",
            )
        )
        latents.append(shock)
    if return_latent:
        return samples, latents
    return samples


@dataclass(frozen=True)
class IntervalSummary:
    """Per-(n, good) averages over replications.

    var_length is the across-replication sample variance of the length, so
    consumers can attach Monte Carlo standard errors to the averages.
    """

    n: int
    good_id: str
    theta_true: float
    avg_lower: float
    avg_upper: float
    avg_length: float
    coverage: float
    n_empty: int = 0
    var_length: float = 0.0
    n_used: int = 0


@dataclass(frozen=True)
class WelfareSummary:
    """One welfare figure per (n, label); labels are constraint ids or bound sides."""

    n: int
    label: str
    value: float


@dataclass
class McReport:
    """Monte Carlo study output: interval and welfare averages plus timings.

    `timings` holds wall-clock seconds per stage and is excluded from file
    output so identical seeds give byte-identical files.
    """

    reps: int
    intervals: list[IntervalSummary]
    welfare: list[WelfareSummary]
    joint_coverage: dict[int, float]
    timings: dict[str, float]
    true_welfare_loss: float | None = None
    skipped: dict[str, int] = field(default_factory=dict)

    def interval_table(self) -> str:
        head = f"{'n':>6} {'good':>8} {'theta':>7} {'lower':>8} {'upper':>8} {'length':>8} {'cover':>7}"
        lines = [head]
        for row in self.intervals:
            lines.append(
                f"{row.n:>6d} {row.good_id:>8} {row.theta_true:>7.3f} "
                f"{row.avg_lower:>8.3f} {row.avg_upper:>8.3f} "
                f"{row.avg_length:>8.3f} {row.coverage:>7.3f}"
            )
        return "\n".join(lines)

    def welfare_table(self) -> str:
        head = f"{'n':>6} {'constraint':>12} {'value':>8}"
        lines = [head]
        for row in self.welfare:
            lines.append(f"{row.n:>6d} {row.label:>12} {row.value:>8.3f}")
        return "\n".join(lines)


def mc_table1(
    reps: int,
    seed: int,
    n_values: tuple[int, ...] = DEFAULT_N_VALUES,
    grid_nodes: int = 1000,
) -> McReport:
    """Three-good study: per-good intervals and welfare upper bounds.

    Intervals invert the rank statistic alone at per-good level 1 - 0.1/3
    over a 1000-node grid on (0, 1).  Welfare uses the fixed price change
    (0.5, 0.8, 0.2) and consumption (0.2, 0.6, 0.8) under four constraints:
    i) intervals plus sum(theta) = 1, ii) intervals only, iii) the fixed box
    [1e-6, 1] plus the sum, iv) the fixed box only (iii and iv do not depend
    on the data).  Replications with an empty interval or an infeasible sum
    are excluded from the affected averages and counted in `skipped`.
    """
    if reps < 1:
        raise ValueError("need at least one replication")
    theta = np.asarray(TABLE1_THETA)
    K = theta.shape[0]
    query = WelfareQuery(
        delta=np.asarray(TABLE1_DELTA), y_star=np.asarray(TABLE1_YSTAR), alpha=TABLE1_ALPHA
    )
    share = TABLE1_ALPHA / K
    grid = GridSpec(POSITIVITY_FLOOR, 1.0, grid_nodes)
    fixed_box = tuple(Interval(POSITIVITY_FLOOR, 1.0, 1.0, "BOX") for _ in range(K))
    wl_iv = bounds_box(ConstraintSet(fixed_box), query).wl_max
    wl_iii = max_constrained(ConstraintSet(fixed_box, sum_to=1.0), query).wl_max
    true_wl = welfare_loss(theta, query)

    intervals: list[IntervalSummary] = []
    welfare: list[WelfareSummary] = []
    joint_coverage: dict[int, float] = {}
    timings: dict[str, float] = {}
    skipped: dict[str, int] = {}
    for n in n_values:
        cfg = DgpConfig(theta=theta, n=n, seed=seed)
        sums = np.zeros((K, 4))
        covers = np.zeros(K)
        counts = np.zeros(K, dtype=int)
        empties = np.zeros(K, dtype=int)
        joint = 0
        wl_sum = {"i": 0.0, "ii": 0.0}
        wl_count = {"i": 0, "ii": 0}
        ii_covers = 0
        infeasible = 0
        t_ci = 0.0
        t_wl = 0.0
        for r in range(reps):
            samples = draw_sample(cfg, rep=r)
            t0 = time.perf_counter()
            ivs: list[Interval | None] = []
            for k, s in enumerate(samples):
                try:
                    iv, _ = cs_xi(s, share, grid, child_seed(seed, _CS, r, k))
                except EmptyConfidenceSet:
                    empties[k] += 1
                    ivs.append(None)
                    continue
                ivs.append(iv)
                sums[k] += (iv.lower, iv.upper, iv.length, iv.length**2)
                covers[k] += iv.contains(theta[k])
                counts[k] += 1
            t_ci += time.perf_counter() - t0
            joint += all(
                iv is not None and iv.contains(theta[k]) for k, iv in enumerate(ivs)
            )
            t0 = time.perf_counter()
            if all(iv is not None for iv in ivs):
                box = ConstraintSet(tuple(ivs))
                wl_ii = bounds_box(box, query).wl_max
                wl_sum["ii"] += wl_ii
                wl_count["ii"] += 1
                ii_covers += wl_ii >= true_wl
                try:
                    boxed = ConstraintSet(tuple(ivs), sum_to=1.0)
                    wl_sum["i"] += max_constrained(boxed, query).wl_max
                    wl_count["i"] += 1
                except InfeasibleConstraint:
                    infeasible += 1
            t_wl += time.perf_counter() - t0
        for k in range(K):
            c = max(counts[k], 1)
            mean_len = sums[k, 2] / c
            var_len = (sums[k, 3] - c * mean_len**2) / (c - 1) if c > 1 else 0.0
            intervals.append(
                IntervalSummary(
                    n=n,
                    good_id=f"good{k + 1}",
                    theta_true=float(theta[k]),
                    avg_lower=sums[k, 0] / c,
                    avg_upper=sums[k, 1] / c,
                    avg_length=mean_len,
                    coverage=covers[k] / reps,
                    n_empty=int(empties[k]),
                    var_length=max(var_len, 0.0),
                    n_used=int(counts[k]),
                )
            )
        for label in ("i", "ii"):
            if wl_count[label]:
                welfare.append(WelfareSummary(n, label, wl_sum[label] / wl_count[label]))
        welfare.append(WelfareSummary(n, "iii", wl_iii))
        welfare.append(WelfareSummary(n, "iv", wl_iv))
        if wl_count["ii"]:
            # share of replications whose interval-box maximum bounds the truth
            welfare.append(WelfareSummary(n, "ii_covers_true", ii_covers / wl_count["ii"]))
        joint_coverage[n] = joint / reps
        timings[f"ci_n{n}"] = t_ci
        timings[f"welfare_n{n}"] = t_wl
        if infeasible:
            skipped[f"infeasible_sum_n{n}"] = infeasible
        if empties.sum():
            skipped[f"empty_sets_n{n}"] = int(empties.sum())
    return McReport(
        reps=reps,
        intervals=intervals,
        welfare=welfare,
        joint_coverage=joint_coverage,
        timings=timings,
        true_welfare_loss=true_wl,
        skipped=skipped,
    )


def mc_table2(
    K: int,
    reps: int,
    seed: int,
    n_values: tuple[int, ...] = DEFAULT_N_VALUES,
    grid_nodes: int = 1000,
) -> McReport:
    """Many-goods study: interval lengths, joint coverage, endpoint welfare bounds.

    theta values are K equally spaced points between 0.1 and 0.9; the price
    change is one U[0.1, 1.1] draw and consumption one U[0.2, 1.2] draw per
    K, held fixed across replications and sample sizes.  Welfare bounds come
    from substituting the interval endpoints; `bracketed` reports the share
    of replications whose bounds enclose the true loss.
    """
    if K < 1 or reps < 1:
        raise ValueError("need at least one good and one replication")
    theta = np.linspace(0.1, 0.9, K)
    q_rng = substream(seed, _QUERY, K)
    query = WelfareQuery(
        delta=q_rng.uniform(0.1, 1.1, K),
        y_star=q_rng.uniform(0.2, 1.2, K),
        alpha=0.1,
    )
    true_wl = welfare_loss(theta, query)
    share = 0.1 / K
    grid = GridSpec(POSITIVITY_FLOOR, 1.0, grid_nodes)

    intervals: list[IntervalSummary] = []
    welfare: list[WelfareSummary] = []
    joint_coverage: dict[int, float] = {}
    timings: dict[str, float] = {}
    skipped: dict[str, int] = {}
    for n in n_values:
        cfg = DgpConfig(theta=theta, n=n, seed=seed)
        sums = np.zeros((K, 4))
        covers = np.zeros(K)
        counts = np.zeros(K, dtype=int)
        empties = np.zeros(K, dtype=int)
        joint = 0
        upper_sum = 0.0
        lower_sum = 0.0
        bracketed = 0
        complete = 0
        t_ci = 0.0
        for r in range(reps):
            samples = draw_sample(cfg, rep=r)
            t0 = time.perf_counter()
            ivs: list[Interval | None] = []
            for k, s in enumerate(samples):
                try:
                    iv, _ = cs_xi(s, share, grid, child_seed(seed, _CS, r, k))
                except EmptyConfidenceSet:
                    empties[k] += 1
                    ivs.append(None)
                    continue
                ivs.append(iv)
                sums[k] += (iv.lower, iv.upper, iv.length, iv.length**2)
                covers[k] += iv.contains(theta[k])
                counts[k] += 1
            t_ci += time.perf_counter() - t0
            joint += all(
                iv is not None and iv.contains(theta[k]) for k, iv in enumerate(ivs)
            )
            if all(iv is not None for iv in ivs):
                bb = bounds_box(ConstraintSet(tuple(ivs)), query)
                upper_sum += bb.wl_max
                lower_sum += bb.wl_min
                bracketed += bb.wl_min <= true_wl <= bb.wl_max
                complete += 1
        for k in range(K):
            c = max(counts[k], 1)
            mean_len = sums[k, 2] / c
            var_len = (sums[k, 3] - c * mean_len**2) / (c - 1) if c > 1 else 0.0
            intervals.append(
                IntervalSummary(
                    n=n,
                    good_id=f"good{k + 1}",
                    theta_true=float(theta[k]),
                    avg_lower=sums[k, 0] / c,
                    avg_upper=sums[k, 1] / c,
                    avg_length=mean_len,
                    coverage=covers[k] / reps,
                    n_empty=int(empties[k]),
                    var_length=max(var_len, 0.0),
                    n_used=int(counts[k]),
                )
            )
        if complete:
            welfare.append(WelfareSummary(n, "upper", upper_sum / complete))
            welfare.append(WelfareSummary(n, "lower", lower_sum / complete))
            welfare.append(WelfareSummary(n, "bracketed", bracketed / complete))
        joint_coverage[n] = joint / reps
        timings[f"ci_n{n}"] = t_ci
        if empties.sum():
            skipped[f"empty_sets_n{n}"] = int(empties.sum())
    return McReport(
        reps=reps,
        intervals=intervals,
        welfare=welfare,
        joint_coverage=joint_coverage,
        timings=timings,
        true_welfare_loss=true_wl,
        skipped=skipped,
    )
