"""Monte-Carlo certification of the risk-bound guarantee ``E[L / R] <= 1``.

Randomness comes from :func:`stream`, which derives an independent
generator from ``(seed, block, ...)``. Replications are processed in
fixed-size blocks with one stream each, so results do not depend on how
the work is scheduled.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import __version__
from .decision import (
    Interval,
    Loss,
    minimax_action,
    minimax_testing_actions,
    objective_bayes_assessment,
    sup_risk_batch,
    threshold_rule,
    times,
)
from .ecollections import BBW, Dampened, ECollection, SavageDickey, SimpleVsSimple, Trivial, TwoPoint
from .errors import ConfigurationError, DomainError, ExperimentAborted
from .models import Dataset, GaussianPrior, Model, SimpleTest

BLOCK = 8192


def stream(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *[int(k) for k in keys]]))


def _model_and_param(space, theta):
    if isinstance(space, SimpleTest):
        return space.model, float(space.param(theta))
    space.check(theta)
    return space, float(theta)


def sample_suffstats(space, theta, n: int, reps: int, seed: int) -> np.ndarray:
    """``reps`` draws of the sufficient statistic at sample size ``n``."""
    model, param = _model_and_param(space, theta)
    out = np.empty(reps)
    for b, start in enumerate(range(0, reps, BLOCK)):
        size = min(BLOCK, reps - start)
        out[start : start + size] = model.sample_suffstat(param, n, stream(seed, b), size=size)
    return out


def ratio(loss_value, bound):
    """``L / R`` with ``0/0 = 0``, ``x/inf = 0`` and ``x/0 = sign(x) inf``."""
    loss_value = np.asarray(loss_value, dtype=float)
    bound = np.asarray(bound, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = loss_value / bound
    r = np.where(np.isinf(bound), 0.0, r)
    r = np.where((bound == 0) & (loss_value == 0), 0.0, r)
    return r


# decision rules ------------------------------------------------------------------


class Rule:
    """A deterministic decision rule ``(n, s) -> action``."""

    name = "rule"

    def actions(self, n, s):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.name})"


class MLERule(Rule):
    name = "mle"

    def actions(self, n, s):
        return np.asarray(s, dtype=float) / n


class ShrinkRule(Rule):
    """``a = factor * theta_hat`` (a deliberately suboptimal estimator)."""

    def __init__(self, factor: float = 0.5):
        self.factor = float(factor)
        self.name = f"shrink-{self.factor:g}"

    def actions(self, n, s):
        return self.factor * np.asarray(s, dtype=float) / n


class ConstantRule(Rule):
    def __init__(self, action: float):
        self.action = float(action)
        self.name = f"constant-{self.action:g}"

    def actions(self, n, s):
        return np.full(np.shape(s), self.action)


class MinimaxRule(Rule):
    """E-posterior minimax rule.

    Testing: exact per observation. Estimation: the minimax action is
    computed on a grid of MLE values (``node_step`` apart, covering
    Θ° plus one unit on each side) and linearly interpolated. The result
    is a fixed deterministic function of the data, which is all the
    validity guarantee requires.
    """

    name = "minimax"

    def __init__(
        self,
        coll: ECollection,
        loss: Loss,
        theta_set: Optional[Interval] = None,
        action_set: Optional[Interval] = None,
        *,
        capped: bool = False,
        node_step: float = 0.25,
        action_grid: int = 101,
        grid_opts: Optional[dict] = None,
    ):
        self.coll, self.loss, self.theta_set = coll, loss, theta_set
        self.action_set = action_set if action_set is not None else theta_set
        self.capped = capped
        self.node_step = node_step
        self.action_grid = action_grid
        self.grid_opts = grid_opts or {}
        self._tables: dict = {}

    def table(self, n: int):
        if n not in self._tables:
            lo, hi = self.theta_set.lo - 1.0, self.theta_set.hi + 1.0
            nodes = np.linspace(lo, hi, int(round((hi - lo) / self.node_step)) + 1)
            model = self.coll.space
            acts = []
            for th in nodes:
                data = Dataset(model.family, int(n), float(th * n))
                a, _ = minimax_action(
                    self.coll, self.loss, data, self.theta_set, self.action_set,
                    capped=self.capped, action_grid=self.action_grid, action_tol=1e-8, **self.grid_opts,
                )
                acts.append(a)
            self._tables[n] = (nodes, np.array(acts))
        return self._tables[n]

    def actions(self, n, s):
        if isinstance(self.coll.space, SimpleTest):
            return minimax_testing_actions(self.coll, self.loss, n, s, capped=self.capped)
        nodes, acts = self.table(int(n))
        return np.interp(np.asarray(s, dtype=float) / n, nodes, acts)


class LikelihoodRule(Rule):
    """Action 1 iff ``p_1(y) > p_0(y)``."""

    name = "likelihood"

    def __init__(self, test: SimpleTest):
        self.test = test

    def actions(self, n, s):
        return np.where(self.test.log_lr(n, s) > 0, 1, 0)


class ThresholdRule(Rule):
    """Action 0 iff ``p_0/p_1 >= r_star``."""

    def __init__(self, test: SimpleTest, r_star: float):
        self.test = test
        self.r_star = float(r_star)
        self.name = f"threshold-{self.r_star:g}"

    def actions(self, n, s):
        return threshold_rule(self.r_star, self.test.log_lr(n, s))


class BBWRule(Rule):
    name = "bbw"

    def __init__(self, coll: BBW):
        self.coll = coll

    def actions(self, n, s):
        return self.coll.decision(n, s)


# validity ------------------------------------------------------------------------


@dataclass(frozen=True)
class ValidityReport:
    kind: str
    theta: float
    n: int
    loss: str
    rule: str
    reps: int
    mean: float
    se: float
    passed: bool
    seed: int
    capped: bool = False
    infinite_ratios: int = 0
    label: str = ""

    CSV_FIELDS = ("label", "kind", "theta", "n", "loss", "rule", "capped", "reps", "mean", "se", "passed", "infinite_ratios", "seed")

    def to_row(self) -> dict:
        d = asdict(self)
        return {k: d[k] for k in self.CSV_FIELDS}


def _mean_se(x: np.ndarray):
    mean = float(np.mean(x))
    se = float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 and np.all(np.isfinite(x)) else 0.0
    return mean, se


def risk_ratios(
    coll: ECollection,
    loss: Loss,
    rule: Rule,
    theta,
    n,
    s,
    theta_set: Optional[Interval] = None,
    *,
    capped: bool = False,
    grid_opts: Optional[dict] = None,
):
    """Per-replication ``L(theta, delta(y)) / R(delta)`` (weights cancel unless zero)."""
    grid_opts = grid_opts or {}
    a = rule.actions(n, s)
    sup, _ = sup_risk_batch(coll, loss, n, s, a, theta_set, capped=capped, **grid_opts)
    bound = 2.0 * sup if capped else sup
    weight = np.asarray(loss.weight_at(n, s), dtype=float)
    return ratio(times(weight, loss(theta, a)), times(weight, bound))


def validity_check(
    coll: ECollection,
    loss: Loss,
    rule: Rule,
    theta,
    n: int,
    reps: int,
    seed: int,
    theta_set: Optional[Interval] = None,
    *,
    capped: bool = False,
    grid_opts: Optional[dict] = None,
    label: str = "",
) -> ValidityReport:
    """Estimate ``E_theta[L / R]``; pass iff the mean is at most ``1 + 3 SE``."""
    if reps < 2:
        raise DomainError("validity checks need at least two replications")
    s = sample_suffstats(coll.space, theta, n, reps, seed)
    r = risk_ratios(coll, loss, rule, theta, n, s, theta_set, capped=capped, grid_opts=grid_opts)
    n_inf = int(np.sum(np.isposinf(r)))
    mean, se = _mean_se(r)
    return ValidityReport(
        kind=coll.kind, theta=float(theta), n=int(n), loss=_loss_label(loss), rule=rule.name,
        reps=int(reps), mean=mean, se=se, passed=bool(n_inf == 0 and mean <= 1 + 3 * se),
        seed=int(seed), capped=capped, infinite_ratios=n_inf, label=label,
    )


def _loss_label(loss: Loss) -> str:
    if loss.kind == "wald-np":
        return "wald-np(" + ",".join(f"{v:g}" for v in loss.table) + ")"
    return loss.kind


def evalue_mean(coll: ECollection, theta, n: int, reps: int, seed: int):
    """Monte-Carlo ``(mean, se)`` of ``S_theta`` at fixed ``n``."""
    s = sample_suffstats(coll.space, theta, n, reps, seed)
    return _mean_se(coll.evalue_at(theta, n, s))


# acceptance matrix ---------------------------------------------------------------

ESTIMATION_THETAS = (-1.0, 0.0, 2.0)
TESTING_PAIRS = ((0.0, 2.0), (-1.0, 0.0))
TESTING_TABLES = {
    "c0-symmetric": (0.0, 1.0, 1.0, 0.0),
    "c0-asymmetric": (0.0, 1.0, 4.0, 0.0),
    "non-c0": (-0.5, 1.0, 2.0, 0.25),
}
MC_GRID = {"grid": 101, "window": 101, "tol": 1e-8}


def acceptance_matrix(reps: int = 100_000, seed: int = 0, capped: bool = False, progress: Optional[Callable] = None):
    """Every (collection, theta, loss, rule) combination of the validity matrix.

    Estimation: gaussian, ``n = 10``, Θ° = [-4, 4]; collections trivial,
    Savage-Dickey with prior N(0, 1), two-point with ``C = 1, n* = 10`` and
    the half-dampened version of each; losses squared error and kl; rules
    minimax, MLE and ``0.5 * MLE``.

    Testing: gaussian pairs ``(0, 2)`` and ``(-1, 0)``, ``n = 1``;
    collections trivial, Savage-Dickey uniform, likelihood ratio,
    generalised SD ``(w0, w1) = (0.8, 0.3)`` and their half-dampened
    versions with rules minimax, likelihood and a shifted threshold; BBW
    (``w = 1/2``) with its own rule only, or, for the capped bound (valid for
    any rule), with the likelihood and threshold rules as well; three loss tables.
    """
    reports = []
    model = Model("gaussian")
    theta_set = Interval(-4.0, 4.0)
    n_est = 10
    base = [Trivial(model), SavageDickey(model, GaussianPrior(0.0, 1.0)), TwoPoint(model, 1.0, n_est)]
    colls = base + [Dampened(c, 0.5) for c in base]
    losses = [Loss.squared_error(), Loss.kl_loss(model)]
    # minimax tables depend on (collection, loss) only; share them across theta
    minimax = {
        (i, j): MinimaxRule(coll, loss, theta_set, capped=capped, grid_opts=MC_GRID)
        for i, coll in enumerate(colls)
        for j, loss in enumerate(losses)
    }
    case = 0
    for theta in ESTIMATION_THETAS:
        s = sample_suffstats(model, theta, n_est, reps, seed + case)
        for i, coll in enumerate(colls):
            for j, loss in enumerate(losses):
                for rule in (minimax[i, j], MLERule(), ShrinkRule(0.5)):
                    r = risk_ratios(coll, loss, rule, theta, n_est, s, theta_set, capped=capped, grid_opts=MC_GRID)
                    reports.append(_summarise(r, coll, loss, rule, theta, n_est, reps, seed + case, capped, _label(coll)))
                    if progress:
                        progress(reports[-1])
        case += 1

    for t0, t1 in TESTING_PAIRS:
        test = SimpleTest(model, t0, t1)
        base_t = [Trivial(test), SimpleVsSimple(test, 0.5, 0.5), SimpleVsSimple(test, 1.0, 0.0), SimpleVsSimple(test, 0.8, 0.3)]
        colls_t = base_t + [Dampened(c, 0.5) for c in base_t]
        bbw = BBW(test, 0.5)
        for idx in (0, 1):
            s = sample_suffstats(test, idx, 1, reps, seed + case)
            for name, tab in TESTING_TABLES.items():
                loss = Loss.wald_np(*tab)
                for coll in colls_t:
                    rules = [MinimaxRule(coll, loss, capped=capped), LikelihoodRule(test), ThresholdRule(test, 1.0 / 3.0)]
                    for rule in rules:
                        r = risk_ratios(coll, loss, rule, idx, 1, s, capped=capped)
                        reports.append(_summarise(r, coll, loss, rule, idx, 1, reps, seed + case, capped, _label(coll, test)))
                        if progress:
                            progress(reports[-1])
                bbw_rules = [BBWRule(bbw)]
                if capped:
                    bbw_rules += [LikelihoodRule(test), ThresholdRule(test, 1.0 / 3.0)]
                for rule in bbw_rules:
                    r = risk_ratios(bbw, loss, rule, idx, 1, s, capped=capped)
                    reports.append(_summarise(r, bbw, loss, rule, idx, 1, reps, seed + case, capped, _label(bbw, test)))
                    if progress:
                        progress(reports[-1])
            case += 1
    return reports


def _label(coll, test: Optional[SimpleTest] = None) -> str:
    name = coll.kind
    if isinstance(coll, Dampened):
        name = f"dampened-{coll.gamma:g}({_label(coll.inner)})"
    if test is not None:
        name += f"@({test.theta0:g},{test.theta1:g})"
    return name


def _summarise(r, coll, loss, rule, theta, n, reps, seed, capped, label):
    n_inf = int(np.sum(np.isposinf(r)))
    mean, se = _mean_se(r)
    return ValidityReport(
        kind=coll.kind, theta=float(theta), n=int(n), loss=_loss_label(loss), rule=rule.name, reps=int(reps),
        mean=mean, se=se, passed=bool(n_inf == 0 and mean <= 1 + 3 * se), seed=int(seed), capped=capped,
        infinite_ratios=n_inf, label=label,
    )


# bookie game ---------------------------------------------------------------------


@dataclass(frozen=True)
class BookieGame:
    """Simple bookie: stake ``B = b(y, u)`` with ``U ~ Uniform[0, 1]``.

    compliant: the presented stake is ``min(b(y, u), stake / R(delta))``;
    defiant: the bookie presents ``c / R(delta)`` regardless of ``stake``.
    """

    stake: float = 1.0
    offer: Callable = field(default=lambda n, s, u: 1e6 * u)
    mode: str = "compliant"
    c: float = 10.0

    def __post_init__(self):
        if not self.stake > 0:
            raise DomainError("stake must be positive")
        if self.mode not in ("compliant", "defiant"):
            raise ConfigurationError("bookie mode must be 'compliant' or 'defiant'")


@dataclass(frozen=True)
class BookieSummary:
    mode: str
    reps: int
    mean_payoff: float
    se: float
    nonnegative: bool  # mean >= -3 SE
    max_stake_times_bound: float


def bookie_game_run(
    game: BookieGame, coll: ECollection, loss: Loss, rule: Rule, theta, n: int, reps: int, seed: int,
    theta_set: Optional[Interval] = None, grid_opts: Optional[dict] = None,
) -> BookieSummary:
    """Decision maker's payoff ``stake - B * L(theta, delta(Y))``."""
    grid_opts = grid_opts or {}
    s = sample_suffstats(coll.space, theta, n, reps, seed)
    u = np.concatenate([stream(seed, 1 << 20, b).uniform(size=min(BLOCK, reps - st)) for b, st in enumerate(range(0, reps, BLOCK))])
    a = rule.actions(n, s)
    bound, _ = sup_risk_batch(coll, loss, n, s, a, theta_set, **grid_opts)
    with np.errstate(divide="ignore"):
        cap = np.where(bound > 0, 1.0 / bound, np.inf)
    if game.mode == "compliant":
        offered = np.asarray(game.offer(n, s, u), dtype=float)
        B = np.minimum(offered, game.stake * cap)
        bound_product = times(B, bound)
        if np.any(bound_product > game.stake + 1e-12):
            raise AssertionError("compliant bookie presented a stake above the bound")
    else:
        B = game.c * cap
        bound_product = times(B, bound)
    pay = game.stake - times(B, loss(theta, a))
    mean, se = _mean_se(pay)
    return BookieSummary(game.mode, reps, mean, se, bool(mean >= -3 * se), float(np.max(bound_product)))


# sequential experiments ----------------------------------------------------------


@dataclass(frozen=True)
class StoppingRule:
    """fixed: stop at ``n``; threshold: stop when ``S >= level``; lil: stop when ``n (theta_hat - theta_star)^2 >= k_star``.

    Every rule is truncated at ``n_max``.
    """

    kind: str
    n_max: int
    level: float = 20.0
    k_star: float = 5.0
    theta_star: float = 0.0

    def __post_init__(self):
        if self.kind not in ("fixed", "threshold", "lil"):
            raise ConfigurationError(f"unknown stopping rule {self.kind!r}")
        if self.n_max < 1:
            raise DomainError("n_max must be at least 1")

    @classmethod
    def fixed(cls, n: int):
        return cls("fixed", n)

    @classmethod
    def threshold(cls, level: float, n_max: int):
        return cls("threshold", n_max, level=level)

    @classmethod
    def lil(cls, k_star: float, theta_star: float, n_max: int = 1_000_000):
        if not k_star > 0:
            raise DomainError("k_star must be positive")
        return cls("lil", n_max, k_star=k_star, theta_star=theta_star)

    def stops(self, coll, theta, n, s):
        if self.kind == "fixed":
            return np.broadcast_to(n >= self.n_max, np.broadcast(n, s).shape)
        if self.kind == "threshold":
            return coll.log_evalue(theta, n, s) >= math.log(self.level)
        return (s - n * self.theta_star) ** 2 >= self.k_star * n


@dataclass(frozen=True)
class StoppedSample:
    tau: np.ndarray
    s: np.ndarray
    truncated: np.ndarray


def simulate_stopping(
    space, theta, stopping: StoppingRule, reps: int, seed: int, coll: Optional[ECollection] = None,
    rep_chunk: int = 128, step_block: int = 4096,
) -> StoppedSample:
    """Run ``reps`` sequential experiments under ``stopping``."""
    model, param = _model_and_param(space, theta)
    if stopping.kind == "fixed":
        s = sample_suffstats(space, theta, stopping.n_max, reps, seed)
        return StoppedSample(np.full(reps, stopping.n_max), s, np.zeros(reps, dtype=bool))
    tau = np.empty(reps, dtype=np.int64)
    s_tau = np.empty(reps)
    for c, start in enumerate(range(0, reps, rep_chunk)):
        rng = stream(seed, c)
        size = min(rep_chunk, reps - start)
        active = np.arange(size)
        base_s = np.zeros(size)
        n0 = 0
        t_out = np.full(size, stopping.n_max, dtype=np.int64)
        s_out = np.zeros(size)
        while active.size and n0 < stopping.n_max:
            k = min(step_block, stopping.n_max - n0)
            x = model.sample_observations(param, (active.size, k), rng)
            path = base_s[active, None] + np.cumsum(x, axis=1)
            ns = np.arange(n0 + 1, n0 + k + 1)
            hit = np.asarray(stopping.stops(coll, theta, ns[None, :], path))
            any_hit = hit.any(axis=1)
            first = np.argmax(hit, axis=1)
            done = active[any_hit]
            t_out[done] = ns[first[any_hit]]
            s_out[done] = path[any_hit, first[any_hit]]
            base_s[active] = path[:, -1]
            active = active[~any_hit]
            n0 += k
        s_out[active] = base_s[active]
        tau[start : start + size] = t_out
        s_tau[start : start + size] = s_out
    truncated = tau >= stopping.n_max
    # a rule that fires exactly at n_max is not a truncation
    if truncated.any():
        fired = np.asarray(stopping.stops(coll, theta, tau[truncated], s_tau[truncated]))
        truncated[np.flatnonzero(truncated)[fired]] = False
    return StoppedSample(tau, s_tau, truncated)


@dataclass(frozen=True)
class StoppingReport:
    kind: str
    theta: float
    stopping: str
    reps: int
    mean: float
    se: float
    passed: Optional[bool]  # None for collections that are not e-processes
    hit_fraction: float
    truncated_fraction: float
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)


def optional_stopping_check(coll: ECollection, stopping: StoppingRule, theta, reps: int, seed: int) -> StoppingReport:
    """``E[S at tau]``; asserted ``<= 1 + 3 SE`` only for e-processes."""
    smp = simulate_stopping(coll.space, theta, stopping, reps, seed, coll=coll)
    vals = coll.evalue_at(theta, smp.tau, smp.s)
    mean, se = _mean_se(vals)
    hit = float(np.mean(vals >= stopping.level)) if stopping.kind == "threshold" else float(np.mean(~smp.truncated))
    passed = bool(mean <= 1 + 3 * se) if coll.is_e_process else None
    return StoppingReport(coll.kind, float(theta), stopping.kind, reps, mean, se, passed, hit, float(np.mean(smp.truncated)), seed)


@dataclass(frozen=True)
class OverconfidenceReport:
    k_star: float
    theta_star: float
    lam: float
    n_max: int
    reps: int
    seed: int
    truncated_fraction: float
    believed_risk_min: float
    believed_risk_max: float
    actual_risk_mean: float  # over stopped replications
    actual_risk_se: float
    fraction_actual_at_least_k: float  # over stopped replications
    validity_mean: float  # over all replications (tau capped at n_max is a stopping time)
    validity_se: float
    validity_passed: bool
    mean_tau: float

    def to_dict(self) -> dict:
        return asdict(self)


def overconfidence_experiment(
    k_star: float, theta_star: float = 0.0, lam: float = 1.0, n_max: int = 1_000_000, reps: int = 1000,
    seed: int = 0, *, max_truncation: float = 0.5, theta_halfwidth: float = 10.0,
) -> OverconfidenceReport:
    """Adversarial stopping against an objective-Bayes analyst.

    The data are gaussian with mean ``theta_star``; sampling stops at the
    first ``n`` with ``n (theta_hat - theta_star)^2 >= k_star``. With loss
    weight ``b = tau`` the flat-prior posterior risk of the MLE is exactly
    1, while the realised loss ``tau (theta_star - theta_hat)^2`` is at
    least ``k_star``. The half-dampened Savage-Dickey bound (prior
    N(0, 1/lam)) is checked for validity on the same stopped data over
    Θ° = theta_star +- theta_halfwidth.
    """
    model = Model("gaussian")
    rule = StoppingRule.lil(k_star, theta_star, n_max)
    smp = simulate_stopping(model, theta_star, rule, reps, seed)
    trunc = float(np.mean(smp.truncated))
    if trunc > max_truncation:
        raise ExperimentAborted(
            f"{trunc:.1%} of replications hit n_max={n_max} (limit {max_truncation:.0%}); raise n_max or lower k_star"
        )
    tau = smp.tau.astype(float)
    theta_hat = smp.s / tau
    believed = objective_bayes_assessment(tau, theta_hat, theta_hat, weight=tau)
    actual = tau * (theta_star - theta_hat) ** 2
    stopped = ~smp.truncated
    act_mean, act_se = _mean_se(actual[stopped]) if stopped.any() else (math.nan, math.nan)
    coll = Dampened(SavageDickey(model, GaussianPrior(0.0, lam)), 0.5)
    loss = Loss.squared_error(weight=lambda n, s, u=None: n)
    theta_set = Interval(theta_star - theta_halfwidth, theta_star + theta_halfwidth)
    sup, _ = sup_risk_batch(coll, loss, tau, smp.s, theta_hat, theta_set, **MC_GRID)
    r = ratio(tau * (theta_star - theta_hat) ** 2, tau * sup)
    v_mean, v_se = _mean_se(r)
    return OverconfidenceReport(
        k_star=k_star, theta_star=theta_star, lam=lam, n_max=n_max, reps=reps, seed=seed,
        truncated_fraction=trunc, believed_risk_min=float(believed.min()), believed_risk_max=float(believed.max()),
        actual_risk_mean=act_mean, actual_risk_se=act_se,
        fraction_actual_at_least_k=float(np.mean(actual[stopped] >= k_star * (1 - 1e-12))) if stopped.any() else math.nan,
        validity_mean=v_mean, validity_se=v_se, validity_passed=bool(v_mean <= 1 + 3 * v_se),
        mean_tau=float(np.mean(tau)),
    )


@dataclass(frozen=True)
class CoverageReport:
    kind: str
    theta: float
    n: int
    alpha: float
    reps: int
    coverage: float
    se: float
    passed: bool
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)


def coverage_check(coll: ECollection, alpha: float, theta, n: int, reps: int, seed: int) -> CoverageReport:
    """Frequency of ``P(theta | Y) >= alpha``; pass iff at least ``1 - alpha - 3 SE``."""
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    s = sample_suffstats(coll.space, theta, n, reps, seed)
    covered = coll.eposterior_at(theta, n, s) >= alpha
    cov = float(np.mean(covered))
    se = math.sqrt(max(cov * (1 - cov), 1e-300) / reps)
    return CoverageReport(coll.kind, float(theta), int(n), alpha, reps, cov, se, bool(cov >= 1 - alpha - 3 * se), seed)


# report writers -------------------------------------------------------------------


def provenance(cfg_hash: str, seed) -> str:
    return f"# config={cfg_hash} seed={seed} version={__version__}\n"


def rows_to_csv(rows: Sequence[dict], fields: Sequence[str], header: str = "") -> str:
    buf = io.StringIO()
    buf.write(header)
    w = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: row[k] for k in fields})
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return _jsonable(obj.item())
    return obj


def to_json(payload: dict) -> str:
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"
