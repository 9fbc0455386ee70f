"""E-variable collections ``theta -> S_theta`` and the e-posteriors they induce.

Every collection evaluates ``log S_theta(y)`` from the sample size ``n``
and the sufficient statistic ``s``, broadcasting over arrays so the same
code serves single evaluations, parameter grids and Monte-Carlo batches.
``log S = -inf`` encodes ``S = 0`` (e-posterior ``+inf``) and
``log S = +inf`` encodes an infinite e-value (e-posterior ``0``).
"""

from __future__ import annotations

import math
import struct
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import norm

from ._numerics import bisect_increasing
from .errors import ConfigurationError, DomainError, NumericError
from .models import (
    BetaPrior,
    Dataset,
    DiscretePrior,
    GaussianPrior,
    Model,
    SimpleTest,
)

LOG_HALF = math.log(0.5)


def eposterior_from_log(log_s):
    """``1/S`` with ``1/0 = inf`` and ``1/inf = 0``."""
    with np.errstate(over="ignore"):
        return np.exp(-np.asarray(log_s, dtype=float))


def _check_data(space, data: Dataset):
    if space.family != data.family:
        raise ConfigurationError(f"dataset family {data.family!r} does not match collection family {space.family!r}")


def _theta_bits(theta: float) -> int:
    return struct.unpack("<Q", struct.pack("<d", float(theta)))[0]


class ECollection(ABC):
    """Base class; subclasses implement :meth:`log_evalue`."""

    kind: str = "abstract"
    is_e_process: bool = False

    def __init__(self, space):
        self.space = space

    @property
    def family(self) -> str:
        return self.space.family

    @abstractmethod
    def log_evalue(self, theta, n, s):
        """``log S_theta(y)`` for data of size ``n`` with sufficient statistic ``s``."""

    def evalue_at(self, theta, n, s):
        with np.errstate(over="ignore"):
            return np.exp(self.log_evalue(theta, n, s))

    def eposterior_at(self, theta, n, s):
        return eposterior_from_log(self.log_evalue(theta, n, s))

    def evalue(self, theta: float, data: Dataset) -> float:
        _check_data(self.space, data)
        self.space.check(theta)
        return float(self.evalue_at(theta, data.n, data.total))

    def to_config(self) -> dict:
        raise ConfigurationError(f"collection kind {self.kind!r} is not serialisable")

    def __repr__(self) -> str:
        return f"{type(self).__name__}(kind={self.kind!r})"


class Trivial(ECollection):
    kind = "trivial"
    is_e_process = True

    def log_evalue(self, theta, n, s):
        return np.zeros(np.broadcast_shapes(np.shape(theta), np.shape(n), np.shape(s)))

    def to_config(self):
        return {"kind": self.kind, **_space_config(self.space)}


class SavageDickey(ECollection):
    """``S_theta = p_W(y) / p_theta(y)`` for a fixed prior ``W``."""

    kind = "savage-dickey"
    is_e_process = True

    def __init__(self, model: Model, prior):
        super().__init__(model)
        if not isinstance(prior, (DiscretePrior, GaussianPrior, BetaPrior)):
            raise ConfigurationError(f"unsupported prior {prior!r}")
        prior.check(model)
        self.prior = prior

    def log_evalue(self, theta, n, s):
        return self.prior.log_marginal_ratio(self.space, theta, n, s)

    def to_config(self):
        return {"kind": self.kind, **_space_config(self.space), **_prior_config(self.prior)}


def theta_pm_array(model: Model, theta, C: float, n_star: float):
    """Vectorised ``(theta_minus, theta_plus)`` with ``D(theta || theta_pm) = C / n_star``."""
    if not (C > 0 and n_star > 0):
        raise DomainError("two-point prior needs C > 0 and n_star > 0")
    theta = model.check(theta)
    c = C / n_star
    if model.family == "gaussian":
        r = math.sqrt(2.0 * c)
        return theta - r, theta + r
    return _side_root(model, theta, c, -1), _side_root(model, theta, c, +1)


def _side_root(model: Model, theta, c: float, side: int):
    theta = np.asarray(theta, dtype=float)
    bound = model.upper if side > 0 else model.lower
    if math.isfinite(bound):
        span = (bound - theta) if side > 0 else (theta - bound)

        def point(u):
            return theta + side * span * u

        hi = np.ones_like(theta)
    else:
        scale = np.maximum(np.abs(theta), 1.0)

        def point(u):
            return theta + side * scale * u

        hi = np.ones_like(theta)
        for _ in range(200):
            short = model.kl(theta, point(hi)) <= c
            if not np.any(short):
                break
            hi = np.where(short, 2.0 * hi, hi)
        else:
            raise NumericError("could not bracket two-point root")

    def f(u):
        with np.errstate(divide="ignore", invalid="ignore"):
            val = model.kl(theta, point(u)) - c
        # the finite-boundary endpoint has infinite divergence
        return np.where(np.isnan(val), np.inf, val)

    u = bisect_increasing(f, np.zeros_like(theta), hi, iters=200)
    return point(u)


def theta_pm(model: Model, theta: float, C: float, n_star: float):
    lo, hi = theta_pm_array(model, theta, C, n_star)
    return float(lo), float(hi)


class TwoPoint(ECollection):
    """Generalised Savage-Dickey with prior ``(delta_{theta-} + delta_{theta+}) / 2``."""

    kind = "generalized-sd-two-point"
    is_e_process = True

    def __init__(self, model: Model, C: float = 1.0, n_star: float = 100):
        super().__init__(model)
        if not (C > 0 and n_star > 0):
            raise DomainError("two-point prior needs C > 0 and n_star > 0")
        self.C = float(C)
        self.n_star = n_star

    def log_evalue(self, theta, n, s):
        if self.space.family == "gaussian":
            # log cosh(r (s - n theta)) - n r^2 / 2 with r = sqrt(2 C / n*)
            theta = self.space.check(theta)
            r = math.sqrt(2.0 * self.C / self.n_star)
            x = np.abs(r * (np.asarray(s, dtype=float) - np.asarray(n, dtype=float) * theta))
            return x + np.log1p(np.exp(-2.0 * x)) + LOG_HALF - 0.5 * np.asarray(n, dtype=float) * r * r
        lo, hi = theta_pm_array(self.space, theta, self.C, self.n_star)
        k = self.space.kernel
        return LOG_HALF + np.logaddexp(k(lo, n, s), k(hi, n, s)) - k(theta, n, s)

    def to_config(self):
        return {"kind": self.kind, **_space_config(self.space), "C": repr(self.C), "n_star": repr(self.n_star)}


class SimpleVsSimple(ECollection):
    """Testing collection ``S_j = ((1 - w_j) p_0 + w_j p_1) / p_j`` over hypotheses ``j in {0, 1}``.

    ``w_j`` is the mass the prior for hypothesis ``j`` places on hypothesis 1.
    ``w0 = 1, w1 = 0`` gives the likelihood-ratio pair ``S_0 = p_1/p_0``,
    ``S_1 = p_0/p_1``; ``w0 = w1`` gives pure Savage-Dickey.
    """

    is_e_process = True

    def __init__(self, test: SimpleTest, w0: float, w1: float):
        super().__init__(test)
        if not (0.0 <= w0 <= 1.0 and 0.0 <= w1 <= 1.0):
            raise DomainError("testing prior weights must lie in [0, 1]")
        self.w0, self.w1 = float(w0), float(w1)
        if (self.w0, self.w1) == (1.0, 0.0):
            self.kind = "likelihood-ratio"
        elif self.w0 == self.w1:
            self.kind = "savage-dickey"
        else:
            self.kind = "generalized-sd"

    def log_evalue(self, index, n, s):
        idx = np.asarray(self.space.check(index))
        test = self.space
        k0 = test.model.kernel(test.theta0, n, s)
        k1 = test.model.kernel(test.theta1, n, s)
        w = np.where(idx == 0, self.w0, self.w1)
        with np.errstate(divide="ignore"):
            mix = np.logaddexp(np.log1p(-w) + k0, np.log(w) + k1)
        return mix - np.where(idx == 0, k0, k1)

    def to_config(self):
        return {"kind": "simple-vs-simple", **_space_config(self.space), "w0": repr(self.w0), "w1": repr(self.w1)}


def likelihood_ratio(test: SimpleTest) -> SimpleVsSimple:
    return SimpleVsSimple(test, 1.0, 0.0)


class BBW(ECollection):
    """Conditional-error e-variables with split point ``y*`` (gaussian pairs only).

    The observation is the sample mean ``y = s / n``; ``y*`` depends on
    ``n`` and is cached per sample size.
    """

    kind = "bbw"
    is_e_process = False

    def __init__(self, test: SimpleTest, w: float = 0.5):
        super().__init__(test)
        if not (0.0 < w < 1.0):
            raise DomainError("BBW weight must lie in (0, 1)")
        if test.family != "gaussian" or not test.theta1 > test.theta0:
            raise ConfigurationError(
                "BBW needs a gaussian-location pair with theta1 > theta0 (likelihood ratio increasing in y)"
            )
        self.w = float(w)
        self._table = np.empty(0)  # index n -> y*(n); slot 0 unused

    def mixture_cdf(self, y, n=1):
        t = self.space
        rt = np.sqrt(n)
        return (1 - self.w) * norm.cdf(rt * (y - t.theta0)) + self.w * norm.cdf(rt * (y - t.theta1))

    def split_point(self, n=1):
        """``y*`` for sample size ``n`` (scalar or integer array)."""
        n_arr = np.asarray(n)
        top = int(np.max(n_arr))
        if top > self._table.size - 1:
            ns = np.arange(self._table.size, top + 1, dtype=float)
            ns = ns[ns >= 1]
            t = self.space
            pad = 40.0 / np.sqrt(ns)
            roots = bisect_increasing(
                lambda y: self.mixture_cdf(y, ns) - self.w, t.theta0 - pad, t.theta1 + pad, iters=200
            )
            self._table = np.concatenate([self._table if self._table.size else np.array([np.nan]), roots])
        out = self._table[n_arr.astype(int)]
        return float(out) if n_arr.ndim == 0 else out

    @property
    def y_star(self) -> float:
        return self.split_point(1)

    def decision(self, n, s):
        """The BBW rule: reject hypothesis 0 (action 1) iff ``y >= y*``."""
        y = np.asarray(s, dtype=float) / np.asarray(n, dtype=float)
        ys = self.split_point(n)
        # bisection leaves y* within a few ulps; absorb that so y == y* is decided consistently
        return (y >= ys - 1e-12 * np.maximum(1.0, np.abs(ys))).astype(int)

    def conditional_errors(self, n, s):
        """``((1-w)p_0 / mix, w p_1 / mix)`` at the observed data."""
        llr = self.space.log_lr(n, s)
        odds = math.log(self.w / (1 - self.w)) + llr
        return 1.0 / (1.0 + np.exp(odds)), 1.0 / (1.0 + np.exp(-odds))

    def log_evalue(self, index, n, s):
        idx = np.asarray(self.space.check(index))
        llr = self.space.log_lr(n, s)
        odds = math.log(self.w / (1 - self.w)) + llr  # log w p1 / ((1-w) p0)
        upper = self.decision(n, s) == 1
        log_s0 = np.logaddexp(0.0, odds)
        log_s1 = np.logaddexp(0.0, -odds)
        return np.where(idx == 0, np.where(upper, log_s0, -np.inf), np.where(upper, -np.inf, log_s1))

    def partition(self, alpha, n=1):
        """``(y_plus, y_minus)`` with conditional errors equal to ``alpha`` on each side of ``y*``.

        ``y_plus >= y*`` solves ``(1-w)p_0/mix = alpha`` and ``y_minus <= y*``
        solves ``w p_1/mix = alpha``; alpha must not exceed the conditional
        error attained at ``y*`` itself.
        """
        alpha = np.asarray(alpha, dtype=float)
        t = self.space
        ys = self.split_point(n)
        a0, a1 = self.conditional_errors(n, n * ys)
        if np.any(alpha <= 0) or np.any(alpha > min(a0, a1) + 1e-12):
            raise DomainError("alpha outside the range reachable by the BBW partition")
        # log p1/p0 is linear in y for gaussian pairs: n (t1 - t0) y - n (t1^2 - t0^2) / 2
        slope = n * (t.theta1 - t.theta0)
        intercept = -0.5 * n * (t.theta1**2 - t.theta0**2)
        lw = math.log(self.w / (1 - self.w))
        # (1-w)p0/mix = alpha  <=>  log odds = log((1-alpha)/alpha)
        target = np.log1p(-alpha) - np.log(alpha)
        y_plus = (target - lw - intercept) / slope
        y_minus = (-target - lw - intercept) / slope
        # rounding at alpha equal to the error at y* must not cross the split
        y_plus = np.maximum(y_plus, ys)
        y_minus = np.minimum(y_minus, ys)
        return y_plus, y_minus

    def to_config(self):
        return {"kind": self.kind, **_space_config(self.space), "w": repr(self.w)}


@dataclass(frozen=True)
class VovkEstimator:
    """Confidence set ``CI(y)`` with data-dependent level ``alpha_hat(y)``.

    ``covers(theta, n, s)`` returns whether ``theta`` lies in ``CI(y)``;
    ``level(n, s)`` returns ``alpha_hat(y)`` in ``[0, 1]``.
    """

    covers: Callable
    level: Callable

    @classmethod
    def whole_space(cls):
        return cls(lambda theta, n, s: np.ones(np.broadcast(theta, s).shape, dtype=bool), lambda n, s: np.ones_like(np.asarray(s, dtype=float)))


class VovkAdapter(ECollection):
    """``S_theta = 1{theta not in CI(y)} / alpha_hat(y)``; ``alpha_hat = 0`` gives ``inf``."""

    kind = "vovk-adapter"
    is_e_process = False

    def __init__(self, space, estimator: VovkEstimator, source: Optional[ECollection] = None):
        super().__init__(space)
        self.estimator = estimator
        self.source = source

    def log_evalue(self, theta, n, s):
        theta = self.space.check(theta)
        inside = np.asarray(self.estimator.covers(theta, n, s), dtype=bool)
        lvl = np.asarray(self.estimator.level(n, s), dtype=float)
        if np.any((lvl < 0) | (lvl > 1)):
            raise DomainError("Vovk level alpha_hat must lie in [0, 1]")
        with np.errstate(divide="ignore"):
            out = -np.log(lvl)
        return np.where(inside, -np.inf, out)

    def to_config(self):
        if isinstance(self.source, BBW):
            return {**self.source.to_config(), "kind": "bbw-vovk"}
        return super().to_config()


def bbw_as_vovk(coll: BBW) -> VovkAdapter:
    """BBW recast as a Vovk estimator: ``CI(y) = {delta_BBW(y)}``, level = conditional error."""

    def covers(index, n, s):
        return np.asarray(index) == coll.decision(n, s)

    def level(n, s):
        e0, e1 = coll.conditional_errors(n, s)
        return np.where(coll.decision(n, s) == 1, e0, e1)

    return VovkAdapter(coll.space, VovkEstimator(covers, level), source=coll)


class Dampened(ECollection):
    """``S^[gamma] = (1 - gamma) + gamma * S``."""

    kind = "dampened"

    def __init__(self, inner: ECollection, gamma: float = 0.5):
        super().__init__(inner.space)
        if not (0.0 < gamma <= 1.0):
            raise DomainError(f"dampening gamma must lie in (0, 1], got {gamma!r}")
        self.inner = inner
        self.gamma = float(gamma)
        self.is_e_process = inner.is_e_process

    def log_evalue(self, theta, n, s):
        inner = self.inner.log_evalue(theta, n, s)
        if self.gamma == 1.0:
            return inner
        return np.logaddexp(math.log1p(-self.gamma), math.log(self.gamma) + inner)

    def to_config(self):
        return {"kind": self.kind, "gamma": repr(self.gamma), **_prefixed(self.inner.to_config(), "inner.")}


class Circle(ECollection):
    """``S° = max(1, S) / 2``; dominated by the half-dampened version, so it keeps the e-process flag."""

    kind = "circle-modified"

    def __init__(self, inner: ECollection):
        super().__init__(inner.space)
        self.inner = inner
        self.is_e_process = inner.is_e_process

    def log_evalue(self, theta, n, s):
        return LOG_HALF + np.maximum(0.0, self.inner.log_evalue(theta, n, s))

    def to_config(self):
        return {"kind": self.kind, **_prefixed(self.inner.to_config(), "inner.")}


class Star(ECollection):
    """``S* = max(S, 1) / E_theta[max(S, 1)]`` with Monte-Carlo normaliser.

    The normaliser is estimated once per ``(theta, n)`` from ``reps`` fresh
    samples drawn with a stream derived from ``seed``, then frozen.
    """

    kind = "star-modified"
    is_e_process = False

    def __init__(self, inner: ECollection, seed: int = 0, reps: int = 1_000_000):
        super().__init__(inner.space)
        self.inner = inner
        self.seed = int(seed)
        self.reps = int(reps)
        self._norm: dict = {}

    def normaliser(self, theta: float, n: int) -> float:
        key = (float(theta), int(n))
        if key not in self._norm:
            rng = np.random.default_rng([self.seed, int(n), _theta_bits(theta)])
            param = self.space.param(theta) if isinstance(self.space, SimpleTest) else theta
            model = self.space.model if isinstance(self.space, SimpleTest) else self.space
            s = model.sample_suffstat(param, int(n), rng, size=self.reps)
            vals = np.maximum(self.inner.evalue_at(theta, n, s), 1.0)
            self._norm[key] = float(np.mean(vals))
        return self._norm[key]

    def log_evalue(self, theta, n, s):
        theta_b, n_b, s_b = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(n), np.asarray(s, dtype=float))
        logz = np.empty(theta_b.shape)
        for key in set(zip(theta_b.ravel().tolist(), n_b.ravel().tolist())):
            mask = (theta_b == key[0]) & (n_b == key[1])
            logz[mask] = math.log(self.normaliser(*key))
        return np.maximum(0.0, self.inner.log_evalue(theta_b, n_b, s_b)) - logz

    def to_config(self):
        return {
            "kind": self.kind,
            "seed": str(self.seed),
            "reps": str(self.reps),
            **_prefixed(self.inner.to_config(), "inner."),
        }


# functional interface ------------------------------------------------------


@dataclass(frozen=True)
class EPosteriorValue:
    """``value = 1/S`` in ``[0, inf]`` and ``capped = min(1, value)``."""

    value: float
    capped: float

    @property
    def infinite(self) -> bool:
        return math.isinf(self.value)


def eposterior(coll: ECollection, theta: float, data: Dataset) -> EPosteriorValue:
    _check_data(coll.space, data)
    coll.space.check(theta)
    v = float(coll.eposterior_at(theta, data.n, data.total))
    return EPosteriorValue(v, min(1.0, v))


def sd_evariable(model: Model, prior, theta: float, data: Dataset) -> float:
    return SavageDickey(model, prior).evalue(theta, data)


def two_point_evariable(model: Model, theta: float, C: float, n_star: float, data: Dataset) -> float:
    return TwoPoint(model, C, n_star).evalue(theta, data)


def lr_evariable(test: SimpleTest, which: int, data: Dataset) -> float:
    """``S_0 = p_1/p_0`` and ``S_1 = p_0/p_1``."""
    return likelihood_ratio(test).evalue(which, data)


def bbw_build(test: SimpleTest, w: float = 0.5) -> BBW:
    return BBW(test, w)


def vovk_evariable(est: VovkEstimator, theta, data: Dataset, space=None) -> float:
    space = space if space is not None else Model(data.family)
    return VovkAdapter(space, est).evalue(theta, data)


def dampen(inner: ECollection, gamma: float) -> Dampened:
    return Dampened(inner, gamma)


def star_modify(inner: ECollection, seed: int = 0, reps: int = 1_000_000) -> Star:
    return Star(inner, seed, reps)


def circle_modify(inner: ECollection) -> Circle:
    return Circle(inner)


@dataclass(frozen=True)
class ProductResult:
    value: float
    is_e_process: bool


def product(collections: Sequence[ECollection], datasets: Sequence[Dataset], theta) -> ProductResult:
    """Multiply per-study e-values for the same ``theta`` (optional continuation)."""
    if len(collections) != len(datasets) or not collections:
        raise ConfigurationError("product needs one dataset per collection")
    thetas = list(theta) if np.ndim(theta) else [theta] * len(collections)
    if len(thetas) != len(collections) or any(t != thetas[0] for t in thetas):
        raise ConfigurationError("all factors of a product must be evaluated at the same theta")
    log_total = 0.0
    for coll, data in zip(collections, datasets):
        _check_data(coll.space, data)
        log_total += float(coll.log_evalue(thetas[0], data.n, data.total))
    with np.errstate(over="ignore"):
        value = float(np.exp(log_total)) if not math.isnan(log_total) else 0.0
    return ProductResult(value, all(c.is_e_process for c in collections))


# config round trip -----------------------------------------------------------


def _prefixed(d: dict, prefix: str) -> dict:
    return {prefix + k: v for k, v in d.items()}


def _space_config(space) -> dict:
    if isinstance(space, SimpleTest):
        return {"family": space.family, "theta0": repr(float(space.theta0)), "theta1": repr(float(space.theta1))}
    return {"family": space.family}


def _prior_config(prior) -> dict:
    if isinstance(prior, GaussianPrior):
        return {"prior": "gaussian", "prior_mean": repr(prior.mean), "prior_precision": repr(prior.precision)}
    if isinstance(prior, BetaPrior):
        return {"prior": "beta", "prior_a": repr(prior.a), "prior_b": repr(prior.b)}
    return {
        "prior": "discrete",
        "prior_points": ",".join(repr(p) for p in prior.points),
        "prior_weights": ",".join(repr(w) for w in prior.weights),
    }


def prior_from_config(cfg: dict):
    kind = cfg.get("prior", "gaussian")
    if kind == "gaussian":
        return GaussianPrior(float(cfg.get("prior_mean", 0.0)), float(cfg.get("prior_precision", 1.0)))
    if kind == "beta":
        return BetaPrior(float(cfg.get("prior_a", 1.0)), float(cfg.get("prior_b", 1.0)))
    if kind == "discrete":
        pts = [float(v) for v in cfg["prior_points"].split(",")]
        wts = [float(v) for v in cfg["prior_weights"].split(",")]
        return DiscretePrior(tuple(pts), tuple(wts))
    raise ConfigurationError(f"unknown prior kind {kind!r}")


def _space_from_config(cfg: dict):
    model = Model(cfg.get("family", "gaussian"))
    if "theta0" in cfg or "theta1" in cfg:
        return SimpleTest(model, float(cfg["theta0"]), float(cfg["theta1"]))
    return model


def collection_from_config(cfg: dict) -> ECollection:
    """Build a collection from flat string key-value pairs (see ``to_config``)."""
    try:
        kind = cfg["kind"]
    except KeyError:
        raise ConfigurationError("collection config needs a 'kind' key") from None
    if kind in ("dampened", "circle-modified", "star-modified"):
        inner_cfg = {k[len("inner."):]: v for k, v in cfg.items() if k.startswith("inner.")}
        inner = collection_from_config(inner_cfg)
        if kind == "dampened":
            return Dampened(inner, float(cfg.get("gamma", 0.5)))
        if kind == "circle-modified":
            return Circle(inner)
        return Star(inner, int(cfg.get("seed", 0)), int(cfg.get("reps", 1_000_000)))
    space = _space_from_config(cfg)
    if kind == "trivial":
        return Trivial(space)
    if kind == "savage-dickey" and isinstance(space, Model):
        return SavageDickey(space, prior_from_config(cfg))
    if kind in ("generalized-sd-two-point", "two-point"):
        return TwoPoint(space, float(cfg.get("C", 1.0)), float(cfg.get("n_star", 100)))
    if not isinstance(space, SimpleTest):
        raise ConfigurationError(f"collection kind {kind!r} needs theta0 and theta1")
    if kind == "likelihood-ratio":
        return likelihood_ratio(space)
    if kind in ("simple-vs-simple", "savage-dickey", "generalized-sd"):
        w0 = float(cfg.get("w0", cfg.get("w", 0.5)))
        return SimpleVsSimple(space, w0, float(cfg.get("w1", w0)))
    if kind == "bbw":
        return BBW(space, float(cfg.get("w", 0.5)))
    if kind == "bbw-vovk":
        return bbw_as_vovk(BBW(space, float(cfg.get("w", 0.5))))
    raise ConfigurationError(f"unknown collection kind {kind!r}")
