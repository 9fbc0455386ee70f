"""One-dimensional exponential families in mean-value parameterization.

Three families are supported: the unit-variance Gaussian location family,
Bernoulli and Poisson. All densities are handled through the sufficient
statistic ``s = sum(x)`` and the sample size ``n``; the log-likelihood is

    log p_theta(x^n) = sum_i log h(x_i) + beta(theta) * s - n * A(beta(theta))

where ``beta`` is the canonical map and ``A`` the cumulant function. Ratios
of densities (every e-variable in this package) only need the ``kernel``
term ``beta * s - n * A(beta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import betaln, gammaln, logsumexp

from .errors import BoundaryError, ConfigurationError, DataError, DomainError

FAMILIES = ("gaussian", "bernoulli", "poisson")
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Model:
    """A regular 1-D exponential family; gaussian variance is fixed to 1."""

    family: str = "gaussian"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown family {self.family!r}; expected one of {FAMILIES}")

    # domain -----------------------------------------------------------
    @property
    def lower(self) -> float:
        return -math.inf if self.family == "gaussian" else 0.0

    @property
    def upper(self) -> float:
        return 1.0 if self.family == "bernoulli" else math.inf

    def contains(self, theta):
        theta = np.asarray(theta, dtype=float)
        return (theta > self.lower) & (theta < self.upper) & np.isfinite(theta)

    def check(self, theta):
        """Return ``theta`` as an array, raising DomainError if any entry is outside Θ."""
        arr = np.asarray(theta, dtype=float)
        if not np.all(self.contains(arr)):
            raise DomainError(
                f"parameter outside ({self.lower}, {self.upper}) for {self.family}: {theta!r}"
            )
        return arr

    # exponential-family structure --------------------------------------
    def canonical(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.family == "gaussian":
            return theta
        if self.family == "bernoulli":
            return np.log(theta) - np.log1p(-theta)
        return np.log(theta)

    def cumulant(self, beta):
        beta = np.asarray(beta, dtype=float)
        if self.family == "gaussian":
            return 0.5 * beta**2
        if self.family == "bernoulli":
            return np.logaddexp(0.0, beta)
        return np.exp(beta)

    def variance(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.family == "gaussian":
            return np.ones_like(theta)
        if self.family == "bernoulli":
            return theta * (1.0 - theta)
        return theta

    def fisher_info(self, theta):
        # mean-value parameterization: I(theta) = 1 / Var_theta(X)
        return 1.0 / self.variance(theta)

    def kernel(self, theta, n, s):
        """``beta(theta) * s - n * A(beta(theta))``, broadcasting over all arguments.

        Written per family so that boundary-free evaluation stays accurate
        (no log(0) for bernoulli with s = 0 or s = n).
        """
        theta = np.asarray(theta, dtype=float)
        n = np.asarray(n, dtype=float)
        s = np.asarray(s, dtype=float)
        if self.family == "gaussian":
            return theta * s - 0.5 * n * theta**2
        if self.family == "bernoulli":
            with np.errstate(invalid="ignore"):
                a = np.where(s == 0, 0.0, s * np.log(theta))
                b = np.where(n - s == 0, 0.0, (n - s) * np.log1p(-theta))
            return a + b
        with np.errstate(invalid="ignore"):
            a = np.where(s == 0, 0.0, s * np.log(theta))
        return a - n * theta

    def log_base(self, x):
        """Per-observation carrier ``log h(x)``."""
        x = np.asarray(x, dtype=float)
        if self.family == "gaussian":
            return -0.5 * x**2 - 0.5 * _LOG_2PI
        if self.family == "bernoulli":
            return np.zeros_like(x)
        return -gammaln(x + 1.0)

    def kl(self, theta_from, theta_to):
        """Per-observation divergence D(theta_from || theta_to)."""
        p = np.asarray(theta_from, dtype=float)
        q = np.asarray(theta_to, dtype=float)
        if self.family == "gaussian":
            return 0.5 * (p - q) ** 2
        if self.family == "bernoulli":
            return p * (np.log(p) - np.log(q)) + (1.0 - p) * (np.log1p(-p) - np.log1p(-q))
        return p * (np.log(p) - np.log(q)) - p + q

    # data ---------------------------------------------------------------
    def validate_observations(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        if x.size == 0:
            raise DataError("dataset must contain at least one observation")
        if not np.all(np.isfinite(x)):
            raise DataError("observations must be finite")
        if self.family == "bernoulli" and not np.all((x == 0) | (x == 1)):
            raise DataError("bernoulli observations must be 0 or 1")
        if self.family == "poisson" and not np.all((x >= 0) & (x == np.floor(x))):
            raise DataError("poisson observations must be nonnegative integers")
        return x

    def sample_suffstat(self, theta, n, rng: np.random.Generator, size=None):
        """Draw the sufficient statistic ``sum(x_1..x_n)`` directly."""
        theta = np.asarray(theta, dtype=float)
        if self.family == "gaussian":
            n_arr = np.asarray(n, dtype=float)
            return rng.normal(n_arr * theta, np.sqrt(n_arr), size=size)
        if self.family == "bernoulli":
            return rng.binomial(n, theta, size=size).astype(float)
        return rng.poisson(np.asarray(n) * theta, size=size).astype(float)

    def sample_observations(self, theta, size, rng: np.random.Generator) -> np.ndarray:
        if self.family == "gaussian":
            return rng.normal(theta, 1.0, size=size)
        if self.family == "bernoulli":
            return rng.binomial(1, theta, size=size).astype(float)
        return rng.poisson(theta, size=size).astype(float)


@dataclass(frozen=True)
class SimpleTest:
    """Two simple hypotheses ``P_0 = P_{theta0}`` and ``P_1 = P_{theta1}`` within one model.

    Hypotheses are indexed by 0 and 1; this index set plays the role of Θ
    in testing problems.
    """

    model: Model
    theta0: float
    theta1: float

    def __post_init__(self):
        self.model.check([self.theta0, self.theta1])
        if self.theta0 == self.theta1:
            raise ConfigurationError("simple test needs two distinct hypotheses")

    @property
    def family(self) -> str:
        return self.model.family

    def param(self, index):
        index = np.asarray(index)
        if not np.all((index == 0) | (index == 1)):
            raise DomainError(f"hypothesis index must be 0 or 1, got {index!r}")
        return np.where(index == 0, self.theta0, self.theta1)

    def contains(self, index):
        index = np.asarray(index, dtype=float)
        return (index == 0) | (index == 1)

    def check(self, index):
        self.param(index)
        return np.asarray(index, dtype=float)

    def kernel(self, index, n, s):
        return self.model.kernel(self.param(index), n, s)

    def log_lr(self, n, s):
        """``log p_1(y) / p_0(y)``."""
        return self.model.kernel(self.theta1, n, s) - self.model.kernel(self.theta0, n, s)


@dataclass(frozen=True)
class Dataset:
    """Observations summarised by ``n`` and the sum of the sufficient statistic.

    ``tau`` records the realised stopping time when the data came from a
    sequential sampler.
    """

    family: str
    n: int
    total: float
    observations: Optional[tuple] = field(default=None, compare=False)
    tau: Optional[int] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown family {self.family!r}")
        if int(self.n) != self.n or self.n < 1:
            raise DataError(f"dataset size must be a positive integer, got {self.n!r}")
        if not math.isfinite(self.total):
            raise DataError("sufficient statistic must be finite")
        if self.observations is not None:
            if len(self.observations) != self.n:
                raise DataError("observation count does not match n")
            if not math.isclose(math.fsum(self.observations), self.total, rel_tol=1e-12, abs_tol=1e-9):
                raise DataError("stored sum does not match observations")

    @classmethod
    def from_observations(cls, model: Model, observations: Sequence[float], tau: Optional[int] = None):
        x = model.validate_observations(observations)
        return cls(model.family, int(x.size), math.fsum(x.tolist()), tuple(x.tolist()), tau)

    @classmethod
    def from_summary(cls, model: Model, n: int, mean: float, tau: Optional[int] = None):
        """Build from ``n`` and the sample mean (no individual observations)."""
        total = float(mean) * n
        if model.family == "bernoulli" and not (0 <= total <= n):
            raise DataError("bernoulli mean must lie in [0, 1]")
        if model.family == "poisson" and total < 0:
            raise DataError("poisson mean must be nonnegative")
        return cls(model.family, int(n), total, None, tau)

    @property
    def mean(self) -> float:
        return self.total / self.n

    def to_text(self) -> str:
        header = f"# family={self.family} n={self.n}"
        if self.observations is None:
            return header + f" sum={self.total!r}\n"
        return header + "\n" + "".join(f"{x!r}\n" for x in self.observations)

    @classmethod
    def from_text(cls, text: str) -> "Dataset":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("#"):
            raise DataError("dataset text must start with a '# family=<kind> n=<n>' header")
        meta = dict(tok.split("=", 1) for tok in lines[0][1:].split() if "=" in tok)
        try:
            model = Model(meta["family"])
            n = int(meta["n"])
        except KeyError as exc:
            raise DataError(f"dataset header missing {exc}") from None
        body = [float(ln) for ln in lines[1:] if not ln.startswith("#")]
        if body:
            data = cls.from_observations(model, body)
            if data.n != n:
                raise DataError(f"header says n={n} but {data.n} observations follow")
            return data
        if "sum" not in meta:
            raise DataError("dataset has neither observations nor a sum= summary")
        return cls(model.family, n, float(meta["sum"]))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path) -> "Dataset":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())


def _require_family(model, data: Dataset):
    if model.family != data.family:
        raise ConfigurationError(f"dataset family {data.family!r} does not match model {model.family!r}")


# priors ---------------------------------------------------------------------


@dataclass(frozen=True)
class DiscretePrior:
    """Finite-support prior ``sum_i w_i * delta_{theta_i}``."""

    points: tuple
    weights: tuple

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        wts = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)
        if len(pts) == 0 or len(pts) != len(wts):
            raise ConfigurationError("discrete prior needs matching, nonempty points and weights")
        if any(w <= 0 for w in wts) or abs(math.fsum(wts) - 1.0) > 1e-12:
            raise ConfigurationError("discrete prior weights must be positive and sum to 1")

    kind = "discrete"

    def check(self, space) -> None:
        if not np.all(space.contains(np.array(self.points))):
            raise ConfigurationError("discrete prior support must lie inside the parameter space")

    def log_marginal_ratio(self, space, theta, n, s):
        """``log p_W(y) / p_theta(y)``."""
        pts = np.array(self.points)
        logw = np.log(np.array(self.weights))
        theta = np.asarray(theta, dtype=float)
        s = np.asarray(s, dtype=float)
        shape = np.broadcast_shapes(theta.shape, s.shape, np.shape(n))
        k = space.kernel(pts.reshape((-1,) + (1,) * len(shape)), n, s)
        lm = logsumexp(k + logw.reshape((-1,) + (1,) * len(shape)), axis=0)
        return lm - space.kernel(theta, n, s)

    def posterior_weights(self, space, n, s) -> np.ndarray:
        k = space.kernel(np.array(self.points), n, s) + np.log(np.array(self.weights))
        return np.exp(k - logsumexp(k))


@dataclass(frozen=True)
class GaussianPrior:
    """Conjugate prior ``N(mean, 1/precision)`` for the gaussian location family."""

    mean: float = 0.0
    precision: float = 1.0

    kind = "gaussian"

    def __post_init__(self):
        if not (self.precision > 0 and math.isfinite(self.precision)):
            raise ConfigurationError("gaussian prior precision must be positive and finite")

    def check(self, space) -> None:
        if not (isinstance(space, Model) and space.family == "gaussian"):
            raise ConfigurationError("gaussian prior is only conjugate to the gaussian location family")

    def posterior(self, n, s):
        prec = self.precision + np.asarray(n, dtype=float)
        return (self.precision * self.mean + np.asarray(s, dtype=float)) / prec, prec

    def log_marginal_ratio(self, space, theta, n, s):
        # ratio of prior density to posterior density at theta
        theta = np.asarray(theta, dtype=float)
        mu, prec = self.posterior(n, s)
        lam = self.precision
        return (
            0.5 * np.log(lam / prec)
            - 0.5 * lam * (theta - self.mean) ** 2
            + 0.5 * prec * (theta - mu) ** 2
        )

    def posterior_mean_var(self, n, s):
        mu, prec = self.posterior(n, s)
        return mu, 1.0 / prec


@dataclass(frozen=True)
class BetaPrior:
    """Conjugate prior ``Beta(a, b)`` for the bernoulli family."""

    a: float = 1.0
    b: float = 1.0

    kind = "beta"

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ConfigurationError("beta prior shapes must be positive")

    def check(self, space) -> None:
        if not (isinstance(space, Model) and space.family == "bernoulli"):
            raise ConfigurationError("beta prior is only conjugate to the bernoulli family")

    def log_marginal_ratio(self, space, theta, n, s):
        n = np.asarray(n, dtype=float)
        s = np.asarray(s, dtype=float)
        return betaln(self.a + s, self.b + n - s) - betaln(self.a, self.b) - space.kernel(theta, n, s)

    def posterior_mean_var(self, n, s):
        a = self.a + np.asarray(s, dtype=float)
        b = self.b + np.asarray(n, dtype=float) - s
        m = a / (a + b)
        return m, m * (1 - m) / (a + b + 1)


# module-level operations ----------------------------------------------------


def log_density(model: Model, theta: float, data: Dataset) -> float:
    """Exact ``sum_i log p_theta(x_i)``; needs the individual observations."""
    model.check(theta)
    _require_family(model, data)
    if data.observations is None:
        raise DataError("log_density needs individual observations, not a summary")
    x = model.validate_observations(data.observations)
    return float(np.sum(model.log_base(x)) + model.kernel(theta, data.n, data.total))


def kl(model: Model, theta_from: float, theta_to: float) -> float:
    model.check([theta_from, theta_to])
    return float(model.kl(theta_from, theta_to))


def mle(model: Model, data: Dataset) -> float:
    _require_family(model, data)
    m = data.mean
    if not model.contains(m):
        raise BoundaryError(f"MLE {m!r} is not inside the open domain of the {model.family} family")
    return m


def fisher_info(model: Model, theta: float) -> float:
    model.check(theta)
    return float(model.fisher_info(theta))


def canonical(model: Model, theta: float) -> float:
    model.check(theta)
    return float(model.canonical(theta))


def sample(model: Model, theta: float, n: int, seed: int) -> Dataset:
    """Draw ``n`` i.i.d. observations; identical ``seed`` gives identical data."""
    model.check(theta)
    if int(n) != n or n < 1:
        raise DataError("n must be a positive integer")
    rng = np.random.default_rng(seed)
    x = model.sample_observations(theta, int(n), rng)
    return Dataset(model.family, int(n), math.fsum(x.tolist()), tuple(x.tolist()))
