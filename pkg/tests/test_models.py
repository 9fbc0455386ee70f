import math

import numpy as np
import pytest

from eposterior.errors import BoundaryError, ConfigurationError, DataError, DomainError
from eposterior.models import (
    BetaPrior,
    Dataset,
    DiscretePrior,
    GaussianPrior,
    Model,
    SimpleTest,
    canonical,
    fisher_info,
    kl,
    log_density,
    mle,
    sample,
)

FAMILIES = ("gaussian", "bernoulli", "poisson")


def data_of(family, xs):
    return Dataset.from_observations(Model(family), xs)


class TestLogDensity:
    def test_gaussian_mode(self):
        assert log_density(Model("gaussian"), 0.0, data_of("gaussian", [0.0])) == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-12)

    def test_fair_coin(self):
        assert log_density(Model("bernoulli"), 0.5, data_of("bernoulli", [1, 0, 1])) == pytest.approx(3 * math.log(0.5), abs=1e-12)

    def test_gaussian_offset(self):
        got = log_density(Model("gaussian"), 1.0, data_of("gaussian", [0.5]))
        assert got == pytest.approx(-0.5 * math.log(2 * math.pi) - 0.125, abs=1e-12)

    def test_poisson_matches_scipy(self):
        from scipy.stats import poisson

        xs = [0, 3, 1, 4]
        got = log_density(Model("poisson"), 1.7, data_of("poisson", xs))
        assert got == pytest.approx(poisson.logpmf(xs, 1.7).sum(), rel=1e-12)

    def test_theta_outside(self):
        with pytest.raises(DomainError):
            log_density(Model("bernoulli"), 1.2, data_of("bernoulli", [1]))

    def test_bad_bernoulli_data(self):
        with pytest.raises(DataError):
            data_of("bernoulli", [0, 2])


class TestKL:
    def test_gaussian(self):
        assert kl(Model("gaussian"), 1.0, 0.0) == pytest.approx(0.5)

    @pytest.mark.parametrize("family,theta", [("gaussian", 0.3), ("bernoulli", 0.3), ("poisson", 2.0)])
    def test_identity(self, family, theta):
        assert kl(Model(family), theta, theta) == pytest.approx(0.0, abs=1e-15)

    def test_bernoulli(self):
        assert kl(Model("bernoulli"), 0.5, 0.25) == pytest.approx(0.5 * math.log(2) + 0.5 * math.log(2 / 3), abs=1e-12)
        assert kl(Model("bernoulli"), 0.5, 0.25) == pytest.approx(0.143841, abs=1e-6)

    def test_outside(self):
        with pytest.raises(DomainError):
            kl(Model("poisson"), -1.0, 1.0)


class TestMLE:
    def test_constant_sample(self):
        assert mle(Model("gaussian"), data_of("gaussian", [1, 1, 1])) == 1.0

    def test_mean(self):
        assert mle(Model("gaussian"), data_of("gaussian", [0, 2])) == 1.0

    def test_boundary(self):
        with pytest.raises(BoundaryError):
            mle(Model("bernoulli"), data_of("bernoulli", [0, 0, 0]))


class TestFisherCanonical:
    def test_gaussian_unit(self):
        assert np.allclose(Model("gaussian").fisher_info(np.array([-3.0, 0.0, 5.0])), 1.0)

    def test_bernoulli_half(self):
        assert fisher_info(Model("bernoulli"), 0.5) == pytest.approx(4.0)

    def test_gaussian_canonical(self):
        assert canonical(Model("gaussian"), 0.7) == 0.7

    @pytest.mark.parametrize("family,theta", [("bernoulli", 0.3), ("poisson", 2.5)])
    def test_fisher_is_kl_curvature(self, family, theta):
        m, h = Model(family), 1e-4
        curv = 2 * float(m.kl(theta, theta + h)) / h**2
        assert curv == pytest.approx(fisher_info(m, theta), rel=1e-3)


class TestSampling:
    @pytest.mark.parametrize("family,theta", [("gaussian", 0.2), ("bernoulli", 0.3), ("poisson", 1.5)])
    def test_deterministic(self, family, theta):
        a = sample(Model(family), theta, 25, seed=11)
        b = sample(Model(family), theta, 25, seed=11)
        assert a == b

    def test_seed_changes_data(self):
        assert sample(Model("gaussian"), 0.0, 25, 1) != sample(Model("gaussian"), 0.0, 25, 2)


class TestDataset:
    def test_text_roundtrip(self, tmp_path):
        d = data_of("poisson", [1, 0, 4])
        path = tmp_path / "d.txt"
        d.save(path)
        back = Dataset.load(path)
        assert back.total == d.total and back.n == d.n and back.family == "poisson"

    def test_summary_roundtrip(self):
        d = Dataset.from_summary(Model("gaussian"), 50, 0.25)
        back = Dataset.from_text(d.to_text())
        assert back.mean == pytest.approx(0.25) and back.n == 50 and back.observations is None

    def test_empty(self):
        with pytest.raises((DataError, DomainError)):
            data_of("gaussian", [])


class TestPriors:
    def test_point_mass_has_unit_ratio(self):
        m = Model("bernoulli")
        pr = DiscretePrior((0.3,), (1.0,))
        assert float(pr.log_marginal_ratio(m, 0.3, 10, 4)) == pytest.approx(0.0, abs=1e-14)

    def test_weights_must_normalise(self):
        with pytest.raises(ConfigurationError):
            DiscretePrior((0.1, 0.2), (0.5, 0.6))

    def test_gaussian_prior_marginal_against_quadrature(self):
        from scipy.integrate import quad
        from scipy.stats import norm

        m, pr = Model("gaussian"), GaussianPrior(0.2, 2.0)
        xs = [0.4, -0.1, 1.3]
        data = data_of("gaussian", xs)
        marginal = quad(lambda t: norm.pdf(t, 0.2, 1 / math.sqrt(2.0)) * math.exp(log_density(m, t, data)), -10, 10)[0]
        want = math.log(marginal) - log_density(m, 0.5, data)
        assert float(pr.log_marginal_ratio(m, 0.5, data.n, data.total)) == pytest.approx(want, abs=1e-9)

    def test_beta_prior_marginal_against_quadrature(self):
        from scipy.integrate import quad
        from scipy.stats import beta

        m, pr = Model("bernoulli"), BetaPrior(2.0, 3.0)
        data = data_of("bernoulli", [1, 0, 1, 1])
        marginal = quad(lambda t: beta.pdf(t, 2, 3) * math.exp(log_density(m, t, data)), 0, 1)[0]
        want = math.log(marginal) - log_density(m, 0.4, data)
        assert float(pr.log_marginal_ratio(m, 0.4, data.n, data.total)) == pytest.approx(want, abs=1e-9)

    def test_gaussian_prior_needs_gaussian_family(self):
        with pytest.raises(ConfigurationError):
            GaussianPrior(0.0, 1.0).check(Model("poisson"))


class TestSimpleTest:
    def test_log_lr_gaussian(self):
        t = SimpleTest(Model("gaussian"), 0.0, 1.0)
        assert float(t.log_lr(1, 1.0)) == pytest.approx(0.5)

    def test_index_check(self):
        t = SimpleTest(Model("gaussian"), 0.0, 1.0)
        with pytest.raises(DomainError):
            t.check(2)
