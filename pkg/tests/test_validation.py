import math

import numpy as np
import pytest

from eposterior.decision import Interval, Loss, sup_risk_batch
from eposterior.ecollections import SavageDickey, Trivial, TwoPoint, likelihood_ratio
from eposterior.errors import ConfigurationError, DomainError, ExperimentAborted
from eposterior.models import GaussianPrior, Model, SimpleTest
from eposterior.validation import (
    ConstantRule,
    MinimaxRule,
    MLERule,
    BookieGame,
    StoppingRule,
    bookie_game_run,
    coverage_check,
    optional_stopping_check,
    overconfidence_experiment,
    ratio,
    rows_to_csv,
    sample_suffstats,
    simulate_stopping,
    to_json,
    validity_check,
    ValidityReport,
)

GAUSS = Model("gaussian")


class TestRatio:
    def test_conventions(self):
        got = ratio([0.0, 1.0, 2.0, 3.0], [0.0, math.inf, 4.0, 0.0])
        assert got.tolist() == [0.0, 0.0, 0.5, math.inf]


class TestSampling:
    def test_reproducible(self):
        a = sample_suffstats(GAUSS, 0.3, 10, 20_000, 5)
        b = sample_suffstats(GAUSS, 0.3, 10, 20_000, 5)
        assert np.array_equal(a, b)

    def test_block_streams_differ(self):
        a = sample_suffstats(GAUSS, 0.0, 1, 16_384, 5)
        assert not np.array_equal(a[:8192], a[8192:])

    def test_moments(self):
        s = sample_suffstats(Model("poisson"), 2.0, 5, 50_000, 1)
        assert s.mean() == pytest.approx(10.0, abs=0.1)


class TestValidity:
    def test_trivial_strictly_below_one(self):
        rep = validity_check(Trivial(GAUSS), Loss.squared_error(), MLERule(), 0.0, 10, 100_000, 2, Interval(-3, 3))
        assert rep.mean <= 1.0 and rep.passed

    def test_two_point(self):
        rep = validity_check(TwoPoint(GAUSS, 1.0, 10), Loss.squared_error(), MLERule(), 0.0, 10, 100_000, 3, Interval(-3, 3))
        assert rep.passed

    def test_zero_loss_gives_zero(self):
        rep = validity_check(TwoPoint(GAUSS, 1.0, 10), Loss.squared_error(weight=0.0), MLERule(), 0.0, 10, 1000, 3, Interval(-3, 3))
        assert rep.mean == 0.0

    def test_minimax_rule_interpolation_is_close(self):
        coll = SavageDickey(GAUSS, GaussianPrior(0.0, 1.0))
        rule = MinimaxRule(coll, Loss.squared_error(), Interval(-2, 2))
        s = np.array([-10.0, 3.0, 17.5])
        a = rule.actions(25, s)
        from eposterior.decision import minimax_action
        from eposterior.models import Dataset

        for si, ai in zip(s, a):
            exact, _ = minimax_action(coll, Loss.squared_error(), Dataset.from_summary(GAUSS, 25, si / 25), Interval(-2, 2))
            assert ai == pytest.approx(exact, abs=5e-3)

    def test_fixed_suboptimal_rule(self):
        # validity holds for any rule, not only the minimax one
        rep = validity_check(TwoPoint(GAUSS, 1.0, 10), Loss.squared_error(), ConstantRule(1.5), 0.0, 10, 20_000, 4, Interval(-3, 3))
        assert rep.passed

    def test_needs_two_reps(self):
        with pytest.raises(DomainError):
            validity_check(Trivial(GAUSS), Loss.squared_error(), MLERule(), 0.0, 10, 1, 0, Interval(-1, 1))

    def test_csv_row(self):
        rep = validity_check(Trivial(GAUSS), Loss.squared_error(), MLERule(), 0.0, 10, 100, 2, Interval(-3, 3))
        text = rows_to_csv([rep.to_row()], ValidityReport.CSV_FIELDS, "# x\n")
        assert text.splitlines()[1].startswith("label,kind,theta")
        assert len(text.splitlines()) == 3


class TestBookie:
    coll = TwoPoint(GAUSS, 1.0, 10)
    theta_set = Interval(-3, 3)

    def test_compliant(self):
        out = bookie_game_run(BookieGame(), self.coll, Loss.squared_error(), MLERule(), 0.0, 10, 100_000, 6, self.theta_set)
        assert out.nonnegative
        assert out.max_stake_times_bound <= 1.0 + 1e-12

    def test_zero_stake_pays_ell(self):
        game = BookieGame(stake=2.5, offer=lambda n, s, u: 0.0 * u)
        out = bookie_game_run(game, self.coll, Loss.squared_error(), MLERule(), 0.0, 10, 1000, 6, self.theta_set)
        assert out.mean_payoff == 2.5 and out.se == 0.0

    def test_defiant_loses(self):
        # truth placed at the risk argmax for the typical data set
        n = 10
        v, t = sup_risk_batch(self.coll, Loss.squared_error(), n, np.array([0.0]), np.array([0.0]), self.theta_set)
        game = BookieGame(mode="defiant", c=10.0)
        out = bookie_game_run(game, self.coll, Loss.squared_error(), MLERule(), float(t[0]), n, 100_000, 7, self.theta_set)
        assert out.mean_payoff < -3 * out.se

    def test_bad_mode(self):
        with pytest.raises(ConfigurationError):
            BookieGame(mode="greedy")


class TestStopping:
    def test_fixed_matches_batch(self):
        smp = simulate_stopping(GAUSS, 0.0, StoppingRule.fixed(7), 100, 3)
        assert np.all(smp.tau == 7) and not smp.truncated.any()

    def test_two_point_threshold_stopping(self):
        rep = optional_stopping_check(TwoPoint(GAUSS, 1.0, 100), StoppingRule.threshold(20.0, 10_000), 0.0, 2000, 8)
        assert rep.passed

    def test_ville_bound_for_lr(self):
        coll = likelihood_ratio(SimpleTest(GAUSS, 0.0, 0.5))
        rep = optional_stopping_check(coll, StoppingRule.threshold(20.0, 2000), 0, 2000, 9)
        # under hypothesis 0, S_0 = p1/p0 reaches 20 with probability at most 1/20
        assert rep.hit_fraction <= 1 / 20 + 3 * math.sqrt(0.05 * 0.95 / 2000)

    def test_lil_stops_above_k(self):
        rule = StoppingRule.lil(3.0, 0.0, 5000)
        smp = simulate_stopping(GAUSS, 0.0, rule, 200, 4)
        stopped = ~smp.truncated
        assert np.all(smp.s[stopped] ** 2 >= 3.0 * smp.tau[stopped] - 1e-9)


class TestOverconfidence:
    def test_actual_risk_grows_with_k(self):
        lo = overconfidence_experiment(2.0, n_max=20_000, reps=300, seed=1, max_truncation=1.0)
        hi = overconfidence_experiment(6.0, n_max=20_000, reps=300, seed=1, max_truncation=1.0)
        assert hi.actual_risk_mean > lo.actual_risk_mean
        assert lo.actual_risk_mean >= 2.0 and hi.actual_risk_mean >= 6.0

    def test_believed_risk_is_one(self):
        rep = overconfidence_experiment(3.0, n_max=20_000, reps=100, seed=2)
        assert rep.believed_risk_min == pytest.approx(1.0, abs=1e-12)
        assert rep.believed_risk_max == pytest.approx(1.0, abs=1e-12)

    def test_abort_on_truncation(self):
        with pytest.raises(ExperimentAborted):
            overconfidence_experiment(20.0, n_max=100, reps=50, seed=3)


class TestCoverage:
    def test_trivial_full_coverage(self):
        rep = coverage_check(Trivial(GAUSS), 0.999, 0.0, 10, 1000, 0)
        assert rep.coverage == 1.0

    def test_sd(self):
        rep = coverage_check(SavageDickey(GAUSS, GaussianPrior(0.0, 1.0)), 0.05, 0.0, 100, 10_000, 1)
        assert rep.passed


class TestJson:
    def test_infinities(self):
        assert '"inf"' in to_json({"x": math.inf})
