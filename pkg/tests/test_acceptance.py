"""Acceptance criteria 1-10.

Each test prints a single ``PASS``/``FAIL`` line before asserting.
``python tests/test_acceptance.py`` runs them all without pytest and prints the same lines.
"""

import math
import sys
import time

import numpy as np
import pytest
from scipy.optimize import brentq
from scipy.stats import norm

from eposterior import decision
from eposterior.decision import (
    PRINTED_ARGMAX_EPOSTERIOR,
    PRINTED_H_XSTAR,
    PRINTED_SUPERBOUND_CONSTANT,
    PRINTED_XSTAR,
    Interval,
    Loss,
    bayes_assessment,
    constants,
    dampened_sd_bound,
    minimax_testing_actions,
    risk_bound,
    sup_risk_batch,
    threshold_rule,
    xstar,
)
from eposterior.ecollections import (
    BBW,
    Dampened,
    SavageDickey,
    SimpleVsSimple,
    TwoPoint,
    likelihood_ratio,
)
from eposterior.models import Dataset, DiscretePrior, GaussianPrior, Model, SimpleTest
from eposterior.validation import (
    acceptance_matrix,
    coverage_check,
    evalue_mean,
    overconfidence_experiment,
    stream,
)

GAUSS = Model("gaussian")
MATRIX_REPS = 100_000


def _line(number, ok, detail, elapsed):
    status = "PASS" if ok else "FAIL"
    return f"{status} criterion {number}: {detail} [{elapsed:.1f}s]"


def _emit(number, ok, detail, t0, capsys=None):
    line = _line(number, ok, detail, time.perf_counter() - t0)
    if capsys is not None:
        with capsys.disabled():
            print("\n" + line)
    else:
        print(line)
    return ok


# 1 ------------------------------------------------------------------------------


def criterion_1():
    x, h = xstar()
    c = constants()
    diffs = {
        "x*": (abs(x - PRINTED_XSTAR), 1e-9),
        "e*h(x*)": (abs(c.superbound_constant - PRINTED_SUPERBOUND_CONSTANT), 1e-7),
        "argmax P": (abs(c.argmax_eposterior - PRINTED_ARGMAX_EPOSTERIOR), 1e-7),
        "h(x*)": (abs(h - PRINTED_H_XSTAR), 1e-7),
    }
    bad = [k for k, (d, tol) in diffs.items() if not d <= tol]
    detail = ", ".join(f"{k} diff {d:.2e}" for k, (d, _) in diffs.items())
    if bad:
        detail += f"; out of tolerance: {', '.join(bad)}"
    return not bad, detail


# 2 ------------------------------------------------------------------------------


def criterion_2():
    x, _ = xstar()
    worst = [0.0, 0.0, 0.0]
    for n in (25, 100, 400):
        coll = TwoPoint(GAUSS, 1.0, n)
        theta_hat = 0.3
        data = Dataset.from_summary(GAUSS, n, theta_hat)
        rep = risk_bound(coll, Loss.squared_error(), data, theta_hat, Interval(theta_hat - 3, theta_hat + 3))
        worst[0] = max(worst[0], abs(rep.sup_value - 1.446729604 / n))
        worst[1] = max(worst[1], abs(abs(rep.argmax_theta - theta_hat) - x / math.sqrt(2 * n)))
        p = float(coll.eposterior_at(rep.argmax_theta, n, data.total))
        worst[2] = max(worst[2], abs(p - 0.6783206434))
    ok = all(w <= 1e-6 for w in worst)
    return ok, f"max |sup - 1.4467/n| {worst[0]:.1e}, argmax {worst[1]:.1e}, P at argmax {worst[2]:.1e}"


# 3 and 10 -----------------------------------------------------------------------


def _matrix(capped):
    reports = acceptance_matrix(reps=MATRIX_REPS, seed=20240, capped=capped)
    failed = [r for r in reports if not r.passed]
    worst = max(reports, key=lambda r: r.mean - 3 * r.se)
    detail = (
        f"{len(reports) - len(failed)}/{len(reports)} combinations pass at {MATRIX_REPS} reps; "
        f"largest mean {worst.mean:.4f} (se {worst.se:.4f}, {worst.kind}/{worst.loss}/{worst.rule})"
    )
    if failed:
        detail += "; failing: " + "; ".join(f"{r.kind}/{r.loss}/{r.rule}/theta={r.theta:g}/{r.mean:.4f}" for r in failed[:5])
    return not failed, detail


def criterion_3():
    return _matrix(capped=False)


def criterion_10():
    return _matrix(capped=True)


# 4 ------------------------------------------------------------------------------


def criterion_4():
    rep = overconfidence_experiment(k_star=5.0, theta_star=0.0, lam=1.0, n_max=1_000_000, reps=1000, seed=7)
    # tau * (1/tau) is 1 up to rounding
    believed = abs(rep.believed_risk_min - 1.0) <= 1e-12 and abs(rep.believed_risk_max - 1.0) <= 1e-12
    ok = believed and rep.fraction_actual_at_least_k >= 0.99 and rep.validity_passed
    return ok, (
        f"believed risk in [{rep.believed_risk_min:g}, {rep.believed_risk_max:g}], "
        f"actual >= k* on {rep.fraction_actual_at_least_k:.3f} of stopped reps, "
        f"truncated {rep.truncated_fraction:.3f}, validity {rep.validity_mean:.3f} (se {rep.validity_se:.3f})"
    )


# 5 ------------------------------------------------------------------------------


def criterion_5():
    lam = 1.0
    coll = Dampened(SavageDickey(GAUSS, GaussianPrior(0.0, lam)), 0.5)
    loss = Loss.kl_loss(GAUSS, 0.5)  # D(theta_hat || theta)
    violations, checked, gap = 0, 0, math.inf
    for k, n in enumerate((30, 100, 1000)):
        rng = stream(555, k)
        theta = rng.normal(0.0, 1.0 / math.sqrt(lam), size=100)
        s = rng.normal(n * theta, math.sqrt(n))
        for si in s:
            th = si / n
            b = dampened_sd_bound(n, lam, th)
            if b.exact_form > b.paper_form:
                violations += 1
            half = 40.0 / math.sqrt(n)
            v, _ = sup_risk_batch(coll, loss, n, np.array([si]), np.array([th]), Interval(th - half, th + half))
            sup = 0.5 * float(v[0])
            checked += 1
            gap = min(gap, b.paper_form - sup)
            if not sup <= b.paper_form:
                violations += 1
    return violations == 0, f"{checked} datasets, {violations} violations, smallest slack {gap:.3e}"


# 6 ------------------------------------------------------------------------------


def _testing_setup():
    test = SimpleTest(GAUSS, 0.0, 1.0)
    ys = np.linspace(-3.0, 4.0, 141)
    return test, ys


def criterion_6():
    test, ys = _testing_setup()
    results = {}
    c0_tables = [(0.0, 1.0, 1.0, 0.0), (0.0, 1.0, 4.0, 0.0), (0.0, 2.5, 0.3, 0.0)]

    # (a) pure SD with uniform weights versus twice the uniform-prior Bayes loss
    sd = SimpleVsSimple(test, 0.5, 0.5)
    uniform = DiscretePrior((0, 1), (0.5, 0.5))
    worst_a = 0.0
    for table in c0_tables:
        loss = Loss.wald_np(*table)
        for y in ys:
            data = Dataset.from_observations(GAUSS, [y])
            for a in (0, 1):
                r = risk_bound(sd, loss, data, a).sup_value
                b = bayes_assessment(test, uniform, loss, data, a)
                worst_a = max(worst_a, abs(r - 2 * b) / max(1.0, r))
    results["a"] = worst_a <= 1e-12

    # (b) LR bound in posterior-odds form
    lr = likelihood_ratio(test)
    worst_b = 0.0
    for table in c0_tables:
        loss = Loss.wald_np(*table)
        for y in ys:
            data = Dataset.from_observations(GAUSS, [y])
            p0, p1 = norm.pdf(y, 0.0, 1.0), norm.pdf(y, 1.0, 1.0)
            w0, w1 = p0 / (p0 + p1), p1 / (p0 + p1)
            for a in (0, 1):
                direct = risk_bound(lr, loss, data, a).sup_value
                odds_form = table[a] * w0 / w1 + table[2 + a] * w1 / w0
                worst_b = max(worst_b, abs(direct - odds_form) / max(1.0, odds_form))
    results["b"] = worst_b <= 1e-12

    # (c) minimax thresholds against the gamma-power rules
    mismatches = 0
    log_lr = test.log_lr(1, ys)
    for table in c0_tables:
        loss = Loss.wald_np(*table)
        ratio = table[2] / table[1]
        for coll, gamma in ((sd, 1.0), (lr, 0.5)):
            r_star = ratio**gamma
            if abs(decision.testing_threshold(coll.w0, coll.w1, loss) - r_star) > 1e-9 * r_star:
                mismatches += 1
            away = np.abs(-log_lr - math.log(r_star)) > 1e-9
            got = minimax_testing_actions(coll, loss, 1, ys)
            want = threshold_rule(r_star, log_lr)
            mismatches += int(np.sum(got[away] != want[away]))
    results["c"] = mismatches == 0

    # (d) symmetric loss: action 1 iff p1 > p0
    sym = Loss.wald_np(0.0, 1.0, 1.0, 0.0)
    weights = [0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0]
    bad_d = 0
    for w0 in weights:
        for w1 in weights:
            if (w0, w1) == (0.0, 1.0):
                continue  # trivial collection, constant rule
            coll = SimpleVsSimple(test, w0, w1)
            got = minimax_testing_actions(coll, sym, 1, ys)
            away = np.abs(log_lr) > 1e-9
            bad_d += int(np.sum(got[away] != (log_lr[away] > 0)))
    results["d"] = bad_d == 0

    detail = (
        f"(a) rel err {worst_a:.1e}, (b) rel err {worst_b:.1e}, (c) {mismatches} mismatches, "
        f"(d) {bad_d} mismatches"
    )
    return all(results.values()), detail


# 7 ------------------------------------------------------------------------------


def criterion_7():
    test = SimpleTest(GAUSS, 0.0, 1.0)
    w = 0.5
    coll = BBW(test, w)
    notes = []

    def mix_cdf(y):
        return (1 - w) * norm.cdf(y) + w * norm.cdf(y - 1.0)

    ref = brentq(lambda y: mix_cdf(y) - w, -10, 10, xtol=1e-14)
    ok_ystar = abs(coll.y_star - ref) <= 1e-9
    notes.append(f"y* {coll.y_star:.12f} (ref diff {abs(coll.y_star - ref):.1e})")

    alphas = np.round(np.arange(0.01, 0.501, 0.01), 2)
    a0, a1 = coll.conditional_errors(1, coll.y_star)
    alphas = alphas[alphas <= min(a0, a1) + 1e-12]
    y_plus, y_minus = coll.partition(alphas)
    p0, p1 = norm.pdf(y_plus), norm.pdf(y_plus - 1.0)
    err0 = (1 - w) * p0 / ((1 - w) * p0 + w * p1)
    # y == y* belongs to the upper region, so a y_minus sitting on the split is that region's boundary, not its interior
    lower = coll.decision(1, y_minus) == 0
    y_minus = y_minus[lower]
    q0, q1 = norm.pdf(y_minus), norm.pdf(y_minus - 1.0)
    err1 = w * q1 / ((1 - w) * q0 + w * q1)
    pbar0 = coll.eposterior_at(0, 1, y_plus)
    pbar1 = coll.eposterior_at(1, 1, y_minus)
    part_err = max(np.max(np.abs(pbar0 - err0)), np.max(np.abs(pbar1 - err1)),
                   np.max(np.abs(err0 - alphas)), np.max(np.abs(err1 - alphas[lower])))
    ok_part = part_err <= 1e-9
    notes.append(f"partition err {part_err:.1e} over {alphas.size} alphas ({int(np.sum(~lower))} y- on the split)")

    # finite risk only for the BBW rule under C0
    loss = Loss.wald_np(0.0, 1.0, 1.0, 0.0)
    ys = np.linspace(-4.0, 5.0, 2001)
    bbw_risk, _ = sup_risk_batch(coll, loss, 1, ys, coll.decision(1, ys))
    ok_bbw_finite = bool(np.all(np.isfinite(bbw_risk)))
    rng = stream(777, 0)
    cuts = rng.uniform(-3.0, 4.0, size=50)
    cuts = np.where(np.abs(cuts - coll.y_star) < 0.05, cuts + 0.5, cuts)
    infinite = 0
    for k, c in enumerate(cuts):
        acts = (ys >= c).astype(int) if k % 2 == 0 else (ys < c).astype(int)
        r, _ = sup_risk_batch(coll, loss, 1, ys, acts)
        infinite += int(np.any(np.isinf(r)))
    ok_alt = infinite == 50
    notes.append(f"BBW risk finite {ok_bbw_finite}, {infinite}/50 alternative rules infinite")

    ok_mc = True
    for idx in (0, 1):
        for n in (1, 10):
            m, se = evalue_mean(coll, idx, n, 100_000, 31 + idx + n)
            ok_mc &= abs(m - 1.0) <= 3 * se
            notes.append(f"E[S_{idx}] n={n}: {m:.4f}±{se:.4f}")
    return ok_ystar and ok_part and ok_bbw_finite and ok_alt and ok_mc, "; ".join(notes)


# 8 ------------------------------------------------------------------------------


def criterion_8():
    model = Model("bernoulli")
    theta_set = Interval(0.2, 0.8)
    devs = {}
    for n in (100, 400, 1600):
        loss = Loss.kl_loss(model)
        worst = 0.0
        for theta_hat in (0.3, 0.5, 0.7):
            data = Dataset.from_summary(model, n, theta_hat)
            rep = risk_bound(TwoPoint(model, 1.0, n), loss, data, theta_hat, theta_set)
            worst = max(worst, abs(n * rep.sup_value - 1.446729604))
        devs[n] = worst
    vals = [devs[n] for n in (100, 400, 1600)]
    ok = vals[0] > vals[1] > vals[2] and all(devs[n] <= 5 / math.sqrt(n) for n in devs)
    return ok, ", ".join(f"n={n}: |n R - 1.4467| = {d:.2e}" for n, d in devs.items())


# 9 ------------------------------------------------------------------------------


def criterion_9():
    out, ok = [], True
    for k, coll in enumerate((SavageDickey(GAUSS, GaussianPrior(0.0, 1.0)), TwoPoint(GAUSS, 1.0, 100))):
        for theta in (0.0, 0.8):
            rep = coverage_check(coll, 0.05, theta, 100, 10_000, 900 + k)
            ok &= rep.passed
            out.append(f"{coll.kind} theta={theta:g}: {rep.coverage:.4f}")
    return ok, ", ".join(out)


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
}


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    t0 = time.perf_counter()
    ok, detail = CRITERIA[number]()
    _emit(number, ok, detail, t0, capsys)
    assert ok, detail


if __name__ == "__main__":
    failures = 0
    for number in sorted(CRITERIA):
        t0 = time.perf_counter()
        ok, detail = CRITERIA[number]()
        failures += not _emit(number, ok, detail, t0)
    sys.exit(1 if failures else 0)
