"""
Unit tests for exponent fitting.

Core claims:
    - exact power laws are recovered with zero residual
    - log corrections bias the fit by a computable amount
    - comparison verdicts use z combined stderr plus the log allowances
    - subadditive rates and log-window constants
"""
import math

import pytest
from pytest import approx

from persistence.errors import ConfigError, InsufficientDataError
from persistence.exponent_fit import (ExponentFit, compare_exponents, fit_exponent,
                                      log_correction_allowance, log_window_constants,
                                      subadditive_rate, subadditive_rates, superadditivity_check)
from persistence.survival_mc import SurvivalEstimate


# -- Helpers -----------------------------------------------------------------

def _curve(p_of_T, Ts, n=10 ** 6):
    """Synthetic estimates with p_hat set exactly (counts rounded only for bookkeeping)"""
    out = []
    for T in Ts:
        p = p_of_T(T)
        est = SurvivalEstimate.from_counts(T, 'integers', n, int(round(p * n)), 0, 1.0)
        out.append(SurvivalEstimate(est.T, est.J_mode, n, est.n_survived, p, est.ci_low, est.ci_high, 0, 1.0))
    return out


def _fit(theta, se, allowance=0.0):
    return ExponentFit(theta, se, (256.0, 32768.0), 1.0, 0.0, allowance)


POWERS = [2.0 ** k for k in range(8, 16)]


class TestFit:
    def test_exact_quarter(self):
        fit = fit_exponent(_curve(lambda T: T ** -0.25, POWERS))
        assert fit.theta_hat == approx(0.25, abs=1e-12)
        assert fit.residual_max == approx(0.0, abs=1e-12)
        assert fit.r_squared == approx(1.0)

    def test_exact_half(self):
        assert fit_exponent(_curve(lambda T: T ** -0.5, POWERS)).theta_hat == approx(0.5, abs=1e-12)

    def test_default_skip_drops_two_smallest(self):
        fit = fit_exponent(_curve(lambda T: T ** -0.25, POWERS))
        assert fit.fit_window == (2.0 ** 10, 2.0 ** 15)
        assert fit.n_points == 6

    def test_log_correction_bias_is_reported(self):
        Ts = [2.0 ** k for k in range(8, 21)]
        fit = fit_exponent(_curve(lambda T: math.log(T) ** 4 * T ** -0.25, Ts), skip=0, weighting='uniform')
        # the log-correction slope 4 / log T lies between its values at the window ends
        delta_hi = 4 / math.log(Ts[0])
        assert 0.25 - delta_hi <= fit.theta_hat <= 0.25 - 4 / math.log(Ts[-1])

    def test_uniform_weighting_is_scale_invariant(self):
        base = fit_exponent(_curve(lambda T: 0.9 * T ** -0.3 * (1 + 0.1 * math.sin(T)), POWERS),
                            weighting='uniform')
        scaled = fit_exponent(_curve(lambda T: 0.45 * T ** -0.3 * (1 + 0.1 * math.sin(T)), POWERS),
                              weighting='uniform')
        assert base.theta_hat == approx(scaled.theta_hat, abs=1e-12)
        assert scaled.intercept - base.intercept == approx(math.log(0.5), abs=1e-12)

    def test_zero_survivors_refused(self):
        curve = _curve(lambda T: T ** -0.25, POWERS)
        curve[-1] = SurvivalEstimate.from_counts(curve[-1].T, 'integers', 100, 0, 0, 1.0)
        with pytest.raises(InsufficientDataError, match='increase trials'):
            fit_exponent(curve)

    def test_too_few_points(self):
        with pytest.raises(InsufficientDataError):
            fit_exponent(_curve(lambda T: T ** -0.25, POWERS[:3]))

    def test_skip_leaving_too_few(self):
        with pytest.raises(ConfigError):
            fit_exponent(_curve(lambda T: T ** -0.25, POWERS[:5]), skip=2)

    def test_unsorted_input(self):
        fit = fit_exponent(list(reversed(_curve(lambda T: T ** -0.25, POWERS))))
        assert fit.theta_hat == approx(0.25, abs=1e-12)

    def test_allowance_from_alpha(self):
        fit = fit_exponent(_curve(lambda T: T ** -0.25, POWERS), alpha=1.0)
        assert fit.log_power == 4.0
        assert fit.log_correction_allowance == approx(log_correction_allowance(4.0, 2.0 ** 15))

    def test_dict_form(self):
        fit = fit_exponent(_curve(lambda T: T ** -0.25, POWERS))
        assert ExponentFit.from_dict(fit.to_dict()) == fit


class TestAllowance:
    def test_zero_power(self):
        assert log_correction_allowance(0.0, 1e6) == 0.0

    def test_value(self):
        T = 2.0 ** 15
        assert log_correction_allowance(4.0, T) == approx(4 * math.log(math.log(T)) / math.log(T))


class TestCompare:
    def test_identical_fits_equal(self):
        v = compare_exponents(_fit(0.25, 0.01), _fit(0.25, 0.01))
        assert v.holds and v.difference == 0.0

    def test_separated_fits_differ(self):
        assert not compare_exponents(_fit(0.5, 0.01), _fit(0.25, 0.01)).holds

    def test_slack_includes_allowances(self):
        v = compare_exponents(_fit(0.3, 0.01, 0.05), _fit(0.2, 0.01, 0.05))
        assert v.slack == approx(2 * math.hypot(0.01, 0.01) + 0.1)
        assert v.holds

    def test_monotone(self):
        assert compare_exponents(_fit(0.25, 0.01), _fit(0.5, 0.01), 'monotone_geq').holds is False
        assert compare_exponents(_fit(0.5, 0.01), _fit(0.25, 0.01), 'monotone_geq').holds

    def test_unknown_mode(self):
        with pytest.raises(ConfigError):
            compare_exponents(_fit(0.5, 0.01), _fit(0.5, 0.01), 'less')


class TestSubadditivity:
    def test_exponential_decay_rate(self):
        curve = _curve(lambda T: math.exp(-T / 4), [2.0, 4.0, 8.0, 16.0])
        for row in subadditive_rates(curve):
            assert row['rate'] == approx(1.0, rel=1e-12)
        rate, lo, hi = subadditive_rate(curve)
        assert rate == approx(1.0)
        assert lo < rate < hi

    def test_rate_band_is_two_stderr(self):
        curve = _curve(lambda T: math.exp(-T / 4) * (1.05 if T == 8.0 else 1.0), [2.0, 4.0, 8.0, 16.0], n=10 ** 4)
        rows = {row['T']: row for row in subadditive_rates(curve)}
        rate, lo, hi = subadditive_rate(curve)
        # the bumped horizon has the smallest rate
        assert rate == approx(rows[8.0]['rate'])
        assert hi - rate == approx(2 * rows[8.0]['stderr'])
        assert rate - lo == approx(2 * rows[8.0]['stderr'])

    def test_superadditivity_on_exponential(self):
        p = _curve(lambda T: math.exp(-T / 4), [2.0, 3.0, 5.0])
        assert superadditivity_check(*p)['holds']


class TestLogWindow:
    def test_pure_power_law_fits(self):
        curve = _curve(lambda T: 0.7 * T ** -0.25, POWERS)
        window = log_window_constants(curve, 0.25)
        assert window['holds']
        assert window['c_low'] <= 0.7 <= window['c_high']

    def test_wrong_exponent_fails(self):
        Ts = [10.0 ** k for k in range(1, 13)]
        curve = _curve(lambda T: T ** -0.25, Ts, n=10 ** 12)
        assert not log_window_constants(curve, 1.0, power=1.0)['holds']
