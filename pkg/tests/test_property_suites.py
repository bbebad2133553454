"""
Unit tests for the property suites.

Core claims:
    - FKG holds exactly for monotone pairs and is equality for independent increments
    - the integer/continuum sandwich holds pathwise
    - the fractional semigroup error shrinks with the grid step
    - correlation domination and drift brackets hold
"""
from fractions import Fraction

import numpy as np
import pytest
from pytest import approx

from persistence.errors import ConfigError, ContractViolation, DegeneratePathError
from persistence.paths import IncrementLaw, Interp, PathGrid, derive_stream, sample_walk
from persistence.property_suites import (FiniteLaw, MonotoneFn, audit_monotone, closed_form_check,
                                         drift_bracket_check, drift_example_1d, fkg_check, fkg_suite,
                                         run_suite, sandwich_check, sandwich_indicators, sandwich_suite,
                                         semigroup_check, slepian_corr_check)


def _walk(steps):
    values = np.concatenate(([0.0], np.cumsum(steps)))
    return PathGrid(np.arange(len(values), dtype=float), values, Interp.STEP_LEFT)


class TestFKG:
    def test_independent_increments_give_equality(self):
        law = FiniteLaw.uniform((-1, 1))
        f = MonotoneFn('increasing', ramps=((0, None, Fraction(1)),))
        g = MonotoneFn('increasing', ramps=((1, Fraction(0), Fraction(2)),))
        report = fkg_check(law, 3, f, g)
        assert report['lhs'] == report['rhs']
        assert report['holds']

    def test_positions_are_positively_correlated(self):
        law = IncrementLaw('rademacher')
        report = fkg_check(law, 4, MonotoneFn.coordinate(2), MonotoneFn.coordinate(4))
        assert report['lhs'] == 2 and report['rhs'] == 0

    def test_barrier_indicators(self):
        law = FiniteLaw.uniform((-1, 0, 1))
        report = fkg_check(law, 4, MonotoneFn.indicator_below(1, 2), MonotoneFn.indicator_below(0, 4))
        assert report['lhs'] >= report['rhs'] and report['holds']

    def test_opposite_directions_rejected(self):
        law = FiniteLaw.uniform((-1, 1))
        with pytest.raises(ConfigError):
            fkg_check(law, 2, MonotoneFn.coordinate(1), MonotoneFn.coordinate(1, 'decreasing'))

    def test_non_monotone_function_rejected(self):
        law = FiniteLaw.uniform((-1, 0, 1))
        wiggle = MonotoneFn('increasing', fn=lambda x: x[0] * x[0], description='x_1^2')
        with pytest.raises(ContractViolation):
            audit_monotone(wiggle, law, 1)

    def test_gaussian_law_has_no_enumeration(self):
        with pytest.raises(ConfigError):
            FiniteLaw.from_increment_law(IncrementLaw('std_gaussian'))

    def test_suite_has_no_violations(self):
        report = fkg_suite(IncrementLaw('rademacher'), n_pairs=60, n_max=5, seed=3)
        assert report['violations'] == 0 and report['holds']


class TestSandwich:
    def test_zero_path(self):
        assert sandwich_indicators(_walk([0, 0, 0]), 2.5) == (1, 1, 1)

    def test_two_up_steps(self):
        # A_1 = 1, A_1.5 = 2, A_2 = 3
        lower, middle, upper = sandwich_indicators(_walk([1, 1]), 1.5)
        assert (lower, middle, upper) == (0, 0, 1)
        assert sandwich_check(_walk([1, 1]), 1.5)

    def test_continuum_differs_from_integers(self):
        # A_1 = -1, A_1.5 = 0, A_2 = 1
        lower, middle, upper = sandwich_indicators(_walk([-1, 3]), 1.5, level=0.0)
        assert (lower, middle, upper) == (0, 1, 1)

    def test_non_step_path_rejected(self):
        with pytest.raises(DegeneratePathError):
            sandwich_indicators(PathGrid([0.0, 1.0, 2.0], [0.0, 1.0, 2.0], Interp.LINEAR), 1.5)

    def test_random_paths(self):
        report = sandwich_suite(n_paths=300, seed=2)
        assert report['violations'] == 0


class TestSemigroup:
    def test_identity_order(self):
        path = sample_walk(IncrementLaw('rademacher'), 4, derive_stream(1, 0))
        assert semigroup_check(0.0, 0.5, path, [0.5, 0.25]) == [0.0, 0.0]

    def test_constant_path_error_decreases(self):
        ones = PathGrid([0.0, 1.0], [1.0, 1.0], Interp.STEP_LEFT)
        errors = semigroup_check(0.5, 0.5, ones, [1 / 8, 1 / 16, 1 / 32], eval_times=[1.0])
        assert errors[0] > errors[1] > errors[2] > 0

    def test_walk_exact_with_linear_inner(self):
        path = sample_walk(IncrementLaw('rademacher'), 6, derive_stream(4, 0))
        errors = semigroup_check(1.0, 1.0, path, [1.0, 0.5], inner='linear')
        assert max(errors) == approx(0.0, abs=1e-9)

    def test_walk_error_decreases(self):
        path = sample_walk(IncrementLaw('rademacher'), 4, derive_stream(4, 1))
        errors = semigroup_check(0.5, 0.7, path, [1 / 8, 1 / 16, 1 / 32])
        assert errors[0] >= errors[1] >= errors[2]


class TestSlepian:
    def test_domination(self):
        report = slepian_corr_check(n_max=10, tau_max=10.0, step=0.05)
        assert report['holds']
        assert all(abs(row['gap_at_0']) <= 1e-9 for row in report['profile'])

    def test_first_order_gap(self):
        report = slepian_corr_check(n_max=1, tau_max=1.0, step=1.0)
        assert report['profile'][0]['max_gap'] == approx(0.88681 - 0.79823, abs=2e-5)

    def test_order_cap(self):
        with pytest.raises(ConfigError):
            slepian_corr_check(n_max=51)


class TestDrift:
    def test_one_dimensional_example(self):
        report = drift_example_1d(0.5)
        assert report['ratio'] == approx(0.617075, abs=1e-6)
        assert report['lower'] == approx(0.4898, abs=1e-4)
        assert report['upper'] == approx(1.5900, abs=1e-4)
        assert report['holds']

    def test_zero_shift(self):
        report = drift_example_1d(0.0)
        assert report['ratio'] == approx(1.0) and report['lower'] == report['upper'] == 1.0

    def test_random_cases(self):
        report = drift_bracket_check(dim=4, n_cases=40, mc_trials=5000, seed=1)
        assert report['holds']
        assert report['cases'] + report['skipped'] == 40


class TestClosedForm:
    def test_small_run(self):
        report = closed_form_check(T_list=(1.0, 10.0), n_trials=4000, points_per_horizon=256, seed=5)
        assert report['holds']
        skorokhod = [r for r in report['rows'] if r['check'] == 'skorokhod']
        assert skorokhod[-1]['ratio'] == approx(1.0, abs=1e-4)


def test_unknown_suite():
    with pytest.raises(ConfigError):
        run_suite('martingale')
