"""
Unit tests for path sampling.

Core claims:
    - trial streams are pure functions of (master_seed, trial)
    - walks have the right support and centering
    - Gaussian samplers reproduce the analytic covariances
    - the Brownian/integral pair has Var(A_1) = 1/3 and Corr(W_1, A_1) = sqrt(3)/2
"""
import math

import numpy as np
import pytest
from pytest import approx

from persistence.errors import ConfigError, DegeneratePathError, FactorizationError
from persistence.kernels import lamperti
from persistence.oracles import CorrModel, corr_array
from persistence.paths import (IncrementLaw, Interp, PathGrid, ProcessSpec, _factor, covariance_matrix,
                               derive_stream, gaussian_sampler, ibm_batch, lamperti_variance,
                               moment_self_test, right_step, rl_covariance, sample_gaussian,
                               sample_ibm_pair, sample_walk, walk_batch)


def _streams(seed, n):
    return [derive_stream(seed, i) for i in range(n)]


# -- Streams -----------------------------------------------------------------

class TestStreams:
    def test_same_key_same_bits(self):
        a = derive_stream(7, 0).generator().integers(0, 2 ** 63, 4)
        b = derive_stream(7, 0).generator().integers(0, 2 ** 63, 4)
        assert a.tobytes() == b.tobytes()

    def test_trial_changes_bits(self):
        a = derive_stream(7, 0).generator().bit_generator.random_raw()
        b = derive_stream(7, 1).generator().bit_generator.random_raw()
        assert a != b

    def test_seed_changes_bits(self):
        a = derive_stream(7, 0).generator().bit_generator.random_raw()
        b = derive_stream(8, 0).generator().bit_generator.random_raw()
        assert a != b

    def test_negative_seed_rejected(self):
        with pytest.raises(ConfigError):
            derive_stream(-1, 0)


# -- PathGrid ----------------------------------------------------------------

class TestPathGrid:
    def test_duplicate_times_rejected(self):
        with pytest.raises(DegeneratePathError):
            PathGrid([0.0, 1.0, 1.0], [0.0, 1.0, 2.0])

    def test_length_mismatch_rejected(self):
        with pytest.raises(DegeneratePathError):
            PathGrid([0.0, 1.0], [0.0])

    def test_nonfinite_rejected(self):
        with pytest.raises(DegeneratePathError):
            PathGrid([0.0, 1.0], [0.0, np.nan])

    def test_step_and_linear_lookup(self):
        step = PathGrid([0.0, 1.0, 2.0], [0.0, 1.0, 3.0], Interp.STEP_LEFT)
        line = PathGrid([0.0, 1.0, 2.0], [0.0, 1.0, 3.0], Interp.LINEAR)
        assert step.value_at(1.5) == 1.0
        assert line.value_at(1.5) == approx(2.0)

    def test_points_between_samples_rejected(self):
        pts = PathGrid([0.0, 1.0], [0.0, 1.0], Interp.POINTS)
        with pytest.raises(DegeneratePathError):
            pts.value_at(0.5)

    def test_right_step_shifts_values(self):
        walk = PathGrid([0.0, 1.0, 2.0], [0.0, 1.0, 0.0], Interp.STEP_LEFT)
        assert right_step(walk).values.tolist() == [1.0, 0.0, 0.0]


# -- Walks -------------------------------------------------------------------

class TestWalks:
    def test_rademacher_support(self):
        walk = sample_walk(IncrementLaw('rademacher'), 3, derive_stream(1, 0))
        assert set(walk.values.tolist()) <= {0.0, 1.0, -1.0, 2.0, -2.0, 3.0, -3.0}
        assert np.all(np.abs(np.diff(walk.values)) == 1)

    def test_zero_steps_rejected(self):
        with pytest.raises(DegeneratePathError):
            sample_walk(IncrementLaw('rademacher'), 0, derive_stream(1, 0))

    def test_batch_rows_match_single_walks(self):
        law = IncrementLaw('std_gaussian')
        batch = walk_batch(law, 5, _streams(3, 4))
        for i in range(4):
            assert batch[i] == approx(sample_walk(law, 5, derive_stream(3, i)).values)

    @pytest.mark.parametrize('name', ['rademacher', 'std_gaussian', 'centered_exponential',
                                      'centered_poisson'])
    def test_endpoint_is_centered(self, name):
        trials = 20000
        s = walk_batch(IncrementLaw(name), 10, _streams(11, trials))
        mean = s[:, -1].mean() / math.sqrt(10)
        assert abs(mean) <= 4 / math.sqrt(trials)

    def test_unknown_law_rejected(self):
        with pytest.raises(ConfigError):
            IncrementLaw('cauchy')

    @pytest.mark.parametrize('name', ['rademacher', 'std_gaussian', 'centered_exponential',
                                      'centered_poisson'])
    def test_moment_self_test_is_stable(self, name):
        report = moment_self_test(IncrementLaw(name), n_draws=200000)
        assert report['stable']
        assert report['mean'] == approx(0.0, abs=0.01)


# -- Gaussian processes ------------------------------------------------------

class TestGaussian:
    def test_rl_covariance_closed_form_matches_quadrature(self):
        s, t = np.array([0.3, 1.0, 2.5]), np.array([1.0, 1.0, 4.0])
        for alpha in (0.4, 1.0, 2.0):
            assert rl_covariance(s, t, alpha) == approx(rl_covariance(s, t, alpha, 'quadrature'), rel=1e-8)

    def test_rl_variance_formula(self):
        alpha, t = 1.5, 2.0
        expected = t ** (2 * alpha + 1) / ((2 * alpha + 1) * math.gamma(alpha + 1) ** 2)
        assert float(rl_covariance(t, t, alpha)) == approx(expected, rel=1e-10)

    def test_rl_sample_variance(self):
        spec = ProcessSpec.riemann_liouville(1.0)
        x = gaussian_sampler(spec, [0.5, 1.0]).sample_batch(_streams(5, 20000))
        var = x[:, -1].var()
        assert var == approx(1 / 3, abs=4 * (1 / 3) * math.sqrt(2 / 20000))

    def test_brownian_unit_variance(self):
        x = gaussian_sampler(ProcessSpec.brownian(), [1.0]).sample_batch(_streams(6, 20000))
        assert x[:, 0].var() == approx(1.0, abs=4 * math.sqrt(2 / 20000))

    def test_sample_gaussian_path(self):
        spec = ProcessSpec.brownian()
        path = sample_gaussian(spec, [0.5, 1.0, 2.0], derive_stream(3, 0))
        assert path.interp == Interp.POINTS
        assert list(path.times) == [0.5, 1.0, 2.0]
        again = sample_gaussian(spec, [0.5, 1.0, 2.0], derive_stream(3, 0))
        assert np.array_equal(path.values, again.values)

    def test_zero_time_is_fixed(self):
        x = gaussian_sampler(ProcessSpec.fbm(0.7), [0.0, 0.5, 1.3]).sample_batch(_streams(2, 10))
        assert np.all(x[:, 0] == 0)

    def test_fbm_uses_circulant_on_uniform_grid(self):
        grid = 0.01 * np.arange(1, 101)
        sampler = gaussian_sampler(ProcessSpec.fbm(0.9), grid)
        assert sampler.method == 'fgn_circulant'
        x = sampler.sample_batch(_streams(8, 20000))
        assert x[:, -1].var() == approx(1.0, abs=4 * math.sqrt(2 / 20000))

    def test_stationary_correlation(self):
        model = CorrModel.limit()
        grid = [0.0, 1.0]
        x = gaussian_sampler(ProcessSpec.stationary_gp(model), grid).sample_batch(_streams(9, 20000))
        empirical = np.corrcoef(x[:, 0], x[:, 1])[0, 1]
        assert empirical == approx(float(corr_array(model, 1.0)), abs=0.02)

    def test_fbm_covariance_diagonal(self):
        cov = covariance_matrix(ProcessSpec.fbm(0.3), [0.5, 2.0])
        assert np.diag(cov) == approx([0.5 ** 0.6, 2.0 ** 0.6])

    def test_indefinite_matrix_rejected(self):
        with pytest.raises(FactorizationError) as err:
            _factor(np.array([[1.0, 2.0], [2.0, 1.0]]))
        assert err.value.eigenvalue == approx(-1.0)

    def test_walk_has_no_gaussian_sampler(self):
        with pytest.raises(ConfigError):
            gaussian_sampler(ProcessSpec.walk('rademacher'), [1.0])

    def test_lamperti_variance(self):
        assert lamperti_variance(0.0) == approx(1.0)
        assert lamperti_variance(1.0) == approx(1 / 3)

    def test_rl_order_zero_is_brownian(self):
        grid = [0.5, 1.0, 2.0]
        cov = covariance_matrix(ProcessSpec.riemann_liouville(0.0), grid)
        assert cov == approx(np.minimum.outer(grid, grid), rel=1e-10)
        assert cov == approx(covariance_matrix(ProcessSpec.brownian(), grid), rel=1e-10)
        assert rl_covariance(0.5, 2.0, 1e-9) == approx(0.5, rel=1e-6)

    @pytest.mark.parametrize('spec', [ProcessSpec.riemann_liouville(1.0), ProcessSpec.fbm(0.7)],
                             ids=['liouville', 'fbm'])
    def test_sample_covariance_within_four_stderr(self, spec):
        grid = [0.5, 1.0, 1.5, 2.0, 3.0]
        trials = 20000
        x = gaussian_sampler(spec, grid).sample_batch(_streams(21, trials))
        target = covariance_matrix(spec, grid)
        sample = np.cov(x, rowvar=False)
        var = np.diag(target)
        se = np.sqrt((np.outer(var, var) + target ** 2) / trials)
        assert np.all(np.abs(sample - target) <= 4 * se)

    def test_lamperti_transform_is_stationary_with_unit_variance(self):
        u = np.array([0.0, 0.5, 1.0, 2.0])
        trials = 10000
        x = gaussian_sampler(ProcessSpec.riemann_liouville(1.0), np.exp(u)).sample_batch(_streams(22, trials))
        y = np.array([lamperti(PathGrid(np.exp(u), row, Interp.POINTS), 1.0).values for row in x])
        assert y.var(axis=0) == approx(np.ones(4), abs=4 * math.sqrt(2 / trials))
        for lag in (0.5, 1.0, 2.0):
            first = np.corrcoef(y[:, 0], y[:, list(u).index(lag)])[0, 1]
            assert first == approx(float(corr_array(CorrModel.liouville(1.0), lag)), abs=0.03)


# -- Brownian motion with its integral ---------------------------------------

class TestIntegratedPair:
    def test_moments_at_one(self):
        w, a = ibm_batch(1.0, 1.0, 0.125, _streams(4, 40000))
        assert a[:, -1].var() == approx(1 / 3, abs=4 * (1 / 3) * math.sqrt(2 / 40000))
        assert np.corrcoef(w[:, -1], a[:, -1])[0, 1] == approx(math.sqrt(3) / 2, abs=0.01)

    def test_single_pair_matches_batch(self):
        w, a = sample_ibm_pair(1.0, 1.0, 0.25, derive_stream(4, 3))
        wb, ab = ibm_batch(1.0, 1.0, 0.25, [derive_stream(4, 3)])
        assert a.values == approx(ab[0])
        assert w.times.tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]

    def test_step_larger_than_horizon_rejected(self):
        with pytest.raises(DegeneratePathError):
            ibm_batch(1.0, 1.0, 2.0, _streams(1, 1))


class TestProcessSpec:
    def test_self_similarity(self):
        assert ProcessSpec.riemann_liouville(1.0).self_similarity == 1.5
        assert ProcessSpec.fbm(0.9).self_similarity == 0.9
        assert ProcessSpec.walk('rademacher').self_similarity is None

    def test_dict_form(self):
        spec = ProcessSpec.stationary_gp(CorrModel.liouville(2))
        assert ProcessSpec.from_dict(spec.to_dict()) == spec

    def test_bad_hurst_rejected(self):
        with pytest.raises(ConfigError):
            ProcessSpec.fbm(1.0)

    def test_walk_without_law_rejected(self):
        with pytest.raises(ConfigError):
            ProcessSpec.from_dict({'kind': 'walk'})
