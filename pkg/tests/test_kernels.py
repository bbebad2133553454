"""
Unit tests for convolution functionals.

Core claims:
    - fractional kernels evaluate in closed form and respect their envelope
    - frac_weights telescope to t^alpha / Gamma(alpha + 1)
    - convolve is exact on step and linear paths
    - the batch convolution on uniform grids agrees with convolve
"""
import math

import numpy as np
import pytest
from pytest import approx
from scipy.integrate import quad

from persistence.errors import ConfigError, ContractViolation, KernelDomainError
from persistence.kernels import (KernelSpec, convolve, convolve_uniform, frac_weights, kernel_eval,
                                 lag_weights, lamperti)
from persistence.paths import Interp, PathGrid, derive_stream


def _ones(t_end=4.0, n=8):
    times = np.linspace(0.0, t_end, n + 1)
    return PathGrid(times, np.ones_like(times), Interp.STEP_LEFT)


class TestKernelEval:
    def test_order_one_is_constant(self):
        assert kernel_eval(KernelSpec.fractional(1), 17.3) == approx(1.0)

    def test_order_half(self):
        assert kernel_eval(KernelSpec.fractional(0.5), 4.0) == approx(0.28209, abs=1e-5)

    def test_nonpositive_lag_rejected(self):
        with pytest.raises(KernelDomainError):
            kernel_eval(KernelSpec.fractional(0.5), 0.0)

    def test_table_above_envelope_rejected(self):
        spec = KernelSpec.table([0.5, 1.0, 2.0], [1.0, 1.0, 5.0], (1.0, 1.0, 1.0))
        with pytest.raises(ContractViolation):
            kernel_eval(spec, 2.0)

    def test_table_interpolates(self):
        spec = KernelSpec.table([1.0, 2.0], [1.0, 0.5], (1.0, 1.0, 1.0))
        assert kernel_eval(spec, 1.5) == approx(0.75)

    def test_table_needs_bounds(self):
        with pytest.raises(ConfigError):
            KernelSpec('table', s_points=(1.0, 2.0), k_values=(1.0, 1.0))

    def test_table_from_csv(self, tmp_path):
        path = tmp_path / 'kernel.csv'
        path.write_text("s,K\n0.5,1.0\n1.0,0.8\n2.0,0.6\n")
        spec = KernelSpec.from_dict({'kind': 'table', 'csv': str(path), 'bound_consts': [1.0, 1.0, 1.0]})
        assert spec.s_points == (0.5, 1.0, 2.0)

    def test_nonpositive_order_rejected(self):
        with pytest.raises(ConfigError):
            KernelSpec.fractional(0.0)


class TestFracWeights:
    def test_unit_order_weights_are_steps(self):
        h = 0.25
        w = frac_weights(1.0, h * np.arange(9), 2.0)
        assert w[:8] == approx(np.full(8, h))
        assert w[-1] == 0.0

    def test_weights_telescope(self):
        grid = [0.0, 0.3, 0.35, 1.1, 2.0, 2.6]
        for alpha in (0.3, 1.0, 2.5):
            assert frac_weights(alpha, grid, 2.2).sum() == approx(2.2 ** alpha / math.gamma(alpha + 1))

    def test_half_order_single_interval(self):
        assert frac_weights(0.5, [0.0, 1.0], 1.0)[0] == approx(2 / math.sqrt(math.pi))


class TestConvolve:
    @pytest.mark.parametrize('alpha', [0.5, 1.0, 1.7])
    def test_constant_path(self, alpha):
        out = convolve(KernelSpec.fractional(alpha), _ones(), [0.5, 1.0, 3.0])
        expected = [t ** alpha / math.gamma(alpha + 1) for t in (0.5, 1.0, 3.0)]
        assert out.values == approx(expected, rel=1e-12)
        assert out.interp == Interp.POINTS

    def test_zero_path(self):
        x = PathGrid([0.0, 1.0, 2.0], [0.0, 0.0, 0.0], Interp.STEP_LEFT)
        assert np.all(convolve(KernelSpec.fractional(0.5), x, [1.0, 2.0]).values == 0)

    def test_integrated_walk_partial_sums(self):
        walk = PathGrid([0.0, 1.0, 2.0], [0.0, 1.0, 0.0], Interp.STEP_LEFT)
        shifted = PathGrid(walk.times, [1.0, 0.0, 0.0], Interp.STEP_LEFT)
        assert convolve(KernelSpec.fractional(1), shifted, [2.0]).values[0] == approx(1.0)

    def test_step_path_matches_quadrature(self):
        x = PathGrid([0.0, 0.7, 1.5, 3.0], [0.4, -1.2, 2.0, 0.0], Interp.STEP_LEFT)
        alpha, t = 0.6, 2.4
        k = lambda s: (t - s) ** (alpha - 1) / math.gamma(alpha)
        ref = sum(quad(k, a, min(b, t), epsrel=1e-12)[0] * v
                  for a, b, v in ((0.0, 0.7, 0.4), (0.7, 1.5, -1.2), (1.5, 3.0, 2.0)))
        got = convolve(KernelSpec.fractional(alpha), x, [t]).values[0]
        assert got == approx(ref, rel=1e-8)

    def test_linear_path_matches_quadrature(self):
        x = PathGrid([0.0, 1.0, 2.0], [0.0, 2.0, 1.0], Interp.LINEAR)
        alpha, t = 1.5, 1.8
        ref = quad(lambda s: (t - s) ** (alpha - 1) / math.gamma(alpha) * float(x.value_at(s)),
                   0.0, t, points=[1.0], epsrel=1e-12)[0]
        assert convolve(KernelSpec.fractional(alpha), x, [t]).values[0] == approx(ref, rel=1e-8)

    def test_table_kernel_matches_fractional(self):
        s = np.linspace(0.01, 5.0, 400)
        table = KernelSpec.table(s, np.ones_like(s), (1.0, 1.0, 1.0))
        out = convolve(table, _ones(), [1.0, 3.0])
        assert out.values == approx([1.0, 3.0], rel=1e-9)

    def test_points_path_rejected(self):
        x = PathGrid([0.0, 1.0], [0.0, 1.0], Interp.POINTS)
        with pytest.raises(ConfigError):
            convolve(KernelSpec.fractional(1), x, [1.0])

    def test_beyond_support_rejected(self):
        with pytest.raises(KernelDomainError):
            convolve(KernelSpec.fractional(1), _ones(), [5.0])


class TestUniformConvolution:
    def test_matches_pathwise_convolve(self):
        h = 0.25
        values = derive_stream(3, 0).generator().standard_normal((2, 12))
        spec = KernelSpec.fractional(0.6)
        batch = convolve_uniform(spec, values, h)
        times = h * np.arange(13)
        for row in range(2):
            x = PathGrid(times, np.append(values[row], 0.0), Interp.STEP_LEFT)
            assert batch[row] == approx(convolve(spec, x, times).values, abs=1e-10)

    def test_unit_order_is_exact_cumsum(self):
        values = np.array([[1.0, -1.0, 1.0, 1.0]])
        assert convolve_uniform(KernelSpec.fractional(1), values, 1.0)[0].tolist() == [0.0, 1.0, 0.0, 1.0, 2.0]

    def test_lag_weights_sum(self):
        w = lag_weights(KernelSpec.fractional(0.5), 0.1, 30)
        assert w.sum() == approx(3.0 ** 0.5 / math.gamma(1.5))


class TestLamperti:
    def test_order_zero_constant(self):
        x = PathGrid([1.0, math.e], [1.0, 2.0])
        y = lamperti(x, 0.0)
        assert y.times == approx([0.0, 1.0])
        assert y.values == approx([1.0, 2.0 * math.exp(-0.5)])

    def test_order_one_constant(self):
        y = lamperti(PathGrid([1.0], [1.0]), 1.0)
        assert y.values[0] == approx(math.sqrt(3))

    def test_zero_path(self):
        y = lamperti(PathGrid([1.0, 2.0], [0.0, 0.0]), 0.7)
        assert np.all(y.values == 0)

    def test_early_times_rejected(self):
        with pytest.raises(KernelDomainError):
            lamperti(PathGrid([0.5, 1.0], [0.0, 0.0]), 1.0)
