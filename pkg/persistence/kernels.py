"""
Convolution Functionals - I(X)_t = int_0^t K(t-s) X_s ds
Exact for step and piecewise-linear paths under fractional kernels,
Gauss-Legendre per interval for tabulated kernels
"""
import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.signal import fftconvolve
from scipy.special import gamma, gammaln

from .errors import ConfigError, ContractViolation, DegeneratePathError, KernelDomainError
from .paths import Interp, PathGrid

logger = logging.getLogger(__name__)

GAUSS_NODES = 16
ENVELOPE_RTOL = 1e-12

_GL_X, _GL_W = np.polynomial.legendre.leggauss(GAUSS_NODES)


@dataclass(frozen=True)
class KernelSpec:
    """
    fractional(alpha): K(s) = s^{alpha-1} / Gamma(alpha)
    table: linear interpolation of (s, K(s)) samples, held constant outside the table
    bound_consts (k, a, b) declare the envelope K(s) <= k (s^{a-1} + s^{b-1}), a >= b
    """
    kind: str
    alpha: float = 1.0
    s_points: Tuple[float, ...] = ()
    k_values: Tuple[float, ...] = ()
    bound_consts: Optional[Tuple[float, float, float]] = None

    def __post_init__(self):
        if self.kind == 'fractional':
            if not self.alpha > 0:
                raise ConfigError("fractional order must be > 0")
            if self.bound_consts is None:
                object.__setattr__(self, 'bound_consts',
                                   (float(1 / gamma(self.alpha)), self.alpha, self.alpha))
        elif self.kind == 'table':
            s = np.asarray(self.s_points, dtype=float)
            k = np.asarray(self.k_values, dtype=float)
            if s.size < 2 or s.shape != k.shape:
                raise ConfigError("table kernel needs at least two (s, K) pairs")
            if s[0] <= 0 or np.any(np.diff(s) <= 0):
                raise ConfigError("table kernel s values must be positive and strictly increasing")
            if np.any(k < 0) or not np.all(np.isfinite(k)):
                raise ConfigError("table kernel values must be finite and >= 0")
            if self.bound_consts is None:
                raise ConfigError("table kernel needs declared bound constants (k, alpha, beta)")
            object.__setattr__(self, 's_points', tuple(float(v) for v in s))
            object.__setattr__(self, 'k_values', tuple(float(v) for v in k))
        else:
            raise ConfigError(f"unknown kernel kind '{self.kind}'")
        k, a, b = (float(v) for v in self.bound_consts)
        if k <= 0 or a <= 0 or b <= 0 or a < b:
            raise ConfigError("bound constants need k > 0 and alpha >= beta > 0")
        object.__setattr__(self, 'bound_consts', (k, a, b))

    @classmethod
    def fractional(cls, alpha: float) -> 'KernelSpec':
        return cls('fractional', alpha=float(alpha))

    @classmethod
    def table(cls, s_points: Sequence[float], k_values: Sequence[float],
              bound_consts: Tuple[float, float, float]) -> 'KernelSpec':
        return cls('table', s_points=tuple(s_points), k_values=tuple(k_values),
                   bound_consts=tuple(bound_consts))

    @classmethod
    def from_csv(cls, path: str, bound_consts: Tuple[float, float, float]) -> 'KernelSpec':
        """Two-column CSV with a header row: s, K(s)"""
        df = pd.read_csv(path)
        if df.shape[1] != 2:
            raise ConfigError(f"kernel table {path} must have exactly two columns")
        df = df.astype(float)
        logger.info("Loaded kernel table %s (%d rows)", path, len(df))
        return cls.table(df.iloc[:, 0].tolist(), df.iloc[:, 1].tolist(), bound_consts)

    def envelope(self, s):
        k, a, b = self.bound_consts
        s = np.asarray(s, dtype=float)
        return k * (s ** (a - 1) + s ** (b - 1))

    def to_dict(self) -> Dict:
        if self.kind == 'fractional':
            return {'kind': 'fractional', 'alpha': self.alpha}
        return {'kind': 'table', 's_points': list(self.s_points),
                'k_values': list(self.k_values), 'bound_consts': list(self.bound_consts)}

    @classmethod
    def from_dict(cls, d: Dict) -> 'KernelSpec':
        if d['kind'] == 'fractional':
            return cls.fractional(d['alpha'])
        if d['kind'] == 'table':
            if 'csv' in d:
                return cls.from_csv(d['csv'], tuple(d['bound_consts']))
            return cls.table(d['s_points'], d['k_values'], tuple(d['bound_consts']))
        raise ConfigError(f"unknown kernel kind '{d['kind']}'")


def _raw_eval(spec: KernelSpec, s: np.ndarray) -> np.ndarray:
    if spec.kind == 'fractional':
        return np.exp((spec.alpha - 1) * np.log(s) - gammaln(spec.alpha))
    return np.interp(s, spec.s_points, spec.k_values)


def kernel_eval(spec: KernelSpec, s):
    """K(s) for s > 0, checked against the declared envelope"""
    arr = np.asarray(s, dtype=float)
    if np.any(arr <= 0):
        raise KernelDomainError("kernel is only defined for s > 0")
    values = _raw_eval(spec, arr)
    bound = spec.envelope(arr)
    bad = values > bound * (1 + ENVELOPE_RTOL)
    if np.any(bad):
        where = float(np.atleast_1d(arr)[np.argmax(np.atleast_1d(bad))])
        raise ContractViolation(f"kernel exceeds its declared envelope at s={where:.6g}")
    if values.ndim == 0:
        return float(values)
    return values


def frac_weights(alpha: float, grid: Sequence[float], t: float) -> np.ndarray:
    """
    Weight of each grid interval [g_i, g_{i+1}) in I_alpha at time t:
    ((t-a)^alpha - (t-b)^alpha) / Gamma(alpha+1) with b clipped at t.
    The last grid point carries weight 0 (its interval starts at or after t).
    """
    if alpha <= 0:
        raise ConfigError("fractional order must be > 0")
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size == 0 or np.any(np.diff(g) <= 0):
        raise DegeneratePathError("grid must be strictly increasing")
    if t < g[0]:
        raise KernelDomainError("evaluation time lies below the grid start")
    a = np.minimum(g[:-1], t)
    b = np.minimum(g[1:], t)
    w = ((t - a) ** alpha - (t - b) ** alpha) / gamma(alpha + 1)
    return np.append(np.maximum(w, 0.0), 0.0)


def _gauss_interval(spec: KernelSpec, t: float, a: np.ndarray, b: np.ndarray,
                    slope: Optional[np.ndarray] = None):
    """Gauss-Legendre moments of K(t-s) over [a, b]; zeroth and (optionally) first in (s - a)"""
    half = (b - a) / 2
    mid = (b + a) / 2
    s = mid[:, None] + half[:, None] * _GL_X[None, :]
    k = np.zeros_like(s)
    live = half > 0
    if np.any(live):
        k[live] = kernel_eval(spec, t - s[live])
    m0 = (k * _GL_W).sum(axis=1) * half
    if slope is None:
        return m0, None
    m1 = (k * (s - a[:, None]) * _GL_W).sum(axis=1) * half
    return m0, m1


def _frac_linear(alpha: float, t: float, a: np.ndarray, b: np.ndarray):
    """Exact moments of (t-s)^{alpha-1}/Gamma(alpha) over [a, b]: int K and int K (s-a)"""
    u_hi = t - a
    u_lo = t - b
    m_u0 = (u_hi ** alpha - u_lo ** alpha) / gamma(alpha + 1)
    m_u1 = alpha * (u_hi ** (alpha + 1) - u_lo ** (alpha + 1)) / gamma(alpha + 2)
    # s - a = (t - a) - u
    return m_u0, u_hi * m_u0 - m_u1


def _convolve_at(spec: KernelSpec, x: PathGrid, t: float) -> float:
    times, values = x.times, x.values
    n_int = int(np.searchsorted(times, t, side='left'))
    if n_int == 0:
        return 0.0
    a = times[:n_int]
    b = np.minimum(times[1:n_int + 1], t)
    left = values[:n_int]
    if x.interp == Interp.STEP_LEFT:
        if spec.kind == 'fractional':
            w = frac_weights(spec.alpha, times, t)[:n_int]
            return float(np.dot(w, left))
        m0, _ = _gauss_interval(spec, t, a, b)
        return float(np.dot(m0, left))
    slope = np.diff(values)[:n_int] / np.diff(times)[:n_int]
    if spec.kind == 'fractional':
        m0, m1 = _frac_linear(spec.alpha, t, a, b)
    else:
        m0, m1 = _gauss_interval(spec, t, a, b, slope)
    return float(np.dot(m0, left) + np.dot(m1, slope))


def convolve(spec: KernelSpec, x: PathGrid, eval_times: Sequence[float]) -> PathGrid:
    """I(X) at eval_times; exact for fractional kernels on step_left and linear paths"""
    if x.interp == Interp.POINTS:
        raise ConfigError("convolve needs a step_left or linear path")
    eval_times = np.asarray(eval_times, dtype=float)
    if eval_times.size and (eval_times.min() < x.times[0] or eval_times.max() > x.times[-1]):
        raise KernelDomainError("evaluation time exceeds the path support")
    out = np.array([_convolve_at(spec, x, float(t)) for t in eval_times])
    return PathGrid(eval_times, out, Interp.POINTS)


def lag_weights(spec: KernelSpec, h: float, n: int) -> np.ndarray:
    """w_k = int_{kh}^{(k+1)h} K(u) du for k = 0..n-1"""
    if h <= 0 or n < 1:
        raise ConfigError("lag weights need h > 0 and n >= 1")
    edges = h * np.arange(n + 1, dtype=float)
    if spec.kind == 'fractional':
        return np.diff(edges ** spec.alpha) / gamma(spec.alpha + 1)
    # u = t - s with t = 0 mirrors the integration variable
    m0, _ = _gauss_interval(spec, 0.0, -edges[1:], -edges[:-1])
    return m0


def convolve_uniform(spec: KernelSpec, values: np.ndarray, h: float) -> np.ndarray:
    """
    Batch convolution of step paths on the uniform grid {0, h, ..., nh}.
    values[:, i] is the path on [ih, (i+1)h); returns I at every grid time, I_0 = 0.
    """
    values = np.atleast_2d(np.asarray(values, dtype=float))
    trials, n = values.shape
    out = np.zeros((trials, n + 1))
    if spec.kind == 'fractional' and spec.alpha == 1.0:
        # exact partial sums keep integer ties exact
        out[:, 1:] = np.cumsum(values, axis=1) * h
        return out
    w = lag_weights(spec, h, n)
    out[:, 1:] = fftconvolve(values, w[None, :], axes=1)[:, :n]
    return out


def lamperti(x: PathGrid, alpha: float, normalize: bool = True) -> PathGrid:
    """Y_u = c e^{-u(alpha+1/2)} x(e^u), c = Gamma(alpha+1) sqrt(2 alpha + 1) when normalized"""
    if x.times[0] < 1:
        raise KernelDomainError("Lamperti transform needs input times >= 1")
    u = np.log(x.times)
    c = gamma(alpha + 1) * np.sqrt(2 * alpha + 1) if normalize else 1.0
    return PathGrid(u, c * np.exp(-u * (alpha + 0.5)) * x.values, Interp.POINTS)
