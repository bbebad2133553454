"""
Analytic Oracles - closed-form probabilities, correlation functions, bounds
and reference exponents used as ground truth by tests and experiments
"""
import logging
import math
import warnings
from dataclasses import dataclass
from typing import Dict, Tuple, Union

import numpy as np
from scipy.integrate import quad
from scipy.special import comb, erf, erfc, hyp2f1, log_ndtr

from .errors import ConfigError, DegenerateBarrierWarning, UnknownExponentError

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)


def normal_cdf(x):
    """Gaussian CDF through erfc, accurate in the lower tail"""
    return 0.5 * erfc(-np.asarray(x, dtype=float) / SQRT2)


# ---------------------------------------------------------------------------
# Correlation models of the Lamperti-stationary processes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorrModel:
    """
    liouville(order): correlation of the normalized Lamperti transform of R^order
    limit: 2 e^{-tau/2} / (1 + e^{-tau})
    """
    kind: str
    order: float = 0.0

    def __post_init__(self):
        if self.kind not in ('liouville', 'limit'):
            raise ConfigError(f"unknown correlation model '{self.kind}'")
        if self.kind == 'liouville' and self.order < 0:
            raise ConfigError("liouville order must be >= 0")

    @classmethod
    def liouville(cls, order: float) -> 'CorrModel':
        return cls('liouville', float(order))

    @classmethod
    def limit(cls) -> 'CorrModel':
        return cls('limit')

    @property
    def integer_order(self) -> bool:
        return self.kind == 'liouville' and float(self.order).is_integer()

    @property
    def extrapolated(self) -> bool:
        """Non-integer orders extend the integer-n formula"""
        return self.kind == 'liouville' and not self.integer_order

    def to_dict(self) -> Dict:
        if self.kind == 'limit':
            return {'kind': 'limit'}
        return {'kind': 'liouville', 'order': self.order}

    @classmethod
    def from_dict(cls, d: Dict) -> 'CorrModel':
        return cls(d['kind'], float(d.get('order', 0.0)))


def _liouville_binomial(n: int, tau: np.ndarray) -> np.ndarray:
    # (1 - q u) = (1 - q) + q (1 - u) with q = e^{-tau}; every term is positive
    q = np.exp(-tau)
    total = np.zeros_like(tau)
    for k in range(n + 1):
        total += comb(n, k, exact=False) * (1 - q) ** (n - k) * q ** k / (n + k + 1)
    return (2 * n + 1) * np.exp(-tau / 2) * total


def _liouville_hypergeometric(order: float, tau: np.ndarray) -> np.ndarray:
    q = np.exp(-tau)
    return (2 * order + 1) * np.exp(-tau / 2) * hyp2f1(-order, 1.0, order + 2.0, q) / (order + 1)


def _liouville_quadrature(order: float, tau: float) -> float:
    q = math.exp(-tau)
    val, _ = quad(lambda u: ((1 - q * u) * (1 - u)) ** order, 0.0, 1.0,
                  epsrel=1e-10, epsabs=0.0, limit=200)
    return (2 * order + 1) * math.exp(-tau / 2) * val


def corr(model: CorrModel, tau: float, method: str = 'quadrature') -> float:
    """
    Correlation at lag tau >= 0.
    liouville: (2a+1) e^{-(a+1/2)tau} int_0^1 (e^tau - u)^a (1-u)^a du,
    evaluated as (2a+1) e^{-tau/2} int_0^1 ((1 - e^{-tau}u)(1-u))^a du
    """
    if tau < 0:
        raise ConfigError("correlation lag must be >= 0")
    if model.kind == 'limit':
        return 2 * math.exp(-tau / 2) / (1 + math.exp(-tau))
    if model.order == 0:
        return math.exp(-tau / 2)
    if method == 'binomial':
        if not model.integer_order:
            raise ConfigError("binomial expansion needs an integer order")
        return float(_liouville_binomial(int(model.order), np.array([tau], float))[0])
    if method == 'hypergeometric':
        return float(_liouville_hypergeometric(model.order, np.array([tau], float))[0])
    return _liouville_quadrature(model.order, tau)


def corr_array(model: CorrModel, tau) -> np.ndarray:
    """Vectorized correlation for covariance matrices (closed forms, no quadrature)"""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ConfigError("correlation lag must be >= 0")
    if model.kind == 'limit':
        return 2 * np.exp(-tau / 2) / (1 + np.exp(-tau))
    if model.order == 0:
        return np.exp(-tau / 2)
    if model.integer_order:
        return _liouville_binomial(int(model.order), tau)
    return _liouville_hypergeometric(model.order, tau)


# ---------------------------------------------------------------------------
# Brownian closed forms
# ---------------------------------------------------------------------------

def bm_no_exit_prob(sigma: float, level: float, T: float) -> float:
    """P(sup_{[0,T]} sigma W <= level) = sqrt(2/pi) int_0^{level/(sigma sqrt T)} e^{-y^2/2} dy"""
    if T <= 0 or sigma <= 0:
        raise ConfigError("T and sigma must be positive")
    if level <= 0:
        return 0.0
    return float(erf(level / (sigma * math.sqrt(2.0 * T))))


def bm_line_no_hit_prob(a: float, slope: float, sigma: float, T: float) -> float:
    """
    P(sigma W_t < a + slope t for all t <= T), Bachelier-Levy formula.
    A start on or above the line returns 0 with a DegenerateBarrierWarning.
    """
    if T <= 0 or sigma <= 0:
        raise ConfigError("T and sigma must be positive")
    if a <= 0:
        warnings.warn("line starts at or below the process start", DegenerateBarrierWarning)
        return 0.0
    scale = sigma * math.sqrt(T)
    first = float(normal_cdf((a + slope * T) / scale))
    # exp(-2 a slope / sigma^2) can overflow, so combine in log space
    log_second = -2 * a * slope / sigma ** 2 + float(log_ndtr((-a + slope * T) / scale))
    return max(0.0, first - math.exp(log_second))


def apriori_bound(kind: str, **params) -> float:
    """
    Lower bounds:
    - skorokhod: sqrt(2 b^2 / (pi sigma^2 t)) with params sigma, b, t
    - polynomial: c T^{-(alpha + 1/2)} with params alpha, T, c
    """
    if kind == 'skorokhod':
        sigma, b, t = params['sigma'], params['b'], params['t']
        if t <= 0 or sigma <= 0:
            raise ConfigError("skorokhod bound needs positive sigma and t")
        return math.sqrt(2 * b ** 2 / (math.pi * sigma ** 2 * t))
    if kind == 'polynomial':
        alpha, T, c = params['alpha'], params['T'], params.get('c', 1.0)
        if T < 1:
            raise ConfigError("polynomial bound needs T >= 1")
        return c * T ** (-(alpha + 0.5))
    raise ConfigError(f"unknown a-priori bound '{kind}'")


def cameron_martin_bracket(p0: float, cm_norm: float) -> Tuple[float, float]:
    """
    Factors (lower, upper) with lower <= P(X+f in S)/P(X in S) <= upper,
    exp(-+sqrt(2 |f|^2 log(1/p0)) - |f|^2/2)
    """
    if p0 <= 0 or p0 > 1:
        raise ConfigError("p0 must lie in (0, 1]")
    if cm_norm < 0:
        raise ConfigError("Cameron-Martin norm must be >= 0")
    n2 = cm_norm ** 2
    spread = math.sqrt(2 * n2 * math.log(1 / p0)) if p0 < 1 else 0.0
    return math.exp(-spread - n2 / 2), math.exp(spread - n2 / 2)


# ---------------------------------------------------------------------------
# Reference exponents
# ---------------------------------------------------------------------------

B_BRACKET = (0.4, 1.0)


def reference_exponent(query: str, **params) -> Union[float, Tuple[float, float]]:
    """
    Known exponents:
    - theta(alpha): 1/2 at alpha=0, 1/4 at alpha=1
    - fbm(hurst): 1 - H
    - lower_tail(theta, hurst): theta / H
    - b_bracket: (0.4, 1.0), combining the published bracket with b <= 4 theta(1)
    - theta_lower_bound(b): b / 4
    """
    if query == 'theta':
        alpha = float(params['alpha'])
        known = {0.0: 0.5, 1.0: 0.25}
        if alpha not in known:
            raise UnknownExponentError(f"theta({alpha}) is unknown")
        return known[alpha]
    if query == 'fbm':
        hurst = float(params['hurst'])
        if not 0 < hurst < 1:
            raise ConfigError("Hurst parameter must lie in (0, 1)")
        return 1.0 - hurst
    if query == 'lower_tail':
        hurst = float(params['hurst'])
        if hurst <= 0:
            raise ConfigError("self-similarity index must be positive")
        return float(params['theta']) / hurst
    if query == 'b_bracket':
        return B_BRACKET
    if query == 'theta_lower_bound':
        return float(params['b']) / 4
    raise UnknownExponentError(f"unknown exponent query '{query}'")
