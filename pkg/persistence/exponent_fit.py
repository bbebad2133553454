"""
Exponent Fitting - power-law exponents of survival curves, exponent comparison,
and finite-horizon bounds from subadditivity
"""
import logging
import math
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, InsufficientDataError

logger = logging.getLogger(__name__)

VERDICT_Z = 2.0
MIN_POINTS = 4
DEFAULT_SKIP = 2


@dataclass(frozen=True)
class ExponentFit:
    theta_hat: float
    stderr: float
    fit_window: Tuple[float, float]
    r_squared: float
    residual_max: float
    log_correction_allowance: float
    intercept: float = 0.0
    n_points: int = 0
    log_power: float = 0.0

    def to_dict(self) -> Dict:
        d = asdict(self)
        d['fit_window'] = list(self.fit_window)
        return d

    @classmethod
    def from_dict(cls, d: Dict) -> 'ExponentFit':
        d = dict(d)
        d['fit_window'] = tuple(d['fit_window'])
        return cls(**d)


@dataclass(frozen=True)
class Verdict:
    mode: str
    holds: bool
    difference: float
    slack: float
    z: float
    allowance: float

    def to_dict(self) -> Dict:
        return asdict(self)


def _points(curve) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    T = np.array([c.T for c in curve], dtype=float)
    p = np.array([c.p_hat for c in curve], dtype=float)
    n = np.array([c.n_trials for c in curve], dtype=float)
    if np.any(p <= 0):
        zero = T[p <= 0]
        raise InsufficientDataError(
            f"zero survivors at T={zero.tolist()}; increase trials")
    return T, p, n


def _log_variance(p: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Delta-method variance of log p_hat, floored so p_hat = 1 keeps a finite weight"""
    return np.maximum(1 - p, 0.5 / n) / (n * p)


def log_correction_allowance(log_power: float, T_max: float) -> float:
    """Slope a (log T)^power correction can add over a window ending at T_max"""
    if log_power == 0 or T_max <= math.e:
        return 0.0
    return max(0.0, log_power * math.log(math.log(T_max)) / math.log(T_max))


def fit_exponent(curve: Sequence, alpha: Optional[float] = None, log_power: Optional[float] = None,
                 skip: Optional[int] = None, weighting: str = 'delta') -> ExponentFit:
    """
    Weighted least squares of log p_hat on log T; theta_hat = -slope.
    Weights are inverse delta-method variances n p / (1 - p).
    The smallest `skip` horizons are dropped (default 2, fewer if that leaves < 4 points).
    The log-correction allowance uses log_power, else 2 (1 + alpha), else none.
    weighting='uniform' fixes all weights to 1, which makes theta_hat exactly invariant
    under rescaling every p_hat by one constant.
    """
    curve = sorted(curve, key=lambda c: c.T)
    if len(curve) < MIN_POINTS:
        raise InsufficientDataError(f"a fit needs at least {MIN_POINTS} curve points, got {len(curve)}")
    if skip is None:
        skip = min(DEFAULT_SKIP, len(curve) - MIN_POINTS)
    if skip < 0 or len(curve) - skip < MIN_POINTS:
        raise ConfigError(f"skipping {skip} points leaves fewer than {MIN_POINTS}")
    if skip:
        logger.debug("fit window drops the %d smallest horizons", skip)
    T, p, n = _points(curve[skip:])

    x = np.log(T)
    y = np.log(p)
    if weighting == 'delta':
        w = 1.0 / _log_variance(p, n)
    elif weighting == 'uniform':
        w = np.ones_like(p)
    else:
        raise ConfigError(f"unknown weighting '{weighting}'")
    X = np.column_stack((np.ones_like(x), x))
    XtW = X.T * w
    cov = np.linalg.inv(XtW @ X)
    beta = cov @ (XtW @ y)
    resid = y - X @ beta

    ybar = np.sum(w * y) / np.sum(w)
    ss_tot = float(np.sum(w * (y - ybar) ** 2))
    ss_res = float(np.sum(w * resid ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0

    if log_power is None:
        log_power = 2 * (1 + alpha) if alpha is not None else 0.0
    fit = ExponentFit(
        theta_hat=float(-beta[1]),
        stderr=float(math.sqrt(max(cov[1, 1], 0.0))),
        fit_window=(float(T[0]), float(T[-1])),
        r_squared=r2,
        residual_max=float(np.max(np.abs(resid))),
        log_correction_allowance=log_correction_allowance(log_power, float(T[-1])),
        intercept=float(beta[0]),
        n_points=int(T.size),
        log_power=float(log_power),
    )
    logger.info("theta_hat=%.4f +- %.4f on [%g, %g]", fit.theta_hat, fit.stderr, *fit.fit_window)
    return fit


def compare_exponents(a: ExponentFit, b: ExponentFit, mode: str = 'equal',
                      z: float = VERDICT_Z) -> Verdict:
    """
    equal: |theta_a - theta_b| <= slack
    monotone_geq: theta_a >= theta_b - slack
    slack = z sqrt(se_a^2 + se_b^2) + both log-correction allowances
    """
    allowance = a.log_correction_allowance + b.log_correction_allowance
    slack = z * math.hypot(a.stderr, b.stderr) + allowance
    diff = a.theta_hat - b.theta_hat
    if mode == 'equal':
        holds = abs(diff) <= slack
    elif mode == 'monotone_geq':
        holds = diff >= -slack
    else:
        raise ConfigError(f"unknown comparison mode '{mode}'")
    return Verdict(mode, bool(holds), float(diff), float(slack), float(z), float(allowance))


def subadditive_rates(curve: Sequence, scale: float = 4.0) -> List[Dict]:
    """r(T) = -scale log p_hat(T) / T with its delta-method standard error, per horizon"""
    T, p, n = _points(curve)
    rates = -scale * np.log(p) / T
    se = scale / T * np.sqrt(_log_variance(p, n))
    return [{'T': float(t), 'rate': float(r), 'stderr': float(s)} for t, r, s in zip(T, rates, se)]


def subadditive_rate(curve: Sequence, scale: float = 4.0,
                     z: float = VERDICT_Z) -> Tuple[float, float, float]:
    """
    Upper bound for the decay constant of a stationary persistence probability.
    log P(T) is superadditive, so every r(T) bounds the limit from above (up to MC error);
    returns the smallest r(T) with its z-stderr band (rate, lo, hi).
    The minimum over noisy rates leans low; the band is that of the selected horizon only.
    """
    rates = subadditive_rates(curve, scale)
    best = min(rates, key=lambda r: r['rate'])
    half = z * best['stderr']
    logger.info("subadditive bound %.4f in [%.4f, %.4f] at T=%g",
                best['rate'], best['rate'] - half, best['rate'] + half, best['T'])
    return best['rate'], best['rate'] - half, best['rate'] + half


def superadditivity_check(p1, p2, p12, n_sigma: float = 3.0) -> Dict:
    """log P(T1+T2) >= log P(T1) + log P(T2) within n_sigma combined standard errors"""
    T, p, n = _points([p1, p2, p12])
    var = _log_variance(p, n)
    lhs = float(np.log(p[2]))
    rhs = float(np.log(p[0]) + np.log(p[1]))
    slack = n_sigma * float(np.sqrt(var.sum()))
    return {'lhs': lhs, 'rhs': rhs, 'slack': slack, 'holds': bool(lhs >= rhs - slack)}


def log_window_constants(curve: Sequence, theta: float, power: float = 4.0) -> Dict:
    """
    Whether one constant C gives C (log T)^-power T^-theta <= p(T) <= C (log T)^power T^-theta
    over the curve: the tightest constants are c_low = max r/(log T)^power and
    c_high = min r (log T)^power with r = p T^theta; a C exists iff c_low <= c_high.
    """
    T, p, _ = _points(curve)
    if np.any(T <= 1):
        raise ConfigError("log window needs T > 1")
    r = p * T ** theta
    lg = np.log(T) ** power
    c_low = float(np.max(r / lg))
    c_high = float(np.min(r * lg))
    return {'c_low': c_low, 'c_high': c_high, 'holds': c_low <= c_high}
