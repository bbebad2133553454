"""
Property Suites - exact and statistical checks of the inequalities behind the
survival-exponent results: FKG, Slepian correlation domination, Cameron-Martin
brackets, the fractional semigroup and the grid/continuum sandwich
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, ContractViolation, DegeneratePathError
from .kernels import KernelSpec, convolve
from .oracles import (CorrModel, apriori_bound, bm_line_no_hit_prob, bm_no_exit_prob,
                      cameron_martin_bracket, corr_array, normal_cdf)
from .paths import IncrementLaw, Interp, PathGrid, ProcessSpec, derive_stream, right_step, sample_walk
from .survival_mc import BarrierSpec, estimate_survival

logger = logging.getLogger(__name__)

FKG_MAX_STEPS = 12
SLEPIAN_MAX_ORDER = 50
SLEPIAN_TOL = 1e-9
SEMIGROUP_EXACT_TOL = 1e-9
# Expected grid-sup deficit of Brownian motion, in units of sigma sqrt(h)
GRID_OVERSHOOT = 0.5826


# ---------------------------------------------------------------------------
# FKG on finite lattices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FiniteLaw:
    """Increment law with finite support and exact rational probabilities"""
    values: Tuple[Fraction, ...]
    probs: Tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.values) != len(self.probs) or not self.values:
            raise ConfigError("finite law needs matching values and probabilities")
        if sum(self.probs) != 1 or any(p < 0 for p in self.probs):
            raise ConfigError("finite law probabilities must be >= 0 and sum to 1")
        if list(self.values) != sorted(set(self.values)):
            raise ConfigError("finite law values must be distinct and increasing")

    @classmethod
    def uniform(cls, values: Sequence) -> 'FiniteLaw':
        vals = tuple(sorted(Fraction(v) for v in values))
        return cls(vals, tuple(Fraction(1, len(vals)) for _ in vals))

    @classmethod
    def from_increment_law(cls, law: IncrementLaw) -> 'FiniteLaw':
        if law.support is None:
            raise ConfigError(f"'{law.name}' has no finite support; FKG needs enumeration")
        return cls.uniform(law.support)


@dataclass
class MonotoneFn:
    """
    f(x) = g(x_1, x_2 - x_1, ..., x_n - x_{n-1}) with g monotone in every increment.
    Either a sum of ramps w max(0, d_i - a) (a=None gives the linear term w d_i)
    or an arbitrary callable on positions, which must pass the lattice audit.
    """
    direction: str
    ramps: Tuple[Tuple[int, Optional[Fraction], Fraction], ...] = ()
    fn: Optional[Callable] = None
    description: str = ''
    audited: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.direction not in ('increasing', 'decreasing'):
            raise ConfigError(f"unknown monotone direction '{self.direction}'")
        if self.fn is None and any(w < 0 for _, _, w in self.ramps):
            raise ConfigError("ramp weights must be nonnegative")

    @classmethod
    def coordinate(cls, index: int, direction: str = 'increasing') -> 'MonotoneFn':
        """x_index, i.e. the sum of the first index increments (1-based)"""
        return cls(direction, fn=lambda x: x[index - 1] if direction == 'increasing' else -x[index - 1],
                   description=f"{'' if direction == 'increasing' else '-'}x_{index}")

    @classmethod
    def indicator_below(cls, level, upto: int) -> 'MonotoneFn':
        """1{x_1 <= level, ..., x_upto <= level}, decreasing"""
        level = Fraction(level)
        return cls('decreasing', fn=lambda x: int(all(v <= level for v in x[:upto])),
                   description=f"1{{x_1..x_{upto} <= {level}}}")

    def __call__(self, positions: Sequence[Fraction]) -> Fraction:
        if self.fn is not None:
            return Fraction(self.fn(positions))
        increments = [positions[0]] + [b - a for a, b in zip(positions, positions[1:])]
        total = Fraction(0)
        for i, a, w in self.ramps:
            d = increments[i]
            total += w * (d if a is None else max(Fraction(0), d - a))
        return total if self.direction == 'increasing' else -total


def _positions(increments: Sequence[Fraction]) -> Tuple[Fraction, ...]:
    return tuple(itertools.accumulate(increments))


def audit_monotone(f: MonotoneFn, law: FiniteLaw, n: int) -> None:
    """Check g is monotone in each increment on the support lattice; raises ContractViolation"""
    sign = 1 if f.direction == 'increasing' else -1
    values = law.values
    for seq in itertools.product(range(len(values)), repeat=n):
        base = f(_positions([values[k] for k in seq]))
        for i in range(n):
            if seq[i] + 1 < len(values):
                bumped = list(seq)
                bumped[i] += 1
                moved = f(_positions([values[k] for k in bumped]))
                if sign * (moved - base) < 0:
                    raise ContractViolation(
                        f"{f.description or 'function'} is not {f.direction} in increment {i + 1}")
    f.audited = True


def fkg_check(law, n: int, f: MonotoneFn, g: MonotoneFn) -> Dict:
    """Exact E[f g] >= E[f] E[g] by enumerating every increment sequence"""
    if isinstance(law, IncrementLaw):
        law = FiniteLaw.from_increment_law(law)
    if not 1 <= n <= FKG_MAX_STEPS:
        raise ConfigError(f"FKG enumeration supports 1 <= n <= {FKG_MAX_STEPS}")
    if f.direction != g.direction:
        raise ConfigError("FKG needs f and g of the same monotonicity direction")
    for fn in (f, g):
        if not fn.audited:
            audit_monotone(fn, law, n)

    e_fg = e_f = e_g = Fraction(0)
    for seq in itertools.product(range(len(law.values)), repeat=n):
        weight = Fraction(1)
        for k in seq:
            weight *= law.probs[k]
        x = _positions([law.values[k] for k in seq])
        fx, gx = f(x), g(x)
        e_fg += weight * fx * gx
        e_f += weight * fx
        e_g += weight * gx
    lhs, rhs = e_fg, e_f * e_g
    holds = lhs >= rhs - Fraction(1, 10 ** 12) * abs(rhs)
    return {'lhs': lhs, 'rhs': rhs, 'holds': bool(holds)}


def random_monotone_fn(rng: np.random.Generator, law: FiniteLaw, n: int, direction: str,
                       max_terms: int = 4) -> MonotoneFn:
    """Sum of 1..max_terms ramps on random increments with thresholds inside the support"""
    terms = []
    for _ in range(int(rng.integers(1, max_terms + 1))):
        i = int(rng.integers(0, n))
        a = law.values[int(rng.integers(0, len(law.values)))]
        w = Fraction(int(rng.integers(1, 5)), int(rng.integers(1, 4)))
        terms.append((i, a, w))
    f = MonotoneFn(direction, ramps=tuple(terms), description=f"ramps{terms}")
    audit_monotone(f, law, n)
    return f


def fkg_suite(law, n_pairs: int = 1000, n_max: int = 6, seed: int = 0) -> Dict:
    """Randomized monotone pairs, exact expectations; reports violations with replay seeds"""
    if isinstance(law, IncrementLaw):
        law = FiniteLaw.from_increment_law(law)
    violations = []
    for case in range(n_pairs):
        rng = derive_stream(seed, case).generator()
        n = int(rng.integers(1, n_max + 1))
        direction = 'increasing' if rng.integers(0, 2) else 'decreasing'
        f = random_monotone_fn(rng, law, n, direction)
        g = random_monotone_fn(rng, law, n, direction)
        report = fkg_check(law, n, f, g)
        if not report['holds']:
            violations.append({'case': case, 'seed': seed, 'n': n,
                               'f': f.description, 'g': g.description})
    logger.info("FKG suite: %d pairs, %d violations", n_pairs, len(violations))
    return {'suite': 'fkg', 'cases': n_pairs, 'violations': len(violations),
            'failures': violations, 'holds': not violations}


# ---------------------------------------------------------------------------
# Grid / continuum sandwich for the integrated walk
# ---------------------------------------------------------------------------

def sandwich_indicators(walk: PathGrid, T: float, level: float = 1.0) -> Tuple[int, int, int]:
    """
    Survival indicators of the integrated walk A (A_n = S_1 + ... + S_n, linear in between):
    over integers in [0, ceil T], over the continuum [0, T], over integers in [0, T]
    """
    if walk.interp != Interp.STEP_LEFT:
        raise DegeneratePathError("sandwich check needs a step_left walk")
    upper_n = math.ceil(T)
    if walk.times[0] != 0 or walk.times[-1] < upper_n:
        raise DegeneratePathError(f"walk must cover [0, {upper_n}]")
    integers = np.arange(upper_n + 1, dtype=float)
    a = convolve(KernelSpec.fractional(1.0), right_step(walk), np.append(integers, T)).values
    a_int, a_T = a[:-1], a[-1]
    floor_n = int(math.floor(T))
    lower = int(np.all(a_int <= level))
    # A is linear between integers, so its sup over [0, T] sits at an integer or at T
    middle = int(np.all(a_int[:floor_n + 1] <= level) and a_T <= level)
    upper = int(np.all(a_int[:floor_n + 1] <= level))
    return lower, middle, upper


def sandwich_check(walk: PathGrid, T: float) -> bool:
    lower, middle, upper = sandwich_indicators(walk, T)
    return lower <= middle <= upper


def sandwich_suite(n_paths: int = 10 ** 4, T_list: Sequence[float] = (3.5, 7.25),
                   seed: int = 0) -> Dict:
    law = IncrementLaw('rademacher')
    violations = []
    for T in T_list:
        steps = math.ceil(T)
        for trial in range(n_paths):
            walk = sample_walk(law, steps, derive_stream(seed, trial))
            if not sandwich_check(walk, T):
                violations.append({'T': T, 'trial': trial, 'seed': seed})
    logger.info("sandwich suite: %d paths x %d horizons, %d violations",
                n_paths, len(T_list), len(violations))
    return {'suite': 'sandwich', 'cases': n_paths * len(T_list), 'violations': len(violations),
            'failures': violations, 'holds': not violations}


# ---------------------------------------------------------------------------
# Fractional semigroup
# ---------------------------------------------------------------------------

def semigroup_check(alpha: float, beta: float, path: PathGrid, h_list: Sequence[float],
                    eval_times: Optional[Sequence[float]] = None, inner: str = 'step') -> List[float]:
    """
    max_t |I_alpha(I_beta(X))_t - I_{alpha+beta}(X)_t| per grid step h.
    I_beta(X) is computed exactly at the step-h grid, then re-discretized as a step
    (left values) or linear path before applying I_alpha; the reference is exact.
    Order 0 is the identity.
    """
    if path.interp != Interp.STEP_LEFT:
        raise DegeneratePathError("semigroup check needs a step_left path")
    if inner not in ('step', 'linear'):
        raise ConfigError(f"unknown inner discretization '{inner}'")
    if alpha < 0 or beta < 0:
        raise ConfigError("orders must be >= 0")
    t0, t1 = path.times[0], path.times[-1]
    eval_times = np.asarray(path.times[1:] if eval_times is None else eval_times, dtype=float)
    if alpha == 0 or beta == 0:
        return [0.0 for _ in h_list]
    reference = convolve(KernelSpec.fractional(alpha + beta), path, eval_times).values
    errors = []
    for h in h_list:
        grid = t0 + h * np.arange(int(math.floor((t1 - t0) / h + 1e-9)) + 1)
        inner_values = convolve(KernelSpec.fractional(beta), path, grid).values
        interp = Interp.STEP_LEFT if inner == 'step' else Interp.LINEAR
        inner_path = PathGrid(grid, inner_values, interp)
        composed = convolve(KernelSpec.fractional(alpha), inner_path, eval_times).values
        errors.append(float(np.max(np.abs(composed - reference))))
    logger.debug("semigroup errors %s over h=%s", errors, list(h_list))
    return errors


def semigroup_suite(n_paths: int = 50, n_steps: int = 8, alpha: float = 0.5, beta: float = 0.7,
                    h_list: Sequence[float] = (1 / 8, 1 / 16, 1 / 32), seed: int = 0) -> Dict:
    """
    On Rademacher walks: I_1(I_1 X) = I_2 X exactly at integer times with a linear inner
    path, and for (alpha, beta) the composition error does not grow as h shrinks.
    """
    law = IncrementLaw('rademacher')
    failures = []
    worst_exact = 0.0
    for trial in range(n_paths):
        path = sample_walk(law, n_steps, derive_stream(seed, trial))
        exact = max(semigroup_check(1.0, 1.0, path, [1.0, 0.5], inner='linear'))
        worst_exact = max(worst_exact, exact)
        errors = semigroup_check(alpha, beta, path, h_list)
        if exact > SEMIGROUP_EXACT_TOL or errors[-1] > errors[0] + SEMIGROUP_EXACT_TOL:
            failures.append({'trial': trial, 'seed': seed, 'exact_error': exact, 'errors': errors})
    logger.info("semigroup suite: %d paths, %d failures", n_paths, len(failures))
    return {'suite': 'semigroup', 'cases': n_paths, 'worst_exact_error': worst_exact,
            'violations': len(failures), 'failures': failures, 'holds': not failures}


# ---------------------------------------------------------------------------
# Slepian correlation domination
# ---------------------------------------------------------------------------

def slepian_corr_check(n_max: int = SLEPIAN_MAX_ORDER, tau_max: float = 10.0,
                       step: float = 0.01) -> Dict:
    """corr_liouville(n) <= corr_limit on the tau grid for n = 1..n_max"""
    if not 1 <= n_max <= SLEPIAN_MAX_ORDER:
        raise ConfigError(f"n_max must lie in [1, {SLEPIAN_MAX_ORDER}]")
    tau = step * np.arange(int(math.floor(tau_max / step + 1e-9)) + 1)
    limit = corr_array(CorrModel.limit(), tau)
    max_violation = 0.0
    profile = []
    for n in range(1, n_max + 1):
        gap = limit - corr_array(CorrModel.liouville(n), tau)
        max_violation = max(max_violation, float(max(0.0, -gap.min())))
        profile.append({'n': n, 'gap_at_0': float(gap[0]), 'max_gap': float(gap.max()),
                        'tau_of_max_gap': float(tau[int(np.argmax(gap))])})
    return {'suite': 'slepian', 'max_violation': max_violation, 'profile': profile,
            'holds': max_violation <= SLEPIAN_TOL}


# ---------------------------------------------------------------------------
# Cameron-Martin drift brackets in finite dimension
# ---------------------------------------------------------------------------

def _drift_case(case: int, dim: int, mc_trials: int, seed: int) -> Dict:
    rng = derive_stream(seed, case).generator()
    d = int(rng.integers(1, dim + 1))
    a = rng.standard_normal((d, d))
    sigma = a @ a.T + 0.1 * np.eye(d)
    try:
        chol = np.linalg.cholesky(sigma)
        sigma_inv = np.linalg.inv(sigma)
    except np.linalg.LinAlgError:
        return {'case': case, 'skipped': True}
    f = rng.standard_normal(d) * rng.uniform(0.1, 1.0) / math.sqrt(d)
    cm_norm = float(math.sqrt(f @ sigma_inv @ f))

    # box {x <= c sd_i}, c calibrated on separate draws so p0 lands in [0.05, 0.8]
    sd = np.sqrt(np.diag(sigma))
    target = rng.uniform(0.05, 0.8)
    calib = (rng.standard_normal((2000, d)) @ chol.T) / sd
    c = float(np.quantile(calib.max(axis=1), target))
    box = c * sd

    x0 = rng.standard_normal((mc_trials, d)) @ chol.T
    x1 = rng.standard_normal((mc_trials, d)) @ chol.T + f
    p0 = float(np.mean(np.all(x0 <= box, axis=1)))
    pf = float(np.mean(np.all(x1 <= box, axis=1)))
    if p0 == 0 or pf == 0:
        return {'case': case, 'skipped': True}
    ratio = pf / p0
    se = ratio * math.sqrt((1 - p0) / (mc_trials * p0) + (1 - pf) / (mc_trials * pf))
    lo, hi = cameron_martin_bracket(p0, cm_norm)
    ok = lo - 3 * se <= ratio <= hi + 3 * se
    return {'case': case, 'skipped': False, 'dim': d, 'p0': p0, 'ratio': ratio,
            'lower': lo, 'upper': hi, 'stderr': se, 'violation': not ok, 'seed': seed}


def drift_bracket_check(dim: int = 8, n_cases: int = 1000, mc_trials: int = 20000,
                        seed: int = 0) -> Dict:
    """Random Gaussian vectors, shifts and one-sided boxes against the bracket factors"""
    if not 1 <= dim <= 64:
        raise ConfigError("dim must lie in [1, 64]")
    cases = [_drift_case(k, dim, mc_trials, seed) for k in range(n_cases)]
    run = [c for c in cases if not c['skipped']]
    skipped = len(cases) - len(run)
    if skipped:
        logger.warning("drift brackets: %d singular or empty cases skipped", skipped)
    failures = [c for c in run if c['violation']]
    # 3 sigma on each side: about 0.3% false positives
    budget = max(1, math.ceil(0.003 * len(run)))
    return {'suite': 'drift', 'cases': len(run), 'skipped': skipped,
            'violations': len(failures), 'budget': budget, 'failures': failures,
            'holds': len(failures) <= budget}


def drift_example_1d(shift: float = 0.5) -> Dict:
    """X ~ N(0,1), S = (-inf, 0]: ratio Phi(-shift)/Phi(0) against the bracket at p0 = 1/2"""
    ratio = float(normal_cdf(-shift)) / 0.5
    lo, hi = cameron_martin_bracket(0.5, abs(shift))
    return {'ratio': ratio, 'lower': lo, 'upper': hi, 'holds': lo <= ratio <= hi}


# ---------------------------------------------------------------------------
# Closed-form agreement
# ---------------------------------------------------------------------------

def _grid_slack(oracle: Callable[[float], float], level: float, sigma: float, h: float) -> float:
    """Discrete monitoring misses crossings; shifting the level by 0.5826 sigma sqrt(h) bounds the bias"""
    return max(0.0, oracle(level + GRID_OVERSHOOT * sigma * math.sqrt(h)) - oracle(level))


def closed_form_check(T_list: Sequence[float] = (1.0, 10.0, 100.0), n_trials: int = 20000,
                      points_per_horizon: int = 1024, seed: int = 0,
                      workers: Optional[int] = None) -> Dict:
    """
    Monte Carlo Brownian survival against the exact no-exit and line formulas,
    plus the asymptotic sharpness of sqrt(2 b^2 / (pi sigma^2 t)).
    """
    sigma = 1.0
    rows = []
    for k, T in enumerate(T_list):
        h = T / points_per_horizon
        est = estimate_survival(ProcessSpec.brownian(sigma), None, BarrierSpec.constant(1.0),
                                'grid', T, h, n_trials, seed + 2 * k, workers)
        exact = bm_no_exit_prob(sigma, 1.0, T)
        slack = _grid_slack(lambda lv: bm_no_exit_prob(sigma, lv, T), 1.0, sigma, h)
        rows.append({'check': 'no_exit', 'T': T, 'p_hat': est.p_hat, 'oracle': exact,
                     'slack': slack,
                     'holds': exact - 3 * est.stderr <= est.p_hat <= exact + 3 * est.stderr + slack})

        slope = -1.0 / math.sqrt(T)
        est = estimate_survival(ProcessSpec.brownian(sigma), None, BarrierSpec.line(1.0, T),
                                'grid', T, h, n_trials, seed + 2 * k + 1, workers)
        exact = bm_line_no_hit_prob(1.0, slope, sigma, T)
        slack = _grid_slack(lambda lv: bm_line_no_hit_prob(lv, slope, sigma, T), 1.0, sigma, h)
        rows.append({'check': 'line', 'T': T, 'p_hat': est.p_hat, 'oracle': exact,
                     'slack': slack,
                     'holds': exact - 3 * est.stderr <= est.p_hat <= exact + 3 * est.stderr + slack})

    # sqrt(2 b^2/(pi t)) is the b/sqrt(t) -> 0 equivalent of the exact probability
    for b, t in ((1.0, 1.0), (1.0, 100.0), (1.0, 1e4)):
        bound = apriori_bound('skorokhod', sigma=sigma, b=b, t=t)
        exact = bm_no_exit_prob(sigma, b, t)
        ratio = exact / bound
        sharp = b / math.sqrt(t) <= 1e-2
        rows.append({'check': 'skorokhod', 'b': b, 't': t, 'bound': bound, 'oracle': exact,
                     'ratio': ratio, 'holds': ratio <= 1.0 and (not sharp or ratio >= 0.95)})
    return {'suite': 'closed_form', 'rows': rows, 'holds': all(r['holds'] for r in rows)}


SUITES = {
    'fkg': lambda **kw: fkg_suite(IncrementLaw('rademacher'), **kw),
    'fkg_three_point': lambda **kw: fkg_suite(FiniteLaw.uniform((-1, 0, 1)), **kw),
    'sandwich': sandwich_suite,
    'semigroup': semigroup_suite,
    'slepian': slepian_corr_check,
    'drift': drift_bracket_check,
    'closed_form': closed_form_check,
}


def run_suite(name: str, **params) -> Dict:
    if name not in SUITES:
        raise ConfigError(f"unknown property suite '{name}'")
    return SUITES[name](**params)
