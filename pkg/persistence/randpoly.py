"""
Random Polynomials - probability that sum_{i<=2n} xi_i x^i <= 0 for every real x,
decided exactly with Sturm sequences over the integers
"""
import logging
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from functools import reduce
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from . import settings
from .errors import ConfigError, DegeneratePathError
from .paths import derive_stream
from .survival_mc import wilson_interval

logger = logging.getLogger(__name__)

MAX_DEGREE = 200
# Rational points tried before a Sturm chain; a sign opposite to the leading
# coefficient certifies a real root
CERTIFICATE_POINTS = tuple(Fraction(p) for p in
                           ('0', '1', '-1', '1/2', '-1/2', '2', '-2', '3/4', '-3/4', '4/3', '-4/3'))


def _trim(c: List[int]) -> List[int]:
    while c and c[-1] == 0:
        c.pop()
    return c


def _content(c: Sequence[int]) -> int:
    return reduce(math.gcd, (abs(v) for v in c), 0)


def _primitive(c: List[int]) -> List[int]:
    """Divide by the positive content; signs are preserved"""
    g = _content(c)
    return [v // g for v in c] if g > 1 else list(c)


def _derivative(c: Sequence[int]) -> List[int]:
    return [i * c[i] for i in range(1, len(c))]


def _prem(a: Sequence[int], b: Sequence[int]) -> Tuple[List[int], int]:
    """Pseudo-remainder lc(b)^delta a mod b with delta = deg a - deg b + 1; also returns the sign of lc(b)^delta"""
    r = list(a)
    db = len(b) - 1
    lb = b[-1]
    delta = len(a) - len(b) + 1
    if delta <= 0:
        return r, 1
    steps = 0
    while len(r) - 1 >= db and r:
        shift = len(r) - 1 - db
        lr = r[-1]
        r = [v * lb for v in r]
        for i, v in enumerate(b):
            r[i + shift] -= lr * v
        r.pop()
        _trim(r)
        steps += 1
    extra = delta - steps
    if extra > 0:
        r = [v * lb ** extra for v in r]
    sign = -1 if (lb < 0 and delta % 2 == 1) else 1
    return r, sign


def _poly_gcd(a: Sequence[int], b: Sequence[int]) -> List[int]:
    """Primitive polynomial remainder sequence"""
    a, b = _primitive(list(a)), _primitive(list(b))
    if len(a) < len(b):
        a, b = b, a
    while b:
        r, _ = _prem(a, b)
        a, b = b, _primitive(_trim(r))
    return _primitive(a)


def _exact_quotient(a: Sequence[int], b: Sequence[int]) -> List[int]:
    """a / b when b divides a over the rationals, returned as a primitive integer polynomial"""
    r = [Fraction(v) for v in a]
    q = [Fraction(0)] * (len(a) - len(b) + 1)
    for shift in range(len(a) - len(b), -1, -1):
        coef = r[shift + len(b) - 1] / b[-1]
        q[shift] = coef
        for i, v in enumerate(b):
            r[i + shift] -= coef * v
    scale = reduce(lambda x, y: x * y // math.gcd(x, y), (v.denominator for v in q), 1)
    return _primitive([int(v * scale) for v in q])


def _eval(c: Sequence[int], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for v in reversed(c):
        acc = acc * x + v
    return acc


def _sign(v) -> int:
    return (v > 0) - (v < 0)


def _sign_changes(signs: Sequence[int]) -> int:
    nz = [s for s in signs if s != 0]
    return sum(1 for a, b in zip(nz, nz[1:]) if a != b)


@dataclass(frozen=True)
class IntPolynomial:
    """Exact polynomial; coefficients low to high as integers after rational scaling"""
    coefficients: Tuple[int, ...]

    def __post_init__(self):
        c = _trim([int(v) for v in self.coefficients])
        object.__setattr__(self, 'coefficients', tuple(c))

    @classmethod
    def from_rationals(cls, coefficients: Sequence) -> 'IntPolynomial':
        """Scale exact rationals (floats are converted without rounding) to integers"""
        fr = [Fraction(v) for v in coefficients]
        scale = reduce(lambda x, y: x * y // math.gcd(x, y), (v.denominator for v in fr), 1)
        return cls(tuple(int(v * scale) for v in fr))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coefficients

    @property
    def leading(self) -> int:
        return self.coefficients[-1]

    def __call__(self, x) -> Fraction:
        return _eval(self.coefficients, Fraction(x))

    def square_free(self) -> List[int]:
        c = list(self.coefficients)
        if len(c) <= 2:
            return _primitive(c)
        g = _poly_gcd(c, _derivative(c))
        if len(g) <= 1:
            return _primitive(c)
        return _exact_quotient(c, g)


def sturm_chain(c: Sequence[int]) -> List[List[int]]:
    """Sturm sequence up to positive factors: s_{k+1} = -rem(s_{k-1}, s_k)"""
    chain = [list(c), _derivative(c)]
    while len(chain[-1]) > 1:
        r, sign = _prem(chain[-2], chain[-1])
        r = _trim(r)
        if not r:
            break
        chain.append(_primitive([-sign * v for v in r]))
    return chain


def real_root_count(p: IntPolynomial) -> int:
    """Number of distinct real roots (Sturm sequence on the square-free part)"""
    if p.is_zero:
        raise DegeneratePathError("the zero polynomial has no finite root count")
    q = p.square_free()
    if len(q) <= 1:
        return 0
    chain = sturm_chain(q)
    at_pos = [_sign(s[-1]) for s in chain]
    at_neg = [_sign(s[-1]) * (-1) ** (len(s) - 1) for s in chain]
    return _sign_changes(at_neg) - _sign_changes(at_pos)


def root_certificate(p: IntPolynomial) -> Optional[Fraction]:
    """A rational point where p is zero or has the sign opposite to its leading coefficient"""
    if p.degree % 2 == 1:
        return CERTIFICATE_POINTS[0]
    lead = _sign(p.leading)
    for x in CERTIFICATE_POINTS:
        if _sign(p(x)) != lead:
            return x
    return None


def has_real_root(p: IntPolynomial) -> bool:
    if root_certificate(p) is not None:
        return True
    return real_root_count(p) > 0


# ---------------------------------------------------------------------------
# Independent oracle: Descartes bisection with exact rationals
# ---------------------------------------------------------------------------

def _poly_mul(a: Sequence[Fraction], b: Sequence[Fraction]) -> List[Fraction]:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def _descartes_bound(c: Sequence[int], lo: Fraction, hi: Fraction) -> int:
    """Sign variations of (1+x)^n p((lo + hi x)/(1+x)): bounds the roots in (lo, hi)"""
    n = len(c) - 1
    total = [Fraction(0)] * (n + 1)
    for i, a in enumerate(c):
        term = [Fraction(a)]
        for _ in range(i):
            term = _poly_mul(term, [lo, hi])
        for _ in range(n - i):
            term = _poly_mul(term, [Fraction(1), Fraction(1)])
        for k, v in enumerate(term):
            total[k] += v
    return _sign_changes([_sign(v) for v in total])


def bisection_root_count(p: IntPolynomial) -> int:
    """Distinct real roots by Descartes-rule bisection inside the Cauchy bound"""
    if p.is_zero:
        raise DegeneratePathError("the zero polynomial has no finite root count")
    q = p.square_free()
    if len(q) <= 1:
        return 0
    bound = 1 + max(Fraction(abs(v), abs(q[-1])) for v in q[:-1])
    count = 0
    stack = [(-bound, bound)]
    while stack:
        lo, hi = stack.pop()
        v = _descartes_bound(q, lo, hi)
        if v == 0:
            continue
        if v == 1:
            count += 1
            continue
        mid = (lo + hi) / 2
        if _eval(q, mid) == 0:
            count += 1
        stack.extend(((lo, mid), (mid, hi)))
    return count


# ---------------------------------------------------------------------------
# Monte Carlo estimate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RandpolyEstimate:
    n: int
    n_trials: int
    n_survived: int
    p_hat: float
    ci_low: float
    ci_high: float
    master_seed: int
    n_positive_leading: int
    p_no_zero_half: float

    @property
    def T(self) -> float:
        """n plays the role of the horizon in exponent fits"""
        return float(self.n)

    @property
    def stderr(self) -> float:
        return math.sqrt(self.p_hat * (1 - self.p_hat) / self.n_trials)

    def to_dict(self) -> Dict:
        return asdict(self)


def sample_polynomial(n: int, master_seed: int, trial: int) -> IntPolynomial:
    xi = derive_stream(master_seed, trial).generator().standard_normal(2 * n + 1)
    return IntPolynomial.from_rationals(xi.tolist())


def _classify(p: IntPolynomial) -> int:
    """-1: no real zero and negative leading coefficient, +1: no zero and positive, 0: has a zero"""
    if has_real_root(p):
        return 0
    return _sign(p.leading)


def _poly_batch(n: int, master_seed: int, start: int, stop: int) -> Tuple[int, int]:
    neg = pos = 0
    for trial in range(start, stop):
        c = _classify(sample_polynomial(n, master_seed, trial))
        neg += c < 0
        pos += c > 0
    return neg, pos


def estimate_nonpositive_prob(n: int, trials: int, seed: int, workers: Optional[int] = None,
                              batch_size: Optional[int] = None) -> RandpolyEstimate:
    """P(sum xi_i x^i <= 0 for all x) for i.i.d. standard Gaussian xi_0..xi_2n"""
    if n < 0:
        raise ConfigError("n must be >= 0")
    if 2 * n > MAX_DEGREE:
        raise ConfigError(f"degree 2n={2 * n} exceeds the cap {MAX_DEGREE}")
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    workers = settings.worker_count() if workers is None else workers
    batch_size = batch_size or settings.BATCH_SIZE
    bounds = [(lo, min(lo + batch_size, trials)) for lo in range(0, trials, batch_size)]
    if workers == 1 or len(bounds) == 1:
        parts = [_poly_batch(n, seed, lo, hi) for lo, hi in bounds]
    else:
        parts = Parallel(n_jobs=workers)(delayed(_poly_batch)(n, seed, lo, hi) for lo, hi in bounds)
    neg = sum(p[0] for p in parts)
    pos = sum(p[1] for p in parts)
    lo, hi = wilson_interval(neg, trials)
    est = RandpolyEstimate(n, trials, neg, neg / trials, lo, hi, seed, pos, (neg + pos) / (2 * trials))
    logger.info("randpoly n=%d: p_hat=%.5f (no-zero/2 %.5f)", n, est.p_hat, est.p_no_zero_half)
    return est


def discriminant_oracle(trials: int, seed: int) -> Tuple[int, int]:
    """Degree-2 event xi_2 < 0 and xi_1^2 - 4 xi_0 xi_2 < 0 on the same streams; (survived, trials)"""
    hits = 0
    for trial in range(trials):
        x0, x1, x2 = derive_stream(seed, trial).generator().standard_normal(3)
        hits += bool(x2 < 0 and x1 * x1 - 4 * x0 * x2 < 0)
    return hits, trials


def sign_symmetry_check(est: RandpolyEstimate, n_sigma: float = 3.0) -> Dict:
    """Negative- and positive-leading no-zero counts agree within n_sigma combined stderr"""
    p_neg = est.n_survived / est.n_trials
    p_pos = est.n_positive_leading / est.n_trials
    se = math.sqrt((p_neg * (1 - p_neg) + p_pos * (1 - p_pos)) / est.n_trials)
    return {'p_negative': p_neg, 'p_positive': p_pos, 'slack': n_sigma * se,
            'holds': abs(p_neg - p_pos) <= n_sigma * se}
