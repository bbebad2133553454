"""
Path Samplers - Deterministic sampling of walks and Gaussian processes
Every sampler is pure given an explicit RngStream
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gamma, hyp2f1

from .errors import ConfigError, DegeneratePathError, FactorizationError
from .oracles import CorrModel, corr_array

logger = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1

# Dense eigen-factorization up to this many points, circulant embedding beyond
DENSE_LIMIT = 4096
CLIP_RELATIVE = 1e-12
NEGATIVE_RELATIVE = 1e-9
CIRCULANT_NEGATIVE = 1e-6


@dataclass(frozen=True)
class RngStream:
    """
    Counter-based stream: Philox keyed by (master_seed, stream_index)
    - equal keys give identical sequences
    - distinct stream_index values are independent streams
    """
    master_seed: int
    stream_index: int
    counter: int = 0

    def generator(self) -> np.random.Generator:
        key = ((self.master_seed & MASK64) << 64) | (self.stream_index & MASK64)
        return np.random.Generator(np.random.Philox(key=key, counter=self.counter))


def derive_stream(master_seed: int, trial_index: int) -> RngStream:
    """Pure trial -> stream mapping, independent of which worker runs the trial"""
    if master_seed < 0 or trial_index < 0:
        raise ConfigError("seeds and trial indices must be non-negative")
    return RngStream(master_seed & MASK64, trial_index & MASK64, 0)


class Interp(str, Enum):
    STEP_LEFT = 'step_left'
    LINEAR = 'linear'
    POINTS = 'points'


@dataclass(frozen=True, eq=False)
class PathGrid:
    """A sampled trajectory: strictly increasing times, finite values, interpolation mode"""
    times: np.ndarray
    values: np.ndarray
    interp: Interp = Interp.POINTS

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.size == 0:
            raise DegeneratePathError("path needs at least one time point")
        if values.shape != times.shape:
            raise DegeneratePathError(
                f"times and values differ in length ({times.size} vs {values.size})")
        if times[0] < 0:
            raise DegeneratePathError("path times must start at or after 0")
        if np.any(np.diff(times) <= 0):
            raise DegeneratePathError("path times must be strictly increasing (no duplicates)")
        if not np.all(np.isfinite(values)):
            raise DegeneratePathError("path values must be finite")
        object.__setattr__(self, 'times', times)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'interp', Interp(self.interp))

    def __len__(self) -> int:
        return self.times.size

    def value_at(self, t) -> np.ndarray:
        """Evaluate the path at time(s) t according to its interpolation mode"""
        t = np.asarray(t, dtype=float)
        if np.any(t < self.times[0]) or np.any(t > self.times[-1]):
            raise DegeneratePathError("evaluation time outside the path support")
        if self.interp == Interp.STEP_LEFT:
            idx = np.searchsorted(self.times, t, side='right') - 1
            return self.values[idx]
        if self.interp == Interp.LINEAR:
            return np.interp(t, self.times, self.values)
        idx = np.searchsorted(self.times, t)
        idx = np.clip(idx, 0, self.times.size - 1)
        if not np.allclose(self.times[idx], t, rtol=0, atol=1e-12):
            raise DegeneratePathError("points-only path queried between its sample times")
        return self.values[idx]


def right_step(walk: PathGrid) -> PathGrid:
    """
    Re-index a walk so the value on [i, i+1) is S_{i+1}.
    Integrating this step path gives the classical integrated walk
    A_n = S_1 + ... + S_n at integers and its linear interpolation in between.
    """
    if walk.interp != Interp.STEP_LEFT:
        raise DegeneratePathError("right_step needs a step_left walk")
    values = np.append(walk.values[1:], walk.values[-1])
    return PathGrid(walk.times, values, Interp.STEP_LEFT)


# ---------------------------------------------------------------------------
# Increment laws (class X: centered, finite variance, exponential moment)
# ---------------------------------------------------------------------------

INCREMENT_LAWS = ('rademacher', 'std_gaussian', 'centered_exponential', 'centered_poisson')


@dataclass(frozen=True)
class IncrementLaw:
    name: str
    rate: float = 1.0

    def __post_init__(self):
        if self.name not in INCREMENT_LAWS:
            raise ConfigError(f"unknown increment law '{self.name}'")
        if self.rate <= 0:
            raise ConfigError("increment law rate must be positive")

    @property
    def variance(self) -> float:
        if self.name == 'centered_exponential':
            return 1.0 / self.rate ** 2
        if self.name == 'centered_poisson':
            return self.rate
        return 1.0

    @property
    def support(self) -> Optional[Tuple[int, ...]]:
        """Finite support (only Rademacher among the sampling laws)"""
        return (-1, 1) if self.name == 'rademacher' else None

    def draw(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.name == 'rademacher':
            return 2.0 * rng.integers(0, 2, size=size) - 1.0
        if self.name == 'std_gaussian':
            return rng.standard_normal(size)
        if self.name == 'centered_exponential':
            return rng.exponential(1.0 / self.rate, size) - 1.0 / self.rate
        return rng.poisson(self.rate, size) - self.rate

    def to_dict(self) -> Dict:
        return {'name': self.name, 'rate': self.rate}

    @classmethod
    def from_dict(cls, d: Dict) -> 'IncrementLaw':
        return cls(d['name'], float(d.get('rate', 1.0)))


def moment_self_test(law: IncrementLaw, n_draws: int = 10 ** 6, beta: float = 0.1,
                     seed: int = 0) -> Dict:
    """
    Empirical E[exp(beta |X_1|)] on two halves of the sample.
    Stable when both halves are finite and agree to 5%.
    """
    rng = derive_stream(seed, 0).generator()
    x = law.draw(rng, n_draws)
    m = np.exp(beta * np.abs(x))
    half = n_draws // 2
    first, second = float(m[:half].mean()), float(m[half:].mean())
    finite = np.isfinite(first) and np.isfinite(second)
    return {
        'law': law.name,
        'moment': float(m.mean()),
        'mean': float(x.mean()),
        'stable': bool(finite and abs(first - second) <= 0.05 * max(first, second)),
    }


# ---------------------------------------------------------------------------
# Process specification
# ---------------------------------------------------------------------------

PROCESS_KINDS = ('walk', 'brownian', 'ibm_pair', 'riemann_liouville', 'fbm', 'stationary_gp')
GAUSSIAN_KINDS = ('brownian', 'riemann_liouville', 'fbm', 'stationary_gp')


@dataclass(frozen=True)
class ProcessSpec:
    kind: str
    law: Optional[IncrementLaw] = None
    sigma: float = 1.0
    alpha: float = 0.0
    hurst: float = 0.5
    corr: Optional[CorrModel] = None

    def __post_init__(self):
        if self.kind not in PROCESS_KINDS:
            raise ConfigError(f"unknown process kind '{self.kind}'")
        if self.kind == 'walk' and self.law is None:
            raise ConfigError("walk process needs an increment law")
        if self.sigma <= 0:
            raise ConfigError("sigma must be positive")
        if self.kind == 'riemann_liouville' and self.alpha < 0:
            raise ConfigError("Riemann-Liouville order must be >= 0")
        if self.kind == 'fbm' and not 0 < self.hurst < 1:
            raise ConfigError("FBM Hurst parameter must lie in (0, 1)")
        if self.kind == 'stationary_gp' and self.corr is None:
            raise ConfigError("stationary_gp needs a correlation model")

    @classmethod
    def walk(cls, law: str, rate: float = 1.0) -> 'ProcessSpec':
        return cls('walk', law=IncrementLaw(law, rate))

    @classmethod
    def brownian(cls, sigma: float = 1.0) -> 'ProcessSpec':
        return cls('brownian', sigma=sigma)

    @classmethod
    def ibm_pair(cls, sigma: float = 1.0) -> 'ProcessSpec':
        return cls('ibm_pair', sigma=sigma)

    @classmethod
    def riemann_liouville(cls, alpha: float) -> 'ProcessSpec':
        return cls('riemann_liouville', alpha=alpha)

    @classmethod
    def fbm(cls, hurst: float) -> 'ProcessSpec':
        return cls('fbm', hurst=hurst)

    @classmethod
    def stationary_gp(cls, corr: CorrModel) -> 'ProcessSpec':
        return cls('stationary_gp', corr=corr)

    @property
    def self_similarity(self) -> Optional[float]:
        """Self-similarity index H of the process, None if not self-similar"""
        if self.kind == 'brownian':
            return 0.5
        if self.kind == 'ibm_pair':
            return 1.5
        if self.kind == 'riemann_liouville':
            return self.alpha + 0.5
        if self.kind == 'fbm':
            return self.hurst
        return None

    def to_dict(self) -> Dict:
        d = {'kind': self.kind}
        if self.kind == 'walk':
            d['law'] = self.law.to_dict()
        if self.kind in ('brownian', 'ibm_pair'):
            d['sigma'] = self.sigma
        if self.kind == 'riemann_liouville':
            d['alpha'] = self.alpha
        if self.kind == 'fbm':
            d['hurst'] = self.hurst
        if self.kind == 'stationary_gp':
            d['corr'] = self.corr.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: Dict) -> 'ProcessSpec':
        kind = d.get('kind')
        if kind == 'walk':
            law = d.get('law')
            if law is None:
                raise ConfigError("walk process needs an increment law")
            if isinstance(law, str):
                law = {'name': law, 'rate': d.get('rate', 1.0)}
            return cls('walk', law=IncrementLaw.from_dict(law))
        if kind == 'stationary_gp':
            return cls('stationary_gp', corr=CorrModel.from_dict(d['corr']))
        return cls(
            kind,
            sigma=float(d.get('sigma', 1.0)),
            alpha=float(d.get('alpha', 0.0)),
            hurst=float(d.get('hurst', 0.5)),
        )


# ---------------------------------------------------------------------------
# Walks
# ---------------------------------------------------------------------------

def sample_walk(law: IncrementLaw, n_steps: int, rng: RngStream) -> PathGrid:
    """Partial sums S_0 = 0, S_1, ..., S_n of i.i.d. increments as a step path"""
    if n_steps < 1:
        raise DegeneratePathError("a walk needs at least one step")
    increments = law.draw(rng.generator(), n_steps)
    values = np.concatenate(([0.0], np.cumsum(increments)))
    return PathGrid(np.arange(n_steps + 1, dtype=float), values, Interp.STEP_LEFT)


def walk_batch(law: IncrementLaw, n_steps: int, streams: Sequence[RngStream]) -> np.ndarray:
    """Partial sums for many trials, one row per stream (rows match sample_walk)"""
    if n_steps < 1:
        raise DegeneratePathError("a walk needs at least one step")
    out = np.zeros((len(streams), n_steps + 1))
    for row, stream in enumerate(streams):
        np.cumsum(law.draw(stream.generator(), n_steps), out=out[row, 1:])
    return out


# ---------------------------------------------------------------------------
# Gaussian processes
# ---------------------------------------------------------------------------

def rl_covariance(s, t, alpha: float, method: str = 'hypergeometric') -> np.ndarray:
    """
    Cov(R_s, R_t) for R = I_alpha(W), i.e. the Wiener integral
    int_0^{s^t} (s-u)^alpha (t-u)^alpha du / Gamma(alpha+1)^2
    """
    s, t = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float))
    lo, hi = np.minimum(s, t), np.maximum(s, t)
    if alpha == 0:
        return lo.copy()
    norm = gamma(alpha + 1) ** 2
    if method == 'quadrature':
        from scipy.integrate import quad
        out = np.empty(lo.shape)
        for idx in np.ndindex(lo.shape):
            a, b = lo[idx], hi[idx]
            if a == 0:
                out[idx] = 0.0
                continue
            val, _ = quad(lambda u: (a - u) ** alpha * (b - u) ** alpha, 0.0, a,
                          epsrel=1e-10, epsabs=0.0, limit=200)
            out[idx] = val / norm
        return out
    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = np.where(hi > 0, lo / np.where(hi > 0, hi, 1.0), 0.0)
        val = lo ** (alpha + 1) * hi ** alpha * hyp2f1(-alpha, 1.0, alpha + 2.0, ratio)
    return np.where(lo > 0, val / ((alpha + 1) * norm), 0.0)


def covariance_matrix(spec: ProcessSpec, grid: Sequence[float]) -> np.ndarray:
    """Analytic covariance of the Gaussian process at the grid points"""
    g = np.asarray(grid, dtype=float)
    s, t = np.meshgrid(g, g, indexing='ij')
    if spec.kind == 'brownian':
        return spec.sigma ** 2 * np.minimum(s, t)
    if spec.kind == 'riemann_liouville':
        return rl_covariance(s, t, spec.alpha)
    if spec.kind == 'fbm':
        h2 = 2 * spec.hurst
        return 0.5 * (s ** h2 + t ** h2 - np.abs(t - s) ** h2)
    if spec.kind == 'stationary_gp':
        return corr_array(spec.corr, np.abs(t - s))
    raise ConfigError(f"'{spec.kind}' has no covariance-factorization sampler")


def _factor(cov: np.ndarray) -> np.ndarray:
    """Symmetric eigen-factor F with F F^T = cov, tiny eigenvalues clipped to zero"""
    lam, vec = np.linalg.eigh(cov)
    top = max(float(lam[-1]), 0.0)
    if top == 0.0:
        return np.zeros((cov.shape[0], 0))
    if lam[0] < -NEGATIVE_RELATIVE * top:
        raise FactorizationError("covariance is not positive semidefinite", float(lam[0]))
    small = lam < CLIP_RELATIVE * top
    if np.any(small):
        logger.warning("clipped %d eigenvalues below %.1e x max", int(small.sum()), CLIP_RELATIVE)
    keep = ~small
    return vec[:, keep] * np.sqrt(lam[keep])


def _is_uniform(grid: np.ndarray) -> bool:
    if grid.size < 2:
        return False
    d = np.diff(grid)
    return bool(np.allclose(d, d[0], rtol=1e-9, atol=0.0))


@dataclass(eq=False)
class GaussianSampler:
    """
    Precomputed sampler for one (spec, grid) pair.
    Read-only after construction, so it can be shared between workers.
    """
    spec: ProcessSpec
    grid: np.ndarray
    method: str = field(init=False)
    _factor: Optional[np.ndarray] = field(init=False, default=None)
    _sqrt_eig: Optional[np.ndarray] = field(init=False, default=None)
    _fixed_zero: Optional[np.ndarray] = field(init=False, default=None)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        if grid.ndim != 1 or grid.size == 0:
            raise DegeneratePathError("sampling grid is empty")
        if np.any(np.diff(grid) <= 0):
            raise DegeneratePathError("sampling grid must be strictly increasing")
        if grid[0] < 0:
            raise DegeneratePathError("sampling grid must start at or after 0")
        if self.spec.kind not in GAUSSIAN_KINDS:
            raise ConfigError(f"'{self.spec.kind}' is not sampled by covariance factorization")
        self.grid = grid
        stationary = self.spec.kind == 'stationary_gp'
        uniform = _is_uniform(grid)
        # Processes started at 0 have zero variance there
        self._fixed_zero = (grid == 0) if not stationary else np.zeros(grid.size, bool)
        if self.spec.kind == 'fbm' and uniform and grid[0] > 0 and np.isclose(grid[0], grid[1] - grid[0]):
            self.method = 'fgn_circulant'
            self._init_fgn()
        elif stationary and uniform and grid.size > DENSE_LIMIT:
            self.method = 'circulant'
            self._init_circulant(corr_array(self.spec.corr, grid - grid[0]))
        else:
            free = grid[~self._fixed_zero]
            if free.size > DENSE_LIMIT:
                raise ConfigError(
                    f"{free.size} grid points exceed the dense limit {DENSE_LIMIT} for '{self.spec.kind}'")
            self.method = 'dense'
            self._factor = _factor(covariance_matrix(self.spec, free))
        logger.debug("gaussian sampler %s on %d points via %s", self.spec.kind, grid.size, self.method)

    def _init_circulant(self, acov: np.ndarray):
        m = acov.size
        row = np.concatenate((acov, acov[-2:0:-1]))
        lam = np.fft.fft(row).real
        top = lam.max()
        if lam.min() < -CIRCULANT_NEGATIVE * top:
            raise FactorizationError("circulant embedding is not nonnegative definite", float(lam.min()))
        if lam.min() < 0:
            logger.warning("clipped %d negative circulant eigenvalues", int((lam < 0).sum()))
        lam = np.where(lam < 0, 0.0, lam)
        self._sqrt_eig = np.sqrt(lam / row.size)
        self._m = m

    def _init_fgn(self):
        # Fractional Gaussian noise on step h, then cumulative sums give FBM
        h = self.grid[1] - self.grid[0]
        m = self.grid.size
        k = np.arange(m, dtype=float)
        h2 = 2 * self.spec.hurst
        acov = 0.5 * (np.abs(k + 1) ** h2 - 2 * np.abs(k) ** h2 + np.abs(k - 1) ** h2) * h ** h2
        self._init_circulant(acov)

    @property
    def n_normals(self) -> int:
        if self._sqrt_eig is not None:
            return 2 * self._sqrt_eig.size
        return self._factor.shape[1]

    def _from_normals(self, z: np.ndarray) -> np.ndarray:
        """Map standard normals (trials x n_normals) to process values (trials x grid)"""
        n = z.shape[0]
        if self._sqrt_eig is not None:
            half = self._sqrt_eig.size
            w = self._sqrt_eig * (z[:, :half] + 1j * z[:, half:])
            x = np.fft.fft(w, axis=1).real[:, :self._m]
            if self.method == 'fgn_circulant':
                x = np.cumsum(x, axis=1)
            return x
        out = np.zeros((n, self.grid.size))
        out[:, ~self._fixed_zero] = z @ self._factor.T
        return out

    def sample_batch(self, streams: Sequence[RngStream]) -> np.ndarray:
        z = np.empty((len(streams), self.n_normals))
        for row, stream in enumerate(streams):
            z[row] = stream.generator().standard_normal(self.n_normals)
        return self._from_normals(z)

    def sample(self, rng: RngStream) -> PathGrid:
        return PathGrid(self.grid, self.sample_batch([rng])[0], Interp.POINTS)


@lru_cache(maxsize=32)
def _cached_sampler(spec: ProcessSpec, grid: Tuple[float, ...]) -> GaussianSampler:
    return GaussianSampler(spec, np.asarray(grid))


def gaussian_sampler(spec: ProcessSpec, grid: Sequence[float]) -> GaussianSampler:
    """Shared sampler; the factorization for a (spec, grid) pair is computed once"""
    return _cached_sampler(spec, tuple(float(t) for t in grid))


def sample_gaussian(spec: ProcessSpec, grid: List[float], rng: RngStream) -> PathGrid:
    """Exact sample (in distribution) of the Gaussian vector at the grid"""
    return gaussian_sampler(spec, grid).sample(rng)


# ---------------------------------------------------------------------------
# Brownian motion together with its integral
# ---------------------------------------------------------------------------

def _ibm_steps(T: float, h: float) -> int:
    if h <= 0 or h > T:
        raise DegeneratePathError("step h must satisfy 0 < h <= T")
    return int(np.floor(T / h + 1e-9))


def _ibm_from_normals(z: np.ndarray, sigma: float, h: float) -> Tuple[np.ndarray, np.ndarray]:
    """z has shape (trials, steps, 2); returns W and A with a leading zero column"""
    dw = sigma * np.sqrt(h) * z[..., 0]
    da = sigma * h ** 1.5 * (0.5 * z[..., 0] + z[..., 1] / (2 * np.sqrt(3.0)))
    n, m = dw.shape
    w = np.zeros((n, m + 1))
    a = np.zeros((n, m + 1))
    np.cumsum(dw, axis=1, out=w[:, 1:])
    # A_{j+1} = A_j + h W_j + int over the step of (W_s - W_j)
    np.cumsum(h * w[:, :-1] + da, axis=1, out=a[:, 1:])
    return w, a


def ibm_batch(sigma: float, T: float, h: float, streams: Sequence[RngStream]) -> Tuple[np.ndarray, np.ndarray]:
    m = _ibm_steps(T, h)
    z = np.empty((len(streams), m, 2))
    for row, stream in enumerate(streams):
        z[row] = stream.generator().standard_normal((m, 2))
    return _ibm_from_normals(z, sigma, h)


def sample_ibm_pair(sigma: float, T: float, h: float, rng: RngStream) -> Tuple[PathGrid, PathGrid]:
    """Exact joint sample of (W, int_0 W) on t_j = j h via 2x2 Gaussian increments"""
    m = _ibm_steps(T, h)
    w, a = ibm_batch(sigma, T, h, [rng])
    times = h * np.arange(m + 1)
    return PathGrid(times, w[0], Interp.POINTS), PathGrid(times, a[0], Interp.POINTS)


def lamperti_variance(alpha: float) -> float:
    """Var(e^{-(alpha+1/2)t} R^alpha_{e^t}), constant in t"""
    return 1.0 / ((2 * alpha + 1) * gamma(alpha + 1) ** 2)
