"""
Survival Monte Carlo - estimates P(sup_{t in J, t <= T} A_t <= barrier(t))
for walks, Gaussian processes and their convolution functionals.
Trials run in fixed batches on a joblib pool; results never depend on the worker count.
"""
import logging
import math
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from . import settings
from .errors import ConfigError
from .kernels import KernelSpec, convolve, convolve_uniform
from .paths import (MASK64, Interp, PathGrid, ProcessSpec, RngStream, derive_stream, gaussian_sampler,
                    ibm_batch, walk_batch)

logger = logging.getLogger(__name__)

J_MODES = ('integers', 'grid')
BARRIER_KINDS = ('constant', 'line', 'power_drift', 'late_zero', 'fractional_drift')
WILSON_Z = 1.959963984540054
# Paths held in memory at once (trials x time points) inside one batch
CHUNK_CELLS = 1 << 22


@dataclass(frozen=True)
class BarrierSpec:
    """
    constant(c): c
    line(c, T0): c - t / sqrt(T0)
    power_drift(c, gamma): 1 - c t^gamma
    late_zero(t1): +inf on [0, t1), 0 on [t1, T]
    fractional_drift(c, order, scale, t1): c - g(t), where
        g(t) = 1/Gamma(order+1) int_0^t (t-s)^order f'(s) ds and f' = scale on [0, t1), 0 after;
        subtracting g from the barrier is the same as adding the drift g to the process
    """
    kind: str
    c: float = 1.0
    T0: float = 1.0
    gamma: float = 0.5
    t1: float = 1.0
    order: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in BARRIER_KINDS:
            raise ConfigError(f"unknown barrier kind '{self.kind}'")
        if self.kind == 'line' and self.T0 <= 0:
            raise ConfigError("line barrier needs T0 > 0")
        if self.kind == 'power_drift' and self.gamma < 0:
            raise ConfigError("power_drift exponent must be >= 0")
        if self.kind == 'late_zero' and self.t1 <= 0:
            raise ConfigError("late_zero barrier needs t1 > 0")
        if self.kind == 'fractional_drift' and (self.order < 0 or self.t1 <= 0):
            raise ConfigError("fractional_drift needs order >= 0 and t1 > 0")

    @classmethod
    def constant(cls, c: float = 1.0) -> 'BarrierSpec':
        return cls('constant', c=float(c))

    @classmethod
    def line(cls, c: float, T0: float) -> 'BarrierSpec':
        return cls('line', c=float(c), T0=float(T0))

    @classmethod
    def power_drift(cls, c: float, gamma: float) -> 'BarrierSpec':
        return cls('power_drift', c=float(c), gamma=float(gamma))

    @classmethod
    def late_zero(cls, t1: float) -> 'BarrierSpec':
        return cls('late_zero', t1=float(t1))

    @classmethod
    def fractional_drift(cls, order: float, scale: float = 1.0, t1: float = 1.0,
                         c: float = 1.0) -> 'BarrierSpec':
        return cls('fractional_drift', c=float(c), order=float(order), scale=float(scale), t1=float(t1))

    def evaluate(self, times) -> np.ndarray:
        t = np.asarray(times, dtype=float)
        if self.kind == 'constant':
            return np.full(t.shape, self.c)
        if self.kind == 'line':
            return self.c - t / math.sqrt(self.T0)
        if self.kind == 'power_drift':
            return 1.0 - self.c * t ** self.gamma
        if self.kind == 'fractional_drift':
            return self.c - drift_profile(self.order, self.scale, self.t1, tuple(np.ravel(t))).reshape(t.shape)
        return np.where(t < self.t1, np.inf, 0.0)

    def to_dict(self) -> Dict:
        fields = {'constant': ('c',), 'line': ('c', 'T0'),
                  'power_drift': ('c', 'gamma'), 'late_zero': ('t1',),
                  'fractional_drift': ('c', 'order', 'scale', 't1')}[self.kind]
        d = {'kind': self.kind}
        d.update({name: getattr(self, name) for name in fields})
        return d

    @classmethod
    def from_dict(cls, d: Dict) -> 'BarrierSpec':
        extra = {k: float(v) for k, v in d.items() if k in ('c', 'T0', 'gamma', 't1', 'order', 'scale')}
        return cls(d['kind'], **extra)


@lru_cache(maxsize=16)
def drift_profile(order: float, scale: float, t1: float, times: Tuple[float, ...]) -> np.ndarray:
    """g at each time: the order+1 fractional integral of the step function scale * 1[0, t1)"""
    t = np.asarray(times, dtype=float)
    if t.size == 0:
        return t
    end = max(float(t.max()), t1) + 1.0
    f_prime = PathGrid([0.0, t1, end], [scale, 0.0, 0.0], Interp.STEP_LEFT)
    g = convolve(KernelSpec.fractional(order + 1.0), f_prime, np.maximum(t, 0.0)).values
    g.setflags(write=False)
    return g


def wilson_interval(n_survived: int, n_trials: int, z: float = WILSON_Z) -> Tuple[float, float]:
    """95% Wilson score interval for a binomial proportion"""
    if n_trials < 1:
        raise ConfigError("Wilson interval needs at least one trial")
    p = n_survived / n_trials
    denom = 1 + z ** 2 / n_trials
    centre = (p + z ** 2 / (2 * n_trials)) / denom
    half = z * math.sqrt(p * (1 - p) / n_trials + z ** 2 / (4 * n_trials ** 2)) / denom
    return min(p, max(0.0, centre - half)), max(p, min(1.0, centre + half))


@dataclass(frozen=True)
class SurvivalEstimate:
    T: float
    J_mode: str
    n_trials: int
    n_survived: int
    p_hat: float
    ci_low: float
    ci_high: float
    master_seed: int
    grid_step: float

    @classmethod
    def from_counts(cls, T: float, J_mode: str, n_trials: int, n_survived: int,
                    master_seed: int, grid_step: float) -> 'SurvivalEstimate':
        if not 0 <= n_survived <= n_trials:
            raise ConfigError("survivor count must lie in [0, n_trials]")
        lo, hi = wilson_interval(n_survived, n_trials)
        return cls(float(T), J_mode, int(n_trials), int(n_survived), n_survived / n_trials,
                   lo, hi, int(master_seed), float(grid_step))

    @property
    def stderr(self) -> float:
        return math.sqrt(self.p_hat * (1 - self.p_hat) / self.n_trials)

    def merge(self, other: 'SurvivalEstimate') -> 'SurvivalEstimate':
        """Combine two partial estimates of the same quantity (counts add)"""
        if (self.T, self.J_mode, self.grid_step) != (other.T, other.J_mode, other.grid_step):
            raise ConfigError("only estimates of the same event can be merged")
        return SurvivalEstimate.from_counts(
            self.T, self.J_mode, self.n_trials + other.n_trials,
            self.n_survived + other.n_survived, self.master_seed, self.grid_step)

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Dict) -> 'SurvivalEstimate':
        return cls.from_counts(d['T'], d['J_mode'], d['n_trials'], d['n_survived'],
                               d['master_seed'], d['grid_step'])


def merge_counts(a: Tuple[int, int], b: Tuple[int, int]) -> Tuple[int, int]:
    """(n_trials, n_survived) monoid; associative and commutative"""
    return a[0] + b[0], a[1] + b[1]


def sub_seed(master_seed: int, label: int) -> int:
    """Deterministic 64-bit seed for an independent sub-experiment (e.g. one T of a curve)"""
    state = np.random.SeedSequence([master_seed & MASK64, label]).generate_state(2, np.uint32)
    return (int(state[0]) << 32) | int(state[1])


# ---------------------------------------------------------------------------
# Path construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Plan:
    process: ProcessSpec
    functional: Optional[KernelSpec]
    barrier: BarrierSpec
    J_mode: str
    grid_step: float
    master_seed: int

    @property
    def step(self) -> float:
        return 1.0 if self.J_mode == 'integers' else self.grid_step


def _validate(process: ProcessSpec, functional: Optional[KernelSpec], J_mode: str,
              T: float, grid_step: float, n_trials: int):
    if J_mode not in J_MODES:
        raise ConfigError(f"unknown J mode '{J_mode}'")
    if T <= 0:
        raise ConfigError("horizon T must be positive")
    if n_trials < 1:
        raise ConfigError("n_trials must be >= 1")
    if J_mode == 'grid' and not grid_step > 0:
        raise ConfigError("grid mode needs grid_step > 0")
    if functional is not None and process.kind in ('stationary_gp', 'ibm_pair'):
        raise ConfigError(f"a functional cannot be applied to a prebuilt '{process.kind}' process")
    if process.kind == 'walk' and J_mode == 'grid' and functional is not None:
        per_unit = 1.0 / grid_step
        if abs(per_unit - round(per_unit)) > 1e-9:
            raise ConfigError("walk functionals on a grid need 1/grid_step to be an integer")


def _n_points(T: float, h: float) -> int:
    return int(math.floor(T / h + 1e-9))


def _walk_paths(plan: _Plan, streams: Sequence[RngStream], T: float):
    n = max(1, math.ceil(T - 1e-9))
    s = walk_batch(plan.process.law, n, streams)
    h = plan.step
    m = _n_points(T, h)
    times = h * np.arange(m + 1)
    if plan.functional is None:
        return times, s[:, np.floor(times + 1e-9).astype(int)]
    # value on [i, i+1) is S_{i+1}: the exact integral at n is S_1 + ... + S_n
    per_unit = int(round(1.0 / h))
    fine = np.repeat(s[:, 1:], per_unit, axis=1)
    a = convolve_uniform(plan.functional, fine, h)
    return times, a[:, :m + 1]


def _gaussian_paths(plan: _Plan, streams: Sequence[RngStream], T: float):
    h = plan.step
    m = _n_points(T, h)
    times = h * np.arange(m + 1)
    process = plan.process
    if process.kind == 'stationary_gp':
        return times, gaussian_sampler(process, times).sample_batch(streams)
    if process.kind == 'ibm_pair':
        if m == 0:
            return times, np.zeros((len(streams), 1))
        _, a = ibm_batch(process.sigma, m * h, h, streams)
        return times, a
    x = np.zeros((len(streams), m + 1))
    if m > 0:
        if process.kind == 'brownian':
            z = np.stack([st.generator().standard_normal(m) for st in streams])
            x[:, 1:] = process.sigma * math.sqrt(h) * np.cumsum(z, axis=1)
        else:
            x[:, 1:] = gaussian_sampler(process, times[1:]).sample_batch(streams)
    if plan.functional is None:
        return times, x
    # step approximation of the sampled path: X_{jh} held on [jh, (j+1)h)
    return times, convolve_uniform(plan.functional, x[:, :-1], h) if m > 0 else x


def sample_functional(plan: _Plan, streams: Sequence[RngStream], T: float) -> Tuple[np.ndarray, np.ndarray]:
    """Evaluation times in J and the functional values, one row per stream"""
    if plan.process.kind == 'walk':
        return _walk_paths(plan, streams, T)
    return _gaussian_paths(plan, streams, T)


def _survivors(plan: _Plan, times: np.ndarray, values: np.ndarray) -> np.ndarray:
    return np.all(values <= plan.barrier.evaluate(times)[None, :], axis=1)


def _batch_bounds(n_trials: int, batch_size: int) -> List[Tuple[int, int]]:
    return [(start, min(start + batch_size, n_trials)) for start in range(0, n_trials, batch_size)]


def _run_batch(plan: _Plan, T_grid: Tuple[float, ...], start: int, stop: int) -> np.ndarray:
    """Survivor counts for each T of the grid from trials [start, stop), sampled once at max T"""
    T_max = max(T_grid)
    columns = _n_points(T_max, plan.step) + 1
    chunk = max(1, CHUNK_CELLS // columns)
    last = [_n_points(T, plan.step) for T in T_grid]
    counts = np.zeros(len(T_grid), dtype=np.int64)
    for lo in range(start, stop, chunk):
        streams = [derive_stream(plan.master_seed, i) for i in range(lo, min(lo + chunk, stop))]
        times, values = sample_functional(plan, streams, T_max)
        alive = _survivors_prefix(plan, times, values)
        counts += alive[:, last].sum(axis=0)
    return counts


def _survivors_prefix(plan: _Plan, times: np.ndarray, values: np.ndarray) -> np.ndarray:
    """alive[i, j] is True while trial i stayed below the barrier at every time <= times[j]"""
    ok = values <= plan.barrier.evaluate(times)[None, :]
    return np.logical_and.accumulate(ok, axis=1)


def _run_trials(plan: _Plan, T_grid: Sequence[float], n_trials: int,
                workers: Optional[int], batch_size: Optional[int]) -> np.ndarray:
    workers = settings.worker_count() if workers is None else workers
    batch_size = batch_size or settings.BATCH_SIZE
    bounds = _batch_bounds(n_trials, batch_size)
    T_grid = tuple(float(T) for T in T_grid)
    logger.debug("%d trials in %d batches on %s workers", n_trials, len(bounds), workers)
    if workers == 1 or len(bounds) == 1:
        parts = [_run_batch(plan, T_grid, lo, hi) for lo, hi in bounds]
    else:
        parts = Parallel(n_jobs=workers)(delayed(_run_batch)(plan, T_grid, lo, hi) for lo, hi in bounds)
    return np.sum(parts, axis=0)


# ---------------------------------------------------------------------------
# Public estimators
# ---------------------------------------------------------------------------

def estimate_survival(process: ProcessSpec, functional: Optional[KernelSpec], barrier: BarrierSpec,
                      J_mode: str, T: float, grid_step: float, n_trials: int, master_seed: int,
                      workers: Optional[int] = None, batch_size: Optional[int] = None) -> SurvivalEstimate:
    """
    P(sup over J in [0, T] of A <= barrier), A = functional(process) or the process itself
    when functional is None. Trial i always uses stream (master_seed, i).
    """
    _validate(process, functional, J_mode, T, grid_step, n_trials)
    plan = _Plan(process, functional, barrier, J_mode, float(grid_step), int(master_seed))
    survived = int(_run_trials(plan, [T], n_trials, workers, batch_size)[0])
    est = SurvivalEstimate.from_counts(T, J_mode, n_trials, survived, master_seed, grid_step)
    logger.info("%s T=%g: p_hat=%.5f [%.5f, %.5f]", process.kind, T, est.p_hat, est.ci_low, est.ci_high)
    return est


def survival_curve(process: ProcessSpec, functional: Optional[KernelSpec], barrier: BarrierSpec,
                   J_mode: str, T_grid: Sequence[float], grid_step: float, n_trials: int,
                   master_seed: int, common_random_numbers: bool = False,
                   workers: Optional[int] = None, batch_size: Optional[int] = None) -> List[SurvivalEstimate]:
    """
    One estimate per T. Independent streams per (T, trial) by default; with
    common_random_numbers every T reuses the paths sampled at max(T_grid), so the
    survival indicators are pathwise nonincreasing in T.
    """
    T_grid = [float(T) for T in T_grid]
    if len(T_grid) < 4:
        raise ConfigError("a survival curve needs at least 4 horizons")
    if any(b <= a for a, b in zip(T_grid, T_grid[1:])):
        raise ConfigError("T_grid must be strictly increasing")
    _validate(process, functional, J_mode, T_grid[-1], grid_step, n_trials)
    if common_random_numbers:
        plan = _Plan(process, functional, barrier, J_mode, float(grid_step), int(master_seed))
        counts = _run_trials(plan, T_grid, n_trials, workers, batch_size)
        return [SurvivalEstimate.from_counts(T, J_mode, n_trials, int(c), master_seed, grid_step)
                for T, c in zip(T_grid, counts)]
    return [estimate_survival(process, functional, barrier, J_mode, T, grid_step, n_trials,
                              sub_seed(master_seed, k), workers, batch_size)
            for k, T in enumerate(T_grid)]


def survival_indicators(process: ProcessSpec, functional: Optional[KernelSpec], barrier: BarrierSpec,
                        J_mode: str, T: float, grid_step: float, trial_indices: Sequence[int],
                        master_seed: int) -> np.ndarray:
    """Per-trial survival indicators (for pathwise comparisons between J modes)"""
    _validate(process, functional, J_mode, T, grid_step, 1)
    plan = _Plan(process, functional, barrier, J_mode, float(grid_step), int(master_seed))
    streams = [derive_stream(master_seed, i) for i in trial_indices]
    times, values = sample_functional(plan, streams, T)
    return _survivors(plan, times, values)


def lower_tail_estimate(process: ProcessSpec, eps: float, n_points: int, n_trials: int,
                        master_seed: int, functional: Optional[KernelSpec] = None,
                        workers: Optional[int] = None) -> SurvivalEstimate:
    """
    P(sup_{[0,1]} X <= eps) for a self-similar process of index H, computed as
    P(sup_{[0,T]} X <= 1) with T = eps^{-1/H} on n_points grid steps.
    """
    H = process.self_similarity
    if H is None or functional is not None:
        raise ConfigError("lower-tail rescaling needs a self-similar process without a functional")
    if not 0 < eps < 1:
        raise ConfigError("eps must lie in (0, 1)")
    T = eps ** (-1.0 / H)
    logger.info("lower tail eps=%g rescaled to T=%.4g (H=%g)", eps, T, H)
    return estimate_survival(process, None, BarrierSpec.constant(1.0), 'grid', T, T / n_points,
                             n_trials, master_seed, workers)
