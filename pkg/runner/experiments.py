"""
Experiment Composition - turns a JSON experiment config into estimates, fits and verdicts
"""
import hashlib
import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Tuple

from persistence.errors import ConfigError
from persistence.exponent_fit import (VERDICT_Z, compare_exponents, fit_exponent, log_window_constants,
                                      subadditive_rate, subadditive_rates, superadditivity_check)
from persistence.kernels import KernelSpec
from persistence.oracles import CorrModel
from persistence.paths import ProcessSpec
from persistence.property_suites import run_suite
from persistence.randpoly import discriminant_oracle, estimate_nonpositive_prob, sign_symmetry_check
from persistence.survival_mc import BarrierSpec, estimate_survival, sub_seed, survival_curve

logger = logging.getLogger(__name__)

EXPERIMENTS = ('survival_curve', 'exponent_universality', 'theta_monotonicity', 'b_upper_bound',
               'randpoly_curve', 'property_suite', 'drift_invariance', 'barrier_switch',
               'fbm_vs_liouville')
# Keys that locate a run but never change its results
UNHASHED_KEYS = ('output_dir',)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(',', ':'))


def git_blob_sha1(text: str) -> str:
    data = text.encode('utf-8')
    return hashlib.sha1(b'blob %d\x00' % len(data) + data).hexdigest()


@dataclass
class ExperimentConfig:
    """A validated experiment document; `params` holds everything except the experiment name"""
    experiment: str
    params: Dict[str, Any]

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment '{self.experiment}'")

    @classmethod
    def from_dict(cls, d: Dict) -> 'ExperimentConfig':
        if not isinstance(d, dict) or 'experiment' not in d:
            raise ConfigError("config must be an object with an 'experiment' key")
        params = {k: v for k, v in d.items() if k != 'experiment'}
        return cls(d['experiment'], params)

    def to_dict(self) -> Dict:
        d = {'experiment': self.experiment}
        d.update(self.params)
        return d

    def canonical(self) -> str:
        d = {k: v for k, v in self.to_dict().items() if k not in UNHASHED_KEYS}
        return canonical_json(d)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode('utf-8')).hexdigest()

    @property
    def content_hash(self) -> str:
        return git_blob_sha1(self.canonical())

    @property
    def master_seed(self) -> int:
        return int(self.params.get('master_seed', 42))


@dataclass
class ExperimentResult:
    records: List[Dict] = field(default_factory=list)
    verdicts: Dict[str, bool] = field(default_factory=dict)
    summary: Dict[str, Any] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Spec parsing helpers
# ---------------------------------------------------------------------------

def _require(params: Dict, *keys):
    missing = [k for k in keys if k not in params]
    if missing:
        raise ConfigError(f"config is missing {', '.join(missing)}")


def parse_process(d) -> ProcessSpec:
    if isinstance(d, str):
        d = {'kind': d}
    if d.get('kind') == 'stationary_gp' and 'corr' not in d:
        d = dict(d, corr={'kind': 'limit'})
    return ProcessSpec.from_dict(d)


def parse_functional(d) -> Optional[KernelSpec]:
    if d is None or d == 'identity' or (isinstance(d, dict) and d.get('kind') == 'identity'):
        return None
    return KernelSpec.from_dict(d)


def parse_barrier(d) -> BarrierSpec:
    if d is None:
        return BarrierSpec.constant(1.0)
    return BarrierSpec.from_dict(d)


def _in_range(value: float, bounds) -> bool:
    lo, hi = bounds
    return (lo is None or value >= lo) and (hi is None or value <= hi)


def _jsonable(obj):
    """Exact rationals become strings, tuples become lists"""
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _run_curve(spec: Dict, master_seed: int, label: str) -> Tuple[List[Dict], Dict]:
    """One survival curve plus its exponent fit; `spec` carries process/functional/barrier/T_grid"""
    _require(spec, 'process', 'T_grid', 'trials')
    process = parse_process(spec['process'])
    functional = parse_functional(spec.get('functional'))
    barrier = parse_barrier(spec.get('barrier'))
    J_mode = spec.get('J_mode', 'integers')
    grid_step = float(spec.get('grid_step', 1.0))
    curve = survival_curve(process, functional, barrier, J_mode, spec['T_grid'], grid_step,
                           int(spec['trials']), master_seed,
                           common_random_numbers=bool(spec.get('common_random_numbers', False)))
    records = []
    for est in curve:
        rec = {'kind': 'estimate', 'label': label}
        rec.update(est.to_dict())
        records.append(rec)
    fit = fit_exponent(curve, alpha=spec.get('alpha'), log_power=spec.get('log_power'),
                       skip=spec.get('skip'))
    return records, {'label': label, 'grid_step': grid_step, 'fit': fit, 'curve': curve}


def _case_spec(params: Dict, case: Dict) -> Dict:
    merged = {k: v for k, v in params.items() if k != 'cases'}
    merged.update(case)
    return merged


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

def run_survival_curve(cfg: ExperimentConfig) -> ExperimentResult:
    p = cfg.params
    records, out = _run_curve(p, cfg.master_seed, p.get('label', 'curve'))
    fit = out['fit']
    result = ExperimentResult(records, {}, {'fit': fit.to_dict(), 'z': VERDICT_Z,
                                            'grid_step': out['grid_step']})
    if 'theta_range' in p:
        result.verdicts['theta_in_range'] = _in_range(fit.theta_hat, p['theta_range'])
    if 'log_window' in p:
        window = log_window_constants(out['curve'], **p['log_window'])
        result.summary['log_window'] = window
        result.verdicts['log_window'] = window['holds']
    return result


def run_exponent_universality(cfg: ExperimentConfig) -> ExperimentResult:
    p = cfg.params
    _require(p, 'laws')
    result = ExperimentResult()
    fits = {}
    for k, law in enumerate(p['laws']):
        spec = dict(p, process={'kind': 'walk', 'law': law})
        records, out = _run_curve(spec, sub_seed(cfg.master_seed, k), law)
        result.records.extend(records)
        fits[law] = out['fit']
        if 'theta_range' in p:
            result.verdicts[f'{law}_in_range'] = _in_range(out['fit'].theta_hat, p['theta_range'])
    laws = list(fits)
    spread = float(p.get('max_spread', 0.05))
    comparisons = []
    for i, a in enumerate(laws):
        for b in laws[i + 1:]:
            v = compare_exponents(fits[a], fits[b], 'equal')
            comparisons.append(dict(v.to_dict(), a=a, b=b))
            result.verdicts[f'{a}~{b}'] = v.holds
            result.verdicts[f'{a}~{b}_spread'] = abs(v.difference) <= spread
    result.summary = {'fits': {k: f.to_dict() for k, f in fits.items()},
                      'comparisons': comparisons, 'z': VERDICT_Z}
    return result


def run_theta_monotonicity(cfg: ExperimentConfig) -> ExperimentResult:
    p = cfg.params
    _require(p, 'alphas', 'grid_steps')
    result = ExperimentResult()
    fits: Dict[float, Dict[float, Any]] = {}
    k = 0
    alphas = [float(a) for a in p['alphas']]
    for alpha in alphas:
        fits[alpha] = {}
        for h in p['grid_steps']:
            spec = dict(p, process={'kind': 'riemann_liouville', 'alpha': alpha},
                        J_mode='grid', grid_step=h, alpha=alpha)
            records, out = _run_curve(spec, sub_seed(cfg.master_seed, k), f'alpha={alpha},h={h}')
            k += 1
            result.records.extend(records)
            fits[alpha][h] = out['fit']
        coarse, fine = (fits[alpha][h] for h in (p['grid_steps'][0], p['grid_steps'][-1]))
        # grid refinement: estimates within z combined standard errors, no allowance
        diff = abs(coarse.theta_hat - fine.theta_hat)
        result.verdicts[f'alpha={alpha}_steps_agree'] = diff <= VERDICT_Z * (coarse.stderr ** 2 + fine.stderr ** 2) ** 0.5
    finest = p['grid_steps'][-1]
    comparisons = []
    for a, b in zip(alphas, alphas[1:]):
        v = compare_exponents(fits[a][finest], fits[b][finest], 'monotone_geq')
        comparisons.append(dict(v.to_dict(), a=a, b=b))
        result.verdicts[f'theta({a})>=theta({b})'] = v.holds
    for alpha, bounds in p.get('theta_ranges', {}).items():
        result.verdicts[f'theta({alpha})_in_range'] = _in_range(fits[float(alpha)][finest].theta_hat, bounds)
    result.summary = {
        'fits': {str(a): {str(h): f.to_dict() for h, f in by_h.items()} for a, by_h in fits.items()},
        'comparisons': comparisons, 'z': VERDICT_Z,
    }
    return result


def run_b_upper_bound(cfg: ExperimentConfig) -> ExperimentResult:
    p = cfg.params
    _require(p, 'T_grid', 'trials')
    process = ProcessSpec.stationary_gp(CorrModel.from_dict(p.get('corr', {'kind': 'limit'})))
    h = float(p.get('grid_step', 0.01))
    curve = [estimate_survival(process, None, BarrierSpec.constant(0.0), 'grid', T, h,
                               int(p['trials']), sub_seed(cfg.master_seed, k))
             for k, T in enumerate(p['T_grid'])]
    scale = float(p.get('scale', 4.0))
    rate, lo, hi = subadditive_rate(curve, scale)
    result = ExperimentResult()
    for est in curve:
        rec = {'kind': 'estimate', 'label': 'stationary'}
        rec.update(est.to_dict())
        result.records.append(rec)
    upper = float(p.get('upper', 1.29))
    result.verdicts['rate_below_upper'] = rate <= upper
    result.summary = {'rate_bound': rate, 'ci': [lo, hi], 'rates': subadditive_rates(curve, scale),
                      'upper': upper, 'grid_step': h}
    if 'superadditivity' in p:
        t1, t2 = p['superadditivity']
        by_T = {est.T: est for est in curve}
        check = superadditivity_check(by_T[float(t1)], by_T[float(t2)], by_T[float(t1 + t2)])
        result.summary['superadditivity'] = check
        result.verdicts['superadditive'] = check['holds']
    return result


def run_randpoly_curve(cfg: ExperimentConfig) -> ExperimentResult:
    p = cfg.params
    _require(p, 'n_grid', 'trials')
    result = ExperimentResult()
    ests = []
    for k, n in enumerate(p['n_grid']):
        est = estimate_nonpositive_prob(int(n), int(p['trials']), sub_seed(cfg.master_seed, k))
        ests.append(est)
        result.records.append(dict(est.to_dict(), kind='randpoly'))
        result.verdicts[f'n={n}_sign_symmetry'] = sign_symmetry_check(est)['holds']
        if n == 0:
            result.verdicts['n=0_half'] = abs(est.p_hat - 0.5) <= 3 * max(est.stderr, 1e-12)
        if n == 1 and p.get('discriminant_check', True):
            hits, trials = discriminant_oracle(est.n_trials, est.master_seed)
            q = hits / trials
            se = ((q * (1 - q) + est.p_hat * (1 - est.p_hat)) / trials) ** 0.5
            result.verdicts['n=1_discriminant'] = abs(q - est.p_hat) <= 3 * se
            result.summary['discriminant_oracle'] = q
    fitted = [e for e in ests if e.n >= int(p.get('fit_from', 4))]
    if len(fitted) >= 4:
        fit = fit_exponent(fitted, skip=p.get('skip', 0))
        result.summary['fit'] = fit.to_dict()
        result.verdicts['decay_in_range'] = _in_range(fit.theta_hat, p.get('decay_range', (0.3, 1.5)))
    return result


def run_property_suite(cfg: ExperimentConfig) -> ExperimentResult:
    p = cfg.params
    _require(p, 'suite')
    params = dict(p.get('suite_params', {}))
    if p['suite'] not in ('slepian',):
        params.setdefault('seed', cfg.master_seed)
    report = _jsonable(run_suite(p['suite'], **params))
    return ExperimentResult([dict(report, kind='suite')], {p['suite']: bool(report['holds'])},
                            {'suite': p['suite']})


def _run_cases(cfg: ExperimentConfig, log_power: Optional[float] = None) -> Tuple[ExperimentResult, Dict[str, Any]]:
    """One curve per case; a given log_power overrides whatever the cases declare"""
    p = cfg.params
    _require(p, 'cases')
    result = ExperimentResult()
    fits = {}
    for k, case in enumerate(p['cases']):
        spec = _case_spec(p, case)
        if log_power is not None:
            spec['log_power'] = log_power
        label = case.get('label', f'case{k}')
        records, out = _run_curve(spec, sub_seed(cfg.master_seed, k), label)
        result.records.extend(records)
        fits[label] = out['fit']
        if 'theta_range' in case:
            result.verdicts[f'{label}_in_range'] = _in_range(out['fit'].theta_hat, case['theta_range'])
    result.summary = {'fits': {k: f.to_dict() for k, f in fits.items()}, 'z': VERDICT_Z}
    return result, fits


def run_drift_invariance(cfg: ExperimentConfig) -> ExperimentResult:
    result, fits = _run_cases(cfg)
    comparisons = []
    for k, case in enumerate(cfg.params['cases']):
        label, other = case.get('label', f'case{k}'), case.get('compare_to')
        if other is None:
            continue
        if other not in fits:
            raise ConfigError(f"case '{label}' compares to unknown case '{other}'")
        v = compare_exponents(fits[label], fits[other], 'equal')
        comparisons.append(dict(v.to_dict(), a=label, b=other))
        result.verdicts[f'{label}~{other}'] = v.holds
    if comparisons:
        result.summary['comparisons'] = comparisons
    return result


def run_barrier_switch(cfg: ExperimentConfig) -> ExperimentResult:
    result, fits = _run_cases(cfg)
    if {'switched', 'reference'} <= set(fits):
        v = compare_exponents(fits['switched'], fits['reference'], 'equal')
        result.summary['comparison'] = v.to_dict()
        result.verdicts['switched~reference'] = v.holds
    return result


def run_fbm_vs_liouville(cfg: ExperimentConfig) -> ExperimentResult:
    # both sides are Gaussian: no log-correction allowance on either fit
    result, fits = _run_cases(cfg, log_power=0.0)
    if {'fbm', 'liouville'} <= set(fits):
        v = compare_exponents(fits['fbm'], fits['liouville'], 'equal')
        result.summary['comparison'] = v.to_dict()
        result.verdicts['exponents_differ'] = not v.holds
    return result


RUNNERS: Dict[str, Callable[[ExperimentConfig], ExperimentResult]] = {
    'survival_curve': run_survival_curve,
    'exponent_universality': run_exponent_universality,
    'theta_monotonicity': run_theta_monotonicity,
    'b_upper_bound': run_b_upper_bound,
    'randpoly_curve': run_randpoly_curve,
    'property_suite': run_property_suite,
    'drift_invariance': run_drift_invariance,
    'barrier_switch': run_barrier_switch,
    'fbm_vs_liouville': run_fbm_vs_liouville,
}


def execute(cfg: ExperimentConfig) -> ExperimentResult:
    """Run the experiment and stamp every record with the config and its hashes"""
    logger.info("running %s (%s)", cfg.experiment, cfg.config_hash[:12])
    result = RUNNERS[cfg.experiment](cfg)
    embedded = {k: v for k, v in cfg.to_dict().items() if k not in UNHASHED_KEYS}
    for rec in result.records:
        rec['experiment'] = cfg.experiment
        rec['config_hash'] = cfg.config_hash
        rec['content_hash'] = cfg.content_hash
        rec['config'] = embedded
    result.summary = _jsonable(result.summary)
    return result
