"""
Full-size acceptance runs (minutes each); run with: pytest -m slow
"""
import pytest

from data.generate_configs import CONFIGS
from runner.experiments import ExperimentConfig, execute

pytestmark = pytest.mark.slow


def _run(name):
    return execute(ExperimentConfig.from_dict(dict(CONFIGS[name], master_seed=42)))


@pytest.mark.parametrize('name', ['01_integrated_walk', '03_plain_walk', '04_log_window',
                                  '05_theta_monotonicity', '06_closed_form', '07_slepian',
                                  '08_b_upper_bound', '09a_fkg', '09b_fkg_three_point',
                                  '09c_sandwich', '09d_drift', '10_randpoly',
                                  '11_drift_invariance', '12_barrier_switch'])
def test_config_passes(name):
    result = _run(name)
    failed = [k for k, ok in result.verdicts.items() if not ok]
    assert not failed


def test_universality_spread():
    result = _run('02_universality')
    thetas = [f['theta_hat'] for f in result.summary['fits'].values()]
    assert max(thetas) - min(thetas) <= 0.05
    assert all(result.verdicts.values())


def test_fbm_and_liouville_exponents_differ():
    result = _run('13_fbm_vs_liouville')
    assert result.verdicts['exponents_differ']
    assert all(result.verdicts.values())


def test_drift_leaves_liouville_exponent_unchanged():
    result = _run('11_drift_invariance')
    assert result.verdicts['liouville_drift~liouville']
