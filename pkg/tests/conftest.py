import pytest

from persistence.kernels import KernelSpec
from persistence.paths import ProcessSpec
from persistence.survival_mc import BarrierSpec


@pytest.fixture(autouse=True)
def single_worker(monkeypatch):
    """Tests run serially unless they set the worker count themselves"""
    monkeypatch.setenv('PERSISTENCE_WORKERS', '1')


@pytest.fixture
def rademacher():
    return ProcessSpec.walk('rademacher')


@pytest.fixture
def integral():
    return KernelSpec.fractional(1.0)


@pytest.fixture
def unit_barrier():
    return BarrierSpec.constant(1.0)


@pytest.fixture
def small_curve_config(tmp_path):
    """Integrated Rademacher walk on five horizons; small enough for the unit suite"""
    return {
        'experiment': 'survival_curve',
        'process': {'kind': 'walk', 'law': 'rademacher'},
        'functional': {'kind': 'fractional', 'alpha': 1.0},
        'barrier': {'kind': 'constant', 'c': 1.0},
        'J_mode': 'integers',
        'T_grid': [16, 32, 64, 128, 256],
        'trials': 4000,
        'master_seed': 42,
        'output_dir': str(tmp_path / 'store'),
    }
