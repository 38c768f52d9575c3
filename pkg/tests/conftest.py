import pytest

from bluffsim.config import load_config
from bluffsim.pipeline import run_scenario


def small_config(**overrides):
    """A desk-scale scenario that runs in well under a second."""
    cfg = load_config("default-attack")
    cfg.mix.n_benign = 60
    cfg.mix.n_random_bot = 4
    cfg.mix.n_trained_bot = 3
    cfg.horizon_days = 2
    for key, value in overrides.items():
        setattr(cfg, key, value)
    return cfg


@pytest.fixture(scope="session")
def default_runs():
    """Criterion-5 scenario, seeds 0..9; shared by several acceptance tests."""
    runs = {}
    for seed in range(10):
        cfg = load_config("default-attack")
        cfg.seed = seed
        runs[seed] = run_scenario(cfg)
    return runs


@pytest.fixture(scope="session")
def dictionary_runs():
    """Criterion-6 scenario (dictionary bots + harvesters), seeds 0..9."""
    runs = {}
    for seed in range(10):
        cfg = load_config("dictionary-attack")
        cfg.seed = seed
        runs[seed] = run_scenario(cfg)
    return runs
