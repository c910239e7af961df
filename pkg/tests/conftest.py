import numpy as np
import pytest

from risisac.oracles import tiny_config
from risisac.scenario import build_scenario, desk_config, sample_channels
from risisac.stap import build_model


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_tiny(seed):
    """Tiny scene with random velocity and clutter placement, plus its model."""
    rng = np.random.default_rng(1000 + seed)
    v = tuple(rng.uniform(-60, 60, 2))
    clutter = [(float(rng.uniform(-20, 20)), float(rng.uniform(30, 70)))]
    sc = build_scenario(tiny_config(target_velocity=v, clutter_positions=clutter))
    ch = sample_channels(sc, seed)
    return sc, ch, build_model(sc, ch), rng


@pytest.fixture(scope="session")
def desk_instance():
    sc = build_scenario(desk_config())
    ch = sample_channels(sc, 0)
    return sc, ch, build_model(sc, ch)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
