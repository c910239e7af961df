import numpy as np
import pytest

from risisac.detection import detection_probability, detection_probability_mc


def test_limits():
    assert detection_probability(0.0, 1e-3) == pytest.approx(1e-3)
    assert detection_probability(1e4, 1e-6) == pytest.approx(1.0)


def test_vectorised():
    pd = detection_probability(np.array([0.0, 1.0]), 0.1)
    assert pd.shape == (2,) and pd[0] < pd[1]


def test_monotone_grids():
    s = np.linspace(0, 50, 100)
    assert np.all(np.diff(detection_probability(s, 1e-4)) > 0)
    p = np.logspace(-8, -0.01, 100)
    assert np.all(np.diff(detection_probability(3.0, p)) > 0)
    vals = detection_probability(s, 1e-4)
    assert np.all((vals > 0) & (vals < 1) | (vals == 1.0))


@pytest.mark.parametrize("scnr,pfa", [(-1.0, 0.1), (1.0, 0.0), (1.0, 1.0), (np.inf, 0.1)])
def test_domain_errors(scnr, pfa):
    with pytest.raises(ValueError):
        detection_probability(scnr, pfa)


def test_monte_carlo_oracle():
    pd = detection_probability(4.0, 1e-3)
    mc = detection_probability_mc(4.0, 1e-3, 1_000_000, seed=1)
    assert abs(pd - mc) <= 0.01
