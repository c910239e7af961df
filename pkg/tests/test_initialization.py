import numpy as np
import pytest

from risisac.comm import CiConstraintSet, generate_symbols
from risisac.initialization import (
    channel_gain_objective, init_x, rcg_maximize, rcg_phase_init,
)
from risisac.scenario import build_scenario, desk_config, sample_channels
from risisac.stap import build_model

from conftest import crandn


def test_rcg_on_known_problem():
    # maximise |1^T beta|^2 on the torus: optimum n^2 at equal phases
    n = 6
    ones = np.ones(n)

    def f(b):
        s = ones @ b
        return abs(s) ** 2, 2 * ones * s

    rng = np.random.default_rng(0)
    res = rcg_maximize(f, np.exp(2j * np.pi * rng.random(n)))
    assert res.objective == pytest.approx(n ** 2, rel=1e-6)
    np.testing.assert_allclose(np.abs(res.beta), 1)
    assert all(b >= a - 1e-12 for a, b in zip(res.history, res.history[1:]))


def test_gradient_matches_finite_difference(desk_instance):
    sc, ch, model = desk_instance
    f = channel_gain_objective(model)
    rng = np.random.default_rng(1)
    beta = np.exp(2j * np.pi * rng.random(model.n_phi))
    d = crandn(rng, model.n_phi)
    _, g = f(beta)
    h = 1e-6
    fd = (f(beta + h * d)[0] - f(beta - h * d)[0]) / (2 * h)
    assert np.real(np.vdot(d, g)) == pytest.approx(fd, rel=1e-5)


def test_phase_init_improves_gain(desk_instance):
    sc, ch, model = desk_instance
    phi, res = rcg_phase_init(model, sc.config.a_max)
    np.testing.assert_allclose(np.abs(phi), sc.config.a_max)
    f = channel_gain_objective(model)
    assert res.objective >= f(np.ones(model.n_phi, dtype=complex))[0]


def test_phase_init_without_ris():
    sc = build_scenario(desk_config(n_ris=0, ris_positions=[]))
    model = build_model(sc, sample_channels(sc, 0))
    phi, res = rcg_phase_init(model, 5.0)
    assert phi.size == 0 and res is None


def test_init_x_maximises_margin(desk_instance):
    sc, ch, model = desk_instance
    cfg = sc.config
    block = generate_symbols(cfg.n_users, cfg.n_pulses, cfg.n_slots, cfg.psk_order, 0)
    ci = CiConstraintSet.from_config(cfg, block, ch)
    phi, _ = rcg_phase_init(model, cfg.a_max)
    res = init_x(phi, ci, cfg.total_power)
    b = np.sqrt(cfg.total_power / model.NML)
    assert np.all(np.abs(res.x) <= b + 1e-12)
    H = ci.rows(phi)
    assert res.delta == pytest.approx(np.min(np.real(H @ res.x)), rel=1e-9)
    # per-entry box makes the margin feasible for every row at once
    assert res.delta > np.max(ci.gamma)
