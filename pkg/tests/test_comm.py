import numpy as np
import pytest

from risisac.comm import (
    CiConstraintSet, ber_monte_carlo, generate_symbols, gray_labels, psk_constellation,
)
from risisac.scenario import build_scenario, desk_config, sample_channels

from conftest import crandn


@pytest.fixture
def ci_setup():
    cfg = desk_config()
    sc = build_scenario(cfg)
    ch = sample_channels(sc, 3)
    block = generate_symbols(cfg.n_users, cfg.n_pulses, cfg.n_slots, cfg.psk_order, 7)
    ci = CiConstraintSet.from_config(cfg, block, ch)
    rng = np.random.default_rng(0)
    phi = cfg.a_max * np.exp(2j * np.pi * rng.random(cfg.n_ris * cfg.n_ris_elements))
    return cfg, ci, phi, rng


def test_constellation_and_gray():
    c = psk_constellation(4)
    np.testing.assert_allclose(np.abs(c), 1)
    np.testing.assert_allclose(np.angle(c[0]), np.pi / 4)
    g = gray_labels(8)
    assert sorted(g.tolist()) == list(range(8))
    assert all(bin(int(g[i]) ^ int(g[(i + 1) % 8])).count("1") == 1 for i in range(8))


def test_xi_closed_form(ci_setup):
    _, ci, _, _ = ci_setup
    s = ci.block.symbols
    Phi = np.pi / ci.block.psk_order
    xi = ci.block.xi()
    np.testing.assert_allclose(xi[..., 0], np.exp(-1j * np.angle(s)) * (np.sin(Phi) - 1j * np.cos(Phi)))
    np.testing.assert_allclose(xi[..., 1], np.exp(-1j * np.angle(s)) * (np.sin(Phi) + 1j * np.cos(Phi)))


def test_gamma_value(ci_setup):
    cfg, ci, _, _ = ci_setup
    expect = np.sqrt(cfg.noise_power_user) * np.sqrt(cfg.qos_gamma) * np.sin(np.pi / 4)
    np.testing.assert_allclose(ci.gamma_user, expect)
    assert ci.gamma.size == ci.n_constraints == 2 * cfg.n_users * cfg.n_pulses * cfg.n_slots


def test_row_ordering(ci_setup):
    cfg, ci, phi, rng = ci_setup
    x = crandn(rng, cfg.n_tx_antennas * cfg.n_pulses * cfg.n_slots)
    H = ci.rows(phi)
    np.testing.assert_allclose(np.real(H @ x) - ci.gamma, ci.margins_x(x, phi), atol=1e-15)
    # row i = (2k + f) ML + j uses xi_f of symbol (k, j)
    ML = ci.ML
    y = ci.received(x, phi).reshape(ci.K, ML)
    xi = ci.block.xi().reshape(ci.K, ML, 2)
    k, f, j = 1, 1, 5
    i = (2 * k + f) * ML + j
    assert np.real(H[i] @ x) == pytest.approx(np.real(xi[k, j, f] * y[k, j]), rel=1e-12)


def test_phi_coefficients(ci_setup):
    cfg, ci, phi, rng = ci_setup
    x = crandn(rng, ci.N * ci.ML)
    d, g = ci.phi_coefficients(x)
    np.testing.assert_allclose(np.real(d + g @ phi), np.real(ci.rows(phi) @ x), rtol=1e-12, atol=1e-18)


def test_ci_matches_sector_geometry(ci_setup):
    # margins >= 0 on both edges exactly when the sample sits in the constructive sector
    cfg, ci, phi, rng = ci_setup
    for _ in range(50):
        x = crandn(rng, ci.N * ci.ML)
        m = ci.margins_x(x, phi).reshape(ci.K, 2, ci.M, ci.L).min(axis=1)
        geo = ci.sector_margins_geometric(x, phi)
        assert np.all((m >= 0) == (geo >= 0))


def test_radar_only_threshold():
    cfg = desk_config()
    sc = build_scenario(cfg)
    ch = sample_channels(sc, 0)
    block = generate_symbols(2, 2, 4, 4, 0)
    ci = CiConstraintSet.from_config(cfg, block, ch, radar_only=True)
    assert np.all(ci.gamma == -1e9)


def test_ber_noise_free_limit(ci_setup):
    cfg, ci, phi, rng = ci_setup
    # a waveform that puts every user sample on its symbol: solve h_k^T x_j = 10 s_kj
    h = ci.effective_channels(phi)
    s = ci.block.symbols.reshape(ci.K, ci.ML)
    X = np.linalg.lstsq(h, 10 * s, rcond=None)[0]  # (N, ML)
    x = X.T.reshape(-1)
    assert np.all(ber_monte_carlo(x, phi, ci, 200, 0) == 0)
    assert np.all(ber_monte_carlo(x, phi, ci, 200, 0, unit="bit") == 0)
    with pytest.raises(ValueError):
        ber_monte_carlo(x, phi, ci, 0, 0)


def test_ber_zero_signal_is_chance(ci_setup):
    cfg, ci, phi, rng = ci_setup
    x = np.zeros(ci.N * ci.ML, dtype=complex)
    ber = ber_monte_carlo(x, phi, ci, 5000, 1)
    np.testing.assert_allclose(ber, 0.75, atol=0.02)
