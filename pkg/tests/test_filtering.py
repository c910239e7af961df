import numpy as np
import pytest

from risisac.filtering import (
    dinkelbach_eta, fp_objective, loaded_inverse_apply, mvdr_filter, mvdr_from_echoes,
)
from risisac.stap import scnr

from conftest import crandn, random_tiny


def kkt_mvdr(yt, yc, s2):
    """Minimise w^H (yc yc^H + s2 I) w subject to w^H yt = 1 by a dense KKT solve."""
    n = yt.size
    K = np.zeros((n + 1, n + 1), dtype=complex)
    K[:n, :n] = np.outer(yc, yc.conj()) + s2 * np.eye(n)
    K[:n, n] = -yt
    K[n, :n] = yt.conj()
    rhs = np.zeros(n + 1, dtype=complex)
    rhs[n] = 1
    return np.linalg.solve(K, rhs)[:n]


def test_sherman_morrison():
    rng = np.random.default_rng(0)
    yc, u = crandn(rng, 7), crandn(rng, 7)
    R = np.outer(yc, yc.conj()) + 0.3 * np.eye(7)
    np.testing.assert_allclose(loaded_inverse_apply(u, yc, 0.3), np.linalg.solve(R, u), rtol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_mvdr_matches_kkt(seed):
    sc, ch, model, rng = random_tiny(seed)
    x = crandn(rng, model.NML)
    phi = 5 * np.exp(2j * np.pi * rng.random(model.n_phi))
    yt, yc = model.apply_target(x, phi), model.apply_clutter(x, phi)
    w = mvdr_filter(x, phi, model)
    w_d = w / np.conj(np.vdot(w, yt))
    ref = kkt_mvdr(yt, yc, model.sigma_r2)
    assert np.linalg.norm(w_d - ref) <= 1e-8 * np.linalg.norm(ref)


def test_mvdr_maximises_scnr():
    sc, ch, model, rng = random_tiny(11)
    x = crandn(rng, model.NML)
    phi = 5 * np.exp(2j * np.pi * rng.random(model.n_phi))
    w = mvdr_filter(x, phi, model)
    best = scnr(model, x, phi, w)
    for _ in range(100):
        assert scnr(model, x, phi, crandn(rng, model.NMP)) <= best * (1 + 1e-10)


def test_dinkelbach_zero_at_optimum():
    sc, ch, model, rng = random_tiny(2)
    x = crandn(rng, model.NML)
    phi = 5 * np.exp(2j * np.pi * rng.random(model.n_phi))
    w = mvdr_filter(x, phi, model)
    eta = dinkelbach_eta(x, phi, w, model)
    assert eta == pytest.approx(scnr(model, x, phi, w))
    scale = abs(np.vdot(w, model.apply_target(x, phi))) ** 2
    assert abs(fp_objective(x, phi, w, eta, model)) <= 1e-10 * scale


def test_degenerate_inputs():
    with pytest.raises(ValueError):
        mvdr_from_echoes(np.zeros(3), np.ones(3), 1.0)
    with pytest.raises(ValueError):
        mvdr_from_echoes(np.ones(3), np.ones(3), 0.0)
