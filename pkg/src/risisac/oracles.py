"""Named reference computations printed by ``risisac oracle <name>``.

Each oracle compares a fast routine with a slow, obviously correct one and
returns a small table.  They double as smoke checks of an installation.
"""

from __future__ import annotations

import math

import numpy as np

from .detection import detection_probability, detection_probability_mc
from .filtering import mvdr_filter
from .ris import build_F_matrices
from .scenario import build_scenario, desk_config, path_delays, path_dopplers, paper_config, \
    sample_channels
from .stap import build_model, dense_operators
from .waveform import psi_update


def tiny_config(**overrides):
    """Smallest nontrivial scene: N=2, M=2, L=2, one 2-element RIS, one clutter."""
    base = dict(n_tx_antennas=2, n_users=1, n_pulses=2, n_slots=2, n_ris=1,
                n_ris_elements=2, ris_positions=[(-12.0, 45.0)], clutter_positions=[(6.0, 55.0)],
                user_positions=[(-7.0, 64.0)])
    base.update(overrides)
    return desk_config(**base)


def _rel(a, b) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def oracle_detection():
    rows = []
    for scnr, pfa in [(0.0, 1e-3), (1.0, 1e-2), (4.0, 1e-3), (9.0, 1e-4)]:
        pd = detection_probability(scnr, pfa)
        mc = detection_probability_mc(scnr, pfa, 1_000_000, seed=0)
        rows.append([scnr, pfa, pd, mc, abs(pd - mc)])
    return "detection probability: closed form vs Monte Carlo", \
        ["scnr", "p_fa", "p_d", "p_d_mc", "abs_err"], rows


def oracle_psi_grid(n_inputs: int = 5, n_grid: int = 10_000):
    rng = np.random.default_rng(0)
    grid = 2 * np.pi * np.arange(n_grid) / n_grid
    rows = []
    for i in range(n_inputs):
        n, P, rho = 6, 2.0, float(rng.uniform(0.1, 10))
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        lam = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        psi = psi_update(x, lam, rho, P, n)
        amp = math.sqrt(P / n)
        # per coordinate: Re{lam^* (x - psi)} + rho/2 |x - psi|^2
        d = x[:, None] - amp * np.exp(1j * grid)[None, :]
        cost = np.real(lam.conj()[:, None] * d) + 0.5 * rho * np.abs(d) ** 2
        best = grid[np.argmin(cost, axis=1)]
        err = np.abs(np.angle(np.exp(1j * (np.angle(psi) - best))))
        rows.append([i, rho, float(err.max()), 2 * np.pi / n_grid])
    return "constant-modulus projection vs phase grid", \
        ["input", "rho", "max_phase_err", "grid_step"], rows


def _tiny_model(seed):
    rng = np.random.default_rng(seed)
    v = tuple(rng.uniform(-40, 40, 2))
    sc = build_scenario(tiny_config(target_velocity=v))
    ch = sample_channels(sc, seed)
    return build_model(sc, ch), sc.config.a_max, rng


def oracle_operators(n_instances: int = 5):
    rows = []
    for s in range(n_instances):
        model, a_max, rng = _tiny_model(s)
        phi = a_max * np.exp(2j * np.pi * rng.random(model.n_phi))
        x = rng.standard_normal(model.NML) + 1j * rng.standard_normal(model.NML)
        Ht, Hc = dense_operators(model, phi)
        rows.append([s, model.P, _rel(model.apply_target(x, phi), Ht @ x),
                     _rel(model.apply_clutter(x, phi), Hc @ x)])
    return "matrix-free echo operators vs dense Kronecker assembly", \
        ["instance", "P", "rel_err_target", "rel_err_clutter"], rows


def oracle_f_identity(n_instances: int = 5, n_phi: int = 100):
    rows = []
    for s in range(n_instances):
        model, a_max, rng = _tiny_model(s)
        x = rng.standard_normal(model.NML) + 1j * rng.standard_normal(model.NML)
        F = build_F_matrices(x, model)
        worst = 0.0
        for _ in range(n_phi):
            phi = a_max * np.sqrt(rng.random(model.n_phi)) * np.exp(2j * np.pi * rng.random(model.n_phi))
            zero = np.zeros_like(phi)
            direct = model.apply_target(x, zero)
            ind = model.apply_target(x, phi) - direct
            worst = max(worst, _rel(F.target_echo(phi) - F.t0, ind))
        rows.append([s, n_phi, worst])
    return "F-matrix expansion vs operator echo (RIS part)", \
        ["instance", "n_phi", "max_rel_err"], rows


def oracle_mvdr(n_instances: int = 5):
    rows = []
    for s in range(n_instances):
        model, a_max, rng = _tiny_model(s)
        phi = a_max * np.exp(2j * np.pi * rng.random(model.n_phi))
        x = rng.standard_normal(model.NML) + 1j * rng.standard_normal(model.NML)
        yt, yc = model.apply_target(x, phi), model.apply_clutter(x, phi)
        Rm = np.outer(yc, yc.conj()) + model.sigma_r2 * np.eye(yc.size)
        # minimise w^H R w subject to w^H y_t = 1 via the KKT system
        n = yc.size
        K = np.zeros((n + 1, n + 1), dtype=complex)
        K[:n, :n] = Rm
        K[:n, n] = -yt
        K[n, :n] = yt.conj()
        rhs = np.zeros(n + 1, dtype=complex)
        rhs[n] = 1.0
        w_ref = np.linalg.solve(K, rhs)[:n]
        w = mvdr_filter(x, phi, model)
        w = w / np.vdot(w, yt).conj()  # distortionless normalisation
        rows.append([s, _rel(w, w_ref)])
    return "MVDR closed form vs KKT solve", ["instance", "rel_err"], rows


def oracle_delays():
    sc = build_scenario(paper_config())
    d = path_delays(sc)
    rows = [["target", "direct", "-", int(d.target_direct)]]
    for r in range(d.target_indirect.shape[0]):
        for i in range(3):
            rows.append(["target", f"ris{r}", i + 1, int(d.target_indirect[r, i])])
    for q in range(d.clutter_direct.shape[0]):
        rows.append([f"clutter{q}", "direct", "-", int(d.clutter_direct[q])])
    return "fast-time delays (slots), full-size geometry", ["scatterer", "path", "i", "tau"], rows


def oracle_dopplers():
    sc = build_scenario(paper_config(target_velocity=(0.0, 30.0)))
    f = path_dopplers(sc)
    rows = [["direct", "-", f.target_direct]]
    for r in range(f.target_indirect.shape[0]):
        for i in range(3):
            rows.append([f"ris{r}", i + 1, float(f.target_indirect[r, i])])
    return "target Doppler (rad/s), v = (0, 30) m/s", ["path", "i", "f_d"], rows


ORACLES = {
    "detection": oracle_detection,
    "psi-grid": oracle_psi_grid,
    "operators": oracle_operators,
    "f-identity": oracle_f_identity,
    "mvdr": oracle_mvdr,
    "delays": oracle_delays,
    "dopplers": oracle_dopplers,
}


def format_table(title, columns, rows) -> str:
    def cell(v):
        return format(v, ".6g") if isinstance(v, float) else str(v)

    body = [[cell(v) for v in r] for r in rows]
    widths = [max(len(c), *(len(r[i]) for r in body)) if body else len(c)
              for i, c in enumerate(columns)]
    lines = [title, "  ".join(c.rjust(w) for c, w in zip(columns, widths))]
    lines += ["  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in body]
    return "\n".join(lines)
