"""Alternating optimisation of waveform, reflection, receive filter and eta.

Every block update is a candidate: it is accepted only if the FP objective
(at the current ``w`` and ``eta``) does not decrease and the CI constraints
still hold, otherwise the previous block value is kept.  The MVDR and
Dinkelbach steps are exact maximisers, so the SCNR recorded at the end of
each outer iteration is nondecreasing.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .comm import CiConstraintSet, generate_symbols
from .filtering import dinkelbach_eta, fp_objective, mvdr_filter
from .initialization import init_x, rcg_phase_init
from .qp import INFEASIBLE
from .ris import assemble_f2_terms, build_F_matrices, curvature_bounds, ris_qp_solve, ris_surrogate
from .scenario import ChannelSet, Scenario
from .stap import StackedModel, build_model
from .waveform import psi_update, run_waveform_admm, waveform_surrogate

SCHEMES = ("proposed", "random_ris", "no_ris", "radar_only")


@dataclass
class RunOptions:
    max_outer: int = 50
    tol: float = 1e-4
    admm_max_iter: int = 200
    admm_tol: float = 1e-6
    rho_rel: float = 1.0
    margin_tol: float = 1e-5  # normalised CI margin slack, units of x
    optimize_phi: bool = True
    radar_only: bool = False
    check_surrogates: bool = False  # debug profile: assert MM tangency/domination
    seed: int = 0


@dataclass
class SolverReport:
    scheme: str
    status: str
    scnr_trace: list
    eta_trace: list
    scnr_init: float
    x: np.ndarray
    phi: np.ndarray
    w: np.ndarray
    min_margin: float
    min_margin_normalized: float
    modulus_deviation: float
    phi_max: float
    iterations: int
    converged: bool
    stage_status: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    model: StackedModel | None = field(default=None, repr=False)
    ci: CiConstraintSet | None = field(default=None, repr=False)

    @property
    def scnr(self) -> float:
        return self.scnr_trace[-1] if self.scnr_trace else self.scnr_init

    @property
    def scnr_db(self) -> float:
        return 10 * np.log10(max(self.scnr, 1e-300))


def _feasible(ci, x, phi, tol) -> bool:
    return float(np.min(ci.normalized_margins(x, phi))) >= -tol


def _x_step(model, ci, x, phi, w, eta, P_bs, opts, restore=False):
    sur = waveform_surrogate(x, w, phi, model, eta)
    if opts.check_surrogates:
        _check_waveform_surrogate(sur, P_bs)
    res = run_waveform_admm(sur, ci, phi, P_bs, rho_rel=opts.rho_rel, tol=opts.admm_tol,
                            max_iter=opts.admm_max_iter, margin_tol=opts.margin_tol)
    if res.status == INFEASIBLE:
        return x, "x:infeasible"
    if not _feasible(ci, res.x, phi, opts.margin_tol):
        return x, "x:rejected_margin"
    if restore:
        return res.x, "x:restored"
    old = fp_objective(x, phi, w, eta, model)
    new = fp_objective(res.x, phi, w, eta, model)
    if new >= old:
        return res.x, "x:accepted"
    return x, "x:rejected_objective"


def _phi_step(model, ci, x, phi, w, eta, a_max, opts):
    F = build_F_matrices(x, model)
    terms = assemble_f2_terms(F, w, eta, model.sigma_r2)
    bounds = curvature_bounds(terms, phi, a_max)
    sur = ris_surrogate(terms, bounds, phi)
    if opts.check_surrogates:
        _check_ris_surrogate(sur, terms, phi, a_max)
    sol = ris_qp_solve(sur, ci, x, a_max)
    if sol.status == INFEASIBLE:
        return phi, "phi:infeasible"
    cand = sol.point
    if not _feasible(ci, x, cand, opts.margin_tol):
        return phi, "phi:rejected_margin"
    if terms.value(cand) <= terms.value(phi):
        return cand, "phi:accepted"
    return phi, "phi:rejected_objective"


def _check_waveform_surrogate(sur, P_bs, n_points=100):
    x0 = sur.anchor
    scale = (abs(np.vdot(sur.v_t, x0)) ** 2 + sur.eta * abs(np.vdot(sur.v_c, x0)) ** 2
             + sur.noise_term)
    assert abs(sur.value(x0) - sur.original(x0)) <= 1e-8 * scale, "waveform surrogate not tangent"
    rng = np.random.default_rng(1)
    amp = np.sqrt(P_bs / x0.size)
    for _ in range(n_points):
        x = amp * np.exp(2j * np.pi * rng.random(x0.size))
        assert sur.value(x) - sur.original(x) >= -1e-8 * scale, "waveform surrogate not majorising"


def _check_ris_surrogate(sur, terms, phi, a_max, n_points=100):
    gap = sur.value(phi) - terms.value(phi)
    assert abs(gap) <= sur.tolerance(phi), f"RIS surrogate not tangent: {gap}"
    rng = np.random.default_rng(0)
    for _ in range(n_points):
        p = a_max * np.sqrt(rng.random(phi.size)) * np.exp(2j * np.pi * rng.random(phi.size))
        assert sur.value(p) - terms.value(p) >= -sur.tolerance(p), "RIS surrogate not majorising"


def _finish(scheme, status, model, ci, x, phi, w, trace, etas, scnr0, it, conv, stages, timings,
            P_bs):
    n = x.size
    dev = float(np.max(np.abs(np.abs(x) - np.sqrt(P_bs / n))))
    margins = ci.margins_x(x, phi)
    nmargins = ci.normalized_margins(x, phi)
    return SolverReport(
        scheme=scheme, status=status, scnr_trace=trace, eta_trace=etas, scnr_init=scnr0,
        x=x, phi=phi, w=w, min_margin=float(np.min(margins)),
        min_margin_normalized=float(np.min(nmargins)), modulus_deviation=dev,
        phi_max=float(np.max(np.abs(phi), initial=0.0)), iterations=it, converged=conv,
        stage_status=stages, timings=timings, model=model, ci=ci,
    )


def run_algorithm1(scenario: Scenario, channels: ChannelSet, options: RunOptions | None = None,
                   scheme: str = "proposed", phi_fixed=None, use_ris: bool = True,
                   warm_start=None) -> SolverReport:
    """Joint design loop.

    ``phi_fixed`` freezes the reflection vector (random-RIS baseline),
    ``use_ris=False`` drops every RIS path (no-RIS baseline) and
    ``warm_start=(x, phi)`` replaces the initialisation, which must then be
    CI-feasible and constant-modulus.
    """
    opts = options or RunOptions()
    cfg = scenario.config
    P_bs, a_max = cfg.total_power, cfg.a_max
    timings = {"init": 0.0, "x": 0.0, "phi": 0.0, "w_eta": 0.0}
    t0 = time.perf_counter()
    model = build_model(scenario, channels, use_ris=use_ris)
    block = generate_symbols(cfg.n_users, cfg.n_pulses, cfg.n_slots, cfg.psk_order,
                             np.random.SeedSequence([channels.seed, 1]))
    ci = CiConstraintSet.from_config(cfg, block, channels, use_ris=use_ris, radar_only=opts.radar_only)
    optimize_phi = opts.optimize_phi and phi_fixed is None and model.R > 0

    stages = []
    if warm_start is not None:
        x, phi = (np.asarray(v, dtype=complex).copy() for v in warm_start)
        restore = False
    else:
        if phi_fixed is not None:
            phi = np.asarray(phi_fixed, dtype=complex)
        else:
            phi, _ = rcg_phase_init(model, a_max)
        x0 = init_x(phi, ci, P_bs)
        stages.append(f"init:{x0.status}")
        x = x0.x
        restore = True
    if phi_fixed is not None:
        phi = np.asarray(phi_fixed, dtype=complex)

    if not _feasible(ci, x, phi, opts.margin_tol):
        timings["init"] = time.perf_counter() - t0
        w = mvdr_filter(x, phi, model)
        return _finish(scheme, "infeasible", model, ci, x, phi, w, [], [],
                       dinkelbach_eta(x, phi, w, model), 0, False, stages, timings, P_bs)
    if restore:
        # a constant-modulus start for the first surrogate; the margin check below decides
        x_cm = psi_update(x, np.zeros_like(x), 1.0, P_bs, x.size)
    w = mvdr_filter(x, phi, model)
    eta = dinkelbach_eta(x, phi, w, model)
    scnr0 = eta
    timings["init"] = time.perf_counter() - t0

    trace, etas = [], []
    converged = False
    it = 0
    for it in range(1, opts.max_outer + 1):
        t1 = time.perf_counter()
        x, st = _x_step(model, ci, x, phi, w, eta, P_bs, opts, restore=restore)
        stages.append(st)
        if restore:
            if st != "x:restored":
                if _feasible(ci, x_cm, phi, opts.margin_tol):
                    x, st = x_cm, "x:restored_projection"
                    stages[-1] = st
                else:
                    timings["x"] += time.perf_counter() - t1
                    return _finish(scheme, "infeasible", model, ci, x, phi, w, trace, etas, scnr0,
                                   it, False, stages, timings, P_bs)
            restore = False
        t2 = time.perf_counter()
        timings["x"] += t2 - t1
        if optimize_phi:
            phi, st = _phi_step(model, ci, x, phi, w, eta, a_max, opts)
            stages.append(st)
        t3 = time.perf_counter()
        timings["phi"] += t3 - t2
        w = mvdr_filter(x, phi, model)
        eta = dinkelbach_eta(x, phi, w, model)
        timings["w_eta"] += time.perf_counter() - t3
        if trace and eta < trace[-1]:
            # numerical safety net; cannot happen in exact arithmetic
            stages.append("w:nonmonotone")
        trace.append(eta)
        etas.append(eta)
        if len(trace) >= 2 and abs(trace[-1] - trace[-2]) <= opts.tol * abs(trace[-2]):
            converged = True
            break
    return _finish(scheme, "ok", model, ci, x, phi, w, trace, etas, scnr0, it, converged, stages,
                   timings, P_bs)


def random_phi(n_phi: int, a_max: float, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return a_max * np.exp(2j * np.pi * rng.random(n_phi))


def run_baseline(scheme: str, scenario: Scenario, channels: ChannelSet,
                 options: RunOptions | None = None, warm_start=None) -> SolverReport:
    """Benchmark schemes sharing the main loop."""
    opts = options or RunOptions()
    cfg = scenario.config
    if scheme == "proposed":
        return run_algorithm1(scenario, channels, opts, warm_start=warm_start)
    if scheme == "random_ris":
        n_phi = cfg.n_ris * cfg.n_ris_elements
        phi = random_phi(n_phi, cfg.a_max, np.random.SeedSequence([channels.seed, 2]))
        return run_algorithm1(scenario, channels, opts, scheme=scheme, phi_fixed=phi)
    if scheme == "no_ris":
        return run_algorithm1(scenario, channels.without_ris(), opts, scheme=scheme, use_ris=False)
    if scheme == "radar_only":
        ropts = RunOptions(**{**opts.__dict__, "radar_only": True})
        return run_algorithm1(scenario, channels, ropts, scheme=scheme, warm_start=warm_start)
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
