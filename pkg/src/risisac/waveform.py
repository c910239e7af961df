"""Waveform block: MM surrogate of the FP objective and the constant-modulus ADMM.

With ``v_t = H_t^H w`` and ``v_c = H_c^H w`` the waveform objective is::

    f1(x) = eta |v_c^H x|^2 - |v_t^H x|^2 + eta sigma^2 ||w||^2

The concave part is replaced by its tangent plane at an anchor ``x0``, which
leaves a convex quadratic with rank-1 curvature ``A_c = eta v_c v_c^H``.
The constant-modulus constraint is handled by splitting ``x = psi``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .comm import CiConstraintSet
from .qp import INFEASIBLE, ConeQpProblem, make_kernel, solve_cone_qp
from .stap import StackedModel


@dataclass
class WaveformSurrogate:
    """Rank-1 factors of ``f1`` and its tangent bound at ``anchor``."""

    v_t: np.ndarray
    v_c: np.ndarray
    eta: float
    noise_term: float  # eta sigma^2 ||w||^2
    anchor: np.ndarray

    @property
    def A_norm(self) -> float:
        """Spectral norm of ``A = v_t v_t^H``."""
        return float(np.vdot(self.v_t, self.v_t).real)

    def A_apply(self, x) -> np.ndarray:
        return self.v_t * np.vdot(self.v_t, x)

    def A_c_apply(self, x) -> np.ndarray:
        return self.eta * self.v_c * np.vdot(self.v_c, x)

    @property
    def linear(self) -> np.ndarray:
        """``-2 A x0`` so that the surrogate reads ``x^H A_c x + Re{x^H linear}``."""
        return -2.0 * self.A_apply(self.anchor)

    @property
    def constant(self) -> float:
        return abs(np.vdot(self.v_t, self.anchor)) ** 2 + self.noise_term

    def original(self, x) -> float:
        return float(self.eta * abs(np.vdot(self.v_c, x)) ** 2
                     - abs(np.vdot(self.v_t, x)) ** 2 + self.noise_term)

    def value(self, x) -> float:
        x = np.asarray(x, dtype=complex)
        return float(np.real(np.vdot(x, self.A_c_apply(x))) + np.real(np.vdot(x, self.linear))
                     + self.constant)


def waveform_surrogate(x_prev, w, phi, model: StackedModel, eta: float,
                       sigma_r2: float | None = None) -> WaveformSurrogate:
    s2 = model.sigma_r2 if sigma_r2 is None else sigma_r2
    w = np.asarray(w, dtype=complex)
    return WaveformSurrogate(
        v_t=model.adjoint_target(w, phi),
        v_c=model.adjoint_clutter(w, phi),
        eta=float(eta),
        noise_term=float(eta * s2 * np.vdot(w, w).real),
        anchor=np.asarray(x_prev, dtype=complex).copy(),
    )


@dataclass
class AdmmState:
    x: np.ndarray
    psi: np.ndarray
    lam: np.ndarray
    rho: float
    surrogate: WaveformSurrogate
    iterations: int = 0
    primal_history: list = field(default_factory=list)
    qp_statuses: list = field(default_factory=list)

    def augmented_lagrangian(self, x=None) -> float:
        x = self.x if x is None else x
        d = x - self.psi
        return (self.surrogate.value(x) + float(np.real(np.vdot(self.lam, d)))
                + 0.5 * self.rho * float(np.vdot(d, d).real))


def psi_update(x, lam, rho: float, P_bs: float, NML: int) -> np.ndarray:
    """Closed-form constant-modulus projection of ``x + lam / rho``."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    arg = rho * np.asarray(x, dtype=complex) + np.asarray(lam, dtype=complex)
    ang = np.where(arg == 0, 0.0, np.angle(arg))
    return np.sqrt(P_bs / NML) * np.exp(1j * ang)


def dual_update(lam, x, psi, rho: float) -> np.ndarray:
    return np.asarray(lam, dtype=complex) + rho * (np.asarray(x) - np.asarray(psi))


def _x_problem(state: AdmmState, ci: CiConstraintSet | None, phi, budget: float) -> ConeQpProblem:
    sur = state.surrogate
    n = sur.v_t.size
    H = ci.rows(phi) if ci is not None else None
    g = ci.gamma if ci is not None else None
    return ConeQpProblem(
        n=n, Q_factor=np.sqrt(sur.eta) * sur.v_c.reshape(n, 1), q=sur.linear,
        rho=state.rho, center=state.psi - state.lam / state.rho,
        H=H, gamma=g, radius=budget,
    )


def admm_x_update(state: AdmmState, ci: CiConstraintSet | None, phi, P_bs: float, kernel=None):
    """Minimise the augmented Lagrangian over ``x`` (convex QP)."""
    n = state.x.size
    prob = _x_problem(state, ci, phi, np.sqrt(P_bs / n))
    return solve_cone_qp(prob, x0=state.x, kernel=kernel)


@dataclass
class WaveformResult:
    x: np.ndarray
    converged: bool
    iterations: int
    primal_residual: float
    min_margin: float
    status: str
    history: list


def run_waveform_admm(surrogate: WaveformSurrogate, ci: CiConstraintSet | None, phi, P_bs: float,
                      x_init=None, rho_rel: float = 1.0, tol: float = 1e-6, max_iter: int = 200,
                      adapt: bool = True, margin_tol: float = 1e-5) -> WaveformResult:
    """ADMM to convergence for one surrogate anchor, then ``x <- psi``.

    ``rho`` is ``rho_rel`` times ``||A||`` so the penalty is commensurate
    with the objective.  If the projected point breaks a CI constraint by
    more than ``margin_tol`` the whole pass is repeated once
    with ``rho`` doubled.  ``margin_tol`` applies to margins normalised by
    the channel norm, so it is in the units of ``x``.
    """
    n = surrogate.v_t.size
    x0 = surrogate.anchor if x_init is None else np.asarray(x_init, dtype=complex)
    base = max(surrogate.A_norm, 1e-300)
    result = None
    for attempt in range(2):
        rho = rho_rel * base * (2 ** attempt)
        psi = psi_update(x0, np.zeros(n), 1.0, P_bs, n)
        state = AdmmState(x=x0.copy(), psi=psi, lam=np.zeros(n, dtype=complex), rho=rho,
                          surrogate=surrogate)
        kernels = {}
        converged = False
        status = "optimal"
        for it in range(1, max_iter + 1):
            key = state.rho
            if key not in kernels:
                kernels[key] = make_kernel(_x_problem(state, ci, phi, np.sqrt(P_bs / n)))
            sol = admm_x_update(state, ci, phi, P_bs, kernel=kernels[key])
            state.qp_statuses.append(sol.status)
            if sol.status == INFEASIBLE:
                status = INFEASIBLE
                break
            state.x = sol.point
            psi_old = state.psi
            state.psi = psi_update(state.x, state.lam, state.rho, P_bs, n)
            state.lam = dual_update(state.lam, state.x, state.psi, state.rho)
            state.iterations = it
            r = float(np.max(np.abs(state.x - state.psi)))
            state.primal_history.append(r)
            if r <= tol:
                converged = True
                break
            if adapt:
                r2 = float(np.linalg.norm(state.x - state.psi))
                s2 = state.rho * float(np.linalg.norm(state.psi - psi_old))
                if r2 > 10 * s2:
                    state.rho *= 2.0
                elif s2 > 10 * r2:
                    state.rho /= 2.0
        x_final = state.psi.copy()
        margin = float(np.min(ci.margins_x(x_final, phi))) if ci is not None else np.inf
        nmargin = float(np.min(ci.normalized_margins(x_final, phi))) if ci is not None else np.inf
        result = WaveformResult(x=x_final, converged=converged, iterations=state.iterations,
                                primal_residual=state.primal_history[-1] if state.primal_history else np.inf,
                                min_margin=margin, status=status, history=state.primal_history)
        if status == INFEASIBLE or nmargin >= -margin_tol:
            break
    return result
