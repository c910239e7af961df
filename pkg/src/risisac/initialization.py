"""Starting points: RCG phase search for ``phi`` and a max-min CI margin ``x``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .comm import CiConstraintSet
from .qp import solve_maxmin_margin
from .stap import StackedModel


@dataclass
class RcgResult:
    beta: np.ndarray
    objective: float
    iterations: int
    history: list = field(default_factory=list)


def channel_gain_objective(model: StackedModel):
    """``g(beta)`` and its Euclidean gradient (``Re{d^H grad}`` convention)."""
    R, Nr, N = model.R, model.Nr, model.N
    Bt = model.B_t.reshape(R * Nr, N)
    Bq = model.B_q.reshape(model.Q, R * Nr, N)

    def f(beta):
        vt = model.a_t + Bt.T @ beta
        val = float(np.vdot(vt, vt).real)
        grad = 2 * Bt.conj() @ vt
        for q in range(model.Q):
            vq = model.a_q[q] + Bq[q].T @ beta
            val -= float(np.vdot(vq, vq).real)
            grad = grad - 2 * Bq[q].conj() @ vq
        return val, grad

    return f


def _tangent(beta, v):
    return v - np.real(v * beta.conj()) * beta


def _retract(v):
    mag = np.abs(v)
    return np.where(mag > 0, v / np.where(mag > 0, mag, 1.0), 1.0 + 0j)


def rcg_maximize(f, beta0, max_iter: int = 500, tol: float = 1e-8, c1: float = 1e-4) -> RcgResult:
    """Riemannian conjugate gradient ascent on the complex circle manifold.

    Armijo backtracking (halving), Polak-Ribiere+ with restart whenever the
    direction is not an ascent direction.
    """
    beta = _retract(np.asarray(beta0, dtype=complex))
    val, eg = f(beta)
    g = _tangent(beta, eg)
    d = g.copy()
    hist = [val]
    step0 = 1.0
    it = 0
    for it in range(1, max_iter + 1):
        gn = float(np.linalg.norm(g))
        if gn <= tol:
            break
        slope = float(np.real(np.vdot(d, g)))
        if slope <= 0:
            d, slope = g.copy(), gn ** 2
        t = step0 / max(float(np.linalg.norm(d)), 1e-300)
        while True:
            cand = _retract(beta + t * d)
            cval, ceg = f(cand)
            if cval >= val + c1 * t * slope or t < 1e-20:
                break
            t *= 0.5
        if cval < val:
            break
        step0 = min(2.0 * t * float(np.linalg.norm(d)), 1e6)
        g_new = _tangent(cand, ceg)
        g_old_t = _tangent(cand, g)
        d_old_t = _tangent(cand, d)
        beta_pr = max(0.0, float(np.real(np.vdot(g_new, g_new - g_old_t))) / max(gn ** 2, 1e-300))
        d = g_new + beta_pr * d_old_t
        improvement = cval - val
        beta, val, g = cand, cval, g_new
        hist.append(val)
        if improvement <= 1e-15 * max(1.0, abs(val)):
            break
    return RcgResult(beta=beta, objective=val, iterations=it, history=hist)


def rcg_phase_init(model: StackedModel, a_max: float, max_iter: int = 500, tol: float = 1e-8):
    """``a_max * beta`` with ``beta`` maximising target-minus-clutter channel gain."""
    if model.R == 0:
        return np.zeros(0, dtype=complex), None
    res = rcg_maximize(channel_gain_objective(model), np.ones(model.n_phi, dtype=complex),
                       max_iter=max_iter, tol=tol)
    return a_max * res.beta, res


@dataclass
class InitX:
    x: np.ndarray
    delta: float
    status: str


def init_x(phi0, ci: CiConstraintSet, P_bs: float) -> InitX:
    """Worst-case CI margin maximiser under the per-entry budget."""
    H = ci.rows(phi0)
    b = np.sqrt(P_bs / H.shape[1])
    res = solve_maxmin_margin(H, b)
    return InitX(x=res.point, delta=res.delta, status=res.status)
