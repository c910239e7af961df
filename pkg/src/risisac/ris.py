"""Reflection-coefficient block: equivalent forms, MM surrogate and QP.

For fixed ``x`` every RIS path is linear (single bounce) or quadratic
(double bounce) in the reflection vector, so::

    H_ind(phi) x = F phi + F~ phi_bar,     phi_bar_r = phi_r (x) phi_r

The negated FP objective then reads::

    f2(phi) = phi^H C phi + Re{phi^H c} + phi_bar^H C~ phi_bar
              + Re{phi_bar^H c~} + Re{phi_bar^H Cb phi} + c2

with rank-1 or rank-2 matrices built from ``u = F^H w`` and ``u~ = F~^H w``.
The quartic, cubic and indefinite quadratic parts are bounded by convex
quadratics tangent at the anchor; the curvature constants are certified
over the feasible box ``|phi_n| <= a_max``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .comm import CiConstraintSet
from .qp import ConeQpProblem, QpSolution, solve_cone_qp
from .stap import StackedModel


def phi_bar(phi, R: int, Nr: int) -> np.ndarray:
    """Per-RIS Kronecker square ``[phi_1 (x) phi_1; ...]``."""
    P = np.asarray(phi, dtype=complex).reshape(R, Nr)
    return np.einsum("ri,rj->rij", P, P).reshape(-1)


def xi_matrix(phi, R: int, Nr: int) -> np.ndarray:
    """Block-diagonal Jacobian of ``phi_bar``: ``I (x) phi_r + phi_r (x) I`` per RIS."""
    P = np.asarray(phi, dtype=complex).reshape(R, Nr)
    I = np.eye(Nr)
    out = np.zeros((R * Nr * Nr, R * Nr), dtype=complex)
    for r in range(R):
        blk = np.kron(I, P[r][:, None]) + np.kron(P[r][:, None], I)
        out[r * Nr * Nr:(r + 1) * Nr * Nr, r * Nr:(r + 1) * Nr] = blk
    return out


def real_form(L: np.ndarray) -> np.ndarray:
    """``Lb`` with ``Re{phi^H L conj(phi)} = z^T Lb z``, ``z = [Re phi; Im phi]``."""
    return np.block([[L.real, L.imag], [L.imag, -L.real]])


@dataclass
class FMatrices:
    F_t: np.ndarray  # (NMP, R Nr)
    Ft_t: np.ndarray  # (NMP, R Nr^2)
    F_c: np.ndarray
    Ft_c: np.ndarray
    t0: np.ndarray  # direct target echo
    c0: np.ndarray  # direct clutter echo
    R: int
    Nr: int

    def target_echo(self, phi) -> np.ndarray:
        return self.t0 + self.F_t @ phi + self.Ft_t @ phi_bar(phi, self.R, self.Nr)

    def clutter_echo(self, phi) -> np.ndarray:
        return self.c0 + self.F_c @ phi + self.Ft_c @ phi_bar(phi, self.R, self.Nr)


def _assemble(paths, X3, model: StackedModel):
    M, L, P, N, R, Nr = model.M, model.L, model.P, model.N, model.R, model.Nr
    F = np.zeros((M * P * N, R * Nr), dtype=complex)
    Ft = np.zeros((M * P * N, R * Nr * Nr), dtype=complex)
    for p in paths:
        if p.kind == 0:
            continue
        r, tau = p.ris, p.tau_rel
        cols = slice(r * Nr, (r + 1) * Nr)
        ph = p.phases[:, None, None] * p.alpha
        if p.kind == 1:
            s = np.zeros((M, P), dtype=complex)
            s[:, tau:tau + L] = ph[:, :, 0] * (X3 @ p.a)
            F[:, cols] += np.kron(s.reshape(-1, 1), p.B.T)
            continue
        S = np.zeros((M, P, Nr), dtype=complex)
        S[:, tau:tau + L, :] = ph * (X3 @ p.B.T)
        if p.kind == 2:
            F[:, cols] += np.kron(S.reshape(M * P, Nr), p.a[:, None])
        else:
            Ft[:, r * Nr * Nr:(r + 1) * Nr * Nr] += np.kron(S.reshape(M * P, Nr), p.B.T)
    return F, Ft


def build_F_matrices(x, model: StackedModel) -> FMatrices:
    X3 = model._check_x(x).reshape(model.M, model.L, model.N)
    F_t, Ft_t = _assemble(model.target_paths, X3, model)
    F_c, Ft_c = _assemble(model.all_clutter_paths(), X3, model)
    return FMatrices(F_t, Ft_t, F_c, Ft_c,
                     model.apply_direct("target", x), model.apply_direct("clutter", x),
                     model.R, model.Nr)


@dataclass
class F2Terms:
    """Rank-1 factors of ``f2``; dense matrices are built on request."""

    u_t: np.ndarray
    ut_t: np.ndarray
    u_c: np.ndarray
    ut_c: np.ndarray
    a_t: complex  # w^H t0
    a_c: complex  # w^H c0
    eta: float
    c2: float
    R: int
    Nr: int

    @property
    def C(self):
        return self.eta * np.outer(self.u_c, self.u_c.conj()) - np.outer(self.u_t, self.u_t.conj())

    @property
    def C_tilde(self):
        return self.eta * np.outer(self.ut_c, self.ut_c.conj()) - np.outer(self.ut_t, self.ut_t.conj())

    @property
    def C_bar(self):
        return 2 * self.eta * np.outer(self.ut_c, self.u_c.conj()) - 2 * np.outer(self.ut_t, self.u_t.conj())

    @property
    def c(self):
        return 2 * self.eta * self.u_c * self.a_c - 2 * self.u_t * self.a_t

    @property
    def c_tilde(self):
        return 2 * self.eta * self.ut_c * self.a_c - 2 * self.ut_t * self.a_t

    def C_bar_apply(self, v):
        return (2 * self.eta * self.ut_c * np.vdot(self.u_c, v)
                - 2 * self.ut_t * np.vdot(self.u_t, v))

    def C_bar_adjoint(self, v):
        return (2 * self.eta * self.u_c * np.vdot(self.ut_c, v)
                - 2 * self.u_t * np.vdot(self.ut_t, v))

    def C_tilde_apply(self, v):
        return (self.eta * self.ut_c * np.vdot(self.ut_c, v)
                - self.ut_t * np.vdot(self.ut_t, v))

    def value(self, phi) -> float:
        """``f2`` through the rank-1 factors (cheap)."""
        pb = phi_bar(phi, self.R, self.Nr)
        gt = self.a_t + np.vdot(self.u_t, phi) + np.vdot(self.ut_t, pb)
        gc = self.a_c + np.vdot(self.u_c, phi) + np.vdot(self.ut_c, pb)
        return float(self.eta * abs(gc) ** 2 - abs(gt) ** 2 + self.c2 - self.eta * abs(self.a_c) ** 2
                     + abs(self.a_t) ** 2)

    def magnitude(self, phi) -> float:
        """Sum of the absolute terms of ``f2``; ``f2`` itself is ~0 at a Dinkelbach point."""
        pb = phi_bar(phi, self.R, self.Nr)
        gt = self.a_t + np.vdot(self.u_t, phi) + np.vdot(self.ut_t, pb)
        gc = self.a_c + np.vdot(self.u_c, phi) + np.vdot(self.ut_c, pb)
        noise = self.c2 - self.eta * abs(self.a_c) ** 2 + abs(self.a_t) ** 2
        return float(abs(gt) ** 2 + self.eta * abs(gc) ** 2 + abs(noise))

    def value_expanded(self, phi) -> float:
        """``f2`` from the expanded quadratic/quartic/cubic form (test oracle)."""
        pb = phi_bar(phi, self.R, self.Nr)
        v = np.vdot(phi, self.C @ phi) + np.vdot(phi, self.c).real
        v += np.vdot(pb, self.C_tilde @ pb) + np.vdot(pb, self.c_tilde).real
        v += np.vdot(pb, self.C_bar @ phi).real
        return float(np.real(v) + self.c2)


def assemble_f2_terms(F: FMatrices, w, eta: float, sigma_r2: float) -> F2Terms:
    w = np.asarray(w, dtype=complex)
    a_t = complex(np.vdot(w, F.t0))
    a_c = complex(np.vdot(w, F.c0))
    c2 = eta * abs(a_c) ** 2 - abs(a_t) ** 2 + eta * sigma_r2 * float(np.vdot(w, w).real)
    return F2Terms(
        u_t=F.F_t.conj().T @ w, ut_t=F.Ft_t.conj().T @ w,
        u_c=F.F_c.conj().T @ w, ut_c=F.Ft_c.conj().T @ w,
        a_t=a_t, a_c=a_c, eta=float(eta), c2=float(c2), R=F.R, Nr=F.Nr,
    )


def lmax_sym(S: np.ndarray) -> float:
    if S.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh(0.5 * (S + S.T.conj()))[-1])


def _reshape_blocks(v, R, Nr):
    return np.asarray(v).reshape(R, Nr, Nr)


@dataclass
class CurvatureBounds:
    lam1: float
    lam2: float
    lam3: float
    mu: np.ndarray  # per-RIS curvature of the ||phi_r||^4 bound
    kappa: tuple = (0.0, 0.0, 0.0)


def curvature_bounds(terms: F2Terms, phi0, a_max: float, inflate: float = 1.01) -> CurvatureBounds:
    """Certified curvature constants at anchor ``phi0``.

    ``lam1 = eta ||u~_c||^2`` bounds ``lambda_max(C~)`` exactly.  ``lam2``
    bounds the real form of the reshaped linear part of the quartic bound.
    ``lam3`` bounds the second-order remainder of the cubic term on the
    feasible box, including its third-order part.
    """
    R, Nr = terms.R, terms.Nr
    phi0 = np.asarray(phi0, dtype=complex)
    P0 = phi0.reshape(R, Nr)
    pb0 = phi_bar(phi0, R, Nr)
    lam1 = terms.eta * float(np.vdot(terms.ut_c, terms.ut_c).real)

    ell = 2 * (terms.C_tilde_apply(pb0) - lam1 * pb0) + terms.c_tilde
    Ls = _reshape_blocks(ell, R, Nr)
    lam2 = max(0.0, max(lmax_sym(real_form(Ls[r]) + real_form(Ls[r]).T) for r in range(R)))
    lam2 *= inflate

    Xi = xi_matrix(phi0, R, Nr)
    # Herm part of Xi^H Cb is rank <= 4: build it through the factors.
    XiH_ut_c = Xi.conj().T @ terms.ut_c
    XiH_ut_t = Xi.conj().T @ terms.ut_t
    K1 = 2 * terms.eta * np.outer(XiH_ut_c, terms.u_c.conj()) - 2 * np.outer(XiH_ut_t, terms.u_t.conj())
    kappa1 = max(lmax_sym(K1), 0.0)
    V = _reshape_blocks(terms.C_bar_apply(phi0), R, Nr)
    kappa2 = 0.5 * max(lmax_sym(real_form(V[r]) + real_form(V[r]).T) for r in range(R))
    kappa2 = max(kappa2, 0.0)
    cb_norm = (2 * terms.eta * np.linalg.norm(terms.ut_c) * np.linalg.norm(terms.u_c)
               + 2 * np.linalg.norm(terms.ut_t) * np.linalg.norm(terms.u_t))
    D = np.sqrt(np.sum((a_max + np.abs(P0)) ** 2, axis=1))
    kappa3 = float(cb_norm * np.max(D))
    lam3 = 2 * (inflate * kappa1 + inflate * kappa2 + kappa3)

    n0 = np.linalg.norm(P0, axis=1)
    S = np.sqrt(Nr) * a_max
    mu = 2 * n0 ** 2 + (S + n0) ** 2
    return CurvatureBounds(lam1=lam1, lam2=lam2, lam3=lam3, mu=mu, kappa=(kappa1, kappa2, kappa3))


@dataclass
class RisSurrogate:
    M_mat: np.ndarray
    m_vec: np.ndarray
    const: float
    anchor: np.ndarray
    bounds: CurvatureBounds
    terms: F2Terms

    def value(self, phi) -> float:
        phi = np.asarray(phi, dtype=complex)
        return float(np.real(np.vdot(phi, self.M_mat @ phi)) + np.real(np.vdot(phi, self.m_vec))
                     + self.const)

    def magnitude(self, phi) -> float:
        phi = np.asarray(phi, dtype=complex)
        return float(abs(np.vdot(phi, self.M_mat @ phi)) + abs(np.vdot(phi, self.m_vec))
                     + abs(self.const))

    def tolerance(self, phi, rel: float = 1e-8) -> float:
        """Allowed surrogate-minus-f2 slack at ``phi``.

        ``rel`` of the f2 summands plus round-off of the surrogate's own
        summands, which can be many orders larger than f2 itself.
        """
        return rel * self.terms.magnitude(phi) + 1e3 * np.finfo(float).eps * self.magnitude(phi)


def ris_surrogate(terms: F2Terms, bounds: CurvatureBounds, phi0) -> RisSurrogate:
    """Convex quadratic ``phi^H M phi + Re{phi^H m} + const`` majorising ``f2``."""
    R, Nr = terms.R, terms.Nr
    n = R * Nr
    phi0 = np.asarray(phi0, dtype=complex)
    P0 = phi0.reshape(R, Nr)
    pb0 = phi_bar(phi0, R, Nr)
    lam1, lam2, lam3, mu = bounds.lam1, bounds.lam2, bounds.lam3, bounds.mu
    n0sq = np.sum(np.abs(P0) ** 2, axis=1)

    # phi^H C phi: keep the convex clutter part, linearise the target part
    ut_phi0 = np.vdot(terms.u_t, phi0)
    M_mat = terms.eta * np.outer(terms.u_c, terms.u_c.conj())
    m_vec = -2 * terms.u_t * ut_phi0 + terms.c
    const = abs(ut_phi0) ** 2 + terms.c2

    # quartic: C~ <= lam1 I, then lam1 ||phi_r||^4 by its box-valid quadratic bound
    Ct_pb0 = terms.C_tilde_apply(pb0)
    const += float(np.real(np.vdot(pb0, lam1 * pb0 - Ct_pb0)))
    ell = 2 * (Ct_pb0 - lam1 * pb0) + terms.c_tilde
    mu_vec = np.repeat(mu, Nr)
    M_mat = M_mat + lam1 * np.diag(mu_vec)
    m_vec = m_vec + lam1 * np.repeat(4 * n0sq - 2 * mu, Nr) * phi0
    const += lam1 * float(np.sum(-3 * n0sq ** 2 + mu * n0sq))

    # Re{phi_bar^H ell} = sum_r z_r^T Lb_r z_r <= lam2/2 ||z||^2 + z^T lbar + const
    Ls = _reshape_blocks(ell, R, Nr)
    lbar_c = np.zeros(n, dtype=complex)
    for r in range(R):
        Lb = real_form(Ls[r])
        Ssym = Lb + Lb.T
        z0 = np.concatenate([P0[r].real, P0[r].imag])
        lb = (Ssym - lam2 * np.eye(2 * Nr)) @ z0
        lbar_c[r * Nr:(r + 1) * Nr] = lb[:Nr] + 1j * lb[Nr:]
        const += -0.5 * float(z0 @ (Ssym - lam2 * np.eye(2 * Nr)) @ z0)
    M_mat = M_mat + 0.5 * lam2 * np.eye(n)
    m_vec = m_vec + lbar_c

    # cubic: tangent plus lam3/2 ||phi - phi0||^2
    Cb_phi0 = terms.C_bar_apply(phi0)
    Xi0 = xi_matrix(phi0, R, Nr)
    g3 = terms.C_bar_adjoint(pb0) + Xi0.conj().T @ Cb_phi0
    h0 = float(np.real(np.vdot(pb0, Cb_phi0)))
    M_mat = M_mat + 0.5 * lam3 * np.eye(n)
    m_vec = m_vec + g3 - lam3 * phi0
    const += h0 - float(np.real(np.vdot(phi0, g3))) + 0.5 * lam3 * float(np.vdot(phi0, phi0).real)

    M_mat = 0.5 * (M_mat + M_mat.conj().T)
    return RisSurrogate(M_mat=M_mat, m_vec=m_vec, const=float(const), anchor=phi0.copy(),
                        bounds=bounds, terms=terms)


def ris_qp_solve(sur: RisSurrogate, ci: CiConstraintSet | None, x, a_max: float,
                 eps: float = 1e-8) -> QpSolution:
    """Minimise the surrogate under the CI constraints (in phi form) and ``|phi_n| <= a_max``."""
    n = sur.anchor.size
    H = gamma = None
    if ci is not None:
        d, g = ci.phi_coefficients(x)
        H, gamma = g, ci.gamma - d.real
    prob = ConeQpProblem(n=n, Q=sur.M_mat, q=sur.m_vec, H=H, gamma=gamma, radius=a_max,
                         eps_feas=eps, eps_opt=eps, max_iter=20000)
    return solve_cone_qp(prob, x0=sur.anchor)
