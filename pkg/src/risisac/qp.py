"""Small convex QP solver for the waveform and reflection subproblems.

Problems have the form::

    minimize    x^H Q x + Re{x^H q} + (rho/2) ||x - v||^2
    subject to  Re{h_i^T x} >= gamma_i,   |x_j| <= b_j

over complex ``x``.  They are lifted to real variables ``z = [Re x; Im x]``
and solved with an operator-splitting (ADMM) scheme in the style of OSQP:
the constraint map stacks the normalised halfspace rows on top of the
identity, and the projection step is exact (clip for halfspaces, radial
shrink for discs).  The KKT matrix is dense and Cholesky-factorised; it
is refactored only when the step-size adapts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

OPTIMAL = "optimal"
MAX_ITER = "max_iter"
INFEASIBLE = "infeasible_detected"


def to_real(x) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    return np.concatenate([x.real, x.imag])


def to_complex(z) -> np.ndarray:
    n = z.size // 2
    return z[:n] + 1j * z[n:]


def lift_hermitian(Q) -> np.ndarray:
    """Real symmetric ``Q_r`` with ``z^T Q_r z = x^H Q x``."""
    Q = 0.5 * (Q + Q.conj().T)
    return np.block([[Q.real, -Q.imag], [Q.imag, Q.real]])


def lift_rows(H) -> np.ndarray:
    """Real rows with ``row @ z = Re{h^T x}``."""
    H = np.asarray(H, dtype=complex)
    return np.hstack([H.real, -H.imag])


@dataclass
class ConeQpProblem:
    """Data of one complex QP.

    ``Q`` may be a dense Hermitian PSD matrix, a callable ``Q(v) -> Qv`` or
    ``None``.  ``Q_factor`` (``Q = F F^H``) may be supplied instead; it is
    PSD by construction.
    """

    n: int
    q: np.ndarray | None = None
    Q: object = None
    Q_factor: np.ndarray | None = None
    rho: float = 0.0
    center: np.ndarray | None = None
    H: np.ndarray | None = None  # (m, n) rows h_i^T
    gamma: np.ndarray | None = None
    radius: object = np.inf
    eps_feas: float = 1e-7
    eps_opt: float = 1e-7
    max_iter: int = 10000

    def __post_init__(self):
        if self.rho < 0:
            raise ValueError("proximal weight rho must be nonnegative")
        b = np.broadcast_to(np.asarray(self.radius, dtype=float), (self.n,))
        if np.any(b <= 0):
            raise ValueError("disc radii must be positive")
        self.radius = np.array(b)
        if self.H is None:
            self.H = np.zeros((0, self.n), dtype=complex)
            self.gamma = np.zeros(0)
        self.H = np.atleast_2d(np.asarray(self.H, dtype=complex))
        self.gamma = np.asarray(self.gamma, dtype=float).reshape(-1)
        if self.H.shape != (self.gamma.size, self.n):
            raise ValueError("halfspace rows and thresholds disagree in shape")

    def dense_Q(self) -> np.ndarray:
        if self.Q_factor is not None:
            F = np.asarray(self.Q_factor, dtype=complex).reshape(self.n, -1)
            Q = F @ F.conj().T
        elif self.Q is None:
            Q = np.zeros((self.n, self.n), dtype=complex)
        elif callable(self.Q):
            Q = np.column_stack([self.Q(e) for e in np.eye(self.n, dtype=complex)])
        else:
            Q = np.asarray(self.Q, dtype=complex)
        return 0.5 * (Q + Q.conj().T)

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=complex)
        val = float(np.real(np.vdot(x, self.dense_Q() @ x)))
        if self.q is not None:
            val += float(np.real(np.vdot(x, self.q)))
        if self.rho:
            c = 0 if self.center is None else self.center
            val += 0.5 * self.rho * float(np.sum(np.abs(x - c) ** 2))
        return val

    def violation(self, x) -> float:
        """Largest constraint violation (halfspaces normalised by ``||h_i||``)."""
        x = np.asarray(x, dtype=complex)
        viol = float(np.max(np.abs(x) - self.radius, initial=0.0))
        if self.gamma.size:
            norms = np.maximum(np.linalg.norm(self.H, axis=1), 1e-300)
            marg = (np.real(self.H @ x) - self.gamma) / norms
            viol = max(viol, float(np.max(-marg, initial=0.0)))
        return max(viol, 0.0)


@dataclass
class QpSolution:
    point: np.ndarray
    primal_residual: float
    dual_residual: float
    violation: float
    iterations: int
    status: str
    objective: float = np.nan
    dual: np.ndarray | None = field(default=None, repr=False)


class AdmmKernel:
    """Lifted problem data plus cached factorisations.

    Only the linear term and the thresholds may change between solves
    sharing a kernel (as in bisection).
    """

    def __init__(self, P: np.ndarray, rows: np.ndarray, radius: np.ndarray,
                 scale: float | None = None, sigma: float = 1e-6, alpha: float = 1.6):
        if scale is None:
            pmax = float(np.max(np.abs(P), initial=0.0))
            scale = 1.0 / pmax if pmax > 0 else 1.0
        self.scale = scale
        self.n2 = P.shape[0]
        self.m = rows.shape[0]
        norms = np.linalg.norm(rows, axis=1)
        self.row_norms = np.where(norms > 0, norms, 1.0)
        self.rows = rows / self.row_norms[:, None]
        self.zero_rows = norms == 0
        self.A = np.vstack([self.rows, np.eye(self.n2)])
        self.P = P * scale
        self.radius = radius
        self.sigma = sigma
        self.alpha = alpha
        self._fact = {}

    def factor(self, rho: float):
        key = float(rho)
        if key not in self._fact:
            if len(self._fact) > 8:
                self._fact.clear()
            K = self.P + self.sigma * np.eye(self.n2) + rho * (self.A.T @ self.A)
            self._fact[key] = cho_factor(K)
        return self._fact[key]

    def project(self, s: np.ndarray, lower: np.ndarray) -> np.ndarray:
        out = s.copy()
        out[:self.m] = np.maximum(s[:self.m], lower)
        n = self.n2 // 2
        zr, zi = s[self.m:self.m + n], s[self.m + n:]
        mag = np.hypot(zr, zi)
        scale = np.where(mag > self.radius, self.radius / np.maximum(mag, 1e-300), 1.0)
        out[self.m:self.m + n] = zr * scale
        out[self.m + n:] = zi * scale
        return out

    def support(self, dy: np.ndarray, lower: np.ndarray) -> float:
        """Support function of the constraint set at ``dy`` (finite part)."""
        n = self.n2 // 2
        val = float(lower @ np.minimum(dy[:self.m], 0.0))
        d = dy[self.m:]
        val += float(self.radius @ np.hypot(d[:n], d[n:]))
        return val

    def solve(self, p: np.ndarray, gamma: np.ndarray, z0=None, y0=None,
              eps_abs=1e-7, eps_rel=1e-7, max_iter=10000, rho0=0.1) -> tuple:
        lower = gamma / self.row_norms
        lower = np.where(self.zero_rows, np.where(gamma <= 0, -np.inf, np.inf), lower)
        if np.any(np.isposinf(lower)):
            z = np.zeros(self.n2)
            return z, np.zeros(self.m + self.n2), np.inf, np.inf, 0, INFEASIBLE
        A, P = self.A, self.P
        z = np.zeros(self.n2) if z0 is None else np.array(z0, dtype=float)
        s = self.project(A @ z, lower)
        y = np.zeros(self.m + self.n2) if y0 is None else np.array(y0, dtype=float)
        rho = rho0
        fact = self.factor(rho)
        status = MAX_ITER
        r_p = r_d = np.inf
        it = 0
        check_every = 10
        for it in range(1, max_iter + 1):
            rhs = self.sigma * z - p + A.T @ (rho * s - y)
            zt = cho_solve(fact, rhs)
            st = A @ zt
            z_new = self.alpha * zt + (1 - self.alpha) * z
            s_rel = self.alpha * st + (1 - self.alpha) * s
            s_new = self.project(s_rel + y / rho, lower)
            y_new = y + rho * (s_rel - s_new)
            dy = y_new - y
            z, s, y = z_new, s_new, y_new
            if it % check_every and it != max_iter:
                continue
            Az = A @ z
            Pz = P @ z
            Aty = A.T @ y
            r_p = float(np.max(np.abs(Az - s)))
            r_d = float(np.max(np.abs(Pz + p + Aty)))
            tol_p = eps_abs + eps_rel * max(np.max(np.abs(Az)), np.max(np.abs(s)))
            tol_d = eps_abs + eps_rel * max(np.max(np.abs(Pz)), np.max(np.abs(Aty)),
                                            np.max(np.abs(p)))
            if r_p <= tol_p and r_d <= tol_d:
                status = OPTIMAL
                break
            ndy = float(np.max(np.abs(dy)))
            if ndy > 0:
                atdy = float(np.max(np.abs(A.T @ dy)))
                pos = float(np.max(dy[:self.m], initial=0.0))
                eps_inf = 1e-9
                if (atdy <= eps_inf * ndy and pos <= eps_inf * ndy
                        and self.support(dy, np.where(np.isinf(lower), 0, lower)) < -eps_inf * ndy):
                    status = INFEASIBLE
                    break
            if it % 50 == 0:
                num = r_p / max(tol_p - eps_abs, 1e-300) * eps_rel
                den = r_d / max(tol_d - eps_abs, 1e-300) * eps_rel
                if num > 0 and den > 0:
                    ratio = np.sqrt(num / den)
                    if ratio > 5 or ratio < 0.2:
                        rho = float(np.clip(rho * ratio, 1e-6, 1e6))
                        fact = self.factor(rho)
        return z, y, r_p, r_d, it, status


def lift_linear(problem: ConeQpProblem) -> np.ndarray:
    p = np.zeros(2 * problem.n)
    if problem.q is not None:
        p += to_real(problem.q)
    if problem.rho and problem.center is not None:
        p -= problem.rho * to_real(problem.center)
    return p


def lift_quadratic(problem: ConeQpProblem) -> np.ndarray:
    return 2.0 * lift_hermitian(problem.dense_Q()) + problem.rho * np.eye(2 * problem.n)


def _lift_problem(problem: ConeQpProblem) -> tuple:
    return lift_quadratic(problem), lift_linear(problem)


def make_kernel(problem: ConeQpProblem) -> AdmmKernel:
    """Kernel reusable by later problems with the same ``Q``, ``rho``, ``H`` and radii."""
    return AdmmKernel(lift_quadratic(problem), lift_rows(problem.H), problem.radius)


def solve_cone_qp(problem: ConeQpProblem, x0=None, y0=None, kernel: AdmmKernel | None = None) -> QpSolution:
    """Solve a :class:`ConeQpProblem`.

    Returns the best iterate with its residuals.  The point is radially
    clipped onto the discs at the end, so disc constraints hold exactly.
    """
    if kernel is None:
        P, p = _lift_problem(problem)
        scale = None
        if not np.any(P):
            pmax = float(np.max(np.abs(p), initial=0.0))
            scale = 1.0 / pmax if pmax > 0 else 1.0
        kernel = AdmmKernel(P, lift_rows(problem.H), problem.radius, scale=scale)
    else:
        p = lift_linear(problem)
    z0 = None if x0 is None else to_real(x0)
    z, y, r_p, r_d, it, status = kernel.solve(
        p * kernel.scale, problem.gamma, z0, y0,
        eps_abs=problem.eps_feas, eps_rel=problem.eps_opt, max_iter=problem.max_iter,
    )
    x = to_complex(z)
    mag = np.abs(x)
    over = mag > problem.radius
    x[over] *= problem.radius[over] / mag[over]
    viol = problem.violation(x)
    if status == OPTIMAL and viol > 10 * problem.eps_feas * max(1.0, float(np.max(problem.radius))):
        status = MAX_ITER
    return QpSolution(point=x, primal_residual=r_p, dual_residual=r_d, violation=viol,
                      iterations=it, status=status, objective=problem.objective(x), dual=y)


@dataclass
class MaxMinResult:
    point: np.ndarray
    delta: float
    iterations: int
    status: str


def solve_maxmin_margin(H, radius, offsets=None, tol: float = 1e-5, max_bisect: int = 60,
                        eps: float = 1e-7, test_iter: int = 3000) -> MaxMinResult:
    """Maximise ``delta`` subject to ``Re{h_i^T x} - offsets_i >= delta`` and ``|x_j| <= b``.

    Bisection on ``delta``; every feasibility test is a minimum-norm QP
    capped at ``test_iter`` iterations.  A test that neither converges nor
    certifies infeasibility counts as infeasible unless its iterate already
    reaches ``delta``, so the bracket can only err on the safe side.
    ``delta`` is reported as achieved by the returned point.
    """
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    m, n = H.shape
    if m == 0:
        raise ValueError("at least one constraint is required")
    off = np.zeros(m) if offsets is None else np.asarray(offsets, dtype=float)
    b = np.broadcast_to(np.asarray(radius, dtype=float), (n,))

    def achieved(x):
        return float(np.min(np.real(H @ x) - off))

    base = ConeQpProblem(n=n, rho=2.0, center=np.zeros(n), H=H, gamma=off, radius=b,
                         eps_feas=eps, eps_opt=eps, max_iter=20000)
    P, _ = _lift_problem(base)
    kernel = AdmmKernel(P, lift_rows(H), base.radius)
    p0 = np.zeros(2 * n)

    best_x = np.zeros(n, dtype=complex)
    best = achieved(best_x)
    lo = best
    hi = float(np.min(np.abs(H) @ b - off))
    scale = max(abs(hi), abs(lo), 1e-300)
    z = y = None
    it = 0
    for it in range(1, max_bisect + 1):
        if hi - lo <= tol * scale:
            break
        mid = 0.5 * (lo + hi)
        z_new, y_new, _, _, _, status = kernel.solve(
            p0, off + mid, z, y, eps_abs=eps, eps_rel=eps, max_iter=test_iter)
        x = to_complex(z_new)
        mag = np.abs(x)
        x = np.where(mag > b, x * b / np.maximum(mag, 1e-300), x)
        got = achieved(x)
        if got > best:
            best, best_x = got, x
        if status == INFEASIBLE:
            hi = mid
        elif got >= mid - tol * scale:
            lo = max(mid, got) if got <= hi else mid
            z, y = z_new, y_new
        else:
            hi = mid
    status = OPTIMAL if hi - lo <= tol * scale else MAX_ITER
    return MaxMinResult(point=best_x, delta=best, iterations=it, status=status)
