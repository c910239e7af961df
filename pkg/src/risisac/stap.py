"""Space-time echo model: per-path channels, stacked operators and SCNR.

Vectorisation conventions
-------------------------
The waveform ``X = [X_1, ..., X_M]`` is ``N x ML`` and ``x = vec(X)``
(column-major), so ``x.reshape(M, L, N)[m, l]`` is the snapshot
``x_m[l]``.  The received block ``[Y_1, ..., Y_M]`` is ``N x MP`` and
``y.reshape(M, P, N)[m, p]`` is ``y_m[p]``.

The stacked operators are applied matrix-free: every path contributes
``D(f_d)[m] * H_path @ x_m[l]`` to snapshot ``l + tau_rel`` of pulse ``m``.
:func:`dense_operators` assembles the explicit Kronecker matrices and exists
only as a reference for tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .scenario import ChannelSet, Scenario, steering


def steering_bs(theta: float, N: int) -> np.ndarray:
    return steering(theta, N)


def steering_ris(theta: float, Nr: int) -> np.ndarray:
    return steering(theta, Nr)


def shift_matrix(tau_rel: int, L: int, P: int) -> np.ndarray:
    """0/1 matrix ``J`` (L x P) with ``J[m, n] = 1`` iff ``n = m + tau_rel``."""
    if tau_rel < 0 or tau_rel > P - L:
        raise ValueError(f"relative delay {tau_rel} outside the window [0, {P - L}]")
    J = np.zeros((L, P))
    J[np.arange(L), np.arange(L) + tau_rel] = 1.0
    return J


def doppler_phases(f_d: float, M: int, T: float) -> np.ndarray:
    if not T > 0:
        raise ValueError("pulse repetition interval must be positive")
    return np.exp(1j * f_d * T * np.arange(M))


def doppler_matrix(f_d: float, M: int, T: float) -> np.ndarray:
    return np.diag(doppler_phases(f_d, M, T))


@dataclass(frozen=True)
class EchoPath:
    """One echo path.  ``kind`` is 0 for the direct path and 1..3 otherwise."""

    kind: int
    ris: int | None
    alpha: complex
    tau_rel: int
    phases: np.ndarray  # (M,) slow-time Doppler phases
    a: np.ndarray  # BS steering vector of the scatterer
    b: np.ndarray | None  # RIS steering vector of the scatterer
    B: np.ndarray | None  # diag(b) @ G_r, (Nr, N)

    def channel(self, phi_r: np.ndarray | None) -> np.ndarray:
        """Composite N x N channel of this path for reflection vector ``phi_r``."""
        a = self.a
        if self.kind == 0:
            return self.alpha * np.outer(a, a)
        u = self.B.T @ phi_r  # G^T diag(phi) b
        if self.kind == 1:
            return self.alpha * np.outer(u, a)
        if self.kind == 2:
            return self.alpha * np.outer(a, u)
        return self.alpha * np.outer(u, u)


def composite_channel(kind: int, alpha: complex, a: np.ndarray, b: np.ndarray | None,
                      G: np.ndarray | None, phi_r: np.ndarray | None) -> np.ndarray:
    """Composite channel written out with diag(phi) explicitly."""
    if kind == 0:
        return alpha * np.outer(a, a)
    Phi = np.diag(phi_r)
    if kind == 1:
        return alpha * G.T @ Phi @ np.outer(b, a)
    if kind == 2:
        return alpha * np.outer(a, b) @ Phi @ G
    if kind == 3:
        return alpha * G.T @ Phi @ np.outer(b, b) @ Phi @ G
    raise ValueError(f"path kind must be in 0..3, got {kind}")


@dataclass
class StackedModel:
    """Immutable collection of target and clutter echo paths."""

    N: int
    M: int
    L: int
    P: int
    R: int
    Nr: int
    target_paths: list
    clutter_paths: list  # list (over clutters) of lists of EchoPath
    B_t: np.ndarray  # (R, Nr, N)
    B_q: np.ndarray  # (Q, R, Nr, N)
    a_t: np.ndarray
    a_q: np.ndarray  # (Q, N)
    pri: float
    sigma_r2: float
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def NML(self) -> int:
        return self.N * self.M * self.L

    @property
    def NMP(self) -> int:
        return self.N * self.M * self.P

    @property
    def n_phi(self) -> int:
        return self.R * self.Nr

    @property
    def Q(self) -> int:
        return len(self.clutter_paths)

    def split_phi(self, phi) -> list:
        phi = np.asarray(phi, dtype=complex)
        if phi.shape != (self.n_phi,):
            raise ValueError(f"phi must have length {self.n_phi}, got shape {phi.shape}")
        return [phi[r * self.Nr:(r + 1) * self.Nr] for r in range(self.R)]

    def _check_x(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        if x.shape != (self.NML,):
            raise ValueError(f"x must have length {self.NML}, got shape {x.shape}")
        return x

    def _apply(self, paths, x, phi) -> np.ndarray:
        X3 = self._check_x(x).reshape(self.M, self.L, self.N)
        phis = self.split_phi(phi) if self.R else []
        Y3 = np.zeros((self.M, self.P, self.N), dtype=complex)
        for path in paths:
            H = path.channel(phis[path.ris] if path.kind else None)
            HX = X3 @ H.T
            Y3[:, path.tau_rel:path.tau_rel + self.L, :] += path.phases[:, None, None] * HX
        return Y3.reshape(-1)

    def _adjoint(self, paths, y, phi) -> np.ndarray:
        y = np.asarray(y, dtype=complex)
        if y.shape != (self.NMP,):
            raise ValueError(f"y must have length {self.NMP}, got shape {y.shape}")
        Y3 = y.reshape(self.M, self.P, self.N)
        phis = self.split_phi(phi) if self.R else []
        X3 = np.zeros((self.M, self.L, self.N), dtype=complex)
        for path in paths:
            H = path.channel(phis[path.ris] if path.kind else None)
            seg = Y3[:, path.tau_rel:path.tau_rel + self.L, :]
            X3 += np.conj(path.phases)[:, None, None] * (seg @ H.conj())
        return X3.reshape(-1)

    def all_clutter_paths(self) -> list:
        return [p for paths in self.clutter_paths for p in paths]

    def direct_paths(self, which: str) -> list:
        paths = self.target_paths if which == "target" else self.all_clutter_paths()
        return [p for p in paths if p.kind == 0]

    def indirect_paths(self, which: str) -> list:
        paths = self.target_paths if which == "target" else self.all_clutter_paths()
        return [p for p in paths if p.kind != 0]

    def apply_target(self, x, phi) -> np.ndarray:
        """``(H_dir + H_ind(phi)) x``."""
        return self._apply(self.target_paths, x, phi)

    def apply_clutter(self, x, phi) -> np.ndarray:
        """``(H_dir,c + H_ind,c(phi)) x`` summed over all clutters."""
        return self._apply(self.all_clutter_paths(), x, phi)

    def adjoint_target(self, y, phi) -> np.ndarray:
        return self._adjoint(self.target_paths, y, phi)

    def adjoint_clutter(self, y, phi) -> np.ndarray:
        return self._adjoint(self.all_clutter_paths(), y, phi)

    def apply_direct(self, which: str, x) -> np.ndarray:
        return self._apply(self.direct_paths(which), x, np.zeros(self.n_phi))

    def apply_indirect(self, which: str, x, phi) -> np.ndarray:
        return self._apply(self.indirect_paths(which), x, phi)


def build_model(scenario: Scenario, channels: ChannelSet, use_ris: bool = True) -> StackedModel:
    """Assemble every echo path of ``scenario`` for one channel draw.

    With ``use_ris=False`` the RIS-assisted paths are dropped (R = 0); the
    snapshot window and delay reference are left unchanged.
    """
    c = scenario.config
    N, M, L, Nr = c.n_tx_antennas, c.n_pulses, c.n_slots, c.n_ris_elements
    R = c.n_ris if use_ris else 0
    if channels.G.shape[0] < R:
        R = channels.G.shape[0]
    d = scenario.delays
    dop = scenario.dopplers
    tau0 = d.min
    P = scenario.n_snapshots
    T = c.pri

    a_t = steering_bs(scenario.theta_t, N)
    b_t = [steering_ris(scenario.theta_tr[r], Nr) for r in range(R)]
    B_t = np.array([b_t[r][:, None] * channels.G[r] for r in range(R)]).reshape(R, Nr, N)

    target = [EchoPath(0, None, channels.alpha_t0, d.target_direct - tau0,
                       doppler_phases(dop.target_direct, M, T), a_t, None, None)]
    for r in range(R):
        for i in range(3):
            target.append(EchoPath(
                i + 1, r, channels.alpha_tri[r, i], int(d.target_indirect[r, i]) - tau0,
                doppler_phases(dop.target_indirect[r, i], M, T), a_t, b_t[r], B_t[r],
            ))

    Q = c.n_clutters
    static = np.ones(M, dtype=complex)
    a_q = np.array([steering_bs(th, N) for th in scenario.theta_q]).reshape(Q, N)
    B_q = np.zeros((Q, R, Nr, N), dtype=complex)
    clutter = []
    for q in range(Q):
        paths = [EchoPath(0, None, channels.alpha_q0[q], int(d.clutter_direct[q]) - tau0,
                          static, a_q[q], None, None)]
        for r in range(R):
            b = steering_ris(scenario.theta_qr[q, r], Nr)
            B_q[q, r] = b[:, None] * channels.G[r]
            for i in range(3):
                paths.append(EchoPath(
                    i + 1, r, channels.alpha_qri[q, r, i], int(d.clutter_indirect[q, r, i]) - tau0,
                    static, a_q[q], b, B_q[q, r],
                ))
        clutter.append(paths)

    return StackedModel(
        N=N, M=M, L=L, P=P, R=R, Nr=Nr,
        target_paths=target, clutter_paths=clutter,
        B_t=B_t, B_q=B_q, a_t=a_t, a_q=a_q,
        pri=T, sigma_r2=c.noise_power_radar,
    )


def dense_operators(model: StackedModel, phi) -> tuple:
    """Explicit ``(H_t, H_c)`` built from ``D (x) J^T (x) H`` sums.  Test use only."""
    phis = model.split_phi(phi) if model.R else []

    def assemble(paths):
        H = np.zeros((model.NMP, model.NML), dtype=complex)
        for p in paths:
            Hp = p.channel(phis[p.ris] if p.kind else None)
            J = shift_matrix(p.tau_rel, model.L, model.P)
            H += np.kron(np.diag(p.phases), np.kron(J.T, Hp))
        return H

    return assemble(model.target_paths), assemble(model.all_clutter_paths())


def scnr(model: StackedModel, x, phi, w, sigma_r2: float | None = None) -> float:
    """Output SCNR ``|w^H y_t|^2 / (|w^H y_c|^2 + sigma^2 w^H w)``."""
    w = np.asarray(w, dtype=complex)
    ww = float(np.vdot(w, w).real)
    if ww == 0.0:
        raise ValueError("receive filter w must be nonzero")
    s2 = model.sigma_r2 if sigma_r2 is None else sigma_r2
    yt = model.apply_target(x, phi)
    yc = model.apply_clutter(x, phi)
    return scnr_from_echoes(yt, yc, w, s2)


def scnr_from_echoes(yt, yc, w, sigma_r2) -> float:
    num = abs(np.vdot(w, yt)) ** 2
    den = abs(np.vdot(w, yc)) ** 2 + sigma_r2 * float(np.vdot(w, w).real)
    return float(num / den)
