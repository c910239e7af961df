"""Constructive-interference (CI) symbol-level precoding constraints.

For user ``k``, pulse ``m`` and slot ``l`` the noise-free received sample is
``h_k(phi)^T x_m[l]`` with ``h_k(phi)^T = h_d,k^T + sum_r phi_r^T diag(h_r,k) G_r``.
Keeping it inside the constructive sector of the intended PSK symbol gives two
real affine constraints per ``(k, m, l)``.  Constraint rows are ordered as
``i = (2k + f) * ML + j`` with ``j = m L + l`` and ``f`` selecting the sector
edge (``xi_1`` for ``f = 0``, ``xi_2`` for ``f = 1``), all indices 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import ChannelSet, ScenarioConfig


def psk_constellation(order: int) -> np.ndarray:
    """Unit-modulus PSK points, first point at angle pi/order."""
    q = np.arange(order)
    return np.exp(1j * (np.pi / order + 2 * np.pi * q / order))


def gray_labels(order: int) -> np.ndarray:
    q = np.arange(order)
    return q ^ (q >> 1)


@dataclass(frozen=True)
class SymbolBlock:
    """PSK symbols indexed ``[k, m, l]``."""

    indices: np.ndarray  # (K, M, L) integer constellation indices
    psk_order: int

    @property
    def symbols(self) -> np.ndarray:
        return psk_constellation(self.psk_order)[self.indices]

    @property
    def half_angle(self) -> float:
        return np.pi / self.psk_order

    @property
    def shape(self):
        return self.indices.shape

    def xi(self) -> np.ndarray:
        """Rotation coefficients ``(xi_1, xi_2)`` stacked on a trailing axis."""
        Phi = self.half_angle
        rot = np.exp(-1j * np.angle(self.symbols))
        xi1 = rot * (np.sin(Phi) + np.exp(-0.5j * np.pi) * np.cos(Phi))
        xi2 = rot * (np.sin(Phi) - np.exp(-0.5j * np.pi) * np.cos(Phi))
        return np.stack([xi1, xi2], axis=-1)


def generate_symbols(K: int, M: int, L: int, order: int, seed) -> SymbolBlock:
    if order < 2:
        raise ValueError("PSK order must be at least 2")
    rng = np.random.default_rng(seed)
    return SymbolBlock(indices=rng.integers(0, order, size=(K, M, L)), psk_order=int(order))


class CiConstraintSet:
    """CI constraints ``Re{h_i(phi)^T x} >= gamma_i`` for one symbol block."""

    def __init__(self, block: SymbolBlock, channels: ChannelSet, sigma_k2, qos_gamma,
                 use_ris: bool = True, gamma_override: float | None = None):
        self.block = block
        self.h_d = np.asarray(channels.h_d)
        self.G = np.asarray(channels.G) if use_ris else channels.G[:0]
        self.h_r = np.asarray(channels.h_r) if use_ris else channels.h_r[:0]
        self.K, self.M, self.L = block.shape
        self.N = self.h_d.shape[1]
        self.R = self.G.shape[0]
        self.Nr = self.G.shape[1] if self.R else 0
        sigma_k = np.sqrt(np.broadcast_to(np.asarray(sigma_k2, dtype=float), (self.K,)))
        Gam = np.broadcast_to(np.asarray(qos_gamma, dtype=float), (self.K,))
        self.gamma_user = sigma_k * np.sqrt(Gam) * np.sin(block.half_angle)
        if gamma_override is not None:
            self.gamma_user = np.full(self.K, float(gamma_override))
        self.sigma_k = sigma_k
        self._xi = block.xi()  # (K, M, L, 2)
        # diag(h_r,k) G_r : (R, K, Nr, N)
        self._HG = self.h_r[:, :, :, None] * self.G[:, None, :, :]

    @classmethod
    def from_config(cls, config: ScenarioConfig, block: SymbolBlock, channels: ChannelSet,
                    use_ris: bool = True, radar_only: bool = False):
        return cls(block, channels, config.noise_power_user, config.qos_gamma, use_ris=use_ris,
                   gamma_override=-1e9 if radar_only else None)

    @property
    def ML(self) -> int:
        return self.M * self.L

    @property
    def n_constraints(self) -> int:
        return 2 * self.K * self.ML

    @property
    def gamma(self) -> np.ndarray:
        """Threshold of every constraint row."""
        return np.repeat(np.repeat(self.gamma_user, 2), self.ML)

    def effective_channels(self, phi) -> np.ndarray:
        """``h_k(phi)`` for every user, shape (K, N)."""
        h = self.h_d.astype(complex).copy()
        if self.R:
            phi = np.asarray(phi, dtype=complex).reshape(self.R, self.Nr)
            h += np.einsum("rn,rkna->ka", phi, self._HG)
        return h

    def received(self, x, phi) -> np.ndarray:
        """Noise-free received samples, shape (K, M, L)."""
        h = self.effective_channels(phi)
        X3 = np.asarray(x, dtype=complex).reshape(self.M, self.L, self.N)
        return np.einsum("ka,mla->kml", h, X3)

    def rows(self, phi) -> np.ndarray:
        """Stacked ``h_i(phi)^T``, shape (2KML, NML)."""
        h = self.effective_channels(phi)
        K, ML, N = self.K, self.ML, self.N
        xi = self._xi.reshape(K, ML, 2)
        H = np.zeros((K, 2, ML, ML, N), dtype=complex)
        j = np.arange(ML)
        for f in range(2):
            H[:, f, j, j, :] = xi[:, :, f][:, :, None] * h[:, None, :]
        return H.reshape(2 * K * ML, ML * N)

    def margins_x(self, x, phi) -> np.ndarray:
        """``Re{h_i(phi)^T x} - gamma_i`` for every row."""
        y = self.received(x, phi).reshape(self.K, self.ML)
        vals = np.real(self._xi.reshape(self.K, self.ML, 2) * y[:, :, None])
        return np.transpose(vals, (0, 2, 1)).reshape(-1) - self.gamma

    def normalized_margins(self, x, phi) -> np.ndarray:
        """Margins divided by ``||h_k(phi)||``, i.e. in units of ``x``."""
        norms = np.linalg.norm(self.effective_channels(phi), axis=1)
        return self.margins_x(x, phi) / np.repeat(np.repeat(np.maximum(norms, 1e-300), 2), self.ML)

    def phi_coefficients(self, x) -> tuple:
        """``(d, g)`` with ``Re{d_i + phi^T g_i} = Re{h_i(phi)^T x}``.

        ``g`` has shape (2KML, R Nr).
        """
        K, ML = self.K, self.ML
        X3 = np.asarray(x, dtype=complex).reshape(ML, self.N)
        xi = np.transpose(self._xi.reshape(K, ML, 2), (0, 2, 1))  # (K, 2, ML)
        direct = np.einsum("ka,ja->kj", self.h_d, X3)
        d = (xi * direct[:, None, :]).reshape(-1)
        if not self.R:
            return d, np.zeros((d.size, 0), dtype=complex)
        ris = np.einsum("rkna,ja->kjrn", self._HG, X3).reshape(K, ML, self.R * self.Nr)
        g = (xi[:, :, :, None] * ris[:, None, :, :]).reshape(d.size, self.R * self.Nr)
        return d, g

    def sector_margins_geometric(self, x, phi) -> np.ndarray:
        """Direct evaluation of the constructive-region inequality, (K, M, L)."""
        y = self.received(x, phi)
        rot = y * np.exp(-1j * np.angle(self.block.symbols))
        Phi = self.block.half_angle
        thr = self.gamma_user[:, None, None] / np.sin(Phi)
        return (rot.real - thr) * np.tan(Phi) - np.abs(rot.imag)


def ber_monte_carlo(x, phi, ci: CiConstraintSet, n_noise: int, seed, unit: str = "symbol"):
    """Per-user error rate of coherent minimum-distance PSK detection.

    ``unit="symbol"`` counts wrong symbol decisions; ``unit="bit"`` counts
    bit errors under Gray labelling.
    """
    if n_noise < 1:
        raise ValueError("n_noise must be >= 1")
    rng = np.random.default_rng(seed)
    order = ci.block.psk_order
    const = psk_constellation(order)
    y = ci.received(x, phi)  # (K, M, L)
    shape = (n_noise,) + y.shape
    noise = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    r = y[None] + ci.sigma_k[None, :, None, None] * noise
    decided = np.argmax(np.real(r[..., None] * np.conj(const)), axis=-1)
    sent = np.broadcast_to(ci.block.indices, decided.shape)
    if unit == "symbol":
        err = decided != sent
        return err.mean(axis=(0, 2, 3))
    if unit == "bit":
        labels = gray_labels(order)
        nbits = int(np.log2(order))
        diff = labels[decided] ^ labels[sent]
        bit_err = sum(((diff >> b) & 1) for b in range(nbits))
        return bit_err.mean(axis=(0, 2, 3)) / nbits
    raise ValueError("unit must be 'symbol' or 'bit'")
