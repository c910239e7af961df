"""MVDR receive filter and the Dinkelbach ratio parameter.

The clutter echo is deterministic given ``(x, phi)``, so its covariance is
the rank-1 matrix ``y_c y_c^H`` and ``(R_c + sigma^2 I)^{-1}`` is applied
with the Sherman-Morrison identity in O(NMP).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .stap import StackedModel, scnr_from_echoes


@dataclass
class FilterState:
    w: np.ndarray
    eta: float
    y_c: np.ndarray  # rank-1 clutter covariance factor


def loaded_inverse_apply(u, y_c, sigma2: float) -> np.ndarray:
    """``(y_c y_c^H + sigma2 I)^{-1} u``."""
    u = np.asarray(u, dtype=complex)
    nc = float(np.vdot(y_c, y_c).real)
    return u / sigma2 - y_c * (np.vdot(y_c, u) / (sigma2 * (sigma2 + nc)))


def mvdr_from_echoes(y_t, y_c, sigma2: float) -> np.ndarray:
    if not np.any(y_t):
        raise ValueError("target response is zero; receive filter undefined")
    if sigma2 <= 0:
        raise ValueError("noise power must be positive")
    u = loaded_inverse_apply(y_t, y_c, sigma2)
    return u / float(np.vdot(u, u).real)


def mvdr_filter(x, phi, model: StackedModel, sigma_r2: float | None = None) -> np.ndarray:
    """Closed-form MVDR filter for waveform ``x`` and reflection ``phi``."""
    s2 = model.sigma_r2 if sigma_r2 is None else sigma_r2
    return mvdr_from_echoes(model.apply_target(x, phi), model.apply_clutter(x, phi), s2)


def dinkelbach_eta(x, phi, w, model: StackedModel, sigma_r2: float | None = None) -> float:
    """Optimal Dinkelbach parameter, which is the SCNR at ``(x, phi, w)``."""
    s2 = model.sigma_r2 if sigma_r2 is None else sigma_r2
    w = np.asarray(w, dtype=complex)
    if not np.any(w):
        raise ValueError("receive filter w must be nonzero")
    return scnr_from_echoes(model.apply_target(x, phi), model.apply_clutter(x, phi), w, s2)


def fp_objective(x, phi, w, eta, model: StackedModel, sigma_r2: float | None = None) -> float:
    """``|w^H y_t|^2 - eta (|w^H y_c|^2 + sigma^2 ||w||^2)``."""
    s2 = model.sigma_r2 if sigma_r2 is None else sigma_r2
    yt = model.apply_target(x, phi)
    yc = model.apply_clutter(x, phi)
    ww = float(np.vdot(w, w).real)
    return float(abs(np.vdot(w, yt)) ** 2 - eta * (abs(np.vdot(w, yc)) ** 2 + s2 * ww))
