"""Detection probability of a coherent detector with known signal in Gaussian noise."""

from __future__ import annotations

import numpy as np
from scipy.stats import norm


def _check(scnr, p_fa):
    scnr = np.asarray(scnr, dtype=float)
    p_fa = np.asarray(p_fa, dtype=float)
    if np.any(scnr < 0) or np.any(~np.isfinite(scnr)):
        raise ValueError("scnr must be finite and nonnegative")
    if np.any(p_fa <= 0) or np.any(p_fa >= 1):
        raise ValueError("p_fa must lie strictly between 0 and 1")
    return scnr, p_fa


def detection_probability(scnr, p_fa):
    """``P_d = Q(Q^{-1}(P_fa) - sqrt(2 SCNR))`` with ``Q`` the Gaussian tail."""
    scnr, p_fa = _check(scnr, p_fa)
    pd = norm.sf(norm.isf(p_fa) - np.sqrt(2.0 * scnr))
    return float(pd) if pd.ndim == 0 else pd


def detection_probability_mc(scnr: float, p_fa: float, n_trials: int, seed=None,
                             length: int = 4, null_factor: int = 10,
                             chunk: int = 500_000) -> float:
    """Monte Carlo estimate from simulated filter outputs.

    A known complex signal ``s = sqrt(SCNR) u`` (``||u|| = 1``) is observed in
    unit-power circular Gaussian noise.  The detector compares ``Re{u^H r}``
    with a threshold taken as the empirical ``1 - p_fa`` quantile of
    ``null_factor * n_trials`` noise-only trials; the extra null trials keep
    the threshold error small at low ``p_fa``.
    """
    _check(scnr, p_fa)
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(length) + 1j * rng.standard_normal(length)
    u /= np.linalg.norm(u)
    s = np.sqrt(scnr) * u

    def stats(n, signal):
        out = []
        for start in range(0, n, chunk):
            m = min(chunk, n - start)
            z = (rng.standard_normal((m, length))
                 + 1j * rng.standard_normal((m, length))) / np.sqrt(2.0)
            if signal:
                z += s[None, :]
            out.append(np.real(z @ u.conj()))
        return np.concatenate(out)

    thr = np.quantile(stats(null_factor * n_trials, False), 1.0 - p_fa)
    return float(np.mean(stats(n_trials, True) > thr))
