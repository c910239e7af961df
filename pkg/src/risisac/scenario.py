"""Scene geometry, path tables and random channel sampling.

All positions are 2-D coordinates in metres with the dual-function base
station (BS) at ``bs_position``.  Every array (BS and RIS) is a half-wavelength
ULA whose broadside points along the +y axis, so the angle of a point seen
from an array is ``atan2(dx, dy)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

#: keys of :attr:`ScenarioConfig.pathloss_exponents`
PATHLOSS_KEYS = (
    "target_direct",
    "target_indirect",
    "clutter_direct",
    "clutter_indirect",
    "h_dk",
    "h_rk",
    "G_r",
)


class DegenerateGeometryError(ValueError):
    """Two entities that must be separated share a position."""


def db_to_linear(value_db):
    return 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)


def dbm_to_watts(value_dbm):
    return 10.0 ** ((np.asarray(value_dbm, dtype=float) - 30.0) / 10.0)


def _default_exponents():
    return {
        "target_direct": 2.7,
        "target_indirect": 2.3,
        "clutter_direct": 2.7,
        "clutter_indirect": 2.3,
        "h_dk": 3.0,
        "h_rk": 2.8,
        "G_r": 2.0,
    }


@dataclass
class ScenarioConfig:
    """Scene description.  Defaults reproduce the full-size simulation setup.

    Powers are in watts and ``qos_gamma`` is a linear SINR.  The noise
    default of 1e-8 W is -80 dBW.  The path-loss reference ``C0`` is 1, i.e.
    ``PL(d) = (d0 / d) ** exponent``; every hop of a cascaded RIS path pays
    its own loss, so ``C0`` also sets the RIS-to-direct echo ratio.
    """

    bs_position: tuple = (0.0, 0.0)
    n_tx_antennas: int = 8
    n_users: int = 3
    n_ris: int = 2
    n_ris_elements: int = 25
    n_pulses: int = 8
    n_slots: int = 8
    prf: float = 1000.0
    carrier_freq: float = 2.4e9
    sampling_interval: float = 1e-7
    total_power: float = 50.0
    a_max: float = 5.0
    qos_gamma: float = 10.0
    noise_power_radar: float = 1e-8
    noise_power_user: float = 1e-8
    psk_order: int = 4
    target_position: tuple = (0.0, 50.0)
    target_velocity: tuple = (0.0, 30.0)
    ris_positions: list = field(default_factory=lambda: [(-12.0, 45.0), (12.0, 45.0)])
    clutter_positions: list = field(
        default_factory=lambda: [(6.0, 55.0), (-4.0, 53.0), (3.0, 46.0)]
    )
    user_positions: list = field(
        default_factory=lambda: [(-7.0, 64.0), (-3.0, 66.5), (-5.5, 62.0)]
    )
    pathloss_exponents: dict = field(default_factory=_default_exponents)
    pathloss_ref: float = 1.0
    d0: float = 1.0
    target_reflectivity: float = 1.0
    clutter_reflectivity: float = 1.0
    path_gain_model: str = "total_length"
    g_fading: str = "rayleigh"
    rng_seed: int = 0

    def __post_init__(self):
        self.bs_position = tuple(float(v) for v in self.bs_position)
        self.target_position = tuple(float(v) for v in self.target_position)
        self.target_velocity = tuple(float(v) for v in self.target_velocity)
        self.ris_positions = [tuple(float(v) for v in p) for p in self.ris_positions]
        self.clutter_positions = [tuple(float(v) for v in p) for p in self.clutter_positions]
        self.user_positions = [tuple(float(v) for v in p) for p in self.user_positions]
        self.pathloss_exponents = {**_default_exponents(), **dict(self.pathloss_exponents)}
        self.validate()

    @property
    def n_clutters(self) -> int:
        return len(self.clutter_positions)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq

    @property
    def pri(self) -> float:
        return 1.0 / self.prf

    def validate(self):
        positive_ints = {
            "n_tx_antennas": self.n_tx_antennas,
            "n_users": self.n_users,
            "n_ris_elements": self.n_ris_elements,
            "n_pulses": self.n_pulses,
            "n_slots": self.n_slots,
        }
        for name, value in positive_ints.items():
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if int(self.n_ris) != self.n_ris or self.n_ris < 0:
            raise ValueError(f"n_ris must be a nonnegative integer, got {self.n_ris!r}")
        if len(self.ris_positions) != self.n_ris:
            raise ValueError(
                f"ris_positions has {len(self.ris_positions)} entries, n_ris = {self.n_ris}"
            )
        if len(self.user_positions) != self.n_users:
            raise ValueError(
                f"user_positions has {len(self.user_positions)} entries, n_users = {self.n_users}"
            )
        for name in ("total_power", "a_max", "prf", "carrier_freq", "sampling_interval",
                     "noise_power_radar", "noise_power_user", "pathloss_ref", "d0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.qos_gamma < 0:
            raise ValueError("qos_gamma must be nonnegative")
        omega = int(self.psk_order)
        if omega != self.psk_order or omega < 2 or omega & (omega - 1):
            raise ValueError(f"psk_order must be a power of 2 >= 2, got {self.psk_order!r}")
        if self.n_slots * self.sampling_interval > 1.0 / self.prf:
            raise ValueError("pulse duration n_slots * sampling_interval exceeds the PRI")
        unknown = set(self.pathloss_exponents) - set(PATHLOSS_KEYS)
        if unknown:
            raise ValueError(f"unknown path-loss exponent keys: {sorted(unknown)}")
        if self.path_gain_model not in ("total_length", "per_leg"):
            raise ValueError(f"path_gain_model must be 'total_length' or 'per_leg'")
        if self.g_fading not in ("rayleigh", "los"):
            raise ValueError(f"g_fading must be 'rayleigh' or 'los'")

    def replace(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = list(value)
            elif isinstance(value, list):
                value = [list(v) for v in value]
            elif isinstance(value, dict):
                value = dict(value)
            out[f.name] = value
        return out


def paper_config(**overrides) -> ScenarioConfig:
    """Full-size setup: N=8, K=3, R=2 RIS of 25 elements, M=L=8."""
    return ScenarioConfig(**overrides)


def desk_config(**overrides) -> ScenarioConfig:
    """Reduced setup for fast runs: N=4, K=2, M=2, L=4, Nr=8, R=2."""
    base = dict(
        n_tx_antennas=4,
        n_users=2,
        n_ris_elements=8,
        n_pulses=2,
        n_slots=4,
        user_positions=[(-7.0, 64.0), (-3.0, 66.5)],
    )
    base.update(overrides)
    return ScenarioConfig(**base)


def path_loss(d, exponent, C0=1.0, d0=1.0):
    """Amplitude gain ``sqrt(C0 * (d0 / d) ** exponent)``."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("path_loss requires d > 0")
    return np.sqrt(C0 * (d0 / d) ** exponent)


def _angle(src, dst) -> float:
    dx = dst[0] - src[0]
    dy = dst[1] - src[1]
    return math.atan2(dx, dy)


def _dist(p, q) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def _unit(src, dst) -> np.ndarray:
    v = np.array([dst[0] - src[0], dst[1] - src[1]], dtype=float)
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class DelayTable:
    """Integer fast-time delays (slots) of every echo path.

    ``target_indirect`` and ``clutter_indirect`` carry a trailing axis of
    length 3 for the three NLoS compositions (BS-target-RIS-BS,
    BS-RIS-target-BS, BS-RIS-target-RIS-BS).
    """

    target_direct: int
    target_indirect: np.ndarray  # (R, 3)
    clutter_direct: np.ndarray  # (Q,)
    clutter_indirect: np.ndarray  # (Q, R, 3)

    def all_values(self) -> np.ndarray:
        return np.concatenate([
            [self.target_direct],
            self.target_indirect.ravel(),
            self.clutter_direct.ravel(),
            self.clutter_indirect.ravel(),
        ]).astype(int)

    @property
    def min(self) -> int:
        return int(self.all_values().min())

    @property
    def max(self) -> int:
        return int(self.all_values().max())


@dataclass(frozen=True)
class DopplerTable:
    """Doppler angular frequencies (rad/s); clutter paths are static."""

    target_direct: float
    target_indirect: np.ndarray  # (R, 3)


@dataclass
class Scenario:
    """Geometry derived from a :class:`ScenarioConfig`."""

    config: ScenarioConfig
    theta_t: float
    theta_tr: np.ndarray  # (R,) target seen from each RIS
    theta_q: np.ndarray  # (Q,)
    theta_qr: np.ndarray  # (Q, R)
    theta_rb: np.ndarray  # (R,) RIS seen from the BS
    theta_br: np.ndarray  # (R,) BS seen from each RIS
    dist_bt: float
    dist_tr: np.ndarray  # (R,)
    dist_br: np.ndarray  # (R,)
    dist_bq: np.ndarray  # (Q,)
    dist_qr: np.ndarray  # (Q, R)
    dist_bu: np.ndarray  # (K,)
    dist_ru: np.ndarray  # (R, K)
    delays: DelayTable = None
    dopplers: DopplerTable = None

    @property
    def n_snapshots(self) -> int:
        """P = L + (max path delay - min path delay)."""
        return self.config.n_slots + self.delays.max - self.delays.min

    @property
    def dims(self) -> dict:
        c = self.config
        P = self.n_snapshots
        return {
            "N": c.n_tx_antennas,
            "M": c.n_pulses,
            "L": c.n_slots,
            "P": P,
            "NML": c.n_tx_antennas * c.n_pulses * c.n_slots,
            "NMP": c.n_tx_antennas * c.n_pulses * P,
        }


def _check_separated(name_a, a, name_b, b):
    if _dist(a, b) == 0.0:
        raise DegenerateGeometryError(f"{name_a} and {name_b} coincide at {tuple(a)}")


def build_scenario(config: ScenarioConfig) -> Scenario:
    """Compute angles, distances, delays and Doppler shifts for ``config``."""
    config.validate()
    bs = config.bs_position
    tgt = config.target_position
    R, Q, K = config.n_ris, config.n_clutters, config.n_users

    _check_separated("BS", bs, "target", tgt)
    for r, ris in enumerate(config.ris_positions):
        _check_separated("BS", bs, f"RIS {r}", ris)
        _check_separated("target", tgt, f"RIS {r}", ris)
        for q, clt in enumerate(config.clutter_positions):
            _check_separated(f"clutter {q}", clt, f"RIS {r}", ris)
        for k, usr in enumerate(config.user_positions):
            _check_separated(f"user {k}", usr, f"RIS {r}", ris)
    for q, clt in enumerate(config.clutter_positions):
        _check_separated("BS", bs, f"clutter {q}", clt)
    for k, usr in enumerate(config.user_positions):
        _check_separated("BS", bs, f"user {k}", usr)

    ris = config.ris_positions
    clt = config.clutter_positions
    usr = config.user_positions
    scenario = Scenario(
        config=config,
        theta_t=_angle(bs, tgt),
        theta_tr=np.array([_angle(p, tgt) for p in ris]),
        theta_q=np.array([_angle(bs, c) for c in clt]),
        theta_qr=np.array([[_angle(p, c) for p in ris] for c in clt]).reshape(Q, R),
        theta_rb=np.array([_angle(bs, p) for p in ris]),
        theta_br=np.array([_angle(p, bs) for p in ris]),
        dist_bt=_dist(bs, tgt),
        dist_tr=np.array([_dist(tgt, p) for p in ris]),
        dist_br=np.array([_dist(bs, p) for p in ris]),
        dist_bq=np.array([_dist(bs, c) for c in clt]),
        dist_qr=np.array([[_dist(c, p) for p in ris] for c in clt]).reshape(Q, R),
        dist_bu=np.array([_dist(bs, u) for u in usr]),
        dist_ru=np.array([[_dist(p, u) for u in usr] for p in ris]).reshape(R, K),
    )
    scenario.delays = path_delays(scenario)
    scenario.dopplers = path_dopplers(scenario)
    return scenario


def path_lengths(scenario: Scenario) -> dict:
    """Total propagation length (m) of each echo path."""
    s = scenario
    bt, tr, br = s.dist_bt, s.dist_tr, s.dist_br
    ind_t = np.stack([bt + tr + br, br + tr + bt, 2 * br + 2 * tr], axis=-1)
    bq, qr = s.dist_bq, s.dist_qr
    ind_q = np.stack(
        [bq[:, None] + qr + br[None, :], br[None, :] + qr + bq[:, None], 2 * br[None, :] + 2 * qr],
        axis=-1,
    )
    return {
        "target_direct": 2 * bt,
        "target_indirect": ind_t.reshape(len(br), 3),
        "clutter_direct": 2 * bq,
        "clutter_indirect": ind_q.reshape(len(bq), len(br), 3),
    }


def delay_slots(length, sampling_interval) -> np.ndarray:
    """Round a propagation length to the nearest fast-time slot."""
    return np.rint(np.asarray(length, dtype=float) / (SPEED_OF_LIGHT * sampling_interval)).astype(int)


def path_delays(scenario: Scenario) -> DelayTable:
    ts = scenario.config.sampling_interval
    lengths = path_lengths(scenario)
    return DelayTable(
        target_direct=int(delay_slots(lengths["target_direct"], ts)),
        target_indirect=delay_slots(lengths["target_indirect"], ts),
        clutter_direct=delay_slots(lengths["clutter_direct"], ts),
        clutter_indirect=delay_slots(lengths["clutter_indirect"], ts),
    )


def path_dopplers(scenario: Scenario) -> DopplerTable:
    """Bistatic closing-speed Doppler of the direct and RIS-assisted paths."""
    c = scenario.config
    v = np.asarray(c.target_velocity, dtype=float)
    k = 2 * np.pi / c.wavelength
    tgt = c.target_position
    vb = float(v @ _unit(tgt, c.bs_position))
    fd0 = k * 2 * vb
    ind = np.zeros((c.n_ris, 3))
    for r, ris in enumerate(c.ris_positions):
        vr = float(v @ _unit(tgt, ris))
        ind[r] = [k * (vb + vr), k * (vb + vr), k * 2 * vr]
    return DopplerTable(target_direct=fd0, target_indirect=ind)


@dataclass
class ChannelSet:
    """One random realisation of every channel and echo path gain."""

    G: np.ndarray  # (R, Nr, N) BS -> RIS
    h_d: np.ndarray  # (K, N) BS -> user
    h_r: np.ndarray  # (R, K, Nr) RIS -> user
    alpha_t0: complex
    alpha_tri: np.ndarray  # (R, 3)
    alpha_q0: np.ndarray  # (Q,)
    alpha_qri: np.ndarray  # (Q, R, 3)
    seed: int
    n_snapshots: int

    def without_ris(self) -> "ChannelSet":
        return replace(
            self,
            G=self.G[:0],
            h_r=self.h_r[:0],
            alpha_tri=self.alpha_tri[:0],
            alpha_qri=self.alpha_qri[:, :0],
        )


def _crandn(rng, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _echo_gain(scenario, legs, exponent):
    """Amplitude loss of an echo path made of ``legs`` (distances in m)."""
    c = scenario.config
    legs = [np.asarray(l, dtype=float) for l in legs]
    if c.path_gain_model == "total_length":
        return path_loss(sum(legs), exponent, c.pathloss_ref, c.d0)
    gain = 1.0
    for leg in legs:
        gain = gain * path_loss(leg, exponent, c.pathloss_ref, c.d0)
    return gain


def echo_path_gains(scenario: Scenario) -> dict:
    """Deterministic magnitudes of every echo path gain.

    The BS-RIS legs are carried by ``G`` and are therefore excluded here.
    """
    s = scenario
    c = s.config
    ex = c.pathloss_exponents
    bt, tr = s.dist_bt, s.dist_tr
    t_ind = np.stack(
        [
            _echo_gain(s, [np.full_like(tr, bt), tr], ex["target_indirect"]),
            _echo_gain(s, [tr, np.full_like(tr, bt)], ex["target_indirect"]),
            _echo_gain(s, [tr, tr], ex["target_indirect"]),
        ],
        axis=-1,
    ).reshape(c.n_ris, 3)
    bq, qr = s.dist_bq, s.dist_qr
    bq2 = np.broadcast_to(bq[:, None], qr.shape)
    q_ind = np.stack(
        [
            _echo_gain(s, [bq2, qr], ex["clutter_indirect"]),
            _echo_gain(s, [qr, bq2], ex["clutter_indirect"]),
            _echo_gain(s, [qr, qr], ex["clutter_indirect"]),
        ],
        axis=-1,
    ).reshape(c.n_clutters, c.n_ris, 3)
    return {
        "target_direct": c.target_reflectivity * float(_echo_gain(s, [bt, bt], ex["target_direct"])),
        "target_indirect": c.target_reflectivity * t_ind,
        "clutter_direct": c.clutter_reflectivity * np.asarray(
            _echo_gain(s, [bq, bq], ex["clutter_direct"])
        ).reshape(c.n_clutters),
        "clutter_indirect": c.clutter_reflectivity * q_ind,
    }


def steering(theta, n: int) -> np.ndarray:
    """Half-wavelength ULA response ``exp(-j pi k sin(theta))``, k = 0..n-1."""
    return np.exp(-1j * np.pi * np.arange(n) * np.sin(theta))


def sample_channels(scenario: Scenario, seed: int | None = None) -> ChannelSet:
    """Draw Rayleigh user/RIS channels and random-phase echo gains."""
    c = scenario.config
    seed = c.rng_seed if seed is None else seed
    rng = np.random.default_rng(seed)
    N, K, R, Nr, Q = c.n_tx_antennas, c.n_users, c.n_ris, c.n_ris_elements, c.n_clutters
    ex = c.pathloss_exponents
    C0, d0 = c.pathloss_ref, c.d0

    h_d = _crandn(rng, (K, N)) * path_loss(scenario.dist_bu, ex["h_dk"], C0, d0)[:, None]
    h_r = _crandn(rng, (R, K, Nr)) * path_loss(scenario.dist_ru, ex["h_rk"], C0, d0)[:, :, None]
    g_amp = path_loss(scenario.dist_br, ex["G_r"], C0, d0) if R else np.zeros(0)
    if c.g_fading == "rayleigh":
        G = _crandn(rng, (R, Nr, N)) * g_amp[:, None, None]
    else:
        G = np.stack([
            g_amp[r] * np.outer(steering(scenario.theta_br[r], Nr),
                                steering(scenario.theta_rb[r], N))
            for r in range(R)
        ]).reshape(R, Nr, N)

    mags = echo_path_gains(scenario)

    def phases(shape):
        return np.exp(2j * np.pi * rng.random(shape))

    return ChannelSet(
        G=G,
        h_d=h_d,
        h_r=h_r,
        alpha_t0=complex(mags["target_direct"] * phases(())),
        alpha_tri=mags["target_indirect"] * phases((R, 3)),
        alpha_q0=mags["clutter_direct"] * phases((Q,)),
        alpha_qri=mags["clutter_indirect"] * phases((Q, R, 3)),
        seed=int(seed),
        n_snapshots=scenario.n_snapshots,
    )
