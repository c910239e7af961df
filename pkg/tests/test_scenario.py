import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from risisac.scenario import (
    DegenerateGeometryError, ScenarioConfig, build_scenario, desk_config, paper_config,
    path_delays, path_dopplers, path_loss, sample_channels,
)

# frozen from an independent math.atan2 / math.hypot computation
THETA_Q_DEFAULT = [0.10866121584058783, -0.07532889082834011, 0.06512516333438588]
FD_DIRECT_V30 = -3018.016831610422
FD_RIS_12_V30 = -2089.396268037984
FD_RIS_3_V30 = -1160.7757044655468


def test_full_size_defaults():
    c = paper_config()
    assert (c.n_tx_antennas, c.n_users, c.n_ris, c.n_ris_elements) == (8, 3, 2, 25)
    assert (c.n_pulses, c.n_slots, c.prf, c.carrier_freq) == (8, 8, 1000.0, 2.4e9)
    assert c.ris_positions == [(-12.0, 45.0), (12.0, 45.0)]
    ex = c.pathloss_exponents
    assert (ex["h_dk"], ex["h_rk"], ex["G_r"], ex["target_direct"]) == (3.0, 2.8, 2.0, 2.7)


def test_desk_profile_sizes():
    c = desk_config()
    assert (c.n_tx_antennas, c.n_users, c.n_pulses, c.n_slots, c.n_ris_elements, c.n_ris) == \
        (4, 2, 2, 4, 8, 2)


def test_broadside_target_and_clutter_angles():
    sc = build_scenario(paper_config())
    assert sc.theta_t == 0.0
    np.testing.assert_allclose(sc.theta_q, THETA_Q_DEFAULT, rtol=0, atol=1e-15)
    assert len(sc.theta_tr) == 2


@pytest.mark.parametrize("bad", [
    dict(n_tx_antennas=0), dict(total_power=0.0), dict(a_max=-1.0), dict(psk_order=6),
    dict(n_slots=20000), dict(n_ris=1),
])
def test_config_invariants(bad):
    with pytest.raises(ValueError):
        paper_config(**bad)


def test_coincident_positions_rejected():
    with pytest.raises(DegenerateGeometryError):
        build_scenario(paper_config(target_position=(-12.0, 45.0)))
    with pytest.raises(DegenerateGeometryError):
        build_scenario(paper_config(target_position=(0.0, 0.0)))


def test_path_loss():
    assert path_loss(1.0, 2.7, C0=0.3) == pytest.approx(math.sqrt(0.3))
    assert path_loss(10.0, 2.0, C0=0.3) == pytest.approx(math.sqrt(0.3) / 10)
    with pytest.raises(ValueError):
        path_loss(0.0, 2.0)


def test_delay_table_default_geometry():
    # path length / (c Ts) rounded, from an independent oracle: 100 m -> 3 slots,
    # 109.57 m and 119.15 m RIS paths -> 4 slots
    d = path_delays(build_scenario(paper_config()))
    assert d.target_direct == 3
    assert d.target_indirect.tolist() == [[4, 4, 4], [4, 4, 4]]
    assert d.clutter_direct.tolist() == [4, 4, 3]
    assert d.clutter_indirect[2].tolist() == [[4, 4, 4], [3, 3, 4]]


def test_i1_i2_equal_delay():
    d = path_delays(build_scenario(paper_config()))
    np.testing.assert_array_equal(d.target_indirect[:, 0], d.target_indirect[:, 1])


def test_doppler_table_v30():
    f = path_dopplers(build_scenario(paper_config(target_velocity=(0.0, 30.0))))
    assert f.target_direct == pytest.approx(FD_DIRECT_V30, rel=1e-12)
    np.testing.assert_allclose(f.target_indirect[:, :2], FD_RIS_12_V30, rtol=1e-12)
    np.testing.assert_allclose(f.target_indirect[:, 2], FD_RIS_3_V30, rtol=1e-12)


def test_static_and_orthogonal_target_have_no_doppler():
    f = path_dopplers(build_scenario(paper_config(target_velocity=(0.0, 0.0))))
    assert f.target_direct == 0 and not np.any(f.target_indirect)
    # target on the x-axis line through BS and the RIS at the same height
    cfg = paper_config(target_position=(30.0, 0.0), target_velocity=(0.0, 5.0), n_ris=1,
                       ris_positions=[(60.0, 0.0)])
    f = path_dopplers(build_scenario(cfg))
    assert abs(f.target_direct) < 1e-9 and np.all(np.abs(f.target_indirect) < 1e-9)


@settings(max_examples=25, deadline=None)
@given(vx=st.floats(-80, 80), vy=st.floats(-80, 80))
def test_doppler_antisymmetric(vx, vy):
    a = path_dopplers(build_scenario(desk_config(target_velocity=(vx, vy))))
    b = path_dopplers(build_scenario(desk_config(target_velocity=(-vx, -vy))))
    assert a.target_direct == pytest.approx(-b.target_direct, abs=1e-9)
    np.testing.assert_allclose(a.target_indirect, -b.target_indirect, atol=1e-9)


@settings(max_examples=20, deadline=None)
@given(scale=st.floats(0.2, 5.0))
def test_angles_scale_invariant(scale):
    base = paper_config()
    s = lambda pts: [(scale * x, scale * y) for x, y in pts]
    cfg = base.replace(target_position=tuple(scale * v for v in base.target_position),
                       ris_positions=s(base.ris_positions), clutter_positions=s(base.clutter_positions),
                       user_positions=s(base.user_positions))
    a, b = build_scenario(base), build_scenario(cfg)
    np.testing.assert_allclose(a.theta_q, b.theta_q, atol=1e-12)
    np.testing.assert_allclose(a.theta_tr, b.theta_tr, atol=1e-12)
    np.testing.assert_allclose(a.theta_qr, b.theta_qr, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(y=st.floats(20.0, 200.0), dy=st.floats(0.0, 300.0))
def test_delay_monotone_in_length(y, dy):
    d1 = path_delays(build_scenario(desk_config(target_position=(0.0, y))))
    d2 = path_delays(build_scenario(desk_config(target_position=(0.0, y + dy))))
    assert d2.target_direct >= d1.target_direct


def test_channels_deterministic_and_seed_dependent():
    sc = build_scenario(desk_config())
    a, b, c = sample_channels(sc, 5), sample_channels(sc, 5), sample_channels(sc, 6)
    for name in ("G", "h_d", "h_r", "alpha_tri", "alpha_q0", "alpha_qri"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
    assert a.alpha_t0 == b.alpha_t0
    assert np.any(a.h_d != c.h_d)


def test_user_channel_power_matches_pathloss():
    # Monte Carlo oracle: E|h_dk,n|^2 = PL(d) within 5 %
    sc = build_scenario(desk_config())
    draws = np.stack([sample_channels(sc, s).h_d for s in range(10_000)])
    emp = np.mean(np.abs(draws) ** 2, axis=(0, 2))
    pl = path_loss(sc.dist_bu, 3.0) ** 2
    np.testing.assert_allclose(emp, pl, rtol=0.05)


def test_without_ris_drops_ris_paths():
    sc = build_scenario(desk_config())
    ch = sample_channels(sc, 0).without_ris()
    assert ch.G.shape[0] == 0 and ch.alpha_tri.shape[0] == 0 and ch.alpha_qri.shape[1] == 0


def test_n_snapshots():
    sc = build_scenario(paper_config())
    assert sc.n_snapshots == 8 + 4 - 3


def test_config_dict_roundtrip():
    c = paper_config(total_power=40.0)
    assert ScenarioConfig(**c.to_dict()) == c
