from pathlib import Path

import pytest

from risisac.config_io import ConfigError, parse_config, parse_config_text, serialize_config

CONFIGS = sorted((Path(__file__).resolve().parents[1] / "configs").glob("*.yaml"))

MINIMAL = """\
profile: desk
experiment:
  kind: power_sweep
  grid:
    total_power: [40.0]
"""


def test_shipped_configs_parse():
    assert CONFIGS
    for p in CONFIGS:
        parse_config(p)


def test_paper_profile_parameters():
    cfg = parse_config(Path(__file__).resolve().parents[1] / "configs" / "paper.yaml").scenario
    assert (cfg.n_tx_antennas, cfg.n_users, cfg.n_ris_elements, cfg.n_ris) == (8, 3, 25, 2)
    assert (cfg.n_pulses, cfg.n_slots, cfg.prf, cfg.carrier_freq) == (8, 8, 1000.0, 2.4e9)


@pytest.mark.parametrize("path", CONFIGS, ids=lambda p: p.name)
def test_roundtrip(path):
    a = parse_config(path)
    b = parse_config_text(serialize_config(a))
    assert a.scenario == b.scenario
    assert a.experiment == b.experiment
    assert serialize_config(a) == serialize_config(b)


def test_profile_override():
    assert parse_config_text(MINIMAL, profile_override="paper").scenario.n_tx_antennas == 8


@pytest.mark.parametrize("text,needle", [
    ("profile: desk\n", "'experiment'"),
    ("experiment:\n  grid: {total_power: [1.0]}\n", "'kind'"),
    (MINIMAL + "extra: 1\n", "line 6: extra"),
    (MINIMAL + "  bogus: 2\n", "line 6: experiment.bogus"),
    ("scenario:\n  n_antenna: 4\n" + MINIMAL.split("\n", 1)[1], "line 2: scenario.n_antenna"),
    ("scenario:\n  total_power: -1\n" + MINIMAL.split("\n", 1)[1], "scenario.total_power"),
    (MINIMAL.replace("power_sweep", "fig3"), "experiment.kind"),
    (MINIMAL + "  seeds: [1, 1]\n", "experiment.seeds"),
    (MINIMAL + "  schemes: [best]\n", "experiment.schemes"),
    (MINIMAL.replace("total_power", "weather"), "experiment.grid"),
    ("profile: huge\n" + MINIMAL.split("\n", 1)[1], "line 1: profile"),
    ("experiment: [1\n", "YAML syntax"),
])
def test_errors_name_the_key(text, needle):
    with pytest.raises(ConfigError) as err:
        parse_config_text(text)
    assert needle in str(err.value)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "nope.yaml")
