"""Tests for the key-value configuration loader."""

import os

import pytest

from risfd.config import ConfigError, canonical_echo, config_hash, load_config, parse_config
from risfd.simulator import SimConfig

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "configs")

MINIMAL = """
m = 2
k = 1
n = 2
trials = 10
master_seed = 3
"""


def test_minimal_config_fills_defaults():
    cfg = parse_config(MINIMAL, "inline")
    assert isinstance(cfg, SimConfig)
    assert (cfg.m, cfg.k, cfg.n, cfg.trials, cfg.master_seed) == (2, 1, 2, 10, 3)
    assert cfg.scheme == 1
    assert cfg.kappa_ris == 4.0
    assert cfg.geometry.d_ar == 20.0
    assert cfg.snr_db == (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)


def test_comments_and_inline_comments():
    cfg = parse_config("m = 2  # antennas\n# a comment line\nk = 1\nn = 2\n", "inline")
    assert (cfg.m, cfg.k, cfg.n) == (2, 1, 2)


def test_echo_round_trips():
    cfg = parse_config(MINIMAL, "inline")
    echoed = canonical_echo(cfg)
    again = parse_config(echoed, "echo")
    assert again == cfg
    assert canonical_echo(again) == echoed


def test_unknown_key_is_fatal_with_line_number():
    text = "m = 2\nk = 1\nn = 2\nbogus_knob = 5\n"
    with pytest.raises(ConfigError, match="inline:4"):
        parse_config(text, "inline")
    with pytest.raises(ConfigError, match="bogus_knob"):
        parse_config(text, "inline")


def test_duplicate_key_is_fatal():
    with pytest.raises(ConfigError, match="set twice"):
        parse_config("m = 2\nm = 3\nk = 1\nn = 2\n", "inline")


def test_malformed_value_is_fatal():
    with pytest.raises(ConfigError, match="inline:1"):
        parse_config("m = two\nk = 1\nn = 2\n", "inline")
    with pytest.raises(ConfigError, match="="):
        parse_config("m 2\n", "inline")


def test_invariant_violations_surface_as_config_errors():
    # training length that is not a whole number of schedule blocks
    with pytest.raises(ConfigError, match="multiple of n"):
        parse_config("m = 2\nk = 1\nn = 2\nt = 10\n", "inline")
    with pytest.raises(ConfigError, match="k <= m"):
        parse_config("m = 2\nk = 3\nn = 2\n", "inline")
    with pytest.raises(ConfigError, match="gamma"):
        parse_config("m = 2\nk = 1\nn = 2\ngamma_variant = literal\n", "inline")


def test_valid_override_in_blocks_is_accepted():
    cfg = parse_config("m = 2\nk = 1\nn = 2\nt = 12\n", "inline")
    assert cfg.t_override == 12


def test_geometry_keys_map_to_geometry():
    cfg = parse_config("m = 2\nk = 1\nn = 2\nd_ar = 5.0\nple_ar = 3.0\n", "inline")
    assert cfg.geometry.d_ar == 5.0
    assert cfg.geometry.ple_ar == 3.0


def test_config_hash_tracks_content():
    a = parse_config(MINIMAL, "x")
    b = parse_config(MINIMAL.replace("trials = 10", "trials = 11"), "x")
    assert config_hash(a) == config_hash(parse_config(MINIMAL, "y"))
    assert config_hash(a) != config_hash(b)
    assert len(config_hash(a)) == 64


def test_load_config_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(str(tmp_path / "nope.cfg"))


@pytest.mark.parametrize("name", ["reference.cfg", "desk.cfg"])
def test_bundled_configs_parse_and_echo(name):
    cfg = load_config(os.path.join(CONFIG_DIR, name))
    echoed = canonical_echo(cfg)
    assert parse_config(echoed, "echo") == cfg


def test_bundled_reference_values():
    cfg = load_config(os.path.join(CONFIG_DIR, "reference.cfg"))
    assert (cfg.m, cfg.k, cfg.n) == (5, 2, 100)
    assert cfg.trials == 10000
    assert (cfg.geometry.d_ar, cfg.geometry.d_ur, cfg.geometry.d_au) == (20.0, 20.0, 30.0)
    assert (cfg.geometry.ple_ar, cfg.geometry.ple_ur, cfg.geometry.ple_au) == (2.1, 4.2, 2.2)
    assert cfg.kappa_ris == 4.0


def test_bundled_desk_values():
    cfg = load_config(os.path.join(CONFIG_DIR, "desk.cfg"))
    assert (cfg.m, cfg.k, cfg.n) == (3, 2, 8)
    assert cfg.trials == 2000
    for g in cfg.geometry.gains():
        assert g == 1.0
