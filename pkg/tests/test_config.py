import math

import pytest

from src import config
from src.config import ExperimentConfig, load_config, save_config
from src.errors import ConfigError


def test_defaults_validate():
    cfg = ExperimentConfig().validate()
    assert cfg.k_list == (100, 400, 1600, 6400)
    assert len(cfg.config_hash()) == 12


def test_text_round_trip_preserves_floats_and_tuples():
    cfg = ExperimentConfig(model='flat', n=2, k_list=(25, 100), mesh_D=2.5, sard_delta=0.07, seed=3)
    back = ExperimentConfig.from_text(cfg.to_text())
    assert back == cfg
    assert back.config_hash() == cfg.config_hash()


def test_comments_and_blank_lines_are_ignored():
    cfg = ExperimentConfig.from_text("# header\n\nn = 2   # complex dimension\nk_list = 4, 9\n")
    assert cfg.n == 2
    assert cfg.k_list == (4, 9)


def test_unknown_key_is_rejected():
    with pytest.raises(ConfigError, match="unknown key"):
        ExperimentConfig.from_text("colour = blue\n")


def test_malformed_line_is_rejected():
    with pytest.raises(ConfigError, match="line 1"):
        ExperimentConfig.from_text("n 2\n")


def test_unparseable_value_is_rejected():
    with pytest.raises(ConfigError, match="n: cannot parse"):
        ExperimentConfig.from_text("n = two\n")


@pytest.mark.parametrize("overrides", [
    {'model': 'sphere'},
    {'n': 4},
    {'k_list': (0,)},
    {'resolution': 4},
    {'sard_delta': 0.5},
    {'chi_fraction': 1.0},
    {'construction': 'random'},
])
def test_out_of_range_fields_raise(overrides):
    with pytest.raises(ConfigError):
        ExperimentConfig(**overrides).validate()


def test_load_config_applies_overrides_and_skips_none(tmp_path):
    path = save_config(ExperimentConfig(n=2, seed=1), tmp_path / 'cfg.txt')
    cfg = load_config(path, seed=9, resolution=None)
    assert cfg.n == 2
    assert cfg.seed == 9
    assert cfg.resolution == ExperimentConfig().resolution


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / 'absent.txt')


def test_hash_changes_with_content():
    assert ExperimentConfig(seed=1).config_hash() != ExperimentConfig(seed=2).config_hash()


def test_sigma_rate_halves_at_unit_distance():
    assert abs(math.exp(-config.SIGMA_RATE) - 0.5) < 1e-12
