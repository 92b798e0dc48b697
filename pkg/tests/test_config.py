"""RunConfig defaults, validation, file loading, and hashing."""

import json

import pytest

from mmgi.config import RunConfig, config_hash, load_config
from mmgi.errors import ConfigError


def test_reference_defaults():
    cfg = RunConfig()
    assert cfg.d_w == 400
    assert cfg.d_v == 2048
    assert cfg.d_s == 1024
    assert cfg.roi_count == 36
    assert cfg.scf1_threshold == 0.5
    assert cfg.gamma == 0.5 and cfg.lam == 0.5
    assert cfg.alpha1 == 0.5 and cfg.alpha2 == 0.5
    assert cfg.lr == 1e-4
    assert cfg.batch == 64
    assert cfg.epochs == 30
    assert cfg.dropout == 0.1
    assert cfg.max_text_length == 80
    assert cfg.mode == "full"
    assert cfg.d == 400  # chart width defaults to the word-embedding width


def test_resolved_fills_pitch_dim():
    cfg = RunConfig(d=32).resolved()
    assert cfg.d_p == 32


def test_validation_errors():
    with pytest.raises(ConfigError):
        RunConfig(mode="audio-only").resolved()
    with pytest.raises(ConfigError):
        RunConfig(d=16, d_p=8).resolved()
    with pytest.raises(ConfigError):
        RunConfig(dropout=1.0).resolved()
    with pytest.raises(ConfigError):
        RunConfig(batch=0).resolved()


def test_load_config_file_and_overrides(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"d": 24, "lr": 0.001, "mode": "textless"}))
    cfg = load_config(path, overrides={"lr": 0.01, "epochs": 3})
    assert cfg.d == 24 and cfg.lr == 0.01 and cfg.epochs == 3
    assert cfg.mode == "textless"

    path.write_text(json.dumps({"nonsense": 1}))
    with pytest.raises(ConfigError, match="nonsense"):
        load_config(path)

    path.write_text("{broken")
    with pytest.raises(ConfigError, match="line"):
        load_config(path)


def test_config_hash_stable_and_sensitive():
    a = RunConfig(d=32).resolved()
    b = RunConfig(d=32).resolved()
    c = RunConfig(d=48).resolved()
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(c)
    assert config_hash(a, {"vocab_size": 5}) != config_hash(a, {"vocab_size": 6})
