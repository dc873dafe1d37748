#!/usr/bin/env python
"""Tests for the configuration layer."""

import numpy as np
import pytest

from mimo_jrc.channel import Scene
from mimo_jrc.config import (
    ALL_MCS,
    PAPER_DEFAULTS,
    Mcs,
    RadarConfig,
    ReceiverConfig,
    SystemConfig,
    derive_radar_axes,
    load_config,
    save_config,
    validate_config,
)
from mimo_jrc.utils import ConfigError

INVALID_CONFIGS = [
    ({"n_sc": 48}, "n_sc"),
    ({"n_cp": 64}, "n_cp: cyclic prefix too long"),
    ({"n_cp": -1}, "n_cp"),
    ({"d_rx": 0.03}, "d_rx"),
    ({"n_tx": 0, "d_rx": 0.0}, "n_tx"),
    ({"pilot_values": [1.0, 1.0, 1.0]}, "pilot_values"),
    ({"pilot_values": [1.0, 1.0, 1.0, 0.5]}, "pilot_values"),
    ({"n_fft_range": 32}, "n_fft_range"),
    ({"n_fft_angle": 4}, "n_fft_angle"),
    ({"range_window": "kaiser"}, "range_window"),
]

SECTIONS = [(SystemConfig, "system"), (RadarConfig, "radar"), (ReceiverConfig, "receiver")]


def test_default_numerology(default_config):
    assert default_config.wavelength == pytest.approx(12.49e-3, rel=1e-3)
    assert default_config.range_resolution == pytest.approx(1.2, rel=1e-3)
    assert default_config.max_range == pytest.approx(76.8, rel=1e-3)
    assert default_config.n_virtual == 8
    assert default_config.symbol_length == 80
    assert default_config.subcarrier_spacing == pytest.approx(1.953125e6)
    assert len(default_config.data_subcarriers) == 48
    assert list(default_config.pilot_subcarriers) == [43, 57, 7, 21]
    assert len(default_config.guard_subcarriers) == 12
    assert 0 in default_config.guard_subcarriers
    assert default_config.n_fft_range == 256
    assert default_config.n_fft_angle == 128


def test_virtual_array_is_uniform(default_config):
    positions = np.sort(default_config.virtual_positions)
    np.testing.assert_allclose(np.diff(positions), default_config.d_tx)


@pytest.mark.parametrize("overrides, message", INVALID_CONFIGS)
def test_invalid_config(overrides, message):
    with pytest.raises((ConfigError, ValueError)) as excinfo:
        SystemConfig(**overrides)
    assert message.split(":")[0] in str(excinfo.value)


def test_overlapping_subcarrier_sets():
    cfg = SystemConfig()
    cfg.pilot_subcarriers = [43, 57, 7, 1]
    errors = validate_config(cfg)
    assert any(e.startswith("data_subcarriers/pilot_subcarriers: overlapping indices [1]") for e in errors)


def test_config_error_lists_every_violation():
    with pytest.raises(ConfigError) as excinfo:
        SystemConfig(n_cp=64, d_rx=0.03)
    assert len(excinfo.value.errors) == 2


@pytest.mark.parametrize("mcs", ALL_MCS)
def test_mcs_ids(mcs):
    assert Mcs.from_id(mcs.mcs_id) == mcs
    assert mcs.data_bits_per_symbol(48) == mcs.bits_per_symbol * 48 * mcs.rate


def test_unknown_mcs():
    with pytest.raises(ValueError):
        Mcs.from_id(6)
    with pytest.raises(ValueError):
        Mcs("QAM64", "1/2")


def test_radar_axes(default_config):
    axes = derive_radar_axes(default_config)
    assert axes.range_m[20] == pytest.approx(6.0, rel=1e-3)
    assert axes.angle_deg[64] == 0.0
    sin_step = default_config.wavelength / (default_config.n_fft_angle * default_config.d_tx)
    assert np.sin(np.radians(axes.angle_deg[65])) == pytest.approx(sin_step)
    assert axes.angle_valid.all()


def test_invisible_angle_bins_are_nan():
    cfg = SystemConfig(d_tx=5e-3, d_rx=20e-3)
    axes = derive_radar_axes(cfg)
    assert np.isnan(axes.angle_deg[0])
    assert not axes.angle_valid.all()
    assert axes.angle_deg.size == cfg.n_fft_angle
    visible = axes.angle_deg[axes.angle_valid]
    assert np.all(np.diff(visible) > 0)
    assert np.abs(visible).max() < 90.0


@pytest.mark.parametrize("schema, section", SECTIONS)
def test_save_load(tmp_path, schema, section):
    path = tmp_path / f"{section}.yaml"
    save_config(schema(), path, section=section)
    assert load_config(path, schema, section) == schema()


def test_load_flat_system_document(tmp_path):
    path = tmp_path / "flat.yaml"
    path.write_text("n_tx: 2\nd_rx: 0.0127\n")
    cfg = load_config(path, SystemConfig, "system")
    assert cfg.n_tx == 2
    assert cfg.n_virtual == 4
    assert load_config(path, RadarConfig, "radar") == RadarConfig()


def test_load_builtin_defaults():
    assert load_config(PAPER_DEFAULTS) == SystemConfig()
    assert load_config(None, RadarConfig) == RadarConfig()


def test_load_scene_section(tmp_path):
    path = tmp_path / "scene.yaml"
    path.write_text("scene:\n  noise_power: 0.001\n  targets:\n    - range: 5.0\n      angle: 12.0\n")
    scene = load_config(path, Scene, "scene")
    assert scene.noise_power == 0.001
    assert scene.targets[0].range == 5.0
    assert scene.targets[0].angle == 12.0


@pytest.mark.parametrize(
    "document",
    [
        "system:\n  n_cp: 64\n",
        "system:\n  unknown_key: 1\n",
        "system:\n  n_tx: many\n",
        "system: [1, 2\n",
    ],
)
def test_load_invalid_document(tmp_path, document):
    path = tmp_path / "bad.yaml"
    path.write_text(document)
    with pytest.raises(ConfigError):
        load_config(path, SystemConfig, "system")


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")
