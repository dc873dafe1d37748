#!/usr/bin/env python
"""Tests for the mimo-jrc command line."""

import logging

import numpy as np
import pandas as pd
import pytest

from mimo_jrc.cli import EXIT_CONFIG, EXIT_IO, EXIT_IQ, EXIT_OK, main
from mimo_jrc.channel import Scene
from mimo_jrc.config import ReceiverConfig, SystemConfig, load_config, save_config
from mimo_jrc.io import read_detection_log, read_feedback, read_image, read_iq
from mimo_jrc.utils import read_yaml, set_log_level

DEFAULTS = ["--config", "paper-defaults"]


def _run(command, out, *args):
    return main([command, *DEFAULTS, "--out", str(out), *args])


def test_tx_simulate_rx_radar(tmp_path):
    assert _run("tx", tmp_path, "--ndp", "--frames", "2", "--payload-size", "120", "--mcs", "QAM16-1/2") == EXIT_OK
    assert sorted(p.name for p in tmp_path.glob("tx_ch*.cf32")) == [f"tx_ch{k}.cf32" for k in range(4)]
    _, sidecar = read_iq(tmp_path / "tx_ch0.cf32")
    assert len(sidecar.frame_markers) == 3

    assert _run("simulate", tmp_path, "--snr", "30", "--distance", "5", "--seed", "4") == EXIT_OK
    assert (tmp_path / "comm.cf32").exists()
    assert (tmp_path / "rx_ch1.cf32").exists()

    assert _run("rx", tmp_path) == EXIT_OK
    packets = pd.read_csv(tmp_path / "packets.csv")
    assert packets["kind"].tolist() == ["NDP", "DATA", "DATA"]
    assert packets["crc_ok"].all()
    assert packets["length"].tolist() == [0, 120, 120]
    assert (tmp_path / "payloads.bin").stat().st_size == 240
    assert read_feedback(tmp_path / "feedback.yaml", SystemConfig()).any()

    assert _run("radar", tmp_path, "--si-frames", "1") == EXIT_OK
    image = read_image(tmp_path / "image.csv")
    assert image.power_db.shape == (256, 128)
    assert set(read_detection_log(tmp_path / "detections.jsonl")["frame"]) <= {1, 2}


def test_payload_file_is_sent_in_order(tmp_path):
    payload = bytes(range(256)) * 3
    (tmp_path / "payload.bin").write_bytes(payload)
    args = ["--payload-file", str(tmp_path / "payload.bin"), "--payload-size", "300"]
    assert _run("tx", tmp_path, *args) == EXIT_OK
    assert _run("simulate", tmp_path, "--link", "comm", "--snr", "35") == EXIT_OK
    assert _run("rx", tmp_path) == EXIT_OK
    assert (tmp_path / "payloads.bin").read_bytes() == payload


def test_tx_picks_up_feedback(tmp_path):
    assert _run("tx", tmp_path, "--ndp", "--frames", "0") == EXIT_OK
    assert _run("simulate", tmp_path, "--link", "comm", "--snr", "35") == EXIT_OK
    assert _run("rx", tmp_path) == EXIT_OK
    assert _run("tx", tmp_path, "--frames", "1") == EXIT_OK
    samples, _ = read_iq(tmp_path / "tx_ch3.cf32")
    # steered DATA frames drive every chain
    assert np.abs(samples).max() > 0


def test_loopback_command(tmp_path):
    args = ["--frames", "5", "--payload-size", "100", "--snr", "30", "--cfo", "50e3", "--seed", "2"]
    assert _run("loopback", tmp_path, *args) == EXIT_OK
    summary = read_yaml(tmp_path / "loopback.yaml")
    assert summary["frames"] == 5
    assert summary["delivered"] == 5
    assert summary["per"] == 0.0


def test_si_capture_command(tmp_path):
    assert _run("si-capture", tmp_path, "--runs", "3") == EXIT_OK
    df = pd.read_csv(tmp_path / "si_removal.csv")
    assert len(df) == 3
    assert df["target_peak_after"].all()


def test_sweep_commands(tmp_path):
    args = ["--start", "4", "--stop", "6", "--step", "1", "--repetitions", "1", "--no-progress"]
    assert _run("sweep-distance", tmp_path, *args) == EXIT_OK
    assert len(pd.read_csv(tmp_path / "sweep_distance_radar.csv")) == 3
    assert "alpha" in read_yaml(tmp_path / "path_loss_radar.yaml")
    args = ["--start", "-10", "--stop", "10", "--step", "5", "--fov", "55", "--no-progress"]
    assert _run("sweep-angle", tmp_path, *args) == EXIT_OK
    assert len(pd.read_csv(tmp_path / "sweep_angle.csv")) == 5
    assert read_yaml(tmp_path / "field_of_view.yaml")["taper_exponent"] > 0


def test_config_file(tmp_path):
    path = tmp_path / "experiment.yaml"
    save_config(SystemConfig(n_tx=2, d_rx=12.7e-3), path, section="system")
    assert main(["tx", "--config", str(path), "--out", str(tmp_path), "--frames", "1"]) == EXIT_OK
    assert sorted(p.name for p in tmp_path.glob("tx_ch*.cf32")) == ["tx_ch0.cf32", "tx_ch1.cf32"]


@pytest.mark.parametrize(
    "document",
    ["system:\n  n_sc: 60\n", "system:\n  unknown_key: 1\n", "system: [unclosed\n"],
)
def test_invalid_config(tmp_path, document):
    path = tmp_path / "bad.yaml"
    path.write_text(document)
    assert main(["tx", "--config", str(path), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_missing_config(tmp_path):
    assert main(["tx", "--config", str(tmp_path / "missing.yaml"), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_malformed_iq(tmp_path):
    (tmp_path / "comm.cf32").write_bytes(bytes(13))
    assert _run("rx", tmp_path) == EXIT_IQ


def test_missing_input(tmp_path):
    assert _run("rx", tmp_path) == EXIT_IO
    assert _run("radar", tmp_path) == EXIT_IO


@pytest.mark.parametrize("args", [["tx", "--mcs", "QAM64-1/2"], ["tx", "--mcs", "QPSK"], ["simulate", "--link", "sonar"]])
def test_usage_errors(tmp_path, args):
    with pytest.raises(SystemExit) as e:
        main([*args, *DEFAULTS, "--out", str(tmp_path)])
    assert e.value.code == 2


def test_config_command(tmp_path):
    source = tmp_path / "experiment.yaml"
    source.write_text("system:\n  n_tx: 2\n  d_rx: 12.7e-3\nreceiver:\n  estimator: STA\n")
    out = tmp_path / "resolved"
    assert main(["config", "--config", str(source), "--out", str(out)]) == EXIT_OK
    resolved = out / "experiment.yaml"
    assert load_config(resolved, SystemConfig, "system") == load_config(source, SystemConfig, "system")
    assert load_config(resolved, ReceiverConfig, "receiver").estimator == "STA"
    assert load_config(resolved, Scene, "scene") == Scene()


def test_config_describe(tmp_path, capsys):
    assert main(["config", *DEFAULTS, "--out", str(tmp_path), "--describe"]) == EXIT_OK
    printed = capsys.readouterr().out
    assert "n_sc (int): Number of subcarriers" in printed
    assert "[`global-peak`,`ca-cfar`]" in printed
    assert not (tmp_path / "experiment.yaml").exists()


def test_log_level(tmp_path):
    try:
        assert main(["config", *DEFAULTS, "--out", str(tmp_path), "--log-level", "WARNING"]) == EXIT_OK
        assert logging.getLogger("mimo_jrc.cli").level == logging.WARNING
        assert logging.getLogger("mimo_jrc.rx.receiver").level == logging.WARNING
    finally:
        set_log_level("INFO")
