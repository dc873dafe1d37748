#!/usr/bin/env python
"""Tests for frame detection, synchronisation, equalisation and the communication receiver."""

import numpy as np
import pytest

from mimo_jrc.channel import Scene, noise_power_for_snr, simulate_comm
from mimo_jrc.coding import conv_encode
from mimo_jrc.config import ALL_MCS, Mcs, ReceiverConfig
from mimo_jrc.frame import FrameKind
from mimo_jrc.io import read_feedback
from mimo_jrc.rx import (
    ChannelEstimate,
    CommReceiver,
    dc_block,
    delay_correlate,
    derotate,
    detect_frame,
    equalize,
    estimate_cfo,
    estimate_snr,
    evm,
    find_plateaus,
    ls_estimate,
    lts_noise_variance,
    mimo_ls_estimate,
    sta_update,
)
from mimo_jrc.tx import TxBaseband, header_fields, ofdm_modulate
from tests.conftest import PAYLOAD, build_data, build_ndp

DISTANCE = 4.0
CFO_VALUES = [-1.0e6, 0.0, 100e3, 2.5e6]


def _link(cfg, tx, rng, snr_db=30.0, cfo=0.0, offset=None):
    amplitude = DISTANCE ** (-1.0)
    scene = Scene(noise_power=noise_power_for_snr(snr_db, amplitude), cfo=cfo)
    return simulate_comm(tx, DISTANCE, scene, cfg, rng, offset=offset)


def test_delay_correlate_periodic():
    period = np.exp(2j * np.pi * np.arange(16) / 16 * 3)
    metric = delay_correlate(np.tile(period, 10), lag=16, window=48)
    np.testing.assert_allclose(metric, 1.0)
    assert delay_correlate(np.ones(20), lag=16, window=48).size == 0
    assert not delay_correlate(np.zeros(200)).any()


def test_find_plateaus():
    metric = np.array([0, 0.9, 0.9, 0.9, 0.1, 0.95, 0.95, 0.2, 0.9, 0.9, 0.9, 0.9])
    assert find_plateaus(metric, 0.8, 3) == [1, 8]
    assert find_plateaus(metric, 0.8, 5) == []


def test_detect_frame(default_config, ndp, rng):
    _, tx = ndp
    stream = _link(default_config, tx, rng, offset=150)
    sync = detect_frame(stream.samples, default_config)
    assert sync is not None
    assert 100 <= sync.frame_start <= 170
    noise = np.sqrt(0.5) * (rng.standard_normal(2000) + 1j * rng.standard_normal(2000))
    assert detect_frame(noise, default_config) is None


@pytest.mark.parametrize("cfo", CFO_VALUES)
def test_cfo_and_timing(default_config, ndp, cfo):
    _, tx = ndp
    errors = []
    for seed in range(10):
        stream = _link(default_config, tx, np.random.default_rng(seed), cfo=cfo)
        sync = estimate_cfo(stream.samples, detect_frame(stream.samples, default_config), default_config)
        assert abs(sync.timing_offset - stream.frame_markers[0]) <= 8
        assert abs(sync.cfo - cfo) <= 12e3
        assert not sync.cfo_out_of_range
        errors.append(sync.cfo - cfo)
    assert abs(np.mean(errors)) <= 1.5e3


def test_cfo_out_of_range_flag(default_config, ndp):
    _, tx = ndp
    stream = simulate_comm(tx, DISTANCE, Scene(cfo=3.7e6), default_config, offset=100)
    sync = estimate_cfo(stream.samples, detect_frame(stream.samples, default_config), default_config)
    assert sync.cfo_out_of_range


def test_derotate_inverts_rotation(default_config, rng):
    x = rng.standard_normal(500) + 1j * rng.standard_normal(500)
    rotated = x * np.exp(2j * np.pi * 50e3 * (np.arange(500) + 20) / default_config.bandwidth)
    np.testing.assert_allclose(derotate(rotated, 50e3, default_config, first_sample=20), x)


def test_ls_estimate_and_equalize(default_config, rng):
    h = np.zeros(default_config.n_sc, dtype=complex)
    occupied = default_config.occupied_subcarriers
    h[occupied] = rng.standard_normal(len(occupied)) + 1j * rng.standard_normal(len(occupied))
    known = np.zeros(default_config.n_sc, dtype=complex)
    known[occupied] = 1 - 2.0 * rng.integers(0, 2, len(occupied))
    estimate = ls_estimate(np.stack([h * known, h * known]), known, default_config)
    np.testing.assert_allclose(estimate.h, h)

    data = np.exp(1j * np.pi / 4 * (2 * rng.integers(0, 4, (3, 48)) + 1))
    grid = np.zeros((3, default_config.n_sc), dtype=complex)
    grid[:, default_config.data_subcarriers] = data
    grid[:, default_config.pilot_subcarriers] = default_config.pilot_values
    rotation = np.exp(1j * np.array([0.1, -0.2, 0.3]))[:, None]
    eq = equalize(grid * h * rotation, estimate, default_config)
    np.testing.assert_allclose(eq.data, data, atol=1e-12)
    np.testing.assert_allclose(eq.phase, [0.1, -0.2, 0.3])
    assert not eq.erased.any()
    assert estimate_snr(eq.pilots, default_config.pilot_values) == 60.0
    assert evm(eq.data, data) == pytest.approx(0.0, abs=1e-12)


def test_equalize_erases_faded_subcarriers(default_config):
    h = np.ones(default_config.n_sc, dtype=complex)
    faded = default_config.data_subcarriers[:3]
    h[faded] = 0
    grid = np.ones((2, default_config.n_sc), dtype=complex)
    grid[:, default_config.pilot_subcarriers] = default_config.pilot_values
    eq = equalize(grid, ChannelEstimate(h), default_config)
    assert eq.erased[:3].all()
    assert not eq.erased[3:].any()
    assert np.isfinite(eq.data).all()
    assert not eq.data[:, :3].any()


def test_estimate_snr(rng):
    known = np.array([1.0, 1.0, 1.0, -1.0])
    noise = np.sqrt(0.01 / 2) * (rng.standard_normal((5000, 4)) + 1j * rng.standard_normal((5000, 4)))
    assert estimate_snr(known + noise, known) == pytest.approx(20.0, abs=0.3)


def test_sta_keeps_a_static_channel(default_config):
    h = np.zeros(default_config.n_sc, dtype=complex)
    h[default_config.occupied_subcarriers] = 0.5 - 0.2j
    decided = np.ones(default_config.n_sc, dtype=complex)
    updated = sta_update(ChannelEstimate(h), h * decided, decided, default_config)
    np.testing.assert_allclose(updated.h, h)
    assert updated.kind == "STA"


@pytest.mark.parametrize("mcs", ALL_MCS)
def test_receive_data_frame(default_config, rng, mcs):
    _, tx = build_data(default_config, mcs=mcs)
    packets = CommReceiver(default_config).receive(_link(default_config, tx, rng, snr_db=30.0, cfo=100e3))
    assert len(packets) == 1
    packet = packets[0]
    assert packet.kind == FrameKind.DATA
    assert packet.crc_ok
    assert packet.payload == PAYLOAD
    assert packet.mcs == mcs
    assert 24.0 < packet.snr_db < 31.0
    assert packet.evm < 0.15


@pytest.mark.parametrize("receiver_config", [ReceiverConfig(estimator="STA"), ReceiverConfig(soft_decoding=True)])
def test_receiver_variants(default_config, rng, receiver_config):
    _, tx = build_data(default_config, mcs=Mcs("QAM16", "3/4"))
    packets = CommReceiver(default_config, receiver_config).receive(_link(default_config, tx, rng, snr_db=25.0))
    assert [p.crc_ok for p in packets] == [True]
    assert packets[0].payload == PAYLOAD


def test_receive_ndp_writes_feedback(default_config, rng, tmp_path):
    _, tx = build_ndp(default_config)
    path = tmp_path / "feedback.yaml"
    receiver = CommReceiver(default_config, ReceiverConfig(feedback_path=str(path)))
    packets = receiver.receive(_link(default_config, tx, rng, snr_db=40.0))
    assert len(packets) == 1
    ndp = packets[0]
    assert ndp.kind == FrameKind.NDP
    assert ndp.crc_ok
    assert ndp.payload == b""
    assert ndp.channel.h.shape == (default_config.n_sc, default_config.n_tx)
    occupied = default_config.occupied_subcarriers
    h = read_feedback(path, default_config)[occupied]
    np.testing.assert_allclose(np.abs(h), 1 / DISTANCE, rtol=0.2)
    assert receiver.last_estimate is ndp.channel


def test_receive_stream_in_order(default_config, rng):
    frames = [build_ndp(default_config)[1]] + [
        build_data(default_config, payload=bytes([i]) * 50, seed=i + 1)[1] for i in range(3)
    ]
    tx = TxBaseband.concatenate(frames, gap=2 * default_config.symbol_length)
    stream = _link(default_config, tx, rng, cfo=-50e3)
    packets = CommReceiver(default_config).receive(stream)
    assert [p.kind for p in packets] == [FrameKind.NDP] + [FrameKind.DATA] * 3
    assert [p.payload for p in packets[1:]] == [bytes([i]) * 50 for i in range(3)]
    assert [p.frame_index for p in packets] == [0, 1, 2, 3]
    for packet, marker in zip(packets, stream.frame_markers):
        assert abs(packet.start - marker) <= 8


def test_truncated_frame_is_dropped(default_config, rng):
    _, tx = build_data(default_config)
    stream = _link(default_config, tx, rng, offset=100)
    receiver = CommReceiver(default_config)
    cut = stream.samples[: 100 + tx.n_samples // 2]
    assert receiver.receive(cut) == []
    assert receiver.frames_dropped == 1


def test_corrupted_header_is_dropped(default_config, rng):
    frame, _ = build_data(default_config)
    bits = header_fields(frame.mcs, frame.payload_len, FrameKind.DATA)
    bits[3] ^= 1
    grid = frame.grid.copy()
    header = frame.segment("header").start
    data = default_config.data_subcarriers[:48]
    grid[:, header, data] = np.abs(grid[:, header, data]) * (2.0 * conv_encode(bits) - 1)
    stream = _link(default_config, ofdm_modulate(grid, default_config), rng, offset=100)
    receiver = CommReceiver(default_config)
    assert receiver.receive(stream) == []
    assert receiver.frames_dropped == 1


def test_dc_block():
    np.testing.assert_allclose(dc_block(np.full(300, 0.7 - 0.2j))[63:], 0.0, atol=1e-12)
    tone = np.exp(2j * np.pi * 10 * np.arange(640) / 64)
    np.testing.assert_allclose(np.abs(dc_block(tone)[64:]), 1.0, rtol=0.01)
    assert not dc_block(np.zeros(100)).any()


def _known(cfg, rng):
    known = np.zeros(cfg.n_sc, dtype=complex)
    occupied = cfg.occupied_subcarriers
    known[occupied] = 1 - 2.0 * rng.integers(0, 2, len(occupied))
    return known


def _noise(rng, variance, shape):
    return np.sqrt(variance / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def test_two_lts_halve_the_estimate_noise(default_config):
    occupied = default_config.occupied_subcarriers
    single, averaged = [], []
    for seed in range(100):
        rng = np.random.default_rng(seed)
        known = _known(default_config, rng)
        received = known + _noise(rng, 0.1, (2, default_config.n_sc))
        single.append(ls_estimate(received[:1], known, default_config).h[occupied] - 1)
        averaged.append(ls_estimate(received, known, default_config).h[occupied] - 1)
    ratio = np.mean(np.abs(averaged) ** 2) / np.mean(np.abs(single) ** 2)
    assert ratio == pytest.approx(0.5, abs=0.05)


def test_lts_noise_variance(default_config, rng):
    known = _known(default_config, rng)
    received = 0.6j * known + _noise(rng, 0.02, (2, default_config.n_sc))
    assert lts_noise_variance(received, known, default_config) == pytest.approx(0.02, rel=0.5)
    assert lts_noise_variance(np.stack([known, known]), known, default_config) > 0


def test_effective_channel_skips_silent_slots(default_config):
    cfg = default_config
    occupied = cfg.occupied_subcarriers
    noise_var = 0.01
    errors = {"weighted": [], "summed": [], "single": []}
    for seed in range(20):
        rng = np.random.default_rng(seed)
        h = np.zeros(cfg.n_sc, dtype=complex)
        h[occupied] = np.exp(2j * np.pi * rng.random(len(occupied)))
        known = _known(cfg, rng)
        # identity steering drives chain 0 only
        preamble = _noise(rng, noise_var, (cfg.n_tx, cfg.n_sc))
        preamble[0] += h * known
        estimate = mimo_ls_estimate(preamble, known, cfg)
        errors["weighted"].append(estimate.effective(noise_var).h[occupied] - h[occupied])
        errors["summed"].append(estimate.effective().h[occupied] - h[occupied])
        errors["single"].append(estimate.h[occupied, 0] - h[occupied])
    mse = {name: np.mean(np.abs(e) ** 2) for name, e in errors.items()}
    assert mse["weighted"] < 1.25 * mse["single"]
    assert mse["summed"] > 3.0 * mse["single"]


def test_effective_channel_keeps_driven_slots(default_config, rng):
    h = np.zeros((default_config.n_sc, default_config.n_tx), dtype=complex)
    h[default_config.occupied_subcarriers] = 0.5
    estimate = ChannelEstimate(h)
    np.testing.assert_allclose(estimate.effective(1e-4).h, estimate.effective().h, rtol=1e-3)
    # nothing above the noise: fall back to the plain sum
    np.testing.assert_allclose(estimate.effective(10.0).h, estimate.effective().h)


def test_sta_beats_ls_at_15_db(default_config):
    cfg = default_config
    occupied = cfg.occupied_subcarriers
    noise_var = 10 ** (-15 / 10)
    ls_errors, sta_errors = [], []
    for seed in range(100):
        rng = np.random.default_rng(seed)
        h = np.zeros(cfg.n_sc, dtype=complex)
        # single path one sample late: slow phase ramp across the band
        h[occupied] = 0.9 * np.exp(-2j * np.pi * np.asarray(occupied) / cfg.n_sc)
        known = _known(cfg, rng)
        estimate = ls_estimate(h * known + _noise(rng, noise_var, (2, cfg.n_sc)), known, cfg)
        ls_errors.append(estimate.h[occupied] - h[occupied])
        for _ in range(20):
            decided = np.zeros(cfg.n_sc, dtype=complex)
            decided[occupied] = np.exp(1j * np.pi / 4 * (2 * rng.integers(0, 4, len(occupied)) + 1))
            estimate = sta_update(estimate, h * decided + _noise(rng, noise_var, cfg.n_sc), decided, cfg)
        sta_errors.append(estimate.h[occupied] - h[occupied])
    assert np.mean(np.abs(sta_errors) ** 2) < np.mean(np.abs(ls_errors) ** 2)


def test_sta_limits(default_config, rng):
    cfg = default_config
    occupied = cfg.occupied_subcarriers
    known = _known(cfg, rng)
    prev = ls_estimate(known + _noise(rng, 0.1, cfg.n_sc), known, cfg)
    decided = _known(cfg, rng)
    received = _noise(rng, 1.0, cfg.n_sc)
    frozen = sta_update(prev, received, decided, cfg, alpha=np.inf)
    np.testing.assert_array_equal(frozen.h, prev.h)
    instantaneous = sta_update(prev, received, decided, cfg, alpha=1.0, beta=0)
    np.testing.assert_allclose(instantaneous.h[occupied], received[occupied] / decided[occupied])


def _equalized_evm(cfg, seed, snr_db, cfo=0.0, n_symbols=20):
    rng = np.random.default_rng(seed)
    noise_var = 10 ** (-snr_db / 10)
    h = np.zeros(cfg.n_sc, dtype=complex)
    h[cfg.occupied_subcarriers] = np.exp(0.3j)
    known = _known(cfg, rng)
    estimate = ls_estimate(h * known + _noise(rng, noise_var, (2, cfg.n_sc)), known, cfg)
    data = np.exp(1j * np.pi / 4 * (2 * rng.integers(0, 4, (n_symbols, len(cfg.data_subcarriers))) + 1))
    grid = np.zeros((n_symbols, cfg.n_sc), dtype=complex)
    grid[:, cfg.data_subcarriers] = data
    grid[:, cfg.pilot_subcarriers] = cfg.pilot_values
    # residual CFO as a phase advancing by one symbol period per symbol
    drift = np.exp(2j * np.pi * cfo * np.arange(1, n_symbols + 1) * cfg.symbol_length / cfg.bandwidth)
    received = grid * h * drift[:, None] + _noise(rng, noise_var, grid.shape)
    return evm(equalize(received, estimate, cfg).data, data)


def test_evm_falls_with_snr(default_config):
    mean_evm = [np.mean([_equalized_evm(default_config, seed, snr) for seed in range(20)]) for snr in (5, 15, 25)]
    assert mean_evm[0] > mean_evm[1] > mean_evm[2]


def test_phase_tracking_with_residual_cfo(default_config):
    for seed in range(5):
        still = _equalized_evm(default_config, seed, 25.0, n_symbols=100)
        for cfo in (50.0, 5e3):
            assert _equalized_evm(default_config, seed, 25.0, cfo, n_symbols=100) < 1.05 * still
        assert _equalized_evm(default_config, seed, 30.0, 50.0, n_symbols=100) < 0.05
