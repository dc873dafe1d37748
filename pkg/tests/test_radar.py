#!/usr/bin/env python
"""Tests for radar channel estimation, background removal, imaging and detection."""

from dataclasses import replace

import numpy as np
import pytest

from mimo_jrc.channel import PointTarget, Scene, simulate_radar
from mimo_jrc.config import RadarConfig, SystemConfig, derive_radar_axes
from mimo_jrc.frame import FrameKind
from mimo_jrc.radar import (
    MeasurementMatrix,
    RadarProcessor,
    RangeAngleImage,
    SiEstimate,
    calibrate_cfar_scale,
    cfar_scale,
    cfar_threshold_factor,
    detect,
    global_peak,
    half_power_width,
    profile_width,
    range_angle_image,
    recover_frames,
    remove_si,
    split_frames,
    update_si,
    window,
)
from mimo_jrc.tx import TxBaseband
from tests.conftest import build_data, build_ndp

WINDOWS = ["rectangular", "hann", "hamming", "blackman"]
PEAK = RadarConfig(detection_method="global-peak")


def _image(cfg, scene, rng=None, radar_config=None):
    frame, tx = build_ndp(cfg)
    processor = RadarProcessor(cfg, radar_config)
    return processor.process(simulate_radar(tx, scene, cfg, rng), frame)


def test_identity_steered_data_frame_estimates_one_chain(default_config, data_frame):
    frame, tx = data_frame
    processor = RadarProcessor(default_config)
    rx = simulate_radar(tx, Scene(targets=[PointTarget(6.0, 0.0)]), default_config)
    measurement = processor.measure(rx, frame)
    np.testing.assert_array_equal(measurement.valid, [True, False, False, False] * 2)
    assert not measurement.h[:, ~measurement.valid].any()
    assert np.abs(measurement.h[default_config.occupied_subcarriers, 0]).min() == pytest.approx(1 / 36)


def test_peak_at_target(default_config):
    result = _image(default_config, Scene(targets=[PointTarget(6.0, 0.0)]), radar_config=PEAK)
    peak = result.detections[0]
    assert peak.range_bin == 20
    assert peak.angle_bin == 64
    assert peak.range_m == pytest.approx(6.0, abs=0.01)
    assert peak.angle_deg == 0.0


@pytest.mark.parametrize("angle", [-40.0, -12.0, 7.0, 33.0])
def test_peak_angle(default_config, angle):
    result = _image(default_config, Scene(targets=[PointTarget(9.0, angle)]), radar_config=PEAK)
    bin_width = np.degrees(default_config.wavelength / (default_config.n_fft_angle * default_config.d_tx))
    assert abs(result.detections[0].angle_deg - angle) < bin_width / np.cos(np.radians(angle))
    assert abs(result.detections[0].range_m - 9.0) <= 0.3


def test_image_energy_is_preserved():
    cfg = SystemConfig(n_fft_range=64, n_fft_angle=8)
    h = np.zeros((cfg.n_sc, cfg.n_virtual), dtype=complex)
    rng = np.random.default_rng(3)
    occupied = cfg.occupied_subcarriers
    h[occupied] = rng.standard_normal((len(occupied), cfg.n_virtual)) + 1j * rng.standard_normal(
        (len(occupied), cfg.n_virtual)
    )
    image = range_angle_image(MeasurementMatrix(h), cfg)
    assert image.power.sum() == pytest.approx(np.sum(np.abs(h) ** 2))


@pytest.mark.parametrize("name", WINDOWS)
def test_windows(name):
    w = window(name, 9)
    assert w.size == 9
    assert w[4] == pytest.approx(1.0)
    np.testing.assert_allclose(w, w[::-1])


@pytest.mark.parametrize("name", ["hann", "blackman"])
def test_range_window_lowers_sidelobes(default_config, name):
    scene = Scene(targets=[PointTarget(12.0, 0.0)])
    plain = _image(default_config, scene).image
    tapered = _image(replace(default_config, range_window=name), scene).image
    def sidelobe(image):
        # range sidelobes beyond three resolution cells of the peak
        peak = np.unravel_index(np.argmax(image.power), image.power.shape)
        return image.power[peak[0] + 16 : peak[0] + 40, peak[1]].max() / image.power[peak]

    assert sidelobe(tapered) < sidelobe(plain)


def test_global_peak_skips_invisible_bins():
    cfg = SystemConfig(d_tx=5e-3, d_rx=20e-3)
    axes = derive_radar_axes(cfg)
    power = np.ones((cfg.n_fft_range, cfg.n_fft_angle))
    power[:, 0] = 100.0
    power[10, 64] = 50.0
    image = RangeAngleImage(power, axes.range_m, axes.angle_deg, noise_floor=1.0)
    peak = global_peak(image)[0]
    assert (peak.range_bin, peak.angle_bin) == (10, 64)
    assert peak.snr_db == pytest.approx(10 * np.log10(50.0))


def test_cfar_threshold_factor():
    assert cfar_threshold_factor(100000, 1e-4) == pytest.approx(-np.log(1e-4), rel=1e-3)
    assert cfar_threshold_factor(16, 1e-4) > cfar_threshold_factor(1000, 1e-4)


@pytest.mark.parametrize("pfa", [1e-4, 1e-6])
def test_cfar_false_alarms(default_config, pfa):
    radar_config = RadarConfig(cfar_pfa=pfa)
    results = [
        _image(default_config, Scene(noise_power=1e-4), np.random.default_rng(seed), radar_config) for seed in range(10)
    ]
    alarms = sum(len(r.detections) for r in results)
    expected = pfa * sum(r.image.power.size for r in results)
    spread = 3 * np.sqrt(expected * (1 - pfa))
    assert expected - spread <= alarms <= expected + spread


def test_cfar_calibration_brackets_closed_form(default_config):
    closed_form = cfar_threshold_factor(29 * 81 - 13 * 49, 1e-4)
    grouped = calibrate_cfar_scale(default_config, pfa=1e-4, group_peaks=True, n_images=50)
    every_cell = calibrate_cfar_scale(default_config, pfa=1e-4, group_peaks=False, n_images=50)
    # grouping keeps one cell per cluster, correlated training cells widen the ratio tail
    assert grouped < closed_form < every_cell
    assert calibrate_cfar_scale(default_config, pfa=1e-6, n_images=50) > grouped


def test_cfar_scale_is_cached_or_configured(default_config):
    assert cfar_scale(default_config, RadarConfig(cfar_scale=3.5)) == 3.5
    radar_config = RadarConfig(cfar_pfa=1e-4, cfar_calibration_images=20)
    assert cfar_scale(default_config, radar_config) == cfar_scale(default_config, radar_config)
    assert RadarProcessor(default_config, PEAK).cfar_scale is None


def test_configured_cfar_scale_is_used(default_config, single_target_scene, rng):
    result = _image(default_config, single_target_scene, rng, RadarConfig(cfar_scale=1e9))
    assert result.detections == []


def test_cfar_detects_target(default_config, single_target_scene, rng):
    result = _image(default_config, single_target_scene, rng)
    assert len(result.detections) >= 1
    strongest = result.detections[0]
    assert abs(strongest.range_m - 6.0) <= 0.3
    assert abs(strongest.angle_deg) <= 1.0
    assert strongest.snr_db > 25.0


def test_detect_rejects_unknown_method(default_config, single_target_scene, rng):
    image = _image(default_config, single_target_scene, rng).image
    with pytest.raises(ValueError):
        detect(image, "os-cfar")


def test_profile_width():
    width = profile_width([0.0, 1.0, 2.0, 1.0, 0.0], np.arange(5.0), 2)
    assert width.bounded
    assert width.width == pytest.approx(2.0)
    open_ended = profile_width([2.0, 1.5, 1.2], np.arange(3.0), 0)
    assert not open_ended.bounded
    assert open_ended.width == np.inf


def test_half_power_width_axes(default_config):
    result = _image(default_config, Scene(targets=[PointTarget(6.0, 0.0)]), radar_config=PEAK)
    peak = result.detections[0]
    assert half_power_width(result.image, peak, "range").width == pytest.approx(1.31, abs=0.15)
    assert half_power_width(result.image, peak, "angle").width == pytest.approx(12.5, abs=1.5)
    with pytest.raises(ValueError):
        half_power_width(result.image, peak, "doppler")


def test_si_window_average():
    si = SiEstimate(n_win=3, capturing=True)
    for value in range(1, 6):
        si = update_si(si, MeasurementMatrix(np.full((4, 2), value, dtype=complex)))
    assert len(si.window) == 3
    assert not si.provisional
    np.testing.assert_allclose(si.h_si, 4.0)
    residual = remove_si(MeasurementMatrix(np.full((4, 2), 10, dtype=complex)), si)
    np.testing.assert_allclose(residual.h, 6.0)


def test_si_provisional_and_inactive():
    latest = MeasurementMatrix(np.ones((4, 2), dtype=complex))
    idle = SiEstimate(n_win=3)
    assert remove_si(latest, idle) is latest
    with pytest.raises(AssertionError):
        update_si(idle, latest)
    si = update_si(SiEstimate(n_win=3, capturing=True), latest)
    assert si.provisional
    assert si.active


def test_si_residual_falls_with_window_depth(default_config):
    shape = (default_config.n_sc, default_config.n_virtual)
    residual = {n_win: [] for n_win in (1, 2, 5, 10)}
    for seed in range(20):
        rng = np.random.default_rng(seed)
        static = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        for n_win in residual:
            si = SiEstimate(n_win=n_win, capturing=True)
            for _ in range(n_win):
                noise = 0.1 * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
                si = update_si(si, MeasurementMatrix(static + noise))
            noise = 0.1 * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
            left = remove_si(MeasurementMatrix(static + noise), si)
            residual[n_win].append(np.mean(np.abs(left.h) ** 2))
    means = [np.mean(r) for r in residual.values()]
    assert all(a > b for a, b in zip(means, means[1:]))
    # noise of the frame plus that of the window average
    assert means[-1] / means[0] == pytest.approx(1.1 / 2.0, rel=0.1)


def test_processor_removes_background(default_config, leaky_scene, rng):
    frame, tx = build_ndp(default_config)
    processor = RadarProcessor(default_config)
    static = leaky_scene.static_part()
    processor.start_si_capture()
    raw = [processor.process(simulate_radar(tx, static, default_config, rng), frame) for _ in range(10)]
    processor.stop_si_capture()
    assert not processor.capturing
    # the first captured frame finds an empty window
    first = raw[0].measurement.h
    frozen = processor.si.h_si.copy()
    residual = processor.process(simulate_radar(tx, static, default_config, rng), frame).measurement.h
    np.testing.assert_array_equal(processor.si.h_si, frozen)
    assert 10 * np.log10(np.sum(np.abs(residual) ** 2) / np.sum(np.abs(first) ** 2)) < -30


def test_processor_keeps_target_after_capture(default_config, leaky_scene, rng):
    frame, tx = build_ndp(default_config)
    processor = RadarProcessor(default_config, PEAK)
    processor.start_si_capture()
    for _ in range(10):
        processor.process(simulate_radar(tx, leaky_scene.static_part(), default_config, rng), frame)
    processor.stop_si_capture()
    peak = processor.process(simulate_radar(tx, leaky_scene, default_config, rng), frame).detections[0]
    assert abs(peak.range_m - 6.0) <= 0.3
    assert abs(peak.angle_deg - 15.0) <= 1.5
    processor.clear_si()
    raw_peak = processor.process(simulate_radar(tx, leaky_scene, default_config, rng), frame).detections[0]
    assert abs(raw_peak.range_m - 6.0) > 1.0


@pytest.mark.parametrize("num_workers", [1, 3])
def test_process_many_keeps_order(default_config, num_workers):
    ndp_frame, ndp_tx = build_ndp(default_config)
    _, data_tx = build_data(default_config)
    tx = TxBaseband.concatenate([ndp_tx, data_tx, ndp_tx], gap=160)
    rx = simulate_radar(tx, Scene(targets=[PointTarget(6.0, 10.0)]), default_config)
    processor = RadarProcessor(default_config, RadarConfig(detection_method="global-peak", num_workers=num_workers))
    results = processor.process_many(split_frames(rx, tx.frames))
    assert [r.image.frame_index for r in results] == [0, 1, 2]
    np.testing.assert_allclose(results[0].image.power, results[2].image.power, atol=1e-12)
    single = RadarProcessor(default_config, PEAK).process(rx, ndp_frame)
    np.testing.assert_allclose(results[0].image.power, single.image.power, atol=1e-12)
    assert results[1].measurement.valid.sum() == default_config.n_rx


def test_split_frames_needs_one_marker_per_frame(default_config, ndp):
    frame, tx = ndp
    with pytest.raises(AssertionError):
        split_frames(tx, [frame, frame])


def test_recover_frames(default_config):
    ndp_frame, ndp_tx = build_ndp(default_config)
    data_frame, data_tx = build_data(default_config)
    tx = TxBaseband.concatenate([ndp_tx, data_tx], gap=160)
    recovered = recover_frames(tx.samples, tx.frame_markers, default_config)
    assert [f.kind for f in recovered] == [FrameKind.NDP, FrameKind.DATA]
    assert recovered[1].mcs == data_frame.mcs
    assert recovered[1].payload_len == data_frame.payload_len
    for original, frame in zip([ndp_frame, data_frame], recovered):
        np.testing.assert_allclose(frame.grid, original.grid, atol=1e-9)
