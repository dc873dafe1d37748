"""Distance and angle sweeps over simulated scenes."""

from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from rich.progress import track

from mimo_jrc.analysis.path_loss import PathLossFit, fit_path_loss
from mimo_jrc.channel import PointTarget, Scene, simulate_comm, simulate_radar
from mimo_jrc.config import Mcs, RadarConfig, ReceiverConfig, SystemConfig
from mimo_jrc.frame import FrameKind
from mimo_jrc.radar import RadarProcessor, global_peak, profile_width
from mimo_jrc.rx import CommReceiver
from mimo_jrc.tx import SteeringMatrix, assemble_frame, encode_payload, ofdm_modulate
from mimo_jrc.utils import db2pow, get_logger, ifnone

logger = get_logger(__name__)


@dataclass
class SweepRecord:
    """Mean measured SNR at one point of a sweep.

    Args:
        value: independent variable, distance in m or angle in degrees
        snr_db: mean SNR over the repetitions that were not missed, NaN when all were
        snr_std_db: standard deviation of those SNRs
        repetitions: number of repetitions run
        missed: repetitions without a usable measurement
        seeds: seeds of the repetitions
        peak_range_m: mean range of the detected peak
        peak_angle_deg: mean angle of the detected peak

    """

    value: float
    snr_db: float
    snr_std_db: float
    repetitions: int
    missed: int = 0
    seeds: Tuple[int, ...] = field(default_factory=tuple)
    peak_range_m: float = float("nan")
    peak_angle_deg: float = float("nan")


def records_frame(records: Sequence[SweepRecord], column: str) -> pd.DataFrame:
    """Sweep table sorted by the independent variable, which is named ``column``."""
    df = pd.DataFrame([asdict(r) for r in records])
    if df.empty:
        return pd.DataFrame(columns=[column] + list(SweepRecord.__dataclass_fields__)[1:])
    return df.rename(columns={"value": column}).sort_values(column).reset_index(drop=True)


def _point_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def _summarise(value: float, seeds: Sequence[int], measured: List[Optional[Tuple[float, float, float]]]) -> SweepRecord:
    hits = np.array([m for m in measured if m is not None], dtype=float).reshape(-1, 3)
    missed = len(measured) - len(hits)
    if len(hits) == 0:
        return SweepRecord(value, float("nan"), float("nan"), len(measured), missed, tuple(seeds))
    return SweepRecord(
        value=value,
        snr_db=float(hits[:, 0].mean()),
        snr_std_db=float(hits[:, 0].std()),
        repetitions=len(measured),
        missed=missed,
        seeds=tuple(seeds),
        peak_range_m=float(hits[:, 1].mean()),
        peak_angle_deg=float(hits[:, 2].mean()),
    )


def _target_template(scene: Scene) -> PointTarget:
    return scene.targets[0] if scene.targets else PointTarget(range=1.0)


def radar_peak(
    cfg: SystemConfig,
    scene: Scene,
    rng: np.random.Generator,
    radar_config: Optional[RadarConfig] = None,
) -> Optional[Tuple[float, float, float]]:
    """(SNR dB, range m, angle deg) of the global image peak for one NDP frame of ``scene``.

    None when the peak is more than one range resolution away from the first target.

    """
    frame = assemble_frame(None, FrameKind.NDP, SteeringMatrix.identity(cfg), cfg)
    rx = simulate_radar(ofdm_modulate(frame, cfg), scene, cfg, rng)
    processor = RadarProcessor(cfg, radar_config)
    image, _ = processor.image(processor.measure(rx, frame))
    peak = global_peak(image)[0]
    if scene.targets and abs(peak.range_m - scene.targets[0].range) > cfg.range_resolution:
        return None
    return peak.snr_db, peak.range_m, peak.angle_deg


def _radar_point(index, value, scene, cfg, seeds, radar_config) -> SweepRecord:
    return _summarise(value, seeds, [radar_peak(cfg, scene, _point_rng(s, index), radar_config) for s in seeds])


def _run(points, job, n_jobs: int, progress_bar: bool, description: str) -> List[SweepRecord]:
    results = Parallel(n_jobs=n_jobs, return_as="generator")(delayed(job)(i, *p) for i, p in enumerate(points))
    if progress_bar:
        results = track(results, description=description, total=len(points))
    return list(results)


def _fit_records(records: List[SweepRecord], d0: float, what: str) -> PathLossFit:
    gaps = [r.value for r in records if np.isnan(r.snr_db)]
    if gaps:
        logger.warning(f"{what}: no detection at {gaps} m, excluded from the fit")
    partial = [r.value for r in records if r.missed and not np.isnan(r.snr_db)]
    if partial:
        logger.warning(f"{what}: some repetitions missed at {partial} m")
    return fit_path_loss([(r.value, r.snr_db) for r in records if not np.isnan(r.snr_db)], d0=d0)


def run_distance_sweep(
    distances: Sequence[float],
    scene: Scene,
    cfg: SystemConfig,
    seeds: Sequence[int] = (0,),
    radar_config: Optional[RadarConfig] = None,
    d0: float = 7.0,
    n_jobs: int = 1,
    progress_bar: bool = True,
) -> Tuple[pd.DataFrame, PathLossFit]:
    """Radar SNR of a single reflector moved along its bearing, and the path-loss fit.

    The reflector copies angle and reflectivity from the first target of ``scene`` (broadside
    unit reflector when there is none). Clutter, leakage and noise come from ``scene``. SNR is
    the global image peak over the image noise floor.

    Args:
        seeds: one repetition per seed, averaged in dB
        n_jobs: sweep points run in parallel through joblib

    """
    for d in distances:
        if not 0 < d < cfg.max_range:
            raise ValueError(f"distance {d} m is outside (0, {cfg.max_range:.2f}) m")
    if scene.noise_power == 0:
        logger.warning("Noiseless scene: SNR is measured against the image sidelobe floor")
    template = _target_template(scene)
    points = []
    for d in distances:
        target = PointTarget(d, template.angle, template.reflectivity)
        points.append((float(d), scene.with_targets([target]), cfg, list(seeds), radar_config))
    records = _run(points, _radar_point, n_jobs, progress_bar, "Radar distance sweep")
    fit = _fit_records(records, d0, "Radar distance sweep")
    logger.info(f"Radar path loss: alpha={fit.alpha:.3f}, beta={fit.beta:.2f} dB at d0={d0} m")
    return records_frame(records, "distance_m"), fit


def run_angle_sweep(
    angles: Sequence[float],
    range_m: float,
    scene: Scene,
    cfg: SystemConfig,
    seeds: Sequence[int] = (0,),
    radar_config: Optional[RadarConfig] = None,
    n_jobs: int = 1,
    progress_bar: bool = True,
) -> Tuple[pd.DataFrame, float]:
    """Radar SNR of a single reflector at ``range_m`` moved across ``angles``.

    Returns:
        the sweep table and the 3 dB field of view: the width of the angular region around
        the strongest point whose SNR stays within 3 dB of it, interpolated between sweep
        points. Infinite when the SNR never drops by 3 dB inside the swept span.

    """
    for a in angles:
        if abs(a) >= 90:
            raise ValueError(f"angle {a} is outside (-90, 90) degrees")
    template = _target_template(scene)
    points = []
    for a in angles:
        target = PointTarget(range_m, a, template.reflectivity)
        points.append((float(a), scene.with_targets([target]), cfg, list(seeds), radar_config))
    records = _run(points, _radar_point, n_jobs, progress_bar, "Radar angle sweep")
    df = records_frame(records, "angle_deg")
    fov = field_of_view(df["angle_deg"].to_numpy(), df["snr_db"].to_numpy())
    logger.info(f"3 dB field of view: {fov:.1f} deg")
    return df, fov


def field_of_view(angles, snr_db) -> float:
    """Width of the region within 3 dB of the strongest of ``snr_db`` over sorted ``angles``."""
    angles = np.asarray(angles, dtype=float)
    snr_db = np.asarray(snr_db, dtype=float)
    keep = ~np.isnan(snr_db)
    if not keep.any():
        return float("nan")
    angles, snr_db = angles[keep], snr_db[keep]
    width = profile_width(db2pow(snr_db), angles, int(np.argmax(snr_db)))
    if not width.bounded:
        logger.warning("SNR stays within 3 dB over the swept span, the field of view is unbounded")
    return float(width.width)


def comm_snr(
    cfg: SystemConfig,
    distance: float,
    scene: Scene,
    rng: np.random.Generator,
    payload_len: int = 500,
    mcs: Optional[Mcs] = None,
    receiver_config: Optional[ReceiverConfig] = None,
    steering: Optional[SteeringMatrix] = None,
) -> Optional[float]:
    """Pilot SNR of one random DATA frame sent ``distance`` meters, None when it is lost."""
    mcs = ifnone(mcs, cfg.mcs)
    seed = int(rng.integers(1, 128))
    stream = encode_payload(rng.bytes(payload_len), mcs, seed, cfg)
    frame = assemble_frame(stream, FrameKind.DATA, ifnone(steering, SteeringMatrix.identity(cfg)), cfg)
    stream = simulate_comm(ofdm_modulate(frame, cfg), distance, scene, cfg, rng)
    received = CommReceiver(cfg, receiver_config).receive(stream)
    data = [p for p in received if p.kind == FrameKind.DATA]
    return data[0].snr_db if data else None


def _comm_point(index, value, scene, cfg, seeds, payload_len, mcs, receiver_config) -> SweepRecord:
    measured = []
    for s in seeds:
        snr = comm_snr(cfg, value, scene, _point_rng(s, index), payload_len, mcs, receiver_config)
        measured.append(None if snr is None else (snr, value, float("nan")))
    return _summarise(value, seeds, measured)


def run_comm_distance_sweep(
    distances: Sequence[float],
    scene: Scene,
    cfg: SystemConfig,
    seeds: Sequence[int] = (0,),
    receiver_config: Optional[ReceiverConfig] = None,
    payload_len: int = 500,
    mcs: Optional[Mcs] = None,
    bin_width: float = 0.5,
    d0: float = 7.0,
    n_jobs: int = 1,
    progress_bar: bool = True,
) -> Tuple[pd.DataFrame, PathLossFit]:
    """Communication SNR measured by the full receiver over distance, and the path-loss fit.

    Measurements are averaged per ``bin_width`` meter distance bin. The fit uses the mean
    distance and mean SNR of every bin.

    """
    points = [(float(d), scene, cfg, list(seeds), payload_len, mcs, receiver_config) for d in distances]
    records = _run(points, _comm_point, n_jobs, progress_bar, "Comm distance sweep")
    df = records_frame(records, "distance_m")
    df["bin_m"] = np.floor(df["distance_m"] / bin_width) * bin_width
    binned = (
        df.dropna(subset=["snr_db"])
        .groupby("bin_m", as_index=False)
        .agg(
            distance_m=("distance_m", "mean"),
            snr_db=("snr_db", "mean"),
            repetitions=("repetitions", "sum"),
            missed=("missed", "sum"),
        )
    )
    gaps = df.loc[df["snr_db"].isna(), "distance_m"].tolist()
    if gaps:
        logger.warning(f"Comm distance sweep: no frame received at {gaps} m, excluded from the fit")
    fit = fit_path_loss(zip(binned["distance_m"], binned["snr_db"]), d0=d0)
    logger.info(f"Comm path loss: alpha={fit.alpha:.3f}, beta={fit.beta:.2f} dB at d0={d0} m")
    return binned, fit
