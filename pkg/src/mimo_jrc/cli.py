"""``mimo-jrc`` command line.

Every subcommand reads an experiment document (``--config``, or ``paper-defaults``), seeds
its random draws from ``--seed`` and writes only inside ``--out``.

Exit codes: 0 success, 1 a stage did not meet its contract, 2 usage error, 3 invalid
configuration, 4 malformed IQ file, 5 I/O error.
"""

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from mimo_jrc.analysis import (
    run_angle_sweep,
    run_comm_distance_sweep,
    run_distance_sweep,
    run_si_removal_report,
    run_two_target_report,
    si_scene,
    two_target_scene,
)
from mimo_jrc.channel import (
    PointTarget,
    RxBaseband,
    Scene,
    SiLeakage,
    noise_power_for_snr,
    simulate_comm,
    simulate_radar,
    taper_exponent_for_fov,
)
from mimo_jrc.config import (
    PAPER_DEFAULTS,
    Mcs,
    RadarConfig,
    ReceiverConfig,
    SystemConfig,
    load_config,
    save_experiment,
)
from mimo_jrc.io import (
    chain_path,
    detections_frame,
    read_iq,
    read_iq_chains,
    write_detection_log,
    write_image,
    write_iq,
    write_iq_chains,
)
from mimo_jrc.ingest import PacketQueue, UdpIngest
from mimo_jrc.jrc_transceiver import JrcTransceiver
from mimo_jrc.radar import RadarProcessor, recover_frames, split_frames
from mimo_jrc.rx import CommReceiver
from mimo_jrc.tx import TxBaseband
from mimo_jrc.utils import (
    ConfigError,
    IqFormatError,
    JrcError,
    dump_yaml,
    generate_doc_dataclass,
    get_logger,
    set_log_level,
)

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_STAGE = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_IQ = 4
EXIT_IO = 5

TX_STEM = "tx"
RX_STEM = "rx"
COMM_FILE = "comm.cf32"
FEEDBACK_FILE = "feedback.yaml"


class Experiment:
    """The config sections of one experiment document."""

    def __init__(self, source: str):
        self.source = source
        self.system: SystemConfig = load_config(source, SystemConfig, "system")
        self.radar: RadarConfig = load_config(source, RadarConfig, "radar")
        self.receiver: ReceiverConfig = load_config(source, ReceiverConfig, "receiver")
        self.scene: Scene = load_config(source, Scene, "scene")

    def radar_scene(self) -> Scene:
        """The configured scene, or the two-target scene when it holds no scatterer."""
        if self.scene.scatterers or self.scene.si_leakage.amplitude:
            return self.scene
        return two_target_scene()


def _mcs(text: str) -> Mcs:
    try:
        modulation, rate = text.split("-")
        return Mcs(modulation, rate)
    except (ValueError, ConfigError) as e:
        raise argparse.ArgumentTypeError(f"{text!r} is not an MCS such as QPSK-1/2 ({e})")


def _feedback(args) -> Path:
    return Path(args.feedback) if args.feedback else Path(args.out) / FEEDBACK_FILE


def _seeds(args, n: int) -> List[int]:
    return list(range(args.seed, args.seed + n))


def _frange(start: float, stop: float, step: float) -> np.ndarray:
    return np.round(np.arange(start, stop + step / 2, step), 9)


def _endpoint(text: str) -> Tuple[str, int]:
    host, _, port = text.rpartition(":")
    try:
        return host or "127.0.0.1", int(port)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an endpoint such as 127.0.0.1:5000")


def _listen(args) -> List[bytes]:
    """Payloads received on ``args.listen`` until ``args.frames`` arrived or the listen time ran out."""
    queue = PacketQueue(args.queue_size)
    payloads = []
    with UdpIngest(queue, *args.listen) as ingest:
        logger.info(f"Waiting {args.listen_seconds} s for up to {args.frames} payloads on {ingest.address}")
        deadline = time.monotonic() + args.listen_seconds
        while len(payloads) < args.frames:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                break
            payload = queue.get(timeout=remaining)
            if payload is not None:
                payloads.append(payload)
    logger.info(f"Ingested {len(payloads)} payloads, queue stats {queue.stats}")
    return payloads


def _read_tx(directory: Path, cfg: SystemConfig) -> TxBaseband:
    samples, sidecars = read_iq_chains([chain_path(directory, TX_STEM, k) for k in range(cfg.n_tx)])
    markers = sidecars[0].frame_markers if sidecars[0] is not None else [0]
    return TxBaseband(samples, cfg.bandwidth, list(markers), recover_frames(samples, markers, cfg))


def _write_yaml(path: Path, document: dict) -> None:
    with open(path, "w") as file:
        dump_yaml(document, file)


def cmd_tx(args, exp: Experiment) -> int:
    cfg, out = exp.system, Path(args.out)
    transceiver = JrcTransceiver(cfg, exp.radar, replace(exp.receiver, feedback_path=str(_feedback(args))))
    transceiver.refresh_steering()
    if args.payload_file:
        data = Path(args.payload_file).read_bytes()
        payloads = [data[i : i + args.payload_size] for i in range(0, len(data), args.payload_size)]
    elif args.listen:
        payloads = _listen(args)
    else:
        rng = np.random.default_rng(args.seed)
        payloads = [rng.bytes(args.payload_size) for _ in range(args.frames)]
    frames = ([None] if args.ndp else []) + payloads
    if not frames:
        logger.error("No payload to transmit")
        return EXIT_STAGE
    tx = transceiver.transmit(frames, args.mcs)
    write_iq_chains(out, TX_STEM, tx.samples, tx.sample_rate, cfg.f_c, tx.frame_markers)
    logger.info(
        f"Wrote {len(frames)} frames ({tx.n_samples} samples per chain,"
        f" {transceiver.steering.source} steering) to {out}"
    )
    return EXIT_OK


def cmd_simulate(args, exp: Experiment) -> int:
    cfg, out = exp.system, Path(args.out)
    tx = _read_tx(Path(args.input or args.out), cfg)
    rng = np.random.default_rng(args.seed)
    if args.link in ("radar", "both"):
        rx = simulate_radar(tx, exp.radar_scene(), cfg, rng)
        write_iq_chains(out, RX_STEM, rx.samples, rx.sample_rate, cfg.f_c, rx.frame_markers)
    if args.link in ("comm", "both"):
        scene = exp.scene
        if args.snr is not None:
            amplitude = args.distance ** (-scene.comm_pl_exponent / 2)
            scene = replace(scene, noise_power=noise_power_for_snr(args.snr, amplitude))
        comm = simulate_comm(tx, args.distance, scene, cfg, rng)
        write_iq(out / COMM_FILE, comm.samples, comm.sample_rate, cfg.f_c, 0, comm.frame_markers)
    logger.info(f"Simulated {len(tx.frames)} frames over the {args.link} link")
    return EXIT_OK


def cmd_radar(args, exp: Experiment) -> int:
    cfg, out = exp.system, Path(args.out)
    source = Path(args.input or args.out)
    tx = _read_tx(source, cfg)
    rx, sidecars = read_iq_chains([chain_path(source, RX_STEM, k) for k in range(cfg.n_rx)])
    markers = sidecars[0].frame_markers if sidecars[0] is not None else tx.frame_markers
    pairs = split_frames(RxBaseband(rx, cfg.bandwidth, list(markers)), tx.frames)
    processor = RadarProcessor(cfg, exp.radar)
    if args.si_frames:
        processor.start_si_capture()
        for view, frame in pairs[: args.si_frames]:
            processor.process(view, frame)
        processor.stop_si_capture()
        pairs = pairs[args.si_frames :]
    if not pairs:
        logger.error("No frame left to image")
        return EXIT_STAGE
    results = processor.process_many(pairs)
    records = [d.as_record(r.image.frame_index) for r in results for d in r.detections]
    write_detection_log(out / "detections.jsonl", records)
    last = results[-1].image
    write_image(out / "image.csv", last.power, last.range_m, last.angle_deg)
    print(detections_frame(records).to_string(index=False))
    return EXIT_OK


def cmd_rx(args, exp: Experiment) -> int:
    cfg, out = exp.system, Path(args.out)
    samples, sidecar = read_iq(Path(args.input or args.out) / COMM_FILE)
    receiver = CommReceiver(cfg, replace(exp.receiver, feedback_path=str(_feedback(args))))
    packets = receiver.receive(samples)
    table = pd.DataFrame(
        [
            {
                "frame": p.frame_index,
                "kind": p.kind.name,
                "mcs": str(p.mcs),
                "length": len(p.payload),
                "crc_ok": p.crc_ok,
                "snr_db": p.snr_db,
                "cfo_hz": p.cfo_hz,
                "start": p.start,
            }
            for p in packets
        ],
        columns=["frame", "kind", "mcs", "length", "crc_ok", "snr_db", "cfo_hz", "start"],
    )
    table.to_csv(out / "packets.csv", index=False)
    with open(out / "payloads.bin", "wb") as file:
        for p in packets:
            if p.crc_ok:
                file.write(p.payload)
    print(table.to_string(index=False))
    if sidecar is not None and len(packets) + receiver.frames_dropped < len(sidecar.frame_markers):
        logger.warning(f"{len(sidecar.frame_markers)} frames in the capture, {len(packets)} received")
    return EXIT_OK if packets and all(p.crc_ok for p in packets) else EXIT_STAGE


def cmd_loopback(args, exp: Experiment) -> int:
    cfg, out = exp.system, Path(args.out)
    scene = exp.radar_scene()
    amplitude = args.distance ** (-scene.comm_pl_exponent / 2)
    comm_scene = replace(
        scene,
        noise_power=noise_power_for_snr(args.snr, amplitude),
        cfo=scene.cfo if args.cfo is None else args.cfo,
    )
    rng = np.random.default_rng(args.seed)
    payloads = [rng.bytes(args.payload_size) for _ in range(args.frames)]
    transceiver = JrcTransceiver(cfg, exp.radar, exp.receiver)
    report = transceiver.loopback(payloads, scene, args.distance, comm_scene, args.mcs, seed=args.seed)
    detections = report.detections()
    write_detection_log(out / "detections.jsonl", detections)
    summary = {
        "frames": len(payloads),
        "delivered": report.delivered,
        "per": float(report.per),
        "mean_snr_db": float(report.mean_snr_db),
        "detections": len(detections),
    }
    _write_yaml(out / "loopback.yaml", summary)
    print(f"PER: {100 * report.per:.1f} % ({report.delivered}/{len(payloads)} frames)")
    print(f"Comm SNR: {report.mean_snr_db:.1f} dB")
    print(detections.to_string(index=False))
    return EXIT_OK if report.per <= args.max_per else EXIT_STAGE


def cmd_sweep_distance(args, exp: Experiment) -> int:
    cfg, out = exp.system, Path(args.out)
    seeds = _seeds(args, args.repetitions)
    common = dict(seeds=seeds, d0=args.d0, n_jobs=args.n_jobs, progress_bar=not args.no_progress)
    if args.link == "radar":
        distances = _frange(args.start or 3.0, args.stop or 12.0, args.step)
        df, fit = run_distance_sweep(distances, exp.scene, cfg, radar_config=exp.radar, **common)
    else:
        distances = _frange(args.start or 3.5, args.stop or 12.5, args.step)
        df, fit = run_comm_distance_sweep(distances, exp.scene, cfg, receiver_config=exp.receiver, **common)
    df.to_csv(out / f"sweep_distance_{args.link}.csv", index=False)
    _write_yaml(
        out / f"path_loss_{args.link}.yaml",
        {"alpha": fit.alpha, "beta": fit.beta, "d0": fit.d0, "residual": fit.residual, "n_samples": fit.n_samples},
    )
    print(df.to_string(index=False))
    print(f"alpha = {fit.alpha:.3f}, beta = {fit.beta:.2f} dB (d0 = {fit.d0} m)")
    return EXIT_OK


def cmd_sweep_angle(args, exp: Experiment) -> int:
    cfg, out = exp.system, Path(args.out)
    scene = exp.scene
    if args.fov is not None:
        scene = replace(scene, taper_exponent=taper_exponent_for_fov(args.fov))
    df, fov = run_angle_sweep(
        _frange(args.start, args.stop, args.step),
        args.range,
        scene,
        cfg,
        seeds=_seeds(args, args.repetitions),
        radar_config=exp.radar,
        n_jobs=args.n_jobs,
        progress_bar=not args.no_progress,
    )
    df.to_csv(out / "sweep_angle.csv", index=False)
    _write_yaml(out / "field_of_view.yaml", {"fov_3db_deg": float(fov), "taper_exponent": scene.taper_exponent})
    print(df.to_string(index=False))
    print(f"3 dB field of view: {fov:.1f} deg")
    return EXIT_OK


def cmd_two_target(args, exp: Experiment) -> int:
    cfg, out = exp.system, Path(args.out)
    scene = exp.scene if exp.scene.targets else two_target_scene(args.angles, args.range, args.noise_power)
    report = run_two_target_report(cfg, scene, exp.radar, seed=args.seed)
    image = report.image
    write_image(out / "image.csv", image.power, image.range_m, image.angle_deg)
    write_detection_log(out / "detections.jsonl", [d.as_record(image.frame_index) for d in report.detections])
    print(report.peaks().to_string(index=False))
    return EXIT_OK if report.passed else EXIT_STAGE


def cmd_si_capture(args, exp: Experiment) -> int:
    cfg, out = exp.system, Path(args.out)
    scene = exp.scene if exp.scene.targets and exp.scene.clutter else si_scene(excess_db=args.excess_db)
    df = run_si_removal_report(cfg, _seeds(args, args.runs), scene, exp.radar)
    df.to_csv(out / "si_removal.csv", index=False)
    print(df.to_string(index=False))
    ok = df["target_peak_after"].mean() >= args.min_success
    if "suppression_db" in df:
        ok = ok and df["suppression_db"].min() >= args.min_suppression
    return EXIT_OK if ok else EXIT_STAGE


def cmd_config(args, exp: Experiment) -> int:
    if args.describe:
        for schema in (SystemConfig, Mcs, RadarConfig, ReceiverConfig, Scene, PointTarget, SiLeakage):
            print(generate_doc_dataclass(schema, desc=f"{schema.__name__}:"))
        return EXIT_OK
    path = Path(args.out) / "experiment.yaml"
    save_experiment(path, system=exp.system, radar=exp.radar, receiver=exp.receiver, scene=exp.scene)
    logger.info(f"Resolved experiment document written to {path}")
    return EXIT_OK


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help=f"Experiment YAML document, or {PAPER_DEFAULTS}")
    parser.add_argument("--seed", type=int, default=0, help="Seed of every random draw")
    parser.add_argument("--out", default=".", help="Output directory")
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Verbosity of the log")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mimo-jrc",
        description="MIMO OFDM joint radar-communication baseband simulator",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__.split("\n\n", 2)[2],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tx", help="Encode payloads into per-chain IQ files")
    _common(p)
    p.add_argument("--frames", type=int, default=1, help="Number of random DATA frames")
    p.add_argument("--payload-size", type=int, default=500, help="Bytes per frame")
    p.add_argument("--payload-file", help="Send the content of this file instead of random payloads")
    p.add_argument("--ndp", action="store_true", help="Start with a sounding (NDP) frame")
    p.add_argument("--mcs", type=_mcs, help="Payload MCS, e.g. QAM16-3/4")
    p.add_argument("--listen", type=_endpoint, help="Take payloads from UDP datagrams on HOST:PORT instead")
    p.add_argument("--listen-seconds", type=float, default=10.0, help="How long --listen waits for --frames payloads")
    p.add_argument("--queue-size", type=int, default=64, help="Datagrams buffered by --listen, oldest dropped first")
    p.add_argument("--feedback", help="Channel feedback file (default <out>/feedback.yaml)")
    p.set_defaults(func=cmd_tx)

    p = sub.add_parser("simulate", help="Pass recorded TX IQ through the radar and comm channels")
    _common(p)
    p.add_argument("--input", help="Directory of the TX IQ files (default --out)")
    p.add_argument("--link", choices=["radar", "comm", "both"], default="both")
    p.add_argument("--distance", type=float, default=6.0, help="Comm receiver distance in m")
    p.add_argument("--snr", type=float, help="Comm SNR in dB, overrides the scene noise power")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("radar", help="Image and detect from TX and RX IQ files")
    _common(p)
    p.add_argument("--input", help="Directory of the IQ files (default --out)")
    p.add_argument("--si-frames", type=int, default=0, help="Leading frames used as background capture")
    p.set_defaults(func=cmd_radar)

    p = sub.add_parser("rx", help="Decode the comm IQ file")
    _common(p)
    p.add_argument("--input", help="Directory of the comm IQ file (default --out)")
    p.add_argument("--feedback", help="Where NDP channel estimates go (default <out>/feedback.yaml)")
    p.set_defaults(func=cmd_rx)

    p = sub.add_parser("loopback", help="Transmit, simulate, sense and receive end to end")
    _common(p)
    p.add_argument("--frames", type=int, default=10)
    p.add_argument("--payload-size", type=int, default=500)
    p.add_argument("--mcs", type=_mcs)
    p.add_argument("--snr", type=float, default=30.0, help="Comm SNR per subcarrier in dB")
    p.add_argument("--distance", type=float, default=6.0, help="Comm receiver distance in m")
    p.add_argument("--cfo", type=float, help="Comm carrier frequency offset in Hz")
    p.add_argument("--max-per", type=float, default=0.0, help="Largest packet error rate counted as success")
    p.set_defaults(func=cmd_loopback)

    p = sub.add_parser("sweep-distance", help="Path-loss sweep over distance")
    _common(p)
    p.add_argument("--link", choices=["radar", "comm"], default="radar")
    p.add_argument("--start", type=float)
    p.add_argument("--stop", type=float)
    p.add_argument("--step", type=float, default=0.5)
    p.add_argument("--repetitions", type=int, default=20)
    p.add_argument("--d0", type=float, default=7.0, help="Reference distance of the fit in m")
    p.add_argument("--n-jobs", type=int, default=1)
    p.add_argument("--no-progress", action="store_true")
    p.set_defaults(func=cmd_sweep_distance)

    p = sub.add_parser("sweep-angle", help="Radar SNR over target angle")
    _common(p)
    p.add_argument("--start", type=float, default=-25.0)
    p.add_argument("--stop", type=float, default=25.0)
    p.add_argument("--step", type=float, default=1.0)
    p.add_argument("--range", type=float, default=6.0)
    p.add_argument("--fov", type=float, help="Calibrate the element taper to this 3 dB field of view")
    p.add_argument("--repetitions", type=int, default=1)
    p.add_argument("--n-jobs", type=int, default=1)
    p.add_argument("--no-progress", action="store_true")
    p.set_defaults(func=cmd_sweep_angle)

    p = sub.add_parser("two-target", help="Two reflectors at one range after background capture")
    _common(p)
    p.add_argument("--angles", type=float, nargs="+", default=[-10.0, 10.0])
    p.add_argument("--range", type=float, default=6.0)
    p.add_argument("--noise-power", type=float, default=1e-4)
    p.set_defaults(func=cmd_two_target)

    p = sub.add_parser("si-capture", help="Background capture and removal against strong static returns")
    _common(p)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--excess-db", type=float, default=40.0, help="Leakage and clutter above the target")
    p.add_argument("--min-success", type=float, default=0.9, help="Fraction of runs with the target as peak")
    p.add_argument("--min-suppression", type=float, default=25.0, help="Clutter suppression in dB")
    p.set_defaults(func=cmd_si_capture)

    p = sub.add_parser("config", help="Write the resolved experiment document")
    _common(p)
    p.add_argument("--describe", action="store_true", help="Print every config field with its help instead")
    p.set_defaults(func=cmd_config)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.log_level:
        set_log_level(args.log_level)
    try:
        exp = Experiment(args.config)
        Path(args.out).mkdir(parents=True, exist_ok=True)
        return args.func(args, exp)
    except ConfigError as e:
        logger.error(str(e))
        return EXIT_CONFIG
    except IqFormatError as e:
        logger.error(str(e))
        return EXIT_IQ
    except OSError as e:
        logger.error(str(e))
        return EXIT_IO
    except JrcError as e:
        logger.error(str(e))
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
