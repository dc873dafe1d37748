"""Raw IQ captures: interleaved little-endian float32 pairs plus a YAML sidecar."""

import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import yaml

from mimo_jrc.utils import IqFormatError, check_numpy, dump_yaml, get_logger, read_yaml

logger = get_logger(__name__)

IQ_FORMAT = "mimo-jrc-iq"
IQ_VERSION = 1
IQ_SUFFIX = ".cf32"
_DTYPE = np.dtype("<c8")

_PATH = Union[str, os.PathLike]


@dataclass
class IqSidecar:
    sample_rate: float
    f_c: float
    chain_id: int
    n_samples: int
    frame_markers: List[int] = field(default_factory=list)
    format: str = IQ_FORMAT
    version: int = IQ_VERSION


def sidecar_path(path: _PATH) -> Path:
    return Path(f"{path}.yaml")


def write_iq(
    path: _PATH,
    samples,
    sample_rate: float,
    f_c: float,
    chain_id: int = 0,
    frame_markers: Sequence[int] = (),
) -> Path:
    """Writes one chain and its sidecar. Returns the sample file path."""
    samples = check_numpy(samples).reshape(-1).astype(_DTYPE)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    samples.tofile(path)
    sidecar = IqSidecar(
        sample_rate=float(sample_rate),
        f_c=float(f_c),
        chain_id=int(chain_id),
        n_samples=int(samples.size),
        frame_markers=[int(m) for m in frame_markers],
    )
    doc = asdict(sidecar)
    ordered = {"format": doc.pop("format"), "version": doc.pop("version"), **doc}
    with open(sidecar_path(path), "w") as file:
        dump_yaml(ordered, file)
    return path


def read_iq(path: _PATH) -> Tuple[np.ndarray, Optional[IqSidecar]]:
    """Reads one chain. A capture without sidecar is accepted with a warning.

    Raises:
        IqFormatError: byte length not a multiple of 8, unknown sidecar format or
            sidecar sample count not matching the file

    """
    path = Path(path)
    size = os.path.getsize(path)
    if size % _DTYPE.itemsize:
        raise IqFormatError(f"{path}: {size} bytes is not a whole number of float32 IQ pairs")
    samples = np.fromfile(path, dtype=_DTYPE)
    meta = sidecar_path(path)
    if not meta.exists():
        logger.warning(f"{path} has no sidecar, sample rate and frame markers unknown")
        return samples, None
    try:
        doc = read_yaml(meta)
    except yaml.YAMLError as e:
        raise IqFormatError(f"{meta}: {e}") from e
    if not isinstance(doc, dict) or doc.get("format") != IQ_FORMAT or doc.get("version") != IQ_VERSION:
        raise IqFormatError(f"{meta}: not a {IQ_FORMAT} version {IQ_VERSION} sidecar")
    try:
        sidecar = IqSidecar(**doc)
    except TypeError as e:
        raise IqFormatError(f"{meta}: {e}") from e
    if sidecar.n_samples != samples.size:
        raise IqFormatError(f"{meta}: sidecar declares {sidecar.n_samples} samples, file holds {samples.size}")
    return samples, sidecar


def chain_path(out_dir: _PATH, stem: str, chain: int) -> Path:
    return Path(out_dir) / f"{stem}_ch{chain}{IQ_SUFFIX}"


def write_iq_chains(
    out_dir: _PATH,
    stem: str,
    samples,
    sample_rate: float,
    f_c: float,
    frame_markers: Sequence[int] = (),
) -> List[Path]:
    samples = np.atleast_2d(check_numpy(samples))
    return [
        write_iq(chain_path(out_dir, stem, k), chain, sample_rate, f_c, k, frame_markers)
        for k, chain in enumerate(samples)
    ]


def read_iq_chains(paths: Sequence[_PATH]) -> Tuple[np.ndarray, List[Optional[IqSidecar]]]:
    """Reads several chains of one capture into a [chain, sample] array."""
    chains, sidecars = zip(*(read_iq(p) for p in paths))
    lengths = {c.size for c in chains}
    if len(lengths) != 1:
        raise IqFormatError(f"chains of one capture differ in length: {sorted(lengths)}")
    return np.stack(chains).astype(complex), list(sidecars)
