"""Channel feedback file written by the receiver after an NDP and read by the precoder."""

import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Union

import numpy as np
import yaml

from mimo_jrc.config import SystemConfig
from mimo_jrc.utils import FeedbackError, check_numpy, dump_yaml, get_logger, read_yaml

logger = get_logger(__name__)

FEEDBACK_FORMAT = "mimo-jrc-feedback"
FEEDBACK_VERSION = 1


def write_feedback(h, path: Union[str, os.PathLike], cfg: SystemConfig, timestamp: Optional[str] = None) -> Path:
    """Atomically writes a [subcarrier, tx_chain] channel matrix.

    Only occupied subcarriers are stored, row-major as [re, im] pairs. The document goes
    to a temporary file in the target directory that then replaces the previous file, so
    a failed write leaves the last valid feedback untouched.

    Raises:
        FeedbackError: the file could not be written

    """
    h = check_numpy(h, dtype=complex)
    assert h.shape == (cfg.n_sc, cfg.n_tx), f"channel shape {h.shape} does not match ({cfg.n_sc}, {cfg.n_tx})"
    occupied = cfg.occupied_subcarriers
    doc = {
        "format": FEEDBACK_FORMAT,
        "version": FEEDBACK_VERSION,
        "timestamp": timestamp or datetime.now(timezone.utc).isoformat(),
        "n_sc": cfg.n_sc,
        "n_tx": cfg.n_tx,
        "occupied": [int(k) for k in occupied],
        "entries": [[float(v.real), float(v.imag)] for v in h[occupied].reshape(-1)],
    }
    path = Path(path)
    tmp_name = None
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile("w", dir=path.parent, prefix=f".{path.name}.", delete=False) as file:
            tmp_name = file.name
            dump_yaml(doc, file)
            file.flush()
            os.fsync(file.fileno())
        os.replace(tmp_name, path)
    except OSError as e:
        if tmp_name is not None and os.path.exists(tmp_name):
            os.remove(tmp_name)
        raise FeedbackError(f"could not write feedback to {path}: {e}") from e
    logger.debug(f"Feedback written to {path}")
    return path


def read_feedback(path: Union[str, os.PathLike], cfg: SystemConfig) -> np.ndarray:
    """Reads a feedback file into a [subcarrier, tx_chain] matrix, zero off the occupied set.

    Raises:
        FeedbackError: unreadable file, unknown format or dimensions not matching ``cfg``

    """
    try:
        doc = read_yaml(path)
    except (OSError, yaml.YAMLError) as e:
        raise FeedbackError(f"could not read feedback {path}: {e}") from e
    if not isinstance(doc, dict) or doc.get("format") != FEEDBACK_FORMAT or doc.get("version") != FEEDBACK_VERSION:
        raise FeedbackError(f"{path}: not a {FEEDBACK_FORMAT} version {FEEDBACK_VERSION} document")
    if doc.get("n_sc") != cfg.n_sc or doc.get("n_tx") != cfg.n_tx:
        raise FeedbackError(
            f"{path}: feedback for n_sc={doc.get('n_sc')}, n_tx={doc.get('n_tx')} does not match the config"
        )
    try:
        occupied = np.asarray(doc["occupied"], dtype=int)
        entries = np.asarray(doc["entries"], dtype=float)
    except (KeyError, TypeError, ValueError) as e:
        raise FeedbackError(f"{path}: malformed channel entries: {e}") from e
    if entries.shape != (occupied.size * cfg.n_tx, 2):
        raise FeedbackError(f"{path}: expected {occupied.size * cfg.n_tx} entries, found {len(doc['entries'])}")
    h = np.zeros((cfg.n_sc, cfg.n_tx), dtype=complex)
    h[occupied] = (entries[:, 0] + 1j * entries[:, 1]).reshape(occupied.size, cfg.n_tx)
    return h
