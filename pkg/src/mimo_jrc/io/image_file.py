"""Range-angle image grids as comma-delimited text.

The first row holds the angle axis in degrees, the first column the range axis in meters
and the body the power in dB.

"""

import os
from typing import NamedTuple, Union

import numpy as np
import pandas as pd

from mimo_jrc.utils import check_numpy, pow2db

CORNER = "range_m/angle_deg"
_FLOAT_FORMAT = "%.6f"


class ImageGrid(NamedTuple):
    range_m: np.ndarray
    angle_deg: np.ndarray
    power_db: np.ndarray


def _labels(values) -> list:
    return [_FLOAT_FORMAT % v for v in values]


def _parse_label(label: str) -> float:
    # read_csv suffixes repeated labels, e.g. "nan.1"
    return np.nan if label.startswith("nan") else float(label)


def write_image_db(path: Union[str, os.PathLike], grid: ImageGrid) -> None:
    assert grid.power_db.shape == (len(grid.range_m), len(grid.angle_deg)), "axes do not match the image"
    df = pd.DataFrame(grid.power_db, index=_labels(grid.range_m), columns=_labels(grid.angle_deg))
    df.index.name = CORNER
    df.to_csv(path, float_format=_FLOAT_FORMAT)


def write_image(path: Union[str, os.PathLike], power, range_m, angle_deg) -> None:
    """Writes a linear power image [range, angle] in dB with its axes."""
    write_image_db(path, ImageGrid(np.asarray(range_m), np.asarray(angle_deg), pow2db(check_numpy(power, float))))


def read_image(path: Union[str, os.PathLike]) -> ImageGrid:
    df = pd.read_csv(path, index_col=0)
    return ImageGrid(
        range_m=df.index.to_numpy(dtype=float),
        angle_deg=np.array([_parse_label(c) for c in df.columns]),
        power_db=df.to_numpy(dtype=float),
    )
