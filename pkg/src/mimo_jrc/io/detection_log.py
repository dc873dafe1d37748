"""Line-delimited detection records {frame, range_m, angle_deg, snr_db}."""

import os
from typing import Iterable, Mapping, Union

import pandas as pd

COLUMNS = ["frame", "range_m", "angle_deg", "snr_db"]


def detections_frame(records: Iterable[Mapping]) -> pd.DataFrame:
    return pd.DataFrame(list(records), columns=COLUMNS)


def write_detection_log(path: Union[str, os.PathLike], records: Union[pd.DataFrame, Iterable[Mapping]]) -> None:
    df = records if isinstance(records, pd.DataFrame) else detections_frame(records)
    with open(path, "w") as file:
        if len(df):
            df[COLUMNS].to_json(file, orient="records", lines=True)


def read_detection_log(path: Union[str, os.PathLike]) -> pd.DataFrame:
    if os.path.getsize(path) == 0:
        return detections_frame([])
    return pd.read_json(path, orient="records", lines=True)[COLUMNS]
