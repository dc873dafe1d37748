import numpy as np
import pytest

from mimo_jrc.channel import PointTarget, Scene, SiLeakage
from mimo_jrc.config import Mcs, SystemConfig
from mimo_jrc.frame import FrameKind
from mimo_jrc.tx import SteeringMatrix, assemble_frame, encode_payload, ofdm_modulate

PAYLOAD = bytes(range(1, 201))


def build_ndp(cfg: SystemConfig):
    frame = assemble_frame(None, FrameKind.NDP, SteeringMatrix.identity(cfg), cfg)
    return frame, ofdm_modulate(frame, cfg)


def build_data(cfg: SystemConfig, payload: bytes = PAYLOAD, mcs: Mcs = None, seed: int = 93, steering=None):
    stream = encode_payload(payload, mcs or cfg.mcs, seed, cfg)
    frame = assemble_frame(stream, FrameKind.DATA, steering or SteeringMatrix.identity(cfg), cfg)
    return frame, ofdm_modulate(frame, cfg)


@pytest.fixture(scope="session")
def default_config():
    return SystemConfig()


@pytest.fixture(scope="session")
def small_config():
    # two TX chains keep the virtual array uniform with d_rx = 2 d_tx
    return SystemConfig(n_tx=2, d_rx=12.7e-3)


@pytest.fixture(scope="session")
def ndp(default_config):
    return build_ndp(default_config)


@pytest.fixture(scope="session")
def data_frame(default_config):
    return build_data(default_config)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def single_target_scene():
    return Scene(targets=[PointTarget(6.0, 0.0)], noise_power=1e-4)


@pytest.fixture
def leaky_scene():
    return Scene(
        targets=[PointTarget(6.0, 15.0)],
        clutter=[PointTarget(3.0, -30.0, reflectivity=50.0)],
        si_leakage=SiLeakage(amplitude=0.5, delay=0.4),
        noise_power=1e-5,
    )
