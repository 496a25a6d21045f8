import os
import tempfile
from pathlib import Path

_LEDGER_DIR = Path(tempfile.mkdtemp(prefix="talbot-ledger-"))
os.environ["TALBOT_DATABASE_URL"] = f"sqlite:///{_LEDGER_DIR / 'ledger.db'}"
os.environ.setdefault("TALBOT_S3_BUCKET_NAME", "")

import math  # noqa: E402

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from talbot.services.scaling import GridSpec, PacketSpec, frame_from_length  # noqa: E402

MINI_SCENARIO = """
name = "mini"

[beam]
wavelength = "1 nm"
sigma_x = "0.75 nm"
sigma_y = "3 nm"
center_x = "-3.5 nm"

[lattice]
points_per_wavelength = 8
x_min = "-8.5 nm"
x_max = "12 nm"
y_min = "-4.75 d"
y_max = "4.75 d"
damping_width = "0.25 nm"

[grating]
period = "4 lambda"
opening_fraction = "50 %"
thickness = "0.25 d"
barrier = "6.5 meV"

[snapshots]
planes = ["0.5 LT"]
"""


@pytest.fixture
def frame():
    return frame_from_length(1.25e-10)


@pytest.fixture
def square_grid():
    return GridSpec(128, 128, 0.5, 0.5, (-32.0, -32.0))


@pytest.fixture
def slow_packet():
    return PacketSpec(sigma_x=4.0, sigma_y=4.0, center=(-6.0, 0.0), k=2.0 * math.pi / 16.0)


@pytest.fixture
def mini_scenario_text():
    return MINI_SCENARIO


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
