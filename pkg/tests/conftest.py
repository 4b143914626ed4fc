import numpy as np
import pytest

from twinlab.config import paper_config
from twinlab.phasematch import WaveguideSpec
from twinlab.presets import get_preset
from twinlab.source import ChannelParams, DetectorParams, FilterBank, SourceParams
from twinlab.tags import IDLER, SIGNAL


@pytest.fixture(scope="session")
def calibrated():
    return get_preset("calibrated")


@pytest.fixture(scope="session")
def bulk():
    return get_preset("bulk-fallback")


@pytest.fixture(scope="session")
def paper_cfg():
    return paper_config()


@pytest.fixture
def waveguide():
    return WaveguideSpec()


@pytest.fixture
def pair_setup():
    """Source, filters, channels and detectors of the reference pair measurement."""
    det = DetectorParams(0.7, 30.0, 20.0, 100.0)
    return (SourceParams(2.3e5, 0.2), FilterBank(), {SIGNAL: ChannelParams(0.08), IDLER: ChannelParams(0.09)},
            {SIGNAL: det, IDLER: det})


def poisson_sigma(expected):
    return float(np.sqrt(expected))


@pytest.fixture(scope="session")
def reproduced(tmp_path_factory):
    """Output tree of one ``twinlab reproduce-all --seed 42`` run, shared by the acceptance tests."""
    from twinlab.cli import main
    out = tmp_path_factory.mktemp("reproduce") / "run1"
    assert main(["reproduce-all", "--seed", "42", "--out-dir", str(out)]) == 0
    return out
