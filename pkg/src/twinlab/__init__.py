"""Twin-photon source laboratory.

Quasi-phase-matching spectra and tuning curves, seeded Monte Carlo simulation
of SPDC time-tag streams, and coincidence analytics on those streams.
"""
from .analysis import (HistogramSpec, correlation_histogram, estimate_pairs, heralded_g2,
                       singles_rates, unheralded_g2)
from .config import ExperimentConfig, dump_config, load_config, parse_config
from .dispersion import DispersionModel
from .exceptions import TwinlabError
from .phasematch import WaveguideSpec, find_degeneracy_temperature, signal_wavelength
from .presets import get_preset
from .source import (ChannelParams, DetectorParams, FilterBank, FilterSpec, SourceParams,
                     simulate_hbt_stream, simulate_stream)
from .tags import TagStream, read_tags, write_tags

__version__ = "0.1.0"
