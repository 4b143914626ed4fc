import pytest

from twinlab.config import (ExperimentConfig, dump_config, load_config, paper_config, parse_config,
                            parse_config_text, with_overrides)
from twinlab.exceptions import ParseError, ValidationError
from twinlab.dispersion import effective_index
from twinlab.presets import get_preset
from twinlab.tags import IDLER, SIGNAL


def test_paper_config_values(paper_cfg):
    cfg = paper_cfg
    assert cfg.waveguide.poling_period == 4.87
    assert cfg.waveguide.poled_length == 4.8
    assert cfg.phasematch.temperature == 53.0
    assert cfg.source.brightness == 2.3e5
    assert cfg.channels[SIGNAL].transmission == 0.08 and cfg.channels[IDLER].transmission == 0.09
    for role in ("signal", "idler", "idler1", "idler2"):
        det = cfg.detectors[role]
        assert (det.quantum_efficiency, det.jitter_sigma, det.dead_time) == (0.70, 30.0, 20.0)
    assert cfg.filters.signal.bandwidth == 100.0
    assert cfg.histogram.window == 600
    assert cfg.dispersion.preset == "calibrated"


def test_load_config_defaults_to_shipped_preset():
    assert load_config() == load_config("paper") == paper_config()


def test_empty_file_is_a_parse_error(tmp_path):
    path = tmp_path / "empty.cfg"
    path.write_text("")
    with pytest.raises(ParseError):
        parse_config(path)


def test_malformed_line_reports_line_number():
    with pytest.raises(ParseError) as err:
        parse_config_text("[run]\nseed = 1\nthis line is junk\n")
    assert err.value.line == 3


def test_overlapping_filters_name_the_type():
    text = "[filter.signal]\ncenter_offset_ghz = 40\n[filter.idler]\ncenter_offset_ghz = -40\n"
    with pytest.raises(ValidationError) as err:
        parse_config_text(text)
    assert any("FilterSpec" in v for v in err.value.violations)


def test_all_violations_are_reported():
    text = ("[waveguide]\npoling_period_um = -1\n"
            "[detector.signal]\nquantum_efficiency = 1.5\n"
            "[histogram]\nbin_width_ps = 0\n"
            "[run]\nseed = abc\nbogus = 1\n"
            "[nonsense]\nx = 1\n")
    with pytest.raises(ValidationError) as err:
        parse_config_text(text)
    joined = "\n".join(err.value.violations)
    for needle in ("poling_period", "quantum_efficiency", "bin_width", "seed", "bogus", "nonsense"):
        assert needle in joined
    assert len(err.value.violations) >= 6


def test_sweep_length_mismatch():
    with pytest.raises(ValidationError) as err:
        parse_config_text("[sweep.car]\npowers_mw = 0.1, 0.2\ndurations_s = 1\n")
    assert "same length" in err.value.violations[0]


def test_round_trip(tmp_path, paper_cfg):
    path = tmp_path / "c.cfg"
    path.write_text(dump_config(paper_cfg))
    assert parse_config(path) == paper_cfg


def test_round_trip_inline_dispersion_and_overrides():
    model = get_preset("calibrated")
    cfg = with_overrides(paper_config(), run={"seed": 7}, source={"pump_power": 0.123456789})
    from dataclasses import replace
    from twinlab.config import DispersionConfig
    inline = DispersionConfig(None, tuple(map(tuple, model.coefficients)), tuple(model.wavelength_range),
                              tuple(model.temperature_range), "copy")
    cfg = replace(cfg, dispersion=inline)
    back = parse_config_text(dump_config(cfg))
    assert back == cfg
    assert back.run.seed == 7
    assert effective_index(back.dispersion.model(), 1560.0, 53.0) == effective_index(model, 1560.0, 53.0)


def test_defaults_match_shipped_preset():
    defaults = ExperimentConfig(detectors=paper_config().detectors)
    assert defaults.channels == paper_config().channels
