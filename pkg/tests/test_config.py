"""Config parsing, validation, and builder wiring."""

from __future__ import annotations

import numpy as np
import pytest

from sibeam.config import ConfigError, RunConfig, load_config


def write(tmp_path, text: str) -> str:
    p = tmp_path / "run.cfg"
    p.write_text(text)
    return str(p)


def test_defaults_validate_and_none_path():
    cfg = load_config(None)
    cfg.validate()
    assert cfg == RunConfig()


def test_full_file_parse(tmp_path):
    path = write(tmp_path, """
[scenario]
num_tx = 4
num_rx = 4
wall_distance_m = 2.5
include_wall = false
element_pattern = on

[codebook]
oversampling = 2
sector_deg = 90

[target]
range_m = 25.0
azimuth_deg = 10.0
rcs_m2 = 0.5

[ofdm]
num_subcarriers = 64
fft_size = 128
cyclic_prefix_samples = 9
modulation_order = 4
num_symbols = 3

[budget]
adc_bits = 4
gamma = 2.0
papr_mode = quantile
papr_alpha = 0.1

[solver]
solver = phased
eps_db = -70
beta = 1.5
max_iter = 2000

[sweep]
eps_db = -60, -70, -80

[run]
seed = 7
output_dir = results
""")
    cfg = load_config(path)
    assert cfg.num_tx == 4 and cfg.num_rx == 4
    assert cfg.wall_distance_m == 2.5
    assert cfg.include_wall is False and cfg.element_pattern is True
    assert cfg.oversampling == 2 and cfg.sector_deg == 90.0
    # prefixed renames
    assert cfg.target_range_m == 25.0
    assert cfg.target_azimuth_deg == 10.0
    assert cfg.target_rcs_m2 == 0.5
    assert cfg.num_subcarriers == 64 and cfg.fft_size == 128
    assert cfg.adc_bits == 4 and cfg.papr_mode == "quantile"
    assert cfg.solver == "phased" and cfg.eps_db == -70.0
    assert cfg.beta == 1.5 and cfg.max_iter == 2000
    assert cfg.sweep_eps_db == [-60.0, -70.0, -80.0]
    assert cfg.seed == 7 and cfg.output_dir == "results"


def test_unknown_section_and_key(tmp_path):
    with pytest.raises(ConfigError, match="unknown config section"):
        load_config(write(tmp_path, "[nosuch]\nx = 1\n"))
    with pytest.raises(ConfigError, match="unknown key"):
        load_config(write(tmp_path, "[scenario]\nnum_antennas = 8\n"))
    # a key valid in one section is rejected in another
    with pytest.raises(ConfigError, match="unknown key"):
        load_config(write(tmp_path, "[scenario]\neps_db = -80\n"))


def test_bad_values(tmp_path):
    with pytest.raises(ConfigError, match="bad value"):
        load_config(write(tmp_path, "[scenario]\nnum_tx = eight\n"))
    with pytest.raises(ConfigError, match="boolean"):
        load_config(write(tmp_path, "[scenario]\ninclude_wall = maybe\n"))
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "[solver]\nsolver = analog\n"))
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "[budget]\ngamma = 0.5\n"))
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "[solver]\nmax_iter = 0\n"))
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "[sweep]\neps_db =\n"))
    with pytest.raises(ConfigError, match="malformed"):
        load_config(write(tmp_path, "eps_db = -80\n"))   # key before section


def test_missing_file():
    with pytest.raises(ConfigError, match="cannot read"):
        load_config("/nonexistent/run.cfg")


def test_inline_comments(tmp_path):
    cfg = load_config(write(tmp_path, "[run]\nseed = 9  # comment\n"))
    assert cfg.seed == 9


def test_db_accessors():
    cfg = RunConfig()
    assert cfg.tx_power_w == pytest.approx(1.0)            # 30 dBm
    assert cfg.thermal_noise_w == pytest.approx(1e-14)     # -110 dBm
    assert cfg.p_sat_w == pytest.approx(1e-5)              # -20 dBm
    assert cfg.sigma_star_sq_w == pytest.approx(10.0 ** (-10.5))
    assert cfg.eps_linear == pytest.approx(10.0 ** (-85.0 / 20.0))
    assert cfg.sample_interval_s == pytest.approx(1.0 / (512 * 120e3))


def test_builders_wire_through():
    cfg = RunConfig()
    cfg.element_spacing_wavelengths = 0.6
    cfg.tx_rx_separation_m = 0.12
    scen = cfg.build_scenario()
    lam = 299_792_458.0 / cfg.carrier_frequency_hz
    assert scen.tx_geometry.spacing_m == pytest.approx(0.6 * lam)
    assert scen.rx_geometry.spacing_m == pytest.approx(0.6 * lam)
    # separation measured between adjacent panel edges
    gap = (scen.rx_geometry.element_positions()[0, 1]
           - scen.tx_geometry.element_positions()[-1, 1])
    assert gap == pytest.approx(0.12)

    tgt = cfg.build_target()
    assert (tgt.range_m, tgt.azimuth_deg, tgt.rcs_m2) == (40.0, -39.0, 1.0)

    ofdm = cfg.build_ofdm()
    assert ofdm.fft_size == cfg.fft_size
    assert ofdm.rng_seed == cfg.seed
    ofdm.validate()


def test_validate_cross_checks():
    cfg = RunConfig()
    cfg.num_subcarriers = 1024                   # exceeds fft_size 512
    with pytest.raises(ConfigError):
        cfg.validate()
    cfg = RunConfig()
    cfg.wall_distance_m = -1.0
    with pytest.raises(ConfigError):
        cfg.validate()
    cfg = RunConfig()
    cfg.papr_alpha = 0.0
    with pytest.raises(ConfigError):
        cfg.validate()


def test_sweep_defaults_are_descending():
    cfg = RunConfig()
    assert cfg.sweep_eps_db == sorted(cfg.sweep_eps_db, reverse=True)
    assert all(np.isfinite(cfg.sweep_eps_db))
