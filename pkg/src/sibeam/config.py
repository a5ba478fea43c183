"""Run configuration: parsing, defaults, and object builders for the CLI.

Configs are line-oriented ``key = value`` files with bracketed section
headers, readable by configparser. Every physical quantity carries an
explicit unit suffix in its key name (``wall_distance_m``, ``eps_db``),
dB values are converted to linear exactly once here, and unknown sections
or keys are rejected so typos fail loudly instead of silently falling
back to defaults.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields

from .channel import RadarTarget, SiScenario, default_scenario
from .ofdm_sim import OfdmConfig


class ConfigError(ValueError):
    """Raised for unparseable, unknown, or inconsistent configuration."""


@dataclass
class RunConfig:
    # [scenario]
    carrier_frequency_hz: float = 28e9
    num_tx: int = 8
    num_rx: int = 8
    element_spacing_wavelengths: float = 0.5
    tx_rx_separation_m: float = 0.0      # 0 means half a wavelength
    wall_distance_m: float = 4.0
    wall_azimuth_deg: float = 65.0
    wall_reflection_coeff: float = 0.7
    coupling_gain_db: float = 15.2
    element_pattern: bool = True
    include_wall: bool = True
    # [codebook]
    oversampling: int = 4
    sector_deg: float = 120.0
    # [target]
    target_range_m: float = 40.0
    target_azimuth_deg: float = -39.0
    target_rcs_m2: float = 1.0
    # [ofdm]
    num_subcarriers: int = 256
    subcarrier_spacing_hz: float = 120e3
    fft_size: int = 512
    cyclic_prefix_samples: int = 64
    modulation_order: int = 64
    num_symbols: int = 100
    # [budget]
    adc_bits: int = 6
    gamma: float = 4.0
    tx_power_dbm: float = 30.0
    thermal_noise_dbm: float = -110.0
    p_sat_dbm: float = -20.0
    sigma_star_dbm: float = -75.0
    papr_mode: str = "matched"
    papr_alpha: float = 0.05
    papr_draws: int = 200
    zeta: float = 1.0
    # [solver]
    solver: str = "tapered"
    eps_db: float = -85.0
    beta: float = 1.0
    tolerance: float = 1e-7
    max_iter: int = 50_000
    # [sweep]
    sweep_eps_db: list[float] = field(
        default_factory=lambda: [-60.0, -70.0, -80.0, -90.0, -100.0, -110.0])
    # [run]
    seed: int = 42
    output_dir: str = "out"

    def validate(self) -> None:
        if self.solver not in ("tapered", "phased"):
            raise ConfigError(f"unknown solver '{self.solver}'")
        if self.papr_mode not in ("matched", "average", "quantile"):
            raise ConfigError(f"unknown papr_mode '{self.papr_mode}'")
        if not 0.0 < self.papr_alpha <= 1.0:
            raise ConfigError("papr_alpha must lie in (0, 1]")
        if self.beta <= 0.0:
            raise ConfigError("beta must be positive")
        if self.gamma < 1.0:
            raise ConfigError("gamma is a back-off and must be >= 1")
        if not self.sweep_eps_db:
            raise ConfigError("sweep eps_db list is empty")
        for name in ("carrier_frequency_hz", "subcarrier_spacing_hz",
                     "target_range_m", "target_rcs_m2", "tolerance"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"{name} must be positive")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be positive")
        try:
            self.build_ofdm().validate()
            self.build_scenario().validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    # --- linear-unit accessors (dB -> linear happens only here) ---------
    @property
    def tx_power_w(self) -> float:
        return 10.0 ** ((self.tx_power_dbm - 30.0) / 10.0)

    @property
    def thermal_noise_w(self) -> float:
        return 10.0 ** ((self.thermal_noise_dbm - 30.0) / 10.0)

    @property
    def p_sat_w(self) -> float:
        return 10.0 ** ((self.p_sat_dbm - 30.0) / 10.0)

    @property
    def sigma_star_sq_w(self) -> float:
        return 10.0 ** ((self.sigma_star_dbm - 30.0) / 10.0)

    @property
    def eps_linear(self) -> float:
        return 10.0 ** (self.eps_db / 20.0)

    @property
    def sample_interval_s(self) -> float:
        return 1.0 / (self.fft_size * self.subcarrier_spacing_hz)

    # --- object builders -------------------------------------------------
    def build_scenario(self) -> SiScenario:
        separation = (self.tx_rx_separation_m
                      if self.tx_rx_separation_m > 0.0 else None)
        return default_scenario(
            carrier_frequency_hz=self.carrier_frequency_hz,
            num_tx=self.num_tx, num_rx=self.num_rx,
            separation_m=separation,
            spacing_wavelengths=self.element_spacing_wavelengths,
            wall_distance_m=self.wall_distance_m,
            wall_azimuth_deg=self.wall_azimuth_deg,
            wall_reflection_coeff=self.wall_reflection_coeff,
            coupling_gain_db=self.coupling_gain_db,
            element_pattern=self.element_pattern)

    def build_target(self) -> RadarTarget:
        return RadarTarget(range_m=self.target_range_m,
                           azimuth_deg=self.target_azimuth_deg,
                           rcs_m2=self.target_rcs_m2)

    def build_ofdm(self) -> OfdmConfig:
        return OfdmConfig(
            num_subcarriers=self.num_subcarriers,
            subcarrier_spacing_hz=self.subcarrier_spacing_hz,
            cyclic_prefix_samples=self.cyclic_prefix_samples,
            modulation_order=self.modulation_order,
            num_symbols=self.num_symbols,
            sample_interval_s=self.sample_interval_s,
            rng_seed=self.seed)


# config-file keys allowed per section
_SECTIONS = {
    "scenario": ("carrier_frequency_hz", "num_tx", "num_rx",
                 "element_spacing_wavelengths", "tx_rx_separation_m",
                 "wall_distance_m", "wall_azimuth_deg",
                 "wall_reflection_coeff", "coupling_gain_db",
                 "element_pattern", "include_wall"),
    "codebook": ("oversampling", "sector_deg"),
    "target": ("range_m", "azimuth_deg", "rcs_m2"),
    "ofdm": ("num_subcarriers", "subcarrier_spacing_hz", "fft_size",
             "cyclic_prefix_samples", "modulation_order", "num_symbols"),
    "budget": ("adc_bits", "gamma", "tx_power_dbm", "thermal_noise_dbm",
               "p_sat_dbm", "sigma_star_dbm", "papr_mode", "papr_alpha",
               "papr_draws", "zeta"),
    "solver": ("solver", "eps_db", "beta", "tolerance", "max_iter"),
    "sweep": ("eps_db",),
    "run": ("seed", "output_dir"),
}
# config keys whose dataclass field carries a disambiguating prefix
_RENAMES = {("target", "range_m"): "target_range_m",
            ("target", "azimuth_deg"): "target_azimuth_deg",
            ("target", "rcs_m2"): "target_rcs_m2",
            ("sweep", "eps_db"): "sweep_eps_db"}


def _coerce(value: str, template) -> object:
    if isinstance(template, bool):
        lowered = value.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"expected a boolean, got '{value}'")
    if isinstance(template, int):
        return int(value)
    if isinstance(template, float):
        return float(value)
    if isinstance(template, list):
        return [float(tok) for tok in value.split(",") if tok.strip()]
    return value.strip()


def load_config(path: str | None = None) -> RunConfig:
    """Parse a config file over the built-in defaults; None keeps defaults."""
    cfg = RunConfig()
    if path is None:
        return cfg
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config '{path}': {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config '{path}': {exc}") from exc

    defaults = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key '{key}' in [{section}]")
            name = _RENAMES.get((section, key), key)
            try:
                setattr(cfg, name, _coerce(raw, defaults[name]))
            except (ValueError, TypeError) as exc:
                raise ConfigError(
                    f"bad value for '{key}' in [{section}]: {exc}") from exc
    cfg.validate()
    return cfg
