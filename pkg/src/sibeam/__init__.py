"""Self-interference-aware TX/RX beam codebooks for monostatic sensing.

A monostatic OFDM sensing transceiver leaks transmit signal directly into
its own receive array; the leak drives the receiver ADC and buries weak
echoes in quantization noise. This package designs beam codebooks that cap
that self-interference while staying close to a reference DFT codebook:

- ``channel``: desk-scale near-field SI model (direct coupling + one wall
  reflection) and a far-field point-target radar channel, with band-limited
  discretization and plain-text file formats.
- ``split``: decouples the SI cap into one PSD quadratic constraint per
  side (TX/RX) so each codebook column can be solved independently.
- ``tapered``: exact per-column solver for amplitude-and-phase arrays via
  the KKT secular equation.
- ``sdp``: per-column solver for constant-modulus phased arrays via a
  semidefinite lift with rank-one extraction.
- ``codebook``: reference codebooks, SI/deviation metrics, file formats.
- ``budget``: quantization/saturation/SNR bounds linking the SI cap to ADC
  resolution, PAPR accounting, and range-CRLB.
- ``ofdm_sim``: quantized CP-OFDM monostatic link simulator (waveform,
  FIR channels, mid-rise ADC, matched-filter range profiles).
- ``config``/``cli``/``plots``: runs, sweeps, CSV artifacts, figures.
"""

from .budget import (NoiseBudget, PaprEstimate, PaprMode, beta_for_saturation,
                     crlb_range, full_scale, noise_bound, papr,
                     quant_noise_coeff, snr_bound, target_si, tx_power)
from .channel import (PathTap, RadarTarget, SiScenario, TappedChannel,
                      UlaGeometry, build_direct_coupling, build_radar_channel,
                      build_si_channel, build_wall_reflection,
                      default_scenario, discretize, load_channel,
                      save_channel)
from .codebook import (Codebook, Mode, beam_center_angles_deg,
                       beam_gain_pattern, codebook_deviation, dft_reference,
                       element_rolloff_db, frobenius_si, load_codebook,
                       max_si, max_si_pair, save_codebook, steering_vector)
from .config import ConfigError, RunConfig, load_config
from .ofdm_sim import (OfdmConfig, QuantizerConfig, RangeProfile,
                       beamformed_fir, cancel_known_si, convolve_stream,
                       estimate_average_papr, gen_ofdm, measure_snr,
                       per_antenna_fir, quantize, range_profile, receive)
from .sdp import (PhasedSolveError, PhasedSolveReport, SdpProblem,
                  SdpSolution, extract_phased_column,
                  min_feasible_eps_phased, optimize_codebooks_phased,
                  rank_one_metric, solve_phased_column, solve_sdp)
from .split import SplitGrams, integral_split, quadratic_form, split_bound
from .tapered import (InfeasibleColumnError, TaperedSolveReport,
                      min_feasible_eps, optimize_codebooks_tapered,
                      solve_tapered_column)

__version__ = "0.1.0"

__all__ = [
    "NoiseBudget", "PaprEstimate", "PaprMode", "beta_for_saturation",
    "crlb_range", "full_scale", "noise_bound", "papr", "quant_noise_coeff",
    "snr_bound", "target_si", "tx_power",
    "PathTap", "RadarTarget", "SiScenario", "TappedChannel", "UlaGeometry",
    "build_direct_coupling", "build_radar_channel", "build_si_channel",
    "build_wall_reflection", "default_scenario", "discretize",
    "load_channel", "save_channel",
    "Codebook", "Mode", "beam_center_angles_deg", "beam_gain_pattern",
    "codebook_deviation", "dft_reference", "element_rolloff_db",
    "frobenius_si", "load_codebook", "max_si", "max_si_pair",
    "save_codebook", "steering_vector",
    "ConfigError", "RunConfig", "load_config",
    "OfdmConfig", "QuantizerConfig", "RangeProfile", "beamformed_fir",
    "cancel_known_si", "convolve_stream", "estimate_average_papr",
    "gen_ofdm", "measure_snr", "per_antenna_fir", "quantize",
    "range_profile", "receive",
    "PhasedSolveError", "PhasedSolveReport", "SdpProblem", "SdpSolution",
    "extract_phased_column", "min_feasible_eps_phased",
    "optimize_codebooks_phased", "rank_one_metric", "solve_phased_column",
    "solve_sdp",
    "SplitGrams", "integral_split", "quadratic_form", "split_bound",
    "InfeasibleColumnError", "TaperedSolveReport", "min_feasible_eps",
    "optimize_codebooks_tapered", "solve_tapered_column",
    "__version__",
]
