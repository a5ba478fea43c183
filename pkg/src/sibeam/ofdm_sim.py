"""Quantized OFDM radar simulator for analog-beamformed monostatic sensing.

Models the digital end of a desk-scale experiment: cyclic-prefix OFDM
symbols drive a single TX beam, the superposition of self-interference and
target echo is received through one RX beam, thermal noise is added, and a
mid-rise ADC quantizes I and Q against a full scale chosen from the
SI-only dry run. Matched filtering of the received stream against the
transmitted samples yields per-symbol range profiles.

With analog beamforming every TX chain radiates the same baseband stream,
so the chain-summed PAPR statistic of the budget module reduces to the
PAPR of that single stream; estimate_average_papr reports it in that
convention. Per-symbol RNG streams are derived from (seed, symbol index),
making serial and parallel symbol generation bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sp_signal

from .budget import SPEED_OF_LIGHT, PaprEstimate, papr
from .channel import TappedChannel

_QAM_ORDERS = (4, 16, 64)


@dataclass
class OfdmConfig:
    """Cyclic-prefix OFDM numerology on a fixed sample grid.

    The FFT size is implied: 1/(subcarrier_spacing * sample_interval)
    must be an integer at least num_subcarriers (sample rate covers the
    occupied bandwidth).
    """

    num_subcarriers: int
    subcarrier_spacing_hz: float
    cyclic_prefix_samples: int
    modulation_order: int
    num_symbols: int
    sample_interval_s: float
    rng_seed: int = 0

    @property
    def fft_size(self) -> int:
        return int(round(1.0 / (self.subcarrier_spacing_hz * self.sample_interval_s)))

    @property
    def symbol_samples(self) -> int:
        return self.fft_size + self.cyclic_prefix_samples

    @property
    def bandwidth_hz(self) -> float:
        return self.num_subcarriers * self.subcarrier_spacing_hz

    def validate(self) -> None:
        if self.num_subcarriers < 1:
            raise ValueError("need at least one subcarrier")
        if self.subcarrier_spacing_hz <= 0.0 or self.sample_interval_s <= 0.0:
            raise ValueError("spacing and sample interval must be positive")
        if self.cyclic_prefix_samples < 0:
            raise ValueError("cyclic prefix length cannot be negative")
        if self.modulation_order not in _QAM_ORDERS:
            raise ValueError(f"modulation order must be one of {_QAM_ORDERS}")
        if self.num_symbols < 1:
            raise ValueError("need at least one symbol")
        n_exact = 1.0 / (self.subcarrier_spacing_hz * self.sample_interval_s)
        if abs(n_exact - round(n_exact)) > 1e-6 * n_exact:
            raise ValueError("sample interval does not divide the symbol duration")
        if self.fft_size < self.num_subcarriers:
            raise ValueError("sample rate is below the occupied bandwidth")


@dataclass
class QuantizerConfig:
    bits: int
    full_scale: float
    enabled: bool = True

    def validate(self) -> None:
        if self.enabled:
            if self.bits < 1:
                raise ValueError("quantizer needs at least one bit")
            if self.full_scale <= 0.0:
                raise ValueError("quantizer full scale must be positive")


@dataclass
class RangeProfile:
    """Bins, peak-normalized magnitudes, and the absolute peak level.

    peak_power carries the unnormalized correlation peak so profiles from
    different runs can be compared on an absolute scale:
    absolute dB = magnitude_db + 10*log10(peak_power).
    """

    bins_m: np.ndarray
    magnitude_db: np.ndarray
    peak_power: float = 1.0


def _qam_symbols(rng: np.random.Generator, order: int, count: int) -> np.ndarray:
    """Uniform random square-QAM points with unit average power."""
    side = int(round(np.sqrt(order)))
    levels = 2 * np.arange(side) - (side - 1)          # odd integers
    re = levels[rng.integers(0, side, size=count)]
    im = levels[rng.integers(0, side, size=count)]
    return (re + 1j * im) / np.sqrt(2.0 * (order - 1) / 3.0)


def gen_ofdm(config: OfdmConfig) -> np.ndarray:
    """Generate (num_symbols, fft_size + cp) baseband samples.

    Subcarriers occupy a contiguous block centered on DC and carry unit
    average-power QAM, scaled so the time-domain mean sample power of the
    symbol body is one (exactly for QPSK, whose points all have unit
    modulus; in expectation for higher orders).
    """
    config.validate()
    n_fft, n_sc = config.fft_size, config.num_subcarriers
    cp = config.cyclic_prefix_samples
    bins = (np.arange(n_sc) - n_sc // 2) % n_fft
    out = np.empty((config.num_symbols, n_fft + cp), dtype=complex)
    scale = n_fft / np.sqrt(n_sc)
    for sym in range(config.num_symbols):
        rng = np.random.default_rng((config.rng_seed, sym))
        spectrum = np.zeros(n_fft, dtype=complex)
        spectrum[bins] = _qam_symbols(rng, config.modulation_order, n_sc)
        body = np.fft.ifft(spectrum) * scale
        out[sym, :cp] = body[n_fft - cp:] if cp else body[:0]
        out[sym, cp:] = body
    return out


def beamformed_fir(channel: TappedChannel, rx_beam: np.ndarray,
                   tx_beam: np.ndarray) -> np.ndarray:
    """Scalar FIR c^H S[i] w of a discretized channel on its sample grid."""
    if channel.sample_interval_s <= 0.0:
        raise ValueError("channel must be discretized first")
    length = 1 + max(int(round(t.delay_s / channel.sample_interval_s))
                     for t in channel.taps)
    fir = np.zeros(length, dtype=complex)
    for tap in channel.taps:
        idx = int(round(tap.delay_s / channel.sample_interval_s))
        fir[idx] += np.vdot(rx_beam, tap.gain @ tx_beam)
    return fir


def per_antenna_fir(channel: TappedChannel, tx_beam: np.ndarray) -> np.ndarray:
    """Per-RX-antenna FIR (num_rx, length) of S[i] w before combining."""
    if channel.sample_interval_s <= 0.0:
        raise ValueError("channel must be discretized first")
    length = 1 + max(int(round(t.delay_s / channel.sample_interval_s))
                     for t in channel.taps)
    fir = np.zeros((channel.num_rx, length), dtype=complex)
    for tap in channel.taps:
        idx = int(round(tap.delay_s / channel.sample_interval_s))
        fir[:, idx] += tap.gain @ tx_beam
    return fir


def convolve_stream(x: np.ndarray, fir: np.ndarray) -> np.ndarray:
    """Causal convolution truncated to the input length."""
    if fir.ndim == 1:
        return sp_signal.fftconvolve(x, fir, mode="full")[: len(x)]
    out = np.empty((fir.shape[0], len(x)), dtype=complex)
    for m in range(fir.shape[0]):
        out[m] = sp_signal.fftconvolve(x, fir[m], mode="full")[: len(x)]
    return out


def quantize(samples: np.ndarray, config: QuantizerConfig) -> np.ndarray:
    """Mid-rise uniform quantization of I and Q with clamping.

    q(v) = delta*(floor(v/delta) + 1/2), delta = 2*full_scale/2^bits,
    outputs clamped to +/-(full_scale - delta/2).
    """
    config.validate()
    if not config.enabled:
        return np.array(samples, copy=True)
    delta = 2.0 * config.full_scale / 2.0 ** config.bits
    top = config.full_scale - delta / 2.0

    def q(v: np.ndarray) -> np.ndarray:
        return np.clip(delta * (np.floor(v / delta) + 0.5), -top, top)

    samples = np.asarray(samples)
    return q(samples.real) + 1j * q(samples.imag)


def receive(x: np.ndarray, si: TappedChannel, radar: TappedChannel,
            rx_beam: np.ndarray, tx_beam: np.ndarray,
            sigma_thermal_sq: float, quant: QuantizerConfig,
            rng_seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """One received stream: clean beamformed sum and its noisy ADC output.

    clean is x convolved with the combined scalar channel
    c^H (S + H_r) w; noisy adds circular Gaussian thermal noise (before
    the ADC) and applies the quantizer configuration.
    """
    x = np.asarray(x).reshape(-1)
    fir = beamformed_fir(si, rx_beam, tx_beam)
    fir_r = beamformed_fir(radar, rx_beam, tx_beam)
    length = max(len(fir), len(fir_r))
    combined = np.zeros(length, dtype=complex)
    combined[: len(fir)] += fir
    combined[: len(fir_r)] += fir_r
    clean = convolve_stream(x, combined)
    rng = np.random.default_rng(rng_seed)
    if sigma_thermal_sq < 0.0:
        raise ValueError("thermal noise power cannot be negative")
    noise_scale = np.sqrt(sigma_thermal_sq / 2.0)
    noise = noise_scale * (rng.standard_normal(len(x))
                           + 1j * rng.standard_normal(len(x)))
    noisy = quantize(clean + noise, quant)
    return clean, noisy


def range_profile(noisy_rx: np.ndarray, x: np.ndarray,
                  config: OfdmConfig) -> RangeProfile:
    """Symbol-averaged matched-filter range profile in dB below its peak.

    Both streams are reshaped to the config's symbol grid; each symbol of
    the received stream is correlated against its transmitted samples and
    the squared magnitudes are averaged over symbols. Bin i maps to
    two-way range c * i * sample_interval / 2.
    """
    config.validate()
    n = config.num_symbols * config.symbol_samples
    noisy_rx = np.asarray(noisy_rx).reshape(-1)
    x = np.asarray(x).reshape(-1)
    if len(noisy_rx) != n or len(x) != n:
        raise ValueError("streams do not match the OFDM symbol grid")
    y_sym = noisy_rx.reshape(config.num_symbols, config.symbol_samples)
    x_sym = x.reshape(config.num_symbols, config.symbol_samples)
    n_lags = config.fft_size
    acc = np.zeros(n_lags)
    for sym in range(config.num_symbols):
        corr = sp_signal.fftconvolve(y_sym[sym], x_sym[sym][::-1].conj(),
                                     mode="full")
        zero_lag = config.symbol_samples - 1
        acc += np.abs(corr[zero_lag: zero_lag + n_lags]) ** 2
    acc /= config.num_symbols
    peak = acc.max()
    if peak <= 0.0:
        raise ValueError("all-zero correlation; nothing to profile")
    bins = SPEED_OF_LIGHT * np.arange(n_lags) * config.sample_interval_s / 2.0
    return RangeProfile(
        bins_m=bins,
        magnitude_db=10.0 * np.log10(np.maximum(acc, peak * 1e-30) / peak),
        peak_power=float(peak))


def measure_snr(clean_echo: np.ndarray, noisy: np.ndarray,
                clean_total: np.ndarray) -> float:
    """Radar-component power over residual (noise + distortion) power."""
    echo_power = float(np.mean(np.abs(clean_echo) ** 2))
    resid_power = float(np.mean(np.abs(np.asarray(noisy)
                                       - np.asarray(clean_total)) ** 2))
    if resid_power <= 0.0:
        return np.inf if echo_power > 0.0 else 0.0
    return echo_power / resid_power


def cancel_known_si(noisy: np.ndarray, predicted_si: np.ndarray) -> np.ndarray:
    """Digital subtraction of the predicted SI contribution."""
    return np.asarray(noisy) - np.asarray(predicted_si)


def estimate_average_papr(config: OfdmConfig, num_symbols: int = 200) -> PaprEstimate:
    """Monte-Carlo estimate of the per-symbol PAPR mean of this waveform."""
    probe = OfdmConfig(
        num_subcarriers=config.num_subcarriers,
        subcarrier_spacing_hz=config.subcarrier_spacing_hz,
        cyclic_prefix_samples=config.cyclic_prefix_samples,
        modulation_order=config.modulation_order,
        num_symbols=num_symbols,
        sample_interval_s=config.sample_interval_s,
        rng_seed=config.rng_seed)
    symbols = gen_ofdm(probe)
    return PaprEstimate.average(float(np.mean([papr(s) for s in symbols])))
