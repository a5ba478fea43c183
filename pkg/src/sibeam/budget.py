"""Quantization-noise budgeting for a monostatic sensing receiver.

The receiver's ADC full scale must cover the self-interference that leaks
through the chosen beam pair; a uniform white-noise model then prices that
full scale in quantization-noise power. This module holds the closed-form
pieces of that argument: the quantization coefficient b_Q = (2/3)·2^(-2Q),
the full-scale rule y_fs = gamma * max |SI-only sample|, the resulting
noise upper bound, the sensing-SNR lower bound and range CRLB it implies,
and the two inversions a designer needs: the SI target eps that meets a
noise budget, and the TX/RX budget split beta that keeps per-antenna
peaks under a saturation limit.

PAPR enters through a sum over TX chains; it can be matched to the exact
transmitted signal, averaged over random symbols, or inflated to an
alpha-quantile via Markov's inequality. Everything here is pure
arithmetic in linear units; dB conversions belong to the CLI boundary.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .split import SplitGrams

SPEED_OF_LIGHT = 299_792_458.0


class PaprMode(enum.Enum):
    MATCHED = "matched"
    AVERAGE = "average"
    QUANTILE = "quantile"


@dataclass
class NoiseBudget:
    """Receiver-side constants of the quantization-noise model.

    papr_sum is the sum of per-TX-chain peak-to-average ratios (the worst
    case over the codebook in matched mode); p_tx is the total transmit
    power in watts; k_chains counts RX chains contributing noise.
    """

    adc_bits: int
    gamma: float = 1.0
    p_tx: float = 1.0
    papr_sum: float = 1.0
    sigma_thermal_sq: float = 0.0
    k_chains: int = 1

    @property
    def b_q(self) -> float:
        return quant_noise_coeff(self.adc_bits)

    def validate(self) -> None:
        if self.adc_bits < 1:
            raise ValueError("adc_bits must be >= 1")
        if self.gamma < 1.0:
            raise ValueError("gamma is a back-off and must be >= 1")
        if min(self.p_tx, self.papr_sum, self.sigma_thermal_sq) < 0.0:
            raise ValueError("powers and PAPR sums must be nonnegative")
        if self.k_chains < 1:
            raise ValueError("k_chains must be >= 1")


@dataclass
class PaprEstimate:
    """A PAPR-sum estimate rho_bar with the convention used to obtain it.

    value always stores the raw chain-summed PAPR statistic; quantile mode
    additionally records the exceedance probability alpha, and
    effective_sum() applies the Markov inflation value/alpha.
    """

    mode: PaprMode
    value: float
    alpha: float | None = None

    def __post_init__(self) -> None:
        if self.value <= 0.0:
            raise ValueError("PAPR estimate must be positive")
        if self.mode is PaprMode.QUANTILE:
            if self.alpha is None or not 0.0 < self.alpha <= 1.0:
                raise ValueError("quantile mode needs alpha in (0, 1]")
        elif self.alpha is not None:
            raise ValueError("alpha is only meaningful in quantile mode")

    @classmethod
    def matched(cls, value: float) -> "PaprEstimate":
        return cls(mode=PaprMode.MATCHED, value=value)

    @classmethod
    def average(cls, value: float) -> "PaprEstimate":
        return cls(mode=PaprMode.AVERAGE, value=value)

    @classmethod
    def quantile(cls, value: float, alpha: float) -> "PaprEstimate":
        return cls(mode=PaprMode.QUANTILE, value=value, alpha=alpha)

    def effective_sum(self) -> float:
        if self.mode is PaprMode.QUANTILE:
            return self.value / self.alpha
        return self.value


def quant_noise_coeff(q_bits: int) -> float:
    """Coefficient linking squared full scale to quantization noise power."""
    if q_bits < 1:
        raise ValueError("q_bits must be >= 1")
    return (2.0 / 3.0) * 2.0 ** (-2 * q_bits)


def tx_power(signals: np.ndarray, symbol_duration_s: float | None = None) -> float:
    """Total transmit power: per-chain mean sample power, summed over chains.

    signals is (chains, samples) or a single 1-D chain. The symbol duration
    cancels out of the time-normalized energy and is accepted only for
    interface symmetry with the continuous-time definition.
    """
    x = np.atleast_2d(np.asarray(signals))
    if x.size == 0:
        return 0.0
    del symbol_duration_s
    return float(np.sum(np.mean(np.abs(x) ** 2, axis=1)))


def papr(signal: np.ndarray) -> float:
    """Peak-to-average power ratio of one sample sequence (linear)."""
    power = np.abs(np.asarray(signal)) ** 2
    mean = float(np.mean(power))
    if mean == 0.0:
        raise ValueError("PAPR of an all-zero signal is undefined")
    return float(power.max()) / mean


def full_scale(si_rx_samples: np.ndarray, gamma: float) -> float:
    """ADC full scale: back-off times the largest SI-only sample modulus."""
    if gamma < 1.0:
        raise ValueError("gamma must be >= 1")
    samples = np.asarray(si_rx_samples)
    if samples.size == 0:
        return 0.0
    return float(gamma * np.abs(samples).max())


def noise_bound(budget: NoiseBudget, max_si: float) -> float:
    """Upper bound on total receiver noise power (thermal + quantization).

    The quantization term prices the full-scale rule: with y_fs covering
    the SI peak, per-chain quantization noise is at most
    p_tx * gamma^2 * b_q * max_si^2 * papr_sum.
    """
    budget.validate()
    quant = (budget.p_tx * budget.gamma ** 2 * budget.b_q
             * max_si ** 2 * budget.papr_sum)
    return budget.k_chains * (budget.sigma_thermal_sq + quant)


def snr_bound(budget: NoiseBudget, max_si: float, h_r_energy: float,
              bandwidth_hz: float, zeta: float = 1.0) -> float:
    """Lower bound on per-chain sensing SNR given an SI level.

    h_r_energy is the beamformed radar-channel energy ||h_r||^2 under the
    flat-spectrum convention (bandwidth times the summed squared tap
    moduli of the combined scalar channel).
    """
    budget.validate()
    if bandwidth_hz <= 0.0 or h_r_energy < 0.0:
        raise ValueError("bandwidth must be positive, channel energy >= 0")
    signal = zeta * h_r_energy * budget.p_tx / bandwidth_hz
    noise = (budget.sigma_thermal_sq
             + budget.gamma ** 2 * budget.b_q * max_si ** 2
             * budget.p_tx * budget.papr_sum)
    if noise <= 0.0:
        return np.inf
    return signal / noise


def crlb_range(snr: float, bandwidth_hz: float) -> float:
    """Range-estimation CRLB (meters^2) of a flat-spectrum matched filter."""
    if snr <= 0.0 or bandwidth_hz <= 0.0:
        raise ValueError("snr and bandwidth must be positive")
    ms_bandwidth = bandwidth_hz ** 2 * np.pi ** 2 / 3.0
    return SPEED_OF_LIGHT ** 2 / (4.0 * snr * ms_bandwidth)


def target_si(sigma_star_sq: float, budget: NoiseBudget,
              papr_est: PaprEstimate) -> float:
    """SI target eps meeting a per-chain quantization-noise budget.

    Inverts the quantization term of the noise bound:
    eps = sigma_star / (gamma * sqrt(b_q * p_tx * rho_bar)) with rho_bar
    given by the PAPR estimate's mode.
    """
    budget.validate()
    if sigma_star_sq <= 0.0:
        raise ValueError("noise target must be positive")
    rho_bar = papr_est.effective_sum()
    denom = budget.gamma * np.sqrt(budget.b_q * budget.p_tx * rho_bar)
    if denom == 0.0:
        raise ValueError("degenerate budget: zero TX power or PAPR")
    return float(np.sqrt(sigma_star_sq) / denom)


def beta_for_saturation(p_sat: float, budget: NoiseBudget,
                        grams: SplitGrams, eps: float) -> float:
    """TX/RX split keeping per-RX-antenna peak power below p_sat.

    The TX-side budget eps*beta bounds the per-antenna received peak by
    gamma^2 * p_tx * papr_sum * max_m [g_rx]_mm * eps * beta, so beta is
    chosen to make that equal p_sat.
    """
    budget.validate()
    if p_sat <= 0.0 or eps <= 0.0:
        raise ValueError("p_sat and eps must be positive")
    peak_diag = float(np.max(np.real(np.diag(grams.g_rx))))
    if peak_diag <= 0.0:
        raise ValueError("g_rx has no positive diagonal entry")
    denom = budget.gamma ** 2 * budget.p_tx * budget.papr_sum * peak_diag
    return float(p_sat / denom / eps)
