"""Figure rendering for CLI reports.

Each function draws one figure from already-computed data and writes it to
a file; nothing here recomputes physics. The Agg backend is forced so the
CLI can render headlessly. Figures complement the CSV artifacts (which
remain the machine-readable contract).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .codebook import Codebook, beam_gain_pattern  # noqa: E402
from .ofdm_sim import RangeProfile  # noqa: E402


def plot_range_profiles(profiles: dict[str, RangeProfile], path: str,
                        max_range_m: float = 120.0) -> None:
    """Overlay absolute-scale range profiles of several runs."""
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    for label, prof in profiles.items():
        keep = prof.bins_m <= max_range_m
        absolute = prof.magnitude_db + 10.0 * np.log10(prof.peak_power)
        ax.plot(prof.bins_m[keep], absolute[keep], label=label, linewidth=1.2)
    ax.set_xlabel("range [m]")
    ax.set_ylabel("matched-filter output [dB]")
    ax.set_title("OFDM radar range profiles")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_snr_sweep(rows: list[dict], path: str) -> None:
    """Measured SNR vs. its lower bound, with the implied range CRLB."""
    eps = [r["eps_db"] for r in rows]
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    ax.plot(eps, [r["snr_db"] for r in rows], "o-", label="measured SNR")
    ax.plot(eps, [r["snr_bound_db"] for r in rows], "s--", label="SNR bound")
    ax.set_xlabel("SI target eps [dB]")
    ax.set_ylabel("sensing SNR [dB]")
    ax.grid(True, alpha=0.3)
    ax2 = ax.twinx()
    ax2.semilogy(eps, [r["crlb_sqrt_m"] for r in rows], "d:",
                 color="tab:red", label="sqrt CRLB")
    ax2.set_ylabel("sqrt range CRLB [m]")
    lines, labels = ax.get_legend_handles_labels()
    lines2, labels2 = ax2.get_legend_handles_labels()
    ax.legend(lines + lines2, labels + labels2, loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_tradeoff(rows: list[dict], path: str) -> None:
    """Deviation-vs-SI trade-off curves from a sweep."""
    eps = [r["eps_db"] for r in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.5, 4.0))
    ax1.plot(eps, [r["maxsi_db"] for r in rows], "o-", label="achieved max-SI")
    ax1.plot(eps, eps, "k:", linewidth=1.0, label="eps")
    ax1.set_xlabel("SI target eps [dB]")
    ax1.set_ylabel("max-SI [dB]")
    ax1.grid(True, alpha=0.3)
    ax1.legend()
    ax2.plot(eps, [r["sigma_tx_db"] for r in rows], "o-", label="TX deviation")
    ax2.plot(eps, [r["sigma_rx_db"] for r in rows], "s--", label="RX deviation")
    ax2.set_xlabel("SI target eps [dB]")
    ax2.set_ylabel("codebook deviation [dB]")
    ax2.grid(True, alpha=0.3)
    ax2.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_beam_patterns(codebook: Codebook, reference: Codebook,
                       spacing_wavelengths: float, path: str,
                       columns: list[int] | None = None) -> None:
    """Optimized vs. reference gain patterns for a few codebook columns."""
    azimuths = np.linspace(-90.0, 90.0, 721)
    if columns is None:
        j = codebook.num_beams
        columns = sorted({0, j // 4, j // 2, (3 * j) // 4, j - 1})
    fig, ax = plt.subplots(figsize=(7.5, 4.2))
    for idx, j in enumerate(columns):
        color = f"C{idx}"
        gain = beam_gain_pattern(codebook.entries[:, j], spacing_wavelengths,
                                 azimuths)
        ref = beam_gain_pattern(reference.entries[:, j], spacing_wavelengths,
                                azimuths)
        ax.plot(azimuths, ref, color=color, linestyle=":", linewidth=0.9)
        ax.plot(azimuths, gain, color=color, linewidth=1.2,
                label=f"beam {j}")
    ax.set_ylim(bottom=max(ax.get_ylim()[0], -45.0))
    ax.set_xlabel("azimuth [deg]")
    ax.set_ylabel("gain [dB]")
    ax.set_title("codebook beams (dotted: reference)")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
