"""Decoupling the TX and RX sides of the self-interference channel.

The worst-case per-pair SI amplitude couples the TX and RX codebooks
through the channel taps. Summing, per tap, the SVD factor products
V S V^H on the TX side and U S U^H on the RX side yields a pair of
positive semidefinite Gram matrices whose quadratic forms bound each
side's contribution independently:

    max_{k,l} sum_i |c_k^H S[i] w_l|
        <= max_k sqrt(c_k^H G_rx c_k) * max_l sqrt(w_l^H G_tx w_l).

This makes the per-column quadratic constraint used by both solvers valid
for the true max-SI. Both Grams carry the same trace, the summed nuclear
norm of the taps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codebook import Codebook

NEGLIGIBLE_TAP_REL = 1e-15


@dataclass
class SplitGrams:
    """PSD Gram pair (g_tx acts on TX columns, g_rx on RX columns)."""

    g_tx: np.ndarray
    g_rx: np.ndarray


def integral_split(taps: list[np.ndarray]) -> SplitGrams:
    """Per-tap SVD split of a tapped channel into a TX/RX Gram pair.

    For each tap S = U diag(s) V^H, accumulates V diag(s) V^H into g_tx and
    U diag(s) U^H into g_rx. Taps whose Frobenius norm is below
    1e-15 times the largest tap norm are skipped. Results are Hermitian by
    construction and re-symmetrized against roundoff.
    """
    if not taps:
        raise ValueError("need at least one tap")
    m, n = taps[0].shape
    norms = [float(np.linalg.norm(s)) for s in taps]
    cutoff = NEGLIGIBLE_TAP_REL * max(norms)
    g_tx = np.zeros((n, n), dtype=complex)
    g_rx = np.zeros((m, m), dtype=complex)
    for s, nrm in zip(taps, norms):
        if s.shape != (m, n):
            raise ValueError("all taps must share the same shape")
        if nrm <= cutoff:
            continue
        u, sv, vh = np.linalg.svd(s, full_matrices=False)
        v = vh.conj().T
        g_tx += (v * sv) @ v.conj().T
        g_rx += (u * sv) @ u.conj().T
    g_tx = 0.5 * (g_tx + g_tx.conj().T)
    g_rx = 0.5 * (g_rx + g_rx.conj().T)
    return SplitGrams(g_tx=g_tx, g_rx=g_rx)


def quadratic_form(g: np.ndarray, z: np.ndarray) -> float:
    """Real, clamped-nonnegative value of z^H G z for PSD G."""
    return max(float(np.real(np.vdot(z, g @ z))), 0.0)


def split_bound(grams: SplitGrams, rx_codebook: Codebook,
                tx_codebook: Codebook) -> float:
    """Decoupled upper bound on max-SI for a codebook pair (amplitude)."""
    c = rx_codebook.entries
    w = tx_codebook.entries
    rx_forms = np.real(np.einsum("pj,pq,qj->j", c.conj(), grams.g_rx, c))
    tx_forms = np.real(np.einsum("pj,pq,qj->j", w.conj(), grams.g_tx, w))
    rx_max = max(float(rx_forms.max()), 0.0)
    tx_max = max(float(tx_forms.max()), 0.0)
    return float(np.sqrt(rx_max) * np.sqrt(tx_max))
