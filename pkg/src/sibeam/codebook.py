"""Beam codebooks for uniform linear arrays.

Provides the two codebook families used by the solvers (unit-norm "tapered"
columns and constant-modulus "phased" columns), the oversampled DFT reference
grid, the self-interference metrics evaluated on codebook pairs, and the
plain-text codebook file format.

Conventions:
  * steering vector entry p is exp(-j*2*pi*(p*spacing/wavelength)*sin(az))
    normalized to unit column norm;
  * amplitude-like quantities are reported as 20*log10, power-like as
    10*log10;
  * the azimuth element rolloff follows the familiar parabolic-in-angle
    shape -min(12*(az/65)^2, 30) dB with an 8 dBi peak element gain that is
    only included where an absolute link budget is needed.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass

import numpy as np

UNIT_NORM_TOL = 1e-9
CONST_MODULUS_TOL = 1e-9

ELEMENT_PEAK_GAIN_DB = 8.0


class Mode(enum.Enum):
    """Column constraint family: unit-norm or constant-modulus entries."""

    TAPERED = "tapered"
    PHASED = "phased"


@dataclass
class Codebook:
    """A bank of beamforming columns for one array side.

    entries: complex array of shape (num_elements, num_beams), one beam per
    column. mode records which constraint family the columns were built
    under; phased codebooks are also valid tapered codebooks since constant
    modulus 1/sqrt(P) implies unit norm.
    """

    entries: np.ndarray
    mode: Mode

    @property
    def num_elements(self) -> int:
        return self.entries.shape[0]

    @property
    def num_beams(self) -> int:
        return self.entries.shape[1]

    def validate(self) -> None:
        """Raise ValueError if the columns violate their mode's constraint."""
        if self.entries.ndim != 2:
            raise ValueError("codebook entries must be a 2-D array")
        norms = np.linalg.norm(self.entries, axis=0)
        if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOL):
            raise ValueError(
                f"column norms deviate from 1 by up to {np.abs(norms - 1.0).max():.3e}"
            )
        if self.mode is Mode.PHASED:
            p = self.entries.shape[0]
            mods = np.abs(self.entries)
            err = np.abs(mods - 1.0 / np.sqrt(p)).max()
            if err > CONST_MODULUS_TOL:
                raise ValueError(
                    f"phased codebook entry moduli deviate from 1/sqrt(P) by {err:.3e}"
                )


def element_rolloff_db(azimuth_deg: np.ndarray | float) -> np.ndarray | float:
    """Relative single-element azimuth rolloff in dB (0 dB at boresight)."""
    az = np.abs(np.asarray(azimuth_deg, dtype=float))
    return -np.minimum(12.0 * (az / 65.0) ** 2, 30.0)


def steering_vector(num_elements: int, spacing_wavelengths: float,
                    azimuth_deg: float) -> np.ndarray:
    """Unit-norm ULA steering vector toward the given azimuth.

    spacing_wavelengths is the element pitch divided by the carrier
    wavelength (0.5 for a half-wavelength array).
    """
    if num_elements < 1:
        raise ValueError("num_elements must be positive")
    p = np.arange(num_elements)
    phase = -2j * np.pi * p * spacing_wavelengths * np.sin(np.radians(azimuth_deg))
    return np.exp(phase) / np.sqrt(num_elements)


def dft_reference(num_elements: int, oversampling: int = 4,
                  sector_deg: float = 120.0, mode: Mode = Mode.PHASED) -> Codebook:
    """Oversampled DFT reference codebook restricted to a sector.

    Beams live on the spatial-frequency grid u = k / (P*oversampling/2); a
    beam is kept when its center angle asin(u) lies inside +/- sector/2.
    Columns are ordered by increasing k. With P = 8, oversampling 4 and a
    120 degree sector this yields 27 beams.
    """
    if num_elements < 1 or oversampling < 1:
        raise ValueError("num_elements and oversampling must be positive")
    if not 0.0 < sector_deg <= 360.0:
        raise ValueError("sector_deg must lie in (0, 360]")
    half = num_elements * oversampling // 2
    p = np.arange(num_elements)
    cols = []
    for k in range(-half, half + 1):
        u = k / half
        if abs(u) > 1.0:
            continue
        if abs(np.degrees(np.arcsin(u))) <= sector_deg / 2.0:
            cols.append(np.exp(-1j * np.pi * p * u) / np.sqrt(num_elements))
    entries = np.column_stack(cols)
    return Codebook(entries=entries, mode=mode)


def beam_center_angles_deg(num_elements: int, oversampling: int = 4,
                           sector_deg: float = 120.0) -> np.ndarray:
    """Beam-center azimuths (degrees) matching dft_reference column order."""
    half = num_elements * oversampling // 2
    angles = []
    for k in range(-half, half + 1):
        u = k / half
        if abs(u) > 1.0:
            continue
        ang = np.degrees(np.arcsin(u))
        if abs(ang) <= sector_deg / 2.0:
            angles.append(ang)
    return np.array(angles)


def max_si(rx_codebook: Codebook, taps: list[np.ndarray],
           tx_codebook: Codebook) -> float:
    """Worst-case per-pair self-interference amplitude sum.

    For the discretized coupling channel this is
    max over (k, l) of sum_i |c_k^H S[i] w_l|,
    the amplitude that bounds the residual SI seen by any RX/TX beam pair.
    Returned in linear amplitude units; convert with 20*log10.
    """
    c = rx_codebook.entries
    w = tx_codebook.entries
    acc = np.zeros((c.shape[1], w.shape[1]))
    for s in taps:
        acc += np.abs(c.conj().T @ s @ w)
    return float(acc.max())


def max_si_pair(rx_codebook: Codebook, taps: list[np.ndarray],
                tx_codebook: Codebook) -> tuple[float, int, int]:
    """max_si together with the (rx, tx) column indices attaining it."""
    c = rx_codebook.entries
    w = tx_codebook.entries
    acc = np.zeros((c.shape[1], w.shape[1]))
    for s in taps:
        acc += np.abs(c.conj().T @ s @ w)
    k, l = np.unravel_index(int(np.argmax(acc)), acc.shape)
    return float(acc[k, l]), int(k), int(l)


def codebook_deviation(codebook: Codebook, reference: Codebook) -> float:
    """Mean squared column distance to the reference codebook.

    (1/J) * sum_j ||cb_j - ref_j||^2, bounded by 4 for unit-norm columns.
    """
    if codebook.entries.shape != reference.entries.shape:
        raise ValueError("codebook and reference shapes differ")
    diff = codebook.entries - reference.entries
    return float(np.mean(np.sum(np.abs(diff) ** 2, axis=0)))


def frobenius_si(rx_codebook: Codebook, taps: list[np.ndarray],
                 tx_codebook: Codebook) -> float:
    """Total beamformed SI energy sum_i ||C^H S[i] W||_F^2 (linear power)."""
    c = rx_codebook.entries
    w = tx_codebook.entries
    total = 0.0
    for s in taps:
        total += float(np.linalg.norm(c.conj().T @ s @ w) ** 2)
    return total


def beam_gain_pattern(column: np.ndarray, spacing_wavelengths: float,
                      azimuths_deg: np.ndarray,
                      element_pattern: bool = True) -> np.ndarray:
    """Far-field power gain of one column over a grid of azimuths, in dB.

    gain(az) = 20*log10 |sqrt(P) a(az)^H w| plus the relative element
    rolloff when element_pattern is set. A DFT beam evaluated at its own
    center reads 10*log10(P).
    """
    column = np.asarray(column)
    p = column.shape[0]
    gains = np.empty(len(azimuths_deg))
    for i, az in enumerate(np.asarray(azimuths_deg, dtype=float)):
        a = steering_vector(p, spacing_wavelengths, az)
        amp = np.sqrt(p) * np.abs(np.vdot(a, column))
        gains[i] = 20.0 * np.log10(max(amp, 1e-300))
    if element_pattern:
        gains = gains + element_rolloff_db(np.asarray(azimuths_deg, dtype=float))
    return gains


# ---- codebook file format ----
#
# Header:  # codebook v1 P=<int> J=<int> mode=<tapered|phased>
# Body:    P lines, each with J comma-separated re:im pairs (row-major over
#          elements), at least 15 significant digits.

def save_codebook(path: str | os.PathLike, codebook: Codebook) -> None:
    """Write a codebook to the plain-text v1 format (atomic replace)."""
    p, j = codebook.entries.shape
    lines = [f"# codebook v1 P={p} J={j} mode={codebook.mode.value}"]
    for row in codebook.entries:
        lines.append(",".join(f"{v.real:.17g}:{v.imag:.17g}" for v in row))
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def load_codebook(path: str | os.PathLike) -> Codebook:
    """Read a codebook written by save_codebook."""
    with open(path) as fh:
        header = fh.readline().strip()
        fields = header.split()
        if fields[:3] != ["#", "codebook", "v1"]:
            raise ValueError(f"not a codebook v1 file: {header!r}")
        meta = dict(f.split("=", 1) for f in fields[3:])
        p, j = int(meta["P"]), int(meta["J"])
        mode = Mode(meta["mode"])
        rows = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            pairs = line.split(",")
            if len(pairs) != j:
                raise ValueError(f"expected {j} entries per row, got {len(pairs)}")
            rows.append([complex(float(a), float(b))
                         for a, b in (pair.split(":") for pair in pairs)])
        if len(rows) != p:
            raise ValueError(f"expected {p} rows, got {len(rows)}")
    return Codebook(entries=np.array(rows, dtype=complex), mode=mode)
