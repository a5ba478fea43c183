"""Geometric coupling and radar channel models for a monostatic array pair.

The self-interference (SI) channel between the TX and RX arrays is a
two-path model: a direct near-field coupling tap plus an optional
single-bounce wall reflection built by the image-source method. Every ray
carries a spherical-wave gain wavelength/(4*pi*d) with phase exp(-j*2*pi*
d/wavelength), the relative element rolloff of both endpoints, and a fixed
coupling calibration gain (see SiScenario.coupling_gain_db). The far-field
radar channel toward a point target is a rank-one outer product of steering
vectors scaled by the radar equation, including the 8 dBi element gain on
both sides.

Continuous path taps can be resampled onto a uniform delay grid with a
truncated, energy-normalized windowed-sinc kernel so that the OFDM
simulator can convolve sample streams directly.

Scene frame: x is the common boresight direction, y the array axis,
azimuths are measured from +x toward +y. Both arrays face +x; the RX array
is displaced along +y so their element lines are collinear with a
configurable gap, the usual side-by-side panel layout. Element indices
grow along +y on both panels (matching the steering-vector phase
convention), so for identical arrays the element-pair distance depends
only on the index difference and the direct coupling matrix is Toeplitz.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import speed_of_light as C_LIGHT

from .codebook import ELEMENT_PEAK_GAIN_DB, element_rolloff_db

# Near-field coupling calibration (amplitude dB, applied to every SI ray).
# The spherical-wave + element-rolloff model underestimates the measured
# panel-to-panel coupling of the reference setup by a fixed offset; this
# constant recenters the reference-codebook max-SI at about -57 dB for the
# default 8x8 half-wavelength scene.
DEFAULT_COUPLING_GAIN_DB = 15.2


@dataclass
class UlaGeometry:
    """A uniform linear array placed in the scene plane.

    origin is the position of element 0; the element line runs along
    axis = (-sin b, cos b, 0) for boresight azimuth b, so elements are at
    origin + p*spacing*axis.
    """

    num_elements: int
    spacing_m: float
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))
    boresight_azimuth_deg: float = 0.0

    def element_positions(self) -> np.ndarray:
        b = np.radians(self.boresight_azimuth_deg)
        axis = np.array([-np.sin(b), np.cos(b), 0.0])
        p = np.arange(self.num_elements)[:, None]
        return np.asarray(self.origin, dtype=float)[None, :] + p * self.spacing_m * axis


@dataclass
class SiScenario:
    """Desk-scale monostatic scene shared by the channel builders."""

    carrier_frequency_hz: float
    tx_geometry: UlaGeometry
    rx_geometry: UlaGeometry
    tx_rx_separation_m: float
    wall_distance_m: float = 4.0
    wall_azimuth_deg: float = 65.0
    wall_reflection_coeff: float = 0.7
    element_pattern: bool = True
    coupling_gain_db: float = DEFAULT_COUPLING_GAIN_DB

    @property
    def wavelength_m(self) -> float:
        return C_LIGHT / self.carrier_frequency_hz

    def validate(self) -> None:
        if self.carrier_frequency_hz <= 0:
            raise ValueError("carrier frequency must be positive")
        if self.tx_rx_separation_m <= 0:
            raise ValueError("tx/rx separation must be positive")
        if self.wall_distance_m <= 0:
            raise ValueError("wall distance must be positive")
        if abs(self.wall_reflection_coeff) > 1.0:
            raise ValueError("|wall_reflection_coeff| must be <= 1")


def default_scenario(carrier_frequency_hz: float = 28e9, num_tx: int = 8,
                     num_rx: int = 8, separation_m: float | None = None,
                     spacing_wavelengths: float = 0.5,
                     **overrides) -> SiScenario:
    """Standard side-by-side panel pair at half-wavelength pitch.

    Both panels face +x with their element lines collinear along y; the TX
    panel sits below the RX panel with a gap of half a wavelength between
    the nearest elements unless overridden.
    """
    lam = C_LIGHT / carrier_frequency_hz
    d = lam * spacing_wavelengths
    sep = lam / 2.0 if separation_m is None else separation_m
    tx = UlaGeometry(num_elements=num_tx, spacing_m=d,
                     origin=np.array([0.0, -sep / 2.0 - (num_tx - 1) * d, 0.0]),
                     boresight_azimuth_deg=0.0)
    rx = UlaGeometry(num_elements=num_rx, spacing_m=d,
                     origin=np.array([0.0, +sep / 2.0, 0.0]),
                     boresight_azimuth_deg=0.0)
    scn = SiScenario(carrier_frequency_hz=carrier_frequency_hz,
                     tx_geometry=tx, rx_geometry=rx, tx_rx_separation_m=sep)
    for key, val in overrides.items():
        if not hasattr(scn, key):
            raise ValueError(f"unknown scenario field {key!r}")
        setattr(scn, key, val)
    return scn


@dataclass
class PathTap:
    """One propagation path: a delay plus an RX-by-TX complex gain matrix."""

    delay_s: float
    gain: np.ndarray


@dataclass
class TappedChannel:
    """A list of path taps, optionally resampled onto a uniform grid.

    sample_interval_s is 0 for continuous (unsampled) taps; after
    discretize() it holds the grid step and every delay is an exact
    multiple of it.
    """

    taps: list[PathTap]
    sample_interval_s: float = 0.0

    @property
    def num_rx(self) -> int:
        return self.taps[0].gain.shape[0]

    @property
    def num_tx(self) -> int:
        return self.taps[0].gain.shape[1]

    def gain_list(self) -> list[np.ndarray]:
        return [t.gain for t in self.taps]


def _wrap_deg(a: np.ndarray) -> np.ndarray:
    return (a + 180.0) % 360.0 - 180.0


def _ray_rolloff_amp(vec: np.ndarray, from_boresight_deg: float,
                     to_boresight_deg: float) -> np.ndarray:
    """Amplitude factor for the relative element rolloff at both ray ends.

    vec points from the departing element to the arriving element; the
    arrival direction is the reversed ray.
    """
    az = np.degrees(np.arctan2(vec[..., 1], vec[..., 0]))
    dep = _wrap_deg(az - from_boresight_deg)
    arr = _wrap_deg(az + 180.0 - to_boresight_deg)
    db = element_rolloff_db(dep) + element_rolloff_db(arr)
    return 10.0 ** (db / 20.0)


def build_direct_coupling(scenario: SiScenario) -> PathTap:
    """Near-field spherical-wave coupling tap between the two panels."""
    scenario.validate()
    lam = scenario.wavelength_m
    tx_pos = scenario.tx_geometry.element_positions()
    rx_pos = scenario.rx_geometry.element_positions()
    vec = rx_pos[:, None, :] - tx_pos[None, :, :]
    dist = np.linalg.norm(vec, axis=-1)
    if np.any(dist <= 0.0):
        raise ValueError("coincident TX/RX elements")
    amp = lam / (4.0 * np.pi * dist)
    if scenario.element_pattern:
        amp = amp * _ray_rolloff_amp(vec, scenario.tx_geometry.boresight_azimuth_deg,
                                     scenario.rx_geometry.boresight_azimuth_deg)
    amp = amp * 10.0 ** (scenario.coupling_gain_db / 20.0)
    gain = amp * np.exp(-2j * np.pi * dist / lam)
    return PathTap(delay_s=float(np.mean(dist) / C_LIGHT), gain=gain)


def build_wall_reflection(scenario: SiScenario) -> PathTap:
    """Single-bounce wall tap via the image-source construction.

    The wall is a vertical plane at wall_distance_m from the scene origin,
    with outward normal pointing back toward the arrays from azimuth
    wall_azimuth_deg. Each TX element is mirrored across the plane and the
    image-to-RX distance gives the reflected path length; the tap delay is
    the mean path length over all element pairs divided by c.
    """
    scenario.validate()
    lam = scenario.wavelength_m
    waz = np.radians(scenario.wall_azimuth_deg)
    nrm = np.array([np.cos(waz), np.sin(waz), 0.0])
    tx_pos = scenario.tx_geometry.element_positions()
    rx_pos = scenario.rx_geometry.element_positions()
    # image of each TX element across the wall plane n.x = wall_distance
    proj = tx_pos @ nrm - scenario.wall_distance_m
    img = tx_pos - 2.0 * proj[:, None] * nrm[None, :]
    vec = rx_pos[:, None, :] - img[None, :, :]
    dist = np.linalg.norm(vec, axis=-1)
    amp = abs(scenario.wall_reflection_coeff) * lam / (4.0 * np.pi * dist)
    if scenario.element_pattern:
        # departure/arrival azimuths follow the folded ray via the actual
        # reflection point on the wall
        denom = vec @ nrm
        t = (scenario.wall_distance_m - img @ nrm)[None, :] / denom
        hit = img[None, :, :] + t[..., None] * vec
        dep = hit - tx_pos[None, :, :]
        arr = hit - rx_pos[:, None, :]
        dep_az = np.degrees(np.arctan2(dep[..., 1], dep[..., 0]))
        arr_az = np.degrees(np.arctan2(arr[..., 1], arr[..., 0]))
        db = (element_rolloff_db(_wrap_deg(dep_az - scenario.tx_geometry.boresight_azimuth_deg))
              + element_rolloff_db(_wrap_deg(arr_az - scenario.rx_geometry.boresight_azimuth_deg)))
        amp = amp * 10.0 ** (db / 20.0)
    amp = amp * 10.0 ** (scenario.coupling_gain_db / 20.0)
    phase = np.exp(-2j * np.pi * dist / lam)
    if scenario.wall_reflection_coeff < 0:
        phase = -phase
    return PathTap(delay_s=float(np.mean(dist) / C_LIGHT), gain=amp * phase)


def build_si_channel(scenario: SiScenario, include_wall: bool = True) -> TappedChannel:
    """Direct tap plus optional wall tap, as a continuous tapped channel."""
    taps = [build_direct_coupling(scenario)]
    if include_wall:
        taps.append(build_wall_reflection(scenario))
    taps.sort(key=lambda t: t.delay_s)
    return TappedChannel(taps=taps, sample_interval_s=0.0)


@dataclass
class RadarTarget:
    """Point scatterer in the far field of both arrays."""

    range_m: float
    azimuth_deg: float
    rcs_m2: float

    def validate(self) -> None:
        if self.range_m <= 0:
            raise ValueError("target range must be positive")
        if self.rcs_m2 <= 0:
            raise ValueError("target rcs must be positive")


def build_radar_channel(scenario: SiScenario, target: RadarTarget) -> TappedChannel:
    """Rank-one two-way channel toward a point target.

    Amplitude per element pair follows the radar equation
    sqrt(wavelength^2 * rcs / ((4 pi)^3 R^4)) with the full element gain
    (8 dBi peak plus rolloff) applied at both ends; steering phases come
    from the unit-modulus element responses, so the beamformed echo carries
    the sqrt(M*N) aperture factor. Round-trip delay is 2R/c.
    """
    scenario.validate()
    target.validate()
    lam = scenario.wavelength_m
    m = scenario.rx_geometry.num_elements
    n = scenario.tx_geometry.num_elements
    amp = np.sqrt(lam ** 2 * target.rcs_m2 / ((4.0 * np.pi) ** 3 * target.range_m ** 4))
    az_tx = _wrap_deg(np.array(target.azimuth_deg - scenario.tx_geometry.boresight_azimuth_deg))
    az_rx = _wrap_deg(np.array(target.azimuth_deg - scenario.rx_geometry.boresight_azimuth_deg))
    for az in (az_tx, az_rx):
        amp *= 10.0 ** ((ELEMENT_PEAK_GAIN_DB + element_rolloff_db(az)) / 20.0)
    # unnormalized steering (modulus-1 element responses)
    sp_tx = scenario.tx_geometry.spacing_m / lam
    sp_rx = scenario.rx_geometry.spacing_m / lam
    a = np.exp(-2j * np.pi * np.arange(n) * sp_tx * np.sin(np.radians(float(az_tx))))
    b = np.exp(-2j * np.pi * np.arange(m) * sp_rx * np.sin(np.radians(float(az_rx))))
    delay = 2.0 * target.range_m / C_LIGHT
    gain = amp * np.exp(-2j * np.pi * delay * scenario.carrier_frequency_hz) * np.outer(b, a.conj())
    return TappedChannel(taps=[PathTap(delay_s=delay, gain=gain)],
                         sample_interval_s=0.0)


def discretize(channel: TappedChannel, sample_interval_s: float,
               bandwidth_hz: float, kernel_half_width: int = 16) -> TappedChannel:
    """Resample continuous path taps onto a uniform delay grid.

    Each path is spread over neighboring grid points with a Hann-windowed
    sinc interpolation kernel truncated at kernel_half_width samples and
    renormalized to unit energy, so the energy of every path is preserved
    exactly (a path landing on a grid point stays a single tap). Grid taps
    shared by several paths accumulate. Non-causal kernel samples (negative
    grid index) are dropped.
    """
    if channel.sample_interval_s != 0.0:
        raise ValueError("channel is already sampled")
    if sample_interval_s <= 0:
        raise ValueError("sample interval must be positive")
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth must be positive")
    if bandwidth_hz > 1.0 / sample_interval_s * (1.0 + 1e-12):
        raise ValueError("bandwidth exceeds the grid's Nyquist rate")
    if kernel_half_width < 1:
        raise ValueError("kernel_half_width must be >= 1")

    acc: dict[int, np.ndarray] = {}
    hw = kernel_half_width
    for tap in channel.taps:
        center = tap.delay_s / sample_interval_s
        i0 = int(np.floor(center)) - hw
        i1 = int(np.ceil(center)) + hw
        idx = np.arange(i0, i1 + 1)
        u = idx - center
        kern = np.sinc(u) * np.where(np.abs(u) <= hw,
                                     0.5 * (1.0 + np.cos(np.pi * u / hw)), 0.0)
        kern = kern / np.linalg.norm(kern)
        # drop roundoff dust (sinc at integer u is ~1e-17, not exactly 0)
        # so on-grid paths stay single taps
        kern[np.abs(kern) < 1e-12 * np.abs(kern).max()] = 0.0
        for i, k in zip(idx, kern):
            if i < 0 or k == 0.0:
                continue
            if i in acc:
                acc[i] = acc[i] + k * tap.gain
            else:
                acc[i] = k * tap.gain
    taps = [PathTap(delay_s=i * sample_interval_s, gain=acc[i])
            for i in sorted(acc)]
    return TappedChannel(taps=taps, sample_interval_s=sample_interval_s)


# ---- channel file format ----
#
# Header:  # si-channel v1 M=<int> N=<int> ts=<float-or-0>
# Body:    one line per tap: delay_s, then M*N re:im pairs row-major.

def save_channel(path: str | os.PathLike, channel: TappedChannel) -> None:
    """Write a tapped channel to the plain-text v1 format (atomic replace)."""
    m, n = channel.num_rx, channel.num_tx
    lines = [f"# si-channel v1 M={m} N={n} ts={channel.sample_interval_s:.17g}"]
    for tap in channel.taps:
        vals = [f"{tap.delay_s:.17g}"]
        vals += [f"{v.real:.17g}:{v.imag:.17g}" for v in tap.gain.reshape(-1)]
        lines.append(",".join(vals))
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def load_channel(path: str | os.PathLike) -> TappedChannel:
    """Read a channel written by save_channel."""
    with open(path) as fh:
        header = fh.readline().strip()
        fields = header.split()
        if fields[:2] != ["#", "si-channel"] or fields[2] != "v1":
            raise ValueError(f"not an si-channel v1 file: {header!r}")
        meta = dict(f.split("=", 1) for f in fields[3:])
        m, n = int(meta["M"]), int(meta["N"])
        ts = float(meta["ts"])
        taps = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            vals = line.split(",")
            if len(vals) != 1 + m * n:
                raise ValueError(f"expected {1 + m * n} fields per tap line")
            delay = float(vals[0])
            gain = np.array([complex(float(a), float(b))
                             for a, b in (v.split(":") for v in vals[1:])])
            taps.append(PathTap(delay_s=delay, gain=gain.reshape(m, n)))
    return TappedChannel(taps=taps, sample_interval_s=ts)
