"""Geometry, calibration, discretization, and file-format tests."""

from __future__ import annotations

import numpy as np
import pytest
from scipy.constants import speed_of_light as C_LIGHT

from sibeam.channel import (PathTap, RadarTarget, TappedChannel, UlaGeometry,
                            build_direct_coupling, build_radar_channel,
                            build_si_channel, build_wall_reflection,
                            default_scenario, discretize, load_channel,
                            save_channel)
from sibeam.codebook import Mode, dft_reference, max_si, steering_vector


def test_ula_positions_pitch_and_axis():
    geo = UlaGeometry(num_elements=4, spacing_m=0.01,
                      origin=np.array([1.0, 2.0, 0.0]))
    pos = geo.element_positions()
    assert pos.shape == (4, 3)
    np.testing.assert_allclose(pos[0], [1.0, 2.0, 0.0])
    steps = np.diff(pos, axis=0)
    np.testing.assert_allclose(steps, [[0.0, 0.01, 0.0]] * 3, atol=1e-15)


def test_default_scenario_layout():
    scn = default_scenario()
    lam = scn.wavelength_m
    tx = scn.tx_geometry.element_positions()
    rx = scn.rx_geometry.element_positions()
    # half-wavelength pitch, collinear along y, gap of half a wavelength
    np.testing.assert_allclose(np.diff(tx[:, 1]), lam / 2.0)
    np.testing.assert_allclose(tx[:, 0], 0.0)
    np.testing.assert_allclose(rx[:, 0], 0.0)
    gap = rx[0, 1] - tx[-1, 1]
    assert gap == pytest.approx(lam / 2.0)
    assert scn.tx_rx_separation_m == pytest.approx(lam / 2.0)


def test_default_scenario_spacing_and_separation_overrides():
    scn = default_scenario(spacing_wavelengths=0.7, separation_m=0.05)
    lam = scn.wavelength_m
    tx = scn.tx_geometry.element_positions()
    np.testing.assert_allclose(np.diff(tx[:, 1]), 0.7 * lam)
    assert scn.tx_rx_separation_m == pytest.approx(0.05)
    with pytest.raises(ValueError):
        default_scenario(no_such_field=1.0)


def test_direct_coupling_is_toeplitz():
    # identical collinear panels: pair distance depends only on the index
    # difference, so every diagonal of the coupling matrix is constant
    scn = default_scenario(element_pattern=False)
    s = build_direct_coupling(scn).gain
    for k in range(-scn.rx_geometry.num_elements + 1,
                   scn.tx_geometry.num_elements):
        diag = np.diag(s, k)
        np.testing.assert_allclose(diag, diag[0], rtol=1e-12)
    # reversing the TX index folds the structure into a symmetric matrix
    np.testing.assert_allclose(s[:, ::-1], s[:, ::-1].T, rtol=1e-12)


def test_direct_coupling_amplitude_follows_spherical_spreading():
    scn = default_scenario(element_pattern=False, coupling_gain_db=0.0)
    s = build_direct_coupling(scn).gain
    tx = scn.tx_geometry.element_positions()
    rx = scn.rx_geometry.element_positions()
    dist = np.linalg.norm(rx[:, None, :] - tx[None, :, :], axis=-1)
    np.testing.assert_allclose(np.abs(s),
                               scn.wavelength_m / (4.0 * np.pi * dist),
                               rtol=1e-12)
    # phase advances with distance
    np.testing.assert_allclose(
        np.angle(s * np.exp(2j * np.pi * dist / scn.wavelength_m)), 0.0,
        atol=1e-9)


def test_direct_coupling_not_rank_one():
    # near-field: the coupling matrix must keep significant trailing
    # singular values, otherwise a single null would remove all SI
    scn = default_scenario()
    s = build_direct_coupling(scn).gain
    sv = np.linalg.svd(s, compute_uv=False)
    assert sv[1] / sv[0] > 0.05


def test_wall_reflection_longer_delay_and_weaker():
    scn = default_scenario()
    direct = build_direct_coupling(scn)
    wall = build_wall_reflection(scn)
    assert wall.delay_s > direct.delay_s
    assert np.linalg.norm(wall.gain) < np.linalg.norm(direct.gain)
    # wall twice as far -> roughly twice the excess delay
    far = default_scenario(wall_distance_m=8.0)
    wall_far = build_wall_reflection(far)
    assert wall_far.delay_s > wall.delay_s


def test_wall_reflection_coefficient_scales_amplitude():
    weak = default_scenario(wall_reflection_coeff=0.35)
    strong = default_scenario(wall_reflection_coeff=0.7)
    g_weak = build_wall_reflection(weak).gain
    g_strong = build_wall_reflection(strong).gain
    np.testing.assert_allclose(g_strong, 2.0 * g_weak, rtol=1e-12)


def test_si_channel_tap_counts():
    scn = default_scenario()
    assert len(build_si_channel(scn, include_wall=True).taps) == 2
    assert len(build_si_channel(scn, include_wall=False).taps) == 1


def test_reference_max_si_calibration(desk):
    """Reference-codebook max-SI of the default scene, in dB."""
    ref = dft_reference(8, 4, 120.0, Mode.TAPERED)
    multi = 20.0 * np.log10(max_si(ref, desk.si.gain_list(), ref))
    single = 20.0 * np.log10(max_si(ref, desk.si_single.gain_list(), ref))
    assert abs(multi - (-54.5)) <= 5.0
    assert abs(single - (-60.6)) <= 5.0


def test_radar_channel_delay_and_scaling():
    scn = default_scenario()
    t1 = RadarTarget(range_m=40.0, azimuth_deg=-39.0, rcs_m2=1.0)
    ch1 = build_radar_channel(scn, t1)
    assert len(ch1.taps) == 1
    assert ch1.taps[0].delay_s == pytest.approx(2.0 * 40.0 / C_LIGHT)
    # amplitude ~ sqrt(rcs), ~ 1/R^2
    ch_rcs = build_radar_channel(
        scn, RadarTarget(range_m=40.0, azimuth_deg=-39.0, rcs_m2=4.0))
    np.testing.assert_allclose(np.abs(ch_rcs.taps[0].gain),
                               2.0 * np.abs(ch1.taps[0].gain), rtol=1e-12)
    ch_far = build_radar_channel(
        scn, RadarTarget(range_m=80.0, azimuth_deg=-39.0, rcs_m2=1.0))
    ratio = np.abs(ch1.taps[0].gain) / np.abs(ch_far.taps[0].gain)
    np.testing.assert_allclose(ratio, 4.0, rtol=1e-12)


def test_radar_channel_is_rank_one_and_beam_aligned():
    scn = default_scenario()
    target = RadarTarget(range_m=40.0, azimuth_deg=-25.0, rcs_m2=1.0)
    gain = build_radar_channel(scn, target).taps[0].gain
    sv = np.linalg.svd(gain, compute_uv=False)
    assert sv[1] / sv[0] < 1e-12
    # beamforming both sides toward the target captures the full
    # sqrt(M*N) aperture product
    w = steering_vector(8, 0.5, -25.0)
    c = steering_vector(8, 0.5, -25.0)
    combined = abs(np.vdot(c, gain @ w))
    assert combined == pytest.approx(np.sqrt(8 * 8) * np.abs(gain[0, 0]),
                                     rel=1e-9)


def test_discretize_preserves_energy_and_grid():
    scn = default_scenario()
    cont = build_si_channel(scn, include_wall=True)
    ts = 1.0 / (512 * 120e3)
    samp = discretize(cont, ts, 256 * 120e3)
    for tap in samp.taps:
        k = tap.delay_s / ts
        assert abs(k - round(k)) < 1e-9
    e_cont = sum(np.linalg.norm(t.gain) ** 2 for t in cont.taps)
    e_samp = sum(np.linalg.norm(t.gain) ** 2 for t in samp.taps)
    # unit-energy kernel: total energy preserved up to cross terms and
    # the dropped non-causal samples
    assert abs(e_samp - e_cont) / e_cont < 0.01


def test_discretize_on_grid_path_stays_single_tap():
    ts = 1e-8
    gain = np.ones((2, 2), dtype=complex)
    cont = TappedChannel(taps=[PathTap(delay_s=7 * ts, gain=gain)])
    samp = discretize(cont, ts, 0.5 / ts)
    assert len(samp.taps) == 1
    assert samp.taps[0].delay_s == pytest.approx(7 * ts)
    np.testing.assert_allclose(samp.taps[0].gain, gain, rtol=1e-12)


def test_discretize_rejects_super_nyquist_bandwidth():
    cont = TappedChannel(taps=[PathTap(delay_s=1e-8,
                                       gain=np.ones((1, 1), dtype=complex))])
    with pytest.raises(ValueError):
        discretize(cont, 1e-8, 2.0e8)


def test_discretize_rejects_resampling():
    cont = TappedChannel(taps=[PathTap(delay_s=1e-8,
                                       gain=np.ones((1, 1), dtype=complex))])
    samp = discretize(cont, 1e-8, 5e7)
    with pytest.raises(ValueError):
        discretize(samp, 1e-8, 5e7)


def test_channel_file_roundtrip(tmp_path):
    rng = np.random.default_rng(7)
    taps = [PathTap(delay_s=float(d),
                    gain=rng.standard_normal((3, 2))
                    + 1j * rng.standard_normal((3, 2)))
            for d in (1.25e-9, 3.5e-9, 9.75e-9)]
    ch = TappedChannel(taps=taps, sample_interval_s=0.0)
    path = tmp_path / "chan.txt"
    save_channel(path, ch)
    back = load_channel(path)
    assert back.sample_interval_s == 0.0
    assert len(back.taps) == 3
    for a, b in zip(ch.taps, back.taps):
        assert a.delay_s == b.delay_s          # %.17g is exact for float64
        np.testing.assert_array_equal(a.gain, b.gain)


def test_channel_file_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("# something else\n")
    with pytest.raises(ValueError):
        load_channel(path)


def test_channel_file_rejects_short_row(tmp_path):
    path = tmp_path / "short.txt"
    path.write_text("# si-channel v1 M=2 N=2 ts=0\n"
                    "1e-9,1:0,2:0\n")
    with pytest.raises(ValueError):
        load_channel(path)
