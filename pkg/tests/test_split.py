"""Integral-split Gram pair: trace identity, PSD-ness, and the SI bound."""

from __future__ import annotations

import numpy as np
import pytest

from conftest import rand_unit
from sibeam.codebook import Codebook, Mode
from sibeam.split import (SplitGrams, integral_split, quadratic_form,
                          split_bound)


def _rand_taps(rng, m, n, count):
    return [rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
            for _ in range(count)]


def test_trace_equals_summed_nuclear_norm():
    rng = np.random.default_rng(11)
    for _ in range(20):
        m, n = rng.integers(2, 7, size=2)
        taps = _rand_taps(rng, m, n, int(rng.integers(1, 6)))
        grams = integral_split(taps)
        nuclear = sum(np.linalg.svd(s, compute_uv=False).sum() for s in taps)
        assert np.trace(grams.g_tx).real == pytest.approx(nuclear, rel=1e-12)
        assert np.trace(grams.g_rx).real == pytest.approx(nuclear, rel=1e-12)


def test_grams_are_hermitian_psd():
    rng = np.random.default_rng(12)
    for _ in range(20):
        taps = _rand_taps(rng, 4, 5, 3)
        grams = integral_split(taps)
        for g in (grams.g_tx, grams.g_rx):
            np.testing.assert_allclose(g, g.conj().T, atol=1e-14)
            assert np.linalg.eigvalsh(g).min() >= -1e-12


def test_single_tap_split_matches_svd_factors():
    rng = np.random.default_rng(13)
    s = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    grams = integral_split([s])
    u, sv, vh = np.linalg.svd(s, full_matrices=False)
    v = vh.conj().T
    np.testing.assert_allclose(grams.g_tx, (v * sv) @ v.conj().T, atol=1e-12)
    np.testing.assert_allclose(grams.g_rx, (u * sv) @ u.conj().T, atol=1e-12)


def test_split_bound_dominates_max_si():
    from sibeam.codebook import max_si
    rng = np.random.default_rng(14)
    for _ in range(50):
        m, n = int(rng.integers(2, 6)), int(rng.integers(2, 6))
        taps = _rand_taps(rng, m, n, int(rng.integers(1, 5)))
        grams = integral_split(taps)
        c = np.column_stack([rand_unit(rng, m) for _ in range(4)])
        w = np.column_stack([rand_unit(rng, n) for _ in range(4)])
        rx = Codebook(entries=c, mode=Mode.TAPERED)
        tx = Codebook(entries=w, mode=Mode.TAPERED)
        assert split_bound(grams, rx, tx) - max_si(rx, taps, tx) >= -1e-12


def test_split_bound_tight_for_single_tap_rank_one():
    # one rank-one tap: the bound is exact for the aligned beam pair
    rng = np.random.default_rng(15)
    from sibeam.codebook import max_si
    u = rand_unit(rng, 3)
    v = rand_unit(rng, 4)
    s = 2.0 * np.outer(u, v.conj())
    grams = integral_split([s])
    rx = Codebook(entries=u[:, None], mode=Mode.TAPERED)
    tx = Codebook(entries=v[:, None], mode=Mode.TAPERED)
    bound = split_bound(grams, rx, tx)
    achieved = max_si(rx, [s], tx)
    assert bound == pytest.approx(achieved, rel=1e-12)
    assert bound == pytest.approx(2.0, rel=1e-12)


def test_quadratic_form_clamps_and_matches():
    rng = np.random.default_rng(16)
    g = np.eye(3, dtype=complex)
    z = rand_unit(rng, 3)
    assert quadratic_form(g, z) == pytest.approx(1.0, rel=1e-12)
    tiny = -1e-18 * np.eye(3, dtype=complex)
    assert quadratic_form(tiny, z) == 0.0


def test_integral_split_input_validation():
    with pytest.raises(ValueError):
        integral_split([])
    a = np.ones((2, 2), dtype=complex)
    b = np.ones((3, 2), dtype=complex)
    with pytest.raises(ValueError):
        integral_split([a, b])


def test_negligible_taps_are_skipped():
    rng = np.random.default_rng(17)
    s = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    grams_one = integral_split([s])
    grams_dust = integral_split([s, 1e-17 * s])
    np.testing.assert_allclose(grams_dust.g_tx, grams_one.g_tx, atol=1e-15)


def test_desk_grams_shapes_and_trace(desk):
    grams = desk.grams
    assert grams.g_tx.shape == (8, 8)
    assert grams.g_rx.shape == (8, 8)
    nuclear = sum(np.linalg.svd(s, compute_uv=False).sum()
                  for s in desk.si.gain_list())
    assert np.trace(grams.g_tx).real == pytest.approx(nuclear, rel=1e-12)
