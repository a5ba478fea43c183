"""Shared fixtures: the desk-scale scenario and random-instance helpers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pytest

from sibeam.channel import (TappedChannel, build_radar_channel,
                            build_si_channel, discretize)
from sibeam.config import RunConfig
from sibeam.ofdm_sim import OfdmConfig
from sibeam.split import SplitGrams, integral_split


def rand_psd(rng: np.random.Generator, p: int, rank: int | None = None,
             scale: float = 1.0) -> np.ndarray:
    """Random Hermitian PSD matrix with controlled rank."""
    rank = p if rank is None else rank
    a = (rng.standard_normal((p, rank))
         + 1j * rng.standard_normal((p, rank))) / np.sqrt(2.0)
    g = a @ a.conj().T * scale
    return 0.5 * (g + g.conj().T)


def rand_unit(rng: np.random.Generator, p: int) -> np.ndarray:
    """Random complex unit vector."""
    v = rng.standard_normal(p) + 1j * rng.standard_normal(p)
    return v / np.linalg.norm(v)


def rand_phased(rng: np.random.Generator, p: int) -> np.ndarray:
    """Random constant-modulus vector with entries 1/sqrt(p)."""
    return np.exp(2j * np.pi * rng.random(p)) / np.sqrt(p)


@dataclass
class DeskSetup:
    """Everything the desk-scale pipeline tests need, built once."""

    cfg: RunConfig
    ofdm: OfdmConfig
    si: TappedChannel
    si_single: TappedChannel
    radar: TappedChannel
    grams: SplitGrams
    grams_single: SplitGrams


@pytest.fixture(scope="session")
def desk() -> DeskSetup:
    cfg = RunConfig()
    cfg.validate()
    ofdm = cfg.build_ofdm()
    scenario = cfg.build_scenario()
    si = discretize(build_si_channel(scenario, include_wall=True),
                    ofdm.sample_interval_s, ofdm.bandwidth_hz)
    si_single = discretize(build_si_channel(scenario, include_wall=False),
                           ofdm.sample_interval_s, ofdm.bandwidth_hz)
    radar = discretize(build_radar_channel(scenario, cfg.build_target()),
                       ofdm.sample_interval_s, ofdm.bandwidth_hz)
    return DeskSetup(cfg=cfg, ofdm=ofdm, si=si, si_single=si_single,
                     radar=radar, grams=integral_split(si.gain_list()),
                     grams_single=integral_split(si_single.gain_list()))
