"""End-to-end CLI runs: artifacts, exit codes, determinism."""

from __future__ import annotations

import os
import re

import numpy as np
import pytest

from sibeam import cli
from sibeam.channel import load_channel
from sibeam.codebook import load_codebook, max_si

FAST_CFG = """
[scenario]
num_tx = 4
num_rx = 4

[ofdm]
num_subcarriers = 64
fft_size = 128
cyclic_prefix_samples = 9
modulation_order = 4
num_symbols = 3

[budget]
papr_draws = 20

[solver]
eps_db = -80

[sweep]
eps_db = -60, -75, -90
"""


@pytest.fixture
def fast_cfg(tmp_path):
    p = tmp_path / "fast.cfg"
    p.write_text(FAST_CFG)
    return str(p)


def run(args: list[str]) -> int:
    return cli.main(args)


def test_channel_command_artifacts(fast_cfg, tmp_path):
    out = str(tmp_path / "out")
    assert run(["--config", fast_cfg, "--out", out, "channel"]) == 0
    for name in ("si_channel.txt", "radar_channel.txt"):
        assert os.path.getsize(os.path.join(out, name)) > 0
    chan = load_channel(os.path.join(out, "si_channel.txt"))
    assert chan.num_rx == 4 and chan.num_tx == 4


def test_optimize_command_artifacts_and_roundtrip(fast_cfg, tmp_path, capsys):
    out = str(tmp_path / "out")
    assert run(["--config", fast_cfg, "--out", out, "channel"]) == 0
    assert run(["--config", fast_cfg, "--out", out, "optimize"]) == 0
    for name in ("codebook_tx.txt", "codebook_rx.txt", "report.csv",
                 "codebook_tx.png", "codebook_rx.png"):
        assert os.path.getsize(os.path.join(out, name)) > 0

    printed = capsys.readouterr().out
    match = re.search(r"achieved max-SI: (-?\d+\.\d+) dB", printed)
    assert match is not None
    printed_db = float(match.group(1))

    # recompute from the saved artifacts alone
    si = load_channel(os.path.join(out, "si_channel.txt"))
    tx = load_codebook(os.path.join(out, "codebook_tx.txt"))
    rx = load_codebook(os.path.join(out, "codebook_rx.txt"))
    recomputed = max_si(rx, si.gain_list(), tx)
    assert 10.0 ** (printed_db / 20.0) == pytest.approx(recomputed, rel=1e-9)

    # report rows cover both codebooks
    with open(os.path.join(out, "report.csv")) as fh:
        lines = fh.read().strip().split("\n")
    assert lines[0] == "side,column,objective,nu_star_or_upsilon,si_value,case"
    sides = [ln.split(",")[0] for ln in lines[1:]]
    assert sides.count("tx") == tx.num_beams
    assert sides.count("rx") == rx.num_beams


def test_sweep_command(fast_cfg, tmp_path):
    out = str(tmp_path / "out")
    assert run(["--config", fast_cfg, "--out", out, "sweep"]) == 0
    with open(os.path.join(out, "tradeoff.csv")) as fh:
        lines = fh.read().strip().split("\n")
    assert lines[0] == ("eps_db,maxsi_db,sigma_tx_db,sigma_rx_db,"
                        "frobenius_si_db,runtime_ms")
    assert len(lines) == 1 + 3
    eps_col = [float(ln.split(",")[0]) for ln in lines[1:]]
    maxsi = [float(ln.split(",")[1]) for ln in lines[1:]]
    assert eps_col == [-90.0, -75.0, -60.0]     # written in ascending order
    assert all(m <= e + 1e-9 for e, m in zip(eps_col, maxsi))
    assert os.path.getsize(os.path.join(out, "tradeoff.png")) > 0


def test_sense_command(fast_cfg, tmp_path):
    out = str(tmp_path / "out")
    assert run(["--config", fast_cfg, "--out", out, "sense"]) == 0
    for name in ("profile_reference.csv", "profile_optimized.csv",
                 "snr_sweep.csv", "profiles.png", "snr_sweep.png"):
        assert os.path.getsize(os.path.join(out, name)) > 0
    with open(os.path.join(out, "profile_optimized.csv")) as fh:
        lines = fh.read().strip().split("\n")
    assert lines[0] == "range_m,mag_db"
    assert len(lines) == 1 + 128          # fft bins
    with open(os.path.join(out, "snr_sweep.csv")) as fh:
        lines = fh.read().strip().split("\n")
    assert lines[0] == "eps_db,snr_db,snr_bound_db,crlb_sqrt_m"
    assert len(lines) == 1 + 3


def test_budget_command(fast_cfg, tmp_path, capsys):
    out = str(tmp_path / "out")
    assert run(["--config", fast_cfg, "--out", out, "budget"]) == 0
    printed = capsys.readouterr().out
    assert "b_Q" in printed
    assert "eps" in printed


def test_exit_code_config_errors(tmp_path):
    assert run(["--config", str(tmp_path / "missing.cfg"), "budget"]) == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("[solver]\nwarp_speed = 11\n")
    assert run(["--config", str(bad), "budget"]) == 2


def test_exit_code_rejects_bad_usage(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_exit_code_infeasible_tapered(fast_cfg, tmp_path, capsys):
    out = str(tmp_path / "out")
    code = run(["--config", fast_cfg, "--out", out, "--eps-db", "-300",
                "optimize"])
    assert code == 3
    err = capsys.readouterr().err
    assert "sigma_bar" in err


def test_exit_code_phased_no_convergence(fast_cfg, tmp_path):
    cfg = tmp_path / "slow.cfg"
    cfg.write_text(FAST_CFG.replace("eps_db = -80",
                                    "eps_db = -80\nmax_iter = 40"))
    out = str(tmp_path / "out")
    code = run(["--config", str(cfg), "--out", out, "--solver", "phased",
                "--eps-db", "-70", "optimize"])
    assert code == 4


def test_optimize_deterministic(fast_cfg, tmp_path):
    outs = []
    for sub in ("a", "b"):
        out = str(tmp_path / sub)
        assert run(["--config", fast_cfg, "--out", out, "optimize"]) == 0
        outs.append(out)
    for name in ("codebook_tx.txt", "codebook_rx.txt", "report.csv"):
        with open(os.path.join(outs[0], name), "rb") as fh:
            first = fh.read()
        with open(os.path.join(outs[1], name), "rb") as fh:
            second = fh.read()
        assert first == second, name


def test_sense_deterministic(fast_cfg, tmp_path):
    outs = []
    for sub in ("a", "b"):
        out = str(tmp_path / sub)
        assert run(["--config", fast_cfg, "--out", out, "--seed", "11",
                    "sense"]) == 0
        outs.append(out)
    for name in ("profile_reference.csv", "profile_optimized.csv",
                 "snr_sweep.csv"):
        with open(os.path.join(outs[0], name), "rb") as fh:
            first = fh.read()
        with open(os.path.join(outs[1], name), "rb") as fh:
            second = fh.read()
        assert first == second, name


def test_no_clutter_flag_changes_channel(fast_cfg, tmp_path):
    out_w = str(tmp_path / "wall")
    out_n = str(tmp_path / "nowall")
    assert run(["--config", fast_cfg, "--out", out_w, "channel"]) == 0
    assert run(["--config", fast_cfg, "--out", out_n, "--no-clutter",
                "channel"]) == 0
    with_wall = load_channel(os.path.join(out_w, "si_channel.txt"))
    without = load_channel(os.path.join(out_n, "si_channel.txt"))
    assert len(with_wall.taps) > len(without.taps)
