"""Command-line front end wiring channel -> split -> solve -> simulate.

Five subcommands cover the pipeline at desk scale:

  channel    build and write the SI + radar channel files
  optimize   solve both codebooks at one SI target and report per column
  sweep      trade-off curve (max-SI, deviations) across SI targets
  sense      quantized OFDM radar runs, range profiles, and an SNR sweep
  budget     print the SI target implied by a noise budget and the
             saturation-safe TX/RX split

All dB <-> linear conversion happens at this boundary; library code works
in linear units. CSV artifacts are written atomically (temp file + rename)
with a fixed float format so runs with the same seed are byte-identical;
each CSV-producing command also renders a matching PNG figure. Exit codes:
0 success, 2 configuration or I/O error, 3 infeasible SI target,
4 solver non-convergence.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
import time

import numpy as np

from .budget import (NoiseBudget, PaprEstimate, beta_for_saturation,
                     crlb_range, full_scale, papr, snr_bound, target_si)
from .channel import (TappedChannel, build_radar_channel, build_si_channel,
                      discretize, save_channel)
from .codebook import (Codebook, Mode, beam_center_angles_deg,
                       codebook_deviation, dft_reference, frobenius_si,
                       max_si, save_codebook)
from .config import ConfigError, RunConfig, load_config
from .ofdm_sim import (OfdmConfig, QuantizerConfig, beamformed_fir,
                       cancel_known_si, convolve_stream,
                       estimate_average_papr, gen_ofdm, measure_snr,
                       range_profile, receive)
from .plots import (plot_beam_patterns, plot_range_profiles, plot_snr_sweep,
                    plot_tradeoff)
from .sdp import PhasedSolveError, optimize_codebooks_phased
from .split import SplitGrams, integral_split, split_bound
from .tapered import InfeasibleColumnError, optimize_codebooks_tapered

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NO_CONVERGENCE = 4

CSV_FLOAT_FORMAT = "%.9g"
DEVIATION_DB_FLOOR = 1e-30      # keeps 10*log10 finite for exact copies


# --------------------------------------------------------------------------
# small utilities
# --------------------------------------------------------------------------

def _db_amp(value: float) -> float:
    """Amplitude-like quantity to dB (20 log10), floored to stay finite."""
    return 20.0 * np.log10(max(float(value), 1e-300))


def _db_pow(value: float) -> float:
    """Power-like quantity to dB (10 log10), floored to stay finite."""
    return 10.0 * np.log10(max(float(value), 1e-300))


def _atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    """Write rows of numbers/strings as CSV with a fixed float format."""
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for value in row:
            if isinstance(value, str):
                cells.append(value)
            elif isinstance(value, (int, np.integer)):
                cells.append(str(int(value)))
            else:
                cells.append(CSV_FLOAT_FORMAT % float(value))
        lines.append(",".join(cells))
    _atomic_write_text(path, "\n".join(lines) + "\n")


# --------------------------------------------------------------------------
# pipeline pieces shared by the subcommands
# --------------------------------------------------------------------------

def _build_channels(cfg: RunConfig) -> tuple[OfdmConfig, TappedChannel,
                                             TappedChannel]:
    """Discretized SI and radar channels on the configured OFDM grid."""
    scenario = cfg.build_scenario()
    ofdm = cfg.build_ofdm()
    si = discretize(build_si_channel(scenario, include_wall=cfg.include_wall),
                    ofdm.sample_interval_s, ofdm.bandwidth_hz)
    radar = discretize(build_radar_channel(scenario, cfg.build_target()),
                       ofdm.sample_interval_s, ofdm.bandwidth_hz)
    return ofdm, si, radar


def _references(cfg: RunConfig) -> tuple[Codebook, Codebook]:
    mode = Mode.PHASED if cfg.solver == "phased" else Mode.TAPERED
    ref_rx = dft_reference(cfg.num_rx, cfg.oversampling, cfg.sector_deg, mode)
    ref_tx = dft_reference(cfg.num_tx, cfg.oversampling, cfg.sector_deg, mode)
    return ref_rx, ref_tx


def _optimize(cfg: RunConfig, grams: SplitGrams, ref_rx: Codebook,
              ref_tx: Codebook, eps: float | None = None
              ) -> tuple[Codebook, Codebook, dict[str, list]]:
    eps = cfg.eps_linear if eps is None else eps
    if cfg.solver == "phased":
        return optimize_codebooks_phased(ref_rx, ref_tx, grams, eps,
                                         beta=cfg.beta,
                                         tolerance=cfg.tolerance,
                                         max_iter=cfg.max_iter)
    return optimize_codebooks_tapered(ref_rx, ref_tx, grams, eps,
                                      beta=cfg.beta)


def _target_beams(cfg: RunConfig) -> tuple[int, int]:
    """Reference-codebook column indices pointing closest to the target."""
    rx_centers = beam_center_angles_deg(cfg.num_rx, cfg.oversampling,
                                        cfg.sector_deg)
    tx_centers = beam_center_angles_deg(cfg.num_tx, cfg.oversampling,
                                        cfg.sector_deg)
    jrx = int(np.argmin(np.abs(rx_centers - cfg.target_azimuth_deg)))
    jtx = int(np.argmin(np.abs(tx_centers - cfg.target_azimuth_deg)))
    return jrx, jtx


def _papr_estimate(cfg: RunConfig, ofdm: OfdmConfig,
                   stream: np.ndarray) -> PaprEstimate:
    """PAPR summary per the configured accounting mode."""
    if cfg.papr_mode == "matched":
        return PaprEstimate.matched(papr(stream))
    mean_est = estimate_average_papr(ofdm, cfg.papr_draws)
    if cfg.papr_mode == "average":
        return mean_est
    return PaprEstimate.quantile(mean_est.value, cfg.papr_alpha)


def _noise_budget(cfg: RunConfig, est: PaprEstimate) -> NoiseBudget:
    return NoiseBudget(adc_bits=cfg.adc_bits, gamma=cfg.gamma,
                       p_tx=cfg.tx_power_w, papr_sum=est.effective_sum(),
                       sigma_thermal_sq=cfg.thermal_noise_w)


def _simulate_pair(cfg: RunConfig, ofdm: OfdmConfig, stream: np.ndarray,
                   si: TappedChannel, radar: TappedChannel,
                   rx_beam: np.ndarray, tx_beam: np.ndarray) -> dict:
    """One quantized receive run for a beam pair; full scale from a dry run.

    Returns the SI-only clean stream, total clean stream, noisy ADC output,
    measured sensing SNR, and the full scale actually applied.
    """
    si_fir = beamformed_fir(si, rx_beam, tx_beam)
    si_clean = convolve_stream(stream, si_fir)
    y_fs = full_scale(si_clean, cfg.gamma)
    quant = QuantizerConfig(bits=cfg.adc_bits, full_scale=y_fs)
    clean_total, noisy = receive(stream, si, radar, rx_beam, tx_beam,
                                 cfg.thermal_noise_w, quant,
                                 rng_seed=cfg.seed)
    echo_clean = clean_total - si_clean
    return {
        "si_clean": si_clean,
        "clean_total": clean_total,
        "noisy": noisy,
        "echo_clean": echo_clean,
        "snr": measure_snr(echo_clean, noisy, clean_total),
        "full_scale": y_fs,
    }


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_channel(cfg: RunConfig, out_dir: str) -> int:
    ofdm, si, radar = _build_channels(cfg)
    si_path = os.path.join(out_dir, "si_channel.txt")
    radar_path = os.path.join(out_dir, "radar_channel.txt")
    save_channel(si_path, si)
    save_channel(radar_path, radar)
    ref_rx, ref_tx = _references(cfg)
    ref_maxsi = max_si(ref_rx, si.gain_list(), ref_tx)
    print(f"wrote {si_path} ({len(si.taps)} taps, "
          f"T_s = {ofdm.sample_interval_s * 1e9:.3f} ns)")
    print(f"wrote {radar_path} ({len(radar.taps)} taps)")
    print(f"reference codebook max-SI: {_db_amp(ref_maxsi):.10f} dB "
          f"({ref_rx.num_beams} rx x {ref_tx.num_beams} tx beams, "
          f"wall {'included' if cfg.include_wall else 'excluded'})")
    return EXIT_OK


def cmd_optimize(cfg: RunConfig, out_dir: str) -> int:
    ofdm, si, radar = _build_channels(cfg)
    del ofdm, radar
    grams = integral_split(si.gain_list())
    ref_rx, ref_tx = _references(cfg)
    rx_cb, tx_cb, reports = _optimize(cfg, grams, ref_rx, ref_tx)

    tx_path = os.path.join(out_dir, "codebook_tx.txt")
    rx_path = os.path.join(out_dir, "codebook_rx.txt")
    save_codebook(tx_path, tx_cb)
    save_codebook(rx_path, rx_cb)

    rows: list[list] = []
    for side in ("tx", "rx"):
        for j, rep in enumerate(reports[side]):
            if cfg.solver == "phased":
                diag = rep.upsilon
                case = rep.status + ("+projected" if rep.projected else "")
            else:
                diag = rep.nu_star
                case = rep.case
            rows.append([side, j, rep.objective, diag, rep.si_value, case])
    report_path = os.path.join(out_dir, "report.csv")
    _write_csv(report_path,
               ["side", "column", "objective", "nu_star_or_upsilon",
                "si_value", "case"], rows)

    achieved = max_si(rx_cb, si.gain_list(), tx_cb)
    bound = split_bound(grams, rx_cb, tx_cb)
    dev_tx = codebook_deviation(tx_cb, ref_tx)
    dev_rx = codebook_deviation(rx_cb, ref_rx)
    achieved_db = _db_amp(achieved)
    print(f"solver: {cfg.solver}, eps: {cfg.eps_db:.2f} dB, "
          f"beta: {cfg.beta:.6g}")
    print(f"achieved max-SI: {achieved_db:.10f} dB "
          f"(split bound {_db_amp(bound):.4f} dB)")
    print(f"SI gap (eps - max-SI): {cfg.eps_db - achieved_db:.4f} dB")
    print(f"codebook deviation: tx {dev_tx:.10f}, rx {dev_rx:.10f}")

    for name, cb, ref in (("tx", tx_cb, ref_tx), ("rx", rx_cb, ref_rx)):
        fig_path = os.path.join(out_dir, f"codebook_{name}.png")
        plot_beam_patterns(cb, ref, cfg.element_spacing_wavelengths, fig_path)
        print(f"wrote {fig_path}")
    print(f"wrote {tx_path}")
    print(f"wrote {rx_path}")
    print(f"wrote {report_path}")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, out_dir: str) -> int:
    ofdm, si, radar = _build_channels(cfg)
    del ofdm, radar
    grams = integral_split(si.gain_list())
    ref_rx, ref_tx = _references(cfg)

    rows: list[list] = []
    plot_rows: list[dict] = []
    for eps_db in sorted(cfg.sweep_eps_db):
        eps = 10.0 ** (eps_db / 20.0)
        start = time.perf_counter()
        rx_cb, tx_cb, _ = _optimize(cfg, grams, ref_rx, ref_tx, eps=eps)
        runtime_ms = (time.perf_counter() - start) * 1e3
        entry = {
            "eps_db": eps_db,
            "maxsi_db": _db_amp(max_si(rx_cb, si.gain_list(), tx_cb)),
            "sigma_tx_db": _db_pow(max(codebook_deviation(tx_cb, ref_tx),
                                       DEVIATION_DB_FLOOR)),
            "sigma_rx_db": _db_pow(max(codebook_deviation(rx_cb, ref_rx),
                                       DEVIATION_DB_FLOOR)),
            "frobenius_si_db": _db_pow(frobenius_si(rx_cb, si.gain_list(),
                                                    tx_cb)),
            "runtime_ms": runtime_ms,
        }
        plot_rows.append(entry)
        rows.append([entry["eps_db"], entry["maxsi_db"], entry["sigma_tx_db"],
                     entry["sigma_rx_db"], entry["frobenius_si_db"],
                     entry["runtime_ms"]])
        print(f"eps {eps_db:9.2f} dB -> max-SI {entry['maxsi_db']:10.4f} dB, "
              f"deviation tx {entry['sigma_tx_db']:9.3f} dB, "
              f"rx {entry['sigma_rx_db']:9.3f} dB "
              f"({runtime_ms:.1f} ms)")

    csv_path = os.path.join(out_dir, "tradeoff.csv")
    _write_csv(csv_path,
               ["eps_db", "maxsi_db", "sigma_tx_db", "sigma_rx_db",
                "frobenius_si_db", "runtime_ms"], rows)
    fig_path = os.path.join(out_dir, "tradeoff.png")
    plot_tradeoff(plot_rows, fig_path)
    print(f"wrote {csv_path}")
    print(f"wrote {fig_path}")
    return EXIT_OK


def cmd_sense(cfg: RunConfig, out_dir: str) -> int:
    ofdm, si, radar = _build_channels(cfg)
    grams = integral_split(si.gain_list())
    ref_rx, ref_tx = _references(cfg)
    jrx, jtx = _target_beams(cfg)

    stream = gen_ofdm(ofdm).reshape(-1) * np.sqrt(cfg.tx_power_w)
    est = _papr_estimate(cfg, ofdm, stream)
    budget = _noise_budget(cfg, est)

    # design-time echo energy: the reference pair pointing at the target
    h_ref = beamformed_fir(radar, ref_rx.entries[:, jrx],
                           ref_tx.entries[:, jtx])
    h_r_energy = ofdm.bandwidth_hz * float(np.sum(np.abs(h_ref) ** 2))

    rx_cb, tx_cb, _ = _optimize(cfg, grams, ref_rx, ref_tx)
    runs = {
        "reference": (ref_rx, ref_tx),
        "optimized": (rx_cb, tx_cb),
    }
    target_bin = int(round(2.0 * cfg.target_range_m
                           / (299_792_458.0 * ofdm.sample_interval_s)))
    print(f"target: {cfg.target_range_m:.1f} m @ "
          f"{cfg.target_azimuth_deg:.1f} deg, rcs "
          f"{cfg.target_rcs_m2:.3g} m^2 (tx beam {jtx}, rx beam {jrx}, "
          f"range bin ~{target_bin})")

    profiles: dict[str, object] = {}
    for name, (cb_rx, cb_tx) in runs.items():
        sim = _simulate_pair(cfg, ofdm, stream, si, radar,
                             cb_rx.entries[:, jrx], cb_tx.entries[:, jtx])
        residual = cancel_known_si(sim["noisy"], sim["si_clean"])
        prof = range_profile(residual, stream, ofdm)
        profiles[name] = prof
        csv_path = os.path.join(out_dir, f"profile_{name}.csv")
        _write_csv(csv_path, ["range_m", "mag_db"],
                   [[r, m] for r, m in zip(prof.bins_m, prof.magnitude_db)])
        pair_si = max_si(Codebook(cb_rx.entries[:, jrx:jrx + 1], cb_rx.mode),
                         si.gain_list(),
                         Codebook(cb_tx.entries[:, jtx:jtx + 1], cb_tx.mode))
        peak_bin = int(np.argmax(prof.magnitude_db))
        print(f"{name:9s}: pair SI {_db_amp(pair_si):8.2f} dB, "
              f"measured SNR {_db_pow(sim['snr']):8.2f} dB, "
              f"profile peak at bin {peak_bin} "
              f"({prof.bins_m[peak_bin]:.1f} m, "
              f"abs {_db_pow(prof.peak_power):.2f} dB)")
        print(f"wrote {csv_path}")

    floor = {}
    for name, prof in profiles.items():
        mask = np.ones(len(prof.bins_m), dtype=bool)
        lo = max(target_bin - 3, 0)
        mask[lo: target_bin + 4] = False
        absolute = prof.magnitude_db + _db_pow(prof.peak_power)
        floor[name] = float(np.median(absolute[mask]))
    print(f"noise floor (median, absolute): reference "
          f"{floor['reference']:.2f} dB, optimized "
          f"{floor['optimized']:.2f} dB, drop "
          f"{floor['reference'] - floor['optimized']:.2f} dB")

    sweep_rows: list[list] = []
    plot_rows: list[dict] = []
    for eps_db in sorted(cfg.sweep_eps_db):
        eps = 10.0 ** (eps_db / 20.0)
        rx_e, tx_e, _ = _optimize(cfg, grams, ref_rx, ref_tx, eps=eps)
        sim = _simulate_pair(cfg, ofdm, stream, si, radar,
                             rx_e.entries[:, jrx], tx_e.entries[:, jtx])
        achieved = max_si(rx_e, si.gain_list(), tx_e)
        bound = snr_bound(budget, achieved, h_r_energy, ofdm.bandwidth_hz,
                          zeta=cfg.zeta)
        entry = {
            "eps_db": eps_db,
            "snr_db": _db_pow(sim["snr"]),
            "snr_bound_db": _db_pow(bound),
            "crlb_sqrt_m": float(np.sqrt(crlb_range(bound,
                                                    ofdm.bandwidth_hz))),
        }
        plot_rows.append(entry)
        sweep_rows.append([entry["eps_db"], entry["snr_db"],
                           entry["snr_bound_db"], entry["crlb_sqrt_m"]])
        print(f"eps {eps_db:9.2f} dB -> SNR {entry['snr_db']:8.2f} dB "
              f"(bound {entry['snr_bound_db']:8.2f} dB, "
              f"sqrt CRLB {entry['crlb_sqrt_m'] * 100.0:.2f} cm)")

    sweep_path = os.path.join(out_dir, "snr_sweep.csv")
    _write_csv(sweep_path, ["eps_db", "snr_db", "snr_bound_db",
                            "crlb_sqrt_m"], sweep_rows)
    profile_fig = os.path.join(out_dir, "profiles.png")
    plot_range_profiles(profiles, profile_fig)
    sweep_fig = os.path.join(out_dir, "snr_sweep.png")
    plot_snr_sweep(plot_rows, sweep_fig)
    print(f"wrote {sweep_path}")
    print(f"wrote {profile_fig}")
    print(f"wrote {sweep_fig}")
    return EXIT_OK


def cmd_budget(cfg: RunConfig, out_dir: str) -> int:
    del out_dir
    ofdm, si, radar = _build_channels(cfg)
    del radar
    grams = integral_split(si.gain_list())
    stream = gen_ofdm(ofdm).reshape(-1) * np.sqrt(cfg.tx_power_w)
    est = _papr_estimate(cfg, ofdm, stream)
    budget = _noise_budget(cfg, est)

    eps_target = target_si(cfg.sigma_star_sq_w, budget, est)
    beta = beta_for_saturation(cfg.p_sat_w, budget, grams, cfg.eps_linear)

    print(f"quantizer: {cfg.adc_bits} bits, b_Q = {budget.b_q:.10e}")
    print(f"papr ({cfg.papr_mode}): {_db_pow(est.value):.2f} dB, "
          f"effective sum {_db_pow(est.effective_sum()):.2f} dB")
    print(f"tx power {cfg.tx_power_dbm:.1f} dBm, back-off gamma "
          f"{cfg.gamma:.3g}, thermal {cfg.thermal_noise_dbm:.1f} dBm")
    print(f"quantization-noise target {cfg.sigma_star_dbm:.1f} dBm -> "
          f"SI target eps: {_db_amp(eps_target):.4f} dB")
    print(f"saturation limit {cfg.p_sat_dbm:.1f} dBm at eps "
          f"{cfg.eps_db:.2f} dB -> beta: {beta:.10g}")
    print(f"per-side caps: tx eps*beta = "
          f"{_db_amp(cfg.eps_linear * beta):.4f} dB, rx eps/beta = "
          f"{_db_amp(cfg.eps_linear / beta):.4f} dB")
    return EXIT_OK


# --------------------------------------------------------------------------
# argument parsing and dispatch
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sibeam",
        description="Self-interference-aware beam codebook design "
                    "and quantized OFDM sensing simulation.")
    parser.add_argument("--config", metavar="PATH",
                        help="configuration file (INI-style)")
    parser.add_argument("--solver", choices=("tapered", "phased"),
                        help="per-element amplitude control (tapered) or "
                             "constant-modulus phase-only (phased)")
    parser.add_argument("--eps-db", type=float, metavar="F",
                        help="SI target in dB (20 log10 of the amplitude)")
    parser.add_argument("--beta", type=float, metavar="F",
                        help="TX/RX split of the SI budget")
    parser.add_argument("--seed", type=int, metavar="U64",
                        help="random seed for waveforms and noise")
    parser.add_argument("--no-clutter", action="store_true",
                        help="drop the wall reflection (direct path only)")
    parser.add_argument("--out", metavar="DIR",
                        help="output directory (default from config)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, doc in (
            ("channel", cmd_channel, "build and write channel files"),
            ("optimize", cmd_optimize, "solve both codebooks at one target"),
            ("sweep", cmd_sweep, "trade-off curve across SI targets"),
            ("sense", cmd_sense, "range profiles and SNR sweep"),
            ("budget", cmd_budget, "print SI target and saturation split")):
        sp = sub.add_parser(name, help=doc)
        sp.set_defaults(func=func)
    return parser


def _configure(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config)
    if args.solver is not None:
        cfg.solver = args.solver
    if args.eps_db is not None:
        cfg.eps_db = args.eps_db
    if args.beta is not None:
        cfg.beta = args.beta
    if args.seed is not None:
        cfg.seed = args.seed
    if args.no_clutter:
        cfg.include_wall = False
    if args.out is not None:
        cfg.output_dir = args.out
    cfg.validate()
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _configure(args)
        os.makedirs(cfg.output_dir, exist_ok=True)
        return args.func(cfg, cfg.output_dir)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleColumnError as err:
        print(f"infeasible SI target: {err} "
              f"(side {err.side}, column {err.column}; requested eps "
              f"{err.eps:.6g} is below the column threshold sigma_bar "
              f"{err.sigma_bar:.6g})", file=sys.stderr)
        return EXIT_INFEASIBLE
    except PhasedSolveError as err:
        print(f"phased solver failed: {err}", file=sys.stderr)
        flat = [s for side in err.statuses.values() for s in side]
        if "infeasible" in flat:
            return EXIT_INFEASIBLE
        return EXIT_NO_CONVERGENCE
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
