"""Command-line front end.

Exit status is 0 on success; on failure a single ``error: <category>:
<message>`` line goes to stderr and the status is 2.
"""
from __future__ import annotations

import argparse
import sys

from . import FORMAT_VERSIONS, __version__
from .analytic import threshold_budget
from .calibration import CalibrationTargets, calibrate
from .config import load_config, resolve_config
from .errors import ArgumentError, Bb84LinkError
from .experiments import (evolution_csv, max_split, qber_crossing, run_ob_sweep, run_time_evolution,
                          split_loss, sweep_csv, write_text)
from .pipeline import DEFAULT_BLOCK_SIZE, process_events, qber
from .prbs import prbs_frame
from .simulator import simulate_pulses
from .sources import (attenuation_to_target, dbm, emitter_preset, li_power, photons_per_pulse)
from .timetags import read_timetags, write_timetags


def _version_string() -> str:
    formats = ", ".join(f"{k} v{v}" for k, v in FORMAT_VERSIONS.items())
    return f"bb84link {__version__} ({formats})"


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--seed", type=int, help="override link.rng_seed")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--pulses", type=lambda s: int(float(s)), help="override link.pulse_count")
    p.add_argument("--analytic", action="store_true", help="use the closed-form model, skip Monte Carlo")
    p.add_argument("--workers", type=int, help="parallel workers")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bb84link", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=_version_string())
    sub = parser.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("sweep", help="raw key rate and QBER versus optical budget")
    _common(s)
    s.add_argument("--ob-min", type=float)
    s.add_argument("--ob-max", type=float)
    s.add_argument("--step", type=float)
    s.add_argument("--with-analytic", action="store_true", help="append analytic columns")

    e = sub.add_parser("evolve", help="block-wise QBER and rate over time")
    _common(e)
    e.add_argument("--duration", type=float, help="seconds per basis run")
    e.add_argument("--block-size", type=float, help="block length in seconds")

    c = sub.add_parser("calibrate", help="fit e_opt, dark floor and eta_bob to anchor points")
    _common(c)
    d = CalibrationTargets()
    c.add_argument("--r0", type=float, default=d.r0, help="sifted rate at 0 dB [b/s]")
    c.add_argument("--q0", type=float, default=d.q0, help="QBER at 0 dB")
    c.add_argument("--ob-threshold", type=float, default=d.ob_threshold, help="budget at q_max [dB]")
    c.add_argument("--q-max", type=float, default=d.q_max, help="QBER cut-off")

    sp = sub.add_parser("split", help="largest passive 1:N split within a budget")
    _common(sp)
    sp.add_argument("--threshold", type=float, default=15.2, help="optical budget [dB]")
    sp.add_argument("--excess", type=float, help="excess loss per 1:2 stage [dB] (default 0.5)")

    ph = sub.add_parser("photons", help="optical power to mean photon number per pulse")
    _common(ph)
    src = ph.add_mutually_exclusive_group(required=True)
    src.add_argument("--power", type=float, help="average optical power [W]")
    src.add_argument("--current", type=float, help="drive current [mA] on the preset's L-I curve")
    ph.add_argument("--preset", default="sige_unfiltered", help="emitter preset")
    ph.add_argument("--wavelength", type=float, help="wavelength [nm] (default: preset center)")
    ph.add_argument("--rate", type=float, default=1e9, help="symbol rate [Hz]")
    ph.add_argument("--target", type=float, default=0.1, help="target mean photon number")

    sim = sub.add_parser("simulate", help="write simulated time tags for one measurement run")
    _common(sim)
    sim.add_argument("--run", type=int, default=0, help="run index (consecutive: 0 = HV, 1 = DA)")

    an = sub.add_parser("analyze", help="QBER and raw rate of a time-tag file")
    _common(an)
    an.add_argument("timetags", help="time-tag CSV (detector_id,timestamp_ps)")
    an.add_argument("--duration", type=float, help="observation time [s] (default: last tag)")
    an.add_argument("--block-size", type=float, default=DEFAULT_BLOCK_SIZE)
    return parser


def _resolve(args):
    values = load_config(args.config) if args.config else {}
    res = resolve_config(values, seed=args.seed, pulses=args.pulses, output_path=args.out)
    if getattr(args, "workers", None):
        from dataclasses import replace
        res.run = replace(res.run, workers=args.workers)
    return res


def _kv(pairs) -> str:
    return "".join(f"{k} = {v}\n" for k, v in pairs)


def cmd_sweep(args, out):
    from dataclasses import replace
    res = _resolve(args)
    run = res.run
    grid = run.sweep
    grid = type(grid)(args.ob_min if args.ob_min is not None else grid.ob_min,
                      args.ob_max if args.ob_max is not None else grid.ob_max,
                      args.step if args.step is not None else grid.step)
    run = replace(run, sweep=grid)
    rows = run_ob_sweep(run, analytic_only=args.analytic, with_analytic=args.with_analytic)
    write_text(sweep_csv(rows, args.with_analytic), run.output_path, out)
    if res.threshold_targets is not None:
        crossing = qber_crossing(rows, res.threshold_targets.q_max)
        print(f"# qber crossing {res.threshold_targets.q_max} at {crossing:.3f} dB", file=sys.stderr)


def cmd_evolve(args, out):
    from dataclasses import replace
    res = _resolve(args)
    run = res.run
    if args.duration is not None:
        run = replace(run, duration=args.duration)
    if args.block_size is not None:
        run = replace(run, block_size=args.block_size)
    if args.analytic:
        raise ArgumentError("evolve has no analytic mode; block statistics need Monte Carlo")
    write_text(evolution_csv(run_time_evolution(run)), run.output_path, out)


def cmd_calibrate(args, out):
    res = _resolve(args)
    targets = CalibrationTargets(args.r0, args.q0, args.ob_threshold, args.q_max)
    cal = calibrate(targets, res.run.link)
    p = cal.params
    lines = [
        ("link.e_opt", f"{cal.e_opt:.6g}"),
        ("link.eta_bob", f"{cal.eta_bob:.6g}"),
        ("link.dark_rates", ", ".join(f"{r:.6g}" for r in p.dark_rates)),
        ("# dark_eff_cps", f"{cal.dark_eff:.6g}"),
        ("# threshold_db", f"{threshold_budget(p, targets.q_max):.4f}"),
    ]
    lines += [(f"# residual.{k}", f"{v:.3g}") for k, v in cal.residuals.items()]
    write_text(_kv(lines), res.run.output_path, out)


def cmd_split(args, out):
    excess = args.excess
    if excess is None:
        excess = load_config(args.config).get("split.excess_loss", 0.5) if args.config else 0.5
    n = max_split(args.threshold, excess)
    lines = [("split_ratio", n), ("split_loss_db", f"{split_loss(n, excess):.4g}"),
             ("ob_threshold_db", args.threshold), ("excess_loss_db", excess)]
    write_text(_kv(lines), args.out, out)


def cmd_photons(args, out):
    spec = emitter_preset(args.preset)
    power = args.power
    if power is None:
        if spec.li_curve is None:
            raise ArgumentError(f"preset {spec.name!r} has no L-I curve")
        power = li_power(spec.li_curve, args.current)
    wavelength = args.wavelength or spec.center_wavelength
    mu = photons_per_pulse(power, wavelength, args.rate)
    lines = [("power_w", f"{power:.6g}"), ("power_dbm", f"{dbm(power):.4g}" if power > 0 else "-inf"),
             ("wavelength_nm", f"{wavelength:.6g}"), ("symbol_rate_hz", f"{args.rate:.6g}"),
             ("mu_photons_per_pulse", f"{mu:.6g}"),
             ("attenuation_to_target_db", f"{attenuation_to_target(mu, args.target):.4g}")]
    write_text(_kv(lines), args.out, out)


def cmd_simulate(args, out):
    res = _resolve(args)
    p = res.run.link
    events = simulate_pulses(p, prbs_frame(p.prbs_seed), args.run, res.run.workers)
    if res.run.output_path:
        write_timetags(events, res.run.output_path)
    else:
        write_timetags(events, out)


def cmd_analyze(args, out):
    res = _resolve(args)
    p = res.run.link
    events = read_timetags(args.timetags)
    if len(events) == 0:
        raise ArgumentError("time-tag file holds no events")
    processed = process_events(events, prbs_frame(res.run.reference_seed), p.symbol_rate,
                               p.window_fraction, res.run.frame_sync)
    duration = args.duration or float(events.timestamp_ps[-1]) * 1e-12
    rep = qber(processed.key, processed.alice, duration, args.block_size, p.symbol_rate)
    lines = [("n_events", len(events)), ("n_filtered", processed.n_filtered), ("n_sifted", rep.n_sifted),
             ("raw_rate_bps", f"{rep.raw_rate:.6g}"), ("qber", f"{rep.qber_total:.6g}")]
    lines += [(f"qber_{b.name.lower()}", f"{q:.6g}") for b, q in rep.qber_per_basis.items()]
    if processed.sync is not None:
        lines += [("sync_offset", processed.sync.offset), ("sync_agreement", f"{processed.sync.agreement:.6g}")]
    lines += [("block_mean", f"{rep.block_mean:.6g}"), ("block_3sigma", f"{rep.block_3sigma:.6g}")]
    write_text(_kv(lines), args.out, out)


COMMANDS = {"sweep": cmd_sweep, "evolve": cmd_evolve, "calibrate": cmd_calibrate, "split": cmd_split,
            "photons": cmd_photons, "simulate": cmd_simulate, "analyze": cmd_analyze}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.cmd](args, out)
    except Bb84LinkError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
