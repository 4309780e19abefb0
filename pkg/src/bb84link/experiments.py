"""Experiment drivers: optical-budget sweeps, time evolution and split planning."""
from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analytic import analytic_rates
from .errors import ArgumentError, Bb84LinkError, OutputError
from .params import LinkParams
from .pipeline import DEFAULT_BLOCK_SIZE, SiftedKey, process_events, secret_fraction
from .polarization import Basis
from .prbs import Symbols, prbs_frame
from .simulator import simulate_pulses

SWEEP_COLUMNS = ["ob_db", "r_raw_bps", "qber", "qber_hv", "qber_da", "secret_fraction", "source"]
ANALYTIC_COLUMNS = ["r_analytic_bps", "qber_analytic"]
EVOLUTION_COLUMNS = ["t_s", "basis", "qber_block", "rate_block"]
DEFAULT_EXCESS_LOSS_DB = 0.5


@dataclass(frozen=True)
class SweepGrid:
    ob_min: float = -6.0
    ob_max: float = 20.0
    step: float = 1.0

    def __post_init__(self):
        if self.ob_min > self.ob_max:
            raise ArgumentError("sweep.ob_min must not exceed sweep.ob_max")
        if not self.step > 0:
            raise ArgumentError("sweep.step must be > 0")

    def points(self) -> list[float]:
        n = int(math.floor((self.ob_max - self.ob_min) / self.step + 1e-9))
        return [round(self.ob_min + i * self.step, 10) for i in range(n + 1)]


@dataclass(frozen=True)
class RunConfig:
    link: LinkParams = field(default_factory=LinkParams)
    emitter: str = "ase_sliced"
    sweep: SweepGrid = field(default_factory=SweepGrid)
    duration: float = 600.0
    block_size: float = DEFAULT_BLOCK_SIZE
    output_path: str | None = None
    basis_links: dict[Basis, LinkParams] = field(default_factory=dict)
    reference_seed: int = 1
    frame_sync: bool = True
    workers: int = 1
    excess_loss: float = DEFAULT_EXCESS_LOSS_DB

    def __post_init__(self):
        if not self.duration > 0:
            raise ArgumentError("run.duration must be > 0")
        if not self.block_size > 0:
            raise ArgumentError("run.block_size must be > 0")

    def link_for(self, basis: Basis) -> LinkParams:
        return self.basis_links.get(Basis(basis), self.link)


def derive_seed(seed: int, *keys: int) -> int:
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1, np.uint32)[0])


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return f"{float(x):.6g}"


# --- link runs -------------------------------------------------------------

@dataclass(frozen=True)
class BasisRun:
    key: SiftedKey
    alice: Symbols
    duration: float
    symbol_rate: float


@dataclass(frozen=True)
class LinkResult:
    runs: list[BasisRun]
    n_sifted: int
    n_errors: int
    duration: float
    per_basis: dict[Basis, tuple[int, int]]

    @property
    def raw_rate(self) -> float:
        return self.n_sifted / self.duration

    @property
    def qber(self) -> float:
        return self.n_errors / self.n_sifted if self.n_sifted else math.nan

    def qber_of(self, basis: Basis) -> float:
        n, e = self.per_basis.get(Basis(basis), (0, 0))
        return e / n if n else math.nan


def run_link(params: LinkParams, reference_seed: int = 1, synchronize: bool = True,
             run_params: dict[int, LinkParams] | None = None, workers: int = 1) -> LinkResult:
    """Simulate every measurement run of ``params`` and push it through the
    key pipeline.  ``run_params`` optionally replaces the parameters of
    individual runs (consecutive mode: 0 = HV, 1 = DA)."""
    alice_frame = prbs_frame(params.prbs_seed)
    reference = prbs_frame(reference_seed) if synchronize else alice_frame
    runs, per_basis = [], {}
    n_sifted = n_errors = 0
    duration = 0.0
    for r in range(len(params.runs())):
        p = (run_params or {}).get(r, params)
        events = simulate_pulses(p, alice_frame, r, workers)
        processed = process_events(events, reference, p.symbol_rate, p.window_fraction, synchronize)
        key, alice = processed.key, processed.alice
        _, a_bit = alice.at(key.symbol_indices)
        err = a_bit != key.bits
        for b in Basis:
            sel = key.basis == b
            n0, e0 = per_basis.get(b, (0, 0))
            per_basis[b] = (n0 + int(sel.sum()), e0 + int(err[sel].sum()))
        n_sifted += len(key)
        n_errors += int(err.sum())
        duration += p.run_duration
        runs.append(BasisRun(key, alice, p.run_duration, p.symbol_rate))
    return LinkResult(runs, n_sifted, n_errors, duration, per_basis)


# --- optical budget sweep --------------------------------------------------

def _sweep_point(args):
    config, i, ob, analytic_only, with_analytic = args
    params = config.link.replace(ob_db=ob, rng_seed=derive_seed(config.link.rng_seed, i))
    row = {"ob_db": ob, "source": config.emitter}
    a = analytic_rates(params)
    if analytic_only:
        row.update(r_raw_bps=a.r_sifted, qber=a.qber, qber_hv=a.qber_per_basis.get(Basis.HV, math.nan),
                   qber_da=a.qber_per_basis.get(Basis.DA, math.nan))
    else:
        try:
            res = run_link(params, config.reference_seed, config.frame_sync)
        except Bb84LinkError as exc:
            raise type(exc)(f"OB = {ob} dB: {exc}") from exc
        row.update(r_raw_bps=res.raw_rate, qber=res.qber, qber_hv=res.qber_of(Basis.HV),
                   qber_da=res.qber_of(Basis.DA))
    q = row["qber"]
    row["secret_fraction"] = secret_fraction(q) if not math.isnan(q) else math.nan
    if with_analytic:
        row.update(r_analytic_bps=a.r_sifted, qber_analytic=a.qber)
    return row


def run_ob_sweep(config: RunConfig, analytic_only: bool = False, with_analytic: bool = False) -> list[dict]:
    """One row per optical-budget grid point, in grid order.

    Each point is an independent simulation whose seed is derived from
    ``(link.rng_seed, point index)``.
    """
    jobs = [(config, i, ob, analytic_only, with_analytic) for i, ob in enumerate(config.sweep.points())]
    if config.workers > 1 and not analytic_only and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(_sweep_point, jobs))
    return [_sweep_point(j) for j in jobs]


def sweep_csv(rows: list[dict], with_analytic: bool = False) -> str:
    cols = SWEEP_COLUMNS + (ANALYTIC_COLUMNS if with_analytic else [])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([fmt(row[c]) for c in cols])
    return buf.getvalue()


def qber_crossing(rows: list[dict], q_max: float, column: str = "qber") -> float:
    """Optical budget where ``column`` first rises through ``q_max``, by
    linear interpolation between grid points."""
    pts = [(r["ob_db"], r[column]) for r in rows if r["ob_db"] >= 0 and not math.isnan(r[column])]
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        if y0 < q_max <= y1:
            return x0 + (q_max - y0) * (x1 - x0) / (y1 - y0)
    return math.nan


# --- time evolution --------------------------------------------------------

@dataclass(frozen=True)
class BasisSummary:
    qber_mean: float
    qber_3sigma: float
    rate_mean: float
    rate_3sigma: float
    n_blocks: int


@dataclass(frozen=True)
class EvolutionResult:
    rows: list[dict]
    summary: dict[Basis, BasisSummary]


def _blocks(key: SiftedKey, alice: Symbols, duration: float, block_size: float, symbol_rate: float,
            basis: Basis):
    n_blocks = int(math.floor(duration / block_size + 1e-9))
    sel = key.basis == basis
    idx = key.symbol_indices[sel]
    _, a_bit = alice.at(idx)
    err = a_bit != key.bits[sel]
    blk = np.floor(idx / symbol_rate / block_size).astype(np.int64)
    ok = blk < n_blocks
    tot = np.bincount(blk[ok], minlength=n_blocks)
    bad = np.bincount(blk[ok], weights=err[ok], minlength=n_blocks)
    return tot, bad


def run_time_evolution(config: RunConfig) -> EvolutionResult:
    """Block-wise QBER and sifted rate over ``config.duration`` per run.

    Consecutive mode measures HV for the full duration and then DA, each
    with its own (possibly per-basis calibrated) parameters; block times
    run on across the two traces.
    """
    if config.duration < 10 * config.block_size:
        raise ArgumentError("run.duration must cover at least 10 blocks")
    link = config.link
    runs = link.runs()
    run_params = {}
    for r, bases in enumerate(runs):
        p = config.link_for(bases[0]) if len(bases) == 1 else link
        run_params[r] = p.replace(pulse_count=int(round(config.duration * p.symbol_rate)),
                                  rng_seed=derive_seed(link.rng_seed, 1000 + r))
    res = run_link(link, config.reference_seed, config.frame_sync, run_params, config.workers)
    rows, summary = [], {}
    t_offset = 0.0
    for r, (bases, br) in enumerate(zip(runs, res.runs)):
        per = {b: _blocks(br.key, br.alice, br.duration, config.block_size, br.symbol_rate, b) for b in bases}
        n_blocks = len(next(iter(per.values()))[0])
        for k in range(n_blocks):
            for b in bases:
                tot, bad = per[b]
                rows.append({"t_s": t_offset + k * config.block_size, "basis": b.name,
                             "qber_block": bad[k] / tot[k] if tot[k] else math.nan,
                             "rate_block": tot[k] / config.block_size})
        for b in bases:
            tot, bad = per[b]
            ok = tot > 0
            q = bad[ok] / tot[ok]
            rate = tot / config.block_size
            summary[b] = BasisSummary(float(np.mean(q)) if len(q) else math.nan,
                                      3 * float(np.std(q, ddof=1)) if len(q) > 1 else math.nan,
                                      float(np.mean(rate)),
                                      3 * float(np.std(rate, ddof=1)) if len(rate) > 1 else math.nan,
                                      int(len(q)))
        t_offset += br.duration
    return EvolutionResult(rows, summary)


def evolution_csv(result: EvolutionResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EVOLUTION_COLUMNS)
    for row in result.rows:
        w.writerow([fmt(row[c]) for c in EVOLUTION_COLUMNS])
    for b, s in result.summary.items():
        w.writerow(["mean", b.name, fmt(s.qber_mean), fmt(s.rate_mean)])
        w.writerow(["3sigma", b.name, fmt(s.qber_3sigma), fmt(s.rate_3sigma)])
    return buf.getvalue()


# --- split planning --------------------------------------------------------

def split_loss(n: int, excess_loss_per_stage: float = DEFAULT_EXCESS_LOSS_DB) -> float:
    return 10.0 * math.log10(n) + math.log2(n) * excess_loss_per_stage


def max_split(ob_threshold: float, excess_loss_per_stage: float = DEFAULT_EXCESS_LOSS_DB) -> int:
    """Largest power-of-two passive split 1:N that fits in ``ob_threshold``."""
    if excess_loss_per_stage < 0:
        raise ArgumentError("excess loss must be >= 0")
    n = 1
    while split_loss(2 * n, excess_loss_per_stage) <= ob_threshold:
        n *= 2
    return n


def write_text(text: str, path: str | os.PathLike | None, stream=None) -> None:
    if path is None:
        (stream or io.StringIO()).write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {os.fspath(path)}: {exc.strerror or exc}") from exc
