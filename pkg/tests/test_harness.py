import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bb84link.config import load_config, parse_config, resolve_config
from bb84link.errors import ArgumentError, ConfigError
from bb84link.experiments import (
    RunConfig, SweepGrid, evolution_csv, max_split, qber_crossing, run_ob_sweep, run_time_evolution,
    split_loss, sweep_csv,
)
from bb84link.params import LinkParams
from bb84link.polarization import Basis


def brute_force_split(threshold, excess):
    best = 1
    for k in range(0, 20):
        n = 2**k
        if 10 * math.log10(n) + k * excess <= threshold:
            best = n
    return best


def test_split_examples():
    assert max_split(15.2, 0.5) == 16
    assert max_split(15.2, 0.0) == 32
    assert brute_force_split(15.2, 0.0) == 32
    assert max_split(2.0, 0.5) == 1
    assert split_loss(32, 0.0) == pytest.approx(15.051, abs=1e-3)


@given(st.floats(0.0, 60.0), st.floats(0.0, 3.0))
def test_split_matches_brute_force(threshold, excess):
    assert max_split(threshold, excess) == brute_force_split(threshold, excess)


@given(st.floats(0.0, 50.0), st.floats(0.0, 10.0), st.floats(0.0, 3.0), st.floats(0.0, 3.0))
def test_split_monotone(t, dt, e, de):
    assert max_split(t + dt, e) >= max_split(t, e)
    assert max_split(t, e + de) <= max_split(t, e)


def test_sweep_grid():
    assert SweepGrid(-6, 20, 1).points()[0] == -6
    assert len(SweepGrid(-6, 20, 1).points()) == 27
    assert SweepGrid(0, 1, 0.25).points() == [0, 0.25, 0.5, 0.75, 1.0]
    with pytest.raises(ArgumentError):
        SweepGrid(5, 1, 1)
    with pytest.raises(ArgumentError):
        SweepGrid(0, 1, 0)


def test_analytic_sweep_rows(ase_params):
    cfg = RunConfig(link=ase_params, sweep=SweepGrid(0, 20, 0.5))
    rows = run_ob_sweep(cfg, analytic_only=True)
    assert rows[0]["r_raw_bps"] == pytest.approx(7600)
    assert rows[0]["qber"] == pytest.approx(0.042)
    q = [r["qber"] for r in rows]
    assert all(b >= a for a, b in zip(q, q[1:]))
    assert qber_crossing(rows, 0.11) == pytest.approx(15.2, abs=0.05)


def test_sweep_csv_deterministic(ase_params):
    cfg = RunConfig(link=ase_params.replace(pulse_count=2 * 10**9), sweep=SweepGrid(0, 4, 2))
    a = sweep_csv(run_ob_sweep(cfg, with_analytic=True), with_analytic=True)
    b = sweep_csv(run_ob_sweep(cfg, with_analytic=True), with_analytic=True)
    assert a == b
    header = a.splitlines()[0].split(",")
    assert header == ["ob_db", "r_raw_bps", "qber", "qber_hv", "qber_da", "secret_fraction", "source",
                      "r_analytic_bps", "qber_analytic"]
    assert len(a.splitlines()) == 4


def test_sweep_parallel_matches_serial(ase_params):
    cfg = RunConfig(link=ase_params.replace(pulse_count=10**9), sweep=SweepGrid(0, 3, 1))
    serial = sweep_csv(run_ob_sweep(cfg))
    from dataclasses import replace
    parallel = sweep_csv(run_ob_sweep(replace(cfg, workers=2)))
    assert serial == parallel


def test_csv_six_significant_digits(ase_params):
    rows = run_ob_sweep(RunConfig(link=ase_params, sweep=SweepGrid(1, 1, 1)), analytic_only=True)
    line = sweep_csv(rows).splitlines()[1].split(",")
    assert line[1] == f"{rows[0]['r_raw_bps']:.6g}"


def test_zero_noise_evolution():
    link = LinkParams(eta_bob=2e-5, dark_rates=(0, 0, 0, 0), e_opt=0.0)
    res = run_time_evolution(RunConfig(link=link, duration=1.0, block_size=0.1))
    assert len(res.rows) == 20
    assert all(r["qber_block"] == 0 for r in res.rows)
    assert res.rows[10]["basis"] == "DA" and res.rows[10]["t_s"] == pytest.approx(1.0)
    assert res.summary[Basis.HV].qber_mean == 0.0
    text = evolution_csv(res)
    assert text.splitlines()[0] == "t_s,basis,qber_block,rate_block"
    assert "mean,HV,0," in text and "3sigma,DA,0," in text


def test_evolution_needs_ten_blocks():
    with pytest.raises(ArgumentError):
        run_time_evolution(RunConfig(duration=9.0, block_size=1.0))


def test_evolution_per_basis_params(ase_params):
    hv = ase_params.replace(e_opt=0.1)
    cfg = RunConfig(link=ase_params, basis_links={Basis.HV: hv}, duration=2.0, block_size=0.2)
    res = run_time_evolution(cfg)
    assert res.summary[Basis.HV].qber_mean > res.summary[Basis.DA].qber_mean + 0.03


# --- config files ----------------------------------------------------------

def test_parse_config_basic():
    vals = parse_config("""
        # comment
        link.mu_q = 0.2   # trailing
        link.dark_rates = 1, 2, 3, 4
        link.measurement_mode = simultaneous
        pipeline.frame_sync = false
        link.pulse_count = 1e9
    """)
    assert vals["link.mu_q"] == 0.2
    assert vals["link.dark_rates"] == (1, 2, 3, 4)
    assert vals["pipeline.frame_sync"] is False
    assert vals["link.pulse_count"] == 10**9


@pytest.mark.parametrize("text,fragment", [
    ("link.mu = 0.1", "unknown key"),
    ("link.mu_q 0.1", "expected"),
    ("link.mu_q = abc", "bad value"),
    ("link.mu_q = 1\nlink.mu_q = 2", "duplicate"),
    ("link.measurement_mode = both", "bad value"),
    ("link.pulse_count = 1.5", "bad value"),
])
def test_parse_config_errors(text, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config(text)


def test_resolve_rejects_invalid_link():
    with pytest.raises(ConfigError):
        resolve_config(parse_config("link.e_opt = 0.9"))


def test_resolve_partial_calibration_targets():
    with pytest.raises(ConfigError, match="calibrate"):
        resolve_config(parse_config("calibrate.r0 = 7600"))


def test_shipped_configs_resolve(tmp_path):
    import pathlib
    root = pathlib.Path(__file__).resolve().parents[1] / "configs"
    names = sorted(p.name for p in root.glob("*.conf"))
    assert names == ["ase_evolve.conf", "ase_sweep.conf", "sige_filtered.conf", "sige_unfiltered.conf"]
    for name in names:
        res = resolve_config(load_config(root / name))
        assert "threshold" in res.calibrations
    ev = resolve_config(load_config(root / "ase_evolve.conf"))
    assert set(ev.run.basis_links) == {Basis.HV, Basis.DA}
    assert ev.run.basis_links[Basis.HV].e_opt > ev.run.basis_links[Basis.DA].e_opt
