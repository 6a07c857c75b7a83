"""Monte Carlo engine: interval math, slope fits on exact power laws,
paired randomness across methods, outage estimation, reference curves."""

import math

import numpy as np
import pytest

from latdec.channels import NoiseModel
from latdec.dmtsim import (
    ChannelConfig,
    ErrorRateRecord,
    SlopeEstimate,
    SweepConfig,
    dmt_reference_breakpoints,
    dmt_reference_value,
    estimate_diversity_slope,
    estimate_error_rate,
    estimate_outage_probability,
    run_sweep,
    sweep_cell,
    wilson_interval,
)
from latdec.errors import InsufficientData
from latdec.lattice import LatticeDesign, ShapingRegion


def square_design(n, t=1):
    return LatticeDesign(
        generator=np.eye(n),
        region=ShapingRegion.box(np.full(n, 0.6)),
        coding_duration=t,
        dither=np.full(n, 0.5),
    )


def rayleigh_config(n_ant=1, methods=("ml",), **kw):
    design = square_design(2 * n_ant * kw.pop("t", 1))
    chan = ChannelConfig(model="quasi_static_rayleigh", nt=n_ant, nr=n_ant)
    defaults = dict(min_errors=20, max_trials=3000, seed=11,
                    rho_db=(10.0, 14.0), r=0.0, gate_alpha=1.5)
    defaults.update(kw)
    return SweepConfig(design=design, channel=chan, methods=methods, **defaults)


def synthetic_record(rho_db, p, method="ml", errors=100):
    trials = max(errors * 10, int(errors / max(p, 1e-12)))
    lo, hi = wilson_interval(errors, trials)
    # Force the stated p_hat while keeping the invariants satisfied.
    return ErrorRateRecord(rho_db=rho_db, rho_linear=10 ** (rho_db / 10.0),
                           r=0.0, method=method, trials=trials, errors=errors,
                           oob=0, timeouts=0, p_hat=p,
                           ci_lo=min(p, lo), ci_hi=max(p, hi))


def test_wilson_interval_textbook_case():
    lo, hi = wilson_interval(5, 100)
    # Direct evaluation of the score interval with z = 1.959963984540054.
    z = 1.959963984540054
    p, n = 0.05, 100
    denom = 1 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    assert lo == pytest.approx(center - half, abs=1e-15)
    assert hi == pytest.approx(center + half, abs=1e-15)
    assert lo == pytest.approx(0.02154367915436796, abs=1e-12)
    assert hi == pytest.approx(0.11175046923191913, abs=1e-12)


def test_wilson_interval_edges():
    lo, hi = wilson_interval(0, 50)
    assert lo == 0.0
    assert hi > 0.0
    lo, hi = wilson_interval(50, 50)
    assert hi == 1.0
    assert lo < 1.0
    with pytest.raises(ValueError):
        wilson_interval(5, 0)
    with pytest.raises(ValueError):
        wilson_interval(6, 5)


def test_slope_exact_power_law():
    # p = c rho^-2 exactly: the fit must recover 2 to machine precision.
    recs = [synthetic_record(db, 1e-1 * (10 ** (db / 10.0) / 10.0) ** -2.0)
            for db in (10.0, 20.0, 30.0)]
    est = estimate_diversity_slope(recs, min_errors=50)
    assert est.d_hat == pytest.approx(2.0, abs=1e-12)
    assert est.stderr == pytest.approx(0.0, abs=1e-7)
    assert est.n_points == 3
    assert est.rho_db_used == (10.0, 20.0, 30.0)
    assert est.method == "ml"


def test_slope_uses_top_cells_only():
    recs = [synthetic_record(db, 0.5 * 10 ** (-db / 10.0))
            for db in (6.0, 10.0, 14.0, 18.0, 22.0)]
    est = estimate_diversity_slope(recs, min_errors=50)
    assert est.n_points == 3
    assert est.rho_db_used == (14.0, 18.0, 22.0)
    assert est.d_hat == pytest.approx(1.0, abs=1e-12)


def test_slope_two_point_fit_has_zero_stderr():
    recs = [synthetic_record(db, 0.3 * 10 ** (-db / 10.0))
            for db in (10.0, 20.0)]
    est = estimate_diversity_slope(recs, min_errors=50)
    assert est.n_points == 2
    assert est.stderr == 0.0


def test_slope_qualification_rules():
    # Under min_errors, or p_hat >= 0.5, cells are excluded.
    good = synthetic_record(10.0, 0.01)
    weak = synthetic_record(20.0, 0.001, errors=30)
    with pytest.raises(InsufficientData):
        estimate_diversity_slope([good, weak], min_errors=50)
    sat1 = synthetic_record(10.0, 0.6)
    sat2 = synthetic_record(20.0, 0.55)
    with pytest.raises(InsufficientData):
        estimate_diversity_slope([good, sat1, sat2], min_errors=50)


def test_record_invariants_enforced():
    with pytest.raises(ValueError):
        ErrorRateRecord(rho_db=10.0, rho_linear=10.0, r=0.0, method="ml",
                        trials=0, errors=0, oob=0, timeouts=0,
                        p_hat=0.0, ci_lo=0.0, ci_hi=0.0)
    with pytest.raises(ValueError):
        ErrorRateRecord(rho_db=10.0, rho_linear=10.0, r=0.0, method="ml",
                        trials=10, errors=3, oob=2, timeouts=2,
                        p_hat=0.3, ci_lo=0.1, ci_hi=0.6)
    with pytest.raises(ValueError):
        ErrorRateRecord(rho_db=10.0, rho_linear=10.0, r=0.0, method="ml",
                        trials=10, errors=3, oob=0, timeouts=0,
                        p_hat=0.3, ci_lo=0.4, ci_hi=0.6)


def test_sweep_config_validation():
    with pytest.raises(ValueError):
        rayleigh_config(methods=("warp",))
    with pytest.raises(ValueError):
        rayleigh_config(rho_db=(10.0,))
    with pytest.raises(ValueError):
        rayleigh_config(rho_db=(10.0, 10.0))
    with pytest.raises(ValueError):
        rayleigh_config(rho_db=(14.0, 10.0))
    with pytest.raises(ValueError):
        rayleigh_config(min_errors=10)
    with pytest.raises(ValueError):
        rayleigh_config(methods=("lr_linear",), gate_alpha=None)
    with pytest.raises(ValueError):
        ChannelConfig(model="mimo_arq", arq_rounds=2)   # x_thresh mandatory


def test_cell_determinism():
    cfg = rayleigh_config(methods=("ml", "lr_linear"))
    a = sweep_cell(cfg, 10.0)
    b = sweep_cell(cfg, 10.0)
    assert a == b


def test_methods_share_trials_regardless_of_grouping():
    # A method's record must be bit-identical whether it runs alone or
    # alongside others: trial randomness is keyed by (seed, level, rate,
    # trial index) and never by the method set.
    joint = sweep_cell(rayleigh_config(methods=("ml", "reg_exact")), 10.0)
    alone = estimate_error_rate(rayleigh_config(methods=("ml",)), 10.0, "ml")
    ml_joint = [rec for rec in joint if rec.method == "ml"][0]
    assert ml_joint == alone


def test_noiseless_fixed_channel_never_errs():
    design = square_design(2)
    chan = ChannelConfig(model="fixed", h_real=3.0 * np.eye(2),
                         noise=NoiseModel(scale=0.0))
    cfg = SweepConfig(design=design, channel=chan, methods=("ml", "reg_exact"),
                      rho_db=(10.0, 20.0), r=0.0, min_errors=20,
                      max_trials=300, seed=3)
    recs = sweep_cell(cfg, 10.0)
    for rec in recs:
        assert rec.errors == 0
        assert rec.trials == 300          # stopping never triggers
        assert rec.p_hat == 0.0
        assert rec.ci_lo == 0.0


def test_run_sweep_records_and_slopes():
    cfg = rayleigh_config(methods=("ml",), rho_db=(8.0, 12.0, 16.0),
                          max_trials=4000)
    result = run_sweep(cfg)
    assert len(result.records) == 3
    assert set(r.method for r in result.records) == {"ml"}
    assert "ml" in result.slopes
    est = result.slopes["ml"]
    if est is not None:
        assert isinstance(est, SlopeEstimate)
        assert 0.2 < est.d_hat < 3.0


def test_run_sweep_custom_cell_runner_matches_serial():
    cfg = rayleigh_config(methods=("ml",))
    serial = run_sweep(cfg)
    swapped = run_sweep(cfg, cell_runner=lambda c: [sweep_cell(c, db)
                                                   for db in c.rho_db])
    assert serial.records == swapped.records


def test_run_sweep_insufficient_data_slope_is_none():
    # A fixed noiseless channel yields zero errors everywhere: no cell
    # qualifies and the slope must be reported as missing, not faked.
    design = square_design(2)
    chan = ChannelConfig(model="fixed", h_real=3.0 * np.eye(2),
                         noise=NoiseModel(scale=0.0))
    cfg = SweepConfig(design=design, channel=chan, methods=("ml",),
                      rho_db=(10.0, 20.0), r=0.0, min_errors=20,
                      max_trials=50, seed=3)
    result = run_sweep(cfg)
    assert result.slopes["ml"] is None


def test_outage_fixed_channel_indicator():
    # log2 det(I + H H^T) = 2 for H = I_2; outage iff 2 < 2 * rate * t.
    chan = ChannelConfig(model="fixed", h_real=np.eye(2))
    hi = estimate_outage_probability(10.0, 2.0, 1, chan, trials=1000)
    assert hi.p_hat == 1.0
    lo = estimate_outage_probability(10.0, 0.5, 1, chan, trials=1000)
    assert lo.p_hat == 0.0
    with pytest.raises(ValueError):
        estimate_outage_probability(10.0, 1.0, 1, chan, trials=10)


def test_outage_decreases_with_signal_level():
    chan = ChannelConfig(model="quasi_static_rayleigh", nt=1, nr=1)
    weak = estimate_outage_probability(2.0, 1.0, 1, chan, trials=3000, seed=5)
    strong = estimate_outage_probability(200.0, 1.0, 1, chan, trials=3000,
                                         seed=5)
    assert weak.p_hat > strong.p_hat
    assert strong.p_hat < 0.2


def test_arq_sweep_cell_runs():
    design = square_design(2)
    chan = ChannelConfig(model="mimo_arq", nt=1, nr=1, arq_rounds=2,
                         arq_x_thresh=1.0)
    cfg = SweepConfig(design=design, channel=chan, methods=("ml",),
                      rho_db=(6.0, 10.0), r=0.5, min_errors=20,
                      max_trials=400, seed=9)
    recs = sweep_cell(cfg, 6.0)
    assert len(recs) == 1
    rec = recs[0]
    assert rec.trials >= rec.errors
    assert rec.method == "ml"
    assert recs == sweep_cell(cfg, 6.0)     # deterministic


def test_ofdm_sweep_cell_runs():
    design = square_design(4, t=2)          # two tones, one complex dim each
    chan = ChannelConfig(model="mimo_ofdm", nt=1, nr=1, tones=2, taps=2)
    cfg = SweepConfig(design=design, channel=chan, methods=("ml",),
                      rho_db=(6.0, 10.0), r=0.0, min_errors=20,
                      max_trials=400, seed=10)
    rec = sweep_cell(cfg, 6.0)[0]
    assert rec.trials >= 20 or rec.errors < 20


def test_naf_sweep_cell_runs():
    design = square_design(4, t=2)          # relay frame: two channel uses
    chan = ChannelConfig(model="naf_relay", nt=1, nr=1)
    cfg = SweepConfig(design=design, channel=chan, methods=("ml", "lr_linear"),
                      rho_db=(6.0, 10.0), r=0.0, min_errors=20,
                      max_trials=400, seed=12, gate_alpha=1.5)
    recs = sweep_cell(cfg, 10.0)
    assert len(recs) == 2
    for rec in recs:
        assert rec.trials > 0


def test_reference_breakpoints_tables():
    assert dmt_reference_breakpoints(2, 2) == [(0, 4.0), (1, 1.0), (2, 0.0)]
    assert dmt_reference_breakpoints(1, 1) == [(0, 1.0), (1, 0.0)]
    assert dmt_reference_breakpoints(4, 2) == [(0, 8.0), (1, 3.0), (2, 0.0)]
    assert dmt_reference_breakpoints(2, 4) == [(0, 8.0), (1, 3.0), (2, 0.0)]
    assert dmt_reference_breakpoints(2, 2, taps=2) == [
        (0, 8.0), (1, 3.0), (2, 0.0)]
    with pytest.raises(ValueError):
        dmt_reference_breakpoints(0, 2)


def test_reference_value_interpolation():
    assert dmt_reference_value(0.0, 2, 2) == 4.0
    assert dmt_reference_value(0.5, 2, 2) == pytest.approx(2.5)
    assert dmt_reference_value(1.0, 2, 2) == 1.0
    assert dmt_reference_value(1.5, 2, 2) == pytest.approx(0.5)
    assert dmt_reference_value(2.0, 2, 2) == 0.0
    assert dmt_reference_value(5.0, 2, 2) == 0.0
    assert dmt_reference_value(0.5, 2, 2, taps=2) == pytest.approx(5.5)
    with pytest.raises(ValueError):
        dmt_reference_value(-0.1, 2, 2)
