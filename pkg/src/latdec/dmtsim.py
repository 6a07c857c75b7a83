"""Monte Carlo harness for error-rate sweeps and diversity slopes.

A sweep runs a grid of (signal level, decode method) cells over a fixed
design and channel model.  Each trial draws channel, transmitted
codeword, and noise from a counter-based stream keyed by
(experiment seed, cell kind, rho, rate, trial index) - the method is
deliberately left out of the key, so every method at a given signal
level faces the identical sequence of trials.  That makes paired
comparisons (exact vs approximate decoders, outage vs error rate) exact
and keeps every record bit-reproducible no matter how cells are
scheduled.

The diversity slope is the least-squares slope of -log10(error rate)
against log10(rho) over the top qualifying signal levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .channels import (
    ChannelSample,
    NoiseModel,
    embed_complex,
    fixed_channel,
    sample_mimo_ofdm,
    sample_naf_relay,
    sample_quasi_static_rayleigh,
    simulate_arq_episode,
    trial_rng,
)
from .decoders import METHODS, DecodeGate, decode
from .errors import InsufficientData
from .lattice import LatticeDesign, ShapingRegion, enumerate_codebook, scaling_factor
from .numkernel import as_matrix, cholesky_upper

__all__ = [
    "ChannelConfig",
    "SweepConfig",
    "ErrorRateRecord",
    "SlopeEstimate",
    "OutageEstimate",
    "SweepResult",
    "wilson_interval",
    "estimate_error_rate",
    "estimate_outage_probability",
    "estimate_diversity_slope",
    "run_sweep",
    "sweep_cell",
    "dmt_reference_breakpoints",
    "dmt_reference_value",
]

CHANNEL_MODELS = ("quasi_static_rayleigh", "mimo_ofdm", "naf_relay",
                  "mimo_arq", "fixed")

# Stream-kind tags keeping error-rate and outage trials independent.
_KIND_ERROR = 0
_KIND_OUTAGE = 1

_Z95 = 1.959963984540054  # two-sided 95% normal quantile


@dataclass
class ChannelConfig:
    """Which fading model to sample, and its dimensions/parameters."""

    model: str
    nt: int = 1
    nr: int = 1
    tones: int = 1
    taps: int = 1
    h_real: np.ndarray | None = None
    noise: NoiseModel = NoiseModel()
    arq_rounds: int = 1
    arq_x_thresh: float | None = None

    def __post_init__(self):
        if self.model not in CHANNEL_MODELS:
            raise ValueError(f"unknown channel model {self.model!r}")
        if self.nt < 1 or self.nr < 1:
            raise ValueError("nt and nr must be >= 1")
        if self.model == "fixed":
            if self.h_real is None:
                raise ValueError("fixed channel requires h_real")
            self.h_real = as_matrix(self.h_real, "h_real")
        if self.model == "mimo_arq":
            if self.arq_rounds < 1:
                raise ValueError("arq_rounds must be >= 1")
            if self.arq_x_thresh is None:
                raise ValueError("ARQ channel requires x_thresh (no default)")


@dataclass
class SweepConfig:
    """Complete description of one Monte Carlo sweep."""

    design: LatticeDesign
    channel: ChannelConfig
    methods: tuple
    rho_db: tuple
    r: float
    min_errors: int = 50
    max_trials: int = 10**6
    seed: int = 0
    gate_alpha: float | None = None
    gate_delta: float = 0.75
    integer_nesting: bool = False
    node_budget: int = 10**8

    def __post_init__(self):
        self.methods = tuple(self.methods)
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}")
        if not self.methods:
            raise ValueError("need at least one method")
        grid = tuple(float(v) for v in self.rho_db)
        if len(grid) < 2:
            raise ValueError("rho_db grid needs at least two points")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("rho_db grid must be strictly increasing")
        self.rho_db = grid
        if self.r < 0.0:
            raise ValueError("r must be nonnegative")
        if self.min_errors < 20:
            raise ValueError("min_errors must be >= 20")
        if self.max_trials < 1:
            raise ValueError("max_trials must be >= 1")
        needs_gate = any(m in ("lr_sic", "lr_linear") for m in self.methods)
        if needs_gate and self.gate_alpha is None:
            raise ValueError("reduction-aided methods need gate_alpha")

    def gate(self) -> DecodeGate | None:
        if self.gate_alpha is None:
            return None
        return DecodeGate(alpha=self.gate_alpha, delta=self.gate_delta)


@dataclass
class ErrorRateRecord:
    """One (rho, method) cell of a sweep."""

    rho_db: float
    rho_linear: float
    r: float
    method: str
    trials: int
    errors: int
    oob: int        # decoded lattice point fell outside the codebook
    timeouts: int   # reduction gate refused the channel
    p_hat: float
    ci_lo: float
    ci_hi: float

    def __post_init__(self):
        if not (0 < self.trials):
            raise ValueError("trials must be positive")
        if not (0 <= self.errors <= self.trials):
            raise ValueError("errors out of range")
        if self.oob + self.timeouts > self.errors:
            raise ValueError("oob + timeouts cannot exceed errors")
        if not (self.ci_lo <= self.p_hat <= self.ci_hi):
            raise ValueError("confidence interval must contain p_hat")


@dataclass
class SlopeEstimate:
    """Least-squares diversity slope over the top qualifying cells."""

    d_hat: float
    stderr: float
    n_points: int
    rho_db_used: tuple
    method: str | None = None


@dataclass
class OutageEstimate:
    rho_linear: float
    rate_bits: float
    trials: int
    count: int
    p_hat: float
    ci_lo: float
    ci_hi: float


@dataclass
class SweepResult:
    records: list
    slopes: dict  # method -> SlopeEstimate | None


def wilson_interval(errors: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1 or errors < 0 or errors > trials:
        raise ValueError("bad counts")
    p = errors / trials
    zz = z * z
    denom = 1.0 + zz / trials
    center = (p + zz / (2.0 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + zz / (4.0 * trials * trials)) / denom
    lo = max(0.0, center - half)
    hi = min(1.0, center + half)
    # At the extremes the score interval's endpoint equals p exactly;
    # roundoff must not push the bound past the estimate.
    if errors == 0:
        lo = 0.0
    if errors == trials:
        hi = 1.0
    return lo, hi


def _key_from_float(x: float) -> int:
    return int(round(float(x) * 1_000_000)) & 0xFFFFFFFF


def _sample_channel(cfg: ChannelConfig, design: LatticeDesign, rho: float,
                    rng) -> ChannelSample:
    t = design.coding_duration
    if cfg.model == "quasi_static_rayleigh":
        return sample_quasi_static_rayleigh(cfg.nt, cfg.nr, t, rho, rng)
    if cfg.model == "mimo_ofdm":
        if t % cfg.tones != 0:
            raise ValueError("coding duration must be a multiple of the tone count")
        return sample_mimo_ofdm(cfg.nt, cfg.nr, cfg.tones, cfg.taps,
                                t // cfg.tones, rho, rng)
    if cfg.model == "naf_relay":
        return sample_naf_relay(rho, rng)
    if cfg.model == "fixed":
        return fixed_channel(cfg.h_real, rho, channel_uses=t)
    raise ValueError(f"cannot sample model {cfg.model!r} directly")


def _arq_fragments(design: LatticeDesign, rounds: int) -> list:
    """Fragment designs for rounds 1..L by block-tiling the base design.

    Box regions only: the generator goes block diagonal and the box
    half-widths and dither tile across rounds."""
    if design.region.kind != "box":
        raise ValueError("ARQ sweeps support box shaping regions only")
    frags = []
    for l in range(1, rounds + 1):
        gen = np.kron(np.eye(l), design.generator)
        region = ShapingRegion.box(np.tile(design.region.half_widths, l))
        dither = None if design.dither is None else np.tile(design.dither, l)
        frags.append(LatticeDesign(generator=gen, region=region,
                                   coding_duration=l * design.coding_duration,
                                   dither=dither))
    return frags


def _run_cell_trials(config: SweepConfig, rho_db: float, methods) -> list:
    """Shared-trial engine: run one signal level for several methods with
    common per-trial randomness and per-method stopping."""
    rho = 10.0 ** (float(rho_db) / 10.0)
    design = config.design
    n = design.dimension
    phi = scaling_factor(rho, config.r, design.coding_duration, n,
                         integer_nesting=config.integer_nesting)
    codebook = enumerate_codebook(design, phi)
    gate = config.gate()
    rho_key = _key_from_float(rho_db)
    r_key = _key_from_float(config.r)
    noise = config.channel.noise

    state = {m: {"trials": 0, "errors": 0, "oob": 0, "timeouts": 0,
                 "stopped": False} for m in methods}

    if config.channel.model == "mimo_arq":
        fragments = _arq_fragments(design, config.channel.arq_rounds)

    for trial in range(config.max_trials):
        if all(st["stopped"] for st in state.values()):
            break
        rng = trial_rng(config.seed, _KIND_ERROR, rho_key, r_key, trial)

        if config.channel.model == "mimo_arq":
            hc = _arq_channel_draw(config.channel, rng)
            for method, st in state.items():
                if st["stopped"]:
                    continue
                # Episode randomness (message + noise) must be identical
                # across methods: derive it from the trial key, not from
                # the shared channel stream.
                ep_rng = trial_rng(config.seed, _KIND_ERROR, rho_key, r_key,
                                   trial, 1)
                episode = simulate_arq_episode(
                    fragments, hc, rho, config.r,
                    config.channel.arq_x_thresh, method, ep_rng, gate=gate,
                    noise=noise, node_budget=config.node_budget)
                st["trials"] += 1
                if episode.error:
                    st["errors"] += 1
                    if episode.outcome_kind == "out_of_codebook":
                        st["oob"] += 1
                    elif episode.outcome_kind == "timeout":
                        st["timeouts"] += 1
                if st["errors"] >= config.min_errors:
                    st["stopped"] = True
            continue

        sample = _sample_channel(config.channel, design, rho, rng)
        h = sample.h_real
        if h.shape[1] != n:
            raise ValueError(
                f"channel gives {h.shape[1]} input dims, design has {n}")
        msg = int(rng.integers(codebook.size))
        x = codebook.points[msg]
        w = _draw_noise(h.shape[0], noise, x, rng)
        y = h @ x + w
        truth = codebook.coords[msg]
        for method, st in state.items():
            if st["stopped"]:
                continue
            outcome = decode(y, h, design, phi, method, rho=rho, gate=gate,
                             codebook=codebook, node_budget=config.node_budget)
            st["trials"] += 1
            if outcome.kind == "timeout":
                st["errors"] += 1
                st["timeouts"] += 1
            elif outcome.kind == "out_of_codebook":
                st["errors"] += 1
                st["oob"] += 1
            elif not np.array_equal(outcome.coords, truth):
                st["errors"] += 1
            if st["errors"] >= config.min_errors:
                st["stopped"] = True

    records = []
    for method in methods:
        st = state[method]
        trials = st["trials"]
        lo, hi = wilson_interval(st["errors"], trials)
        records.append(ErrorRateRecord(
            rho_db=float(rho_db), rho_linear=rho, r=float(config.r),
            method=method, trials=trials, errors=st["errors"], oob=st["oob"],
            timeouts=st["timeouts"], p_hat=st["errors"] / trials,
            ci_lo=lo, ci_hi=hi))
    return records


def _arq_channel_draw(cfg: ChannelConfig, rng) -> np.ndarray:
    from .channels import complex_gaussian
    return complex_gaussian(rng, (cfg.nr, cfg.nt))


def _draw_noise(m: int, noise: NoiseModel, x, rng) -> np.ndarray:
    from .channels import sample_noise
    return sample_noise(m, noise, x, rng)


def estimate_error_rate(config: SweepConfig, rho_db: float,
                        method: str) -> ErrorRateRecord:
    """Error rate of one (rho, method) cell: i.i.d. trials of
    channel -> uniform codeword -> noise -> decode, stopping at
    min_errors errors or max_trials.  Out-of-codebook and timeout
    outcomes count as errors."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    return _run_cell_trials(config, rho_db, [method])[0]


def sweep_cell(config: SweepConfig, rho_db: float) -> list:
    """All methods of one signal level, sharing per-trial randomness."""
    return _run_cell_trials(config, rho_db, list(config.methods))


def estimate_outage_probability(rho: float, rate_bits: float, t: int,
                                channel: ChannelConfig, trials: int,
                                seed: int = 0) -> OutageEstimate:
    """Frequency of the mutual-information outage event
    log2 det(I + H H^T) < 2 * rate_bits * t over channel draws."""
    if trials < 1000:
        raise ValueError("use at least 1000 trials for outage estimates")
    if rate_bits < 0.0:
        raise ValueError("rate must be nonnegative")
    rho_key = _key_from_float(10.0 * math.log10(rho))
    # Real embedding needs a design duration; build a throwaway design-less
    # sample via the channel config with duration t.
    dummy = _DurationOnly(t)
    count = 0
    threshold = 2.0 * rate_bits * t
    for trial in range(trials):
        rng = trial_rng(seed, _KIND_OUTAGE, rho_key, 0, trial)
        sample = _sample_channel(channel, dummy, rho, rng)
        h = sample.h_real
        gram = np.eye(h.shape[0]) + h @ h.T
        u = cholesky_upper(0.5 * (gram + gram.T))
        log2det = 2.0 * float(np.sum(np.log2(np.diag(u))))
        if log2det < threshold:
            count += 1
    lo, hi = wilson_interval(count, trials)
    return OutageEstimate(rho_linear=float(rho), rate_bits=float(rate_bits),
                          trials=trials, count=count, p_hat=count / trials,
                          ci_lo=lo, ci_hi=hi)


class _DurationOnly:
    """Minimal stand-in with just the field the samplers read."""

    def __init__(self, t: int):
        self.coding_duration = t


def estimate_diversity_slope(records, min_errors: int = 50,
                             top_points: int = 3) -> SlopeEstimate:
    """Fit -log10(p_hat) against log10(rho) by least squares over the
    highest qualifying signal levels (errors >= min_errors, p_hat < 0.5).

    Raises InsufficientData with fewer than two qualifying cells."""
    qual = [rec for rec in records
            if rec.errors >= min_errors and rec.p_hat < 0.5]
    if len(qual) < 2:
        raise InsufficientData(
            f"need >= 2 qualifying cells, have {len(qual)}")
    qual.sort(key=lambda rec: rec.rho_linear)
    use = qual[-top_points:]
    x = np.array([math.log10(rec.rho_linear) for rec in use])
    y = np.array([-math.log10(rec.p_hat) for rec in use])
    xbar = float(np.mean(x))
    ybar = float(np.mean(y))
    sxx = float(np.sum((x - xbar) ** 2))
    if sxx <= 0.0:
        raise InsufficientData("qualifying cells share one signal level")
    slope = float(np.sum((x - xbar) * (y - ybar))) / sxx
    resid = y - (ybar + slope * (x - xbar))
    dof = len(use) - 2
    stderr = math.sqrt(float(resid @ resid) / dof / sxx) if dof > 0 else 0.0
    methods = {rec.method for rec in use}
    return SlopeEstimate(d_hat=slope, stderr=stderr, n_points=len(use),
                         rho_db_used=tuple(rec.rho_db for rec in use),
                         method=methods.pop() if len(methods) == 1 else None)


def run_sweep(config: SweepConfig, cell_runner=None) -> SweepResult:
    """Run every (rho, method) cell and fit one slope per method.

    `cell_runner` lets the CLI substitute a parallel map over signal
    levels; results are identical either way because each cell's trials
    are keyed by (seed, rho, r, trial) alone."""
    if cell_runner is None:
        per_rho = [sweep_cell(config, rho_db) for rho_db in config.rho_db]
    else:
        per_rho = cell_runner(config)
    records = [rec for cell in per_rho for rec in cell]
    slopes = {}
    for method in config.methods:
        recs = [rec for rec in records if rec.method == method]
        try:
            slopes[method] = estimate_diversity_slope(
                recs, min_errors=config.min_errors)
        except InsufficientData:
            slopes[method] = None
    return SweepResult(records=records, slopes=slopes)


def dmt_reference_breakpoints(nt: int, nr: int, taps: int | None = None):
    """Corner points (k, d) of the reference diversity-multiplexing curve:
    flat fading gives ((nr-k)(nt-k)); `taps` selects the ISI variant
    ((taps*nmax - k)(nmin - k))."""
    if nt < 1 or nr < 1:
        raise ValueError("nt and nr must be >= 1")
    nmin = min(nt, nr)
    pts = []
    for k in range(nmin + 1):
        if taps is None:
            pts.append((k, float((nr - k) * (nt - k))))
        else:
            if taps < 1:
                raise ValueError("taps must be >= 1")
            pts.append((k, float((taps * max(nt, nr) - k) * (nmin - k))))
    return pts


def dmt_reference_value(r: float, nt: int, nr: int,
                        taps: int | None = None) -> float:
    """Piecewise-linear reference curve evaluated at multiplexing rate r."""
    pts = dmt_reference_breakpoints(nt, nr, taps)
    xs = np.array([p[0] for p in pts], dtype=np.float64)
    ys = np.array([p[1] for p in pts], dtype=np.float64)
    if r < 0.0:
        raise ValueError("r must be nonnegative")
    if r >= xs[-1]:
        return 0.0
    return float(np.interp(r, xs, ys))
