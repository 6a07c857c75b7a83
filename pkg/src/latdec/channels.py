"""Fading-channel samplers, the real embedding, and noise models.

Complex channels are numpy complex128 arrays.  Every sampler returns the
real-embedded matrix actually used by the decoders:

    H = sqrt(rho) * I_T (x) [[Re Hc, -Im Hc], [Im Hc, Re Hc]]

so a length-2*nT*T real input vector stacks [Re x_t; Im x_t] per channel
use.  The signal level rho rides inside H; noise is unit variance per
real dimension.

Randomness: all Gaussians come from explicit Box-Muller over a
counter-based generator (Philox keyed through SeedSequence), so replays
are bit-identical across platforms.  `trial_rng` derives one independent
stream per (experiment seed, integer key tuple).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import LatticeDesign, enumerate_codebook, scaling_factor
from .numkernel import as_matrix, as_vector

__all__ = [
    "ChannelSample",
    "NoiseModel",
    "ArqEpisode",
    "trial_rng",
    "standard_normal",
    "complex_gaussian",
    "embed_complex",
    "sample_quasi_static_rayleigh",
    "sample_mimo_ofdm",
    "sample_naf_relay",
    "fixed_channel",
    "arq_ack",
    "simulate_arq_episode",
    "sample_noise",
]


@dataclass
class ChannelSample:
    """One channel draw: the real-embedded matrix plus bookkeeping."""

    h_real: np.ndarray
    model_tag: str
    rho: float
    parent: np.ndarray | None = None   # complex parent (or tone stack)
    channel_uses: int = 1
    extras: dict = field(default_factory=dict)


@dataclass(frozen=True)
class NoiseModel:
    """Additive noise: i.i.d. unit Gaussians, optionally plus a random
    self-interference term E x with E entries N(0, sigma_e^2/(m n)).

    `scale` multiplies the whole noise vector; 0 gives a noiseless
    channel for oracle checks."""

    kind: str = "gaussian_unit"
    sigma_e: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("gaussian_unit", "self_interference"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.sigma_e < 0.0 or self.scale < 0.0:
            raise ValueError("sigma_e and scale must be nonnegative")


def trial_rng(seed: int, *key: int) -> np.random.Generator:
    """Counter-based per-trial stream: hash (seed, key...) into a Philox
    generator.  Same inputs give the same stream on every platform."""
    entropy = int(seed) & (2**64 - 1)
    spawn = tuple(int(k) & 0xFFFFFFFF for k in key)
    ss = np.random.SeedSequence(entropy=entropy, spawn_key=spawn)
    return np.random.Generator(np.random.Philox(ss))


def standard_normal(rng, size: int) -> np.ndarray:
    """size i.i.d. N(0, 1) samples via Box-Muller."""
    if size < 0:
        raise ValueError("size must be nonnegative")
    pairs = (size + 1) // 2
    if pairs == 0:
        return np.zeros(0)
    u1 = 1.0 - rng.random(pairs)   # (0, 1]: keeps the log finite
    u2 = rng.random(pairs)
    rad = np.sqrt(-2.0 * np.log(u1))
    out = np.empty(2 * pairs)
    out[0::2] = rad * np.cos(2.0 * np.pi * u2)
    out[1::2] = rad * np.sin(2.0 * np.pi * u2)
    return out[:size]


def complex_gaussian(rng, shape) -> np.ndarray:
    """Circular complex Gaussians, unit variance per entry (so the real
    and imaginary parts each carry variance 1/2)."""
    count = int(np.prod(shape)) if np.ndim(shape) else int(shape)
    if count == 0:
        return np.zeros(shape, dtype=np.complex128)
    u1 = 1.0 - rng.random(count)
    u2 = rng.random(count)
    rad = np.sqrt(-np.log(u1))     # variance 1/2 per quadrature
    z = rad * np.cos(2.0 * np.pi * u2) + 1j * rad * np.sin(2.0 * np.pi * u2)
    return z.reshape(shape)


def _as_complex_matrix(hc, name: str = "Hc") -> np.ndarray:
    hc = np.asarray(hc, dtype=np.complex128)
    if hc.ndim != 2:
        raise ValueError(f"{name} must be 2-D")
    if hc.size and not np.all(np.isfinite(hc.real) & np.isfinite(hc.imag)):
        raise ValueError(f"{name} contains NaN or Inf")
    return hc


def embed_complex(hc, t: int, rho: float) -> np.ndarray:
    """Real embedding of a complex channel over t uses, with the signal
    level folded in: sqrt(rho) * I_t (x) [[Re, -Im], [Im, Re]]."""
    hc = _as_complex_matrix(hc)
    if t < 1:
        raise ValueError("t must be >= 1")
    if not (rho > 0.0):
        raise ValueError("rho must be positive")
    block = np.block([[hc.real, -hc.imag], [hc.imag, hc.real]])
    return math.sqrt(rho) * np.kron(np.eye(t), block)


def sample_quasi_static_rayleigh(nt: int, nr: int, t: int, rho: float,
                                 rng) -> ChannelSample:
    """i.i.d. unit-variance complex Gaussian fading, constant over the
    coding block."""
    hc = complex_gaussian(rng, (nr, nt))
    return ChannelSample(h_real=embed_complex(hc, t, rho),
                         model_tag="quasi_static_rayleigh", rho=rho,
                         parent=hc, channel_uses=t)


def sample_mimo_ofdm(nt: int, nr: int, tones: int, taps: int, t: int,
                     rho: float, rng) -> ChannelSample:
    """Frequency-selective block fading: `taps` i.i.d. matrix taps, a DFT
    across `tones` parallel tones, block-diagonal real embedding.

    One codeword spans tones * t channel uses."""
    if tones < 1 or taps < 1:
        raise ValueError("tones and taps must be >= 1")
    tap_mats = complex_gaussian(rng, (taps, nr, nt))
    tone_mats = np.zeros((tones, nr, nt), dtype=np.complex128)
    for l in range(tones):
        phase = np.exp(-2j * np.pi * np.arange(taps) * l / tones)
        tone_mats[l] = np.tensordot(phase, tap_mats, axes=(0, 0))
    blocks = [embed_complex(tone_mats[l], t, rho) for l in range(tones)]
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    h = np.zeros((rows, cols))
    ro = co = 0
    for b in blocks:
        h[ro:ro + b.shape[0], co:co + b.shape[1]] = b
        ro += b.shape[0]
        co += b.shape[1]
    return ChannelSample(h_real=h, model_tag="mimo_ofdm", rho=rho,
                         parent=tone_mats, channel_uses=tones * t,
                         extras={"taps": taps, "tones": tones})


def sample_naf_relay(rho: float, rng) -> ChannelSample:
    """Single-relay nonorthogonal amplify-and-forward cooperation,
    whitened into an equivalent 2x2 complex channel.

    h1: source-destination, h2: source-relay, h3: relay-destination.
    The relay gain b is maximal under its unit power constraint,
    |b|^2 (rho |h2|^2 + 1) = 1.  Amplified relay noise is whitened away,
    leaving the lower-triangular equivalent matrix.  One codeword spans
    two channel uses."""
    draws = complex_gaussian(rng, 3)
    h1, h2, h3 = draws[0], draws[1], draws[2]
    b = 1.0 / math.sqrt(rho * abs(h2) ** 2 + 1.0)
    denom = math.sqrt(rho * abs(b * h3) ** 2 + 1.0)
    hc = np.array([
        [h1, 0.0],
        [math.sqrt(rho) * b * h2 * h3 / denom, h1 / denom],
    ], dtype=np.complex128)
    return ChannelSample(h_real=embed_complex(hc, 1, rho),
                         model_tag="naf_relay", rho=rho, parent=hc,
                         channel_uses=2,
                         extras={"b": b, "h1": h1, "h2": h2, "h3": h3})


def fixed_channel(h_real, rho: float, channel_uses: int = 1) -> ChannelSample:
    """Deterministic channel wrapper for oracle and regression tests."""
    return ChannelSample(h_real=as_matrix(h_real, "h_real"),
                         model_tag="fixed", rho=rho,
                         channel_uses=channel_uses)


def arq_ack(hc, rho: float, x_thresh: float, round_index: int) -> bool:
    """Rate-confirmation rule for round l: the per-round mutual
    information log det(I + rho Hc Hc^H) must reach (x/l) log rho.
    Natural logs on both sides (the base cancels)."""
    hc = _as_complex_matrix(hc)
    if not (rho > 0.0):
        raise ValueError("rho must be positive")
    if round_index < 1:
        raise ValueError("round_index must be >= 1")
    gram = np.eye(hc.shape[0], dtype=np.complex128) + rho * (hc @ hc.conj().T)
    sign, logdet = np.linalg.slogdet(gram)
    if sign.real <= 0.0:
        raise ArithmeticError("mutual-information Gram matrix not positive")
    return bool(logdet >= (x_thresh / round_index) * math.log(rho))


@dataclass
class ArqEpisode:
    """One incremental-redundancy episode."""

    rounds_used: int
    error: bool
    ack_history: list
    outcome_kind: str
    message: int


def simulate_arq_episode(fragments, hc, rho: float, r1: float,
                         x_thresh: float, method: str, rng,
                         gate=None, noise: NoiseModel | None = None,
                         node_budget: int = 10**8) -> ArqEpisode:
    """Run one ARQ episode over long-term static fading.

    `fragments[l-1]` is the design decoded after round l (its coding
    duration covers rounds 1..l, and its rate is r1/l).  A message index
    is drawn uniformly and encoded by each fragment through its canonical
    codebook order; per-round noise is drawn once and shared by every
    fragment that includes the round.  Rounds 1..L-1 decode only on ACK;
    round L always decodes.  The episode errs iff the decoded index at
    the stopping round differs from the transmitted one."""
    from .decoders import decode  # local import to avoid a cycle

    if noise is None:
        noise = NoiseModel()
    hc = _as_complex_matrix(hc)
    rounds = len(fragments)
    if rounds < 1:
        raise ValueError("need at least one fragment design")
    base = fragments[0]
    t_round = base.coding_duration
    h_round = embed_complex(hc, t_round, rho)
    m_round = h_round.shape[0]
    dim_round = h_round.shape[1]
    for l, frag in enumerate(fragments, start=1):
        if frag.dimension != l * dim_round:
            raise ValueError(
                f"fragment {l} dimension {frag.dimension} != {l} rounds x {dim_round}"
            )
        if frag.coding_duration != l * t_round:
            raise ValueError(f"fragment {l} coding duration must be {l * t_round}")

    phis = [scaling_factor(rho, r1 / l, frag.coding_duration, frag.dimension)
            for l, frag in enumerate(fragments, start=1)]
    books = [enumerate_codebook(frag, phi) for frag, phi in zip(fragments, phis)]
    n_messages = min(book.size for book in books)

    message = int(rng.integers(n_messages))

    # Draw per-round noise ingredients up front so every fragment sees the
    # same realization of the rounds it includes.
    vs = []
    es = []
    for _ in range(rounds):
        if noise.kind == "self_interference":
            scale_e = noise.sigma_e / math.sqrt(m_round * dim_round)
            es.append(scale_e * standard_normal(rng, m_round * dim_round)
                      .reshape(m_round, dim_round))
        else:
            es.append(None)
        vs.append(standard_normal(rng, m_round))

    ack_history = []
    for l in range(1, rounds + 1):
        frag = fragments[l - 1]
        book = books[l - 1]
        x = book.points[message]
        h_l = np.kron(np.eye(l), h_round)
        w_parts = []
        for j in range(l):
            chunk = x[j * dim_round:(j + 1) * dim_round]
            wj = vs[j].copy()
            if es[j] is not None:
                wj = es[j] @ chunk + wj
            w_parts.append(noise.scale * wj)
        y = h_l @ x + np.concatenate(w_parts)
        last_round = l == rounds
        ack = True if last_round else arq_ack(hc, rho, x_thresh, l)
        ack_history.append(bool(ack))
        if not ack:
            continue
        outcome = decode(y, h_l, frag, phis[l - 1], method, rho=rho,
                         gate=gate, codebook=book, node_budget=node_budget)
        err = not (outcome.is_codeword
                   and np.array_equal(outcome.coords, book.coords[message]))
        return ArqEpisode(rounds_used=l, error=bool(err),
                          ack_history=ack_history,
                          outcome_kind=outcome.kind, message=message)
    raise AssertionError("unreachable: final round always decodes")


def sample_noise(m: int, model: NoiseModel, x, rng) -> np.ndarray:
    """Draw one noise vector of length m for transmitted signal x."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if model.kind == "gaussian_unit":
        return model.scale * standard_normal(rng, m)
    x = as_vector(x, "x")
    n = x.shape[0]
    scale_e = model.sigma_e / math.sqrt(m * n)
    e = scale_e * standard_normal(rng, m * n).reshape(m, n)
    return model.scale * (e @ x + standard_normal(rng, m))
