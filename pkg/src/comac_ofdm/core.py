"""Scalar primitives, channel generation and gain ordering.

All randomness is keyed by (seed, stream tag, counter) so that serial and
parallel evaluation of the same scenario produce bit-identical draws.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Stream tags separating independent RNG substreams under one master seed.
STREAM_CHANNEL = 1
STREAM_GAIN = 2
STREAM_GAMMA = 3
STREAM_DATA = 4

# Trials are drawn in fixed-size chunks; chunk c of a stream uses
# default_rng([seed, stream, c]). Partial sums are combined in chunk order,
# so a parallel map over chunks reproduces the serial result exactly.
CHUNK_TRIALS = 8192

LN2 = float(np.log(2.0))


def snr_db_to_linear(snr_db):
    """Convert an SNR in dB to the linear power budget P."""
    return float(10.0 ** (snr_db / 10.0))


@dataclass(frozen=True)
class SimParams:
    """Scenario record governing a run.

    k: node count; m: chosen nodes per sub-function; n: sub-carrier count;
    power: per-node budget in linear scale (SNR in dB converts via
    snr_db_to_linear); trials: Monte Carlo trial count; seed: master seed.
    """

    k: int
    m: int
    n: int
    power: float
    trials: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"node count must be positive, got {self.k}")
        if not 1 <= self.m <= self.k:
            raise ValueError(f"m must satisfy 1 <= m <= k, got m={self.m}, k={self.k}")
        if self.n < 1:
            raise ValueError(f"sub-carrier count must be positive, got {self.n}")
        if not self.power > 0:
            raise ValueError(f"power budget must be positive, got {self.power}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")

    @property
    def subfunction_count(self):
        """B = K/M; defined only when M divides K."""
        if self.k % self.m:
            raise ValueError(
                f"m={self.m} does not divide k={self.k}; "
                "partition scenarios require an integer number of sub-functions"
            )
        return self.k // self.m

    def with_m(self, m):
        return SimParams(self.k, m, self.n, self.power, self.trials, self.seed)


@dataclass(frozen=True)
class ChannelTensor:
    """Complex frequency responses h[i, g, m] for K nodes x N sub-carriers x
    T_s OFDM symbols. Entries are i.i.d. CN(0, 1)."""

    entries: np.ndarray

    @property
    def symbols(self):
        return self.entries.shape[2]

    @property
    def gains(self):
        """|h|^2, unit-mean exponential under the CN(0,1) fading law."""
        return np.abs(self.entries) ** 2


def cplus(x):
    """max(0.5*log2(x), 0), elementwise; zero for x <= 1, error for x < 0."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0):
        raise ValueError("cplus is defined on nonnegative arguments only")
    out = np.zeros_like(arr)
    mask = arr > 1.0
    if mask.any():
        out[mask] = 0.5 * np.log2(arr[mask])
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


def draw_channel(params: SimParams, symbols: int, trial: int) -> ChannelTensor:
    """i.i.d. CN(0,1) channel tensor, deterministic given (seed, trial)."""
    if symbols < 1:
        raise ValueError(f"symbols must be positive, got {symbols}")
    rng = np.random.default_rng([params.seed, STREAM_CHANNEL, trial])
    shape = (params.k, params.n, symbols)
    entries = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    entries *= np.sqrt(0.5)
    return ChannelTensor(entries)


def order_indexes(gains):
    """Gain-descending permutation of 1-based node indexes.

    Ties break toward the smaller node index (stable sort), which keeps the
    ordering deterministic even for degenerate gain draws.
    """
    g = np.asarray(gains, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise ValueError("gains must be a non-empty 1-D sequence")
    if np.any(g < 0):
        raise ValueError("gains must be nonnegative")
    return np.argsort(-g, kind="stable") + 1


def gain_chunks(seed, k, trials, stream=STREAM_GAIN):
    """Yield (chunk_index, gains) pairs of unit-exponential |h|^2 draws.

    Chunk boundaries are fixed at CHUNK_TRIALS so the draw sequence depends
    only on (seed, stream, chunk index), never on execution order.
    """
    done = 0
    chunk = 0
    while done < trials:
        size = min(CHUNK_TRIALS, trials - done)
        rng = np.random.default_rng([seed, stream, chunk])
        yield chunk, rng.exponential(size=(size, k))
        done += size
        chunk += 1
