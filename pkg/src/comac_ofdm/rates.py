"""Monte Carlo evaluators for the achievable computation-rate families.

Every family is a closed-form expression in the order statistics of i.i.d.
unit-exponential channel gains, averaged over trials. A single core
evaluator covers all four average-power families, so the single-carrier
reductions (direct-OFDM at N=1 equals the conventional rate, SFA at N=1
equals the opportunistic rate) hold per realization by construction:

    rate(K, M, N) = (M/K) * E[ C+( N/M + g_(M) * K * P / (M * Gamma(K, M)) ) ]

with M = K for the conventional (N=1) and direct-OFDM families.

Gamma(K, M) is the power-normalization expectation
(1/M) * sum_{j<=M} E[g_(M)/g_(j)], taken over the M chosen nodes; this is
the unique finite reading for exponential gains, since the reciprocal of an
independent gain has no finite mean.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import (
    CHUNK_TRIALS,
    LN2,
    STREAM_GAIN,
    STREAM_GAMMA,
    ChannelTensor,
    SimParams,
    cplus,
)

DEFAULT_GAMMA_TRIALS = 200_000


@dataclass(frozen=True)
class GammaEstimate:
    """Monte Carlo estimate of Gamma(K, M) with its standard error."""

    value: float
    stderr: float
    k: int
    m: int
    trials: int


@dataclass(frozen=True)
class RateEstimate:
    """Monte Carlo mean rate in bits per channel use."""

    mean: float
    stderr: float
    trials: int
    params: SimParams
    family: str


_gamma_cache: dict[tuple, GammaEstimate] = {}


def _chunk_sizes(trials):
    sizes = []
    done = 0
    while done < trials:
        sizes.append(min(CHUNK_TRIALS, trials - done))
        done += sizes[-1]
    return sizes


def _map_chunks(fn, sizes, workers):
    """Evaluate fn(chunk_index, size) per chunk, in chunk order.

    Partial results are combined in index order regardless of how many
    workers ran them, so parallel and serial execution agree exactly.
    """
    if workers <= 1:
        return [fn(i, s) for i, s in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(len(sizes)), sizes))


def estimate_gamma(k, m, trials=DEFAULT_GAMMA_TRIALS, seed=0, workers=1):
    """Estimate Gamma(K, M) = (1/M) * sum_{j=1}^{M} E[g_(M)/g_(j)] over
    i.i.d. unit-exponential gains sorted in descending order."""
    if not 1 <= m <= k:
        raise ValueError(f"need 1 <= m <= k, got m={m}, k={k}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    key = (k, m, trials, seed)
    cached = _gamma_cache.get(key)
    if cached is not None:
        return cached

    def chunk(idx, size):
        rng = np.random.default_rng([seed, STREAM_GAMMA, idx])
        g = rng.exponential(size=(size, k))
        top = np.partition(g, k - m, axis=1)[:, k - m :]  # top-m gains per row
        g_m = top.min(axis=1, keepdims=True)
        vals = (g_m / top).mean(axis=1)
        return float(vals.sum()), float((vals * vals).sum())

    parts = _map_chunks(chunk, _chunk_sizes(trials), workers)
    total = sum(p[0] for p in parts)
    total_sq = sum(p[1] for p in parts)
    mean = total / trials
    var = max(total_sq - trials * mean * mean, 0.0) / max(trials - 1, 1)
    est = GammaEstimate(mean, float(np.sqrt(var / trials)), k, m, trials)
    _gamma_cache[key] = est
    return est


def _rate_core(params, m_eff, n_eff, family, gamma_trials, workers):
    """Shared evaluator: (M/K) * C+( N/M + g_(M) * K * P / (M * Gamma) )."""
    k, p = params.k, params.power
    gamma = estimate_gamma(k, m_eff, gamma_trials, params.seed, workers)
    scale = k * p / (m_eff * gamma.value)
    const = n_eff / m_eff
    prefactor = m_eff / k

    def chunk(idx, size):
        rng = np.random.default_rng([params.seed, STREAM_GAIN, idx])
        g = rng.exponential(size=(size, k))
        g_m = np.partition(g, k - m_eff, axis=1)[:, k - m_eff]
        arg = const + g_m * scale
        vals = prefactor * cplus(arg)
        # d(rate)/d(Gamma), for first-order propagation of the Gamma stderr
        active = arg > 1.0
        dvals = np.zeros_like(arg)
        dvals[active] = (
            -prefactor * g_m[active] * scale / (gamma.value * 2 * LN2 * arg[active])
        )
        return float(vals.sum()), float((vals * vals).sum()), float(dvals.sum())

    parts = _map_chunks(chunk, _chunk_sizes(params.trials), workers)
    t = params.trials
    total = sum(p[0] for p in parts)
    total_sq = sum(p[1] for p in parts)
    total_dg = sum(p[2] for p in parts)
    mean = total / t
    var = max(total_sq - t * mean * mean, 0.0) / max(t - 1, 1)
    se_mc = float(np.sqrt(var / t))
    se_gamma = abs(total_dg / t) * gamma.stderr
    return RateEstimate(
        mean=mean,
        stderr=float(np.hypot(se_mc, se_gamma)),
        trials=t,
        params=params,
        family=family,
    )


def rate_conventional(params, gamma_trials=DEFAULT_GAMMA_TRIALS, workers=1):
    """All K nodes, single carrier, average power constraint."""
    return _rate_core(params, params.k, 1, "conventional", gamma_trials, workers)


def rate_opportunistic(params, gamma_trials=DEFAULT_GAMMA_TRIALS, workers=1):
    """Top-M nodes per slot, single carrier; requires M | K."""
    params.subfunction_count
    return _rate_core(params, params.m, 1, "opportunistic", gamma_trials, workers)


def rate_direct_ofdm(params, gamma_trials=DEFAULT_GAMMA_TRIALS, workers=1):
    """Whole desired function on each of N sub-carriers, all K nodes."""
    return _rate_core(params, params.k, params.n, "direct-ofdm", gamma_trials, workers)


def rate_sfa_avg(params, gamma_trials=DEFAULT_GAMMA_TRIALS, workers=1):
    """Sub-function allocation over N sub-carriers with the average-power
    rule; requires M | K."""
    params.subfunction_count
    return _rate_core(params, params.m, params.n, "sfa-avg", gamma_trials, workers)


def rate_general(channel: ChannelTensor, power, assignment, params: SimParams):
    """Deterministic time-average rate for explicit channel, power and
    assignment tensors of shape (K, N, T_s)."""
    gains = channel.gains
    power = np.asarray(power, dtype=float)
    assignment = np.asarray(assignment)
    k, n = params.k, params.n
    if gains.shape[:2] != (k, n):
        raise ValueError(f"channel shape {gains.shape} does not match params")
    if power.shape != gains.shape or assignment.shape != gains.shape:
        raise ValueError("power and assignment must match the channel shape")
    if np.any(power < 0):
        raise ValueError("power entries must be nonnegative")
    chosen = assignment.astype(bool)
    if not np.all(chosen.sum(axis=0) == params.m):
        raise ValueError(f"every assignment column must select exactly m={params.m} nodes")
    prod = np.where(chosen, gains * power, np.inf)
    min_prod = prod.min(axis=0)  # (N, T_s)
    per_symbol = cplus(n / params.m + n * min_prod).sum(axis=0)
    return float(params.m / (k * n) * per_symbol.mean())


def subfunction_rate_instant(gains_col, power_col, chosen, m, n):
    """Instantaneous single sub-function rate on one sub-carrier:
    (1/N) * C+( N/M + N * min_{i in chosen} |h_i|^2 P_i )."""
    chosen = sorted(chosen)
    if len(chosen) != m or m < 1:
        raise ValueError(f"chosen must contain exactly m={m} node indexes")
    g = np.asarray(gains_col, dtype=float)
    p = np.asarray(power_col, dtype=float)
    idx = np.asarray(chosen, dtype=int) - 1
    if idx.min() < 0 or idx.max() >= g.size:
        raise ValueError("chosen node index out of range")
    return float(cplus(n / m + n * np.min(g[idx] * p[idx])) / n)
