"""Acceptance gate: ten criteria, one pass/fail line each.

Run with ``pytest tests/test_acceptance.py -v -s``. Criteria 8 and 9 encode
trend claims that the implemented formulas do not reproduce; they are kept
faithful to their stated form and allowed to fail rather than weakened.
"""

import numpy as np
import pytest

from comac_ofdm.cli import write_csv
from comac_ofdm.combinatorics import (
    count_combinations,
    count_subfunction_sets,
    enumerate_combinations,
    enumerate_subfunction_sets,
)
from comac_ofdm.core import SimParams, cplus, gain_chunks
from comac_ofdm.experiments import (
    SweepSpec,
    divisors,
    optimal_subfunction_count,
    run_sweep,
    top_set_counts,
)
from comac_ofdm.power import (
    build_assignment,
    equal_split_eta,
    objective_rate,
    oracle_solve,
    sponge_squeeze,
    verify_kkt,
)
from comac_ofdm.rates import (
    estimate_gamma,
    rate_conventional,
    rate_direct_ofdm,
    rate_opportunistic,
    rate_sfa_avg,
)
from comac_ofdm.sources import (
    arithmetic_sum,
    eval_desired,
    eval_subfunction,
    reconstruct,
    type_function,
)


def _report(num, name, passed, detail):
    print(f"\n[{'PASS' if passed else 'FAIL'}] acceptance {num} ({name}): {detail}")
    assert passed, f"acceptance {num} ({name}): {detail}"


def test_acceptance_1_reduction_identities():
    params = SimParams(16, 4, 1, 10.0, trials=10_000, seed=0)
    conv = rate_conventional(params)
    direct = rate_direct_ofdm(params)
    opp = rate_opportunistic(params)
    sfa = rate_sfa_avg(params)
    d1 = abs(direct.mean - conv.mean)
    d2 = abs(sfa.mean - opp.mean)
    _report(1, "reduction identities",
            d1 == 0.0 and d2 == 0.0,
            f"direct-vs-conventional diff={d1}, sfa-vs-opportunistic diff={d2}")


def test_acceptance_2_optimizer_correctness():
    rng = np.random.default_rng(2024)
    worst_rel = worst_res = worst_gap = 0.0
    for i in range(100):
        k = int(rng.integers(2, 7))
        n = int(rng.integers(2, 9))
        m = int(rng.integers(1, k + 1))
        p = [0.5, 1.0, 10.0][i % 3]
        gains = rng.exponential(size=(k, n))
        params = SimParams(k, m, n, p, trials=1, seed=0)
        omega = build_assignment(gains, m)
        sol = sponge_squeeze(gains, omega, params)
        ora = oracle_solve(gains, omega, params)
        worst_rel = max(worst_rel, abs(sol.objective - ora.objective)
                        / max(abs(ora.objective), 1e-12))
        rep = verify_kkt(sol, gains, omega, params)
        worst_res = max(worst_res, rep.feasibility, rep.slackness, rep.stationarity)
        worst_gap = max(worst_gap, rep.power_gap / p)
    _report(2, "optimizer vs oracle",
            worst_rel < 1e-6 and worst_res < 1e-6 and worst_gap < 1e-8,
            f"worst rel objective diff={worst_rel:.2e}, worst residual={worst_res:.2e}, "
            f"worst max-power gap={worst_gap:.2e}*P over 100 instances")


def test_acceptance_3_per_realization_dominance():
    params = SimParams(16, 4, 8, 10.0, trials=1, seed=0)
    violations = 0
    worst = 0.0
    for trial in range(10_000):
        rng = np.random.default_rng([0, 5, trial])
        gains = rng.exponential(size=(16, 8))
        omega = build_assignment(gains, 4)
        sol = sponge_squeeze(gains, omega, params)
        base = objective_rate(equal_split_eta(gains, omega, params), params)
        short = base - sol.objective
        worst = max(worst, short)
        if short > 1e-10:
            violations += 1
    _report(3, "dominance over equal split",
            violations == 0,
            f"{violations} violations beyond 1e-10 in 10^4 realizations "
            f"(worst shortfall {worst:.2e})")


def test_acceptance_4_gamma_oracle():
    est = estimate_gamma(2, 2, trials=1_000_000, seed=0)
    err = abs(est.value - np.log(2.0))
    unit = estimate_gamma(1, 1, trials=1_000, seed=0)
    _report(4, "Gamma oracle",
            err < 3 * est.stderr and unit.value == 1.0,
            f"Gamma(2,2)={est.value:.6f} vs ln2, err={err:.2e} "
            f"(3*stderr={3*est.stderr:.2e}); Gamma(1,1)={unit.value}")


def test_acceptance_5_top_set_frequencies():
    k, m, draws = 4, 2, 100_000
    counts = top_set_counts(k, m, draws, seed=0)
    n_sets = count_subfunction_sets(k, m)
    expect = draws / n_sets
    sigma = np.sqrt(draws * (1 / n_sets) * (1 - 1 / n_sets))
    worst = max(abs(counts.get(s, 0) - expect)
                for s in enumerate_subfunction_sets(k, m))
    formulas_ok = (n_sets == 6 and count_combinations(k, m) == 6
                   and len(enumerate_combinations(k, m)) == 6)
    _report(5, "top-set frequencies",
            len(counts) == n_sets and worst <= 3 * sigma and formulas_ok,
            f"6 sets, worst count deviation {worst:.0f} vs 3sigma={3*sigma:.0f}; "
            f"|S|={n_sets}, |Q|={count_combinations(k, m)}")


def test_acceptance_6_reconstruction_exactness():
    k, m, p = 4, 2, 3
    combos = enumerate_combinations(k, m)
    specs = (arithmetic_sum(k), type_function(p))
    mismatches = 0
    for row_id in range(p**k):
        row = [(row_id // p**i) % p for i in range(k)]
        for spec in specs:
            want = eval_desired(spec, row)
            for combo in combos:
                subs = [eval_subfunction(spec, row, part) for part in combo]
                if not np.array_equal(reconstruct(spec, subs, combo), want):
                    mismatches += 1
    _report(6, "reconstruction exactness",
            mismatches == 0,
            f"{mismatches} mismatches over {p**k} rows x {len(combos)} "
            f"combinations x {len(specs)} families")


def test_acceptance_7_fig4_shape():
    k, p, trials = 128, 10.0, 10_000
    divs = divisors(k)
    best_m = {}
    for n in (4, 16):
        rates = {m: rate_sfa_avg(SimParams(k, m, n, p, trials, 0)).mean for m in divs}
        best_m[n] = max(rates, key=rates.get)
    interior = all(best_m[n] not in (1, k) for n in (4, 16))

    # N-monotonicity at the optimal M, on shared gain draws (paired samples)
    m_star = best_m[16]
    gamma = estimate_gamma(k, m_star)
    scale = k * p / (m_star * gamma.value)
    pairs = {(4, 1): [], (16, 4): []}
    for _, g in gain_chunks(0, k, trials):
        g_m = np.partition(g, k - m_star, axis=1)[:, k - m_star]
        r = {n: (m_star / k) * cplus(n / m_star + g_m * scale) for n in (1, 4, 16)}
        pairs[(4, 1)].append(r[4] - r[1])
        pairs[(16, 4)].append(r[16] - r[4])
    seps = {}
    for key, chunks in pairs.items():
        d = np.concatenate(chunks)
        seps[key] = d.mean() / (d.std(ddof=1) / np.sqrt(d.size))
    separated = all(s >= 3 for s in seps.values())
    _report(7, "fig4 shape",
            interior and separated,
            f"optimal M: N=4 -> {best_m[4]}, N=16 -> {best_m[16]} (interior={interior}); "
            f"N-separation in combined-stderr units: 4 vs 1 = {seps[(4, 1)]:.0f}, "
            f"16 vs 4 = {seps[(16, 4)]:.0f}")


def test_acceptance_8_fig5_trend():
    k_grid = (8, 32, 128, 512)
    bs = [optimal_subfunction_count(kk, 16, 10.0, trials=10_000, seed=0,
                                    gamma_trials=100_000) for kk in k_grid]
    nondecreasing = all(a <= b for a, b in zip(bs, bs[1:]))
    first_is_one = bs[0] == 1
    _report(8, "fig5 trend",
            first_is_one and nondecreasing,
            f"optimal B over K={k_grid}: {bs} "
            f"(B(K=8)=1: {first_is_one}; nondecreasing: {nondecreasing})")


def test_acceptance_9_fig6_trend():
    k_grid = (8, 32, 128)
    conv = [rate_conventional(SimParams(kk, kk, 16, 10.0, 10_000, 0)).mean
            for kk in k_grid]
    monotone = all(a > b for a, b in zip(conv, conv[1:]))
    toward_zero = conv[-1] < 0.1 * conv[0]
    best_sfa = max(rate_sfa_avg(SimParams(128, m, 16, 10.0, 10_000, 0)).mean
                   for m in divisors(128))
    ratio = best_sfa / conv[-1]
    _report(9, "fig6 trend",
            monotone and toward_zero and ratio >= 10.0,
            f"conventional over K={k_grid}: {[f'{c:.3f}' for c in conv]} "
            f"(monotone: {monotone}; final/initial={conv[-1]/conv[0]:.2f}, need <0.10); "
            f"best sfa-avg at K=128 = {best_sfa:.3f}, ratio={ratio:.1f}x (need >= 10x)")


def test_acceptance_10_determinism(tmp_path):
    spec = SweepSpec(figure="custom", k_grid=(8, 16), m_grid=(2, 4), n_grid=(4,),
                     p_db_grid=(10.0,), families=("conventional", "sfa-avg"),
                     trials=2_000, seed=0, gamma_trials=20_000)
    blobs = []
    for name in ("a.csv", "b.csv"):
        rows = [r.csv_dict() for r in run_sweep(spec).rows]
        path = tmp_path / name
        write_csv(rows, path)
        blobs.append(path.read_bytes())
    identical = blobs[0] == blobs[1]

    worst_rel = 0.0
    for k, m in [(8, 2), (16, 4)]:
        params = SimParams(k, m, 4, 10.0, trials=20_000, seed=0)
        serial = rate_sfa_avg(params, gamma_trials=50_000, workers=1)
        parallel = rate_sfa_avg(params, gamma_trials=50_000, workers=4)
        worst_rel = max(worst_rel,
                        abs(serial.mean - parallel.mean) / abs(serial.mean))
    _report(10, "determinism",
            identical and worst_rel <= 1e-12,
            f"byte-identical CSV: {identical}; "
            f"parallel vs serial worst relative diff={worst_rel:.2e}")
