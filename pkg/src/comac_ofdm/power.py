"""Assignment construction, average power rule, and the sponge-squeezing
optimal power allocation.

The optimizer maximizes sum_g 0.5*log2(N/M + N*eta_g) over per-sub-carrier
levels eta subject to the coupled per-node budgets
sum_g eta_g / |h_{i,g}|^2 <= P over the chosen nodes. The max-with-zero
clipping is applied only when reporting the rate; the optimized surrogate
drops it, which is safe because the log is increasing in eta.

Following the water-filling narrative, every level starts from an even
split and is then squeezed by per-node dual multipliers mu until no budget
is violated and at least one node is exactly tight. The dual iteration is
a projected Newton method on the smooth convex dual

    D(mu) = max_eta [ f(eta) - sum_i mu_i (usage_i(eta) - P) ],

whose inner maximizer has the closed form
eta_g(mu) = max(0, 1/(2 ln2 d_g) - 1/M) with d_g = sum_i mu_i G_{i,g} w_{i,g}.
Convergence is certified by the duality gap, so the returned objective is
provably within the requested tolerance of the true optimum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import LN2, SimParams, cplus
from .rates import GammaEstimate

ORACLE_MAX_NODES = 6
ORACLE_MAX_SUBCARRIERS = 8


class ConvergenceError(RuntimeError):
    """Raised when the dual iteration exhausts its budget; carries the last
    residual report."""

    def __init__(self, message, residuals):
        self.residuals = residuals
        super().__init__(message)


@dataclass(frozen=True)
class KKTReport:
    """Named optimality residuals; all but power_gap are dimensionless."""

    feasibility: float
    slackness: float
    stationarity: float
    power_gap: float
    passed: bool


@dataclass(frozen=True)
class PowerSolution:
    eta: np.ndarray
    mu: np.ndarray
    power: np.ndarray
    objective: float
    residuals: KKTReport
    gap: float
    iterations: int


def build_assignment(gains, m):
    """Binary K x N matrix with ones at the top-m gains of every column.

    Ties break toward the smaller node index.
    """
    gains = np.asarray(gains, dtype=float)
    k = gains.shape[0]
    if not 1 <= m <= k:
        raise ValueError(f"need 1 <= m <= k, got m={m}, k={k}")
    order = np.argsort(-gains, axis=0, kind="stable")
    omega = np.zeros_like(gains, dtype=bool)
    np.put_along_axis(omega, order[:m], True, axis=0)
    return omega


def allocate_average(gains, params: SimParams, gamma: GammaEstimate):
    """Average power rule: the chosen node of rank i on sub-carrier g gets
    (K*P/N) * (g_(M)/g_(i)) / (M * Gamma), equalizing |h|^2 * P across the
    chosen set; unchosen nodes get zero."""
    gains = np.asarray(gains, dtype=float)
    k, n = gains.shape
    if (gamma.k, gamma.m) != (k, params.m):
        raise ValueError(
            f"gamma was estimated for (K={gamma.k}, M={gamma.m}), "
            f"scenario has (K={k}, M={params.m})"
        )
    m = params.m
    order = np.argsort(-gains, axis=0, kind="stable")
    sorted_gains = np.take_along_axis(gains, order, axis=0)
    chosen = sorted_gains[:m]
    if np.any(chosen <= 0):
        raise ValueError("chosen node with zero gain: power rule is undefined")
    g_m = sorted_gains[m - 1]
    alloc = (k * params.power / n) * (g_m / chosen) / (m * gamma.value)
    power = np.zeros_like(gains)
    np.put_along_axis(power, order[:m], alloc, axis=0)
    return power


def objective_rate(eta, params: SimParams):
    """Reported rate (M/(K*N)) * sum_g C+(N/M + N*eta_g) for level vector eta."""
    m, n, k = params.m, params.n, params.k
    return float(params.m / (k * n) * np.sum(cplus(n / m + n * np.maximum(eta, 0.0))))


def equal_split_eta(gains, assignment, params: SimParams):
    """Feasible even-split point: eta_g = (P/N) * min over chosen |h_{i,g}|^2.

    Each node spends at most P/N per sub-carrier, hence at most P in total.
    """
    gains = np.asarray(gains, dtype=float)
    min_chosen = np.min(np.where(assignment, gains, np.inf), axis=0)
    return params.power / gains.shape[1] * min_chosen


def sponge_squeeze(gains, assignment, params: SimParams, tol=1e-13, max_iter=10_000):
    """Optimal per-sub-carrier levels under coupled per-node power budgets.

    ``tol`` is the relative duality-gap target. The dual parameter error
    scales like the square root of the gap, so the tight default is what
    keeps the KKT residuals well under the 1e-6 contract. Raises
    ConvergenceError if the iteration stalls before the gap closes.
    """
    gains = np.asarray(gains, dtype=float)
    omega = np.asarray(assignment, dtype=bool)
    if gains.shape != omega.shape:
        raise ValueError("gains and assignment shapes differ")
    if tol <= 0:
        raise ValueError("tol must be positive")
    k, n = gains.shape
    m, p = params.m, params.power
    if np.any(omega & (gains <= 0)):
        raise ValueError("chosen node with zero gain: allocation is degenerate")

    a = np.where(omega, 1.0 / np.where(omega, gains, 1.0), 0.0)  # usage weights
    a_t = np.ascontiguousarray(a.T)
    # eta_g <= P * min chosen gain is implied by the budgets. The guard is a
    # loose multiple of it: any multiple >= 1 keeps the duality-gap bound
    # valid while keeping the inner maximizer finite for tiny duals, and the
    # slack ensures the guard never binds at the optimum (which would poison
    # the stationarity identity).
    cap = p * np.min(np.where(omega, gains, np.inf), axis=0)
    guard = 1e6 * cap
    inv_m = 1.0 / m
    half_ln2 = 0.5 / LN2
    base = n * inv_m

    def inner(mu):
        d = a_t @ mu
        eta = 1.0 / (2.0 * LN2 * np.maximum(d, 1e-300)) - inv_m
        eta = eta.clip(0.0, guard)
        usage = a @ eta
        f = half_ln2 * float(np.log(base + n * eta).sum())
        dual = f - float(mu @ (usage - p))
        return dual, eta, d, usage, f

    # warm start: bisect a uniform dual so the heaviest node is near budget,
    # which keeps the first Newton models well conditioned
    ones = np.ones(k)
    lo, hi = 1e-12, 1.0 / (2.0 * LN2 * inv_m)
    for _ in range(30):
        mid = np.sqrt(lo * hi)
        _, _, _, usage_mid, _ = inner(mid * ones)
        if usage_mid.max() > p:
            lo = mid
        else:
            hi = mid
    mu = hi * ones
    dual, eta, d, usage, _ = inner(mu)
    eye = np.eye(k)
    gap = np.inf
    f_primal = 0.0
    scaled = eta
    for it in range(max_iter):
        grad = p - usage  # dD/dmu
        mx = float(usage.max())
        scale = p / mx if mx > 0 else 1.0
        scaled = np.minimum(eta * scale, cap)
        f_primal = half_ln2 * float(np.sum(np.log(base + n * scaled)))
        gap = dual - f_primal
        if gap <= tol * max(abs(f_primal), 1.0):
            break

        interior = (d > 0) & (eta > 0) & (eta < guard)
        free = ~((mu <= 1e-14) & (grad > 0))
        if interior.any():
            a_int = a[:, interior]
            w = 1.0 / (2.0 * LN2 * d[interior] ** 2)
            hess = (a_int * w) @ a_int.T
        else:
            hess = np.zeros((k, k))
        hess_f = hess[np.ix_(free, free)]
        lam = 1e-8 * max(float(hess_f.diagonal().max(initial=0.0)), 1e-8)
        try:
            step = np.linalg.solve(hess_f + lam * eye[: hess_f.shape[0], : hess_f.shape[0]], grad[free])
        except np.linalg.LinAlgError:
            step = grad[free]
        direction = np.zeros(k)
        direction[free] = -step

        t = 1.0
        accepted = False
        for _ in range(25):
            mu_new = np.maximum(mu + t * direction, 0.0)
            dual_new, eta_new, d_new, usage_new, _ = inner(mu_new)
            if dual_new < dual - 1e-12 * t * max(abs(dual), 1.0):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            # steepest-descent fallback for the rare bad Newton model
            g_dir = np.where(free, grad, 0.0)
            t = 1.0 / (float(np.abs(g_dir).max()) + 1e-300)
            for _ in range(30):
                mu_new = np.maximum(mu - t * g_dir, 0.0)
                dual_new, eta_new, d_new, usage_new, _ = inner(mu_new)
                if dual_new < dual:
                    accepted = True
                    break
                t *= 0.5
            if not accepted:
                break  # no descent direction left: gap is as good as it gets
        mu, dual, eta, d, usage = mu_new, dual_new, eta_new, d_new, usage_new
    else:
        it = max_iter

    power = np.where(omega, a, 0.0) * scaled[np.newaxis, :]
    solution = PowerSolution(
        eta=scaled,
        mu=mu,
        power=power,
        objective=objective_rate(scaled, params),
        residuals=None,
        gap=float(gap),
        iterations=it,
    )
    report = verify_kkt(solution, gains, omega, params)
    solution = PowerSolution(
        eta=scaled,
        mu=mu,
        power=power,
        objective=solution.objective,
        residuals=report,
        gap=float(gap),
        iterations=it,
    )
    if gap > 100.0 * tol * max(abs(f_primal), 1.0) and not report.passed:
        raise ConvergenceError(
            f"dual iteration stalled after {it} iterations (gap {gap:.3e})", report
        )
    return solution


def oracle_solve(gains, assignment, params: SimParams):
    """Independent verifier: solves the same program with a generic convex
    solver. Small instances only; used by tests to certify sponge_squeeze."""
    import cvxpy as cp

    gains = np.asarray(gains, dtype=float)
    omega = np.asarray(assignment, dtype=bool)
    k, n = gains.shape
    if k > ORACLE_MAX_NODES or n > ORACLE_MAX_SUBCARRIERS:
        raise ValueError(
            f"oracle handles at most K={ORACLE_MAX_NODES}, N={ORACLE_MAX_SUBCARRIERS}; "
            f"got K={k}, N={n}"
        )
    m, p = params.m, params.power
    a = np.where(omega, 1.0 / np.where(omega, gains, 1.0), 0.0)
    eta = cp.Variable(n, nonneg=True)
    budget = a @ eta <= p
    problem = cp.Problem(
        cp.Maximize(cp.sum(cp.log(n / m + n * eta)) / (2.0 * LN2)),
        [budget],
    )
    problem.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12)
    if eta.value is None:
        raise RuntimeError(f"oracle solver failed with status {problem.status}")
    eta_star = np.maximum(np.asarray(eta.value, dtype=float), 0.0)
    usage = a @ eta_star
    mx = float(usage.max())
    if mx > 0:
        eta_star *= p / mx
    mu = np.maximum(np.asarray(budget.dual_value, dtype=float), 0.0)
    power = np.where(omega, a, 0.0) * eta_star[np.newaxis, :]
    solution = PowerSolution(
        eta=eta_star,
        mu=mu,
        power=power,
        objective=objective_rate(eta_star, params),
        residuals=None,
        gap=float("nan"),
        iterations=0,
    )
    report = verify_kkt(solution, gains, omega, params)
    return PowerSolution(
        eta=eta_star,
        mu=mu,
        power=power,
        objective=solution.objective,
        residuals=report,
        gap=float("nan"),
        iterations=0,
    )


def verify_kkt(solution: PowerSolution, gains, assignment, params: SimParams, tol=1e-6):
    """Diagnostic residuals for a candidate solution.

    feasibility: relative budget overrun, max_i (usage_i - P)+ / P.
    slackness:   max_i (mu_i/max mu) * |usage_i - P| / P.
    stationarity: relative spread of (1/M + eta_g) * d_g over active
                  sub-carriers, plus any first-order gain available at an
                  inactive one; zero at the exact optimum.
    power_gap:   |max_i usage_i - P|, the tightness required of the most
                 loaded node (compared against tol*P for the verdict).
    """
    gains = np.asarray(gains, dtype=float)
    omega = np.asarray(assignment, dtype=bool)
    eta = np.asarray(solution.eta, dtype=float)
    mu = np.asarray(solution.mu, dtype=float)
    p, m = params.power, params.m
    a = np.where(omega, 1.0 / np.where(omega, gains, 1.0), 0.0)
    usage = a @ eta
    feasibility = max(0.0, float(usage.max()) - p) / p
    mu_max = float(mu.max())
    if mu_max > 0:
        slackness = float(np.max(mu / mu_max * np.abs(usage - p))) / p
    else:
        slackness = float("inf") if eta.max() > 0 else 0.0
    d = a.T @ mu
    target = 0.5 / LN2
    active = eta > 1e-12 * max(float(eta.max()), 1.0)
    stationarity = 0.0
    if active.any():
        v = (1.0 / m + eta[active]) * d[active]
        stationarity = float((v.max() - v.min()) / max(abs(v.mean()), 1e-300))
    if (~active).any():
        # an inactive level must not offer first-order improvement
        slack_violation = float(np.max(target - d[~active] / m)) / target
        stationarity = max(stationarity, max(0.0, slack_violation))
    power_gap = abs(float(usage.max()) - p)
    passed = (
        feasibility <= tol
        and slackness <= tol
        and stationarity <= tol
        and power_gap <= tol * p
    )
    return KKTReport(feasibility, slackness, stationarity, power_gap, passed)
