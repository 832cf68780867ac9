"""Ordering experiments, the α-difference curve, pure-state profiles and the
inequality battery."""

from __future__ import annotations

from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from . import measures as M
from .blocks import ProjectorSet, st_projectors
from .linalg import ValidationError, as_matrix, random_state
from .search import OptimizerBudget

EQUAL_TOL = 1e-9
CLOSED_SLACK = 1e-9
OPTIMIZER_SLACK = 1e-4
DEFAULT_GRID_POINTS = 4096
GRID_EDGE = 5e-7
PURE_TOL = 1e-9


def pure_state_profiles(x, alpha: float):
    """Pure-state values of three measures as functions of the singlet weight.

    For a pure state with ``x = |<S|psi>|^2`` returns
    ``(f_R, f_l1, f_r)`` where ``f_R = 1 - x^(1/alpha) - (1-x)^(1/alpha)``,
    ``f_l1 = 2 sqrt(x (1 - x))`` and ``f_r`` is the binary entropy in bits.
    Accepts scalars or arrays.
    """
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x > 1)):
        raise ValidationError("x must lie in [0, 1]")
    if not 0.0 < alpha < 1.0:
        raise ValidationError("alpha must lie in (0, 1)")
    y = 1.0 - x
    # 1 - (a + b) rather than 1 - a - b keeps f(x) == f(1 - x) bit for bit
    f_r_ = 1.0 - (x ** (1.0 / alpha) + y ** (1.0 / alpha))
    f_l1 = 2.0 * np.sqrt(x * y)
    with np.errstate(divide="ignore", invalid="ignore"):
        hx = np.where(x > 0, -x * np.log2(np.where(x > 0, x, 1.0)), 0.0)
        hy = np.where(y > 0, -y * np.log2(np.where(y > 0, y, 1.0)), 0.0)
    f_r = hx + hy
    if f_r_.ndim == 0:
        return float(f_r_), float(f_l1), float(f_r)
    return f_r_, f_l1, f_r


# ---------------------------------------------------------------------------
# Ordering relations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OrderingVerdict:
    """Whether two measures order a pair of states the same way.

    Differences with magnitude below 1e-9 count as ties.
    """

    agree: bool
    a_rho: float
    a_sigma: float
    b_rho: float
    b_sigma: float
    rho: np.ndarray | None = field(default=None, repr=False, compare=False)
    sigma: np.ndarray | None = field(default=None, repr=False, compare=False)


def _sign(d: float) -> int:
    return 0 if abs(d) < EQUAL_TOL else (1 if d > 0 else -1)


def ordering_check(
    rho, sigma, measure_a: Callable, measure_b: Callable, P: ProjectorSet | None = None
) -> OrderingVerdict:
    """Compare the orderings that two measures induce on ``(rho, sigma)``.

    Measures are called as ``m(state, P)`` and may return numbers or reports.
    """
    P = P or st_projectors()
    a1, a2 = M.value_of(measure_a(rho, P)), M.value_of(measure_a(sigma, P))
    b1, b2 = M.value_of(measure_b(rho, P)), M.value_of(measure_b(sigma, P))
    agree = _sign(a1 - a2) == _sign(b1 - b2)
    return OrderingVerdict(agree, a1, a2, b1, b2, as_matrix(rho), as_matrix(sigma))


def counterexample_search(
    measure_a: Callable,
    measure_b: Callable,
    trials: int,
    seed: int = 0,
    *,
    P: ProjectorSet | None = None,
    kind: str = "mixed",
) -> list[OrderingVerdict]:
    """Sample random state pairs and return those the two measures order differently."""
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    P = P or st_projectors()
    rng = np.random.default_rng(seed)
    found = []
    for _ in range(trials):
        rho = random_state(P.dim, kind, rng).matrix
        sigma = random_state(P.dim, kind, rng).matrix
        v = ordering_check(rho, sigma, measure_a, measure_b, P)
        if not v.agree:
            found.append(v)
    return found


def alpha_measure(alpha: float) -> Callable:
    """``C_{alpha,1}`` as a two-argument measure for ordering experiments."""

    def measure(rho, P):
        return M.c_alpha_1(rho, P, alpha)

    measure.__name__ = f"c_alpha_1[{alpha:g}]"
    return measure


# ---------------------------------------------------------------------------
# Difference curve
# ---------------------------------------------------------------------------


def default_grid(points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    """Uniform grid of ``points`` values on ``[5e-7, 1 - 5e-7]``."""
    return np.linspace(GRID_EDGE, 1.0 - GRID_EDGE, points)


def table_grid() -> np.ndarray:
    return np.round(np.arange(1, 10) / 10.0, 12)


@dataclass(frozen=True, eq=False)
class DISCurve:
    """``DIS(alpha) = C_{alpha,1}(rho1) - C_{alpha,1}(rho2)`` on a grid, plus its zeros."""

    alphas: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    zeros: np.ndarray

    @property
    def values(self) -> np.ndarray:
        return self.c1 - self.c2


def _c_alpha_1_grid(rho, P, alphas):
    return 1.0 - _kernels.renyi_block_sum_grid(P.to_frame(rho), P.sizes, np.ascontiguousarray(alphas, dtype=float))


def dis_curve(rho1, rho2, P: ProjectorSet | None = None, grid=None, xtol: float = 1e-12) -> DISCurve:
    """Evaluate the difference curve and locate its sign changes.

    Each sign change between neighbouring grid points is refined by bisection
    until the bracket is narrower than ``xtol``.
    """
    P = P or st_projectors()
    a1, a2 = M._check(rho1, P), M._check(rho2, P)
    alphas = default_grid() if grid is None else np.asarray(grid, dtype=float)
    if alphas.ndim != 1 or alphas.size < 1 or np.any(np.diff(alphas) <= 0):
        raise ValidationError("alpha grid must be strictly increasing")
    if alphas[0] <= 0 or alphas[-1] >= 1:
        raise ValidationError("alpha grid must lie inside (0, 1)")
    c1 = _c_alpha_1_grid(a1, P, alphas)
    c2 = _c_alpha_1_grid(a2, P, alphas)
    d = c1 - c2

    def dis(a):
        g = np.array([a])
        return float(_c_alpha_1_grid(a1, P, g)[0] - _c_alpha_1_grid(a2, P, g)[0])

    zeros = []
    for i in np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)[0]:
        lo, hi, flo = alphas[i], alphas[i + 1], d[i]
        while hi - lo > xtol:
            mid = 0.5 * (lo + hi)
            fm = dis(mid)
            if fm == 0.0:
                lo = hi = mid
                break
            if np.sign(fm) == np.sign(flo):
                lo, flo = mid, fm
            else:
                hi = mid
        zeros.append(0.5 * (lo + hi))
    return DISCurve(alphas, c1, c2, np.array(zeros))


# ---------------------------------------------------------------------------
# Inequality battery
# ---------------------------------------------------------------------------


@dataclass
class CheckStats:
    """Tally for one inequality: how often it was checked and violated."""

    checked: int = 0
    violations: int = 0
    worst_margin: float = np.inf
    worst_index: int = -1

    def record(self, margin: float, slack: float, index: int) -> None:
        self.checked += 1
        if margin < self.worst_margin:
            self.worst_margin, self.worst_index = float(margin), index
        if margin < -slack:
            self.violations += 1


@dataclass
class BatteryReport:
    checks: dict

    @property
    def violations(self) -> int:
        return sum(c.violations for c in self.checks.values())

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def rows(self):
        for name, c in self.checks.items():
            yield name, c.checked, c.violations, c.worst_margin


BATTERY_CHECKS = (
    "rob_lower_bound",
    "l1_dominates_trace",
    "rel_entropy_pinsker",
    "geometric_fuchs_van_de_graaf",
    "rob_dominates_trace",
    "max_rel_above_rel_entropy",
    "max_rel_below_log_rob",
    "renyi_z_below_tsallis",
    "tsallis_below_operator_tsallis",
    "variance_above_skew",
    "pure_l1_above_rel_entropy",
    "pure_l1_above_variance",
    "pure_variance_above_renyi",
)

# (alpha, z) pairs with max(alpha, 1 - alpha) <= z <= 1 used in rotation.
TSALLIS_CHAIN_PARAMS = ((0.5, 0.5), (0.5, 0.8), (0.6, 0.75), (0.7, 1.0), (0.3, 0.85), (0.8, 0.9))


def is_pure(rho) -> bool:
    a = as_matrix(rho)
    return bool(np.trace(a @ a).real > 1.0 - PURE_TOL)


def mixed_state_values(rho, P: ProjectorSet, budget: OptimizerBudget, alpha: float, z: float) -> dict:
    """All measure values needed by the mixed-state checks.

    Searches are cross-seeded so that each optimizer side starts from the
    best certificate another side already found (e.g. the robustness
    minimizer ``B`` seeds the max-relative-entropy search).
    """
    a = as_matrix(rho)
    out = {}
    geo = M.c_geo(a, P, budget)
    rob = M.c_rob(a, P, budget)
    b_rob = rob.witness["B"]
    tr = M.c_trace(a, P, budget, starts=[b_rob, geo.argmax])
    cmax = M.c_max(a, P, budget, starts=[b_rob / np.trace(b_rob).real])
    caz = M.c_alpha_z(a, P, M.MeasureParams(alpha, z, budget=budget), starts=[M.alpha_1_optimal_state(a, P, alpha)])
    out["geo"] = geo.value
    out["rob"] = rob.value
    out["rob_lower"] = M.c_rob_lower(a, P)
    out["trace"] = tr.value
    out["max"] = cmax.value
    out["alpha_z"] = caz.value
    out["tsallis_T"] = M.c_tsallis_T(a, P, alpha).value
    out["tsallis_N"] = M.c_tsallis_N(a, P, alpha, budget).value
    out["l1"] = M.c_l1_tilde(a, P).value
    out["rel"] = M.c_rel_entropy(a, P).value
    return out


def inequality_battery(
    states: Iterable,
    P: ProjectorSet | None = None,
    budget: OptimizerBudget | None = None,
    *,
    pure_alphas: Sequence[float] = (0.6, 0.75, 0.9),
    chain_params: Sequence[tuple[float, float]] = TSALLIS_CHAIN_PARAMS,
    callback: Callable | None = None,
) -> BatteryReport:
    """Check the measure inequalities on each state.

    Mixed states get the robustness, trace-distance, entropy, max-relative and
    Tsallis-chain checks; pure states get the pure-state chains with each
    ``alpha`` in ``pure_alphas`` (all > 1/2). The variance-above-skew check
    runs on every state. The first projector plays the role of ``Q_S``.

    Slack: 1e-9 when both sides are closed forms, 1e-4 when an optimizer side
    can err towards a spurious violation.
    """
    P = P or st_projectors()
    budget = budget or OptimizerBudget(restarts=4)
    if any(a <= 0.5 or a >= 1 for a in pure_alphas):
        raise ValidationError("pure-state chain needs alpha in (1/2, 1)")
    qs = P.projectors[0]
    checks = {name: CheckStats() for name in BATTERY_CHECKS}
    ln2 = np.log(2.0)
    n_mixed = 0
    for idx, rho in enumerate(states):
        a = M._check(rho, P)
        var = M.variance_op(a, qs)
        checks["variance_above_skew"].record(var - M.wy_skew_information(a, qs), CLOSED_SLACK, idx)
        if is_pure(a):
            l1 = M.c_l1_tilde(a, P).value
            rel = M.c_rel_entropy(a, P).value
            checks["pure_l1_above_rel_entropy"].record(l1 - rel, CLOSED_SLACK, idx)
            checks["pure_l1_above_variance"].record(l1 - 2 * var, CLOSED_SLACK, idx)
            for alpha in pure_alphas:
                checks["pure_variance_above_renyi"].record(2 * var - M.c_alpha_1(a, P, alpha).value, CLOSED_SLACK, idx)
        else:
            alpha, z = chain_params[n_mixed % len(chain_params)]
            n_mixed += 1
            v = mixed_state_values(a, P, budget, alpha, z)
            checks["rob_lower_bound"].record(v["rob"] - v["rob_lower"], OPTIMIZER_SLACK, idx)
            checks["l1_dominates_trace"].record(v["l1"] - v["trace"], OPTIMIZER_SLACK, idx)
            checks["rel_entropy_pinsker"].record(v["rel"] - v["trace"] ** 2 / (2 * ln2), OPTIMIZER_SLACK, idx)
            checks["geometric_fuchs_van_de_graaf"].record(v["geo"] - v["trace"] ** 2 / 4, OPTIMIZER_SLACK, idx)
            checks["rob_dominates_trace"].record(v["rob"] - v["trace"], OPTIMIZER_SLACK, idx)
            checks["max_rel_above_rel_entropy"].record(v["max"] - v["rel"], OPTIMIZER_SLACK, idx)
            checks["max_rel_below_log_rob"].record(np.log2(1 + v["rob"]) - v["max"], OPTIMIZER_SLACK, idx)
            checks["renyi_z_below_tsallis"].record(v["tsallis_T"] - v["alpha_z"] / (1 - alpha), OPTIMIZER_SLACK, idx)
            checks["tsallis_below_operator_tsallis"].record(v["tsallis_N"] - v["tsallis_T"], OPTIMIZER_SLACK, idx)
        if callback is not None:
            callback(idx, checks)
    return BatteryReport(checks)
