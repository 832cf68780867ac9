"""Block-coherence measures.

Closed forms:
    :func:`c_alpha_1`, :func:`c_tsallis_T`, :func:`c_wy`, :func:`c_rel_entropy`,
    :func:`c_l1_tilde`, :func:`c_rob_lower`.

Optimizer-backed (free-state search, see :mod:`blockcoh.search`):
    :func:`c_alpha_z`, :func:`c_geo`, :func:`c_tsallis_N`, :func:`c_trace`,
    :func:`c_rob`, :func:`c_max`.

Every measure takes ``(rho, P, ...)`` where ``rho`` is a normalized density
matrix (array or :class:`~blockcoh.linalg.QuantumState`) and ``P`` a
:class:`~blockcoh.blocks.ProjectorSet`, and returns a :class:`MeasureReport`.
Optimizer-backed reports carry ``bound="upper"``: the inner max (or min) is
approximated from the feasible side, so the true coherence can only be lower.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .blocks import ProjectorSet, block_dephase
from .linalg import (
    QuantumState,
    ValidationError,
    as_matrix,
    frac_power,
    hermitian_eig,
    random_unitary,
    von_neumann_entropy,
)
from .search import (
    KernelObjective,
    OptimizationError,
    OptimizerBudget,
    maximize_over_free_states,
    minimize_over_free_states,
)

REPORT_FLOOR = -1e-8
TSALLIS_N_EPS = 1e-10
ROB_ROUNDS = 6
ROB_WEIGHT0 = 10.0
ROB_FEASIBILITY_TOL = 1e-7


@dataclass(frozen=True)
class MeasureParams:
    """Parameters of a measure evaluation.

    Attributes:
        alpha: order in (0, 1).
        z: second order with ``z >= max(alpha, 1 - alpha)``.
        beta: Tsallis operator-entropy order in (0, 1).
        budget: optimizer budget for search-based measures.
    """

    alpha: float = 0.5
    z: float = 1.0
    beta: float = 0.5
    budget: OptimizerBudget = field(default_factory=OptimizerBudget)

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0.0 < self.beta < 1.0:
            raise ValidationError(f"beta must lie in (0, 1), got {self.beta}")
        if self.z < max(self.alpha, 1.0 - self.alpha) - 1e-15:
            raise ValidationError(f"z={self.z} is below max(alpha, 1 - alpha) for alpha={self.alpha}")


@dataclass(eq=False)
class MeasureReport:
    """Result of a measure evaluation.

    Attributes:
        value: the coherence value; values in ``[-1e-8, 0)`` are clipped to 0.
        method: ``"closed-form"``, ``"optimizer"``, ``"penalty-sdp"`` or
            ``"roof-sampling"``.
        bound: ``"exact"`` for closed forms, ``"upper"`` when the value can
            only over-estimate the true coherence.
        converged: whether the underlying search met its tolerance.
        raw: the value before clipping.
        argmax: optimal free state when available (working basis).
        witness: extra diagnostic quantities.
    """

    value: float
    method: str = "closed-form"
    bound: str = "exact"
    converged: bool = True
    raw: float | None = None
    argmax: np.ndarray | None = None
    witness: dict = field(default_factory=dict)

    def __post_init__(self):
        self.raw = float(self.value) if self.raw is None else float(self.raw)
        v = float(self.value)
        if REPORT_FLOOR <= v < 0.0:
            v = 0.0
        self.value = v

    def __float__(self) -> float:
        return self.value

    def to_dict(self) -> dict:
        out = {
            "value": self.value,
            "raw": self.raw,
            "method": self.method,
            "bound": self.bound,
            "converged": self.converged,
        }
        for k, v in self.witness.items():
            if np.isscalar(v):
                out[k] = float(v) if not isinstance(v, (bool, str)) else v
        return out


def value_of(result) -> float:
    """Numeric value of a measure result (report or plain number)."""
    return float(result.value) if isinstance(result, MeasureReport) else float(result)


def _state(rho) -> np.ndarray:
    if isinstance(rho, QuantumState):
        if not rho.normalized:
            raise ValidationError("measures need a normalized state")
        return rho.matrix
    return QuantumState(as_matrix(rho)).matrix


def _check(rho, P: ProjectorSet) -> np.ndarray:
    a = _state(rho)
    if a.shape[0] != P.dim:
        raise ValidationError(f"dimension mismatch: state {a.shape[0]} vs projectors {P.dim}")
    return a


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")


def coherence_ceiling(alpha: float) -> float:
    """Largest value of ``C_{alpha,1}`` over two-block pure states, ``1 - 2^(1 - 1/alpha)``."""
    _check_alpha(alpha)
    return 1.0 - 2.0 ** (1.0 - 1.0 / alpha)


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------


def _renyi_sum(a: np.ndarray, P: ProjectorSet, alpha: float) -> float:
    return float(_kernels.renyi_block_sum(P.to_frame(a), P.sizes, alpha))


def c_alpha_1(rho, P: ProjectorSet, alpha: float) -> MeasureReport:
    """``C_{alpha,1} = 1 - sum_k Tr[(P_k rho^alpha P_k)^(1/alpha)]``."""
    _check_alpha(alpha)
    a = _check(rho, P)
    return MeasureReport(1.0 - _renyi_sum(a, P, alpha))


def alpha_1_optimal_state(rho, P: ProjectorSet, alpha: float) -> np.ndarray:
    """The free state attaining the closed form of :func:`c_alpha_1`.

    It is ``sum_k (P_k rho^alpha P_k)^(1/alpha)`` normalized to unit trace.
    """
    _check_alpha(alpha)
    a = _check(rho, P)
    ra = frac_power(a, alpha)
    s = sum(frac_power(p @ ra @ p, 1.0 / alpha) for p in P.projectors)
    return s / np.trace(s).real


def c_tsallis_T(rho, P: ProjectorSet, alpha: float) -> MeasureReport:
    """Tsallis relative-entropy measure ``C_{alpha,1} / (1 - alpha)``."""
    _check_alpha(alpha)
    a = _check(rho, P)
    return MeasureReport((1.0 - _renyi_sum(a, P, alpha)) / (1.0 - alpha))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def wy_skew_information(rho, A) -> float:
    """Wigner-Yanase skew information ``-1/2 Tr([sqrt(rho), A]^2)``."""
    a = as_matrix(rho)
    op = as_matrix(A)
    c = commutator(frac_power(a, 0.5), op)
    return float(-0.5 * np.trace(c @ c).real)


def c_wy(rho, P: ProjectorSet) -> MeasureReport:
    """Sum of Wigner-Yanase skew informations over the projectors."""
    a = _check(rho, P)
    s = frac_power(a, 0.5)
    total = 0.0
    for p in P.projectors:
        c = commutator(s, p)
        total += -0.5 * np.trace(c @ c).real
    return MeasureReport(total)


def c_rel_entropy(rho, P: ProjectorSet, base: float = 2.0) -> MeasureReport:
    """Relative-entropy measure ``S(Delta(rho)) - S(rho)`` (bits by default)."""
    a = _check(rho, P)
    return MeasureReport(von_neumann_entropy(block_dephase(a, P), base) - von_neumann_entropy(a, base))


def c_l1_tilde(rho, P: ProjectorSet) -> MeasureReport:
    """Sum of trace norms of the off-diagonal blocks ``P_i rho P_j``."""
    a = _check(rho, P)
    total = 0.0
    for i, sl_i in enumerate(P.block_slices()):
        for j, sl_j in enumerate(P.block_slices()):
            if i != j:
                blk = P.to_frame(a)[sl_i, sl_j]
                total += float(np.sum(np.linalg.svd(blk, compute_uv=False)))
    return MeasureReport(total)


def c_rob_lower(rho, P: ProjectorSet) -> float:
    """Witness lower bound ``-Tr(rho W)`` on the robustness, ``W = Delta(rho) - rho``.

    Equals ``Tr(rho^2) - Tr(rho Delta(rho))``.
    """
    a = _check(rho, P)
    w = block_dephase(a, P) - a
    return float(-np.trace(a @ w).real)


def variance_op(rho, A) -> float:
    """Variance ``Tr(rho A^2) - Tr(rho A)^2`` of a Hermitian operator."""
    a = as_matrix(rho)
    op = as_matrix(A)
    if np.max(np.abs(op - op.conj().T)) > 1e-10:
        raise ValidationError("variance_op needs a Hermitian operator")
    m1 = np.trace(a @ op).real
    return float(np.trace(a @ op @ op).real - m1 * m1)


# ---------------------------------------------------------------------------
# Optimizer-backed measures
# ---------------------------------------------------------------------------


def _frame_power(a: np.ndarray, P: ProjectorSet, p: float) -> np.ndarray:
    return np.ascontiguousarray(P.to_frame(frac_power(a, p)))


def c_alpha_z(rho, P: ProjectorSet, params: MeasureParams | None = None, *, starts: Sequence = ()) -> MeasureReport:
    """α-z Rényi measure ``1 - max_sigma {Tr[(s^a rho^(alpha/z) s^a)^z]}^(1/alpha)``.

    Here ``s = sigma`` and ``a = (1 - alpha) / (2 z)``. The maximum runs over
    free states, so the reported value is an upper bound on the coherence.

    Args:
        rho: normalized state.
        P: block structure.
        params: orders and optimizer budget.
        starts: extra free states used as deterministic starting points.
    """
    params = params or MeasureParams()
    a = _check(rho, P)
    alpha, z = params.alpha, params.z
    mats = _frame_power(a, P, alpha / z)[None, :, :]
    pars = np.array([(1.0 - alpha) / (2.0 * z), z])
    obj = KernelObjective(_kernels.loss_alpha_z, mats, pars)
    res = maximize_over_free_states(obj, P, params.budget, rho=a, starts=starts)
    q = max(res.value, 0.0)
    return MeasureReport(
        1.0 - q ** (1.0 / alpha),
        method="optimizer",
        bound="upper",
        converged=res.converged,
        argmax=res.argmax,
        witness={"max_quasi_overlap": res.value},
    )


def c_geo(rho, P: ProjectorSet, budget: OptimizerBudget | None = None, *, starts: Sequence = ()) -> MeasureReport:
    """Geometric measure ``1 - max_sigma F(rho, sigma)^2``; equals ``C_{0.5,0.5}``."""
    params = MeasureParams(alpha=0.5, z=0.5, budget=budget or OptimizerBudget())
    return c_alpha_z(rho, P, params, starts=starts)


def c_tsallis_N(
    rho, P: ProjectorSet, beta: float = 0.5, budget: OptimizerBudget | None = None, *, starts: Sequence = ()
) -> MeasureReport:
    """Tsallis relative-operator-entropy measure.

    ``(1 - max_sigma [Tr(rho #_{1-beta} sigma)]^(1/beta)) / (1 - beta)`` where
    ``A #_t B = A^(1/2) (A^(-1/2) B A^(-1/2))^t A^(1/2)``. ``rho`` is first mixed
    with ``1e-10`` of the maximally mixed state so that ``rho^(-1/2)`` exists.
    """
    if not 0.0 < beta < 1.0:
        raise ValidationError(f"beta must lie in (0, 1), got {beta}")
    a = _check(rho, P)
    d = a.shape[0]
    reg = (1.0 - TSALLIS_N_EPS) * a + TSALLIS_N_EPS * np.eye(d) / d
    mats = np.stack([P.to_frame(reg), _frame_power(reg, P, -0.5)])
    obj = KernelObjective(_kernels.loss_tsallis_n, mats, np.array([1.0 - beta]))
    res = maximize_over_free_states(obj, P, budget, rho=a, starts=starts)
    if not np.isfinite(res.value):
        raise OptimizationError("singular operator mean")
    t = max(res.value, 0.0)
    return MeasureReport(
        (1.0 - t ** (1.0 / beta)) / (1.0 - beta),
        method="optimizer",
        bound="upper",
        converged=res.converged,
        argmax=res.argmax,
        witness={"max_mean_trace": res.value},
    )


def c_trace(rho, P: ProjectorSet, budget: OptimizerBudget | None = None, *, starts: Sequence = ()) -> MeasureReport:
    """Trace-norm measure ``min_{lambda > 0, sigma free} ||rho - lambda sigma||_Tr``.

    The pair ``(lambda, sigma)`` is searched jointly as one unnormalized
    block-diagonal PSD matrix ``B = lambda sigma``. The value is an upper bound
    and never exceeds ``||rho - Delta(rho)||_Tr``.

    Args:
        starts: candidate matrices ``B`` (any positive scale) to start from.
    """
    a = _check(rho, P)
    mats = P.to_frame(a)[None, :, :]
    obj = KernelObjective(_kernels.loss_trace_dist, mats, np.zeros(1), cone=True)
    res = minimize_over_free_states(obj, P, budget, rho=a, starts=starts)
    lam = float(np.trace(res.point).real)
    return MeasureReport(
        res.value,
        method="optimizer",
        bound="upper",
        converged=res.converged,
        argmax=res.argmax,
        witness={"lambda": lam},
    )


def _feasible_scale(b: np.ndarray, a: np.ndarray) -> float:
    """Smallest ``t`` with ``t B >= rho``, i.e. ``lambda_max(B^-1/2 rho B^-1/2)``."""
    w, v = np.linalg.eigh(0.5 * (b + b.conj().T))
    w = np.clip(w, 1e-300, None)
    s = (v / np.sqrt(w)) @ v.conj().T
    m = s @ a @ s
    return float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[-1])


def c_rob(rho, P: ProjectorSet, budget: OptimizerBudget | None = None, *, starts: Sequence = ()) -> MeasureReport:
    """Robustness ``min{s : rho <= (1 + s) Delta(sigma)}`` by a penalty method.

    Minimizes ``Tr B`` over block-diagonal PSD ``B`` with a quadratic penalty on
    the negative eigenvalues of ``B - rho``; the weight grows tenfold over six
    rounds. The final ``B`` is then rescaled by the smallest factor making it
    exactly feasible, so the reported ``Tr B - 1`` is a genuine upper bound.

    Args:
        starts: candidate matrices ``B`` (any positive scale; they are rescaled
            to feasibility before use).
    """
    budget = budget or OptimizerBudget()
    a = _check(rho, P)
    a_frame = P.to_frame(a)
    mats = a_frame[None, :, :]
    lower = c_rob_lower(a, P)

    candidates = [block_dephase(a, P)] + [as_matrix(s) for s in starts]
    feasible = []
    for c in candidates:
        c = 0.5 * (c + c.conj().T)
        t = _feasible_scale(P.to_frame(c), a_frame)
        if np.isfinite(t) and t > 0:
            feasible.append(t * c)
    best_b = min(feasible, key=lambda b: np.trace(b).real)
    point = best_b
    converged = True
    for r in range(ROB_ROUNDS):
        w = ROB_WEIGHT0 * 10.0**r
        obj = KernelObjective(_kernels.loss_rob_penalty, mats, np.array([w]), cone=True)
        if r == 0:
            res = minimize_over_free_states(obj, P, budget, starts=[point] + feasible)
        else:
            round_budget = replace(budget, restarts=1)
            res = minimize_over_free_states(obj, P, round_budget, starts=[point])
        point = res.point
        converged = res.converged
    b_frame = P.to_frame(point)
    t = _feasible_scale(b_frame, a_frame)
    restored = t * point
    if np.trace(restored).real > np.trace(best_b).real:
        restored = best_b
    gap = np.linalg.eigvalsh(restored - a)[0]
    if gap < -ROB_FEASIBILITY_TOL:
        raise OptimizationError(f"robustness penalty did not converge (min eig {gap:.3g})")
    value = float(np.trace(restored).real) - 1.0
    return MeasureReport(
        value,
        method="penalty-sdp",
        bound="upper",
        converged=converged,
        argmax=restored / np.trace(restored).real,
        witness={"lower": lower, "B": restored, "min_eig_gap": float(gap)},
    )


def c_max(rho, P: ProjectorSet, budget: OptimizerBudget | None = None, *, starts: Sequence = ()) -> MeasureReport:
    """Max-relative-entropy measure ``min_sigma log2 min{lambda : rho <= lambda sigma}``.

    Candidate free states are regularized by ``1e-12 I`` so that
    ``lambda(sigma) = lambda_max(sigma^-1/2 rho sigma^-1/2)`` is always finite.
    """
    a = _check(rho, P)
    mats = P.to_frame(a)[None, :, :]
    obj = KernelObjective(_kernels.loss_dmax, mats, np.zeros(1))
    res = minimize_over_free_states(obj, P, budget, rho=a, starts=starts)
    lam = max(res.value, 1.0)
    return MeasureReport(
        float(np.log2(lam)),
        method="optimizer",
        bound="upper",
        converged=res.converged,
        argmax=res.argmax,
        witness={"lambda": res.value},
    )


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------


def convex_combination(measures: Sequence[Callable], weights: Sequence[float]) -> Callable:
    """Measure ``rho -> sum_j q_j C_j(rho)``.

    Each component is called as ``C_j(rho, P)`` and may return a number or a
    :class:`MeasureReport`. Components with zero weight are never evaluated.
    """
    q = np.asarray(weights, dtype=float)
    if len(measures) != q.size or q.size == 0:
        raise ValidationError("need one weight per measure")
    if np.any(q < 0) or abs(q.sum() - 1.0) > 1e-12:
        raise ValidationError("weights must be non-negative and sum to 1")
    measures = list(measures)

    def combined(rho, P):
        return sum(qj * value_of(m(rho, P)) for qj, m in zip(q, measures) if qj > 0)

    return combined


def convex_roof_ub(measure: Callable, rho, P: ProjectorSet, samples: int = 64, seed=0) -> MeasureReport:
    """Sampled upper bound on the convex roof ``min sum_j q_j C(rho_j)``.

    Candidates: the trivial decomposition ``{rho}``, the eigendecomposition,
    and ``samples`` pure-state decompositions ``psi_j = sum_i U_ji sqrt(l_i) v_i``
    built from random isometries ``U`` with between ``r`` and ``2 r`` rows
    (``r`` = rank). The minimum weighted sum over candidates is returned.
    """
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    a = _check(rho, P)
    rng = np.random.default_rng(seed)
    w, v = hermitian_eig(a)
    keep = w > 1e-12
    w, v = w[keep], v[:, keep]
    r = w.size
    vecs = v * np.sqrt(w)  # columns sqrt(l_i) v_i

    def weighted(isometry):
        total = 0.0
        for row in isometry:
            psi = vecs @ row
            qj = float(np.vdot(psi, psi).real)
            if qj <= 1e-15:
                continue
            total += qj * value_of(measure(np.outer(psi, psi.conj()) / qj, P))
        return total

    trivial = value_of(measure(a, P))
    eig_value = weighted(np.eye(r))
    best_pure = eig_value
    for _ in range(samples):
        k = int(rng.integers(r, 2 * r + 1))
        u = random_unitary(k, rng)[:, :r]
        best_pure = min(best_pure, weighted(u))
    return MeasureReport(
        min(trivial, best_pure),
        method="roof-sampling",
        bound="upper",
        witness={"trivial": trivial, "eigendecomposition": eig_value, "best_pure_decomposition": best_pure},
    )


MEASURES = {
    "c_alpha_1": lambda rho, P, p: c_alpha_1(rho, P, p.alpha),
    "c_alpha_z": lambda rho, P, p: c_alpha_z(rho, P, p),
    "c_geo": lambda rho, P, p: c_geo(rho, P, p.budget),
    "c_wy": lambda rho, P, p: c_wy(rho, P),
    "c_tsallis_T": lambda rho, P, p: c_tsallis_T(rho, P, p.alpha),
    "c_tsallis_N": lambda rho, P, p: c_tsallis_N(rho, P, p.beta, p.budget),
    "c_trace": lambda rho, P, p: c_trace(rho, P, p.budget),
    "c_rob": lambda rho, P, p: c_rob(rho, P, p.budget),
    "c_max": lambda rho, P, p: c_max(rho, P, p.budget),
    "c_rel_entropy": lambda rho, P, p: c_rel_entropy(rho, P),
    "c_l1_tilde": lambda rho, P, p: c_l1_tilde(rho, P),
}
"""Measure registry used by the command-line interface: ``name -> f(rho, P, params)``."""
