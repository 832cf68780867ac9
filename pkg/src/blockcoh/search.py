"""Optimization over block-incoherent (free) states.

Free states are parametrized by one complex lower-triangular factor per
block, ``sigma = (+)_k L_k L_k^dagger / sum_k Tr(L_k L_k^dagger)``. This covers
every block-diagonal density matrix, keeps the search unconstrained, and lets
a derivative-free Nelder-Mead simplex do the work. The same parametrization
without the trace normalization spans the cone of block-diagonal PSD
matrices, which the trace-distance and robustness searches use.

Objectives come in two flavors:

* :class:`KernelObjective` wraps one of the compiled loss functions from
  :mod:`blockcoh._kernels`; the whole search then runs in compiled code.
* Any Python callable ``f(sigma) -> float`` on matrices in the working basis.
  It runs through the interpreted copy of the same simplex routine.
"""

from __future__ import annotations

import itertools
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._accel import py_func
from .blocks import ProjectorSet, block_dephase
from .linalg import ValidationError, as_matrix

REGULARIZATION = 1e-12


class OptimizationError(RuntimeError):
    """Raised when a search cannot produce a finite objective value."""


@dataclass(frozen=True)
class OptimizerBudget:
    """Search budget.

    Attributes:
        restarts: number of restarts, counting the warm start; the rest use
            random block factors.
        max_iter: Nelder-Mead iterations per restart.
        ftol: stop when the simplex values agree to this absolute tolerance.
        seed: seed for the random restarts.
        polish: re-run the simplex from the best point with a small step.
    """

    restarts: int = 16
    max_iter: int = 2000
    ftol: float = 1e-10
    seed: int = 0
    polish: bool = True

    def __post_init__(self):
        if self.restarts < 1 or self.max_iter < 1 or not self.ftol > 0 or self.seed < 0:
            raise ValidationError(f"invalid optimizer budget {self!r}")


@dataclass(frozen=True, eq=False)
class FreeStateParam:
    """Real parameter vector for per-block lower-triangular factors."""

    x: np.ndarray
    sizes: np.ndarray

    def cone_matrix(self) -> np.ndarray:
        """Unnormalized block-diagonal matrix in the block frame."""
        return _kernels.cone_from_params(np.asarray(self.x, dtype=float), self.sizes)

    def state(self, P: ProjectorSet) -> np.ndarray:
        """Normalized free state in the working basis."""
        b = self.cone_matrix()
        return P.from_frame(b / np.trace(b).real)

    @classmethod
    def from_block_matrix(cls, b_frame: np.ndarray, sizes: np.ndarray) -> FreeStateParam:
        """Factor a block-diagonal PSD matrix (given in the block frame)."""
        b_frame = np.asarray(b_frame, dtype=np.complex128)
        xs = []
        off = np.concatenate([[0], np.cumsum(sizes)])
        for a, e in itertools.pairwise(off):
            blk = b_frame[a:e, a:e]
            blk = 0.5 * (blk + blk.conj().T) + REGULARIZATION * np.eye(e - a)
            w, v = np.linalg.eigh(blk)
            # B = S S with S = B^(1/2); S = QR gives B = R^dagger R, so L = R^dagger.
            # Unlike a Cholesky call this cannot fail on blocks that are PSD only to rounding.
            root = (v * np.sqrt(np.clip(w, REGULARIZATION, None))) @ v.conj().T
            r_fac = np.linalg.qr(root, mode="r")
            d = np.diagonal(r_fac).copy()
            d[np.abs(d) == 0] = 1.0
            lo = (r_fac * (np.abs(d) / d)[:, None]).conj().T
            r = e - a
            diag = lo.diagonal().real
            lower = [(lo[i, j].real, lo[i, j].imag) for i in range(r) for j in range(i)]
            xs.append(np.concatenate([diag, np.array(lower, dtype=float).ravel()]))
        return cls(np.concatenate(xs), np.asarray(sizes, dtype=np.int64))


def warm_start(rho, P: ProjectorSet) -> FreeStateParam:
    """Factors reproducing ``Delta(rho)`` (each block regularized by 1e-12 I)."""
    return FreeStateParam.from_block_matrix(P.to_frame(block_dephase(rho, P)), P.sizes)


@dataclass(frozen=True, eq=False)
class KernelObjective:
    """A compiled loss ``f(x, sizes, mats, pars)`` to be minimized.

    Attributes:
        loss: compiled loss function from :mod:`blockcoh._kernels`.
        mats: stack of fixed matrices in the block frame.
        pars: real parameters.
        cone: search the unnormalized cone instead of normalized states.
    """

    loss: Callable
    mats: np.ndarray
    pars: np.ndarray
    cone: bool = False


@dataclass(eq=False)
class SearchResult:
    """Outcome of a free-state search.

    ``value`` is the best objective value found. For maximizations it is a
    lower bound on the true maximum, for minimizations an upper bound on the
    true minimum. ``argmax`` is the normalized free state attaining it (in the
    working basis); ``point`` is the raw matrix (unnormalized for cone searches).
    """

    value: float
    argmax: np.ndarray
    converged: bool
    point: np.ndarray
    param: FreeStateParam
    runs: int = 0
    history: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.value, self.argmax, self.converged))


def _random_start(sizes, rng, scale) -> np.ndarray:
    x = rng.standard_normal(int(np.sum(sizes * sizes)))
    b = _kernels.cone_from_params(x, sizes)
    return x * np.sqrt(scale / np.trace(b).real)


def _search(loss, mats, pars, P, budget, starts, scale, compiled):
    budget = budget or OptimizerBudget()
    sizes = P.sizes
    nm = _kernels.nelder_mead if compiled else py_func(_kernels.nelder_mead)
    rng = np.random.default_rng(budget.seed)
    inits = list(starts)
    for _ in range(budget.restarts - 1):
        inits.append(_random_start(sizes, rng, scale))
    best_x, best_f, best_conv = None, np.inf, False
    history = []
    for x0 in inits:
        x, f, _it, conv = nm(loss, np.asarray(x0, float), 0.25, budget.max_iter, budget.ftol, sizes, mats, pars)
        history.append(float(f))
        if f < best_f:
            best_x, best_f, best_conv = x, f, conv
    if budget.polish and best_x is not None:
        x, f, _it, conv = nm(loss, best_x, 0.02, budget.max_iter, budget.ftol, sizes, mats, pars)
        history.append(float(f))
        if f <= best_f:
            best_x, best_f, best_conv = x, f, conv
    if best_x is None or not np.isfinite(best_f) or best_f >= 0.5 * _kernels.BIG:
        raise OptimizationError("objective was non-finite on every probe")
    return best_x, float(best_f), bool(best_conv), history


def _wrap_callable(objective, P, sign):
    def loss(x, sizes, mats, pars):
        sigma, tr = _kernels.state_from_params(x, sizes)
        if tr == 0.0:
            return _kernels.BIG
        v = objective(P.from_frame(sigma))
        v = float(np.real(v))
        return sign * v if np.isfinite(v) else _kernels.BIG

    return loss


def _starts_for(P, rho, starts, cone):
    out = []
    mats = []
    if rho is not None:
        mats.append(P.to_frame(block_dephase(as_matrix(rho), P)))
    for s in starts:
        mats.append(P.to_frame(as_matrix(s)))
    for m in mats:
        if not cone:
            m = m / np.trace(m).real
        out.append(FreeStateParam.from_block_matrix(m, P.sizes).x)
    return out


def _optimize(objective, P, budget, rho, starts, sign):
    if isinstance(objective, KernelObjective):
        # Kernel losses are always minimized; maximizers pass the negation.
        loss, mats, pars, cone, compiled = objective.loss, objective.mats, objective.pars, objective.cone, True
    else:
        loss = _wrap_callable(objective, P, -sign)
        mats = np.zeros((1, P.dim, P.dim), dtype=np.complex128)
        pars = np.zeros(1)
        cone, compiled = False, False
    inits = _starts_for(P, rho, starts, cone)
    if not inits:
        eye = np.eye(P.dim, dtype=np.complex128) / P.dim
        inits = [FreeStateParam.from_block_matrix(eye, P.sizes).x]
    scale = float(np.trace(_kernels.cone_from_params(inits[0], P.sizes)).real) if cone else 1.0
    x, f, conv, history = _search(loss, mats, pars, P, budget, inits, scale, compiled)
    param = FreeStateParam(x, P.sizes)
    point = P.from_frame(param.cone_matrix())
    tr = np.trace(point).real
    return x, f, conv, history, param, point, point / tr


def maximize_over_free_states(
    objective,
    P: ProjectorSet,
    budget: OptimizerBudget | None = None,
    *,
    rho=None,
    starts: Sequence = (),
) -> SearchResult:
    """Maximize ``objective(sigma)`` over free states.

    Args:
        objective: Python callable on density matrices in the working basis,
            or a :class:`KernelObjective` whose loss is the *negated* objective.
        P: block structure.
        budget: search budget (defaults to :class:`OptimizerBudget`).
        rho: if given, the first restart starts from ``Delta(rho)``.
        starts: extra block-diagonal matrices used as deterministic starts.

    Returns:
        A :class:`SearchResult`; its value is a lower bound on the maximum.
    """
    _x, f, conv, history, param, point, sigma = _optimize(objective, P, budget, rho, starts, +1)
    return SearchResult(-f, sigma, conv, point, param, len(history), history)


def minimize_over_free_states(
    objective,
    P: ProjectorSet,
    budget: OptimizerBudget | None = None,
    *,
    rho=None,
    starts: Sequence = (),
) -> SearchResult:
    """Minimize ``objective(sigma)`` over free states (or the free cone).

    The counterpart of :func:`maximize_over_free_states`; the value is an upper
    bound on the true minimum. For a :class:`KernelObjective` with ``cone=True``
    the search runs over unnormalized block-diagonal PSD matrices and
    ``point`` holds the unnormalized minimizer.
    """
    _x, f, conv, history, param, point, sigma = _optimize(objective, P, budget, rho, starts, -1)
    return SearchResult(f, sigma, conv, point, param, len(history), history)
