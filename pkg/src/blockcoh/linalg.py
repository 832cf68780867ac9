"""Dense Hermitian linear algebra used throughout the package.

All functions accept plain ``numpy`` arrays or :class:`QuantumState` objects.
Dimensions here are small (at most 16), so robustness takes priority over
asymptotic speed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-9
TRACE_TOL = 1e-9


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


class NotPSDError(ValidationError):
    """Raised when a matrix has an eigenvalue below ``-PSD_TOL``."""


def as_matrix(m) -> np.ndarray:
    """Return ``m`` as a square complex128 array, validating the shape."""
    if isinstance(m, (QuantumState, PureState)):
        return m.matrix
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")
    return np.ascontiguousarray(a)


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    a = as_matrix(m)
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= tol)


def _require_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    dev = np.max(np.abs(a - a.conj().T), initial=0.0)
    if dev > tol:
        raise ValidationError(f"matrix is not Hermitian (max deviation {dev:.3g})")


def hermitian_eig(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Args:
        m: Hermitian matrix (tolerance 1e-10).

    Returns:
        ``(eigenvalues, eigenvectors)`` with eigenvalues in descending order and
        eigenvectors as the columns of a unitary matrix.

    Raises:
        ValidationError: if ``m`` is not Hermitian.
    """
    a = as_matrix(m)
    _require_hermitian(a)
    return _kernels.eigh(a)


def _psd_spectrum(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w, v = hermitian_eig(a)
    if w[-1] < -PSD_TOL:
        raise NotPSDError(f"matrix is not positive semidefinite (min eigenvalue {w[-1]:.3g})")
    return np.clip(w, 0.0, None), v


def frac_power(m, p: float) -> np.ndarray:
    """Spectral power ``m**p`` of a PSD matrix on its support.

    Eigenvalues below a relative tolerance of 1e-12 are treated as exact zeros
    and mapped to 0 for every ``p`` (so negative powers act as pseudo-inverse
    powers).

    Raises:
        NotPSDError: if an eigenvalue is below -1e-9.
    """
    w, v = _psd_spectrum(as_matrix(m))
    cut = _kernels.support_cut(w[0]) if w.size else 0.0
    f = np.zeros_like(w)
    mask = w > cut
    f[mask] = w[mask] ** p
    return _kernels.from_spectrum(v, f)


def sqrtm_psd(m) -> np.ndarray:
    return frac_power(m, 0.5)


def trace_norm(m) -> float:
    """Sum of singular values of a square matrix."""
    a = as_matrix(m)
    if np.max(np.abs(a - a.conj().T), initial=0.0) <= HERMITIAN_TOL:
        w, _ = _kernels.eigh(a)
        return float(np.sum(np.abs(w)))
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


def fidelity(a, b) -> float:
    """Uhlmann fidelity ``Tr sqrt(sqrt(a) b sqrt(a))`` (not squared)."""
    ma, mb = as_matrix(a), as_matrix(b)
    if ma.shape != mb.shape:
        raise ValidationError("fidelity: dimension mismatch")
    _psd_spectrum(mb)
    s = sqrtm_psd(ma)
    w, _ = _psd_spectrum(0.5 * ((s @ mb @ s) + (s @ mb @ s).conj().T))
    return float(np.sum(np.sqrt(w)))


def von_neumann_entropy(rho, base: float = 2.0) -> float:
    """Entropy ``-Tr rho log rho`` with ``0 log 0 = 0``.

    Args:
        rho: PSD matrix.
        base: logarithm base; bits by default, ``np.e`` for nats.
    """
    w, _ = _psd_spectrum(as_matrix(rho))
    w = w[w > 0.0]
    return float(-np.sum(w * np.log(w)) / np.log(base))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_state(dim: int, kind: str = "mixed", seed=None) -> QuantumState:
    """Sample a random density matrix.

    Args:
        dim: Hilbert-space dimension (>= 2).
        kind: ``"pure"`` for a normalized complex Gaussian vector (Haar pure
            state) or ``"mixed"`` for the Ginibre ensemble ``G G^dagger / Tr``.
        seed: integer seed or ``numpy.random.Generator``.
    """
    if dim < 2:
        raise ValidationError("dim must be >= 2")
    rng = np.random.default_rng(seed)
    if kind == "pure":
        psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        return PureState(psi / np.linalg.norm(psi)).to_state()
    if kind == "mixed":
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        rho = g @ g.conj().T
        return QuantumState(rho / np.trace(rho).real)
    raise ValidationError(f"unknown kind {kind!r}; expected 'pure' or 'mixed'")


@dataclass(frozen=True, eq=False)
class QuantumState:
    """A density matrix with trace bookkeeping.

    Attributes:
        matrix: Hermitian PSD matrix.
        normalized: whether the trace is 1 (``False`` for decaying states,
            where ``0 <= Tr <= 1`` is required instead).
    """

    matrix: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        a = as_matrix(self.matrix)
        _require_hermitian(a)
        a = 0.5 * (a + a.conj().T)
        w = _kernels.eigh(a)[0]
        if w[-1] < -PSD_TOL:
            raise NotPSDError(f"state has eigenvalue {w[-1]:.3g} < -{PSD_TOL}")
        tr = float(np.trace(a).real)
        if self.normalized and abs(tr - 1.0) > TRACE_TOL:
            raise ValidationError(f"normalized state has trace {tr!r}")
        if not self.normalized and not (0.0 <= tr <= 1.0 + TRACE_TOL):
            raise ValidationError(f"decaying state has trace {tr!r} outside [0, 1]")
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


@dataclass(frozen=True, eq=False)
class PureState:
    """A unit vector of amplitudes."""

    amplitudes: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=np.complex128).ravel()
        if abs(np.linalg.norm(v) - 1.0) > 1e-12:
            raise ValidationError(f"pure state has norm {np.linalg.norm(v)!r}")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def to_state(self) -> QuantumState:
        return QuantumState(self.matrix)


def nearest_density_matrix(m) -> tuple[np.ndarray, float]:
    """Project onto the set of density matrices in Frobenius norm.

    Hermitizes, then projects the spectrum onto the probability simplex.
    Inputs that already are density matrices (to 1e-12) are returned
    unchanged, which makes the projection idempotent bit for bit.

    Returns:
        ``(rho, distance)`` with the Frobenius distance from the input.
    """
    a = as_matrix(m)
    h = 0.5 * (a + a.conj().T)
    w, v = np.linalg.eigh(h)
    if np.array_equal(h, a) and w[0] >= -1e-12 and abs(np.trace(a).real - 1.0) <= 1e-12:
        return a.copy(), 0.0
    # Euclidean projection of w onto the simplex (sort-and-threshold).
    u = np.sort(w)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, u.size + 1)
    r = k[u - css / k > 0][-1]
    theta = css[r - 1] / r
    p = np.clip(w - theta, 0.0, None)
    rho = (v * p) @ v.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return rho, float(np.linalg.norm(rho - a))
