"""Projector sets, block dephasing and the singlet-triplet block structure."""

from __future__ import annotations

import itertools
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .linalg import ValidationError, as_matrix

PROJECTOR_TOL = 1e-9

# Product basis order: |uu>, |ud>, |du>, |dd>.  Columns are |S>, |T+1>, |T0>, |T-1>.
_R2 = 1.0 / np.sqrt(2.0)
PRODUCT_TO_ST = np.array(
    [
        [0.0, 1.0, 0.0, 0.0],
        [_R2, 0.0, _R2, 0.0],
        [-_R2, 0.0, _R2, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ],
    dtype=np.complex128,
)
ST_LABELS = ("S", "T+1", "T0", "T-1")


def product_to_st(m) -> np.ndarray:
    """Rotate an operator from the product basis into the S-T basis."""
    a = as_matrix(m)
    return PRODUCT_TO_ST.conj().T @ a @ PRODUCT_TO_ST


def st_to_product(m) -> np.ndarray:
    """Rotate an operator from the S-T basis into the product basis."""
    a = as_matrix(m)
    return PRODUCT_TO_ST @ a @ PRODUCT_TO_ST.conj().T


def spin_operators() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Single spin-1/2 operators ``(sx, sy, sz)`` equal to Pauli/2."""
    sx = 0.5 * np.array([[0, 1], [1, 0]], dtype=np.complex128)
    sy = 0.5 * np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
    sz = 0.5 * np.array([[1, 0], [0, -1]], dtype=np.complex128)
    return sx, sy, sz


def singlet_projector_product() -> np.ndarray:
    """``Q_S = I/4 - s_D . s_A`` written in the product basis."""
    eye2 = np.eye(2)
    dot = sum(np.kron(s, eye2) @ np.kron(eye2, s) for s in spin_operators())
    return 0.25 * np.eye(4) - dot


@dataclass(frozen=True, eq=False)
class ProjectorSet:
    """A complete family of mutually orthogonal projectors.

    Internally every set carries a *frame*: a unitary ``W`` whose columns are
    orthonormal bases of the projector ranges in order, so that ``W^dagger P_k W``
    is a contiguous diagonal block. Measures work in that frame; because all
    of them are unitarily covariant this changes nothing but the cost.

    Attributes:
        projectors: tuple of ``dim x dim`` projector matrices.
        partition: index blocks when the projectors are diagonal in the
            working basis, otherwise ``None``.
    """

    projectors: tuple
    partition: tuple | None = None
    frame: np.ndarray = field(init=False, repr=False)
    sizes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        ps = tuple(as_matrix(p) for p in self.projectors)
        if not ps:
            raise ValidationError("projector set is empty")
        dim = ps[0].shape[0]
        total = np.zeros((dim, dim), dtype=np.complex128)
        cols = []
        sizes = []
        for k, p in enumerate(ps):
            if p.shape != (dim, dim):
                raise ValidationError("projectors have inconsistent dimensions")
            if np.max(np.abs(p - p.conj().T)) > PROJECTOR_TOL:
                raise ValidationError(f"projector {k} is not Hermitian")
            if np.max(np.abs(p @ p - p)) > PROJECTOR_TOL:
                raise ValidationError(f"projector {k} is not idempotent")
            for j in range(k):
                if np.max(np.abs(p @ ps[j])) > PROJECTOR_TOL:
                    raise ValidationError(f"projectors {j} and {k} are not orthogonal")
            total += p
            w, v = np.linalg.eigh(p)
            basis = v[:, w > 0.5]
            if basis.shape[1] == 0:
                raise ValidationError(f"projector {k} is zero")
            cols.append(basis)
            sizes.append(basis.shape[1])
        if np.max(np.abs(total - np.eye(dim))) > PROJECTOR_TOL:
            raise ValidationError("projectors do not sum to the identity")
        if self.partition is not None:
            cols = [np.eye(dim)[:, list(b)] for b in self.partition]
        frame = np.ascontiguousarray(np.hstack(cols).astype(np.complex128))
        for p in ps:
            p.setflags(write=False)
        frame.setflags(write=False)
        object.__setattr__(self, "projectors", ps)
        object.__setattr__(self, "frame", frame)
        object.__setattr__(self, "sizes", np.array(sizes, dtype=np.int64))

    @classmethod
    def from_partition(cls, dim: int, blocks: Sequence[Sequence[int]]) -> ProjectorSet:
        """Diagonal projectors from an index partition such as ``[[0], [1, 2, 3]]``."""
        flat = sorted(i for b in blocks for i in b)
        if flat != list(range(dim)):
            raise ValidationError(f"blocks {blocks!r} do not partition range({dim})")
        ps = []
        for b in blocks:
            p = np.zeros((dim, dim), dtype=np.complex128)
            p[list(b), list(b)] = 1.0
            ps.append(p)
        return cls(tuple(ps), partition=tuple(tuple(int(i) for i in b) for b in blocks))

    @classmethod
    def from_spec(cls, spec: str, dim: int = 4) -> ProjectorSet:
        """Parse ``"st"`` or an index partition string like ``"0|1,2,3"``."""
        if spec.strip().lower() == "st":
            return st_projectors()
        try:
            blocks = [[int(i) for i in part.split(",")] for part in spec.split("|")]
        except ValueError as exc:
            raise ValidationError(f"bad projector spec {spec!r}") from exc
        return cls.from_partition(dim, blocks)

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(int(s) for s in self.sizes)

    def __len__(self) -> int:
        return len(self.projectors)

    def to_frame(self, m) -> np.ndarray:
        """Express an operator in the block frame."""
        a = as_matrix(m)
        if a.shape[0] != self.dim:
            raise ValidationError(f"dimension mismatch: {a.shape[0]} vs {self.dim}")
        return np.ascontiguousarray(self.frame.conj().T @ a @ self.frame)

    def from_frame(self, m) -> np.ndarray:
        """Map an operator from the block frame back to the working basis."""
        return self.frame @ np.asarray(m) @ self.frame.conj().T

    def block_slices(self) -> list[slice]:
        off = np.concatenate([[0], np.cumsum(self.sizes)])
        return [slice(int(a), int(b)) for a, b in itertools.pairwise(off)]

    def tensor(self, other: ProjectorSet) -> ProjectorSet:
        """Projector set ``{P_i (x) T_j}`` on the tensor-product space."""
        return ProjectorSet(tuple(np.kron(p, t) for p in self.projectors for t in other.projectors))


def st_projectors(basis: str = "st") -> ProjectorSet:
    """Singlet/triplet projectors ``{Q_S, Q_T}``.

    Args:
        basis: ``"st"`` for the canonical order (|S>, |T+1>, |T0>, |T-1>), where
            ``Q_S = diag(1, 0, 0, 0)``; ``"product"`` for the spin product basis.
    """
    if basis == "st":
        return ProjectorSet.from_partition(4, [[0], [1, 2, 3]])
    if basis == "product":
        qs = singlet_projector_product()
        return ProjectorSet((qs, np.eye(4) - qs))
    raise ValidationError(f"unknown basis {basis!r}")


def _check_dim(a: np.ndarray, P: ProjectorSet) -> None:
    if a.shape[0] != P.dim:
        raise ValidationError(f"dimension mismatch: state {a.shape[0]} vs projectors {P.dim}")


def block_dephase(rho, P: ProjectorSet) -> np.ndarray:
    """The block-dephasing channel ``sum_k P_k rho P_k``."""
    a = as_matrix(rho)
    _check_dim(a, P)
    return sum(p @ a @ p for p in P.projectors)


def is_block_incoherent(rho, P: ProjectorSet, tol: float = 1e-9) -> bool:
    """True when ``max |rho - Delta(rho)| <= tol``."""
    if tol <= 0:
        raise ValidationError("tol must be positive")
    a = as_matrix(rho)
    return bool(np.max(np.abs(a - block_dephase(a, P))) <= tol)


def off_block(rho, P: ProjectorSet, i: int, j: int) -> np.ndarray:
    """Return ``P_i rho P_j``."""
    a = as_matrix(rho)
    _check_dim(a, P)
    n = len(P)
    if not (0 <= i < n and 0 <= j < n):
        raise ValidationError(f"block labels ({i}, {j}) out of range for {n} blocks")
    return P.projectors[i] @ a @ P.projectors[j]


def block_diagonal_unitary(blocks: Sequence, P: ProjectorSet) -> np.ndarray:
    """Assemble ``U = sum_k W_k U_k W_k^dagger`` from per-block unitaries.

    ``W_k`` are the frame columns spanning the range of ``P_k``, so the result
    commutes with every projector.
    """
    if len(blocks) != len(P):
        raise ValidationError("need one unitary per projector")
    u = np.zeros((P.dim, P.dim), dtype=np.complex128)
    for blk, sl, r in zip(blocks, P.block_slices(), P.ranks):
        b = as_matrix(blk)
        if b.shape[0] != r:
            raise ValidationError(f"block of size {b.shape[0]} does not match rank {r}")
        if np.max(np.abs(b @ b.conj().T - np.eye(r))) > 1e-10:
            raise ValidationError("block is not unitary")
        u[sl, sl] = b
    return P.from_frame(u)
