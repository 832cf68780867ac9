import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockcoh.blocks import (
    PRODUCT_TO_ST,
    ProjectorSet,
    block_dephase,
    block_diagonal_unitary,
    is_block_incoherent,
    off_block,
    product_to_st,
    singlet_projector_product,
    st_projectors,
    st_to_product,
)
from blockcoh.linalg import ValidationError, random_state, random_unitary


def test_st_projectors_are_canonical(P):
    np.testing.assert_array_equal(P.projectors[0], np.diag([1, 0, 0, 0]))
    np.testing.assert_array_equal(P.projectors[1], np.diag([0, 1, 1, 1]))
    assert P.ranks == (1, 3)
    assert len(P) == 2


def test_product_basis_singlet_matches_rotation():
    qs = singlet_projector_product()
    np.testing.assert_allclose(product_to_st(qs), np.diag([1, 0, 0, 0]), atol=1e-15)
    np.testing.assert_allclose(PRODUCT_TO_ST.conj().T @ PRODUCT_TO_ST, np.eye(4), atol=1e-15)
    # singlet is antisymmetric under exchanging the two spins
    swap = np.eye(4)[[0, 2, 1, 3]]
    s = PRODUCT_TO_ST[:, 0]
    np.testing.assert_allclose(swap @ s, -s, atol=1e-15)


def test_basis_round_trip(rng):
    rho = random_state(4, "mixed", rng).matrix
    np.testing.assert_allclose(st_to_product(product_to_st(rho)), rho, atol=1e-14)


@pytest.mark.parametrize(
    "projectors, message",
    [
        ((np.diag([1, 0]), np.diag([1, 1])), "orthogonal"),
        ((np.diag([1, 0]),), "identity"),
        ((np.array([[1, 1], [0, 0]]), np.diag([0, 1])), "Hermitian"),
        ((np.diag([2, 0]), np.diag([0, 1])), "idempotent"),
        ((np.zeros((2, 2)), np.eye(2)), "zero"),
    ],
)
def test_projector_set_rejects_invalid(projectors, message):
    with pytest.raises(ValidationError, match=message):
        ProjectorSet(projectors)


def test_from_spec_and_partition():
    P = ProjectorSet.from_spec("0,2|1|3")
    assert P.ranks == (2, 1, 1)
    np.testing.assert_array_equal(P.projectors[0], np.diag([1, 0, 1, 0]))
    with pytest.raises(ValidationError):
        ProjectorSet.from_spec("0|1,1,3")
    with pytest.raises(ValidationError):
        ProjectorSet.from_spec("a|b")


def test_frame_makes_blocks_contiguous(rng):
    u = random_unitary(4, rng)
    P = ProjectorSet(tuple(u @ np.diag(d) @ u.conj().T for d in ([1, 0, 0, 0], [0, 1, 1, 0], [0, 0, 0, 1])))
    for p, sl in zip(P.projectors, P.block_slices()):
        pf = P.to_frame(p)
        expected = np.zeros(4)
        expected[sl] = 1
        np.testing.assert_allclose(pf, np.diag(expected), atol=1e-12)
    rho = random_state(4, "mixed", rng).matrix
    np.testing.assert_allclose(P.from_frame(P.to_frame(rho)), rho, atol=1e-12)


def test_block_dephase_examples(P):
    v = np.array([1, 0, 1, 0]) / np.sqrt(2)
    rho = np.outer(v, v)
    np.testing.assert_allclose(block_dephase(rho, P), np.diag([0.5, 0, 0.5, 0]), atol=1e-15)
    assert not is_block_incoherent(rho, P)
    assert is_block_incoherent(block_dephase(rho, P), P)
    np.testing.assert_allclose(off_block(rho, P, 0, 1)[0, 2], 0.5)
    with pytest.raises(ValidationError):
        off_block(rho, P, 0, 2)
    with pytest.raises(ValidationError):
        is_block_incoherent(rho, P, tol=0)


def test_dephasing_channel_properties(P, rng):
    for _ in range(1000):
        rho = random_state(4, "mixed", rng).matrix
        d = block_dephase(rho, P)
        assert np.trace(d).real == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.eigvalsh(d).min() > -1e-12
        np.testing.assert_allclose(block_dephase(d, P), d, atol=1e-15)


def test_dephasing_commutes_with_block_unitaries(P, rng):
    for _ in range(100):
        u = block_diagonal_unitary([random_unitary(1, rng), random_unitary(3, rng)], P)
        np.testing.assert_allclose(u @ u.conj().T, np.eye(4), atol=1e-10)
        rho = random_state(4, "mixed", rng).matrix
        lhs = block_dephase(u @ rho @ u.conj().T, P)
        rhs = u @ block_dephase(rho, P) @ u.conj().T
        np.testing.assert_allclose(lhs, rhs, atol=1e-9)


def test_block_diagonal_unitary_validation(P):
    np.testing.assert_array_equal(block_diagonal_unitary([np.eye(1), np.eye(3)], P), np.eye(4))
    phases = block_diagonal_unitary([np.array([[1j]]), -np.eye(3)], P)
    np.testing.assert_allclose(phases, np.diag([1j, -1, -1, -1]))
    with pytest.raises(ValidationError):
        block_diagonal_unitary([np.eye(1)], P)
    with pytest.raises(ValidationError):
        block_diagonal_unitary([np.eye(2), np.eye(2)], P)
    with pytest.raises(ValidationError):
        block_diagonal_unitary([np.array([[2.0]]), np.eye(3)], P)


def test_tensor_projectors():
    q = ProjectorSet.from_spec("0|1", 2)
    t = q.tensor(q)
    assert t.dim == 4 and len(t) == 4
    assert t.ranks == (1, 1, 1, 1)


def test_product_basis_projectors_agree_with_st(rng):
    Pp = st_projectors("product")
    rho = random_state(4, "mixed", rng).matrix
    np.testing.assert_allclose(
        product_to_st(block_dephase(st_to_product(rho), Pp)), block_dephase(rho, st_projectors()), atol=1e-12
    )


@settings(max_examples=40, deadline=None)
@given(st.permutations(range(4)), st.integers(1, 3))
def test_partition_projectors_resolve_identity(perm, cut):
    P = ProjectorSet.from_partition(4, [list(perm[:cut]), list(perm[cut:])])
    np.testing.assert_array_equal(sum(P.projectors), np.eye(4))
    assert sum(P.ranks) == 4
