import numpy as np
import pytest

from subincompat import corpus, linalg
from subincompat.povm import (
    Assemblage,
    ParentPovm,
    Povm,
    binarisations,
    coarse_grain,
    depolarise,
    from_basis,
    post_process,
    random_povm,
    truncate,
    validate,
)

from helpers import sigma_xz_pair


def test_povm_constructor_validation():
    eye = np.eye(2, dtype=complex)
    Povm(2, [eye / 2, eye / 2])  # valid
    with pytest.raises(ValueError):
        Povm(2, [eye, eye])  # sums to 2*I
    with pytest.raises(ValueError):
        Povm(2, [np.diag([1.5, 0.0]).astype(complex), np.diag([-0.5, 1.0]).astype(complex)])
    with pytest.raises(ValueError):
        Povm(2, [np.array([[0.5, 0.5], [0.0, 0.5]]), eye / 2])  # not hermitian


def test_assemblage_requires_common_dimension():
    eye2 = np.eye(2, dtype=complex)
    eye3 = np.eye(3, dtype=complex)
    with pytest.raises(ValueError):
        Assemblage(2, [Povm(2, [eye2 / 2, eye2 / 2]), Povm(3, [eye3 / 2, eye3 / 2])])


def test_validate_reports_diagnostics_without_raising():
    eye = np.eye(2, dtype=complex)
    good = validate(sigma_xz_pair())
    assert good["valid"] is True
    bad = validate([[np.diag([1.5, 0.0]).astype(complex), np.diag([-0.5, 1.0]).astype(complex)]])
    assert bad["valid"] is False


def test_parent_povm_marginals():
    par = corpus.build("parent-four-outcome")
    noisy = corpus.build("sigma-xz-noisy")
    for x in range(2):
        marg = par.marginal(x)
        for k in range(2):
            assert np.abs(marg.elements[k] - noisy.measurements[x].elements[k]).max() < 1e-14


def test_binarisations_count_and_effects():
    rng = np.random.default_rng(10)
    m = random_povm(3, 4, rng)
    bins = binarisations(m)
    assert len(bins) == 2 ** (m.n_outcomes - 1) - 1
    for subset, b in bins:
        assert 0 in subset
        expected = sum(m.elements[i] for i in subset)
        assert np.abs(b.elements[0] - expected).max() < 1e-12
        assert np.abs(b.elements[0] + b.elements[1] - np.eye(3)).max() < 1e-12


def test_coarse_grain_validates_partition():
    rng = np.random.default_rng(11)
    m = random_povm(2, 4, rng)
    c = coarse_grain(m, [[0, 1], [2], [3]])
    assert c.n_outcomes == 3
    assert np.abs(c.elements[0] - (m.elements[0] + m.elements[1])).max() < 1e-12
    with pytest.raises(ValueError):
        coarse_grain(m, [[0, 1], [1, 2], [3]])  # overlap
    with pytest.raises(ValueError):
        coarse_grain(m, [[0, 1], [2]])  # missing outcome


def test_depolarise_limits_and_bounds():
    a = sigma_xz_pair()
    same = depolarise(a, 1.0)
    for x in range(2):
        for k in range(2):
            assert np.abs(same.measurements[x].elements[k] - a.measurements[x].elements[k]).max() < 1e-14
    flat = depolarise(a, 0.0)
    for m in flat.measurements:
        for e in m.elements:
            assert np.abs(e - np.trace(e).real * np.eye(2) / 2).max() < 1e-14
    with pytest.raises(ValueError):
        depolarise(a, 1.5)
    with pytest.raises(ValueError):
        depolarise(a, -0.1)


def test_post_process_reproduces_marginals():
    rng = np.random.default_rng(12)
    g = random_povm(2, 4, rng)
    par = ParentPovm(2, [(0, 0), (0, 1), (1, 0), (1, 1)], g.elements, (2, 2))
    # deterministic kernels selecting each coordinate
    ka = np.array([[1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0]])
    kb = np.array([[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 1.0]])
    a = post_process(par, [ka, kb])
    for x in range(2):
        marg = par.marginal(x)
        for k in range(2):
            assert np.abs(a.measurements[x].elements[k] - marg.elements[k]).max() < 1e-12
    with pytest.raises(ValueError):
        post_process(par, [ka * 0.5])  # columns no longer sum to one


def test_truncate_keeps_zero_elements_and_dimension():
    a = corpus.build("qutrit-pair")
    p = linalg.projector_from_basis(
        [np.eye(3, dtype=complex)[:, 0], np.eye(3, dtype=complex)[:, 1]]
    )
    t = truncate(a, p)
    assert t.dim == 2
    assert t.outcome_counts() == a.outcome_counts()  # zero elements preserved
    # conjugation rule: B^dag E B on the subspace basis
    e = a.measurements[1].elements[0]
    expected = p.basis.conj().T @ e @ p.basis
    assert np.abs(t.measurements[1].elements[0] - expected).max() < 1e-12


def test_truncate_by_identity_is_identity():
    a = sigma_xz_pair()
    p = linalg.projector_from_basis([np.eye(2, dtype=complex)[:, k] for k in range(2)])
    t = truncate(a, p)
    for x in range(2):
        for k in range(2):
            assert np.abs(t.measurements[x].elements[k] - a.measurements[x].elements[k]).max() < 1e-14


def test_from_basis_rejects_non_orthonormal():
    with pytest.raises(ValueError):
        from_basis([np.array([1, 0], dtype=complex), np.array([1, 1], dtype=complex) / np.sqrt(2)])
    m = from_basis([np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)])
    assert m.n_outcomes == 2
    for e in m.elements:
        assert np.abs(e @ e - e).max() < 1e-12  # projective


def test_random_povm_valid_and_deterministic():
    m1 = random_povm(3, 4, np.random.default_rng(13))
    m2 = random_povm(3, 4, np.random.default_rng(13))
    assert all(np.array_equal(a, b) for a, b in zip(m1.elements, m2.elements))
    assert np.abs(sum(m1.elements) - np.eye(3)).max() < 1e-12
    for e in m1.elements:
        assert linalg.min_eigenvalue(e) > -1e-12


def test_zero_element_detection():
    eye = np.eye(2, dtype=complex)
    m = Povm(2, [eye / 2, eye / 2, np.zeros((2, 2), dtype=complex)])
    assert m.is_zero_element(2)
    assert not m.is_zero_element(0)
