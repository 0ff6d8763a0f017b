import numpy as np
import pytest

from subincompat import coexist, corpus, subspace

from helpers import compatible_pair


def _e5_basis():
    return [
        np.array([1, 2, 3], dtype=complex) / np.sqrt(14.0),
        np.array([-5, 1, 1], dtype=complex) / np.sqrt(27.0),
        np.array([1, 16, -11], dtype=complex) / np.sqrt(378.0),
    ]


def _comp_basis(d=3):
    return [np.eye(d, dtype=complex)[:, k] for k in range(d)]


def test_classify_fully_compressible_example():
    rep = subspace.classify(corpus.build("fully-compressible"), 2, 12, seed=3)
    assert rep.verdict == subspace.VERDICT_FULLY_COMPRESSIBLE
    assert abs(rep.full_eta - 0.67794429) < 1e-6
    assert all(r["verdict"] == "Incompatible" for r in rep.records)
    assert "incompatible" in rep.witnesses and "compatible" not in rep.witnesses


def test_classify_qutrit_pair_partly_compressible():
    rep = subspace.classify(corpus.build("qutrit-pair"), 2, 12, seed=11)
    assert rep.verdict == subspace.VERDICT_PARTLY_COMPRESSIBLE
    assert abs(rep.full_eta - 0.862372) < 1e-5
    # both witnessing projectors are recorded
    assert set(rep.witnesses) == {"compatible", "incompatible"}
    p = rep.witnesses["compatible"]
    assert p.rank == 2
    # probe records appear before Haar records
    kinds = [r["kind"] for r in rep.records]
    assert kinds.index("haar") >= kinds.count("probe")


def test_classify_compatible_everywhere_short_circuit():
    for i in range(20):
        pair = compatible_pair(3, 2, 2, np.random.default_rng(1200 + i))
        rep = subspace.classify(pair, 2, 2, seed=1200 + i)
        assert rep.verdict == subspace.VERDICT_COMPATIBLE_EVERYWHERE
        assert rep.samples == 0  # direct check short-circuits sampling


def test_classify_parallel_matches_serial():
    a = corpus.build("fully-compressible")
    r1 = subspace.classify(a, 2, 4, seed=9, jobs=1)
    r2 = subspace.classify(a, 2, 4, seed=9, jobs=2)
    assert r1.verdict == r2.verdict
    assert [rec["eta"] for rec in r1.records] == [rec["eta"] for rec in r2.records]


def test_classify_validates_n():
    a = corpus.build("fully-compressible")
    with pytest.raises(ValueError):
        subspace.classify(a, 1, 2, seed=0)
    with pytest.raises(ValueError):
        subspace.classify(a, 3, 2, seed=0)


def test_criterion_holds_for_e5_basis():
    holds, witness = subspace.fully_compressible_criterion(_comp_basis(), _e5_basis())
    assert holds and witness is None


def test_criterion_fails_for_fourier_basis():
    w = np.exp(2j * np.pi / 3)
    four = [np.array([1, w**k, w ** (2 * k)], dtype=complex) / np.sqrt(3.0) for k in range(3)]
    holds, witness = subspace.fully_compressible_criterion(_comp_basis(), four)
    assert not holds
    assert witness[0] == "triple" and len(witness) == 7


def test_criterion_fails_on_orthogonal_overlap():
    holds, witness = subspace.fully_compressible_criterion(_comp_basis(), _comp_basis())
    assert not holds
    assert witness[0] == "overlap"


def test_criterion_input_validation():
    with pytest.raises(ValueError):
        subspace.fully_compressible_criterion(_comp_basis(2), _comp_basis(2))  # d >= 3
    skewed = [
        np.array([1, 0, 0], dtype=complex),
        np.array([1, 1, 0], dtype=complex) / np.sqrt(2),
        np.array([0, 0, 1], dtype=complex),
    ]
    with pytest.raises(ValueError):
        subspace.fully_compressible_criterion(_comp_basis(), skewed)


def test_mub_same_povm_check():
    res = subspace.mub_same_povm_check()
    assert res["same_povm"] is True
    assert res["residual"] < 1e-12
    assert res["truncated_eta"] >= 1 - 1e-6
    assert res["truncated_verdict"] == "Compatible"
    assert res["perturbed_residual"] > 1e-3  # negative control
    assert res["mub_overlap_deviation"] < 1e-10


def test_integral_identities_three_sigma():
    rep = subspace.integral_identities_check(3, 1, 2000, seed=0)
    assert rep["all_within_3_sigma"] is True
    assert set(rep["identities"]) == {"identity", "conjugation", "trace_weight"}
    for entry in rep["identities"].values():
        assert entry["max_rel_error"] < 0.08


def test_integral_identities_converge_like_sqrt_n():
    e1 = subspace.integral_identities_check(3, 2, 1000, seed=42)
    e2 = subspace.integral_identities_check(3, 2, 16000, seed=42)
    w1 = max(v["max_rel_error"] for v in e1["identities"].values())
    w2 = max(v["max_rel_error"] for v in e2["identities"].values())
    # 16x the samples should shrink the worst error by about 4; require 2
    assert w2 < w1 / 2


def test_integral_identities_validation():
    with pytest.raises(ValueError):
        subspace.integral_identities_check(3, 3, 2000, seed=0)
    with pytest.raises(ValueError):
        subspace.integral_identities_check(3, 1, 10, seed=0)


def test_classify_matches_dedicated_counterexample_robustness():
    # the incompatible witness subspace of the qutrit pair reproduces the
    # dedicated counterexample's robustness when it is the span of the
    # defining vectors; here we just cross-check the full-space eta agrees
    # between classify and the direct call
    from subincompat import incompat

    a = corpus.build("qutrit-pair")
    rep = subspace.classify(a, 2, 2, seed=0)
    direct = incompat.depolarising_robustness(a)
    assert abs(rep.full_eta - direct.eta) < 1e-9
