import numpy as np
import pytest

from lurefts import bench, certify, pwfun
from lurefts.certify import Certificate
from lurefts.errors import HypothesisError, ParameterError
from lurefts.luresys import LureSystem


def test_example1_assumption2():
    sys, _ = bench.build_example1()
    v = certify.check_assumption2(sys, bench.example1_certificate())
    assert v.ok
    M = certify.passivity_matrix(sys, np.eye(2), 1.0, 1.0)
    assert v.lambda_max == pytest.approx(np.linalg.eigvalsh(M)[-1], abs=1e-12)


def test_assumption2_fails_for_large_eta():
    sys, _ = bench.build_example1()
    v = certify.check_assumption2(sys, Certificate(np.eye(2), 1.0, 3.0))
    assert not v.ok and v.lambda_max > 0


def test_assumption2_reports_indefinite_P():
    sys, _ = bench.build_example1()
    v = certify.check_assumption2(sys, Certificate(np.diag([1.0, -1.0]), 1.0, 1.0))
    assert not v.ok and v.P_lambda_min < 0


def test_certificate_validation():
    with pytest.raises(ParameterError):
        Certificate(np.eye(2), 1.0, -1.0)
    with pytest.raises(ParameterError):
        Certificate(np.eye(2), 1.0, 1.0, kind="bogus")


@pytest.mark.parametrize(
    "M, expected",
    [
        (np.eye(3), True),
        (np.array([[1.0, 0.5], [-0.5, 1.0]]), True),
        (np.array([[1.0, 3.0], [0.0, 1.0]]), True),  # triangular with positive diagonal
        (np.array([[0.0, 1.0], [-1.0, 0.0]]), False),
        (np.array([[-1.0, 0.0], [0.0, 1.0]]), False),
        (np.array([[1.0, 2.0], [2.0, 1.0]]), False),  # symmetric indefinite
    ],
)
def test_lds(M, expected):
    v = certify.check_lds(M)
    assert v.ok is expected
    if expected:
        ok, margin = certify.verify_lds_witness(M, v.GammaBar)
        assert ok and margin == pytest.approx(np.linalg.eigvalsh(np.diag(v.GammaBar) @ M + M.T @ np.diag(v.GammaBar))[0])


def test_lds_deterministic():
    M = np.array([[1.0, 3.0, 0.0], [0.0, 1.0, 3.0], [0.0, 0.0, 1.0]])
    a, b = certify.check_lds(M, seed=4), certify.check_lds(M, seed=4)
    assert np.array_equal(a.GammaBar, b.GammaBar)
    assert a.ok


def test_constructive_certificate_oracle():
    sys = bench.build_cnn()
    cert = certify.lemma4_certificate(sys)
    assert cert.kind == certify.EQ15H
    G, A, B = cert.Gamma, sys.A, sys.B
    # Gamma A <= -I and the Schur complement is negative definite
    assert np.all(np.diag(G @ A) <= -1 + 1e-12)
    alpha = 1.0 / cert.P[0, 0]
    Sigma = G @ B + (G @ B).T
    S = alpha * 2 * A + B @ np.linalg.inv(Sigma) @ B.T
    assert np.linalg.eigvalsh(0.5 * (S + S.T))[-1] < 0
    v = certify.check_property1(sys, cert)
    assert v.ok, v.detail
    Mbar = certify.alternative_matrix(sys, cert.P, cert.Gamma, cert.eta)
    assert np.linalg.eigvalsh(Mbar)[-1] <= 1e-12


def test_constructive_certificate_rejects_non_lds():
    sys = LureSystem(-np.eye(2), [[0.0, 1.0], [-1.0, 0.0]], np.eye(2), (pwfun.sign_fn(),) * 2)
    with pytest.raises(HypothesisError):
        certify.lemma4_certificate(sys)


def test_property1_detects_bad_H():
    sys = bench.build_cnn()
    cert = certify.lemma4_certificate(sys)
    v = certify.check_property1(sys, cert, H=np.diag([-0.5, -0.5]))
    assert not v.ok and not v.commutes


def test_search_certificate_example1():
    sys, _ = bench.build_example1()
    cert, lam0 = certify.search_certificate(sys, Gamma=1.0, seed=0, iters=1500)
    assert cert is not None and lam0 < 0
    assert certify.check_assumption2(sys, cert).ok


def test_classify_example1():
    sys, _ = bench.build_example1()
    rep = certify.classify(sys, bench.example1_certificate())
    assert rep.verdicts == {"GAS": True, "oGAS": True, "SIoLAS": True, "OFTS": True, "SFTS": False}
    assert rep.lds_reverified
    d = rep.to_dict()
    assert d["finite_time"]["c"] == 0.125


def test_classify_without_certificate_is_unknown():
    sys, _ = bench.build_example1()
    rep = certify.classify(sys, None)
    assert rep.verdicts["GAS"] is None and rep.verdicts["SFTS"] is None


def test_classify_monotone_in_certificate():
    sys = bench.build_cnn()
    without = certify.classify(sys, None).verdicts
    with_cert = certify.classify(sys, certify.lemma4_certificate(sys)).verdicts
    for k, v in without.items():
        if v is not None:
            assert with_cert[k] == v
    assert with_cert["SFTS"] is True


def test_classify_sector_violation():
    sys, _ = bench.build_example1()
    bad = LureSystem(sys.A, sys.B, sys.C, (pwfun.relay(-1.0, 1.0),))
    rep = certify.classify(bad, bench.example1_certificate())
    assert not rep.sector_ok
    assert rep.sector_witnesses[0] is not None
    assert rep.verdicts["GAS"] is None
