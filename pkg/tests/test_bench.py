import math

import numpy as np
import pytest

from lurefts import bench, certify, pwfun
from lurefts.errors import HypothesisError, ParameterError
from lurefts.pwfun import Interval


def test_example1_builder():
    sys, ly = bench.build_example1()
    assert sys.n == 2 and sys.p == 1
    assert math.isinf(sys.zeta[0])
    assert pwfun.check_sector(sys.psi[0], math.inf).ok
    assert sys.psi[0].krasovskii(0.0) == Interval(-0.25, 1.0)
    assert np.array_equal(ly.P, np.eye(2))


def test_rotor_structure():
    sys = bench.build_rotor()
    assert np.array_equal(sys.A[0], [0.0, 1.0, -1.0])
    assert np.allclose(sys.B[:, 0], [0.0, 0.0, 1.0 / 0.035])
    assert np.array_equal(sys.C, [[0.0, 0.0, 1.0]])
    assert sys.psi[0].one_sided_limits(0.0) == pytest.approx((-0.68, 0.68))
    assert sys.psi[0].discontinuous_at_origin()
    assert pwfun.check_sector(sys.psi[0], math.inf).ok


def test_rotor_entries():
    pr = bench.RotorParams()
    A = bench.build_rotor(pr).A
    # b = 0 removes the damping entries
    assert A[2, 1] == 0.0
    assert A[2, 0] == pytest.approx(pr.k_theta / pr.J_l)
    assert A[1, 2] == pytest.approx(pr.k_u * pr.K[2] / pr.J_u)
    assert A[2, 2] == pytest.approx(pr.m / pr.J_l)
    assert bench.build_rotor(pr, h2="upper").A[2, 2] == pytest.approx(pr.m / pr.J_u)
    with pytest.raises(ParameterError):
        bench.build_rotor(pr, h2="middle")


def test_rotor_friction_shape():
    f = bench.rotor_friction()
    pr = bench.RotorParams()
    s = 2.0
    expected = pr.f_l0 + (pr.df_l - pr.f_l0) * math.exp(-pr.q3 * s) + (pr.q4 + pr.m) * s
    assert f.eval(s) == pytest.approx(expected)
    assert f.eval(-s) == pytest.approx(-expected)


def test_rotor_params_validated():
    with pytest.raises(ParameterError):
        bench.RotorParams(J_u=0.0)


def test_cnn_builder():
    sys = bench.build_cnn()
    assert np.array_equal(sys.C, np.eye(2))
    assert certify.lemma4_certificate(sys) is not None
    with pytest.raises(HypothesisError):
        bench.build_cnn(B=[[0.0, 1.0], [-1.0, 0.0]])
    with pytest.raises(HypothesisError):
        bench.build_cnn(A=np.diag([-1.0, 1.0]))
    with pytest.raises(HypothesisError):
        bench.build_cnn(act=pwfun.linear(1.0))


def test_cnn_classified_sfts():
    sys = bench.build_cnn()
    rep = certify.classify(sys, certify.lemma4_certificate(sys))
    assert rep.verdicts["SFTS"] is True


@pytest.mark.parametrize("name", bench.PRESETS)
def test_presets(name):
    pr = bench.preset(name)
    assert pr.system.n == len(pr.x0)
    with pytest.raises(ParameterError):
        bench.preset("nope")
