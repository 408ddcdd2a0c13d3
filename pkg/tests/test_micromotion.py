import random
from fractions import Fraction

import numpy as np
import pytest
from randmodels import random_drive, vec_equal

from floquetflow import expand, magnus_S, micromotion_unitary
from floquetflow.micromotion import bernoulli, micromotion_matrix
from floquetflow.symbolic import GaussQ


def test_bernoulli_numbers():
    want = [1, Fraction(-1, 2), Fraction(1, 6), 0, Fraction(-1, 30), 0, Fraction(1, 42), 0, Fraction(-1, 30)]
    assert [Fraction(int(b.numerator), int(b.denominator)) for b in bernoulli(8)] == want


@pytest.mark.parametrize("seed, n0", [(0, 1), (1, 2), (2, 3)])
def test_first_order_exponent_closed_form(seed, n0):
    h = random_drive(random.Random(seed), n0)
    S = magnus_S(expand(h, 1).flow_history, 1)
    assert S[1].harmonics() == [m for m in h.harmonics() if m]
    for m in S[1].harmonics():
        want = tuple(c * GaussQ(0, -1) / GaussQ(m) for c in h[m])
        assert vec_equal(S[1][m], want)


@pytest.mark.parametrize("seed", range(3))
def test_toda_and_vmm_exponents_agree_through_second_order(seed):
    h = random_drive(random.Random(seed), 2)
    Sa = magnus_S(expand(h, 2).flow_history, 2)
    Sb = magnus_S(expand(h, 2, engine="vmm").flow_history, 2)
    for k in (1, 2):
        assert Sa[k].harmonics() == Sb[k].harmonics()
        for m in Sa[k].harmonics():
            assert vec_equal(Sa[k][m], Sb[k][m])


@pytest.mark.parametrize("seed", range(3))
def test_exponent_is_hermitian(seed):
    h = random_drive(random.Random(seed), 2)
    S = magnus_S(expand(h, 3).flow_history, 3)
    for k in range(1, 4):
        for m in S[k].harmonics():
            assert vec_equal(S[k][-m], tuple(c.conj() for c in S[k][m]))


def test_unitary_and_matrix_hermitian():
    h = random_drive(random.Random(5), 2)
    S = magnus_S(expand(h, 2).flow_history, 2)
    b = {"a": 0.7, "a'": -0.2, "a''": 0.1, "b": 0.3, "b'": 0.5, "b''": -0.4, "c": 0.9}
    M = micromotion_matrix(S, 1.1, b, omega=2.0)
    assert np.allclose(M, M.conj().T, atol=1e-12)
    U = micromotion_unitary(S, 0.4, 0.3, 2.0, b)
    assert np.allclose(U @ U.conj().T, np.eye(2), atol=1e-12)


def test_asking_beyond_history_raises():
    h = random_drive(random.Random(0), 1)
    with pytest.raises(ValueError, match="orders up to"):
        magnus_S(expand(h, 2).flow_history, 3)
