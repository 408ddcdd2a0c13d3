import random
from fractions import Fraction

import pytest
from randmodels import SU2, vec_equal

from floquetflow.algebra import commutator
from floquetflow.fastmod import (
    DoubleFourierHamiltonian,
    ValidityViolation,
    fast_expand,
    fast_micromotion,
)
from floquetflow.flow import reference_heff
from floquetflow.symbolic import FourierOperator, GaussQ, const, param


def _coeff(rng, real=False):
    re = Fraction(rng.randint(-4, 4), 4)
    im = 0 if real else Fraction(rng.randint(-4, 4), 4)
    return param("c") * GaussQ(re, im) if rng.random() < 0.5 else const(GaussQ(re, im))


def _random_double(rng, n0=2, J=2, rho="1/7"):
    ent = {}
    for n in range(0, n0 + 1):
        for j in range(-J, J + 1):
            if n == 0 and j < 0:
                continue
            if rng.random() < 0.6 or (n, j) == (1, J):
                ent[(n, j)] = [_coeff(rng, real=(n == 0 and j == 0)) for _ in range(3)]
    return DoubleFourierHamiltonian(SU2, ent, rho)


def _brute_heff1(h):
    """Direct double sum over conjugate harmonic pairs, weight 2/(2m + rho (j - j'))."""
    out = {}
    for (m, j), u in h.entries.items():
        if m <= 0:
            continue
        for (mm, jj), v in h.entries.items():
            if mm != -m:
                continue
            w = GaussQ(2) / GaussQ(2 * m + h.rho * (j - jj))
            c = commutator(u, v, SU2)
            acc = out.get(j + jj, SU2.zero_vector())
            out[j + jj] = tuple(a + x * w for a, x in zip(acc, c))
    return {p: v for p, v in out.items() if any(v)}


@pytest.mark.parametrize("seed", range(6))
def test_first_order_matches_direct_double_sum(seed):
    h = _random_double(random.Random(seed))
    res = fast_expand(h)
    brute = _brute_heff1(h)
    assert sorted(res.heff1) == sorted(brute)
    for p, v in brute.items():
        assert vec_equal(res.heff1[p], v)


def test_static_envelopes_reduce_to_slow_first_order():
    rng = random.Random(11)
    ent = {(n, 0): [_coeff(rng, real=(n == 0)) for _ in range(3)] for n in range(3)}
    fast = fast_expand(DoubleFourierHamiltonian(SU2, ent, "1/5"))
    slow = FourierOperator(SU2, {n: v for (n, _), v in ent.items()}).hermitian_completed()
    assert vec_equal(fast.heff1[0], reference_heff(1, slow)[0])


def test_zeroth_order_is_the_time_average_over_the_fast_phase():
    h = _random_double(random.Random(3))
    res = fast_expand(h)
    assert res.heff0 == h.harmonic(0)


def test_micromotion_kick():
    h = _random_double(random.Random(4), rho="1/3")
    kick = fast_micromotion(h)
    for (m, j), v in kick.items():
        back = tuple(c * GaussQ(0, 1) * GaussQ(m + h.rho * j) for c in v)
        assert back == h.entries[(m, j)]


def test_float_ratio_rejected():
    with pytest.raises(TypeError, match="rational"):
        DoubleFourierHamiltonian(SU2, {(1, 0): [const(1), const(0), const(0)]}, 0.1)


def test_validity_boundary():
    ent = {(1, 2): [const(1), const(0), const(0)]}
    fast_expand(DoubleFourierHamiltonian(SU2, ent, "49/100"))
    with pytest.raises(ValidityViolation):
        fast_expand(DoubleFourierHamiltonian(SU2, ent, "1/2"))


def test_second_order_not_available():
    h = _random_double(random.Random(0))
    with pytest.raises(NotImplementedError):
        fast_expand(h, order=2)


def test_conjugate_entries_checked():
    ent = {(1, 1): [const(1), const(0), const(0)], (-1, -1): [const(2), const(0), const(0)]}
    with pytest.raises(ValueError, match="conjugate"):
        DoubleFourierHamiltonian(SU2, ent, "1/10")


def test_envelope_atoms_rejected():
    from floquetflow.symbolic import envelope

    with pytest.raises(ValueError, match="envelope atom"):
        DoubleFourierHamiltonian(SU2, {(1, 0): [envelope("g"), const(0), const(0)]}, "1/10")
