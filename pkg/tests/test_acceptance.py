"""Acceptance criteria 1-12.  Each test carries a ``criterion`` marker; the
terminal summary prints one PASS/FAIL line per criterion."""

import json
import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest
from randmodels import random_drive, random_hermitian_set, vec_equal

from floquetflow import cli
from floquetflow.fastmod import (
    DoubleFourierHamiltonian,
    ValidityViolation,
    derivative_form_heff1,
    envelope_form,
    fast_expand,
)
from floquetflow.flow import discrete_expand, double_sum_A, double_sum_B, toda_expand, vmm_expand
from floquetflow.micromotion import magnus_S
from floquetflow.modelfile import load_model
from floquetflow.numeric import NumericModel, dense_flow_oracle, transition_curves, fs_hamiltonian, fs_magnus_terms
from floquetflow.numeric.transition import rabi_drive
from floquetflow.symbolic import equal_sampled, parse_expr
from floquetflow.symbolic.coeff import GaussQ

SAMPLES = dict(trials=100, rtol=1e-10)


def fit_exponent(omegas, errs) -> float:
    return -np.polyfit(np.log(omegas), np.log(errs), 1)[0]


def rabi_P(text):
    return parse_expr(text, envelopes=["g"])


# 1 ---------------------------------------------------------------------------

@pytest.mark.criterion(1)
def test_rabi_second_order_via_cli(tmp_path):
    t0 = time.perf_counter()
    code = cli.main(["expand", "rabi", "--order", "2", "--engine", "toda", "--out", str(tmp_path)])
    elapsed = time.perf_counter() - t0
    assert code == 0
    rep = json.loads((tmp_path / "rabi_expand.json").read_text())["h_eff"]["orders"]

    def got(order, label):
        return rabi_P(rep.get(str(order), {}).get("0", {}).get(label, "0"))

    expected = {
        (0, "sx"): "g*cos_phi", (0, "sy"): "g*sin_phi", (0, "sz"): "Delta/2",
        (1, "sx"): "0", (1, "sy"): "0", (1, "sz"): "g^2/2",
        (2, "sx"): "-g^3*cos_phi/4", (2, "sy"): "-g^3*sin_phi/4", (2, "sz"): "-Delta*g^2/4",
    }
    for (order, label), text in expected.items():
        assert equal_sampled(got(order, label), rabi_P(text), **SAMPLES), (order, label)
    assert elapsed < 5.0


# 2 ---------------------------------------------------------------------------

@pytest.mark.criterion(2)
def test_rabi_micromotion_through_second_order():
    # sin/cos forms of S rewritten as coefficients of exp(+2i(omega t + theta)):
    # sin(2x+phi) -> (sin_phi - I*cos_phi)/2, cos(2x+phi) -> (cos_phi + I*sin_phi)/2,
    # sin(2x+2phi) -> sin_phi*cos_phi - I*(cos_phi^2 - sin_phi^2)/2
    sin1 = "(sin_phi - I*cos_phi)/2"
    cos1 = "(cos_phi + I*sin_phi)/2"
    sin2 = "(sin_phi*cos_phi - I*(cos_phi^2 - sin_phi^2)/2)"
    expected = {
        1: {"sx": f"g/2*{sin1}", "sy": f"g/2*{cos1}", "sz": "0"},
        2: {"sx": f"-Delta*g/4*{sin1} + g'/4*{cos1}",
            "sy": f"-Delta*g/4*{cos1} - g'/4*{sin1}",
            "sz": f"g^2/2*{sin2}"},
    }
    t0 = time.perf_counter()
    h = rabi_drive()
    S = magnus_S(toda_expand(h, 2).flow_history, 2)
    elapsed = time.perf_counter() - t0
    assert S[0].is_zero()
    for k, row in expected.items():
        assert set(S[k].harmonics()) <= {-2, 2}
        got = S[k].by_label(2)
        for label, text in row.items():
            assert equal_sampled(got.get(label, rabi_P("0")), rabi_P(text), **SAMPLES), (k, label)
        # the -2 harmonic is the conjugate partner
        for a, b in zip(S[k][-2], S[k][2]):
            assert a == b.conj()
    assert elapsed < 10.0


# 3 ---------------------------------------------------------------------------

@pytest.mark.criterion(3)
def test_rabi_fourth_order_phi_zero():
    g = lambda s: parse_expr(s, envelopes=["g"])  # noqa: E731
    from floquetflow.algebra import builtin_su2
    from floquetflow.symbolic import FourierOperator

    drive = FourierOperator.from_labels(builtin_su2(), {
        0: {"sz": g("Delta/2"), "sx": g("g")},
        2: {"sx": g("g/2"), "sy": g("I*g/2")},
    })
    t0 = time.perf_counter()
    res = toda_expand(drive, 4)
    elapsed = time.perf_counter() - t0
    expected = {
        "sx": ["g", "0", "-g^3/4", "3*Delta*g^3/16", "(-6*g*g'^2 + 7*g^2*g'' - 7*Delta^2*g^3 - 8*g^5)/64"],
        "sy": ["0", "0", "0", "-g^2*g'/16", "Delta*g^2*g'/16"],
        "sz": ["Delta/2", "g^2/2", "-Delta*g^2/4", "(g'^2 - g*g'' + 2*Delta^2*g^2)/16",
               "(-3*Delta*g'^2 + 3*Delta*g*g'' - 2*Delta^3*g^2 + Delta*g^4)/32"],
    }
    for label, per_order in expected.items():
        for order, text in enumerate(per_order):
            got = res.h_eff[order].by_label(0).get(label, g("0"))
            assert equal_sampled(got, g(text), **SAMPLES), (label, order)
    assert elapsed < 60.0


# 4 ---------------------------------------------------------------------------

@pytest.mark.criterion(4)
def test_spin_half_rotating_field():
    model = load_model("spin_half")
    res = toda_expand(model.fourier, 4)
    B = lambda s: parse_expr(s, envelopes=["Bx", "By"])  # noqa: E731
    for order in (0, 1, 3):
        assert res.h_eff[order].is_zero(), order
    o2 = res.h_eff[2].by_label(0)
    o4 = res.h_eff[4].by_label(0)
    assert set(o2) == {"sz"} and set(o4) == {"sz"}
    assert equal_sampled(o2["sz"], B("2*(Bx*By' - By*Bx')"), **SAMPLES)
    ref4 = B("1/2*Bx'''*By - 1/2*Bx*By''' + Bx'*(2*Bx^2*By + 3*By''/2 + 2*By^3)"
             " - By'*(2*Bx*By^2 + 3*Bx''/2 + 2*Bx^3)")
    assert equal_sampled(o4["sz"], ref4, **SAMPLES)


# 5 ---------------------------------------------------------------------------

def _dimer_coeffs(name):
    model = load_model(name)
    res = toda_expand(model.fourier, 4)
    env = list(model.envelopes)
    return res, (lambda s: parse_expr(s, envelopes=env))


@pytest.mark.criterion(5)
def test_dimer_hopping_protocol():
    res, P = _dimer_coeffs("dimer_hop")
    c = lambda l, i: res.h_eff[i].by_label(0).get(f"tau{l}", P("0"))  # noqa: E731
    assert equal_sampled(c(1, 0), P("j0")) and equal_sampled(c(3, 0), P("delta0")) and equal_sampled(c(4, 0), P("U/2"))
    for l in (2, 5, 6, 7, 8, 9):
        assert c(l, 0).is_zero()
    assert res.h_eff[1].is_zero() and res.h_eff[3].is_zero()
    second = {3: "-4*delta0*j1^2", 4: "-2*U*j1^2", 7: "8*U*j1^2", 8: "-2*U*j1^2"}
    for l in range(1, 10):
        assert equal_sampled(c(l, 2), P(second.get(l, "0")), **SAMPLES), l
    assert equal_sampled(c(1, 4), P("-12*j0*j1^2*(delta0^2 + U^2)"), **SAMPLES)
    assert equal_sampled(c(6, 4), P("-10*j0*j1^2*delta0*U"), **SAMPLES)
    for l in (3, 4, 7, 8):
        assert not c(l, 4).is_zero()


@pytest.mark.criterion(5)
def test_dimer_onsite_protocol():
    res, P = _dimer_coeffs("dimer_onsite")
    c = lambda l, i: res.h_eff[i].by_label(0).get(f"tau{l}", P("0"))  # noqa: E731
    assert res.h_eff[1].is_zero() and res.h_eff[3].is_zero()
    # j_eff = j0 [1 - (2 delta1)^2] through second order
    assert equal_sampled(c(1, 0) + c(1, 2), P("j0*(1 - 4*delta1^2)"), **SAMPLES)
    for l in range(2, 10):
        assert c(l, 2).is_zero(), l
    # U_eff = 2 * (tau4 coefficient), whose zeroth order is U/2
    assert equal_sampled(2 * (c(4, 0) + c(4, 2) + c(4, 4)), P("U - 12*j0^2*U*delta1^2"), **SAMPLES)


# 6 ---------------------------------------------------------------------------

def _engine_models():
    rng = random.Random(6)
    return [random_drive(rng, 1 + (k % 2)) for k in range(20)]


@pytest.mark.criterion(6)
def test_engines_toda_vmm_agree():
    for h in _engine_models():
        a, b = toda_expand(h, 2), vmm_expand(h, 2)
        for i in range(3):
            assert vec_equal(a.h_eff[i][0], b.h_eff[i][0]), i


@pytest.mark.criterion(6)
def test_engines_toda_discrete_one_step():
    for h in _engine_models():
        a, d = toda_expand(h, 2), discrete_expand(h, 1)
        for i in range(3):
            assert vec_equal(a.h_eff[i][0], d.h_eff[i][0]), i


@pytest.mark.criterion(6)
def test_engines_toda_discrete_two_steps():
    # Expected to fail: the discrete flow reaches a unitarily rotated h_eff
    # from third order on (see notes).  Kept at full strength.
    for h in _engine_models():
        a, d = toda_expand(h, 4), discrete_expand(h, 2)
        for i in range(5):
            assert vec_equal(a.h_eff[i][0], d.h_eff[i][0]), i


# 7 ---------------------------------------------------------------------------

@pytest.mark.criterion(7)
def test_toda_band_preservation():
    rng = random.Random(7)
    for k in range(20):
        n0 = 1 + k % 3
        h = random_drive(rng, n0)
        res = toda_expand(h, 5, form="raw")
        hist = res.flow_history
        assert hist.band > n0
        for i, comps in hist.components.items():
            for n, vec in comps.items():
                if abs(n) > n0:
                    assert all(x.is_zero() for x in vec), (k, i, n)
        assert res.diagnostics["stray_harmonics"] == 0


# 8 ---------------------------------------------------------------------------

@pytest.mark.criterion(8)
def test_double_sum_identity():
    rng = random.Random(8)
    for _ in range(20):
        h = random_hermitian_set(rng, 3)
        assert vec_equal(double_sum_A(h), double_sum_B(h), trials=100, rtol=1e-10)


# 9 ---------------------------------------------------------------------------

@pytest.mark.criterion(9)
def test_oracle_scaling():
    t0 = time.perf_counter()
    rng = random.Random(9)
    from floquetflow.algebra import builtin_su2
    from floquetflow.symbolic import FourierOperator, const

    su2 = builtin_su2()
    q = lambda: const(GaussQ(Fraction(rng.randint(-16, 16), 16)))  # noqa: E731
    qc = lambda: q() + q() * GaussQ(0, 1)  # noqa: E731
    h = FourierOperator(su2, {0: [q() for _ in range(3)], 1: [qc() for _ in range(3)]}).hermitian_completed()
    res = toda_expand(h, 4)
    omegas = [10, 20, 40, 80]
    errs = {2: [], 4: []}
    for w in omegas:
        nm = NumericModel(h, {}, {}, omega=w)
        mats = {n: np.einsum("l,lij->ij", nm.coefficients(nm.h, n, 0.0), nm.rep) for n in nm.h.harmonics()}
        orc = dense_flow_oracle(mats, w, "toda", K=12)
        for N in errs:
            series = sum(w ** (-i) * nm.op_matrix(res.h_eff[i], 0.0, phase=0.0) for i in range(N + 1))
            errs[N].append(np.linalg.norm(orc.h_eff - series))
    for N, e in errs.items():
        p = fit_exponent(omegas, e)
        assert N + 0.5 <= p <= N + 1.5, (N, p, e)
    assert time.perf_counter() - t0 < 120


# 10 --------------------------------------------------------------------------

@pytest.fixture(scope="module")
def curves():
    t0 = time.perf_counter()
    res = transition_curves(omega=1.0, Delta=0.3, g=0.2, phi=0.0, theta=0.0, wt_max=60.0)
    res.meta["runtime"] = time.perf_counter() - t0
    return res


@pytest.mark.criterion(10)
def test_transition_ordering(curves):
    d, p = curves.deviations, curves.period_errors
    assert d["N2_micromotion"] < d["N2"] < d["N0"]
    # N=1 is placed by its Rabi-period error
    assert p["N2"] < p["N1"] < p["N0"]
    assert d["N2"] < d["N1"] < d["N0"]
    assert curves.meta["runtime"] < 30


@pytest.mark.criterion(10)
def test_transition_micromotion_accuracy(curves):
    # measured 0.0214: the order-2 truncation drifts secularly (see notes)
    assert curves.deviations["N2_micromotion"] < 0.02


# 11 --------------------------------------------------------------------------

@pytest.mark.criterion(11)
def test_fast_derivative_form_first_terms():
    rng = random.Random(11)
    h = random_hermitian_set(rng, 2)
    out = derivative_form_heff1(h, Lmax=1)["orders"]
    alg = h.algebra
    from floquetflow.algebra import commutator

    ref1 = alg.zero_vector()
    ref2 = alg.zero_vector()
    for m in (1, 2):
        c = commutator(h[m], h[-m], alg)
        ref1 = tuple(a + x / GaussQ(m) for a, x in zip(ref1, c))
    for m in (-2, -1, 1, 2):
        c = commutator(tuple(x.ddt() for x in h[m]), h[-m], alg)
        ref2 = tuple(a + x * GaussQ(0, 1) / GaussQ(2 * m * m) for a, x in zip(ref2, c))
    assert set(out) == {1, 2}
    assert vec_equal(out[1], ref1, **SAMPLES)
    assert vec_equal(out[2], ref2, **SAMPLES)


@pytest.mark.criterion(11)
def test_fast_expand_matches_resummed_derivative_form():
    from floquetflow.algebra import builtin_su2
    from floquetflow.symbolic import const

    su2 = builtin_su2()
    c = lambda a, b=0: const(GaussQ(a, b) / GaussQ(10))  # noqa: E731
    z = const(0)
    entries = {
        (0, 0): (z, z, c(5)), (0, 1): (c(2, 1), z, c(1)),
        (1, 0): (c(4), c(0, 3), z), (1, 1): (c(3, -2), c(1), c(2)), (1, -1): (c(1), c(-2, 1), z),
        (2, 1): (z, c(2), c(1, 1)),
    }
    rho = "1/10"
    dh = DoubleFourierHamiltonian(su2, entries, rho)
    fe = fast_expand(dh)
    op, bind = envelope_form(dh)
    der = derivative_form_heff1(op, Lmax=8, JOmega_over_omega=dh.J * 0.1)
    omega = 7.0
    Omega = 0.1 * omega
    x = dh.J * 0.1
    for t in (0.0, 0.37, 1.9, 4.2):
        vals = bind(t, Omega)
        dmat = sum(omega ** (-k) * su2.to_matrix(v, vals) for k, v in der["orders"].items())
        fmat = fe.matrix(1, Omega * t) / omega
        rel = np.linalg.norm(dmat - fmat) / np.linalg.norm(fmat)
        assert rel <= x ** 9, (t, rel)


@pytest.mark.criterion(11)
def test_fast_validity_boundary():
    from floquetflow.algebra import builtin_su2
    from floquetflow.symbolic import const

    su2 = builtin_su2()
    one = const(1)
    z = const(0)
    for J, rho in [(1, "1/2"), (3, "1/3"), (2, "1/3"), (9, "1/10"), (10, "1/10"), (4, "3/10"), (3, "3/10"), (1, "1")]:
        dh = DoubleFourierHamiltonian(su2, {(1, J): (one, z, z), (0, 0): (z, z, one)}, rho)
        from fractions import Fraction

        violates = J * Fraction(rho) >= 1
        if violates:
            with pytest.raises(ValidityViolation):
                fast_expand(dh)
        else:
            fast_expand(dh)


# 12 --------------------------------------------------------------------------

def _rabi_numeric(omega, theta=0.0):
    return NumericModel(rabi_drive(), {"g": 0.2}, {"Delta": 0.3, "cos_phi": 1.0, "sin_phi": 0.0},
                        omega=omega, theta=theta)


@pytest.mark.criterion(12)
def test_fs_magnus_scaling():
    omegas = [10, 20, 40, 80]
    errs = []
    for w in omegas:
        nm = _rabi_numeric(w)
        fs = fs_hamiltonian(nm, 0.0)
        assert not fs.branch_warning
        t1, t2, t3 = fs_magnus_terms(nm, 0.0)
        errs.append(np.linalg.norm(t1 + t2 + t3 - fs.h_fs))
    assert fit_exponent(omegas, errs) >= 2.5, errs


@pytest.mark.criterion(12)
def test_fs_depends_on_initial_phase_but_heff_does_not():
    w = 10.0
    nm = _rabi_numeric(w)
    starts = np.linspace(0, 2 * math.pi / w, 7)[:-1]
    fs = [fs_hamiltonian(nm, t).h_fs for t in starts]
    fs_var = max(np.linalg.norm(f - fs[0]) for f in fs)
    res = toda_expand(rabi_drive(), 4)
    heff = []
    for t in starts:
        ph = np.array(w * t + nm.theta)
        heff.append(sum(w ** (-i) * nm.op_matrix(res.h_eff[i], np.array(0.0), phase=ph) for i in range(5)))
    heff_var = max(np.linalg.norm(x - heff[0]) for x in heff)
    assert heff_var < 1e-12
    assert fs_var > 1e-4
