import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from floquetflow.symbolic import (
    Divergent,
    EnvelopeExpr,
    EpsSeries,
    ExpPolyS,
    ExpressionSyntaxError,
    GaussQ,
    const,
    ddt,
    envelope,
    equal_sampled,
    format_expr,
    format_physical,
    integrate_to_infinity,
    numeric_eval,
    param,
    parse_expr,
    s_limit,
    solve_linear_flow_ode,
)

ATOMS = [param("c"), param("d"), envelope("a"), envelope("b"), envelope("a", 1), envelope("b", 2)]


@st.composite
def exprs(draw, depth=2):
    """Small random polynomials over a few parameters and envelope derivatives."""
    if depth == 0 or draw(st.booleans()):
        kind = draw(st.integers(0, 2))
        if kind == 0:
            return const(GaussQ(draw(st.integers(-4, 4)), draw(st.integers(-2, 2))))
        return draw(st.sampled_from(ATOMS))
    a = draw(exprs(depth=depth - 1))
    b = draw(exprs(depth=depth - 1))
    return draw(st.sampled_from([a + b, a - b, a * b]))


@settings(max_examples=60, deadline=None)
@given(exprs(), exprs(), exprs())
def test_ring_axioms(x, y, z):
    assert x + y == y + x
    assert x * y == y * x
    assert (x + y) + z == x + (y + z)
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    assert (x - x).is_zero()


@settings(max_examples=60, deadline=None)
@given(exprs(), exprs())
def test_ddt_is_a_derivation(x, y):
    assert ddt(x * y) == ddt(x) * y + x * ddt(y)
    assert ddt(x + y) == ddt(x) + ddt(y)


def test_ddt_of_parameter_vanishes():
    assert ddt(param("c") * 3).is_zero()
    assert ddt(envelope("g")) == envelope("g", 1)


@settings(max_examples=60, deadline=None)
@given(exprs(depth=3))
def test_print_parse_round_trip(x):
    back = parse_expr(format_expr(x), envelopes=["a", "b"])
    assert back == x


def test_parse_precedence_and_powers():
    e = parse_expr("2*a^2 - a*b/4 + I*c", envelopes=["a", "b"])
    vals = {"a": 1.5, "b": -0.5, "c": 0.25}
    assert numeric_eval(e, vals) == pytest.approx(2 * 2.25 + 1.5 * 0.5 / 4 + 0.25j)


def test_parse_envelope_derivatives():
    e = parse_expr("g'' - g'", envelopes=["g"])
    assert e == envelope("g", 2) - envelope("g", 1)


@pytest.mark.parametrize("text, col", [("a + * b", 5), ("(a + b", 7), ("a / b", 3), ("2 $ 3", 3)])
def test_parse_error_reports_column(text, col):
    with pytest.raises(ExpressionSyntaxError) as info:
        parse_expr(text, envelopes=["a", "b"])
    assert info.value.pos + 1 == col
    assert f"column {col}" in str(info.value)


def test_equal_sampled_catches_real_difference():
    a, b = envelope("a"), envelope("b")
    assert equal_sampled((a + b) * (a - b), a * a - b * b)
    assert not equal_sampled(a * b, a * b + const(GaussQ(1, 0)) * 1e-6)


def test_conj_and_reality():
    e = parse_expr("(1 + 2*I)*a", envelopes=["a"])
    assert e.conj() == parse_expr("(1 - 2*I)*a", envelopes=["a"])
    assert (e + e.conj()).is_real()


# flow-variable calculus

def _rand_exppoly(rng):
    terms = {}
    for _ in range(3):
        a = rng.choice([0, 1, 2, 4])
        k = rng.randint(0, 2)
        terms[(a, k)] = const(GaussQ(rng.randint(-5, 5), rng.randint(-2, 2))) * envelope("g")
    return ExpPolyS(terms)


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("rate", [0, 1, 3])
def test_linear_flow_ode_solution_satisfies_ode(seed, rate):
    rng = random.Random(seed)
    rhs = _rand_exppoly(rng)
    x0 = const(GaussQ(rng.randint(-3, 3)))
    X = solve_linear_flow_ode(rate, rhs, x0)
    assert X.dds() == rhs - X * rate
    assert X.evaluate(0.0, {"g": 0.7}) == pytest.approx(complex(numeric_eval(x0, {})))


def test_exppoly_evaluate_matches_formula():
    X = ExpPolyS({(2, 1): const(3), (0, 0): envelope("g")})
    s = 0.8
    assert X.evaluate(s, {"g": 0.5}) == pytest.approx(3 * s * math.exp(-2 * s) + 0.5)


def test_s_limit_and_divergence():
    X = ExpPolyS({(0, 0): envelope("g"), (1, 3): const(2)})
    assert s_limit(X) == envelope("g")
    with pytest.raises(Divergent):
        s_limit(ExpPolyS({(0, 1): const(1)}))


def test_integrate_to_infinity_uses_factorial_over_power():
    X = ExpPolyS({(2, 3): const(1)})
    assert integrate_to_infinity(X) == const(GaussQ(6) / GaussQ(16))
    with pytest.raises(Divergent):
        integrate_to_infinity(ExpPolyS({(0, 0): const(1)}))


def test_eps_series_truncates_high_orders():
    S = EpsSeries(2, {0: "a", 1: "b"})
    assert not S.truncated
    S[3] = "c"
    assert S.truncated and S.orders() == [0, 1]
    with pytest.raises(ValueError):
        EpsSeries(-1)


def test_format_physical_restores_hbar():
    e = parse_expr("g*g' + Delta", envelopes=["g"])
    txt = format_physical(e, 2)
    assert txt == "(Delta + g*g'*hbar)/(hbar*omega)^2"
    assert format_physical(e, 1).endswith("/(hbar*omega)")
    assert format_physical(EnvelopeExpr(), 3) == "0"
