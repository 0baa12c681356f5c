import numpy as np
import pytest

from slabwave.fieldexpr import (EvalError, ParseError, as_callable, evaluate,
                                parse, to_source)


def test_variable():
    e = parse("x3")
    assert evaluate(e, (0.0, 0.0, 1.0)) == 1.0


def test_gaussian_expression():
    e = parse("exp(-(x1^2+x2^2+(x3-1)^2))")
    v = evaluate(e, (0.0, 0.0, 0.0))
    assert v == pytest.approx(np.exp(-1.0), rel=1e-12)
    assert abs(v - 0.3678794412) < 1e-9


def test_power_right_associative():
    assert evaluate(parse("2^3^2"), (0, 0, 0)) == 512.0


def test_precedence_and_unary():
    assert evaluate(parse("1+2*3"), (0, 0, 0)) == 7.0
    assert evaluate(parse("-2^2"), (0, 0, 0)) == 4.0   # unary binds first
    assert evaluate(parse("1-2-3"), (0, 0, 0)) == -4.0
    assert evaluate(parse("12/3/2"), (0, 0, 0)) == 2.0


def test_functions():
    p = (0.3, -0.7, 0.2)
    assert evaluate(parse("sin(x1)*cos(x2)+tanh(x3)"), p) == pytest.approx(
        np.sin(0.3) * np.cos(-0.7) + np.tanh(0.2), rel=1e-14)
    assert evaluate(parse("sqrt(x1)"), (4.0, 0, 0)) == 2.0


def test_vectorized_evaluation():
    e = parse("x1*x2 - x3^2")
    x = np.linspace(0, 1, 7)
    out = evaluate(e, (x, 2 * x, x))
    assert np.abs(out - (2 * x * x - x ** 2)).max() < 1e-15


def test_open_paren_error_offset():
    with pytest.raises(ParseError) as ei:
        parse("(")
    assert ei.value.offset == 1


def test_unknown_name_and_trailing():
    with pytest.raises(ParseError, match="unknown name"):
        parse("x4 + 1")
    with pytest.raises(ParseError, match="trailing"):
        parse("1 2")


def test_eval_errors_carry_offset():
    with pytest.raises(EvalError) as ei:
        evaluate(parse("1/(x1-1)"), (1.0, 0, 0))
    assert "offset" in str(ei.value)
    with pytest.raises(EvalError, match="sqrt"):
        evaluate(parse("sqrt(x1-2)"), (1.0, 0, 0))


def test_round_trip_pretty_print():
    rng = np.random.default_rng(0)
    sources = [
        "x1+x2*x3", "exp(-(x1^2+x2^2))", "-x1^2+sin(x2)/(1+x3^2)",
        "2^3^x1", "tanh(x1-0.5)*cos(x2)+1.5e-3",
    ]
    for src in sources:
        e = parse(src)
        e2 = parse(to_source(e))
        for _ in range(100):
            p = tuple(rng.uniform(-2, 2, size=3))
            a = evaluate(e, p)
            b = evaluate(e2, p)
            assert abs(a - b) <= 1e-15 * max(1.0, abs(a))


def test_parser_never_crashes_on_garbage():
    rng = np.random.default_rng(1)
    for _ in range(500):
        n = rng.integers(0, 30)
        junk = "".join(chr(c) for c in rng.integers(32, 127, size=n))
        try:
            e = parse(junk)
            evaluate(e, (0.5, 0.5, 0.5))
        except (ParseError, EvalError, OverflowError):
            pass


def test_as_callable_on_arrays():
    f = as_callable("x1+2*x3")
    x = np.ones((3, 4))
    out = f(x, x, x)
    assert out.shape == (3, 4)
    assert np.all(out == 3.0)
