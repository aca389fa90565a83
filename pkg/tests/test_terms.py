import random

import pytest

from ptrs.terms import (
    App,
    InvalidPosition,
    Signature,
    TermError,
    Var,
    apply_substitution,
    check_term,
    match,
    replace_at,
    subterm_at,
    subterm_positions,
    term_size,
    variables,
)

x, y = Var("x"), Var("y")
ZERO = App("0")
SIG = Signature({"f": 2, "g": 1, "s": 1, "0": 0})


def s(t):
    return App("s", (t,))


def g(t):
    return App("g", (t,))


def f(a, b):
    return App("f", (a, b))


def test_rendering():
    assert str(ZERO) == "0"
    assert str(f(x, g(ZERO))) == "f(x,g(0))"
    assert str(x) == "x"


def test_signature_rejects_bad_declarations():
    with pytest.raises(TermError):
        Signature({"f": -1})
    with pytest.raises(TermError):
        Signature({"": 0})
    with pytest.raises(TermError):
        SIG.arity("missing")


def test_check_term_arity():
    check_term(f(x, ZERO), SIG)
    with pytest.raises(TermError):
        check_term(App("f", (x,)), SIG)
    with pytest.raises(TermError):
        check_term(App("h", ()), SIG)


def test_substitution_examples():
    assert apply_substitution(x, {"x": s(ZERO)}) == s(ZERO)
    assert apply_substitution(y, {"x": s(ZERO)}) == y
    assert apply_substitution(f(x, x), {"x": g(y)}) == f(g(y), g(y))


def test_positions_preorder():
    assert subterm_positions(x) == [()]
    assert subterm_positions(s(ZERO)) == [(), (1,)]
    assert subterm_positions(f(ZERO, g(x))) == [(), (1,), (2,), (2, 1)]


def test_subterm_and_replace():
    t = f(ZERO, g(x))
    assert subterm_at(t, (2, 1)) == x
    assert replace_at(t, (2,), ZERO) == f(ZERO, ZERO)
    assert replace_at(t, (), x) == x
    with pytest.raises(InvalidPosition):
        subterm_at(t, (3,))
    with pytest.raises(InvalidPosition):
        replace_at(t, (1, 1), x)


def test_match_basics():
    assert match(s(x), s(ZERO)) == {"x": ZERO}
    assert match(s(x), g(ZERO)) is None
    assert match(x, f(ZERO, ZERO)) == {"x": f(ZERO, ZERO)}
    assert match(f(x, y), f(ZERO, s(ZERO))) == {"x": ZERO, "y": s(ZERO)}


def test_match_nonlinear():
    assert match(f(x, x), f(ZERO, s(ZERO))) is None
    assert match(f(x, x), f(s(ZERO), s(ZERO))) == {"x": s(ZERO)}


def _random_term(rng, depth=0):
    roll = rng.random()
    if depth > 3 or roll < 0.3:
        return rng.choice([x, y, ZERO])
    sym, arity = rng.choice([("f", 2), ("g", 1), ("s", 1)])
    return App(sym, tuple(_random_term(rng, depth + 1) for _ in range(arity)))


def test_positions_count_matches_size():
    rng = random.Random(7)
    for _ in range(200):
        t = _random_term(rng)
        positions = subterm_positions(t)
        assert len(positions) == term_size(t)
        assert len(set(positions)) == len(positions)
        for pos in positions:
            assert replace_at(t, pos, subterm_at(t, pos)) == t


def test_match_apply_round_trip():
    rng = random.Random(11)
    for _ in range(200):
        pattern = _random_term(rng)
        sigma = {name: _random_term(rng) for name in variables(pattern)}
        subject = apply_substitution(pattern, sigma)
        found = match(pattern, subject)
        assert found is not None
        assert apply_substitution(pattern, found) == subject


def test_substitution_is_homomorphic():
    rng = random.Random(13)
    for _ in range(100):
        t = _random_term(rng)
        sigma = {"x": _random_term(rng), "y": _random_term(rng)}
        image = apply_substitution(t, sigma)
        if isinstance(t, App):
            assert image == App(t.symbol, tuple(apply_substitution(a, sigma) for a in t.args))
        assert variables(image) <= variables(t) | variables(sigma["x"]) | variables(sigma["y"])
