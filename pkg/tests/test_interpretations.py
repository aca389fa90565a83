import random
from fractions import Fraction

import pytest

from helpers import (
    poly_form_value,
    rand_matrix_interp,
    rand_poly_interp,
    rand_value_distribution,
    vec_form_value,
)
from ptrs.interpretations import (
    Certificate,
    CertificateInvalid,
    DegreeOverflow,
    MatrixInterpretation,
    NotOriented,
    PolyForm,
    PolyInterpretation,
    check_certificate,
    eval_term,
    orientation_margin,
    ranking_from_certificate,
    symbolic_eval,
)
from ptrs.multidist import FiniteDistribution
from ptrs.rewriting import ProbRule, random_term, random_walk_ptrs
from ptrs.terms import App, Signature, Var
from ptrs.wst import elaborate, parse_problem

H = Fraction(1, 2)
x, y, z = Var("x"), Var("y"), Var("z")

COINGAME = """\
(VAR x)
(RULES
  ?(x) -> 1 : ?(s(x)) || 1 : $(g(x))
  ?(x) -> $(f(x))
  $(0) -> 0
  $(s(x)) -> $(x)
)
"""

COIN_INTERP = PolyInterpretation(
    {"?": 1, "s": 1, "$": 1, "f": 1, "g": 1, "0": 0},
    {
        "?": {(): 11, (1,): 7},
        "s": {(): 1, (1,): 1},
        "$": {(): 1, (1,): 2},
        "f": {(): 1, (1,): 3},
        "g": {(): 1, (1,): 2},
        "0": {(): 1},
    },
)

MATRIX_SYSTEM = elaborate(parse_problem("(VAR x)(RULES a(a(x)) -> 1 : a(a(a(x))) || 3 : a(b(a(x))))"))

MATRIX_INTERP = MatrixInterpretation(
    {"a": 1, "b": 1},
    2,
    {
        "a": ((((1, 1), (0, 0)),), (0, 1)),
        "b": ((((1, 0), (0, 0)),), (0, 0)),
    },
)


def nat(n):
    t = App("0")
    for _ in range(n):
        t = App("s", (t,))
    return t


def walk_interp():
    return PolyInterpretation({"s": 1, "0": 0}, {"s": {(): 1, (1,): 1}, "0": {(): 0}})


def test_eval_term_poly():
    interp = walk_interp()
    assert eval_term(interp, nat(5), {}) == 5
    assert eval_term(interp, App("s", (x,)), {"x": Fraction(3)}) == 4
    assert eval_term(interp, App("s", (x,)), {}) == 1  # unassigned variables read 0
    assert eval_term(COIN_INTERP, App("?", (App("0"),)), {}) == 18


def test_eval_term_matrix():
    v = (Fraction(5), Fraction(7))
    aa_x = App("a", (App("a", (x,)),))
    value = eval_term(MATRIX_INTERP, aa_x, {"x": v})
    assert value == (Fraction(13), Fraction(1))  # x1 + x2 + 1, then constant 1
    assert eval_term(MATRIX_INTERP, aa_x, {}) == (Fraction(1), Fraction(1))


def test_symbolic_eval_poly_forms():
    interp = walk_interp()
    form = symbolic_eval(interp, App("s", (App("s", (x,)),)))
    assert form.coefficient(frozenset(("x",))) == 1
    assert form.constant_part() == 2
    coin = symbolic_eval(COIN_INTERP, App("$", (App("g", (x,)),)))
    assert coin.coefficient(frozenset(("x",))) == 4
    assert coin.constant_part() == 3


def test_symbolic_eval_matrix_form():
    form = symbolic_eval(MATRIX_INTERP, App("a", (App("a", (x,)),)))
    assert form.matrix("x") == ((1, 1), (0, 0))
    assert form.const == (1, 1)


def test_symbolic_matches_numeric_poly():
    rng = random.Random(31)
    sig = Signature({"f": 2, "g": 1, "c": 0})
    for _ in range(150):
        interp = rand_poly_interp(rng, sig.symbols(), degree=2)
        term = random_term(sig, rng, max_depth=3, variable_pool=("x", "y"))
        try:
            form = symbolic_eval(interp, term)
        except DegreeOverflow:
            continue
        assignment = {"x": Fraction(rng.randrange(0, 9), 2), "y": Fraction(rng.randrange(0, 9), 3)}
        assert poly_form_value(form, assignment) == eval_term(interp, term, assignment)


def test_symbolic_matches_numeric_matrix():
    rng = random.Random(37)
    sig = Signature({"f": 2, "g": 1, "c": 0})
    for _ in range(100):
        interp = rand_matrix_interp(rng, sig.symbols(), dim=2)
        term = random_term(sig, rng, max_depth=3, variable_pool=("x", "y"))
        form = symbolic_eval(interp, term)
        assignment = {
            name: (Fraction(rng.randrange(0, 7)), Fraction(rng.randrange(0, 7)))
            for name in ("x", "y")
        }
        assert vec_form_value(form, assignment) == eval_term(interp, term, assignment)


def test_coin_game_margins():
    system = elaborate(parse_problem(COINGAME))
    margins = [orientation_margin(COIN_INTERP, rule) for rule in system.rules]
    assert margins == [H, 8, 2, 2]


def test_walk_margin_three_quarters():
    system = random_walk_ptrs(Fraction(3, 4))
    assert orientation_margin(walk_interp(), system.rules[0]) == H


def test_fair_walk_not_oriented():
    system = random_walk_ptrs(H)
    with pytest.raises(NotOriented) as err:
        orientation_margin(walk_interp(), system.rules[0])
    assert "margin is 0" in str(err.value)


def test_negative_coefficient_reported():
    # [s](x) = 2x + 1 against s(x) -> {1: s(s(x))} gives a negative x coefficient.
    interp = PolyInterpretation({"s": 1}, {"s": {(): 1, (1,): 2}})
    rule = ProbRule(App("s", (x,)), FiniteDistribution({App("s", (App("s", (x,)),)): 1}))
    with pytest.raises(NotOriented) as err:
        orientation_margin(interp, rule)
    assert "coefficient of x" in str(err.value)


def test_matrix_margin_is_half():
    cert = check_certificate(MATRIX_INTERP, MATRIX_SYSTEM)
    assert cert.margins == (H,)
    assert cert.epsilon == H


def test_matrix_margin_varies_with_probability():
    # With weights 1:1 the margin drops to 1 - 2p = 0 and orientation fails.
    system = elaborate(parse_problem("(VAR x)(RULES a(a(x)) -> 1 : a(a(a(x))) || 1 : a(b(a(x))))"))
    with pytest.raises(NotOriented):
        orientation_margin(MATRIX_INTERP, system.rules[0])


def test_degree_overflow_on_squaring():
    interp = PolyInterpretation({"f": 2}, {"f": {(1,): 1, (2,): 1, (1, 2): 1}})
    term = App("f", (x, x))
    with pytest.raises(DegreeOverflow):
        symbolic_eval(interp, term)


def test_degree_cap_only_binds_when_set():
    interp = PolyInterpretation({"f": 2, "c": 0}, {"f": {(1,): 1, (2,): 1, (1, 2): 1}, "c": {}})
    nested = App("f", (App("f", (x, y)), z))
    form = symbolic_eval(interp, nested)  # uncapped: x*y*z is fine
    assert form.coefficient(frozenset(("x", "y", "z"))) == 1
    with pytest.raises(DegreeOverflow):
        symbolic_eval(interp, nested, cap=2)


def test_check_certificate_coin_game():
    system = elaborate(parse_problem(COINGAME))
    cert = check_certificate(COIN_INTERP, system)
    assert cert.kind == "poly"
    assert cert.margins == (H, 8, 2, 2)
    assert cert.epsilon == H


def test_check_certificate_collects_all_problems():
    system = elaborate(parse_problem(COINGAME))
    broken = PolyInterpretation(
        COIN_INTERP.arities,
        {**{s: dict(COIN_INTERP.coeffs[s]) for s in COIN_INTERP.arities},
         "?": {(): 0, (1,): 7}},
    )
    with pytest.raises(CertificateInvalid) as err:
        check_certificate(broken, system)
    # [?] = 7x orients neither ? rule once the +11 is gone.
    assert len(err.value.problems) == 2


def test_check_certificate_coverage_and_witnesses():
    system = random_walk_ptrs(Fraction(3, 4))
    with pytest.raises(CertificateInvalid) as err:
        check_certificate(PolyInterpretation({"s": 1}, {"s": {(1,): 1}}), system)
    assert any("no interpretation for symbol 0" in p for p in err.value.problems)
    lazy = PolyInterpretation({"s": 1, "0": 0}, {"s": {(): 1, (1,): H}, "0": {}})
    with pytest.raises(CertificateInvalid) as err:
        check_certificate(lazy, system)
    assert any("not monotone" in p for p in err.value.problems)
    wrong_arity = PolyInterpretation({"s": 2, "0": 0}, {"s": {(): 1, (1,): 1, (2,): 1}, "0": {}})
    with pytest.raises(CertificateInvalid) as err:
        check_certificate(wrong_arity, system)
    assert any("arity" in p for p in err.value.problems)


def test_matrix_validate():
    bad = MatrixInterpretation(
        {"a": 1},
        2,
        {"a": ((((0, 1), (0, 0)),), (0, 0))},
    )
    problems = bad.validate()
    assert any("not monotone" in p for p in problems)


def test_ranking_from_certificate_poly():
    system = random_walk_ptrs(Fraction(3, 4))
    cert = check_certificate(walk_interp(), system)
    rank, eps = ranking_from_certificate(cert)
    assert eps == H
    assert [rank(nat(n)) for n in range(5)] == [0, 1, 2, 3, 4]


def test_ranking_from_certificate_matrix():
    cert = check_certificate(MATRIX_INTERP, MATRIX_SYSTEM)
    rank, eps = ranking_from_certificate(cert)
    a_of = lambda t: App("a", (t,))
    b_of = lambda t: App("b", (t,))
    assert eps == H
    assert rank(a_of(a_of(App("b", (x,))))) == 1
    assert rank(b_of(x)) == 0


def test_expected_interpretation_is_affine():
    # E[f](d1, d2) computed two ways: via rule_difference against zero, and
    # by direct enumeration of the product distribution.
    rng = random.Random(41)
    sig = {"f": 2}
    for _ in range(100):
        interp = rand_poly_interp(rng, sig, degree=2)
        values = [Fraction(n) for n in range(5)]
        d1 = rand_value_distribution(rng, values)
        d2 = rand_value_distribution(rng, values)
        lhs = interp.apply_values("f", [
            sum((p * v for v, p in d1.items()), Fraction(0)),
            sum((p * v for v, p in d2.items()), Fraction(0)),
        ])
        direct = Fraction(0)
        for v1, p1 in d1.items():
            for v2, p2 in d2.items():
                direct += p1 * p2 * interp.apply_values("f", [v1, v2])
        # Multilinearity makes the expectation factor through each argument,
        # even for the mixed monomial, because the draws are independent.
        assert lhs == direct


def test_certificate_dataclass():
    cert = Certificate(walk_interp(), (H,), H)
    assert cert.kind == "poly"
