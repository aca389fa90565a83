from fractions import Fraction

import pytest

from ptrs.multidist import FiniteDistribution
from ptrs.terms import App, Var
from ptrs.wst import (
    ElaborationError,
    ParseError,
    elaborate,
    parse_problem,
    parse_term_text,
    render_problem,
)

RW34 = """\
(VAR x)
(RULES
  s(x) -> 3 : x || 1 : s(s(x))
)
"""

COINGAME = """\
(VAR x)
(RULES
  ?(x) -> 1 : ?(s(x)) || 1 : $(g(x))
  ?(x) -> $(f(x))
  $(0) -> 0
  $(s(x)) -> $(x)
)
"""


def test_parse_weighted_rule():
    pf = parse_problem(RW34)
    assert pf.variables == ("x",)
    assert len(pf.rules) == 1
    rule = pf.rules[0]
    assert rule.lhs == App("s", (Var("x"),))
    assert [w for w, _ in rule.alternatives] == [3, 1]
    assert pf.signature.arity("s") == 1


def test_parse_sugar_single_alternative():
    pf = parse_problem("(VAR x)(RULES f(x) -> x)")
    assert pf.rules[0].alternatives == ((1, Var("x")),)


def test_parse_coingame_signature():
    pf = parse_problem(COINGAME)
    assert pf.signature.symbols() == {"?": 1, "s": 1, "$": 1, "g": 1, "f": 1, "0": 0}
    assert len(pf.rules) == 4


def test_comments_and_layout():
    text = "; header\n(VAR x) ; vars\n(RULES\n  f(x) -> x ; body\n)\n"
    pf = parse_problem(text)
    assert len(pf.rules) == 1


def test_numeric_names_stay_terms():
    # A bare number is only a weight right after '->' or '||' and before ':'.
    pf = parse_problem("(RULES f(0) -> 1 : 0)")
    assert pf.rules[0].alternatives == ((1, App("0")),)
    pf2 = parse_problem("(RULES f(0) -> 0)")
    assert pf2.rules[0].alternatives == ((1, App("0")),)


def test_parse_error_locations():
    with pytest.raises(ParseError) as err:
        parse_problem("(VAR x)\n(RULES\n  f(x) ->\n)")
    assert err.value.line == 4
    with pytest.raises(ParseError) as err:
        parse_problem("(VAR x)(RULES f(x) - x)")
    assert "expected ARROW" in err.value.message
    with pytest.raises(ParseError) as err:
        parse_problem("(VAR x)(RULES f(x) -> 1 : x | 2 : x)")
    assert "'|'" in err.value.message


def test_arity_mismatch_is_rejected_with_both_uses():
    with pytest.raises(ParseError) as err:
        parse_problem("(VAR x y)(RULES f(x) -> x  f(x,y) -> x)")
    assert "f" in err.value.message and "line 1" in err.value.message


def test_variable_applied_is_rejected():
    with pytest.raises(ParseError) as err:
        parse_problem("(VAR x)(RULES x(x) -> x)")
    assert "variable" in err.value.message


def test_zero_weight_rejected():
    with pytest.raises(ParseError):
        parse_problem("(VAR x)(RULES f(x) -> 0 : x)")


def test_unbalanced_block():
    with pytest.raises(ParseError):
        parse_problem("(RULES f(x) -> x")
    with pytest.raises(ParseError):
        parse_problem("")
    with pytest.raises(ParseError):
        parse_problem("(VAR x)")


def test_render_parse_fixpoint():
    for text in (RW34, COINGAME, "(RULES a -> b  b -> 2 : a || 3 : b)"):
        pf = parse_problem(text)
        rendered = render_problem(pf)
        again = parse_problem(rendered)
        assert again == pf
        assert render_problem(again) == rendered


def test_elaborate_probabilities():
    ptrs = elaborate(parse_problem(RW34))
    rule = ptrs.rules[0]
    x = Var("x")
    assert rule.rhs == FiniteDistribution(
        {x: Fraction(3, 4), App("s", (App("s", (x,)),)): Fraction(1, 4)}
    )


def test_elaborate_merges_duplicate_alternatives():
    ptrs = elaborate(parse_problem("(VAR x)(RULES f(x) -> 1 : x || 1 : x)"))
    assert ptrs.rules[0].rhs == FiniteDistribution({Var("x"): 1})
    ptrs2 = elaborate(parse_problem("(VAR x)(RULES f(x) -> 1 : x || 1 : g(x) || 1 : x)"))
    assert ptrs2.rules[0].rhs.probability(Var("x")) == Fraction(2, 3)


def test_elaborate_rejections():
    with pytest.raises(ElaborationError) as err:
        elaborate(parse_problem("(VAR x y)(RULES x -> y)"))
    assert err.value.reason == "variable-lhs"
    with pytest.raises(ElaborationError) as err:
        elaborate(parse_problem("(VAR x y)(RULES f(x) -> g(y))"))
    assert err.value.reason == "free-variable-on-rhs"


def test_parse_term_text():
    pf = parse_problem(COINGAME)
    t = parse_term_text("?(s(0))", set(pf.variables), pf.signature)
    assert t == App("?", (App("s", (App("0"),)),))
    with pytest.raises(ParseError):
        parse_term_text("s(0,0)", set(), pf.signature)
    with pytest.raises(ParseError):
        parse_term_text("s(0) extra", set(), pf.signature)
