import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from foliant.errors import DimensionError, EvaluationError
from foliant.expr import (
    MAX_DEPTH,
    BinOp,
    Call,
    DomainError,
    ExprError,
    Neg,
    Num,
    ParseError,
    RatPow,
    Var,
    eval_expr,
    foliation_names,
    parse_expr,
    pretty,
    tokenize,
)


def ev(text, point, dim=None):
    point = np.atleast_1d(np.asarray(point, dtype=float))
    return eval_expr(parse_expr(text, dim or point.size), point)


class TestParseExamples:
    def test_precedence(self):
        assert ev("2+3*4", [0.7]) == 14

    def test_parabola_component(self):
        assert ev("1 + (z2 - z1^2)^(2/3)", [0, 1]) == pytest.approx(2.0, abs=1e-15)

    def test_unbalanced(self):
        with pytest.raises(ParseError, match="unbalanced"):
            parse_expr("1 + (z2 - z1", 2)

    def test_extra_close(self):
        with pytest.raises(ParseError, match="unbalanced"):
            parse_expr("z1)", 1)

    def test_unknown_identifier(self):
        with pytest.raises(ParseError, match="unknown identifier"):
            parse_expr("q + 1", 1)

    def test_variable_out_of_range(self):
        with pytest.raises(ParseError, match="out of range"):
            parse_expr("z3", 2)

    def test_lex_error_position(self):
        with pytest.raises(ExprError) as err:
            parse_expr("1 + $", 1)
        assert err.value.position == 4

    @pytest.mark.parametrize("text, value", [
        ("-2^2", -4.0),          # ^ binds tighter than unary minus
        ("2^3^2", 512.0),        # right associative
        ("8/4/2", 1.0),          # left associative
        ("2*-3", -6.0),
        ("(1+2)*(3-4)", -3.0),
        ("-(-3)", 3.0),
        ("2^(1/2)", math.sqrt(2.0)),
        ("pi", math.pi),
        ("cbrt(-27)", -3.0),
        ("abs(-2.5e1)", 25.0),
    ])
    def test_literal_values(self, text, value):
        assert ev(text, [0.0]) == pytest.approx(value, rel=1e-15)

    def test_rational_exponent_classified(self):
        e = parse_expr("z1^(2/3)", 1)
        assert isinstance(e, RatPow) and (e.p, e.q) == (2, 3)
        assert isinstance(parse_expr("z1^2", 1), RatPow)
        assert isinstance(parse_expr("z1^z1", 1), BinOp)

    def test_foliation_aliases(self):
        e = parse_expr("s + y1^2", 2, foliation_names(2))
        assert eval_expr(e, [1.0, 3.0]) == 10.0

    def test_depth_limit(self):
        with pytest.raises(ParseError, match="deeper"):
            parse_expr("(" * (MAX_DEPTH + 5) + "1" + ")" * (MAX_DEPTH + 5), 1)
        with pytest.raises(ParseError, match="deeper"):
            parse_expr("-" * (MAX_DEPTH + 5) + "1", 1)


class TestEvaluation:
    def test_pow_call_odd_root(self):
        assert ev("pow(-8, 2, 3)", [0.0]) == pytest.approx(4.0, abs=1e-14)

    def test_negative_base_two_thirds(self):
        assert ev("1 + (z2 - z1^2)^(2/3)", [1, 0]) == pytest.approx(2.0, abs=1e-15)

    def test_odd_root_semantics_match_formula(self, rng):
        x = rng.uniform(-5, 5, 50)
        for p, q in [(1, 3), (2, 3), (4, 5), (-1, 3), (3, 7)]:
            got = eval_expr(parse_expr(f"z1^({p}/{q})", 1), x[:, None])
            want = np.sign(x) ** p * np.abs(x) ** (p / q)
            np.testing.assert_allclose(got, want, rtol=1e-13)

    def test_unreduced_fraction(self):
        # 2/6 reduces to 1/3, an odd root
        assert ev("z1^(2/6)", [-8.0]) == pytest.approx(-2.0)

    def test_even_root_of_negative(self):
        with pytest.raises(DomainError):
            ev("z1^(1/2)", [-1.0])
        with pytest.raises(DomainError):
            ev("sqrt(z1)", [-1.0])

    def test_division_by_zero(self):
        with pytest.raises(EvaluationError):
            ev("z1/0", [1.0])

    def test_overflow(self):
        with pytest.raises(EvaluationError):
            ev("exp(z1)", [1000.0])

    def test_general_power_needs_positive_base(self):
        with pytest.raises(DomainError):
            ev("z1^z2", [-1.0, 0.5])
        assert ev("z1^z2", [4.0, 0.5]) == pytest.approx(2.0)

    def test_missing_variable(self):
        e = parse_expr("z2", 2)
        with pytest.raises(DimensionError):
            eval_expr(e, [1.0])

    def test_vectorized_matches_pointwise(self, rng):
        e = parse_expr("sin(z1) * z2 - cbrt(z1 - z2)^2 / (1 + z2^2)", 2)
        pts = rng.standard_normal((40, 2))
        batch = eval_expr(e, pts)
        assert batch.shape == (40,)
        for p, b in zip(pts, batch):
            assert eval_expr(e, p) == b


# -- round trip over generated ASTs --------------------------------------------

FUNCS = ["sin", "cos", "exp", "abs", "sqrt", "cbrt"]


def random_ast(r: random.Random, depth: int, dim: int):
    if depth == 0 or r.random() < 0.2:
        if r.random() < 0.5:
            i = r.randrange(dim)
            return Var(i, f"z{i + 1}")
        return Num(r.choice([0.0, 1.0, 2.0, 3.5, 0.125, 1e-5, 12345.0]))
    kind = r.choice(["neg", "bin", "bin", "ratpow", "call", "pow"])
    if kind == "neg":
        return Neg(random_ast(r, depth - 1, dim))
    if kind == "bin":
        return BinOp(r.choice("+-*/"), random_ast(r, depth - 1, dim), random_ast(r, depth - 1, dim))
    if kind == "ratpow":
        q = r.choice([1, 2, 3, 5])
        p = r.choice([-3, -1, 1, 2, 4])
        return RatPow(random_ast(r, depth - 1, dim), p, q)
    if kind == "call":
        return Call(r.choice(FUNCS), random_ast(r, depth - 1, dim))
    # general power: exponent must not be an integer or p/q literal
    i = r.randrange(dim)
    return BinOp("^", random_ast(r, depth - 1, dim), r.choice([Var(i, f"z{i + 1}"), Num(0.5)]))


class TestRoundTrip:
    def test_two_hundred_generated_expressions(self):
        r = random.Random(2024)
        for _ in range(200):
            dim = r.randint(1, 4)
            ast = random_ast(r, r.randint(1, 6), dim)
            text = pretty(ast)
            again = parse_expr(text, dim)
            assert again == ast, text
            assert pretty(again) == text

    def test_whitespace_insensitive(self):
        a = parse_expr("1+(z2-z1^2)^(2/3)", 2)
        b = parse_expr("  1 +  ( z2 - z1 ^ 2 ) ^ ( 2 / 3 )  ", 2)
        assert a == b
        assert pretty(a) == "1 + (z2 - z1^2)^(2/3)"


class TestFuzz:
    @settings(max_examples=300)
    @given(st.binary(max_size=2048))
    def test_arbitrary_bytes_only_raise_expr_errors(self, data):
        try:
            e = parse_expr(data, 3)
        except ExprError:
            return
        try:
            eval_expr(e, [0.3, -0.2, 1.1])
        except EvaluationError:
            pass

    @settings(max_examples=200)
    @given(st.text(alphabet="z123+-*/^()., sincoexpabqrtpw", max_size=200))
    def test_grammar_alphabet(self, text):
        try:
            parse_expr(text, 3)
        except ExprError:
            pass

    def test_large_input(self):
        r = random.Random(5)
        blob = bytes(r.randrange(256) for _ in range(64 * 1024))
        with pytest.raises(ExprError):
            parse_expr(blob, 2)
        # a flat chain of 13000 additions nests far beyond the depth limit
        long_sum = ("z1 + " * 13000 + "1").encode()
        assert len(long_sum) <= 64 * 1024
        with pytest.raises(ParseError, match="deeper"):
            parse_expr(long_sum, 1)
        nested = "(" * 200 + "z1" + ")" * 200
        assert eval_expr(parse_expr(nested, 1), [2.0]) == 2.0

    def test_tokenizer_positions(self):
        toks = tokenize("z1 + 2.5e-3")
        assert [(t.kind, t.pos) for t in toks] == [("NAME", 0), ("OP", 3), ("NUM", 5), ("EOF", 11)]
