import pytest
from hypothesis import given, strategies as st

import oracles
from balancelab.catalog import named_source, named_substitution
from balancelab.errors import ValidationError
from balancelab.morphisms import (BlockCode, FixedPointSource, block_code_apply, classify_letters,
                                  fixed_point_prefix, format_substitution, identity_code, incidence,
                                  parse_substitution, sliding_block_presentation, sub_from_rules, tame_scan,
                                  transient_decomposition)
from balancelab.words import Alphabet

TRIB = {"a": "ab", "b": "ac", "c": "a"}


def tribonacci():
    return named_substitution("tribonacci")[0]


def test_apply_examples():
    t = tribonacci()
    assert t.image("a").text == "ab"
    assert t.apply("").text == ""
    assert t.apply("ab").text == "abac"


@given(st.text(alphabet="abc", max_size=20), st.text(alphabet="abc", max_size=20))
def test_apply_is_a_morphism(u, v):
    t = tribonacci()
    assert t.apply(u + v).text == t.apply(u).text + t.apply(v).text


@given(st.text(alphabet="abc", max_size=15))
def test_compose_matches_double_application(u):
    t = tribonacci()
    assert t.compose(t).apply(u).text == t.apply(t.apply(u)).text
    assert t.power(3).apply(u).text == t.apply(t.apply(t.apply(u))).text


def test_fixed_point_examples():
    assert fixed_point_prefix(tribonacci(), "a", 7).text == "abacaba"
    pd, _ = named_substitution("period-doubling")
    assert fixed_point_prefix(pd, "0", 4).text == "0100"
    sigma, _ = named_substitution("appendix-b")
    assert fixed_point_prefix(sigma, "*", 9).text == "*11000101"


@given(st.integers(1, 3000))
def test_fixed_point_matches_naive_iteration(n):
    assert fixed_point_prefix(tribonacci(), "a", n).text == oracles.iterate(TRIB, "a", n)


def test_fixed_point_errors():
    with pytest.raises(ValidationError, match="not prolongable"):
        fixed_point_prefix(sub_from_rules({"a": "ba", "b": "b"}), "a", 5)
    # a -> ab, b -> empty cycles between "a" and "ab" and never reaches length 5
    with pytest.raises(ValidationError, match="erasing|finite"):
        fixed_point_prefix(sub_from_rules({"a": "ab", "b": ""}), "a", 5)


def test_classification_examples():
    data = incidence(sub_from_rules({"a": "ab", "b": "b"}))
    assert data.bounded == ("b",) and data.growing == ("a",) and not data.primitive
    data = incidence(tribonacci())
    assert data.bounded == () and data.primitive
    chacon, _ = named_substitution("chacon")
    data = incidence(chacon)
    assert data.bounded == () and data.primitive


def test_incidence_matrix_counts_letters():
    m = tribonacci().incidence_matrix()
    # column j counts letters of the image of letter j, or the transpose; check both sums
    assert sorted(m.sum(axis=0).tolist()) == [1, 2, 2] or sorted(m.sum(axis=1).tolist()) == [1, 2, 2]


def test_classification_refuses_erasing():
    with pytest.raises(ValidationError):
        classify_letters(sub_from_rules({"a": "ab", "b": ""}))


def test_sliding_block_presentation_examples():
    tm, _ = named_substitution("thue-morse")
    pres = sliding_block_presentation(tm, 2, "0")
    assert len(pres.factors) == 4
    pd, _ = named_substitution("period-doubling")
    pres = sliding_block_presentation(pd, 2, "0")
    assert {f.text for f in pres.factors} == {"01", "10", "00"}
    pres = sliding_block_presentation(sub_from_rules({"a": "aa"}), 2, "a")
    assert len(pres.factors) == 1


@pytest.mark.parametrize("k", [2, 3])
def test_presentation_decodes_to_original_fixed_point(k):
    t = tribonacci()
    pres = sliding_block_presentation(t, k, "a")
    coded = fixed_point_prefix(pres.substitution, pres.seed, 500)
    assert pres.decode.apply(coded).text == fixed_point_prefix(t, "a", 500).text


def test_block_code_examples():
    tm = named_source("thue-morse")
    two = Alphabet("01")
    fig = BlockCode.from_rules({"01": "0", "11": "1", "10": "2", "00": "3"}, two, Alphabet("0123"))
    assert block_code_apply(fig, tm).prefix(6).text == "012023"
    summed = BlockCode.from_rules({"00": "0", "01": "1", "10": "1", "11": "0"}, two, two)
    assert block_code_apply(summed, tm).prefix(9).text == "101110101"
    assert block_code_apply(identity_code(two), tm).prefix(50).text == tm.prefix(50).text


def test_sum_code_gives_period_doubling_word():
    tm = named_source("thue-morse")
    two = Alphabet("01")
    summed = BlockCode.from_rules({"00": "0", "01": "1", "10": "1", "11": "0"}, two, two)
    pd = named_source("period-doubling").prefix(2000).text
    swapped = pd.translate(str.maketrans("01", "10"))
    assert block_code_apply(summed, tm).prefix(2000).text in (pd, swapped)


def test_block_code_undefined_window():
    code = BlockCode.from_rules({"00": "0", "01": "1"}, Alphabet("01"), Alphabet("01"))
    with pytest.raises(ValidationError, match="10"):
        code.apply("0010")


@given(st.text(alphabet="01", min_size=3, max_size=50))
def test_block_code_matches_naive(w):
    rules = {"000": "0", "001": "1", "010": "1", "011": "0", "100": "1", "101": "0", "110": "0", "111": "1"}
    code = BlockCode.from_rules(rules, Alphabet("01"), Alphabet("01"))
    expected = "".join(rules[w[i:i + 3]] for i in range(len(w) - 2))
    assert code.apply(w).text == expected


def test_transient_decomposition_examples():
    sigma, _ = named_substitution("appendix-b")
    d = transient_decomposition(sigma, "*")
    assert set(d.recurrent) == {"0", "1"} and d.u.text == "*" and d.v.text == "11"
    assert d.reconstruct(300).text == fixed_point_prefix(sigma, "*", 300).text
    d = transient_decomposition(tribonacci(), "a")
    assert set(d.recurrent) == {"a", "b", "c"} and d.status == "already-recurrent"
    s, _ = parse_substitution("s -> s a b\na -> a b\nb -> b a")
    d = transient_decomposition(s, "s")
    assert set(d.recurrent) == {"a", "b"} and d.u.text == "s"
    assert d.reconstruct(200).text == fixed_point_prefix(s, "s", 200).text


def test_tame_scan_examples():
    assert tame_scan(tribonacci()).verdict == "tame-certified"
    assert tame_scan(sub_from_rules({"a": "abb", "b": "b"})).verdict == "counter-growth"
    assert tame_scan(sub_from_rules({"a": "aba", "b": "b"})).verdict == "tame-certified"


def test_substitution_file_formats():
    sub, seed = parse_substitution("# comment\na -> a b\nb -> .\n")
    assert sub.rules() == {"a": "ab", "b": ""} and seed is None
    sub, seed = parse_substitution('{"rules": {"0": "01", "1": "0"}, "seed": "0"}')
    assert seed == "0" and sub.image("0").text == "01"
    again, seed2 = parse_substitution(format_substitution(sub, seed))
    assert again == sub and seed2 == "0"


def test_substitution_file_errors():
    with pytest.raises(ValidationError):
        parse_substitution("a => b")
    with pytest.raises(ValidationError):
        parse_substitution("{not json")


def test_fixed_point_source_describe():
    src = FixedPointSource(tribonacci(), "a")
    assert src.prefix(7).text == "abacaba"
    assert "seed" in src.params()
