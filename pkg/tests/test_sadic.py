import warnings
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

import oracles
from balancelab.catalog import named_source, named_substitution
from balancelab.errors import ValidationError
from balancelab.morphisms import fixed_point_prefix, sub_from_rules
from balancelab.sadic import (TRIBONACCI_RECURRENCE_CONSTANT, TRIBONACCI_ROOT, CongenialSequence,
                              ContinuedFraction, DirectiveSequence, SAdicSource, ar_congenial,
                              decisiveness_certificate, compose, level_prefix, mu_from_level, partial_quotients,
                              positivity_check, q_values, sadic_slope, seam_identity_values, sturmian_rotation,
                              sturmian_sadic, theoretical_balance_bound)
from balancelab.scan import complexity_profile, count_occurrences, factor_set

ONES = ContinuedFraction([1] * 40)
bounded_cf = st.lists(st.integers(1, 5), min_size=20, max_size=30).map(ContinuedFraction)


def tribonacci():
    return named_substitution("tribonacci")[0]


def test_continued_fraction_parsing():
    cf = ContinuedFraction.parse("cf: 2 (1)")
    assert cf.quotients(4) == [2, 1, 1, 1]
    assert ContinuedFraction.parse("cf: 1 1 (1)").convergent(5) == Fraction(5, 8)
    with pytest.raises(ValidationError, match="zero quotient"):
        ContinuedFraction([1, 0])


def test_compose_examples():
    cs = CongenialSequence.constant(tribonacci(), "a")
    assert compose(cs, 0, 2).image("a").text == "abac"
    assert compose(cs, 0, 1) == tribonacci()
    assert compose(sturmian_sadic(ONES), 0, 2).rules() == {"0": "010", "1": "01"}


def test_level_prefix_examples():
    cs = CongenialSequence.constant(tribonacci(), "a")
    assert level_prefix(cs, 0, 7).text == "abacaba"
    assert level_prefix(cs, 4, 1).text == "a"
    assert level_prefix(sturmian_sadic(ONES), 0, 1).text == "0"


def test_sturmian_level_lengths_are_fibonacci():
    cs = sturmian_sadic(ONES)
    lengths = [len(compose(cs, 0, n).image(cs.seed(n))) for n in range(1, 14)]
    for a, b, c in zip(lengths, lengths[1:], lengths[2:]):
        assert c == a + b


@given(bounded_cf)
def test_sadic_equals_rotation_coding(cf):
    n = 1000
    sadic = level_prefix(sturmian_sadic(cf), 0, n)
    slope = sadic_slope(cf).convergent(cf.depth + 1)
    assert sadic.text == sturmian_rotation(slope, length=n).text


@given(st.integers(2, 400).flatmap(lambda q: st.tuples(st.integers(1, q - 1), st.just(q))))
def test_rotation_matches_floor_formula(pq):
    p, q = pq
    assert sturmian_rotation(Fraction(p, q), length=3 * q).text == oracles.rotation(p, q, 3 * q)


def test_rotation_variants_agree_for_irrational_slope():
    cf = ContinuedFraction([2] * 40)
    left = sturmian_rotation(cf, length=5000)
    right = sturmian_rotation(cf, length=5000, variant="right-closed")
    assert left.text == right.text


def test_first_quotient_two_matches_rotation():
    cf = ContinuedFraction([2] + [1] * 39)
    sadic = level_prefix(sturmian_sadic(cf), 0, 3000)
    assert sadic.text == sturmian_rotation(sadic_slope(cf), length=3000).text


def test_sturmian_complexity_n_plus_one():
    w = level_prefix(sturmian_sadic(ContinuedFraction([3, 1, 4, 1, 5] * 8)), 0, 20_000)
    assert list(complexity_profile(w, 40).counts) == [n + 1 for n in range(1, 41)]


def test_ar_abc_has_tribonacci_language():
    ds = DirectiveSequence.parse("letters: a b c\n(a b c)")
    x = SAdicSource(ar_congenial(ds, "a")).prefix(20_000)
    t = named_source("tribonacci").prefix(20_000)
    for n in (1, 5, 12):
        assert {f.text for f in factor_set(x, n)} == {f.text for f in factor_set(t, n)}


def test_ar_binary_is_sturmian():
    ds = DirectiveSequence.parse("letters: 0 1\n(0 1)")
    x = SAdicSource(ar_congenial(ds, "0")).prefix(5000)
    assert list(complexity_profile(x, 30).counts) == [n + 1 for n in range(1, 31)]


def test_ar_missing_letters_warns():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ar_congenial(DirectiveSequence.parse("letters: a b c\n(a)"), "a")
    assert any("AR condition unverified" in str(w.message) for w in caught)


def test_partial_quotient_examples():
    assert partial_quotients(list("aabbba")).weak[:3] == (2, 3, 1)
    pq = partial_quotients(DirectiveSequence.parse("letters: a b c\n(a b c)"), 200)
    assert set(pq.strong) == {2}
    pq = partial_quotients(list("abababab"))
    assert set(pq.weak) == {1} and set(pq.strong) == {1}


@given(st.lists(st.sampled_from("ab"), min_size=1, max_size=40))
def test_weak_quotients_are_run_lengths(letters):
    pq = partial_quotients(letters)
    assert sum(pq.weak) == len(letters)
    runs = []
    for c in letters:
        if runs and runs[-1][0] == c:
            runs[-1][1] += 1
        else:
            runs.append([c, 1])
    assert list(pq.weak) == [r[1] for r in runs]


def test_positivity_examples():
    cs = CongenialSequence.constant(tribonacci(), "a")
    assert all(positivity_check(cs, 3, 6))
    assert not all(positivity_check(cs, 1, 6))
    assert all(positivity_check(sturmian_sadic(ONES), 2, 6))


def test_decisiveness_examples():
    x = named_source("tribonacci").prefix(10_000)
    cert = decisiveness_certificate(tribonacci(), factor_set(x, 2), 1)
    assert {a: v.text for a, v in cert.r.items()} == {"a": "a", "b": "a", "c": "a"}
    tm, _ = named_substitution("thue-morse")
    assert decisiveness_certificate(tm, factor_set(named_source("thue-morse"), 2, 100), 1) is None
    with pytest.raises(ValidationError):
        decisiveness_certificate(tribonacci(), factor_set(x, 2), 0)


def test_q_value_examples():
    x = named_source("tribonacci").prefix(10_000)
    cert = decisiveness_certificate(tribonacci(), factor_set(x, 2), 1)
    assert q_values(cert, tribonacci(), "ab") == {"a": 1, "b": 0, "c": 0}
    assert q_values(cert, tribonacci(), "ba") == {"a": 1, "b": 0, "c": 0}
    t = tribonacci()
    assert q_values(cert, t, "b") == {a: count_occurrences(t.image(a).text, "b") for a in "abc"}
    with pytest.raises(ValidationError):
        q_values(cert, t, "abc")


def test_seam_identity_example():
    src = named_source("tribonacci")
    cert = decisiveness_certificate(tribonacci(), factor_set(src.prefix(1000), 2), 1)
    assert seam_identity_values(cert, tribonacci(), src, 0, 2, "ab") == (1, 1)


@given(st.integers(0, 3000), st.integers(1, 40), st.sampled_from(["a", "b", "c", "ab", "ba", "ac", "ca", "aa"]))
def test_seam_identity_holds(pos, length, u):
    src = named_source("tribonacci")
    cert = decisiveness_certificate(tribonacci(), factor_set(src.prefix(1000), 2), 1)
    lhs, rhs = seam_identity_values(cert, tribonacci(), src, pos, length, u)
    assert lhs == rhs


def test_mu_formula_examples():
    t = tribonacci()
    x = named_source("tribonacci").prefix(100_000)
    cert = decisiveness_certificate(t, factor_set(x, 2), 1)
    nu = {a: Fraction(int(c), len(x)) for a, c in zip("abc", x.counts())}
    mu_b = mu_from_level(cert, t, nu, "b")
    expected = sum(nu[a] * count_occurrences(t.image(a).text, "b") for a in "abc") / sum(
        nu[a] * len(t.image(a)) for a in "abc")
    assert mu_b == expected
    assert abs(float(mu_from_level(cert, t, nu, "ab")) - count_occurrences(x, "ab") / len(x)) < 1e-3
    per = sub_from_rules({"a": "ab", "b": "ab"})
    cert = decisiveness_certificate(per, ["ab", "ba"], 1)
    assert mu_from_level(cert, per, {"a": Fraction(1, 2), "b": Fraction(1, 2)}, "ab") == Fraction(1, 2)


def test_balance_bound_examples():
    assert theoretical_balance_bound(1, 1, 1) == 16
    assert theoretical_balance_bound(0, 0, 1) == 6
    psi = TRIBONACCI_ROOT
    assert abs(TRIBONACCI_RECURRENCE_CONSTANT - (2 * psi ** 2 + psi + 1)) < 1e-12
    assert 4602.6 <= theoretical_balance_bound(TRIBONACCI_RECURRENCE_CONSTANT, 2, 3) <= 4602.8


def test_constant_sequence_matches_fixed_point():
    cs = CongenialSequence.constant(tribonacci(), "a")
    assert level_prefix(cs, 0, 5000).text == fixed_point_prefix(tribonacci(), "a", 5000).text
