import pytest
from hypothesis import given, settings, strategies as st

import oracles
from balancelab.catalog import named_source
from balancelab.errors import ValidationError
from balancelab.scan import (SuffixIndex, WindowIndex, complexity_profile, count_occurrences, factor_set,
                             is_primitive_word, max_power, recurrence_profile, return_words)
from balancelab.words import ExplicitSource

words = st.text(alphabet="abc", min_size=1, max_size=80)


def texts(s):
    return {f.text for f in s}


@pytest.mark.parametrize("w,u,expected", [("aaaa", "aa", 3), ("0101", "01", 2)])
def test_count_examples(w, u, expected):
    assert count_occurrences(w, u) == expected


def test_thue_morse_prefix_count_by_enumeration():
    # "0110100" holds "01" at positions 0 and 3 only
    assert count_occurrences("0110100", "01") == oracles.count("0110100", "01") == 2


def test_empty_pattern_rejected():
    with pytest.raises(ValidationError, match="empty pattern"):
        count_occurrences("abc", "")


@given(words, st.text(alphabet="abc", min_size=1, max_size=4))
def test_count_matches_naive(w, u):
    assert count_occurrences(w, u) == oracles.count(w, u)


@given(words, st.integers(1, 6))
def test_factor_set_matches_naive(w, n):
    if n > len(w):
        return
    assert texts(factor_set(w, n)) == oracles.factors(w, n)


@given(words, st.text(alphabet="abc", min_size=1, max_size=5))
def test_suffix_index_count(w, u):
    assert SuffixIndex(ExplicitSource(w).prefix(len(w))).count(u) == oracles.count(w, u)


@given(words, st.integers(1, 8))
def test_window_labels_identify_equal_factors(w, n):
    if n > len(w):
        return
    lab, k = WindowIndex(ExplicitSource(w).prefix(len(w))).labels(n)
    assert k == len(oracles.factors(w, n))
    for i in range(len(lab)):
        for j in range(i + 1, len(lab)):
            assert (lab[i] == lab[j]) == (w[i:i + n] == w[j:j + n])


def test_fibonacci_factors_and_oracle():
    assert texts(factor_set(named_source("fibonacci-word"), 2, 100)) == {"01", "10", "00"}
    assert texts(factor_set(ExplicitSource("a", periodic=True), 3, 10)) == {"aaa"}


def test_tribonacci_factor_count_five():
    assert len(factor_set(named_source("tribonacci"), 5, 10_000)) == 11


def test_factor_set_horizon_too_small():
    with pytest.raises(ValidationError):
        factor_set("abc", 5)


def test_complexity_examples():
    prof = complexity_profile(named_source("tribonacci"), 20, 100_000)
    assert list(prof.counts) == [2 * n + 1 for n in range(1, 21)]
    prof = complexity_profile(ExplicitSource("a", periodic=True), 5, 50)
    assert set(prof.counts) == {1}


def test_complexity_sturmian_all_ones():
    prof = complexity_profile(named_source("fibonacci-word"), 20, 10_000)
    assert list(prof.counts) == [n + 1 for n in range(1, 21)]


def test_return_words_examples():
    assert texts(return_words(named_source("fibonacci-word"), "0", 1000)) == {"0", "01"}
    assert texts(return_words(ExplicitSource("ab", periodic=True), "a", 50)) == {"ab"}
    assert texts(return_words(named_source("tribonacci"), "a", 10_000)) == {"a", "ab", "ac"}


def test_return_words_insufficient():
    with pytest.raises(ValidationError, match="insufficient occurrences"):
        return_words("abc", "a")


def test_recurrence_examples():
    prof = recurrence_profile(named_source("tribonacci"), 10, 10_000)
    assert prof.value(2) == 14 and prof.value(10) == 90
    assert recurrence_profile(ExplicitSource("ab", periodic=True), 1, 100).value(1) == 2


@settings(max_examples=40)
@given(st.text(alphabet="ab", min_size=4, max_size=40), st.integers(1, 3))
def test_recurrence_matches_naive_on_periodic_words(base, n):
    # on a long periodic prefix both computations see every window pattern
    w = ExplicitSource(base, periodic=True).prefix(len(base) * 6)
    got = recurrence_profile(w, n).value(n)
    assert got == oracles.recurrence(w.text, n)


@pytest.mark.parametrize("u,expected", [("abab", False), ("aba", True), ("a", True)])
def test_primitive_examples(u, expected):
    assert is_primitive_word(u) is expected


def test_primitive_rejects_empty():
    with pytest.raises(ValidationError):
        is_primitive_word("")


def test_max_power_examples():
    pw = max_power("aaa", 5)
    assert pw.exponent == 3 and pw.base.text == "a"
    assert max_power("abcacb", 3).exponent < 2


@given(st.text(alphabet="ab", min_size=1, max_size=40))
def test_max_power_matches_naive(w):
    assert max_power(w, 50).exponent == oracles.max_exponent(w)
