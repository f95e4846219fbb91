import json
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

import oracles
from balancelab import balance as bal
from balancelab.catalog import named_source
from balancelab.errors import ValidationError
from balancelab.sadic import GOLDEN_RATIO
from balancelab.words import ExplicitSource

random_words = st.text(alphabet="ab", min_size=12, max_size=60)


def test_frequency_examples():
    est = bal.frequency_estimate(named_source("fibonacci-word"), "0", 100_000)
    assert abs(est.mu - 1 / GOLDEN_RATIO) < 1e-3
    est = bal.frequency_estimate(ExplicitSource("ab", periodic=True), "a", 1000)
    assert all(v == 0.5 for n, v in est.series if n % 2 == 0)
    est = bal.frequency_estimate(named_source("period-doubling-swapped"), "1", 100_000)
    assert abs(est.mu - 2 / 3) < 1e-3


def test_frequency_absent_pattern_flagged():
    est = bal.frequency_estimate(ExplicitSource("ab", periodic=True), "aa", 100)
    assert est.mu == 0 and est.absent


@pytest.mark.parametrize("letter", "abc")
def test_tribonacci_letters_are_two_balanced(letter):
    prof = bal.balance_profile(named_source("tribonacci"), letter, 500, 100_000)
    assert prof.max == 2


def test_constant_word_balance_zero():
    prof = bal.balance_profile(ExplicitSource("a", periodic=True), "a", 50, 200)
    assert prof.max == 0


def test_chacon_balance_grows():
    lengths = sorted(set(range(1, 100)) | set(range(100, 30_000, 53)))
    prof = bal.balance_profile(named_source("chacon"), "0", horizon=200_000, lengths=lengths)
    peaks = [max(b for n, b in zip(prof.lengths, prof.values) if n <= c) for c in (10, 100, 1000, 10_000)]
    assert peaks == sorted(set(peaks))  # strictly increasing across decades


@given(random_words, st.sampled_from(["a", "b", "ab", "ba", "aab"]))
def test_balance_matches_naive(w, u):
    n_max = len(w) - len(u)
    prof = bal.balance_profile(w, u, n_max) if "b" in w and "a" in w else None
    if prof is None:
        return
    assert list(prof.values) == [oracles.balance(w, u, n) for n in range(1, n_max + 1)]


@given(random_words)
def test_discrepancy_matches_naive(w):
    if set(w) != {"a", "b"}:
        return
    mu = Fraction(1, 3)
    prof = bal.discrepancy_profile(w, "a", mu, len(w) - 1)
    for n, d in zip(prof.lengths, prof.values):
        assert abs(d - float(oracles.discrepancy(w, "a", n, mu))) < 1e-9


def test_discrepancy_examples():
    prof = bal.discrepancy_profile(ExplicitSource("ab", periodic=True), "a", Fraction(1, 2), 100, 1000)
    assert prof.max <= 0.5
    fib = bal.discrepancy_profile(named_source("fibonacci-word"), "0", 1 / GOLDEN_RATIO, 1000, 20_000)
    assert fib.max <= 1


def test_signed_discrepancy_exact():
    assert bal.signed_discrepancy("10111", "1", Fraction(2, 3)) == Fraction(2, 3)


@given(random_words, st.sampled_from(["a", "ab", "bb", "aba"]))
def test_consistency_on_random_words(w, u):
    if set(w) != {"a", "b"}:
        return
    n_max = len(w) - len(u)
    B = bal.balance_profile(w, u, n_max)
    D = bal.discrepancy_profile(w, u, None, n_max)
    D_exact = bal.discrepancy_profile(w, u, Fraction(int(B.maxima[-1]), 1) / len(w), n_max)
    assert bal.balance_discrepancy_consistency(B, D).consistent
    # B ≤ 2D holds for every μ; only the reverse direction needs μ̂
    report = bal.balance_discrepancy_consistency(B, D_exact)
    assert not [v for v in report.violations if v["kind"] == "B>2D"]


@pytest.mark.parametrize("name,pattern", [("tribonacci", "a"), ("tribonacci", "b"), ("fibonacci-word", "01")])
def test_consistency_examples(name, pattern):
    B = bal.balance_profile(named_source(name), pattern, 300, 50_000)
    D = bal.discrepancy_profile(named_source(name), pattern, None, 300, 50_000)
    assert bal.balance_discrepancy_consistency(B, D).consistent


def test_periodic_word_consistency():
    src = ExplicitSource("ab", periodic=True)
    B = bal.balance_profile(src, "a", 40, 500)
    D = bal.discrepancy_profile(src, "a", None, 40, 500)
    assert bal.balance_discrepancy_consistency(B, D).consistent and B.max <= 1 and D.max <= 1


def test_profile_mismatch_rejected():
    B = bal.balance_profile("abab", "a", 2)
    D = bal.discrepancy_profile("abab", "b", None, 2)
    with pytest.raises(ValidationError):
        bal.balance_discrepancy_consistency(B, D)


def test_empty_pattern_and_horizon_errors():
    with pytest.raises(ValidationError, match="empty pattern"):
        bal.balance_profile("abab", "", 2)
    with pytest.raises(ValidationError):
        bal.balance_profile("abab", "a", 10)


@given(st.text(alphabet="abc", min_size=10, max_size=40), st.integers(1, 3))
def test_uniform_scan_matches_naive(w, m):
    n_max = len(w) // 2
    rep = bal.uniform_balance_scan(w, m, n_max)
    expected = {}
    for k in range(1, m + 1):
        for u in oracles.factors(w, k):
            expected[u] = max(oracles.balance(w, u, n) for n in range(1, n_max + 1))
    assert rep.per_pattern == expected
    assert rep.global_max == max(expected.values())


def test_uniform_scan_examples():
    rep = bal.uniform_balance_scan(named_source("tribonacci"), 6, 200, 30_000)
    assert rep.global_max == 2 and not rep.truncated
    rep = bal.uniform_balance_scan(ExplicitSource("a", periodic=True), 4, 20, 100)
    assert rep.global_max == 0


def test_uniform_scan_budget_truncates():
    rep = bal.uniform_balance_scan(named_source("tribonacci"), 8, 300, 10_000, budget=10_000)
    assert rep.truncated


def test_uniform_scan_jobs_agree():
    one = bal.uniform_balance_scan(named_source("fibonacci-word"), 5, 100, 5000, jobs=1)
    two = bal.uniform_balance_scan(named_source("fibonacci-word"), 5, 100, 5000, jobs=2)
    assert one.per_pattern == two.per_pattern


def test_growth_label():
    assert bal.growth_label([1, 2, 3], [3, 4, 5]).label == "growth observed"
    assert bal.growth_label([1, 2, 3], [3, 3, 3]).label != "growth observed"


def test_serializers():
    prof = bal.balance_profile(named_source("fibonacci-word"), "0", 5, 100)
    assert json.loads(bal.profile_to_json(prof))["B"] == list(prof.values)
    assert bal.profile_to_csv(prof).splitlines()[0].startswith("n,")
    assert len(bal.profile_to_plotdata(prof).splitlines()) == 5
