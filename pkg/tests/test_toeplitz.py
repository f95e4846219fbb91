import itertools
import json
import math

import pytest
from hypothesis import given, strategies as st

import oracles
from balancelab.catalog import named_source
from balancelab.errors import ValidationError
from balancelab.morphisms import sub_from_rules
from balancelab.toeplitz import (ToeplitzSource, complexity_growth_check, exp_spec, explicit_spec, middle_blocks,
                                 multinomial, parse_spec, pd_equivalence_check, pd_spec, rank_multiset,
                                 stirling_log_estimate, toeplitz_prefix, unrank_multiset, validate_spec)


def test_pd_spec_prefixes():
    spec = pd_spec()
    assert toeplitz_prefix(spec, 16).text == "0100010101000100"
    assert toeplitz_prefix(spec, 4).text == "0100"
    assert toeplitz_prefix(spec, 1).text == "0"


@pytest.mark.parametrize("length", [1, 4, 4 ** 5])
def test_pd_equivalence(length):
    assert pd_equivalence_check(length)


def test_pd_matches_period_doubling_fixed_point():
    assert ToeplitzSource(pd_spec(8)).prefix(5000).text == named_source("period-doubling").prefix(5000).text


def test_validation_examples():
    assert validate_spec(pd_spec()).valid
    assert validate_spec(exp_spec(2, [4], 2)).valid
    dup = explicit_spec([(sub_from_rules({"0": "0011", "1": "0011"}), "0")], "0")
    report = validate_spec(dup)
    assert not report.valid and any("equal images" in f for f in report.failures)


def test_exp_spec_level_one():
    spec = exp_spec(2, [4], 2)
    assert middle_blocks(spec, 1) == ["0011", "0101", "0110", "1001", "1010", "1100"]
    assert spec.periods[2] == 8


def test_degenerate_k_two():
    with pytest.raises(ValidationError):
        exp_spec(2, [2], 2)
    assert any("degenerate" in f for f in exp_spec(2, [2], 2, allow_degenerate=True).flags)


def test_multinomial_examples():
    assert multinomial(2, 2) == 6
    assert multinomial(1, 9) == 1
    assert multinomial(2, 10) == 184756
    est = math.exp(stirling_log_estimate(2, 10))
    assert abs(est - 184756) / 184756 < 0.02


@given(st.integers(1, 4), st.integers(1, 5))
def test_multinomial_matches_formula(d, k):
    assert multinomial(d, k) == math.factorial(d * k) // math.factorial(k) ** d


@given(st.lists(st.integers(1, 3), min_size=1, max_size=3).flatmap(
    lambda counts: st.tuples(st.just(counts), st.integers(0, multinomial_counts(counts) - 1))))
def test_rank_unrank_round_trip(case):
    counts, rank = case
    word = unrank_multiset(counts, rank)
    assert sorted(word) == sorted(i for i, c in enumerate(counts) for _ in range(c))
    assert rank_multiset(word, len(counts)) == rank


def multinomial_counts(counts):
    total = math.factorial(sum(counts))
    for c in counts:
        total //= math.factorial(c)
    return total


def test_unrank_is_lexicographic():
    words = [tuple(unrank_multiset([2, 2], r)) for r in range(6)]
    assert words == sorted(set(itertools.permutations([0, 0, 1, 1])))


def test_complexity_growth_examples():
    rows = complexity_growth_check(exp_spec(2, [4, 3], 3))
    p8 = next(r for r in rows if r.period == 8)
    assert p8.factors >= 6 and all(r.holds for r in rows)
    assert all(r.factors >= 2 for r in complexity_growth_check(pd_spec(5)))


def test_exp_factor_count_matches_naive():
    spec = exp_spec(2, [4, 3], 3)
    w = toeplitz_prefix(spec, spec.periods[3]).text
    rows = complexity_growth_check(spec)
    p8 = next(r for r in rows if r.period == 8)
    assert p8.factors == len(oracles.factors(w, 8))


def test_insufficient_depth():
    with pytest.raises(ValidationError, match="insufficient depth"):
        toeplitz_prefix(pd_spec(2), 100)


def test_spec_files():
    assert toeplitz_prefix(parse_spec('{"kind": "pd", "depth": 4}'), 4).text == "0100"
    spec = parse_spec(json.dumps({"kind": "exp", "l0": 2, "k": [4], "depth": 2}))
    assert len(middle_blocks(spec, 1)) == 6
    explicit = parse_spec(json.dumps({"kind": "explicit", "levels": [{"rules": {"0": "0100", "1": "0101"}}]}))
    assert toeplitz_prefix(explicit, 4).text == "0100"
    with pytest.raises(ValidationError):
        parse_spec('{"kind": "nope"}')
    with pytest.raises(ValidationError):
        parse_spec("not json")
