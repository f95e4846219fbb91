import json

import pytest
from hypothesis import given, strategies as st

import oracles
from balancelab.catalog import nonrecurrent_objects, named_source
from balancelab.errors import ValidationError
from balancelab.morphisms import fixed_point_prefix, sub_from_rules
from balancelab.numeration import (Dfao, DfaoSource, NumerationSystem, recurrence_formula_table, appendix_b_suite,
                                   nonrecurrent_dfao, dfao_from_substitution, recurrence_constant_series,
                                   tribonacci_numbers, tribonacci_recurrence_index, tribonacci_recurrence_predict,
                                   u_sequence)
from balancelab.sadic import TRIBONACCI_RECURRENCE_CONSTANT

FIB = NumerationSystem("fibonacci")
TRIB = NumerationSystem("tribonacci")


def test_sequences():
    assert tribonacci_numbers(9) == [1, 2, 4, 7, 13, 24, 44, 81, 149]
    assert u_sequence(7) == [1, 2, 4, 8, 15, 28, 52]
    u = u_sequence(20)
    assert all(u[n] == 2 * u[n - 1] - u[n - 4] for n in range(4, 20))


def test_recurrence_formula_examples():
    assert tribonacci_recurrence_predict(2) == 14
    assert tribonacci_recurrence_index(10) == 3 and tribonacci_recurrence_predict(10) == 90
    assert tribonacci_recurrence_index(28) == 4 and tribonacci_recurrence_predict(28) == 176
    with pytest.raises(ValidationError, match="formula domain"):
        tribonacci_recurrence_predict(1)


def test_recurrence_formula_against_naive_scan():
    w = named_source("tribonacci").prefix(3000).text
    for n in range(2, 9):
        assert oracles.recurrence(w, n) == tribonacci_recurrence_predict(n)


def test_recurrence_formula_table():
    rows = recurrence_formula_table(28, 10_000)
    assert all(r["match"] for r in rows) and rows[0]["brute_force"] == 14


def test_recurrence_constant_series_converges():
    series = recurrence_constant_series(40)
    assert abs(series.constant_estimates[-1] - TRIBONACCI_RECURRENCE_CONSTANT) < 1e-6


def test_representation_examples():
    assert FIB.to_representation(12) == "10101"
    assert FIB.to_representation(1) == "1"
    assert TRIB.to_representation(6) == "110"
    with pytest.raises(ValidationError):
        FIB.from_representation("0110")
    with pytest.raises(ValidationError):
        FIB.from_representation("102")


@given(st.integers(0, 10 ** 9))
def test_representation_round_trip(n):
    for system, forbidden in ((FIB, "11"), (TRIB, "111")):
        rep = system.to_representation(n)
        assert forbidden not in rep and not rep.startswith("0")
        assert system.from_representation(rep) == n


def test_digit_matrix_is_vectorized_round_trip():
    import numpy as np
    values = np.arange(5000)
    for system in (FIB, TRIB):
        assert (system.values_from_matrix(system.digit_matrix(values)[0]) == values).all()


def test_dfao_examples():
    prefix = DfaoSource(nonrecurrent_dfao()).prefix(23).text
    assert "*11000101010010010010100".startswith(prefix)
    single = Dfao.from_json(json.dumps({"states": ["s"], "initial": "s", "transitions": {"s": {"0": "s", "1": "s"}},
                                        "output": {"s": "a"}, "numeration": "fibonacci"}))
    assert DfaoSource(single).prefix(10).text == "a" * 10


def test_dfao_from_nonrecurrent_substitutions():
    psi, pi = nonrecurrent_objects()[1:3]
    assert psi.power(5).apply("0").text == "0123456789834"
    dfao = dfao_from_substitution(psi, pi.rules(), "0", "fibonacci")
    reference = pi.apply(fixed_point_prefix(psi, "0", 10_000)).text
    assert DfaoSource(dfao).prefix(10_000).text == reference
    assert dfao.evaluate(12) == reference[12] == "0"


def test_fibonacci_word_automaton():
    fib = sub_from_rules({"0": "01", "1": "0"})
    dfao = dfao_from_substitution(fib, {"0": "0", "1": "1"}, "0", "fibonacci")
    assert DfaoSource(dfao).prefix(5000).text == fixed_point_prefix(fib, "0", 5000).text


def test_bad_dfao_json():
    with pytest.raises(ValidationError):
        Dfao.from_json("{}")
    with pytest.raises(ValidationError):
        Dfao.from_json("not json")


def test_appendix_b_suite():
    rep = appendix_b_suite(10_000)
    assert rep.passed
    assert rep.check("power-freeness").details["max_exponent"] == 4
    assert rep.check("single-11").details["count"] == 1
