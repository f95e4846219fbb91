"""Named substitutions and word sources used throughout the examples."""

from __future__ import annotations

from typing import Dict, Tuple

from .errors import ValidationError
from .morphisms import FixedPointSource, Substitution, coding
from .words import Alphabet, ExplicitSource, WordSource

# (rules, seed)
_SUBSTITUTIONS: Dict[str, Tuple[dict, str]] = {
    "tribonacci": ({"a": "ab", "b": "ac", "c": "a"}, "a"),
    "fibonacci-word": ({"0": "01", "1": "0"}, "0"),
    "thue-morse": ({"0": "01", "1": "10"}, "0"),
    "period-doubling": ({"0": "01", "1": "00"}, "0"),
    "chacon": ({"0": "0012", "1": "12", "2": "012"}, "0"),
    "appendix-b": ({"*": "*11", "0": "01", "1": "0"}, "*"),
    # period-doubling with letters exchanged: 1 -> 10, 0 -> 11, fixed point from 1
    "period-doubling-swapped": ({"1": "10", "0": "11"}, "1"),
}


def named_substitution(name: str) -> Tuple[Substitution, str]:
    try:
        rules, seed = _SUBSTITUTIONS[name]
    except KeyError:
        raise ValidationError(f"unknown named source {name!r}; known: {sorted(_SUBSTITUTIONS)}") from None
    return Substitution(rules), seed


def tribonacci_bound(n: int) -> int:
    """Trusted upper bound on the recurrence function of the Tribonacci word.

    Every length-11n window contains all length-n factors.
    """
    return 11 * n


def named_source(name: str) -> WordSource:
    """Built-in infinite words by name."""
    if name.startswith("constant:"):
        return ExplicitSource(name.split(":", 1)[1], periodic=True)
    if name.startswith("periodic:"):
        return ExplicitSource(name.split(":", 1)[1], periodic=True)
    sub, seed = named_substitution(name)
    src = FixedPointSource(sub, seed, name=name)
    if name == "tribonacci":
        src.recurrence_bound = tribonacci_bound
    return src


def named_sources() -> Tuple[str, ...]:
    return tuple(k for k in _SUBSTITUTIONS if k != "period-doubling-swapped")


# Objects of the non-recurrent Fibonacci-automatic example.
NONRECURRENT_PSI = {"0": "01", "1": "2", "2": "34", "3": "56", "4": "7",
                "5": "89", "6": "8", "7": "34", "8": "89", "9": "5"}
NONRECURRENT_PI = {"0": "*", "1": "1", "2": "1", "3": "0", "4": "0",
               "5": "0", "6": "1", "7": "0", "8": "1", "9": "0"}
NONRECURRENT_DELTA = {"0": ".", "1": "0", "2": ".", "3": "1", "4": "0",
                  "5": "1", "6": "1", "7": ".", "8": "1", "9": "1"}
NONRECURRENT_TWO_FACTORS = ("01", "12", "23", "34", "45", "48", "56", "58", "67",
                        "78", "83", "89", "95", "98")


def nonrecurrent_objects():
    """(sigma, psi, pi, delta, phi) for the non-recurrent example."""
    digits = Alphabet(str(i) for i in range(10))
    target = Alphabet(["*", "0", "1"])
    sigma = Substitution({"*": "*11", "0": "01", "1": "0"}, source=target)
    psi = Substitution(NONRECURRENT_PSI, source=digits)
    pi = coding(NONRECURRENT_PI, source=digits, target=target)
    delta = Substitution(NONRECURRENT_DELTA, source=digits, target=target)
    phi = pi.compose(psi)
    return sigma, psi, pi, delta, phi
