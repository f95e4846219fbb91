"""Fibonacci/Tribonacci numeration, DFAO words, and the Tribonacci recurrence formula and the non-recurrent Fibonacci-automatic word."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import ValidationError
from .morphisms import Substitution, fixed_point_prefix
from .scan import WindowIndex, count_occurrences, max_power, recurrence_profile
from .words import Alphabet, FiniteWord, WordSource, materialize


# --------------------------------------------------------------- sequences

def tribonacci_numbers(count: int) -> List[int]:
    """T_0 = 1, T_1 = 2, T_2 = 4, T_{n+3} = T_{n+2} + T_{n+1} + T_n."""
    t = [1, 2, 4]
    while len(t) < count:
        t.append(t[-1] + t[-2] + t[-3])
    return t[:count]


def u_sequence(count: int) -> List[int]:
    """U_0..U_3 = 1, 2, 4, 8 and U_n = 2 U_{n-1} − U_{n-4}."""
    u = [1, 2, 4, 8]
    while len(u) < count:
        u.append(2 * u[-1] - u[-4])
    return u[:count]


def fibonacci_numbers(count: int) -> List[int]:
    """F_1 = 1, F_2 = 2, F_{n+2} = F_{n+1} + F_n (listed from F_1)."""
    f = [1, 2]
    while len(f) < count:
        f.append(f[-1] + f[-2])
    return f[:count]


def _u_index(n: int) -> int:
    """The i with U_i < n <= U_{i+1}."""
    if n < 2:
        raise ValidationError("formula domain: the recurrence formula needs n >= 2")
    u = u_sequence(8)
    while u[-1] < n:
        u = u_sequence(2 * len(u))
    return next(i for i in range(len(u) - 1) if u[i] < n <= u[i + 1])


def tribonacci_recurrence_predict(n: int) -> int:
    """R(n) = T_{i+4} + n − 1 with U_i < n <= U_{i+1}."""
    i = _u_index(n)
    return tribonacci_numbers(i + 5)[i + 4] + n - 1


def tribonacci_recurrence_index(n: int) -> int:
    return _u_index(n)


@dataclass(frozen=True)
class RecurrenceSeries:
    checkpoints: Tuple[int, ...]  # n = U_i + 1
    ratios: Tuple[float, ...]  # R(n) / n
    constant_estimates: Tuple[float, ...]  # R(n) / n − 1, estimates of the linear recurrence constant

    def to_dict(self) -> dict:
        return {"n": list(self.checkpoints), "R_over_n": list(self.ratios),
                "constant_estimates": list(self.constant_estimates)}


def recurrence_constant_series(depth: int) -> RecurrenceSeries:
    """Formula values at the worst-case points n = U_i + 1, i = 0..depth−1."""
    if depth < 1:
        raise ValidationError("depth must be positive")
    u = u_sequence(depth)
    ns = tuple(x + 1 for x in u)
    ratios = tuple(tribonacci_recurrence_predict(n) / n for n in ns)
    return RecurrenceSeries(ns, ratios, tuple(r - 1 for r in ratios))


def recurrence_formula_table(n_max: int = 28, horizon: int = 10_000, source=None) -> List[dict]:
    """(n, predicted R, brute-force R, match) rows for 2 <= n <= n_max."""
    if source is None:
        from .catalog import named_source
        source = named_source("tribonacci")
    prof = recurrence_profile(source, n_max, horizon)
    rows = []
    for n in range(2, n_max + 1):
        pred = tribonacci_recurrence_predict(n)
        got = prof.value(n)
        rows.append({"n": n, "i": _u_index(n), "predicted": pred, "brute_force": got,
                     "confidence": prof.confidence[n - 1], "match": got == pred})
    return rows


# --------------------------------------------------------------- numeration

class NumerationSystem:
    """Greedy positional representations over 1, 2, 3, 5, ... or 1, 2, 4, 7, ....

    Index 0 is the empty word; digits are most significant first.
    """

    def __init__(self, kind: str):
        if kind not in ("fibonacci", "tribonacci"):
            raise ValidationError(f"unknown numeration {kind!r}; expected fibonacci or tribonacci")
        self.kind = kind
        self.forbidden = "11" if kind == "fibonacci" else "111"
        self._basis: List[int] = []
        self._extend(64)

    def _extend(self, count: int) -> None:
        if len(self._basis) >= count:
            return
        gen = fibonacci_numbers if self.kind == "fibonacci" else tribonacci_numbers
        self._basis = gen(count)

    def basis(self, count: int) -> List[int]:
        self._extend(count)
        return self._basis[:count]

    def _digits_for(self, n: int) -> int:
        self._extend(8)
        while self._basis[-1] <= n:
            self._extend(2 * len(self._basis))
        return next(i for i, b in enumerate(self._basis) if b > n)

    def to_representation(self, n: int) -> str:
        if n < 0:
            raise ValidationError("negative integers have no representation")
        width = self._digits_for(n)
        out = []
        for b in reversed(self._basis[:width]):
            if b <= n:
                out.append("1")
                n -= b
            else:
                out.append("0")
        return "".join(out).lstrip("0")

    def from_representation(self, digits: str) -> int:
        if any(c not in "01" for c in digits):
            raise ValidationError(f"invalid digit word {digits!r}: digits must be 0 or 1")
        if self.forbidden in digits:
            raise ValidationError(f"invalid digit word {digits!r}: contains {self.forbidden}")
        self._extend(len(digits) + 1)
        return sum(b for b, c in zip(self._basis, reversed(digits)) if c == "1")

    def digit_matrix(self, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Vectorized greedy: (digits msd-first as a 2D uint8 array, representation lengths)."""
        values = np.asarray(values, dtype=np.int64)
        if values.size and values.min() < 0:
            raise ValidationError("negative integers have no representation")
        top = int(values.max()) if values.size else 0
        width = self._digits_for(top)
        basis = np.array(self._basis[:width], dtype=np.int64)
        rem = values.copy()
        digits = np.zeros((len(values), width), dtype=np.uint8)
        for col, b in enumerate(basis[::-1]):
            take = rem >= b
            digits[take, col] = 1
            rem -= np.where(take, b, 0)
        # position of the leading 1 determines the length
        nz = digits.argmax(axis=1)
        lengths = np.where(values > 0, width - nz, 0)
        return digits, lengths

    def values_from_matrix(self, digits: np.ndarray) -> np.ndarray:
        width = digits.shape[1]
        basis = np.array(self.basis(width), dtype=np.int64)[::-1]
        return digits.astype(np.int64) @ basis


# ---------------------------------------------------------------------- DFAO

class Dfao:
    def __init__(self, states: Sequence[str], initial: str, transitions: Mapping[str, Mapping[str, str]],
                 output: Mapping[str, str], numeration: str = "fibonacci", alphabet: Optional[Alphabet] = None):
        self.states = tuple(str(s) for s in states)
        if len(set(self.states)) != len(self.states):
            raise ValidationError("duplicate state names")
        index = {s: i for i, s in enumerate(self.states)}
        if initial not in index:
            raise ValidationError(f"initial state {initial!r} is not a state")
        self.initial = initial
        self.numeration = NumerationSystem(numeration)
        table = np.full((len(self.states), 2), -1, dtype=np.int64)
        for s, row in transitions.items():
            if s not in index:
                raise ValidationError(f"transition from unknown state {s!r}")
            for d, t in row.items():
                if d not in ("0", "1") or t not in index:
                    raise ValidationError(f"bad transition {s!r} --{d}--> {t!r}")
                table[index[s], int(d)] = index[t]
        self.table = table
        missing = [s for s in self.states if s not in output]
        if missing:
            raise ValidationError(f"states without output: {missing}")
        self.output = {s: str(output[s]) for s in self.states}
        if alphabet is None:
            seen: List[str] = []
            for s in self.states:
                if self.output[s] not in seen:
                    seen.append(self.output[s])
            alphabet = Alphabet(seen)
        self.alphabet = alphabet
        self._out = np.array([alphabet.index(self.output[s]) for s in self.states], dtype=np.int64)
        self._index = index

    @classmethod
    def from_json(cls, text: str, alphabet: Optional[Alphabet] = None) -> "Dfao":
        try:
            d = json.loads(text)
            return cls(d["states"], d["initial"], d["transitions"], d["output"],
                       d.get("numeration", "fibonacci"), alphabet)
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ValidationError(f"malformed DFAO file: {exc}") from None

    def to_json(self) -> str:
        trans = {s: {str(d): self.states[int(self.table[i, d])] for d in (0, 1) if self.table[i, d] >= 0}
                 for i, s in enumerate(self.states)}
        return json.dumps({"states": list(self.states), "initial": self.initial, "transitions": trans,
                           "output": self.output, "numeration": self.numeration.kind}, indent=2)

    def run(self, digits: str) -> str:
        q = self._index[self.initial]
        for d in digits:
            nxt = int(self.table[q, int(d)])
            if nxt < 0:
                raise ValidationError(f"undefined transition from state {self.states[q]!r} on digit {d}")
            q = nxt
        return self.states[q]

    def evaluate(self, n: int) -> str:
        return self.output[self.run(self.numeration.to_representation(n))]

    def evaluate_batch(self, values: np.ndarray) -> np.ndarray:
        """Output indices for many integers, reading digits msd-first in lockstep."""
        digits, lengths = self.numeration.digit_matrix(values)
        width = digits.shape[1]
        q = np.full(len(values), self._index[self.initial], dtype=np.int64)
        for col in range(width):
            started = lengths >= width - col
            d = digits[:, col].astype(np.int64)
            nxt = self.table[q, d]
            bad = started & (nxt < 0)
            if bad.any():
                i = int(np.flatnonzero(bad)[0])
                raise ValidationError(f"undefined transition from state {self.states[int(q[i])]!r} "
                                      f"on digit {int(d[i])} (index {int(values[i])})")
            q = np.where(started, nxt, q)
        return self._out[q]


class DfaoSource(WordSource):
    kind = "dfao"

    def __init__(self, dfao: Dfao):
        super().__init__(dfao.alphabet)
        self.dfao = dfao

    def params(self) -> dict:
        return {"dfao": json.loads(self.dfao.to_json())}

    def _generate(self, n: int) -> np.ndarray:
        return self.dfao.evaluate_batch(np.arange(n, dtype=np.int64)).astype(self.alphabet.dtype)


def dfao_word(dfao: Dfao, numeration: Optional[str] = None) -> DfaoSource:
    if numeration is not None and numeration != dfao.numeration.kind:
        raise ValidationError(f"DFAO reads {dfao.numeration.kind} representations, not {numeration}")
    return DfaoSource(dfao)


def dfao_from_substitution(psi: Substitution, outputs: Mapping[str, str], initial: Optional[str] = None,
                           numeration: str = "fibonacci", alphabet: Optional[Alphabet] = None) -> Dfao:
    """δ(q, 0) = ψ(q)[0] and δ(q, 1) = ψ(q)[1] when |ψ(q)| = 2.

    A state with a length-1 image must never read 1; this is checked over
    every (state, trailing-ones) context reachable by valid representations.
    """
    lens = psi.lengths
    if not psi.is_endomorphism or lens.min() < 1 or lens.max() > 2:
        raise ValidationError("ψ must be an endomorphism with images of length 1 or 2")
    ns = NumerationSystem(numeration)
    limit = len(ns.forbidden)  # a run of this many ones is forbidden
    initial = psi.source.name(0) if initial is None else initial
    start = psi.source.index(initial)
    if int(psi.image_array(start)[0]) != start:
        raise ValidationError(f"ψ({initial}) must begin with {initial}")
    # contexts: -1 before the leading digit, else the current run of trailing ones
    seen = set()
    todo = [(start, -1)]
    while todo:
        q, ctx = todo.pop()
        if (q, ctx) in seen:
            continue
        seen.add((q, ctx))
        img = psi.image_array(q)
        if ctx >= 0:
            todo.append((int(img[0]), 0))
        if ctx < 0 or ctx + 1 < limit:
            if len(img) < 2:
                raise ValidationError(f"digit-1 transition needed from state {psi.source.name(q)!r}, "
                                      f"whose image has length 1")
            todo.append((int(img[1]), (ctx if ctx > 0 else 0) + 1))
    states = list(psi.source.symbols)
    trans = {}
    for q, s in enumerate(states):
        img = psi.image_array(q)
        trans[s] = {str(d): psi.source.name(int(img[d])) for d in range(len(img))}
    return Dfao(states, initial, trans, outputs, numeration, alphabet)


# ------------------------------------------- non-recurrent Fibonacci-automatic word

@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    details: dict

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, **self.details}


@dataclass(frozen=True)
class SuiteReport:
    checks: Tuple[Check, ...]
    horizon: int

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> Check:
        return next(c for c in self.checks if c.name == name)

    def to_dict(self) -> dict:
        return {"horizon": self.horizon, "passed": self.passed, "checks": [c.to_dict() for c in self.checks]}


def nonrecurrent_dfao() -> Dfao:
    from .catalog import NONRECURRENT_PI, nonrecurrent_objects
    sigma, psi, _, _, _ = nonrecurrent_objects()
    return dfao_from_substitution(psi, NONRECURRENT_PI, "0", "fibonacci", alphabet=sigma.source)


def _seam_check(psi, pi, sigma, delta, phi, base: np.ndarray, max_len: int) -> Tuple[int, Optional[str]]:
    """π(ψ²(a_0⋯a_{ℓ−1}))·δ(a_ℓ) = δ(a_0)·σ(φ(a_0⋯a_{ℓ−1})) over factors of length 2..max_len."""
    psi2 = psi.compose(psi)
    pi_psi2 = pi.compose(psi2)
    sigma_phi = sigma.compose(phi)
    index = WindowIndex(FiniteWord._wrap(psi.source, base))
    tested = 0
    for L in range(2, max_len + 1):
        for pos in index.representatives(L):
            f = base[int(pos):int(pos) + L]
            head, last = f[:-1], int(f[-1])
            lhs = np.concatenate([pi_psi2.apply_array(head), delta.image_array(last)])
            rhs = np.concatenate([delta.image_array(int(f[0])), sigma_phi.apply_array(head)])
            tested += 1
            if lhs.shape != rhs.shape or not np.array_equal(lhs, rhs):
                return tested, FiniteWord._wrap(psi.source, f).text
    return tested, None


def _unique_witness(a: np.ndarray, shift: int, max_len: int) -> Optional[Tuple[int, str]]:
    """Shortest prefix of a[shift:] occurring exactly once in a[shift:]."""
    tail = a[shift:]
    for L in range(1, max_len + 1):
        if L > len(tail):
            return None
        pat = tail[:L]
        m = len(tail) - L + 1
        mask = tail[:m] == pat[0]
        for j in range(1, L):
            mask &= tail[j:j + m] == pat[j]
        if int(mask.sum()) == 1:
            return L, "".join(map(str, pat))
    return None


def appendix_b_suite(horizon: int = 10_000, max_shift: int = 32, factor_len: int = 8,
                     witness_len: int = 400) -> SuiteReport:
    from .catalog import nonrecurrent_objects
    sigma, psi, pi, delta, phi = nonrecurrent_objects()
    H = horizon
    checks = []

    # (i) three constructions
    x = fixed_point_prefix(sigma, "*", H)
    base = fixed_point_prefix(psi, "0", H)
    coded = pi.apply(base)
    dfao = nonrecurrent_dfao()
    auto = materialize(DfaoSource(dfao), H)
    first = next((i for i in range(H) if not (x.symbols[i] == coded.symbols[i] == auto.symbols[i])), None)
    checks.append(Check("three-constructions", first is None,
                        {"prefix": x.text[:23], "first_mismatch": first}))

    # (ii) seam identity on factors of ψ^ω(0)
    tested, bad = _seam_check(psi, pi, sigma, delta, phi, base.symbols, factor_len)
    checks.append(Check("seam-identity", bad is None, {"factors_tested": tested, "counterexample": bad}))

    # (iii) powers
    pw4 = max_power(x, 6)
    checks.append(Check("power-freeness", pw4.exponent == 4,
                        {"max_exponent": pw4.exponent, "witness": pw4.base.text if pw4.base is not None else None,
                         "position": pw4.position}))

    # (iv) non-recurrence witnesses for shifts
    rows, ok = [], True
    for s in range(max_shift + 1):
        got = _unique_witness(x.symbols, s, witness_len)
        ok &= got is not None
        rows.append({"shift": s, "witness_length": got[0] if got else None})
    checks.append(Check("non-recurrence-evidence", ok, {"shifts": rows, "evidence_only": True}))

    # (v) the factor 11 occurs once
    c11 = count_occurrences(x, "11")
    checks.append(Check("single-11", c11 == 1, {"count": c11}))
    return SuiteReport(tuple(checks), H)
