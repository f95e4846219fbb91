"""Combinatorial scans over finite prefixes.

Distinct windows of a given length are identified by exact rank
refinement: the label of a length ``a+b`` window is the dense rank of the
pair (label of its length-``a`` head, label of its length-``b`` tail).
Labels are therefore collision free and cost one sort per refinement step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numba
import numpy as np

from .errors import HorizonError, ValidationError
from .words import FiniteWord, as_word, materialize

RecurrenceBound = Callable[[int], int]


# ------------------------------------------------------------ occurrences

def _check_pattern(w: FiniteWord, u: FiniteWord) -> None:
    if len(u) == 0:
        raise ValidationError("empty pattern")
    if w.alphabet != u.alphabet:
        raise ValidationError("alphabet mismatch between word and pattern")


def occurrence_mask(w: FiniteWord, u: FiniteWord) -> np.ndarray:
    """Boolean array ``m`` with ``m[i]`` true iff ``u`` occurs at ``i`` in ``w``."""
    _check_pattern(w, u)
    a, p = w.symbols, u.symbols
    m = len(a) - len(p) + 1
    if m <= 0:
        return np.zeros(0, dtype=bool)
    mask = a[:m] == p[0]
    for j in range(1, len(p)):
        mask &= a[j:j + m] == p[j]
    return mask


def occurrence_positions(w: FiniteWord, u: FiniteWord) -> np.ndarray:
    return np.flatnonzero(occurrence_mask(w, u))


def count_occurrences(w, u) -> int:
    """Number of (possibly overlapping) occurrences of ``u`` in ``w``."""
    w = as_word(w)
    if isinstance(u, str):
        if u and any(c not in w.alphabet for c in u):
            return 0  # a plain-text pattern using letters the word lacks never occurs
        u = as_word(u, w.alphabet)
    return int(occurrence_mask(w, u).sum())


# ------------------------------------------------- suffix array (oracle)

def _dense_rank(codes: np.ndarray) -> np.ndarray:
    _, inv = np.unique(codes, return_inverse=True)
    return inv.reshape(-1).astype(np.int64)


def suffix_array(a: np.ndarray) -> np.ndarray:
    """Suffix array by prefix doubling (O(n log^2 n))."""
    n = len(a)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    rank = _dense_rank(np.asarray(a, dtype=np.int64))
    k = 1
    while rank.max() < n - 1:
        second = np.zeros(n, dtype=np.int64)
        second[: n - k] = rank[k:] + 1
        rank = _dense_rank(rank * (n + 1) + second)
        k *= 2
        if k >= n:
            break
    sa = np.empty(n, dtype=np.int64)
    sa[rank] = np.arange(n)
    return sa


@numba.njit(cache=True)
def _kasai(a, sa):
    n = a.shape[0]
    rank = np.empty(n, dtype=np.int64)
    for i in range(n):
        rank[sa[i]] = i
    lcp = np.zeros(n, dtype=np.int64)
    h = 0
    for i in range(n):
        r = rank[i]
        if r > 0:
            j = sa[r - 1]
            while i + h < n and j + h < n and a[i + h] == a[j + h]:
                h += 1
            lcp[r] = h
            if h > 0:
                h -= 1
        else:
            h = 0
    return lcp


class SuffixIndex:
    """Suffix array with LCP, used as an independent occurrence oracle."""

    def __init__(self, word: FiniteWord):
        self.word = word
        self._a = word.symbols.astype(np.int64)
        self.sa = suffix_array(self._a)
        self.lcp = _kasai(self._a, self.sa)

    def _bound(self, p: List[int], upper: bool) -> int:
        a, sa, n = self._a, self.sa, len(self._a)
        lo, hi = 0, n
        m = len(p)
        while lo < hi:
            mid = (lo + hi) // 2
            s = int(sa[mid])
            head = a[s:s + m].tolist()
            if head < p or (upper and head == p):
                lo = mid + 1
            else:
                hi = mid
        return lo

    def count(self, u) -> int:
        if isinstance(u, str):
            if any(c not in self.word.alphabet for c in u):
                return 0
            u = as_word(u, self.word.alphabet)
        if len(u) == 0:
            raise ValidationError("empty pattern")
        p = u.symbols.astype(np.int64).tolist()
        return self._bound(p, True) - self._bound(p, False)

    def distinct_counts(self, n_max: int) -> np.ndarray:
        """``out[n-1]`` = number of distinct length-n factors, n = 1..n_max."""
        n = len(self._a)
        lengths = n - self.sa
        res = np.zeros(n_max, dtype=np.int64)
        for L in range(1, n_max + 1):
            res[L - 1] = int(np.count_nonzero((lengths >= L) & (self.lcp < L)))
        return res


# ----------------------------------------------------- window labelling

class WindowIndex:
    """Exact dense labels of all length-n windows of a word, cached per n."""

    def __init__(self, word: FiniteWord):
        self.word = word
        self.size = len(word)
        self._labels: Dict[int, Tuple[np.ndarray, int]] = {}
        if self.size:
            lab = _dense_rank(word.symbols.astype(np.int64))
            self._labels[1] = (lab, int(lab.max()) + 1)

    def _combine(self, a: int, b: int) -> Tuple[np.ndarray, int]:
        la, _ = self.labels(a)
        lb, kb = self.labels(b)
        m = self.size - (a + b) + 1
        codes = la[:m] * kb + lb[a:a + m]
        lab = _dense_rank(codes)
        return lab, (int(lab.max()) + 1 if m > 0 else 0)

    def labels(self, n: int) -> Tuple[np.ndarray, int]:
        """(labels, number of distinct labels) for windows of length n."""
        if n < 1:
            raise ValidationError("window length must be positive")
        if n > self.size:
            raise HorizonError(f"window length {n} exceeds prefix length {self.size}")
        got = self._labels.get(n)
        if got is not None:
            return got
        if n - 1 in self._labels:
            res = self._combine(n - 1, 1)
        else:
            half = 1 << (n.bit_length() - 1)
            if half == n:
                res = self._combine(n // 2, n // 2)
            else:
                res = self._combine(half, n - half)
        self._labels[n] = res
        return res

    def distinct(self, n: int) -> int:
        return self.labels(n)[1]

    def representatives(self, n: int) -> np.ndarray:
        """First position of each distinct length-n window, in label order."""
        lab, k = self.labels(n)
        first = np.full(k, len(lab), dtype=np.int64)
        np.minimum.at(first, lab, np.arange(len(lab)))
        return first

    def forget(self, keep: Sequence[int] = ()) -> None:
        keep = set(keep) | {1}
        for n in list(self._labels):
            if n not in keep:
                del self._labels[n]


def factor_set(source, n: int, horizon: Optional[int] = None) -> set:
    """All distinct length-n windows of ``prefix(horizon)``."""
    if n < 1:
        raise ValidationError("factor length must be positive")
    if horizon is not None and horizon < n:
        raise ValidationError(f"horizon {horizon} < factor length {n}")
    w = materialize(source, horizon)
    if len(w) < n:
        raise ValidationError(f"prefix length {len(w)} < factor length {n}")
    reps = WindowIndex(w).representatives(n)
    return {w[int(i):int(i) + n] for i in reps}


def factors_in_order(w: FiniteWord, n: int) -> List[FiniteWord]:
    """Distinct length-n windows of ``w`` listed by first occurrence."""
    reps = np.sort(WindowIndex(w).representatives(n))
    return [w[int(i):int(i) + n] for i in reps]


def _bound_of(source, certificate: Optional[RecurrenceBound]) -> Optional[RecurrenceBound]:
    if certificate is not None:
        return certificate
    return getattr(source, "recurrence_bound", None)


@dataclass(frozen=True)
class ComplexityProfile:
    lengths: Tuple[int, ...]
    counts: Tuple[int, ...]
    horizon: int
    exact: Tuple[bool, ...]

    @property
    def log_ratios(self) -> Tuple[float, ...]:
        """log p(n) / n for entropy estimation."""
        return tuple(math.log(c) / n if c > 0 else float("-inf") for n, c in zip(self.lengths, self.counts))

    def count(self, n: int) -> int:
        return self.counts[self.lengths.index(n)]

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "n": list(self.lengths),
            "p": list(self.counts),
            "exact": list(self.exact),
            "log_p_over_n": [round(x, 12) for x in self.log_ratios],
        }


def complexity_profile(source, n_max: int, horizon: Optional[int] = None,
                       certificate: Optional[RecurrenceBound] = None) -> ComplexityProfile:
    """Distinct factor counts p(n) for n = 1..n_max in ``prefix(horizon)``.

    ``p(n)`` is exact when a trusted bound ``R(n) <= certificate(n)`` is
    available and ``horizon >= certificate(n) + n``; otherwise it is a lower
    bound.
    """
    if n_max < 1:
        raise ValidationError("n_max must be positive")
    if horizon is not None and horizon < n_max:
        raise ValidationError(f"horizon {horizon} < n_max {n_max}")
    w = materialize(source, horizon)
    H = len(w)
    if H < n_max:
        raise ValidationError(f"prefix length {H} < n_max {n_max}")
    idx = WindowIndex(w)
    bound = _bound_of(source, certificate)
    counts, exact = [], []
    for n in range(1, n_max + 1):
        counts.append(idx.distinct(n))
        exact.append(bool(bound is not None and H >= bound(n) + n))
        idx.forget(keep=(n,))
    return ComplexityProfile(tuple(range(1, n_max + 1)), tuple(counts), H, tuple(exact))


def return_words(source, u, horizon: Optional[int] = None) -> set:
    """Return words to ``u`` collected from consecutive occurrences in the prefix."""
    w = materialize(source, horizon)
    u = as_word(u, w.alphabet) if isinstance(u, str) else u
    pos = occurrence_positions(w, u)
    if len(pos) < 2:
        raise ValidationError("insufficient occurrences")
    seen = set()
    out = set()
    for p, g in zip(pos[:-1].tolist(), np.diff(pos).tolist()):
        key = bytes(w.symbols[p:p + g])
        if key not in seen:
            seen.add(key)
            out.add(w[p:p + g])
    return out


# ---------------------------------------------------------- recurrence

@dataclass(frozen=True)
class RecurrenceProfile:
    """R(n) per length; ``None`` marks an inconclusive value (a factor seen once)."""

    lengths: Tuple[int, ...]
    values: Tuple[Optional[int], ...]
    horizon: int
    exact: Tuple[bool, ...]

    def value(self, n: int) -> Optional[int]:
        return self.values[self.lengths.index(n)]

    @property
    def confidence(self) -> Tuple[str, ...]:
        return tuple("exact" if e else ("inconclusive" if v is None else "lower-bound")
                     for v, e in zip(self.values, self.exact))

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "n": list(self.lengths),
            "R": [v if v is not None else "inf" for v in self.values],
            "confidence": list(self.confidence),
        }


def _recurrence_from_labels(lab: np.ndarray, n: int, H: int) -> Optional[int]:
    # For each factor u with occurrences p_1 < ... < p_m, the windows missing
    # u give the constraints  R >= p_1 + n,  R >= gap + n - 1,  R >= H - p_m.
    order = np.argsort(lab, kind="stable")
    sl = lab[order]
    starts = np.flatnonzero(np.r_[True, sl[1:] != sl[:-1]])
    ends = np.r_[starts[1:], len(sl)] - 1
    if np.any(starts == ends):
        return None
    first = order[starts]
    last = order[ends]
    gaps = np.diff(order)
    gaps[ends[:-1]] = 0  # differences across group boundaries
    max_gap = int(gaps.max()) if len(gaps) else 0
    return int(max(first.max() + n, max_gap + n - 1, (H - last).max()))


def recurrence_profile(source, n_max: int, horizon: Optional[int] = None,
                       certificate: Optional[RecurrenceBound] = None,
                       n_min: int = 1) -> RecurrenceProfile:
    """Observed recurrence function on ``prefix(horizon)``.

    Each reported value is a lower bound of the true R(n): it is witnessed
    by an explicit window of the prefix missing some length-n factor.  A
    factor occurring only once makes the value inconclusive (``None``).  The
    value is flagged exact when a trusted bound ``b`` on R is known and the
    prefix contains every factor of length ``b(n) + n``, so that the largest
    gap between occurrences is visible.
    """
    if n_max < n_min or n_min < 1:
        raise ValidationError("need 1 <= n_min <= n_max")
    w = materialize(source, horizon)
    H = len(w)
    if H < n_max:
        raise ValidationError(f"prefix length {H} < n_max {n_max}")
    idx = WindowIndex(w)
    bound = _bound_of(source, certificate)
    values, exact = [], []
    for n in range(n_min, n_max + 1):
        lab, _ = idx.labels(n)
        r = _recurrence_from_labels(lab, n, H)
        values.append(r)
        ok = False
        if bound is not None and r is not None:
            b = bound(n)
            ok = H >= bound(b + n)
        exact.append(bool(ok))
        idx.forget(keep=(n,))
    return RecurrenceProfile(tuple(range(n_min, n_max + 1)), tuple(values), H, tuple(exact))


# ---------------------------------------------------------------- powers

def is_primitive_word(u) -> bool:
    """True iff ``u`` is not a proper power, tested by ``|uu|_u == 2``."""
    u = as_word(u)
    if len(u) == 0:
        raise ValidationError("empty word")
    return count_occurrences(u + u, u) == 2


@dataclass(frozen=True)
class PowerWitness:
    exponent: int
    base: Optional[FiniteWord] = None
    position: Optional[int] = None

    @property
    def found(self) -> bool:
        return self.base is not None

    def to_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "base": None if self.base is None else self.base.text,
            "position": self.position,
        }


@numba.njit(cache=True)
def _max_power_kernel(a, p_max):
    # For each period l, a maximal run of r positions with a[i] == a[i+l]
    # spans a factor of length r + l and exponent (r + l) // l.  To beat the
    # current best exponent k a run needs r >= k*l, so only every (k*l)-th
    # position has to be probed before extending around a hit.
    n = a.shape[0]
    best_k = 1
    best_l = 0
    best_pos = -1
    l = 1
    while (best_k + 1) * l <= n and best_k < p_max:
        m = n - l
        need = best_k * l
        i = need - 1
        while i < m:
            if a[i] == a[i + l]:
                lo = i
                while lo > 0 and a[lo - 1] == a[lo - 1 + l]:
                    lo -= 1
                hi = i
                while hi + 1 < m and a[hi + 1] == a[hi + 1 + l]:
                    hi += 1
                k = (hi - lo + 1 + l) // l
                if k > best_k:
                    best_k = min(k, p_max)
                    best_l = l
                    best_pos = lo
                    if best_k >= p_max:
                        return best_k, best_l, best_pos
                    need = best_k * l
                i = hi + 1 + need
            else:
                i += need
        l += 1
    return best_k, best_l, best_pos


def max_power(prefix, p_max: int) -> PowerWitness:
    """Largest k <= p_max such that some v^k occurs in ``prefix``.

    Returns exponent 1 and no base for square-free input.
    """
    if p_max < 2:
        raise ValidationError("p_max must be at least 2")
    w = as_word(prefix)
    if len(w) < 2:
        return PowerWitness(1)
    k, l, pos = _max_power_kernel(w.symbols.astype(np.int64), int(p_max))
    if k < 2:
        return PowerWitness(1)
    return PowerWitness(int(k), w[int(pos):int(pos) + int(l)], int(pos))
