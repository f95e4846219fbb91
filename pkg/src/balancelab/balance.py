"""Balance functions, discrepancy and frequency diagnostics over finite prefixes."""

from __future__ import annotations

import csv
import io
import json
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

import numba
import numpy as np

from .errors import ValidationError
from .scan import WindowIndex, occurrence_mask
from .words import FiniteWord, as_word, materialize


@numba.njit(cache=True, nogil=True)
def _window_extremes(csum, m, lengths):
    """Per window length n: (min, max) of occurrences starting at offsets 0..n-m.

    ``csum[i]`` is the number of occurrences starting before ``i``.
    """
    H = csum.shape[0] - 1 + m - 1  # word length
    k = lengths.shape[0]
    lo = np.zeros(k, dtype=np.int64)
    hi = np.zeros(k, dtype=np.int64)
    for j in range(k):
        n = lengths[j]
        if n < m:
            continue
        span = n - m + 1
        best_lo = csum[span] - csum[0]
        best_hi = best_lo
        for s in range(1, H - n + 1):
            c = csum[s + span] - csum[s]
            if c < best_lo:
                best_lo = c
            elif c > best_hi:
                best_hi = c
        lo[j] = best_lo
        hi[j] = best_hi
    return lo, hi


@numba.njit(cache=True, nogil=True)
def _all_factor_balance(labels, k, m, lengths):
    """Best max − min over the given window lengths, for every length-m factor at once.

    ``labels`` are dense labels of the length-m windows. Sliding by one
    position changes only the counts of the leaving and entering labels, so
    each label's extremes are updated in O(1) per shift.
    """
    P = labels.shape[0]
    H = P + m - 1
    best = np.zeros(k, dtype=np.int64)
    cnt = np.zeros(k, dtype=np.int64)
    lo = np.zeros(k, dtype=np.int64)
    hi = np.zeros(k, dtype=np.int64)
    for j in range(lengths.shape[0]):
        n = lengths[j]
        if n < m or n > H:
            continue
        span = n - m + 1
        cnt[:] = 0
        for i in range(span):
            cnt[labels[i]] += 1
        lo[:] = cnt
        hi[:] = cnt
        for s in range(1, H - n + 1):
            out = labels[s - 1]
            inn = labels[s + span - 1]
            if out == inn:
                continue  # same factor leaves and enters; counts unchanged
            cnt[out] -= 1
            if cnt[out] < lo[out]:
                lo[out] = cnt[out]
            cnt[inn] += 1
            if cnt[inn] > hi[inn]:
                hi[inn] = cnt[inn]
        for b in range(k):
            d = hi[b] - lo[b]
            if d > best[b]:
                best[b] = d
    return best


def _prefix_counts(mask: np.ndarray) -> np.ndarray:
    csum = np.zeros(len(mask) + 1, dtype=np.int64)
    np.cumsum(mask, out=csum[1:])
    return csum


def _extremes(mask: np.ndarray, m: int, H: int, lengths: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    if np.any(lengths > H):
        raise ValidationError(f"window length {int(lengths.max())} exceeds horizon {H}")
    return _window_extremes(_prefix_counts(mask), m, lengths.astype(np.int64))


def _pattern(u, w: FiniteWord) -> FiniteWord:
    u = as_word(u, w.alphabet) if isinstance(u, str) else u
    if len(u) == 0:
        raise ValidationError("empty pattern")
    if u.alphabet != w.alphabet:
        raise ValidationError("alphabet mismatch between source and pattern")
    return u


def _lengths(n_max: Optional[int], lengths: Optional[Iterable[int]]) -> np.ndarray:
    if lengths is not None:
        arr = np.array(sorted(set(int(n) for n in lengths)), dtype=np.int64)
        if len(arr) == 0 or arr[0] < 1:
            raise ValidationError("window lengths must be positive")
        return arr
    if n_max is None or n_max < 1:
        raise ValidationError("n_max must be positive")
    return np.arange(1, n_max + 1, dtype=np.int64)


# --------------------------------------------------------------- frequency

@dataclass(frozen=True)
class FrequencyEstimate:
    pattern: str
    mu: float
    series: Tuple[Tuple[int, float], ...]
    horizon: int
    absent: bool
    window_deviation: float  # max |freq in window − μ̂| over windows of the largest sub-checkpoint

    def to_dict(self) -> dict:
        return {"pattern": self.pattern, "mu": self.mu, "horizon": self.horizon, "absent": self.absent,
                "series": [list(p) for p in self.series], "window_deviation": self.window_deviation}


def frequency_estimate(source, u, horizon: int) -> FrequencyEstimate:
    w = materialize(source, horizon)
    u = _pattern(u, w)
    if horizon < 10 * len(u):
        raise ValidationError("horizon must be at least 10·|u|")
    H = len(w)
    mask = occurrence_mask(w, u)
    csum = _prefix_counts(mask)
    checkpoints = []
    c = 10
    while c < H:
        checkpoints.append(c)
        c *= 10
    checkpoints.append(H)
    # prefix(n) contains occurrences starting at 0..n-|u|
    series = tuple((n, int(csum[max(0, n - len(u) + 1)]) / n) for n in checkpoints)
    mu = series[-1][1]
    win = checkpoints[-2] if len(checkpoints) > 1 else H
    span = win - len(u) + 1
    counts = csum[span:] - csum[:len(csum) - span]
    dev = float(np.max(np.abs(counts / win - mu))) if len(counts) else 0.0
    return FrequencyEstimate(u.text, mu, series, H, bool(csum[-1] == 0), dev)


# ----------------------------------------------------------------- profiles

@dataclass(frozen=True)
class BalanceProfile:
    pattern: str
    lengths: Tuple[int, ...]
    values: Tuple[int, ...]
    minima: Tuple[int, ...]
    maxima: Tuple[int, ...]
    horizon: int

    @property
    def running_max(self) -> Tuple[int, ...]:
        return tuple(int(x) for x in np.maximum.accumulate(self.values)) if self.values else ()

    @property
    def max(self) -> int:
        return max(self.values) if self.values else 0

    def value(self, n: int) -> int:
        return self.values[self.lengths.index(n)]

    def to_dict(self) -> dict:
        return {"pattern": self.pattern, "horizon": self.horizon, "n": list(self.lengths),
                "B": list(self.values), "max": self.max, "exact": False,
                "flags": ["lower-bound"]}


@dataclass(frozen=True)
class DiscrepancyProfile:
    pattern: str
    mu: float
    method: str
    lengths: Tuple[int, ...]
    values: Tuple[float, ...]
    signed_max: Tuple[float, ...]  # max over windows of |w|_u − nμ
    signed_min: Tuple[float, ...]
    horizon: int
    mu_error: float  # bound on |μ̂ − μ|; 0 when μ is exact

    @property
    def max(self) -> float:
        return max(self.values) if self.values else 0.0

    def value(self, n: int) -> float:
        return self.values[self.lengths.index(n)]

    def to_dict(self) -> dict:
        return {"pattern": self.pattern, "horizon": self.horizon, "n": list(self.lengths),
                "D": list(self.values), "mu": self.mu, "mu_method": self.method,
                "mu_error": self.mu_error, "signed_max": list(self.signed_max),
                "signed_min": list(self.signed_min), "flags": ["lower-bound"]}


def balance_profile(source, u, n_max: Optional[int] = None, horizon: Optional[int] = None,
                    lengths: Optional[Iterable[int]] = None) -> BalanceProfile:
    """B(u, n) = max − min of |window|_u over the length-n windows of the prefix."""
    w = materialize(source, horizon)
    u = _pattern(u, w)
    ns = _lengths(n_max, lengths)
    if len(w) < int(ns[-1]) + len(u) and lengths is None:
        raise ValidationError(f"horizon {len(w)} < n_max + |u| = {int(ns[-1]) + len(u)}")
    return _balance_from_mask(u.text, occurrence_mask(w, u), len(u), len(w), ns)


def _balance_from_mask(name: str, mask: np.ndarray, m: int, H: int, ns: np.ndarray) -> BalanceProfile:
    lo, hi = _extremes(mask, m, H, ns)
    vals = hi - lo
    return BalanceProfile(name, tuple(int(n) for n in ns), tuple(int(v) for v in vals),
                          tuple(int(v) for v in lo), tuple(int(v) for v in hi), H)


def discrepancy_profile(source, u, mu: Union[None, float, Fraction] = None, n_max: Optional[int] = None,
                        horizon: Optional[int] = None, lengths: Optional[Iterable[int]] = None) -> DiscrepancyProfile:
    """D(u, n) = max over length-n windows of ||w|_u − n μ|.

    With ``mu=None`` the frequency is estimated from the prefix and its error
    is bounded by 2/√horizon.
    """
    w = materialize(source, horizon)
    u = _pattern(u, w)
    ns = _lengths(n_max, lengths)
    H = len(w)
    mask = occurrence_mask(w, u)
    if mu is None:
        mu_val = float(mask.sum()) / H
        method, err = "empirical", 2.0 / math.sqrt(H)
    else:
        mu_val = float(mu)
        method, err = "exact", 0.0
    lo, hi = _extremes(mask, len(u), H, ns)
    top = hi - ns * mu_val
    bottom = lo - ns * mu_val
    vals = np.maximum(np.abs(top), np.abs(bottom))
    return DiscrepancyProfile(u.text, mu_val, method, tuple(int(n) for n in ns), tuple(float(v) for v in vals),
                              tuple(float(v) for v in top), tuple(float(v) for v in bottom), H, err)


def signed_discrepancy(w, u, mu: Fraction) -> Fraction:
    """|w|_u − μ|w| in exact arithmetic."""
    w = as_word(w)
    u = _pattern(u, w)
    return int(occurrence_mask(w, u).sum()) - Fraction(mu) * len(w)


# -------------------------------------------------------- consistency check

@dataclass(frozen=True)
class ConsistencyReport:
    pattern: str
    violations: Tuple[dict, ...]
    tolerance: float
    checked: int

    @property
    def consistent(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"pattern": self.pattern, "consistent": self.consistent, "checked": self.checked,
                "tolerance": self.tolerance, "violations": list(self.violations)}


def balance_discrepancy_consistency(profile_b: BalanceProfile, profile_d: DiscrepancyProfile,
                                    tolerance: float = 1e-9) -> ConsistencyReport:
    """Check B(n) ≤ 2·max_{m≤n} D(m) and D(n) ≤ max_{m≤n} B(m) + (|u|−1)μ̂ + n·err.

    The (|u|−1)μ̂ term accounts for windows shorter than the pattern: a
    length-n window holds n−|u|+1 starting positions, and the mean count over
    windows is μ(n−|u|+1), not μn.
    """
    if (profile_b.pattern, profile_b.horizon, profile_b.lengths) != (profile_d.pattern, profile_d.horizon, profile_d.lengths):
        raise ValidationError("profiles differ in pattern, horizon or lengths")
    m = len(profile_b.pattern) if profile_b.pattern else 1
    run_b = np.maximum.accumulate(np.array(profile_b.values, dtype=float))
    run_d = np.maximum.accumulate(np.array(profile_d.values, dtype=float))
    viol = []
    boundary = (m - 1) * profile_d.mu
    for i, n in enumerate(profile_b.lengths):
        b, d = profile_b.values[i], profile_d.values[i]
        if b > 2 * run_d[i] + tolerance:
            viol.append({"n": n, "kind": "B>2D", "B": b, "bound": 2 * run_d[i]})
        bound = run_b[i] + boundary + n * profile_d.mu_error
        if d > bound + tolerance:
            viol.append({"n": n, "kind": "D>B", "D": d, "bound": bound})
    return ConsistencyReport(profile_b.pattern, tuple(viol), tolerance, len(profile_b.lengths))


# -------------------------------------------------------------- uniform scan

TEXT_LIMIT = 16  # patterns longer than this are reported by position, not text


@dataclass(frozen=True)
class UniformBalanceReport:
    per_pattern: Dict[str, int]  # patterns of length <= TEXT_LIMIT
    per_length: Dict[int, int]
    global_max: int
    witnesses: Tuple[Tuple[int, int], ...]  # (first position, length) of patterns attaining the max
    witness_texts: Tuple[str, ...]
    horizon: int
    window_lengths: Tuple[int, ...]
    pattern_lengths: Tuple[int, ...]
    truncated: bool
    patterns_scanned: int

    def to_dict(self) -> dict:
        return {"horizon": self.horizon, "global_max": self.global_max,
                "window_lengths": _compress(self.window_lengths),
                "pattern_lengths": _compress(self.pattern_lengths),
                "witnesses": [list(p) for p in self.witnesses], "witness_texts": list(self.witness_texts),
                "truncated": self.truncated, "patterns_scanned": self.patterns_scanned,
                "per_length": {str(k): v for k, v in self.per_length.items()},
                "per_pattern": self.per_pattern, "exact": False, "flags": ["lower-bound"]}


def _compress(values: Sequence[int]):
    """Arithmetic progressions as {start, stop, step}; anything else verbatim."""
    v = list(values)
    if len(v) > 2 and len(set(np.diff(v))) == 1:
        return {"start": v[0], "stop": v[-1], "step": v[1] - v[0]}
    return v


def uniform_balance_scan(source, u_max_len: Optional[int] = None, n_max: Optional[int] = None,
                         horizon: Optional[int] = None, budget: int = 10 ** 12, jobs: int = 1,
                         lengths: Optional[Iterable[int]] = None,
                         pattern_lengths: Optional[Iterable[int]] = None) -> UniformBalanceReport:
    """Max balance over the window lengths, for every factor of each pattern length.

    By default patterns are all factors of length 1..u_max_len and windows
    have lengths 1..n_max; either set can be replaced by an explicit grid.
    ``budget`` caps the number of window shifts (pattern lengths × window
    lengths × horizon); pattern lengths beyond it are skipped and the report
    is flagged truncated.
    """
    w = materialize(source, horizon)
    H = len(w)
    ns = _lengths(n_max, lengths)
    if pattern_lengths is None:
        if u_max_len is None or u_max_len < 1:
            raise ValidationError("u_max_len must be positive")
        ms = list(range(1, u_max_len + 1))
        if lengths is None and H < int(ns[-1]) + u_max_len:
            raise ValidationError(f"horizon {H} < n_max + u_max_len = {int(ns[-1]) + u_max_len}")
    else:
        ms = sorted(set(int(m) for m in pattern_lengths))
        if not ms or ms[0] < 1:
            raise ValidationError("pattern lengths must be positive")
    ms = [m for m in ms if m <= H]
    index = WindowIndex(w)
    plan, spent, truncated = [], 0, False
    for m in ms:
        lens = ns[(ns >= m) & (ns <= H)]
        cost = len(lens) * H
        if spent + cost > budget:
            truncated = True
            break
        spent += cost
        plan.append((m, lens))

    lock = threading.Lock()

    def run(item):
        m, lens = item
        # labels are built from cached shorter lengths, so guard the cache
        with lock:
            lab, k = index.labels(m)
            reps = index.representatives(m)
            if jobs == 1 and m > TEXT_LIMIT:
                index.forget(keep=[m])
        return m, _all_factor_balance(lab, k, m, lens), reps

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(run, plan))
    else:
        results = [run(item) for item in plan]
    per_pattern: Dict[str, int] = {}
    per_length: Dict[int, int] = {}
    gmax, witnesses = 0, []
    scanned = 0
    for m, best, reps in results:
        scanned += len(best)
        top = int(best.max()) if len(best) else 0
        per_length[m] = top
        order = np.argsort(reps, kind="stable")
        if m <= TEXT_LIMIT:
            for label in order:
                pos = int(reps[label])
                per_pattern[w[pos:pos + m].text] = int(best[label])
        if top > gmax:
            gmax, witnesses = top, []
        if top == gmax and top > 0:
            witnesses.extend((int(reps[label]), m) for label in order if best[label] == top)
    texts = tuple(w[p:p + m].text for p, m in witnesses if m <= TEXT_LIMIT)
    return UniformBalanceReport(per_pattern, per_length, gmax, tuple(witnesses), texts, H,
                                tuple(int(n) for n in ns), tuple(m for m, _ in plan), truncated, scanned)


# ---------------------------------------------------------- growth labelling

@dataclass(frozen=True)
class GrowthReport:
    horizons: Tuple[int, ...]
    values: Tuple[int, ...]
    label: str  # "growth observed", "no growth observed" or "insufficient horizons"

    def to_dict(self) -> dict:
        return {"horizons": list(self.horizons), "values": list(self.values), "label": self.label}


def growth_label(horizons: Sequence[int], values: Sequence[float]) -> GrowthReport:
    """Growth is only claimed after strict increase across at least 3 horizons."""
    if len(horizons) < 3:
        label = "insufficient horizons"
    elif all(b > a for a, b in zip(values, values[1:])):
        label = "growth observed"
    else:
        label = "no growth observed"
    return GrowthReport(tuple(horizons), tuple(values), label)


# ------------------------------------------------------------- serialization

def profile_to_json(profile) -> str:
    return json.dumps(profile.to_dict(), indent=2, sort_keys=True)


def profile_to_csv(profile) -> str:
    d = profile.to_dict()
    col = "B" if "B" in d else "D"
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["n", col])
    for n, v in zip(d["n"], d[col]):
        wr.writerow([n, v])
    return buf.getvalue()


def profile_to_plotdata(profile) -> str:
    d = profile.to_dict()
    col = "B" if "B" in d else "D"
    return "".join(f"{n} {v}\n" for n, v in zip(d["n"], d[col]))
