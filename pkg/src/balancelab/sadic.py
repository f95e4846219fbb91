"""Congenial sequences of substitutions and their limit words.

Covers Sturmian words from continued fractions, Arnoux-Rauzy words from
directive sequences, rotation codings, partial quotients, positivity and
decisiveness certificates, and the balance-bound formula.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import HorizonError, ValidationError
from .morphisms import Substitution
from .scan import count_occurrences
from .words import Alphabet, FiniteWord, WordSource, as_word, materialize

# real root of x^3 = x^2 + x + 1
TRIBONACCI_ROOT = (1 + (19 + 3 * 33 ** 0.5) ** (1 / 3) + (19 - 3 * 33 ** 0.5) ** (1 / 3)) / 3
GOLDEN_RATIO = (1 + 5 ** 0.5) / 2
TRIBONACCI_RECURRENCE_CONSTANT = 2 * TRIBONACCI_ROOT ** 2 + TRIBONACCI_ROOT + 1


class Stream:
    """Eventually periodic or callback-defined sequence, indexed from 0."""

    def __init__(self, preperiod: Sequence = (), period: Sequence = (),
                 rule: Optional[Callable[[int], object]] = None, cap: int = 1_000_000):
        if rule is not None and (preperiod or period):
            raise ValidationError("give either explicit terms or a rule, not both")
        self.preperiod = tuple(preperiod)
        self.period = tuple(period)
        self.rule = rule
        self.cap = int(cap)
        self._cache: Dict[int, object] = {}

    @property
    def length(self) -> Optional[int]:
        """Number of terms, ``None`` when infinite."""
        if self.rule is not None or self.period:
            return None
        return len(self.preperiod)

    @property
    def eventually_periodic(self) -> bool:
        return self.rule is None

    def __getitem__(self, n: int):
        if n < 0:
            raise IndexError(n)
        if self.rule is not None:
            if n >= self.cap:
                raise HorizonError(f"materialization cap {self.cap} reached")
            if n not in self._cache:
                self._cache[n] = self.rule(n)
            return self._cache[n]
        if n < len(self.preperiod):
            return self.preperiod[n]
        if not self.period:
            raise HorizonError(f"sequence has only {len(self.preperiod)} terms")
        return self.period[(n - len(self.preperiod)) % len(self.period)]

    def window(self, n: int) -> list:
        L = self.length
        if L is not None:
            n = min(n, L)
        return [self[i] for i in range(n)]

    def describe(self) -> dict:
        if self.rule is not None:
            return {"rule": getattr(self.rule, "__name__", "callback")}
        return {"preperiod": list(self.preperiod), "period": list(self.period)}


def _parse_stream_tokens(body: str) -> Tuple[List[str], List[str]]:
    body = body.strip()
    m = re.fullmatch(r"([^()]*)(?:\(([^()]*)\))?\s*", body)
    if not m:
        raise ValidationError(f"malformed stream {body!r}: use 'x y (z w)' with an optional final period")
    pre = m.group(1).split()
    per = m.group(2).split() if m.group(2) is not None else []
    if m.group(2) is not None and not per:
        raise ValidationError("empty period")
    return pre, per


# ---------------------------------------------------------- continued fractions

class ContinuedFraction:
    """Partial quotients a_1, a_2, ... of α = [0; a_1, a_2, ...]."""

    def __init__(self, preperiod: Sequence[int] = (), period: Sequence[int] = (),
                 rule: Optional[Callable[[int], int]] = None, cap: int = 1_000_000):
        for a in list(preperiod) + list(period):
            if int(a) < 1:
                raise ValidationError("zero quotient: partial quotients must be >= 1")
        # rule receives the 1-based index
        inner = None if rule is None else (lambda i: self._checked(rule(i + 1)))
        self._stream = Stream([int(a) for a in preperiod], [int(a) for a in period], inner, cap)
        self._rule = rule
        if self._stream.length == 0:
            raise ValidationError("a continued fraction needs at least one quotient")

    @staticmethod
    def _checked(a) -> int:
        a = int(a)
        if a < 1:
            raise ValidationError("zero quotient: partial quotients must be >= 1")
        return a

    @classmethod
    def parse(cls, text: str) -> "ContinuedFraction":
        """``"cf: 1 1 1 (1)"``; the ``cf:`` tag is optional."""
        body = text.strip()
        if body.lower().startswith("cf:"):
            body = body[3:]
        pre, per = _parse_stream_tokens(body)
        try:
            return cls([int(x) for x in pre], [int(x) for x in per])
        except ValueError:
            raise ValidationError(f"non-integer partial quotient in {text!r}") from None

    @property
    def depth(self) -> Optional[int]:
        return self._stream.length

    def quotient(self, n: int) -> int:
        """a_n for n >= 1."""
        if n < 1:
            raise ValidationError("quotients are indexed from 1")
        return self._stream[n - 1]

    def quotients(self, depth: int) -> List[int]:
        return self._stream.window(depth)

    def convergent(self, depth: Optional[int] = None) -> Fraction:
        qs = self.quotients(depth if depth is not None else (self.depth or 40))
        x = Fraction(0)
        for a in reversed(qs):
            x = 1 / (a + x)
        return x

    def truncated(self, depth: int) -> "ContinuedFraction":
        return ContinuedFraction(self.quotients(depth))

    def with_first_quotient_incremented(self) -> "ContinuedFraction":
        """[0; a_1 + 1, a_2, ...]."""
        if self._rule is not None:
            r = self._rule
            return ContinuedFraction(rule=lambda i: r(i) + (1 if i == 1 else 0), cap=self._stream.cap)
        pre = list(self._stream.preperiod)
        per = list(self._stream.period)
        if not pre:
            pre = [per[0]]
            per = per[1:] + per[:1]
        pre[0] += 1
        return ContinuedFraction(pre, per)

    def describe(self) -> dict:
        return self._stream.describe()

    def __repr__(self) -> str:
        d = self._stream.describe()
        if "rule" in d:
            return f"ContinuedFraction(rule={d['rule']})"
        per = f" ({' '.join(map(str, d['period']))})" if d["period"] else ""
        return f"ContinuedFraction(cf: {' '.join(map(str, d['preperiod']))}{per})"


# ------------------------------------------------------------- congenial

class CongenialSequence:
    """Levels (τ_n, a_n) with τ_n: A_{n+1} -> A_n and τ_n(a_{n+1}) starting with a_n.

    ``levels(n)`` returns ``(τ_n, a_n)``.  For a finite sequence of ``depth``
    substitutions, ``levels(depth)`` must return ``(None, a_depth)``.
    """

    def __init__(self, levels: Callable[[int], Tuple[Optional[Substitution], str]],
                 depth: Optional[int] = None, cap: int = 100_000, description: Optional[dict] = None,
                 period: Optional[Tuple[int, int]] = None):
        self._fn = levels
        self.depth = depth
        self.cap = int(cap)
        self._cache: Dict[int, Tuple[Optional[Substitution], int]] = {}
        self._checked = -1
        self.description = description or {"kind": "callback"}
        self.period = period  # (preperiod length, period length) when eventually periodic

    @classmethod
    def eventually_periodic(cls, preperiod: Sequence[Tuple[Substitution, str]],
                            period: Sequence[Tuple[Substitution, str]] = (),
                            terminal_seed: Optional[str] = None) -> "CongenialSequence":
        pre, per = list(preperiod), list(period)
        if not per and terminal_seed is None:
            raise ValidationError("a finite sequence needs the seed letter of its last level")

        def fn(n):
            if n < len(pre):
                return pre[n]
            if not per:
                return (None, terminal_seed) if n == len(pre) else None
            return per[(n - len(pre)) % len(per)]
        return cls(fn, depth=None if per else len(pre), description={"kind": "eventually-periodic"},
                   period=(len(pre), len(per)) if per else None)

    @classmethod
    def constant(cls, sub: Substitution, seed: str) -> "CongenialSequence":
        return cls.eventually_periodic([], [(sub, seed)])

    def _raw(self, n: int) -> Tuple[Optional[Substitution], int]:
        if n < 0:
            raise ValidationError("negative level index")
        if self.depth is not None and n > self.depth:
            raise HorizonError(f"sequence has only {self.depth} levels")
        if n >= self.cap:
            raise HorizonError(f"materialization cap {self.cap} reached")
        if n not in self._cache:
            got = self._fn(n)
            if got is None:
                raise HorizonError(f"level {n} unavailable")
            sub, seed = got
            if sub is None and (self.depth is None or n != self.depth):
                raise ValidationError(f"level {n} has no substitution")
            alpha = sub.target if sub is not None else None
            if alpha is None:
                prev = self._raw(n - 1)[0] if n > 0 else None
                if prev is None:
                    raise ValidationError("cannot infer the alphabet of the terminal level")
                alpha = prev.source
            self._cache[n] = (sub, alpha.index(seed) if isinstance(seed, str) else int(seed))
        return self._cache[n]

    def _validate_through(self, n: int) -> None:
        while self._checked < n:
            j = self._checked + 1
            sub, a = self._raw(j)
            if sub is not None and (self.depth is None or j + 1 <= self.depth):
                nxt, b = self._raw(j + 1)
                if nxt is not None and nxt.target != sub.source:
                    raise ValidationError(f"alphabets do not chain between levels {j} and {j + 1}")
                img = sub.image_array(b)
                if len(img) == 0 or int(img[0]) != a:
                    raise ValidationError(f"not congenial at level {j}: τ_{j}(a_{j + 1}) does not begin with a_{j}")
            self._checked = j

    def substitution(self, n: int) -> Substitution:
        self._validate_through(n)
        sub = self._raw(n)[0]
        if sub is None:
            raise HorizonError(f"no substitution at level {n}")
        return sub

    def seed(self, n: int) -> int:
        self._validate_through(max(0, n - 1))
        return self._raw(n)[1]

    def alphabet(self, n: int) -> Alphabet:
        sub = self._raw(n)[0]
        return sub.target if sub is not None else self._raw(n - 1)[0].source

    def level(self, n: int) -> Tuple[Substitution, str]:
        sub = self.substitution(n)
        return sub, sub.target.name(self.seed(n))


def compose(cs: CongenialSequence, m: int, n: int) -> Substitution:
    """τ_{m,n} = τ_m ∘ τ_{m+1} ∘ ... ∘ τ_{n-1}."""
    if not 0 <= m < n:
        raise ValidationError("need 0 <= m < n")
    result = cs.substitution(n - 1)
    for j in range(n - 2, m - 1, -1):
        result = cs.substitution(j).compose(result)
    return result


def level_word(cs: CongenialSequence, m: int, n: int, limit: Optional[int] = None) -> np.ndarray:
    """Index array of τ_{m,n}(a_n), optionally truncated."""
    w = np.array([cs.seed(n)])
    for j in range(n - 1, m - 1, -1):
        w = cs.substitution(j).apply_array(w, limit=limit)
    return w


def level_prefix(cs: CongenialSequence, m: int, length: int) -> FiniteWord:
    """Length-``length`` prefix of the level-m limit word x^(m)."""
    if length < 0:
        raise ValidationError("negative length")
    alpha = cs.alphabet(m)
    if length == 0:
        return FiniteWord.empty(alpha)
    if length == 1:
        return FiniteWord._wrap(alpha, np.array([cs.seed(m)]))
    step, n = 1, m + 1
    last_len, stalls = 0, 0
    while True:
        top = n if cs.depth is None else min(n, cs.depth)
        w = level_word(cs, m, top, limit=length)
        if len(w) >= length:
            return FiniteWord._wrap(alpha, w[:length])
        if cs.depth is not None and top == cs.depth:
            raise HorizonError(f"insufficient depth: |τ_{{{m},{top}}}(a_{top})| = {len(w)} < {length}")
        if len(w) <= last_len:
            stalls += step
        else:
            stalls = 0
        # a periodic sequence that fails to grow over several periods never will
        per = cs.period[1] if cs.period else None
        if (per is not None and stalls > 4 * per + 4) or n - m > cs.cap // 2:
            raise ValidationError("degenerate sequence: the limit word stays finite")
        last_len = len(w)
        n += step
        step = min(step * 2, 64)


class SAdicSource(WordSource):
    kind = "s-adic-limit"

    def __init__(self, cs: CongenialSequence, level: int = 0, description: Optional[dict] = None):
        super().__init__(cs.alphabet(level))
        self.cs = cs
        self.level = level
        self._description = description or cs.description

    def params(self) -> dict:
        return {"level": self.level, **self._description}

    def cache_key(self):
        # callback-defined sequences have no stable serial form
        return None if self._description.get("kind") == "callback" else super().cache_key()

    def _generate(self, n: int) -> np.ndarray:
        return level_prefix(self.cs, self.level, n).symbols.copy()


# ---------------------------------------------------------------- Sturmian

BINARY = Alphabet(["0", "1"])
THETA = (Substitution({"0": "0", "1": "01"}, source=BINARY),
         Substitution({"0": "10", "1": "1"}, source=BINARY))


def sturmian_sadic(cf: ContinuedFraction) -> CongenialSequence:
    """Levels θ_{n mod 2}^{a_{n+1}} with seeds n mod 2."""
    powers: Dict[Tuple[int, int], Substitution] = {}

    def fn(n):
        seed = str(n % 2)
        if cf.depth is not None and n == cf.depth:
            return None, seed
        a = cf.quotient(n + 1)
        key = (n % 2, a)
        if key not in powers:
            powers[key] = THETA[n % 2].power(a)
        return powers[key], seed
    d = cf.describe()
    desc = {"kind": "sturmian", **d} if "rule" not in d else {"kind": "callback"}
    return CongenialSequence(fn, depth=cf.depth, description=desc)


def sadic_slope(cf: ContinuedFraction) -> ContinuedFraction:
    """Slope of the characteristic word produced by :func:`sturmian_sadic`.

    The leading θ_0^{a_1} yields frequency of 1 equal to [0; a_1 + 1, a_2, ...].
    """
    return cf.with_first_quotient_incremented()


def sturmian_rotation(alpha: Union[Fraction, ContinuedFraction], rho: Fraction = Fraction(0),
                      variant: str = "left-closed", length: int = 0, depth: int = 40) -> FiniteWord:
    """Coding of the rotation by α on [−α, 1−α) (or (−α, 1−α]) in exact arithmetic.

    ``x_n = 0`` iff the n-th iterate lies in the interval where the map adds
    α, i.e. [−α, 1−2α) for the left-closed map and (−α, 1−2α] for the
    right-closed one.
    """
    if isinstance(alpha, ContinuedFraction):
        alpha = alpha.convergent(depth)
    alpha, rho = Fraction(alpha), Fraction(rho)
    if not 0 < alpha < 1:
        raise ValidationError("α must lie in (0, 1)")
    if variant not in ("left-closed", "right-closed"):
        raise ValidationError("variant must be 'left-closed' or 'right-closed'")
    lo, hi = -alpha, 1 - alpha
    if variant == "left-closed" and not lo <= rho < hi:
        raise ValidationError("ρ outside [−α, 1−α)")
    if variant == "right-closed" and not lo < rho <= hi:
        raise ValidationError("ρ outside (−α, 1−α]")
    D = math.lcm(alpha.denominator, rho.denominator)
    A = alpha.numerator * (D // alpha.denominator)
    z = rho.numerator * (D // rho.denominator) + A  # shifted into [0, D) or (0, D]
    out = np.empty(length, dtype=np.uint8)
    if variant == "left-closed":
        for i in range(length):
            out[i] = 0 if z < D - A else 1
            z += A
            if z >= D:
                z -= D
    else:
        for i in range(length):
            out[i] = 0 if z <= D - A else 1
            z += A
            if z > D:
                z -= D
    return FiniteWord._wrap(BINARY, out)


class RotationSource(WordSource):
    kind = "rotation-coding"

    def __init__(self, alpha: Fraction, rho: Fraction = Fraction(0), variant: str = "left-closed"):
        super().__init__(BINARY)
        self.alpha, self.rho, self.variant = Fraction(alpha), Fraction(rho), variant
        sturmian_rotation(self.alpha, self.rho, variant, 0)

    def params(self) -> dict:
        return {"alpha": str(self.alpha), "rho": str(self.rho), "variant": self.variant}

    def _generate(self, n: int) -> np.ndarray:
        return sturmian_rotation(self.alpha, self.rho, self.variant, n).symbols.copy()


# ----------------------------------------------------------- Arnoux-Rauzy

class DirectiveSequence:
    """Directive letters a_0, a_1, ... over an alphabet."""

    def __init__(self, alphabet: Alphabet, preperiod: Sequence[str] = (), period: Sequence[str] = (),
                 rule: Optional[Callable[[int], str]] = None, cap: int = 1_000_000):
        for s in list(preperiod) + list(period):
            alphabet.index(s)
        self.alphabet = alphabet
        self._stream = Stream(tuple(preperiod), tuple(period), rule, cap)

    @classmethod
    def parse(cls, text: str) -> "DirectiveSequence":
        """``letters: a b c`` header, then the stream with ``( ... )`` marking the period."""
        letters = None
        body = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.lower().startswith("letters:"):
                letters = Alphabet(line.split(":", 1)[1].split())
            else:
                body.append(line)
        if letters is None:
            raise ValidationError("directive file lacks a 'letters:' header")
        joined = " ".join(body)
        if letters.compact:
            # allow unseparated letters such as "ab(cab)"
            joined = " ".join(c if c not in "()" else f" {c} " for c in joined.replace(" ", ""))
        pre, per = _parse_stream_tokens(joined)
        return cls(letters, pre, per)

    @property
    def length(self) -> Optional[int]:
        return self._stream.length

    @property
    def period(self) -> Tuple[str, ...]:
        return self._stream.period

    def letter(self, n: int) -> str:
        return self._stream[n]

    def window(self, n: int) -> List[str]:
        return self._stream.window(n)

    def describe(self) -> dict:
        return {"letters": list(self.alphabet.symbols), **self._stream.describe()}


def ar_substitution(alphabet: Alphabet, letter: str) -> Substitution:
    """σ_a: a -> a, b -> b a for b != a."""
    return Substitution({b: [b] if b == letter else [b, letter] for b in alphabet}, source=alphabet)


def ar_congenial(ds: DirectiveSequence, seed: str, check_window: int = 1000) -> CongenialSequence:
    ds.alphabet.index(seed)
    if ds.length is None and ds.period:
        seen = set(ds.period)
    else:
        seen = set(ds.window(check_window))
    if seen != set(ds.alphabet.symbols):
        missing = sorted(set(ds.alphabet.symbols) - seen)
        warnings.warn(f"AR condition unverified: letters {missing} missing from the directive", stacklevel=2)
    subs = {a: ar_substitution(ds.alphabet, a) for a in ds.alphabet}

    def fn(n):
        if ds.length is not None and n == ds.length:
            return None, seed
        return subs[ds.letter(n)], seed
    desc = {"kind": "arnoux-rauzy", "seed": seed, **ds.describe()}
    if "rule" in desc:
        desc = {"kind": "callback"}
    period = None
    if ds.length is None and ds._stream.eventually_periodic:
        period = (len(ds._stream.preperiod), len(ds._stream.period))
    return CongenialSequence(fn, depth=ds.length, description=desc, period=period)


@dataclass(frozen=True)
class PartialQuotients:
    run_letters: Tuple[str, ...]
    weak: Tuple[int, ...]
    K: Tuple[int, ...]

    @property
    def strong(self) -> Tuple[int, ...]:
        return tuple(b - a for a, b in zip(self.K, self.K[1:]))

    def directive(self) -> List[str]:
        """Directive prefix rebuilt from the run decomposition."""
        out: List[str] = []
        for b, k in zip(self.run_letters, self.weak):
            out.extend([b] * k)
        return out


def partial_quotients(ds: Union[DirectiveSequence, Sequence[str]], window: int = 10_000) -> PartialQuotients:
    """Weak quotients (run lengths) and full-alphabet window indices K_n.

    For an infinite directive, the last run of the window is dropped since
    it may continue beyond the window.
    """
    if isinstance(ds, DirectiveSequence):
        letters = ds.window(window)
        full = set(ds.alphabet.symbols)
        infinite = ds.length is None
    else:
        letters = list(ds)
        full = set(letters)
        infinite = False
    runs: List[Tuple[str, int]] = []
    for a in letters:
        if runs and runs[-1][0] == a:
            runs[-1] = (a, runs[-1][1] + 1)
        else:
            runs.append((a, 1))
    if infinite and runs:
        runs = runs[:-1]
    K = [0]
    while True:
        start = K[-1]
        seen = set()
        j = start
        while j < len(letters):
            seen.add(letters[j])
            if seen == full:
                break
            j += 1
        if j >= len(letters) or seen != full or j == start:
            break
        K.append(j)
    return PartialQuotients(tuple(r[0] for r in runs), tuple(r[1] for r in runs), tuple(K))


# ------------------------------------------------------------- positivity

def positivity_check(cs: CongenialSequence, k: int, horizon: int) -> List[bool]:
    """For n = 0..horizon: is every letter of A_n in every image of τ_{n,n+k}?"""
    if k < 1:
        raise ValidationError("k must be positive")
    mats = {}

    def mat(j):
        if j not in mats:
            mats[j] = cs.substitution(j).incidence_matrix() > 0
        return mats[j]
    out = []
    for n in range(horizon + 1):
        p = mat(n)
        for j in range(n + 1, n + k):
            p = (p.astype(np.int64) @ mat(j).astype(np.int64)) > 0
        out.append(bool(p.all()))
    return out


# ------------------------------------------------------------ decisiveness

@dataclass(frozen=True)
class DecisivenessCertificate:
    """Forced map r: letter -> length-k word prefixing τ(b) for every 2-factor ab."""

    k: int
    tau: Substitution
    r: Mapping[str, Optional[FiniteWord]]
    reference: Tuple[FiniteWord, ...]

    def q_values(self, u) -> Dict[str, int]:
        return q_values(self, self.tau, u)


def _as_pairs(tau: Substitution, factors: Iterable) -> List[FiniteWord]:
    out = []
    for f in factors:
        w = as_word(f, tau.source) if isinstance(f, str) else f
        if len(w) != 2 or w.alphabet != tau.source:
            raise ValidationError(f"reference factor {f!r} is not a 2-letter word over the source alphabet")
        out.append(w)
    return out


def decisiveness_certificate(tau: Substitution, ref_factors2: Iterable, k: int) -> Optional[DecisivenessCertificate]:
    if k <= 0:
        raise ValidationError("decisiveness order k must be positive")
    pairs = _as_pairs(tau, ref_factors2)
    succ: Dict[int, set] = {}
    for p in pairs:
        a, b = (int(x) for x in p.symbols)
        succ.setdefault(a, set()).add(b)
    r: Dict[str, Optional[FiniteWord]] = {}
    for a in range(len(tau.source)):
        name = tau.source.name(a)
        if a not in succ:
            r[name] = None
            continue
        prefixes = set()
        for b in succ[a]:
            img = tau.image_array(b)
            if len(img) < k:
                return None
            prefixes.add(img[:k].tobytes())
        if len(prefixes) != 1:
            return None
        b0 = next(iter(succ[a]))
        r[name] = FiniteWord._wrap(tau.target, tau.image_array(b0)[:k].copy())
    return DecisivenessCertificate(k, tau, r, tuple(pairs))


def q_values(cert: DecisivenessCertificate, tau: Substitution, u) -> Dict[str, int]:
    """q(u, a) = occurrences of u in τ(a) followed by the first |u|-1 letters of r(a)."""
    u = as_word(u, tau.target) if isinstance(u, str) else u
    if len(u) == 0:
        raise ValidationError("empty pattern")
    if len(u) > cert.k + 1:
        raise ValidationError(f"pattern length {len(u)} exceeds k + 1 = {cert.k + 1}")
    out = {}
    for a in tau.source:
        w = tau.image(a)
        ra = cert.r.get(a)
        if ra is not None and len(u) > 1:
            w = w + ra[: len(u) - 1]
        out[a] = count_occurrences(w, u) if len(w) >= len(u) else 0
    return out


def seam_identity_values(cert: DecisivenessCertificate, tau: Substitution, source_x, w_position: int,
                         w_len: int, u, extension: Optional[int] = None) -> Tuple[int, int]:
    """(direct count, per-letter sum) for the block w = x[i, i + w_len).

    The direct count is the number of occurrences of u in τ(x) starting in
    [p − |τ(w)|, p + extension − |u| + 1), p = |τ(x[0, i + w_len))|; the
    default extension |u| − 1 counts exactly the starts inside τ(w).
    """
    u = as_word(u, tau.target) if isinstance(u, str) else u
    ext = len(u) - 1 if extension is None else int(extension)
    end = w_position + w_len
    try:
        x = materialize(source_x, end + max(ext, 0))
    except HorizonError as exc:
        raise HorizonError(f"insufficient materialized prefix: {exc}") from None
    w = x[w_position:end]
    p = int(tau._lens[x.symbols[:end].astype(np.intp)].sum())
    tw = int(tau._lens[w.symbols.astype(np.intp)].sum())
    tx = tau.apply_array(x.symbols, limit=p + ext)
    if len(tx) < p + ext:
        raise HorizonError("insufficient materialized prefix")
    seg = FiniteWord._wrap(tau.target, tx[p - tw:p + ext])
    lhs = count_occurrences(seg, u) if len(seg) >= len(u) else 0
    q = q_values(cert, tau, u)
    cnt = w.counts()
    rhs = sum(int(cnt[i]) * q[a] for i, a in enumerate(tau.source))
    return lhs, rhs


def seam_identity_check(cert, tau, source_x, w_position, w_len, u, extension=None) -> bool:
    lhs, rhs = seam_identity_values(cert, tau, source_x, w_position, w_len, u, extension)
    return lhs == rhs


def mu_from_level(cert: DecisivenessCertificate, tau: Substitution,
                  nu: Union[Mapping[str, object], Sequence], u):
    """Σ ν_a q(u,a) / Σ ν_a |τ(a)|; exact when ν is given as Fractions."""
    if not isinstance(nu, Mapping):
        nu = dict(zip(tau.source.symbols, nu))
    q = q_values(cert, tau, u)
    num = sum(nu.get(a, 0) * q[a] for a in tau.source)
    den = sum(nu.get(a, 0) * int(tau._lens[i]) for i, a in enumerate(tau.source))
    if den == 0:
        raise ValidationError("zero denominator: ν gives no weight to any letter")
    if isinstance(num, (int, Fraction)) and isinstance(den, (int, Fraction)):
        return Fraction(num) / Fraction(den)
    return float(num) / float(den)


def theoretical_balance_bound(L: float, B: float, K: float) -> float:
    """2 (L + 1) (B K^4 + 2 K^3 + 1)."""
    if L < 0 or B < 0 or K < 1:
        raise ValidationError("need L >= 0, B >= 0, K >= 1")
    return 2 * (L + 1) * (B * K ** 4 + 2 * K ** 3 + 1)


def structure_constant(cs: CongenialSequence, depth: int) -> Fraction:
    """max(|τ_n|, |A_n|, max_{a,b} |τ_{0,n}(a)| / |τ_{0,n}(b)|) over n < depth."""
    best = Fraction(1)
    vec = None
    for n in range(depth):
        sub = cs.substitution(n)
        best = max(best, sub.max_length, len(sub.target), len(sub.source))
        m = sub.incidence_matrix().astype(object)
        # lengths |τ_{0,n+1}(a)| = Σ_b |τ_n(a)|_b |τ_{0,n}(b)|
        base = np.ones(m.shape[0], dtype=object) if vec is None else vec
        vec = m.T.dot(base)
        lens = [int(x) for x in vec]
        best = max(best, Fraction(max(lens), min(lens)))
    return best
