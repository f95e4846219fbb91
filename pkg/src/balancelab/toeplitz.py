"""Toeplitz words from nested uniform substitutions.

A spec is a finite stack of levels τ_0, ..., τ_{D-1} with τ_n mapping
letters of A_{n+1} to words of constant length q_n over A_n. Level
alphabets may be too large to list (the exponential-complexity family), so
letters are plain integers and images are produced on demand.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import HorizonError, ValidationError
from .morphisms import Substitution, parse_substitution
from .scan import WindowIndex
from .words import Alphabet, FiniteWord, WordSource

ENUMERATION_CAP = 1_000_000


# ------------------------------------------------------------- combinatorics

def multinomial(d: int, k: int) -> int:
    """(dk)! / (k!)^d."""
    if d < 1 or k < 0:
        raise ValidationError("need d >= 1 and k >= 0")
    return math.factorial(d * k) // math.factorial(k) ** d


def stirling_log_estimate(d: int, k: int) -> float:
    """dk·log d + ½·log d − ((d−1)/2)·log(2πk), the leading terms of log multinomial(d, k)."""
    if d < 1 or k < 1:
        raise ValidationError("need d >= 1 and k >= 1")
    return d * k * math.log(d) + 0.5 * math.log(d) - (d - 1) / 2 * math.log(2 * math.pi * k)


def _count_arrangements(counts: Sequence[int]) -> int:
    total = math.factorial(sum(counts))
    for c in counts:
        total //= math.factorial(c)
    return total


def unrank_multiset(counts: Sequence[int], rank: int) -> List[int]:
    """The rank-th arrangement (lexicographic, 0-based) of the multiset with these letter counts."""
    counts = list(counts)
    remaining = sum(counts)
    total = _count_arrangements(counts)
    if not 0 <= rank < total:
        raise ValidationError(f"rank {rank} outside [0, {total})")
    out = []
    while remaining:
        for a, c in enumerate(counts):
            if c == 0:
                continue
            block = total * c // remaining
            if rank < block:
                out.append(a)
                counts[a] -= 1
                total = block
                remaining -= 1
                break
            rank -= block
    return out


def rank_multiset(word: Sequence[int], size: int) -> int:
    counts = [0] * size
    for a in word:
        counts[a] += 1
    remaining = len(word)
    total = _count_arrangements(counts)
    rank = 0
    for a in word:
        for b in range(a):
            if counts[b]:
                rank += total * counts[b] // remaining
        total = total * counts[a] // remaining
        counts[a] -= 1
        remaining -= 1
    return rank


# ------------------------------------------------------------------- levels

class ToeplitzLevel:
    """τ_n: letters 0..source_size−1 of A_{n+1} -> length-q words over A_n."""

    def __init__(self, source_size: int, target_size: int, q: int,
                 image: Callable[[int], Sequence[int]], seed: int = 0, label: str = ""):
        self.source_size = source_size
        self.target_size = target_size
        self.q = q
        self._image = image
        self.seed = seed  # a_n, the letter every image should begin with
        self.label = label
        self.identity = label == "identity"
        self._cache: Dict[int, np.ndarray] = {}

    @property
    def enumerable(self) -> bool:
        return self.source_size <= ENUMERATION_CAP

    def image(self, letter: int) -> np.ndarray:
        got = self._cache.get(letter)
        if got is None:
            if not 0 <= letter < self.source_size:
                raise ValidationError(f"letter {letter} outside the level alphabet")
            got = np.asarray(self._image(letter), dtype=np.int64)
            if len(self._cache) < 100_000:
                self._cache[letter] = got
        return got

    def apply(self, letters: np.ndarray, limit: Optional[int] = None) -> np.ndarray:
        if limit is not None:
            letters = letters[: -(-limit // self.q)] if self.q else letters[:0]
        uniq, inv = np.unique(letters, return_inverse=True)
        table = np.stack([self.image(int(a)) for a in uniq]) if len(uniq) else np.zeros((0, self.q), np.int64)
        out = table[inv].reshape(-1)
        return out if limit is None else out[:limit]

    @classmethod
    def from_substitution(cls, sub: Substitution, seed: str, label: str = "") -> "ToeplitzLevel":
        return cls(len(sub.source), len(sub.target), sub.max_length,
                   lambda a: sub.image_array(a), sub.target.index(seed), label)


@dataclass
class ToeplitzSpec:
    kind: str
    alphabet: Alphabet  # A_0
    levels: List[ToeplitzLevel]
    top_seed: int = 0
    params: dict = field(default_factory=dict)
    flags: List[str] = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def periods(self) -> List[int]:
        """p_0 = 1, p_{n+1} = p_n · q_n."""
        p = [1]
        for lv in self.levels:
            p.append(p[-1] * lv.q)
        return p

    @property
    def alphabet_sizes(self) -> List[int]:
        return [self.levels[0].target_size] + [lv.source_size for lv in self.levels]

    def seed(self, n: int) -> int:
        return self.levels[n].seed if n < self.depth else self.top_seed

    def composed_image(self, m: int, n: int, letter: int, limit: Optional[int] = None) -> np.ndarray:
        """τ_{m,n}(letter) for a letter of A_n."""
        w = np.array([letter], dtype=np.int64)
        for j in range(n - 1, m - 1, -1):
            w = self.levels[j].apply(w, limit=limit)
        return w

    def describe(self) -> dict:
        return {"kind": self.kind, "depth": self.depth, **self.params}


def _check_depth(depth: int) -> None:
    if depth < 1:
        raise ValidationError("depth must be at least 1")


def pd_spec(depth: int = 6) -> ToeplitzSpec:
    """Period doubling as a Toeplitz word: every level maps 0 -> 0100, 1 -> 0101."""
    _check_depth(depth)
    sub = Substitution({"0": "0100", "1": "0101"})
    levels = [ToeplitzLevel.from_substitution(sub, "0", f"pd{n}") for n in range(depth)]
    return ToeplitzSpec("pd", sub.source, levels, 0, {"depth": depth})


def explicit_spec(levels: Sequence[Tuple[Substitution, str]], top_seed: str) -> ToeplitzSpec:
    """Levels (τ_n, a_n) from the bottom up; ``top_seed`` is a letter of A_D."""
    if not levels:
        raise ValidationError("explicit spec needs at least one level")
    built = []
    for n, (sub, seed) in enumerate(levels):
        if n > 0 and sub.target != levels[n - 1][0].source:
            raise ValidationError(f"alphabet of level {n} does not match the source of level {n - 1}")
        built.append(ToeplitzLevel.from_substitution(sub, seed, f"level{n}"))
    top = levels[-1][0].source.index(top_seed)
    return ToeplitzSpec("explicit", levels[0][0].target, built, top, {})


def _exp_level(size: int, k: int, n: int) -> ToeplitzLevel:
    lead = list(range(size))
    counts = [k - 2] * size
    target = size
    source = _count_arrangements(counts)

    def image(rank: int) -> List[int]:
        return lead + unrank_multiset(counts, rank) + lead[::-1]
    return ToeplitzLevel(source, target, k * size, image, 0, f"exp{n}")


def exp_spec(l0: int, k: Sequence[int], depth: int, cap: int = ENUMERATION_CAP,
             allow_degenerate: bool = False) -> ToeplitzSpec:
    """Exponential-complexity family: τ_0 = identity, and for n ≥ 1 the letters of
    A_{n+1} index the words u_n w' v_n with u_n = 0 1 ... (ℓ_n−1), v_n its
    reversal, and w' any arrangement holding each letter k_n − 2 times.

    ``k`` lists k_1, k_2, ...; a spec of depth D uses k_1..k_{D−1}.
    """
    _check_depth(depth)
    if l0 < 1:
        raise ValidationError("l0 must be positive")
    ks = [int(x) for x in k]
    if len(ks) < depth - 1:
        raise ValidationError(f"depth {depth} needs {depth - 1} values of k, got {len(ks)}")
    flags = []
    for i, kn in enumerate(ks[:depth - 1], start=1):
        if kn < 2:
            raise ValidationError(f"k_{i} = {kn} < 2")
        if kn == 2:
            if not allow_degenerate:
                raise ValidationError(f"k_{i} = 2 leaves the middle block empty; pass allow_degenerate to accept")
            flags.append(f"degenerate: k_{i} = 2 gives a single word")
    alpha = Alphabet.of_size(l0)
    levels = [ToeplitzLevel(l0, l0, 1, lambda a: [a], 0, "identity")]
    size = l0
    for n in range(1, depth):
        lv = _exp_level(size, ks[n - 1], n)
        if not lv.enumerable or lv.source_size > cap:
            flags.append(f"counting-only at level {n}: |W_{n}| = {_digits(lv.source_size)}")
        levels.append(lv)
        size = lv.source_size
    return ToeplitzSpec("exp", alpha, levels, 0, {"l0": l0, "k": ks[:depth - 1], "cap": cap}, flags)


def _digits(x: int) -> str:
    s = str(x)
    return s if len(s) <= 24 else f"~10^{len(s) - 1}"


def level_members(spec: ToeplitzSpec, n: int, count: Optional[int] = None, seed: int = 0) -> List[np.ndarray]:
    """Members of W_n (images of level n), all of them if enumerable, else a deterministic sample."""
    if not 1 <= n < spec.depth:
        raise ValidationError(f"level {n} outside 1..{spec.depth - 1}")
    lv = spec.levels[n]
    cap = spec.params.get("cap", ENUMERATION_CAP)
    if lv.source_size <= cap and count is None:
        return [lv.image(r) for r in range(lv.source_size)]
    rng = random.Random(seed)
    count = 16 if count is None else count
    ranks = sorted({rng.randrange(lv.source_size) for _ in range(count)} | {0})
    return [lv.image(r) for r in ranks]


def middle_blocks(spec: ToeplitzSpec, n: int) -> List[str]:
    """Middle sections w' of the enumerated W_n members, as digit strings."""
    size = spec.levels[n].target_size
    return ["".join(str(int(a)) for a in m[size:-size]) for m in level_members(spec, n)]


# --------------------------------------------------------------- validation

@dataclass(frozen=True)
class SpecReport:
    levels: Tuple[dict, ...]
    injectivity: Tuple[dict, ...]
    failures: Tuple[str, ...]
    flags: Tuple[str, ...]

    @property
    def valid(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {"valid": self.valid, "levels": list(self.levels), "injectivity": list(self.injectivity),
                "failures": list(self.failures), "flags": list(self.flags)}


def validate_spec(spec: ToeplitzSpec, sample: int = 64, seed: int = 0,
                  composed_limit: int = 10 ** 7) -> SpecReport:
    """Per-level checks of equal image lengths, common first letter, every letter
    in every image, plus letter-injectivity of composed maps τ_{n,m}.

    Levels too large to enumerate are checked on a deterministic sample.
    """
    rows, fails, inj = [], [], []
    rng = random.Random(seed)
    for n, lv in enumerate(spec.levels):
        exhaustive = lv.source_size <= max(sample, 4096)
        if exhaustive:
            letters = list(range(lv.source_size))
        else:
            letters = sorted({0, lv.source_size - 1} | {rng.randrange(lv.source_size) for _ in range(sample)})
        imgs = {a: lv.image(a) for a in letters}
        lengths = {len(v) for v in imgs.values()}
        tp1 = len(lengths) == 1
        if lv.identity:
            # the bottom identity level only renames letters
            bad3 = bad4 = []
        else:
            bad3 = [a for a, v in imgs.items() if len(v) == 0 or int(v[0]) != lv.seed]
            bad4 = [a for a, v in imgs.items() if len(np.unique(v)) != lv.target_size]
        if not tp1:
            fails.append(f"level {n}: image lengths differ ({sorted(lengths)})")
        if bad3:
            fails.append(f"level {n}: images of letters {bad3[:5]} do not begin with a_{n} = {lv.seed}")
        if bad4:
            fails.append(f"level {n}: images of letters {bad4[:5]} miss some letter of A_{n}")
        seen: Dict[bytes, int] = {}
        clash = None
        for a, v in imgs.items():
            key = v.tobytes()
            if key in seen:
                clash = (seen[key], a)
                break
            seen[key] = a
        if clash:
            fails.append(f"level {n}: letters {clash[0]} and {clash[1]} have equal images")
        rows.append({"level": n, "q": lv.q, "letters": _digits(lv.source_size), "exhaustive": exhaustive,
                     "equal_lengths": tp1, "common_first_letter": not bad3, "all_letters": not bad4,
                     "injective": clash is None, "identity": lv.identity})
    # composed maps: uniform-length injective levels compose injectively; verify directly where small
    periods = spec.periods
    for m in range(1, spec.depth + 1):
        for n in range(0, m - 1):
            size = spec.levels[m - 1].source_size
            if size * (periods[m] // periods[n]) > composed_limit:
                continue
            images = {spec.composed_image(n, m, a).tobytes() for a in range(size)}
            ok = len(images) == size
            inj.append({"from": m, "to": n, "injective": ok})
            if not ok:
                fails.append(f"composed map τ_{{{n},{m}}} is not injective on letters")
    return SpecReport(tuple(rows), tuple(inj), tuple(fails), tuple(spec.flags))


# ------------------------------------------------------------------- words

def toeplitz_prefix(spec: ToeplitzSpec, length: int, level: int = 0) -> FiniteWord:
    """Prefix of the level-``level`` limit word τ_{level,D}(a_D), in letters of A_level."""
    if length < 0:
        raise ValidationError("negative length")
    p = spec.periods
    avail = p[spec.depth] // p[level]
    if length > avail:
        raise HorizonError(f"insufficient depth: depth {spec.depth} yields {avail} symbols, {length} requested")
    w = spec.composed_image(level, spec.depth, spec.top_seed, limit=length)[:length]
    if level == 0:
        return FiniteWord._wrap(spec.alphabet, w.astype(spec.alphabet.dtype))
    size = spec.alphabet_sizes[level]
    if size > 10 ** 6:
        raise ValidationError(f"level {level} alphabet too large to name")
    return FiniteWord._wrap(Alphabet.of_size(size), w.astype(Alphabet.of_size(size).dtype))


class ToeplitzSource(WordSource):
    kind = "toeplitz"

    def __init__(self, spec: ToeplitzSpec):
        super().__init__(spec.alphabet)
        self.spec = spec
        self.max_length = spec.periods[spec.depth]

    def params(self) -> dict:
        return self.spec.describe()

    def _generate(self, n: int) -> np.ndarray:
        return toeplitz_prefix(self.spec, n).symbols.copy()


def pd_equivalence_check(length: int) -> bool:
    from .morphisms import fixed_point_prefix
    depth = max(1, math.ceil(math.log(max(length, 1), 4)))
    ours = toeplitz_prefix(pd_spec(depth), length)
    ref = fixed_point_prefix(Substitution({"0": "01", "1": "00"}), "0", length)
    return ours.text == ref.text


@dataclass(frozen=True)
class GrowthRow:
    level: int
    period: int
    factors: int
    letters: int  # ℓ_n, the lower bound
    log_ratio: float

    @property
    def holds(self) -> bool:
        return self.factors >= self.letters

    def to_dict(self) -> dict:
        return {"level": self.level, "p_n": self.period, "p_x(p_n)": self.factors,
                "l_n": _digits(self.letters), "log_ratio": self.log_ratio, "holds": self.holds}


def complexity_growth_check(spec: ToeplitzSpec, depth: Optional[int] = None,
                            horizon: Optional[int] = None) -> List[GrowthRow]:
    """p_x(p_n) against ℓ_n for n = 1..depth−1, counting factors in prefix(horizon).

    All ℓ_n letters of A_n already occur in the first level-n image, so a
    horizon of p_depth suffices.
    """
    depth = spec.depth if depth is None else depth
    if not 1 <= depth <= spec.depth:
        raise ValidationError(f"depth must lie in 1..{spec.depth}")
    p = spec.periods
    horizon = p[depth] if horizon is None else horizon
    if horizon < p[depth]:
        raise ValidationError(f"horizon {horizon} < p_{depth} = {p[depth]}")
    w = toeplitz_prefix(spec, min(horizon, p[spec.depth]))
    idx = WindowIndex(w)
    rows = []
    sizes = spec.alphabet_sizes
    for n in range(1, depth):
        k = idx.distinct(p[n])
        rows.append(GrowthRow(n, p[n], k, sizes[n], math.log(k) / p[n]))
    return rows


# ------------------------------------------------------------------- files

def spec_from_dict(d: dict) -> ToeplitzSpec:
    kind = d.get("kind")
    if kind == "pd":
        return pd_spec(int(d.get("depth", 6)))
    if kind == "exp":
        try:
            return exp_spec(int(d["l0"]), d["k"], int(d.get("depth", len(d["k"]) + 1)),
                            int(d.get("cap", ENUMERATION_CAP)), bool(d.get("allow_degenerate", False)))
        except KeyError as exc:
            raise ValidationError(f"exp spec lacks field {exc}") from None
    if kind == "explicit":
        levels = []
        for lv in d.get("levels", []):
            if not isinstance(lv, dict) or "rules" not in lv:
                raise ValidationError("each explicit level needs a 'rules' object")
            sub, seed = parse_substitution(json.dumps({"rules": lv["rules"], "seed": lv.get("seed")}))
            levels.append((sub, seed))
        if not levels:
            raise ValidationError("explicit spec lacks levels")
        # each level maps into the alphabet of the one below it
        subs = [levels[0]]
        for sub, seed in levels[1:]:
            below = subs[-1][0].source
            try:
                sub = Substitution({a: list(sub.image(a)) for a in sub.source}, source=sub.source, target=below)
            except ValidationError as exc:
                raise ValidationError(f"explicit level images leave the alphabet below: {exc}") from None
            subs.append((sub, seed))
        # a missing seed defaults to the first letter of the level's target
        subs = [(sub, seed if seed is not None else sub.target.name(0)) for sub, seed in subs]
        return explicit_spec(subs, d.get("top_seed", subs[-1][0].source.name(0)))
    raise ValidationError(f"unknown Toeplitz spec kind {kind!r}; expected pd, exp or explicit")


def parse_spec(text: str) -> ToeplitzSpec:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed Toeplitz spec: {exc}") from None
    if not isinstance(d, dict):
        raise ValidationError("Toeplitz spec must be a JSON object")
    return spec_from_dict(d)
