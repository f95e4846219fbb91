"""Substitutions, higher block codes and related constructions."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import HorizonError, ValidationError
from .words import Alphabet, FiniteWord, WordLike, WordSource


def _image_names(value) -> List[str]:
    if isinstance(value, FiniteWord):
        return list(value)
    if isinstance(value, (list, tuple)):
        return [str(s) for s in value]
    text = str(value).strip()
    if text in ("", ".", "ε"):
        return []
    if any(c.isspace() for c in text):
        return [s for s in text.split() if s != "."]
    return list(text)


class Substitution:
    """Letter-to-word map from a source alphabet into a target alphabet.

    ``images`` maps every source symbol name to its image, given as a
    :class:`FiniteWord`, a list of names, or a string (characters, or
    whitespace-separated names; ``"."`` and ``""`` denote the empty word).
    Without an explicit target, the target is the source alphabet when all
    image symbols belong to it, otherwise the sorted set of image symbols.
    """

    def __init__(self, images: Mapping[str, object], source: Optional[Alphabet] = None,
                 target: Optional[Alphabet] = None):
        if source is None:
            source = Alphabet(list(images.keys()))
        raw = {}
        for a in source:
            if a not in images:
                raise ValidationError(f"letter {a!r} has no image")
            raw[a] = _image_names(images[a])
        extra = set(images) - set(source.symbols)
        if extra:
            raise ValidationError(f"images given for letters outside the source alphabet: {sorted(extra)}")
        if target is None:
            used = {s for img in raw.values() for s in img}
            target = source if used <= set(source.symbols) else Alphabet(sorted(used))
        self.source = source
        self.target = target
        imgs = []
        for a in source:
            imgs.append(np.array([target.index(s) for s in raw[a]], dtype=target.dtype))
        self._setup(imgs)

    def _setup(self, imgs: List[np.ndarray]) -> None:
        self._images = tuple(imgs)
        for arr in self._images:
            arr.setflags(write=False)
        self._lens = np.array([len(x) for x in imgs], dtype=np.int64)
        self._offsets = np.concatenate([[0], np.cumsum(self._lens)[:-1]]).astype(np.int64)
        self._flat = (np.concatenate(imgs) if imgs else np.zeros(0)).astype(self.target.dtype)

    @classmethod
    def from_arrays(cls, source: Alphabet, target: Alphabet, imgs: Sequence[np.ndarray]) -> "Substitution":
        if len(imgs) != len(source):
            raise ValidationError("one image per source letter required")
        s = object.__new__(cls)
        s.source, s.target = source, target
        s._setup([np.asarray(x, dtype=target.dtype).copy() for x in imgs])
        return s

    # -- basic queries
    def image(self, letter) -> FiniteWord:
        i = self.source.index(letter) if isinstance(letter, str) else int(letter)
        return FiniteWord._wrap(self.target, self._images[i].copy())

    def image_array(self, i: int) -> np.ndarray:
        return self._images[i]

    @property
    def lengths(self) -> np.ndarray:
        return self._lens.copy()

    @property
    def max_length(self) -> int:
        return int(self._lens.max())

    @property
    def min_length(self) -> int:
        return int(self._lens.min())

    @property
    def is_erasing(self) -> bool:
        return bool((self._lens == 0).any())

    @property
    def erasing_letters(self) -> Tuple[str, ...]:
        return tuple(self.source.symbols[i] for i in np.flatnonzero(self._lens == 0))

    @property
    def is_endomorphism(self) -> bool:
        return self.source == self.target

    @property
    def is_left_proper(self) -> bool:
        if self.is_erasing:
            return False
        firsts = {int(x[0]) for x in self._images}
        return len(firsts) == 1

    @property
    def is_uniform(self) -> bool:
        return len(set(self._lens.tolist())) == 1

    def rules(self) -> Dict[str, str]:
        sep = "" if self.target.compact else " "
        return {a: sep.join(self.image(a)) for a in self.source}

    def __eq__(self, other) -> bool:
        return (isinstance(other, Substitution) and self.source == other.source
                and self.target == other.target
                and all(np.array_equal(x, y) for x, y in zip(self._images, other._images)))

    def __hash__(self) -> int:
        return hash((self.source, self.target, tuple(x.tobytes() for x in self._images)))

    def __repr__(self) -> str:
        body = ", ".join(f"{a}->{img or '.'}" for a, img in self.rules().items())
        return f"Substitution({body})"

    # -- application
    def apply(self, w: WordLike) -> FiniteWord:
        """Concatenate the images of the letters of ``w``."""
        if isinstance(w, str):
            w = FiniteWord.parse(w, self.source)
        if w.alphabet != self.source:
            raise ValidationError("alphabet mismatch: word is not over the source alphabet")
        return FiniteWord._wrap(self.target, self.apply_array(w.symbols))

    __call__ = apply

    def apply_array(self, idx: np.ndarray, limit: Optional[int] = None) -> np.ndarray:
        """Image of an index array; with ``limit`` only that many output symbols."""
        idx = np.asarray(idx, dtype=np.intp)
        if limit is not None and not self.is_erasing:
            idx = idx[:limit]
        lens = self._lens[idx]
        if limit is not None:
            cs = np.cumsum(lens)
            cut = int(np.searchsorted(cs, limit)) + 1
            idx, lens = idx[:cut], lens[:cut]
        total = int(lens.sum())
        if total == 0:
            return np.zeros(0, dtype=self.target.dtype)
        out_start = np.cumsum(lens) - lens
        src = np.repeat(self._offsets[idx] - out_start, lens) + np.arange(total)
        out = self._flat[src]
        if limit is not None:
            out = out[:limit]
        return out

    def compose(self, inner: "Substitution") -> "Substitution":
        """``self ∘ inner``: apply ``inner`` first."""
        if inner.target != self.source:
            raise ValidationError("cannot compose: alphabets do not chain")
        imgs = [self.apply_array(inner.image_array(i)) for i in range(len(inner.source))]
        return Substitution.from_arrays(inner.source, self.target, imgs)

    def power(self, n: int) -> "Substitution":
        if not self.is_endomorphism:
            raise ValidationError("powers need an endomorphism")
        if n < 0:
            raise ValidationError("negative power")
        result = Substitution.from_arrays(self.source, self.source,
                                          [np.array([i]) for i in range(len(self.source))])
        base = self
        while n:
            if n & 1:
                result = base.compose(result)
            n >>= 1
            if n:
                base = base.compose(base)
        return result

    def incidence_matrix(self) -> np.ndarray:
        """``M[b, a] = |τ(a)|_b`` as an int64 array."""
        d, e = len(self.source), len(self.target)
        m = np.zeros((e, d), dtype=np.int64)
        for a, img in enumerate(self._images):
            m[:, a] = np.bincount(img.astype(np.int64), minlength=e)
        return m

    def iterate_lengths(self, n_max: int) -> List[List[int]]:
        """Exact ``|τ^n(a)|`` for n = 0..n_max as Python integers."""
        if not self.is_endomorphism:
            raise ValidationError("iterated lengths need an endomorphism")
        mt = self.incidence_matrix().T.astype(object)
        cur = np.ones(len(self.source), dtype=object)
        out = [cur.tolist()]
        for _ in range(n_max):
            cur = mt.dot(cur)
            out.append([int(x) for x in cur])
        return out


def sub_from_rules(rules: Mapping[str, object], **kw) -> Substitution:
    return Substitution(rules, **kw)


def identity(alphabet: Alphabet) -> Substitution:
    return Substitution.from_arrays(alphabet, alphabet, [np.array([i]) for i in range(len(alphabet))])


def coding(mapping: Mapping[str, str], source: Optional[Alphabet] = None,
           target: Optional[Alphabet] = None) -> Substitution:
    """Letter-to-letter substitution."""
    return Substitution({a: [b] for a, b in mapping.items()}, source=source, target=target)


# -------------------------------------------------------------- fixed points

def _reachable(sub: Substitution, start: Iterable[int]) -> set:
    seen = set(start)
    todo = list(seen)
    while todo:
        a = todo.pop()
        for b in set(sub.image_array(a).tolist()):
            if b not in seen:
                seen.add(b)
                todo.append(b)
    return seen


def fixed_point_prefix(sub: Substitution, seed, length: int) -> FiniteWord:
    """Length-``length`` prefix of the fixed point of ``sub`` starting with ``seed``."""
    if not sub.is_endomorphism:
        raise ValidationError("fixed points need an endomorphism")
    s = sub.source.index(seed) if isinstance(seed, str) else int(seed)
    img = sub.image_array(s)
    if len(img) == 0 or int(img[0]) != s:
        raise ValidationError("not prolongable")
    if any(sub._lens[b] == 0 for b in _reachable(sub, [s])):
        raise ValidationError("erasing letter reachable from the seed")
    w = np.array([s], dtype=sub.target.dtype)
    if length <= 0:
        return FiniteWord.empty(sub.target)
    while len(w) < length:
        nxt = sub.apply_array(w, limit=length)
        if len(nxt) == len(w):
            raise ValidationError("fixed point finite")
        w = nxt
    return FiniteWord._wrap(sub.target, w[:length].copy())


class FixedPointSource(WordSource):
    kind = "substitution-fixed-point"

    def __init__(self, sub: Substitution, seed, name: Optional[str] = None):
        super().__init__(sub.source)
        self.sub = sub
        self.seed = seed if isinstance(seed, str) else sub.source.name(int(seed))
        self.name = name
        fixed_point_prefix(sub, self.seed, 1)

    def params(self) -> dict:
        p = {"rules": self.sub.rules(), "seed": self.seed}
        if self.name:
            p["name"] = self.name
        return p

    def _generate(self, n: int) -> np.ndarray:
        return fixed_point_prefix(self.sub, self.seed, n).symbols.copy()


# ---------------------------------------------------------------- incidence

@dataclass(frozen=True)
class QuasiUniformity:
    """Scan of max/min image-length ratios of τ^n, n = 1..horizon."""

    horizon: int
    ratios: Tuple[Fraction, ...]
    cycle_certified: bool
    bounded_trend: bool

    @property
    def sup_ratio(self) -> Fraction:
        return max(self.ratios)

    @property
    def witness(self) -> Optional[Tuple[Fraction, int]]:
        """(constant C, horizon) when the scan supports quasi-uniformity."""
        if self.cycle_certified or self.bounded_trend:
            return self.sup_ratio, self.horizon
        return None


@dataclass(frozen=True)
class IncidenceData:
    matrix: np.ndarray
    bounded: Tuple[str, ...]
    growing: Tuple[str, ...]
    primitive: bool
    quasi_primitive: bool
    quasi_uniform: QuasiUniformity

    def to_dict(self) -> dict:
        w = self.quasi_uniform.witness
        return {
            "matrix": self.matrix.tolist(),
            "bounded": list(self.bounded),
            "growing": list(self.growing),
            "primitive": self.primitive,
            "quasi_primitive": self.quasi_primitive,
            "quasi_uniform": None if w is None else {"C": str(w[0]), "horizon": w[1],
                                                     "cycle_certified": self.quasi_uniform.cycle_certified},
        }


def _bool_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a.astype(np.int64) @ b.astype(np.int64)) > 0


def classify_letters(sub: Substitution) -> Tuple[List[int], List[int]]:
    """(bounded, growing) letter indices via the occurrence digraph.

    A letter is bounded iff every letter reachable from it (itself included)
    that lies on a cycle has an image of length one.
    """
    if sub.is_erasing:
        raise ValidationError("letter classification refused for an erasing substitution")
    d = len(sub.source)
    adj = sub.incidence_matrix().T > 0  # adj[a, b]: b occurs in τ(a)
    reach = adj.copy()
    for _ in range(d):
        nxt = reach | _bool_mul(reach, adj)
        if np.array_equal(nxt, reach):
            break
        reach = nxt
    on_cycle = np.diag(reach)
    bad = on_cycle & (sub._lens != 1)
    bounded, growing = [], []
    for a in range(d):
        closure = reach[a].copy()
        closure[a] = True
        (growing if np.any(closure & bad) else bounded).append(a)
    return bounded, growing


def _quasi_uniformity(sub: Substitution, horizon: int) -> QuasiUniformity:
    lens = sub.iterate_lengths(horizon)
    ratios = []
    seen = {}
    certified = False
    for n in range(1, horizon + 1):
        row = lens[n]
        lo = min(row)
        ratios.append(Fraction(max(row), lo))
        key = tuple(Fraction(x, lo) for x in row)
        if key in seen:
            certified = True
            break
        seen[key] = n
    half = max(1, len(ratios) // 2)
    bounded = certified
    if not bounded and len(ratios) >= 4:
        last, mid = ratios[-1], ratios[half - 1]
        # not increasing over the second half, or converged to ~1e-9
        bounded = max(ratios[half:]) <= max(ratios[:half]) or abs(last - mid) * 10**9 <= last
    return QuasiUniformity(horizon, tuple(ratios), certified, bool(bounded))


def _eventually_positive_block(mat: np.ndarray, rows: Sequence[int], cols: Sequence[int]) -> bool:
    """Whether some power n >= 1 of a boolean matrix is positive on rows × cols."""
    if not rows or not cols:
        return False
    cur = mat.copy()
    seen = set()
    while True:
        if cur[np.ix_(rows, cols)].all():
            return True
        key = cur.tobytes()
        if key in seen:
            return False
        seen.add(key)
        cur = _bool_mul(cur, mat)


def incidence(sub: Substitution, horizon: int = 64) -> IncidenceData:
    if not sub.is_endomorphism:
        raise ValidationError("incidence data needs an endomorphism")
    bounded, growing = classify_letters(sub)
    m = sub.incidence_matrix()
    d = len(sub.source)
    pos = m > 0
    power = pos.copy()
    for _ in range((d - 1) ** 2):
        power = _bool_mul(power, pos)
    primitive = bool(power.all())
    quasi = _eventually_positive_block(pos, growing, growing)
    names = sub.source.symbols
    return IncidenceData(
        matrix=m,
        bounded=tuple(names[a] for a in bounded),
        growing=tuple(names[a] for a in growing),
        primitive=primitive,
        quasi_primitive=bool(quasi or primitive),
        quasi_uniform=_quasi_uniformity(sub, horizon),
    )


# --------------------------------------------------------------- block codes

class BlockCode:
    """Sliding block code: every length-``k`` window is mapped to one letter."""

    def __init__(self, k: int, mapping: Mapping[Tuple[int, ...], int], source: Alphabet, target: Alphabet):
        if k < 1:
            raise ValidationError("block length must be positive")
        self.k = int(k)
        self.source = source
        self.target = target
        self.mapping = {tuple(int(x) for x in key): int(v) for key, v in mapping.items()}
        for key, v in self.mapping.items():
            if len(key) != self.k or not 0 <= v < len(target):
                raise ValidationError(f"bad block rule {key} -> {v}")

    @classmethod
    def from_rules(cls, rules: Mapping[str, str], source: Alphabet, target: Optional[Alphabet] = None) -> "BlockCode":
        """Rules ``{"01": "0", ...}`` over names (characters or space separated)."""
        parsed = {}
        for key, value in rules.items():
            names = _image_names(key)
            parsed[tuple(source.index(s) for s in names)] = str(value).strip()
        ks = {len(k) for k in parsed}
        if len(ks) != 1:
            raise ValidationError("all block rules must have the same length")
        if target is None:
            target = Alphabet(sorted(set(parsed.values())))
        return cls(ks.pop(), {k: target.index(v) for k, v in parsed.items()}, source, target)

    @classmethod
    def from_function(cls, k: int, source: Alphabet, target: Alphabet, fn: Callable[..., str]) -> "BlockCode":
        """Total code given by ``fn(*names) -> name`` on all of ``source^k``."""
        import itertools
        mapping = {}
        for key in itertools.product(range(len(source)), repeat=k):
            mapping[key] = target.index(fn(*(source.name(i) for i in key)))
        return cls(k, mapping, source, target)

    def apply_array(self, a: np.ndarray) -> np.ndarray:
        k = self.k
        m = len(a) - k + 1
        if m <= 0:
            return np.zeros(0, dtype=self.target.dtype)
        d = len(self.source)
        if d ** k < 2 ** 62:
            codes = np.zeros(m, dtype=np.int64)
            for j in range(k):
                codes = codes * d + a[j:j + m].astype(np.int64)
            uniq, inv = np.unique(codes, return_inverse=True)
            vals = np.empty(len(uniq), dtype=np.int64)
            for t, c in enumerate(uniq.tolist()):
                key = []
                for _ in range(k):
                    key.append(c % d)
                    c //= d
                key = tuple(reversed(key))
                if key not in self.mapping:
                    raise ValidationError(f"block code undefined on factor {self._name(key)}")
                vals[t] = self.mapping[key]
            return vals[inv.reshape(-1)].astype(self.target.dtype)
        out = np.empty(m, dtype=self.target.dtype)
        for i in range(m):
            key = tuple(int(x) for x in a[i:i + k])
            if key not in self.mapping:
                raise ValidationError(f"block code undefined on factor {self._name(key)}")
            out[i] = self.mapping[key]
        return out

    def _name(self, key: Tuple[int, ...]) -> str:
        sep = "" if self.source.compact else " "
        return sep.join(self.source.name(i) for i in key)

    def apply(self, w: WordLike) -> FiniteWord:
        if isinstance(w, str):
            w = FiniteWord.parse(w, self.source)
        if w.alphabet != self.source:
            raise ValidationError("alphabet mismatch")
        return FiniteWord._wrap(self.target, self.apply_array(w.symbols))

    __call__ = apply

    def preimages(self, letter) -> List[Tuple[int, ...]]:
        v = self.target.index(letter) if isinstance(letter, str) else int(letter)
        return [k for k, x in self.mapping.items() if x == v]


def identity_code(alphabet: Alphabet) -> BlockCode:
    return BlockCode(1, {(i,): i for i in range(len(alphabet))}, alphabet, alphabet)


class BlockCodeSource(WordSource):
    kind = "block-code-image"

    def __init__(self, code: BlockCode, source: WordSource):
        if source.alphabet != code.source:
            raise ValidationError("block code and source alphabets differ")
        super().__init__(code.target)
        self.code = code
        self.source = source
        if source.max_length is not None:
            self.max_length = max(0, source.max_length - code.k + 1)

    def params(self) -> dict:
        rules = {" ".join(self.code.source.name(i) for i in key): self.code.target.name(v)
                 for key, v in sorted(self.code.mapping.items())}
        return {"k": self.code.k, "rules": rules, "source": self.source.describe()}

    def _generate(self, n: int) -> np.ndarray:
        return self.code.apply_array(self.source.prefix(n + self.code.k - 1).symbols)


def block_code_apply(code: BlockCode, source: WordSource) -> WordSource:
    return BlockCodeSource(code, source)


@dataclass(frozen=True)
class SlidingBlockPresentation:
    substitution: Substitution
    decode: BlockCode
    encode: BlockCode
    seed: str
    factors: Tuple[FiniteWord, ...]


def sliding_block_presentation(sub: Substitution, k: int = 2, seed=None,
                               scan_limit: int = 1 << 22) -> SlidingBlockPresentation:
    """k-block presentation of ``sub`` at the fixed point starting with ``seed``.

    The new letters are the length-k factors of the fixed point, numbered by
    first occurrence.  ``decode`` keeps the first letter of a block and
    maps the presentation's fixed point back onto the original one;
    ``encode`` is the k-block code taking the original fixed point to the new.
    """
    if k < 2:
        raise ValidationError("k must be at least 2")
    if sub.is_erasing:
        raise ValidationError("sliding block presentation needs a nonerasing substitution")
    if seed is None:
        raise ValidationError("seed invalid: a seed letter is required")
    try:
        x0 = fixed_point_prefix(sub, seed, k)
    except ValidationError as exc:
        raise ValidationError(f"seed invalid: {exc}") from None
    start = tuple(x0.symbols.tolist())
    blocks = {start}
    todo = deque([start])
    images_of = {}
    while todo:
        f = todo.popleft()
        img = sub.apply_array(np.array(f))
        first = int(sub._lens[f[0]])
        wins = [tuple(img[j:j + k].tolist()) for j in range(first)]
        images_of[f] = wins
        for b in wins:
            if b not in blocks:
                blocks.add(b)
                todo.append(b)
    # number blocks by first occurrence in the fixed point
    order: List[Tuple[int, ...]] = []
    length = max(64, 4 * len(blocks))
    while True:
        x = fixed_point_prefix(sub, seed, length).symbols
        seen = set()
        order = []
        for i in range(len(x) - k + 1):
            b = tuple(x[i:i + k].tolist())
            if b not in seen:
                seen.add(b)
                order.append(b)
                if len(order) == len(blocks):
                    break
        if len(order) == len(blocks):
            break
        if length >= scan_limit:
            raise HorizonError("not every block of the presentation was located in the fixed point")
        length *= 4
    if set(order) != blocks:
        raise ValidationError("presentation blocks disagree with the fixed point factors")
    number = {b: i for i, b in enumerate(order)}
    alphabet = Alphabet(str(i) for i in range(len(order)))
    imgs = [np.array([number[b] for b in images_of[f]]) for f in order]
    new_sub = Substitution.from_arrays(alphabet, alphabet, imgs)
    decode = BlockCode(1, {(number[b],): b[0] for b in order}, alphabet, sub.source)
    encode = BlockCode(k, {b: number[b] for b in order}, sub.source, alphabet)
    factors = tuple(FiniteWord._wrap(sub.source, np.array(b)) for b in order)
    return SlidingBlockPresentation(new_sub, decode, encode, alphabet.name(number[start]), factors)


# ------------------------------------------------- transient decomposition

@dataclass(frozen=True)
class TransientDecomposition:
    status: str  # "decomposed" or "already-recurrent"
    recurrent: Tuple[str, ...]
    stabilization_index: int
    u: FiniteWord
    v: FiniteWord
    sigma: Substitution
    projection: Substitution
    star: Optional[str]

    def reconstruct(self, length: int) -> FiniteWord:
        """Prefix of the projection of the fixed point of ``sigma``."""
        seed = self.star if self.star is not None else self.sigma.source.name(0)
        y = fixed_point_prefix(self.sigma, seed, length)
        return FiniteWord._wrap(self.projection.target,
                                self.projection.apply_array(y.symbols, limit=length))


def transient_decomposition(sub: Substitution, seed, horizon: int = 10_000) -> TransientDecomposition:
    """Split a fixed point into a transient prefix and a recurrent part.

    The recurrent letters are the largest set closed under ``sub`` among the
    letters seen in the second half of the prefix of length ``horizon``.
    """
    if sub.is_erasing:
        raise ValidationError("transient decomposition needs a nonerasing substitution")
    x = fixed_point_prefix(sub, seed, horizon)
    a = x.symbols
    cand = set(np.unique(a[horizon // 2:]).tolist())
    while True:
        keep = {c for c in cand if set(sub.image_array(c).tolist()) <= cand}
        if keep == cand:
            break
        cand = keep
    if not cand:
        raise ValidationError("no substitution-closed set of recurrent letters found")
    outside = np.flatnonzero(~np.isin(a, list(cand)))
    i = int(outside[-1]) + 1 if len(outside) else 0
    if i > horizon // 2:
        raise ValidationError(f"letters outside the closed set {sorted(cand)} occur up to position {i - 1}; "
                              "stabilization not observed within the horizon")
    names = sub.source.symbols
    rec_idx = [c for c in range(len(names)) if c in cand]
    u = x[:i]
    if i == 0:
        return TransientDecomposition("already-recurrent", tuple(names[c] for c in rec_idx), 0,
                                      u, FiniteWord.empty(sub.source), sub, identity(sub.source), None)
    tu = sub.apply(u)
    if not tu.startswith(u):
        raise ValidationError("image of the transient prefix does not extend it")
    v = tu[i:]
    if len(v) == 0:
        raise ValidationError("transient prefix is mapped onto itself; the fixed point is finite")
    if not set(v.symbols.tolist()) <= cand:
        raise ValidationError("extension word leaves the recurrent letters")
    rec_alpha = Alphabet([names[c] for c in rec_idx])
    star = rec_alpha.fresh_symbol()
    ext = rec_alpha.extended([star])
    relabel = {c: j for j, c in enumerate(rec_idx)}
    s_star = len(rec_idx)
    imgs = [np.array([relabel[b] for b in sub.image_array(c).tolist()]) for c in rec_idx]
    imgs.append(np.array([s_star] + [relabel[b] for b in v.symbols.tolist()]))
    sigma = Substitution.from_arrays(ext, ext, imgs)
    proj_imgs = [np.array([c]) for c in rec_idx] + [u.symbols.copy()]
    projection = Substitution.from_arrays(ext, sub.source, proj_imgs)
    # π∘σ = τ∘π on every letter
    for j in range(len(ext)):
        lhs = projection.apply_array(sigma.image_array(j))
        rhs = sub.apply_array(projection.image_array(j))
        if not np.array_equal(lhs, rhs):
            raise ValidationError(f"conjugacy check failed on letter {ext.name(j)}")
    return TransientDecomposition("decomposed", tuple(rec_alpha.symbols), i, u, v, sigma, projection, star)


# -------------------------------------------------------------- tameness

@dataclass(frozen=True)
class TameVerdict:
    verdict: str  # tame-certified | counter-growth | inconclusive
    horizon: int
    max_run_lengths: Tuple[int, ...]
    run_counts: Tuple[int, ...]


def _bounded_runs(a: np.ndarray, bounded: np.ndarray, truncated: bool) -> set:
    flags = bounded[a]
    runs = set()
    n = len(a)
    edges = np.flatnonzero(np.diff(np.r_[0, flags.astype(np.int8), 0]))
    for s, e in zip(edges[::2].tolist(), edges[1::2].tolist()):
        if truncated and e == n:
            continue
        runs.add(a[s:e].tobytes())
    return runs


def tame_scan(sub: Substitution, horizon: int = 16, cap: int = 200_000) -> TameVerdict:
    """Semi-decide whether the bounded-letter part of the language is finite.

    Maximal runs of bounded letters are collected from ``τ^n(a)`` for all
    letters and n <= horizon (images truncated at ``cap`` symbols).  Tameness
    is certified when the accumulated run set at ``horizon`` equals the
    one at ``horizon // 2``; strictly increasing maximal run length over the
    last three iterations is reported as counter-growth.
    """
    if horizon < 4:
        raise ValidationError("horizon must be at least 4")
    bounded, _ = classify_letters(sub)
    if not bounded:
        return TameVerdict("tame-certified", horizon, (0,) * horizon, (0,) * horizon)
    mask = np.zeros(len(sub.source), dtype=bool)
    mask[bounded] = True
    words = [np.array([a], dtype=sub.target.dtype) for a in range(len(sub.source))]
    trunc = [False] * len(words)
    acc: set = set()
    history = []
    max_len, counts = [], []
    for n in range(1, horizon + 1):
        for j, w in enumerate(words):
            full = int(sub._lens[w].sum())
            nxt = sub.apply_array(w, limit=cap)
            trunc[j] = trunc[j] or full > len(nxt)
            words[j] = nxt
            acc |= _bounded_runs(nxt, mask, trunc[j])
        history.append(frozenset(acc))
        max_len.append(max((len(r) // np.dtype(sub.target.dtype).itemsize for r in acc), default=0))
        counts.append(len(acc))
    if max_len[-1] > max_len[-2] > max_len[-3]:
        verdict = "counter-growth"
    elif history[-1] == history[horizon // 2 - 1]:
        verdict = "tame-certified"
    else:
        verdict = "inconclusive"
    return TameVerdict(verdict, horizon, tuple(max_len), tuple(counts))


# ----------------------------------------------------------- file formats

def parse_substitution(text: str) -> Tuple[Substitution, Optional[str]]:
    """Parse the rule-per-line format or its JSON equivalent.

    Returns the substitution and the declared seed (or ``None``).
    """
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            data = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed substitution JSON: {exc}") from None
        rules = data.get("rules")
        if not isinstance(rules, dict) or not rules:
            raise ValidationError("substitution JSON needs a nonempty 'rules' object")
        source = Alphabet(data["alphabet"]) if "alphabet" in data else None
        return Substitution(rules, source=source), data.get("seed")
    rules: Dict[str, List[str]] = {}
    seed = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.lower().startswith("seed:"):
            seed = line.split(":", 1)[1].strip()
            continue
        if "->" not in line:
            raise ValidationError(f"malformed substitution rule: {raw!r}")
        lhs, rhs = (p.strip() for p in line.split("->", 1))
        if not lhs or len(lhs.split()) != 1:
            raise ValidationError(f"malformed rule left side: {raw!r}")
        names = rhs.split()
        rules[lhs] = [] if names in ([], ["."]) else names
    if not rules:
        raise ValidationError("no substitution rules found")
    letters = set(rules)
    for a, names in rules.items():
        # a single unseparated token made of known letters is read character-wise
        if len(names) == 1 and names[0] not in letters and set(names[0]) <= letters:
            rules[a] = list(names[0])
    return Substitution(rules), seed


def format_substitution(sub: Substitution, seed: Optional[str] = None) -> str:
    lines = []
    if seed is not None:
        lines.append(f"seed: {seed}")
    for a in sub.source:
        img = list(sub.image(a))
        lines.append(f"{a} -> {' '.join(img) if img else '.'}")
    return "\n".join(lines) + "\n"
