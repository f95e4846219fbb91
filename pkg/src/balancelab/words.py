"""Alphabets, finite words and lazily materialized infinite words.

Symbols are interned to dense integer indices so that every scanning
routine works on plain numpy arrays; display names live in the
:class:`Alphabet`.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from abc import ABC, abstractmethod
from typing import Callable, Iterable, Iterator, Optional, Sequence, Union

import numpy as np

from .errors import HorizonError, ValidationError

CACHE_ENV = "BALANCELAB_CACHE_DIR"


class Alphabet:
    """Ordered set of distinct symbol names.

    Index ``i`` of a word refers to ``symbols[i]``.  Two alphabets are
    equal when their symbol tuples are equal.
    """

    __slots__ = ("symbols", "_index", "dtype")

    def __init__(self, symbols: Iterable[str]):
        syms = tuple(str(s) for s in symbols)
        if not syms:
            raise ValidationError("alphabet must be nonempty")
        if len(set(syms)) != len(syms):
            raise ValidationError(f"alphabet symbols must be distinct: {syms}")
        for s in syms:
            if not s or any(c.isspace() for c in s):
                raise ValidationError(f"invalid symbol name {s!r}")
        self.symbols = syms
        self._index = {s: i for i, s in enumerate(syms)}
        d = len(syms)
        if d <= 1 << 8:
            self.dtype = np.uint8
        elif d <= 1 << 16:
            self.dtype = np.uint16
        else:
            self.dtype = np.int64

    @classmethod
    def from_text(cls, text: str) -> "Alphabet":
        """Alphabet of the distinct non-space characters of ``text``, sorted."""
        chars = sorted(set(c for c in text if not c.isspace()))
        return cls(chars)

    @classmethod
    def of_size(cls, d: int) -> "Alphabet":
        return cls(str(i) for i in range(d))

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self) -> Iterator[str]:
        return iter(self.symbols)

    def __contains__(self, name) -> bool:
        return name in self._index

    def __eq__(self, other) -> bool:
        return isinstance(other, Alphabet) and self.symbols == other.symbols

    def __hash__(self) -> int:
        return hash(self.symbols)

    def __repr__(self) -> str:
        return f"Alphabet({' '.join(self.symbols)})"

    @property
    def compact(self) -> bool:
        """True when every symbol is a single character."""
        return all(len(s) == 1 for s in self.symbols)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise ValidationError(f"symbol {name!r} not in {self!r}") from None

    def name(self, i: int) -> str:
        return self.symbols[i]

    def extended(self, extra: Sequence[str]) -> "Alphabet":
        return Alphabet(self.symbols + tuple(extra))

    def fresh_symbol(self, preferred: Sequence[str] = ("*", "#", "$", "@", "%")) -> str:
        for s in preferred:
            if s not in self._index:
                return s
        i = 0
        while f"*{i}" in self._index:
            i += 1
        return f"*{i}"


WordLike = Union["FiniteWord", str, Sequence[str]]


class FiniteWord:
    """Immutable finite word over an :class:`Alphabet`."""

    __slots__ = ("alphabet", "_a", "_text")

    def __init__(self, alphabet: Alphabet, symbols=()):
        arr = np.asarray(symbols)
        if arr.ndim != 1:
            arr = arr.reshape(-1)
        if arr.size:
            if arr.dtype.kind not in "iu":
                raise ValidationError("word symbols must be integer indices")
            if int(arr.min()) < 0 or int(arr.max()) >= len(alphabet):
                raise ValidationError("symbol index outside alphabet")
        arr = np.array(arr, dtype=alphabet.dtype, copy=True)
        arr.setflags(write=False)
        self.alphabet = alphabet
        self._a = arr
        self._text = None

    @classmethod
    def _wrap(cls, alphabet: Alphabet, arr: np.ndarray) -> "FiniteWord":
        # trusted constructor: no bounds check, takes ownership of arr
        w = object.__new__(cls)
        if arr.dtype != alphabet.dtype:
            arr = arr.astype(alphabet.dtype)
        arr.setflags(write=False)
        w.alphabet = alphabet
        w._a = arr
        w._text = None
        return w

    @classmethod
    def parse(cls, text: WordLike, alphabet: Optional[Alphabet] = None) -> "FiniteWord":
        """Build a word from display text.

        With a compact alphabet each character is one symbol; otherwise
        symbols are whitespace separated.  A list of names is also accepted.
        """
        if isinstance(text, FiniteWord):
            if alphabet is not None and text.alphabet != alphabet:
                raise ValidationError("alphabet mismatch")
            return text
        if isinstance(text, str):
            if alphabet is None:
                alphabet = Alphabet.from_text(text)
            if alphabet.compact and not any(c.isspace() for c in text.strip()):
                names = list(text.strip())
            else:
                names = text.split()
        else:
            names = [str(s) for s in text]
            if alphabet is None:
                alphabet = Alphabet(sorted(set(names)))
        idx = np.fromiter((alphabet.index(s) for s in names), dtype=np.int64, count=len(names))
        return cls._wrap(alphabet, idx.astype(alphabet.dtype))

    @classmethod
    def empty(cls, alphabet: Alphabet) -> "FiniteWord":
        return cls._wrap(alphabet, np.zeros(0, dtype=alphabet.dtype))

    @property
    def symbols(self) -> np.ndarray:
        """Read-only index array."""
        return self._a

    @property
    def text(self) -> str:
        if self._text is None:
            names = self.alphabet.symbols
            sep = "" if self.alphabet.compact else " "
            self._text = sep.join(names[i] for i in self._a.tolist())
        return self._text

    def __str__(self) -> str:
        return self.text

    def __repr__(self) -> str:
        t = self.text
        if len(t) > 60:
            t = t[:57] + "..."
        return f"FiniteWord({t!r}, len={len(self)})"

    def __len__(self) -> int:
        return int(self._a.shape[0])

    def __getitem__(self, key):
        if isinstance(key, slice):
            return FiniteWord._wrap(self.alphabet, self._a[key].copy())
        return self.alphabet.symbols[int(self._a[key])]

    def __iter__(self) -> Iterator[str]:
        names = self.alphabet.symbols
        return (names[i] for i in self._a.tolist())

    def __eq__(self, other) -> bool:
        if isinstance(other, str):
            return self.text == other
        if not isinstance(other, FiniteWord):
            return NotImplemented
        return self.alphabet == other.alphabet and np.array_equal(self._a, other._a)

    def __hash__(self) -> int:
        return hash(self.text)

    def __lt__(self, other: "FiniteWord") -> bool:
        return self._a.tolist() < other._a.tolist()

    def __add__(self, other: "FiniteWord") -> "FiniteWord":
        if isinstance(other, str):
            other = FiniteWord.parse(other, self.alphabet)
        if other.alphabet != self.alphabet:
            raise ValidationError("alphabet mismatch in concatenation")
        return FiniteWord._wrap(self.alphabet, np.concatenate([self._a, other._a]))

    def __mul__(self, k: int) -> "FiniteWord":
        return FiniteWord._wrap(self.alphabet, np.tile(self._a, int(k)))

    def counts(self) -> np.ndarray:
        """Abelianization: occurrence count of each letter."""
        return np.bincount(self._a.astype(np.int64), minlength=len(self.alphabet))

    def startswith(self, other: "FiniteWord") -> bool:
        n = len(other)
        return n <= len(self) and np.array_equal(self._a[:n], other._a)

    def relabel(self, alphabet: Alphabet) -> "FiniteWord":
        """Same index sequence read over another alphabet of equal size."""
        if len(alphabet) < len(self.alphabet):
            raise ValidationError("target alphabet too small")
        return FiniteWord._wrap(alphabet, self._a.copy())


def as_word(w: WordLike, alphabet: Optional[Alphabet] = None) -> FiniteWord:
    return FiniteWord.parse(w, alphabet)


class WordSource(ABC):
    """A deterministic, prefix-coherent infinite (or finite) word.

    Subclasses implement :meth:`_generate`; this base class handles caching,
    thread safety and optional on-disk caching of prefixes.  A source may
    carry ``recurrence_bound``, a trusted function ``n -> upper bound on
    R(n)`` that analyzers use to decide whether finite scans are exact.
    """

    kind = "abstract"

    def __init__(self, alphabet: Alphabet):
        self.alphabet = alphabet
        self._buf = np.zeros(0, dtype=alphabet.dtype)
        self._lock = threading.Lock()
        self.recurrence_bound: Optional[Callable[[int], int]] = None

    max_length: Optional[int] = None

    @abstractmethod
    def _generate(self, n: int) -> np.ndarray:
        """Return at least ``n`` symbols (indices) of the word."""

    def params(self) -> dict:
        return {}

    def describe(self) -> dict:
        return {"kind": self.kind, **self.params()}

    def cache_key(self) -> Optional[str]:
        try:
            return json.dumps(self.describe(), sort_keys=True)
        except TypeError:
            return None

    def prefix(self, n: int) -> FiniteWord:
        n = int(n)
        if n < 0:
            raise ValidationError("prefix length must be nonnegative")
        if self.max_length is not None and n > self.max_length:
            raise HorizonError(f"source has only {self.max_length} symbols, {n} requested")
        with self._lock:
            if len(self._buf) < n:
                arr = self._load_cached(n)
                if arr is None:
                    arr = np.asarray(self._generate(n))
                    if len(arr) < n:
                        raise HorizonError(f"generator produced {len(arr)} < {n} symbols")
                    arr = arr.astype(self.alphabet.dtype, copy=False)
                    self._store_cached(arr)
                self._buf = arr
            out = self._buf[:n].copy()
        return FiniteWord._wrap(self.alphabet, out)

    def _cache_path(self) -> Optional[str]:
        root = os.environ.get(CACHE_ENV)
        key = self.cache_key() if root else None
        if not key:
            return None
        digest = hashlib.sha256((key + "|" + repr(self.alphabet.symbols)).encode()).hexdigest()[:32]
        return os.path.join(root, f"prefix-{digest}.npy")

    def _load_cached(self, n: int) -> Optional[np.ndarray]:
        path = self._cache_path()
        if path and os.path.exists(path):
            try:
                arr = np.load(path, allow_pickle=False)
            except (OSError, ValueError):
                return None
            if len(arr) >= n and arr.dtype == self.alphabet.dtype:
                return arr
        return None

    def _store_cached(self, arr: np.ndarray) -> None:
        path = self._cache_path()
        if not path:
            return
        try:
            os.makedirs(os.path.dirname(path), exist_ok=True)
            tmp = f"{path}.{os.getpid()}.{threading.get_ident()}.tmp.npy"
            np.save(tmp, arr, allow_pickle=False)
            os.replace(tmp, path)
        except OSError:
            pass

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.describe()})"


class ExplicitSource(WordSource):
    """A given finite word, or its infinite periodic repetition."""

    kind = "explicit"

    def __init__(self, word: WordLike, periodic: bool = False, alphabet: Optional[Alphabet] = None):
        w = as_word(word, alphabet)
        super().__init__(w.alphabet)
        if periodic and len(w) == 0:
            raise ValidationError("periodic source needs a nonempty period")
        self.word = w
        self.periodic = periodic
        if not periodic:
            self.max_length = len(w)
        else:
            p = len(w)
            # every window of length R contains all length-n factors once R >= p + n - 1
            self.recurrence_bound = lambda n, p=p: p + n - 1

    def params(self) -> dict:
        return {"word": self.word.text, "periodic": self.periodic}

    def _generate(self, n: int) -> np.ndarray:
        a = self.word.symbols
        if not self.periodic:
            return a[:n].copy()
        reps = -(-n // len(a))
        return np.tile(a, reps)[:n]


class ShiftSource(WordSource):
    """The word obtained by deleting the first ``offset`` symbols."""

    kind = "shift-of"

    def __init__(self, source: WordSource, offset: int):
        if offset < 0:
            raise ValidationError("shift offset must be nonnegative")
        super().__init__(source.alphabet)
        self.source = source
        self.offset = int(offset)
        if source.max_length is not None:
            self.max_length = max(0, source.max_length - self.offset)

    def params(self) -> dict:
        return {"source": self.source.describe(), "offset": self.offset}

    def _generate(self, n: int) -> np.ndarray:
        return self.source.prefix(n + self.offset).symbols[self.offset:].copy()


def materialize(source, horizon: Optional[int] = None) -> FiniteWord:
    """Prefix of length ``horizon`` of a source, word or string."""
    if isinstance(source, WordSource):
        if horizon is None:
            if source.max_length is None:
                raise ValidationError("horizon required for an infinite source")
            horizon = source.max_length
        return source.prefix(horizon)
    w = as_word(source)
    if horizon is None:
        return w
    if horizon > len(w):
        raise HorizonError(f"word has length {len(w)} < horizon {horizon}")
    return w[:horizon]


# ---------------------------------------------------------------- file format

def format_word(word: FiniteWord, compact: Optional[bool] = None, width: int = 100) -> str:
    """Serialize a word in the ``alphabet:`` header text format."""
    if compact is None:
        compact = word.alphabet.compact
    if compact and not word.alphabet.compact:
        raise ValidationError("compact form needs single-character symbols")
    lines = ["alphabet: " + " ".join(word.alphabet.symbols)]
    if compact:
        lines.append("compact: true")
        t = word.text
        lines.extend(t[i:i + width] for i in range(0, len(t), width))
    else:
        names = list(word)
        step = max(1, width // 4)
        lines.extend(" ".join(names[i:i + step]) for i in range(0, len(names), step))
    return "\n".join(lines) + "\n"


def parse_word(text: str) -> FiniteWord:
    """Inverse of :func:`format_word`.  Lines starting with ``#`` are ignored."""
    alphabet = None
    compact = False
    body = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        low = line.lower()
        if alphabet is None and low.startswith("alphabet:"):
            alphabet = Alphabet(line.split(":", 1)[1].split())
            continue
        if low.startswith("compact:"):
            compact = line.split(":", 1)[1].strip().lower() in ("true", "yes", "1")
            continue
        body.append(line)
    if alphabet is None:
        raise ValidationError("word file lacks an 'alphabet:' header")
    if compact:
        if not alphabet.compact:
            raise ValidationError("compact form declared for multi-character symbols")
        names = [c for c in "".join(body) if not c.isspace()]
    else:
        names = " ".join(body).split()
    return FiniteWord.parse(names, alphabet)
