"""Naive reference implementations used to cross-check the fast paths."""

from fractions import Fraction


def count(w: str, u: str) -> int:
    return sum(1 for i in range(len(w) - len(u) + 1) if w[i:i + len(u)] == u)


def factors(w: str, n: int) -> set:
    return {w[i:i + n] for i in range(len(w) - n + 1)}


def balance(w: str, u: str, n: int) -> int:
    counts = [count(w[i:i + n], u) for i in range(len(w) - n + 1)]
    return max(counts) - min(counts)


def discrepancy(w: str, u: str, n: int, mu: Fraction) -> Fraction:
    return max(abs(count(w[i:i + n], u) - n * mu) for i in range(len(w) - n + 1))


def max_exponent(w: str) -> int:
    """Largest integer e with some nonempty v such that v^e is a factor."""
    best = 1 if w else 0
    for p in range(1, len(w) // 2 + 1):
        for i in range(len(w) - p + 1):
            e = 1
            while w[i + e * p:i + (e + 1) * p] == w[i:i + p]:
                e += 1
            best = max(best, e)
    return best


def recurrence(w: str, n: int):
    """Smallest m such that every length-m window holds every length-n factor."""
    fs = factors(w, n)
    for m in range(n, len(w) + 1):
        if all(factors(w[i:i + m], n) >= fs for i in range(len(w) - m + 1)):
            return m
    return None


def iterate(rules: dict, seed: str, length: int) -> str:
    w = seed
    while len(w) < length:
        nxt = "".join(rules[c] for c in w)
        if len(nxt) <= len(w):
            break
        w = nxt
    return w[:length]


def rotation(p: int, q: int, length: int) -> str:
    """Characteristic Sturmian word of slope p/q via floor differences."""
    return "".join(str((n + 2) * p // q - (n + 1) * p // q) for n in range(length))
