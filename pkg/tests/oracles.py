"""Slow, obviously-correct reference implementations used to check the library."""
from __future__ import annotations

import itertools
from math import gcd


def zeta_scan(x: int, bits: int = 32) -> int:
    for k in range(bits):
        if not (x >> k) & 1:
            return k
    raise ValueError("no zero bit")


def exists_xor_add_mask(values, words, bits: int) -> bool:
    """Is there a mask under which every consecutive word difference matches?

    The offset cancels in differences, so only the mask matters.
    """
    mod = 1 << bits
    for m in range(mod):
        if all(((b ^ m) - (a ^ m)) % mod == (y - x) % mod
               for a, b, x, y in zip(values, values[1:], words, words[1:])):
            return True
    return False


def residue_offset_survives(values, modulus: int) -> bool:
    """Does a residue word ``A mod m`` keep constant offset to ``A`` across all scans?"""
    diffs = {a - (a % modulus) for a in values}
    return len(diffs) == 1


def rnc_running_gcd(values, words):
    g = 0
    for a, x in zip(values, words):
        d = a - x
        if d < 0:
            return None
        g = gcd(g, d)
        if g == 1:
            return None
    return g


def naive_subsequences(values, timestamps, kind, n, t_max=None):
    """Brute-force conforming subsequences by filtering all combinations."""
    out = []
    for combo in itertools.combinations(range(len(values)), n):
        vals = [values[i] for i in combo]
        if kind == "fully_random":
            ok = True
        elif kind == "rapid":
            ok = all(timestamps[b] - timestamps[a] <= t_max for a, b in zip(combo, combo[1:]))
        elif kind == "binned":
            ok = len(set(vals)) == len(vals)
        else:
            deltas = [b - a for a, b in zip(vals, vals[1:])]
            ok = len(set(vals)) == len(vals) and all(abs(d) == 1 for d in deltas) and len(set(deltas)) <= 1
        if ok:
            out.append(combo)
    return out


def naive_candidates(words_by_scan, values, predicate_pair=None, predicate_single=None):
    """Greedy candidate set by checking each location's full history independently."""
    n_words = len(words_by_scan[0])
    alive = []
    for loc in range(n_words):
        hist = [int(w[loc]) for w in words_by_scan]
        ok = True
        if predicate_single:
            ok = all(predicate_single(a, x) for a, x in zip(values, hist))
        if ok and predicate_pair:
            ok = all(predicate_pair(a, b, x, y)
                     for a, b, x, y in zip(values, values[1:], hist, hist[1:]))
        if ok:
            alive.append(loc)
    return alive


def naive_rank(scores, loc) -> int:
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return order.index(loc) + 1
