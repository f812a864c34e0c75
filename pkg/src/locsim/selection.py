"""Attacker scan subsequence selection.

Four policies decide which dump subsequences an attacker could plausibly
have scanned:

* ``binned``: no two dumps show the same on-screen value;
* ``incremental``: the value moves by exactly one at every step, in a
  single direction (mixed directions behind ``allow_mixed_direction``);
* ``fully_random``: any subsequence;
* ``rapid``: consecutive dumps at most ``t_max_ms`` apart.

Conforming subsequences are counted with a memoised recursion, which lets
us enumerate them exhaustively in lexicographic order, or sample them
uniformly without replacement by drawing distinct ranks and unranking.
"""
from __future__ import annotations

import random
import sys
from dataclasses import dataclass

from .core import DumpSequence, SelectedSequence

POLICY_KINDS = ("binned", "incremental", "fully_random", "rapid")


@dataclass(frozen=True)
class SelectionPolicy:
    kind: str
    t_max_ms: int | None = None
    allow_mixed_direction: bool = False

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown selection policy {self.kind!r}")
        if self.kind == "rapid" and (self.t_max_ms is None or self.t_max_ms <= 0):
            raise ValueError("rapid selection needs t_max_ms > 0")

    @classmethod
    def binned(cls):
        return cls("binned")

    @classmethod
    def incremental(cls, allow_mixed_direction: bool = False):
        return cls("incremental", allow_mixed_direction=allow_mixed_direction)

    @classmethod
    def fully_random(cls):
        return cls("fully_random")

    @classmethod
    def rapid(cls, t_max_ms: int):
        return cls("rapid", t_max_ms=int(t_max_ms))

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "rapid":
            out["t_max_ms"] = self.t_max_ms
        if self.allow_mixed_direction:
            out["allow_mixed_direction"] = True
        return out

    @classmethod
    def from_json(cls, obj: dict) -> SelectionPolicy:
        t = obj.get("t_max_ms")
        return cls(obj["kind"], None if t is None else int(t), bool(obj.get("allow_mixed_direction", False)))

    @property
    def label(self) -> str:
        return f"rapid{self.t_max_ms}" if self.kind == "rapid" else self.kind


def conforms(policy: SelectionPolicy, seq: DumpSequence, indices) -> bool:
    indices = list(indices)
    vals = [seq.dumps[i].on_screen_value for i in indices]
    if policy.kind == "fully_random":
        return True
    if policy.kind == "rapid":
        ts = [seq.dumps[i].timestamp_ms for i in indices]
        return all(b - a <= policy.t_max_ms for a, b in zip(ts, ts[1:]))
    if len(set(vals)) != len(vals):
        return False
    if policy.kind == "binned":
        return True
    deltas = [b - a for a, b in zip(vals, vals[1:])]
    if any(abs(d) != 1 for d in deltas):
        return False
    return policy.allow_mixed_direction or len(set(deltas)) <= 1


class _Counter:
    """Memoised completion counts for one (sequence, policy) pair.

    A search state is ``(last, extra)``: the last chosen dump and whatever
    else the policy needs (used values for binned, direction for
    incremental).
    """

    def __init__(self, seq: DumpSequence, policy: SelectionPolicy):
        self.policy = policy
        self.values = [d.on_screen_value for d in seq.dumps]
        self.ts = [d.timestamp_ms for d in seq.dumps]
        self.size = len(seq.dumps)
        self.memo = {}
        distinct = sorted(set(self.values))
        self.bit = {v: 1 << k for k, v in enumerate(distinct)}

    def start(self, j):
        p = self.policy.kind
        if p == "binned" or (p == "incremental" and self.policy.allow_mixed_direction):
            return self.bit[self.values[j]]
        return None

    def advance(self, last, extra, j):
        """State after appending ``j``, or ``False`` if ``j`` may not follow."""
        p = self.policy.kind
        if p == "fully_random":
            return None
        if p == "rapid":
            return None if self.ts[j] - self.ts[last] <= self.policy.t_max_ms else False
        b = self.bit[self.values[j]]
        if p == "binned":
            return False if extra & b else extra | b
        delta = self.values[j] - self.values[last]
        if abs(delta) != 1:
            return False
        if self.policy.allow_mixed_direction:
            return False if extra & b else extra | b
        if extra is not None and extra != delta:
            return False
        return delta

    def count(self, last, extra, remaining):
        if remaining == 0:
            return 1
        key = (last, extra, remaining)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        total = 0
        for j in range(last + 1, self.size):
            nxt = self.advance(last, extra, j)
            if nxt is not False:
                total += self.count(j, nxt, remaining - 1)
        self.memo[key] = total
        return total

    def total(self, n):
        return sum(self.count(j, self.start(j), n - 1) for j in range(self.size))

    def unrank(self, r, n):
        out = []
        last = extra = None
        for depth in range(n):
            remaining = n - depth - 1
            lo = 0 if last is None else last + 1
            for j in range(lo, self.size):
                nxt = self.start(j) if last is None else self.advance(last, extra, j)
                if nxt is False:
                    continue
                c = self.count(j, nxt, remaining)
                if r < c:
                    out.append(j)
                    last, extra = j, nxt
                    break
                r -= c
            else:
                raise IndexError("rank out of range")
        return tuple(out)

    def walk(self, n):
        """All conforming length-``n`` tuples in lexicographic order."""
        def rec(prefix, last, extra, remaining):
            if remaining == 0:
                yield tuple(prefix)
                return
            for j in range(last + 1, self.size):
                nxt = self.advance(last, extra, j)
                if nxt is False or self.count(j, nxt, remaining - 1) == 0:
                    continue
                prefix.append(j)
                yield from rec(prefix, j, nxt, remaining - 1)
                prefix.pop()

        for j in range(self.size):
            s = self.start(j)
            if self.count(j, s, n - 1):
                yield from rec([j], j, s, n - 1)


def count_subsequences(seq: DumpSequence, policy: SelectionPolicy, n: int) -> int:
    if n < 1:
        raise ValueError("n must be >= 1")
    return _Counter(seq, policy).total(n)


def _distinct_ranks(rng: random.Random, total: int, k: int) -> list[int]:
    if total <= sys.maxsize:
        return rng.sample(range(total), k)
    seen = set()
    while len(seen) < k:
        seen.add(rng.randrange(total))
    return list(seen)


def enumerate_subsequences(seq: DumpSequence, policy: SelectionPolicy, n: int,
                           cap: int = 1000, seed: int = 0) -> list[SelectedSequence]:
    """Every conforming length-``n`` subsequence, or ``cap`` uniform samples of them.

    Results are in lexicographic index order either way.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if cap < 1:
        raise ValueError("cap must be >= 1")
    counter = _Counter(seq, policy)
    total = counter.total(n)
    if total <= cap:
        return [SelectedSequence(seq, t) for t in counter.walk(n)]
    ranks = sorted(_distinct_ranks(random.Random(seed), total, cap))
    return [SelectedSequence(seq, counter.unrank(r, n)) for r in ranks]
