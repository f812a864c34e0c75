"""Location pruning logics and the greedy / statistical attack engines.

A pruning logic decides, scan by scan, whether a memory location is still
consistent with the hypothesis that it stores the on-screen resource.
Every logic is vectorised over the word array: ``check`` receives the
previous and current on-screen values (scalars) and the previous and
current words of many locations (int64 arrays) and returns a boolean
conformance array together with updated per-location state.

Pair logics compare consecutive scans, so the first scan carries no
check.  ``base`` and ``rnc`` check every scan on its own.

Greedy attacks discard non-conforming locations for good.  Statistical
attacks keep everything and rank locations by the fraction of checks they
passed, ties broken by lower index.
"""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .core import DumpSequence, SelectedSequence

WORD_BITS = 32


class PreconditionError(ValueError):
    """A logic was fed scans it cannot interpret (e.g. a non-unit stride)."""


# -- bit helpers ------------------------------------------------------------

def zeta(x: int, bits: int = WORD_BITS) -> int:
    """Position of the least significant zero bit of ``x``."""
    x = int(x)
    if not 0 <= x < (1 << bits):
        raise ValueError(f"{x} does not fit in {bits} bits")
    if x == (1 << bits) - 1:
        raise ValueError("an all-ones word has no zero bit")
    return ((~x) & (x + 1)).bit_length() - 1


def chi(p: int, bits: int = WORD_BITS) -> int:
    """``p ^ (p + 1)``, always of the form ``2**(zeta(p) + 1) - 1``."""
    zeta(p, bits)
    return p ^ (p + 1)


# -- logics -----------------------------------------------------------------

class Logic:
    name = ""
    per_dump = False      # checks the first scan too
    unit_stride = False   # needs |A' - A| == 1 between scans
    stateless = True      # conformance depends only on the two scans

    def init_state(self, size: int) -> dict:
        return {}

    def check(self, a_prev, a_cur, x_prev, x_cur, state, bits=WORD_BITS):
        raise NotImplementedError

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


class BaseLogic(Logic):
    """Exact match against the on-screen value."""

    name = "base"
    per_dump = True

    def check(self, a_prev, a_cur, x_prev, x_cur, state, bits=WORD_BITS):
        return x_cur == (a_cur & ((1 << bits) - 1)), state


class OffsetLogic(Logic):
    name = "offset"

    def check(self, a_prev, a_cur, x_prev, x_cur, state, bits=WORD_BITS):
        mask = (1 << bits) - 1
        return ((x_cur - x_prev) & mask) == ((a_cur - a_prev) & mask), state


class XorLogic(Logic):
    name = "xor"

    def check(self, a_prev, a_cur, x_prev, x_cur, state, bits=WORD_BITS):
        return (x_cur ^ x_prev) == (a_cur ^ a_prev), state


def _require_unit(name, a_prev, a_cur):
    if abs(a_cur - a_prev) != 1:
        raise PreconditionError(f"{name} logic needs unit-stride scans, got {a_prev} -> {a_cur}")


class AddXorLogic(Logic):
    """Consecutive words must differ by an all-ones pattern ``2**k - 1``.

    Accepts decrementing locations as well, since a decrement is an
    increment seen under the complementary mask.
    """

    name = "add_xor"
    unit_stride = True

    def check(self, a_prev, a_cur, x_prev, x_cur, state, bits=WORD_BITS):
        _require_unit(self.name, a_prev, a_cur)
        v = x_cur ^ x_prev
        return (v != 0) & ((v & (v + 1)) == 0), state


class XorAddLogic(Logic):
    """Difference test for ``(A ^ M) + O`` with incremental mask inference.

    For an increment ``A -> A + 1`` with ``z = zeta(A)`` the stored words
    differ by ``d = 2 * (M mod 2**z) + 1 - 2**(z+1) * M_z`` (mod 2**bits):
    odd, with ``|d| < 2**(z+1)``, and its sign gives bit ``z`` of the mask.
    A decrement is the same relation read backwards.  Each location keeps
    the mask bits learned so far and is rejected on contradiction.
    """

    name = "xor_add"
    unit_stride = True
    stateless = False

    def __init__(self, infer_bits: bool = True):
        self.infer_bits = infer_bits

    def init_state(self, size):
        return {"known_mask": np.zeros(size, dtype=np.int64),
                "known_value": np.zeros(size, dtype=np.int64)}

    def check(self, a_prev, a_cur, x_prev, x_cur, state, bits=WORD_BITS):
        _require_unit(self.name, a_prev, a_cur)
        mask = (1 << bits) - 1
        if a_cur > a_prev:
            d = (x_cur - x_prev) & mask
            z = zeta(a_prev, bits)
        else:
            d = (x_prev - x_cur) & mask
            z = zeta(a_cur, bits)
        odd = (d & 1) == 1
        span = 1 << (z + 1)
        low = ((d & (span - 1)) - 1) >> 1
        if z + 1 < bits:
            negative = d > (1 << bits) - span
            ok = odd & ((d < span) | negative)
            new_bits = span - 1
            new_value = low | (negative.astype(np.int64) << z)
        else:
            # the whole word takes part in the carry: the top mask bit stays unknown
            ok = odd
            new_bits = (1 << z) - 1
            new_value = low & new_bits
        if not self.infer_bits:
            return ok, state
        known_mask, known_value = state["known_mask"], state["known_value"]
        clash = ((known_value ^ new_value) & known_mask & new_bits) != 0
        conform = ok & ~clash
        merged_value = (known_value & known_mask) | (new_value & new_bits)
        return conform, {
            "known_mask": np.where(conform, known_mask | new_bits, known_mask),
            "known_value": np.where(conform, merged_value, known_value),
        }


class RncLogic(Logic):
    """``A - X`` must stay a non-negative multiple of some modulus > 1.

    Keeps the running GCD of the differences; a location dies when the GCD
    collapses to 1.  A failed check leaves the GCD untouched.
    """

    name = "rnc"
    per_dump = True
    stateless = False

    def init_state(self, size):
        return {"gcd": np.zeros(size, dtype=np.int64)}

    def check(self, a_prev, a_cur, x_prev, x_cur, state, bits=WORD_BITS):
        d = a_cur - x_cur
        nonneg = d >= 0
        g = state["gcd"]
        g_new = np.gcd(g, np.where(nonneg, d, 0))
        conform = nonneg & (g_new != 1)
        return conform, {"gcd": np.where(conform, g_new, g)}


class IncDecLogic(Logic):
    """Word moves in the same direction as the on-screen value (two's complement)."""

    name = "inc_dec"

    def check(self, a_prev, a_cur, x_prev, x_cur, state, bits=WORD_BITS):
        mask = (1 << bits) - 1
        diff = (x_cur - x_prev) & mask
        signed = np.where(diff >= (1 << (bits - 1)), diff - (1 << bits), diff)
        return np.sign(signed) == np.sign(a_cur - a_prev), state


class ChangeNoChangeLogic(Logic):
    name = "change_no_change"

    def check(self, a_prev, a_cur, x_prev, x_cur, state, bits=WORD_BITS):
        return (x_cur != x_prev) == (a_cur != a_prev), state


class ChangeLogic(Logic):
    name = "change"

    def check(self, a_prev, a_cur, x_prev, x_cur, state, bits=WORD_BITS):
        if a_cur != a_prev:
            return x_cur != x_prev, state
        return np.ones(np.shape(x_cur), dtype=bool), state


LOGIC_NAMES = ("base", "offset", "xor", "add_xor", "xor_add", "rnc",
               "inc_dec", "change_no_change", "change")
_LOGIC_TYPES = {cls.name: cls for cls in (BaseLogic, OffsetLogic, XorLogic, AddXorLogic, XorAddLogic,
                                          RncLogic, IncDecLogic, ChangeNoChangeLogic, ChangeLogic)}


def get_logic(logic, **options) -> Logic:
    if isinstance(logic, Logic):
        return logic
    try:
        return _LOGIC_TYPES[logic](**options)
    except KeyError:
        raise ValueError(f"unknown pruning logic {logic!r}") from None


def step(logic, state: dict | None, prev, cur, bits: int = WORD_BITS):
    """Check one location across one scan.

    ``prev`` and ``cur`` are ``(A, X)`` pairs; ``prev`` is ``None`` for the
    first scan.  Returns ``(conform, new_state)``.
    """
    logic = get_logic(logic)
    if state is None:
        state = logic.init_state(1)
    a_cur, x_cur = int(cur[0]), np.array([int(cur[1])], dtype=np.int64)
    if prev is None:
        if not logic.per_dump:
            return True, state
        conform, new_state = logic.check(None, a_cur, None, x_cur, state, bits)
    else:
        a_prev, x_prev = int(prev[0]), np.array([int(prev[1])], dtype=np.int64)
        conform, new_state = logic.check(a_prev, a_cur, x_prev, x_cur, state, bits)
    return bool(np.asarray(conform)[0]), new_state


# -- success criteria for statistical attacks ------------------------------

CRITERION_KINDS = ("threshold", "top_k", "score_drop")


@dataclass(frozen=True)
class SuccessCriterion:
    """Which ranked locations an attacker is assumed to inspect.

    ``threshold``: score >= value; ``top_k``: rank <= value;
    ``score_drop``: everything above the first gap larger than value
    between consecutive sorted scores.
    """

    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in CRITERION_KINDS:
            raise ValueError(f"unknown success criterion {self.kind!r}")

    @property
    def label(self) -> str:
        v = int(self.value) if float(self.value).is_integer() else self.value
        return f"{self.kind}:{v}"

    def to_json(self) -> dict:
        return {"criterion": self.kind, "value": self.value}

    @classmethod
    def from_json(cls, obj) -> SuccessCriterion:
        return cls(obj["criterion"], obj["value"])

    @classmethod
    def parse(cls, label: str) -> SuccessCriterion:
        kind, _, value = label.partition(":")
        return cls(kind, float(value))


DEFAULT_CRITERION = SuccessCriterion("top_k", 100)


# -- traces -----------------------------------------------------------------

@dataclass
class GreedyRecord:
    n: int
    remaining: int
    recall: bool


@dataclass
class StatRecord:
    n: int
    rank: int
    strictly_better: int
    recall_under: dict = field(default_factory=dict)


@dataclass
class GreedyTrace:
    records: list
    indices: tuple = ()
    game_label: str = ""
    encoding: str = ""
    logic: str = ""
    policy: str = ""
    mode = "greedy"

    def to_json(self) -> dict:
        return {"mode": self.mode, "game_label": self.game_label, "encoding": self.encoding,
                "logic": self.logic, "policy": self.policy, "indices": list(self.indices),
                "records": [{"n": r.n, "remaining": r.remaining, "recall": r.recall}
                            for r in self.records]}


@dataclass
class StatTrace:
    records: list
    indices: tuple = ()
    game_label: str = ""
    encoding: str = ""
    logic: str = ""
    policy: str = ""
    mode = "statistical"

    def to_json(self) -> dict:
        return {"mode": self.mode, "game_label": self.game_label, "encoding": self.encoding,
                "logic": self.logic, "policy": self.policy, "indices": list(self.indices),
                "records": [{"n": r.n, "rank": r.rank, "strictly_better": r.strictly_better,
                             "recall_under": dict(r.recall_under)} for r in self.records]}


def trace_from_json(obj: dict):
    common = dict(indices=tuple(obj.get("indices", ())), game_label=obj.get("game_label", ""),
                  encoding=obj.get("encoding", ""), logic=obj.get("logic", ""),
                  policy=obj.get("policy", ""))
    if obj["mode"] == "greedy":
        return GreedyTrace([GreedyRecord(r["n"], r["remaining"], bool(r["recall"]))
                            for r in obj["records"]], **common)
    if obj["mode"] == "statistical":
        return StatTrace([StatRecord(r["n"], r["rank"], r["strictly_better"], dict(r["recall_under"]))
                          for r in obj["records"]], **common)
    raise ValueError(f"unknown trace mode {obj['mode']!r}")


# -- engines ----------------------------------------------------------------

def _as_indices(sel) -> tuple:
    return sel.indices if isinstance(sel, SelectedSequence) else tuple(int(i) for i in sel)


def _check_selection(logic: Logic, values, indices):
    if not indices:
        raise ValueError("empty selection")
    if logic.unit_stride:
        for a, b in zip(indices, indices[1:]):
            if abs(int(values[b]) - int(values[a])) != 1:
                raise PreconditionError(f"{logic.name} logic requires incremental selection")


def _prefix_walk(selections, push, on_done):
    """Visit selections in lexicographic order, sharing work on common prefixes.

    ``push(stack, j)`` appends the node for scanning dump ``j`` after the
    nodes already on ``stack``; ``on_done(k, stack)`` reports selection ``k``.
    """
    order = sorted(range(len(selections)), key=lambda k: selections[k])
    stack, path = [], ()
    for k in order:
        sel = selections[k]
        common = 0
        for a, b in zip(path, sel):
            if a != b:
                break
            common += 1
        del stack[common:]
        for j in sel[common:]:
            push(stack, j)
        path = sel
        on_done(k, stack)


def _meta(seq, logic, indices, policy):
    return dict(indices=indices, game_label=seq.game_label,
                encoding=seq.ground_truth.encoding.kind, logic=logic.name, policy=policy)


def greedy_attack_many(seq: DumpSequence, selections, logic, bits: int = WORD_BITS,
                       policy: str = "") -> list[GreedyTrace]:
    """Greedy attack on every selection; returns traces in input order."""
    logic = get_logic(logic)
    selections = [_as_indices(s) for s in selections]
    values = seq.values
    for sel in selections:
        _check_selection(logic, values, sel)
    words = seq.matrix.astype(np.int64)
    n_words = seq.word_count
    gt = np.array(seq.ground_truth.locations, dtype=np.int64)

    def gather(j, idx):
        return words[j] if idx is None else words[j, idx]

    def push(stack, j):
        if not stack:
            prev_j, idx, state = None, None, logic.init_state(n_words)
        else:
            prev_j, idx, state = stack[-1]["j"], stack[-1]["idx"], stack[-1]["state"]
        if prev_j is None and not logic.per_dump:
            stack.append({"j": j, "idx": None, "state": state, "rec": (n_words, True)})
            return
        a_prev = None if prev_j is None else int(values[prev_j])
        x_prev = None if prev_j is None else gather(prev_j, idx)
        conform, new_state = logic.check(a_prev, int(values[j]), x_prev, gather(j, idx), state, bits)
        conform = np.asarray(conform, dtype=bool)
        kept = np.flatnonzero(conform) if idx is None else idx[conform]
        new_state = {k: v[conform] for k, v in new_state.items()}
        pos = np.searchsorted(kept, gt)
        recall = bool(np.all((pos < len(kept)) & (kept[np.minimum(pos, len(kept) - 1)] == gt))) \
            if len(kept) else False
        stack.append({"j": j, "idx": kept, "state": new_state, "rec": (len(kept), recall)})

    out = [None] * len(selections)

    def done(k, stack):
        recs, alive = [], True
        for n, node in enumerate(stack, start=1):
            remaining, recall = node["rec"]
            alive = alive and recall
            recs.append(GreedyRecord(n, remaining, alive))
        out[k] = GreedyTrace(recs, **_meta(seq, logic, selections[k], policy))

    _prefix_walk(selections, push, done)
    return out


def greedy_attack(sel: SelectedSequence, logic, bits: int = WORD_BITS) -> GreedyTrace:
    return greedy_attack_many(sel.source, [sel.indices], logic, bits)[0]


def greedy_candidates(seq: DumpSequence, indices, logic, bits: int = WORD_BITS):
    """Surviving candidate indices after each scan (for oracles and tests)."""
    logic = get_logic(logic)
    indices = _as_indices(indices)
    _check_selection(logic, seq.values, indices)
    n_words = seq.word_count
    idx = np.arange(n_words)
    state = logic.init_state(n_words)
    prev = None
    out = []
    for j in indices:
        if prev is not None or logic.per_dump:
            a_prev = None if prev is None else int(seq.values[prev])
            x_prev = None if prev is None else seq.matrix[prev, idx].astype(np.int64)
            conform, state = logic.check(a_prev, int(seq.values[j]), x_prev,
                                         seq.matrix[j, idx].astype(np.int64), state, bits)
            conform = np.asarray(conform, dtype=bool)
            idx = idx[conform]
            state = {k: v[conform] for k, v in state.items()}
        out.append(idx.copy())
        prev = j
    return out


class _ConformanceCache:
    """LRU cache of full-width conformance arrays for stateless logics."""

    def __init__(self, limit=256):
        self.limit = limit
        self.data = OrderedDict()

    def get(self, key, compute):
        hit = self.data.get(key)
        if hit is not None:
            self.data.move_to_end(key)
            return hit
        value = compute()
        self.data[key] = value
        if len(self.data) > self.limit:
            self.data.popitem(last=False)
        return value


def _ranking(counts: np.ndarray, checks: int, gt: np.ndarray, criteria):
    """Rank of the best ground-truth location and per-criterion recall."""
    best = None
    for g in gt:
        c = counts[g]
        better = int(np.count_nonzero(counts > c))
        rank = 1 + better + int(np.count_nonzero(counts[:g] == c))
        if best is None or rank < best[0]:
            best = (rank, better, int(c))
    rank, better, c = best
    score = 1.0 if checks == 0 else c / checks
    recall = {}
    for crit in criteria:
        if crit.kind == "top_k":
            ok = rank <= crit.value
        elif crit.kind == "threshold":
            ok = score >= crit.value
        else:
            ok = True
            if checks:
                present = np.flatnonzero(np.bincount(counts, minlength=checks + 1))[::-1]
                gaps = (present[:-1] - present[1:]) / checks
                big = np.flatnonzero(gaps > crit.value)
                if len(big):
                    ok = c >= present[big[0]]
        recall[crit.label] = bool(ok)
    return rank, better, recall


def statistical_scores(seq: DumpSequence, indices, logic, bits: int = WORD_BITS, _cache=None):
    """Yield ``(counts, checks)`` after each scan: per-location passed checks and total checks."""
    logic = get_logic(logic)
    indices = _as_indices(indices)
    _check_selection(logic, seq.values, indices)
    n_words = seq.word_count
    counts = np.zeros(n_words, dtype=np.int64)
    state = logic.init_state(n_words)
    checks = 0
    prev = None
    for j in indices:
        if prev is not None or logic.per_dump:
            conform, state = _full_check(seq, logic, prev, j, state, bits, _cache)
            counts = counts + conform
            checks += 1
        yield counts, checks
        prev = j


def _full_check(seq, logic, prev, j, state, bits, cache):
    values, words = seq.values, seq.matrix

    def compute():
        a_prev = None if prev is None else int(values[prev])
        x_prev = None if prev is None else words[prev].astype(np.int64)
        conform, new_state = logic.check(a_prev, int(values[j]), x_prev,
                                         words[j].astype(np.int64), state, bits)
        return np.asarray(conform, dtype=bool), new_state

    if logic.stateless and cache is not None:
        conform = cache.get((prev, j), lambda: compute()[0])
        return conform, state
    return compute()


def statistical_attack_many(seq: DumpSequence, selections, logic, criteria=(DEFAULT_CRITERION,),
                            bits: int = WORD_BITS, policy: str = "") -> list[StatTrace]:
    logic = get_logic(logic)
    criteria = tuple(criteria)
    selections = [_as_indices(s) for s in selections]
    for sel in selections:
        _check_selection(logic, seq.values, sel)
    n_words = seq.word_count
    gt = np.array(seq.ground_truth.locations, dtype=np.int64)
    cache = _ConformanceCache()

    def push(stack, j):
        if stack:
            top = stack[-1]
            prev, counts, state, checks = top["j"], top["counts"], top["state"], top["checks"]
        else:
            prev, counts, state, checks = None, np.zeros(n_words, dtype=np.int64), \
                logic.init_state(n_words), 0
        if prev is not None or logic.per_dump:
            conform, state = _full_check(seq, logic, prev, j, state, bits, cache)
            counts = counts + conform
            checks += 1
        rank, better, recall = _ranking(counts, checks, gt, criteria)
        stack.append({"j": j, "counts": counts, "state": state, "checks": checks,
                      "rec": (rank, better, recall)})

    out = [None] * len(selections)

    def done(k, stack):
        recs = [StatRecord(n, *node["rec"]) for n, node in enumerate(stack, start=1)]
        out[k] = StatTrace(recs, **_meta(seq, logic, selections[k], policy))

    _prefix_walk(selections, push, done)
    return out


def statistical_attack(sel: SelectedSequence, logic, criteria=(DEFAULT_CRITERION,),
                       bits: int = WORD_BITS) -> StatTrace:
    return statistical_attack_many(sel.source, [sel.indices], logic, criteria, bits)[0]
