"""Resource-value encodings and the dynamic XOR mask state machine.

Every encoding maps a plaintext resource amount onto one or more 32-bit
memory words.  Arithmetic wraps modulo ``2**bits`` (``bits`` defaults to 32;
smaller widths exist so tests can sweep whole parameter spaces).
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from math import gcd, prod

import numpy as np

WORD_BITS = 32
WORD_MASK = (1 << WORD_BITS) - 1

STATIC_KINDS = ("base", "offset", "xor", "add_xor", "xor_add", "rnc")
DYNAMIC_KINDS = ("dyn_xor_uow", "dyn_xor_uor")
KINDS = STATIC_KINDS + DYNAMIC_KINDS

READ = "read"
WRITE = "write"


class EncodingError(ValueError):
    """Raised for out-of-domain values or malformed encoding parameters."""


@dataclass(frozen=True)
class EncodingSpec:
    """Which encoding protects the resource, including its secrets.

    Only the parameters relevant to ``kind`` are meaningful; use the
    constructor helpers (:meth:`offset`, :meth:`rnc`, ...) rather than
    filling fields by hand.
    """

    kind: str = "base"
    offset: int = 0
    mask: int = 0
    moduli: tuple[int, ...] = ()
    mean_events_per_update: int = 1
    initial_mask: int = 0
    deterministic_period: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise EncodingError(f"unknown encoding kind {self.kind!r}")
        if self.kind == "rnc":
            if len(self.moduli) < 1 or any(m < 2 for m in self.moduli):
                raise EncodingError("rnc moduli must be integers >= 2")
            for i, a in enumerate(self.moduli):
                for b in self.moduli[i + 1:]:
                    if gcd(a, b) != 1:
                        raise EncodingError(f"rnc moduli {a} and {b} are not coprime")
        if self.is_dynamic and self.mean_events_per_update < 1:
            raise EncodingError("dynamic encodings need N >= 1")

    # -- constructors -----------------------------------------------------
    @classmethod
    def base(cls) -> EncodingSpec:
        return cls("base")

    @classmethod
    def offset_enc(cls, offset: int) -> EncodingSpec:
        return cls("offset", offset=offset)

    @classmethod
    def xor(cls, mask: int) -> EncodingSpec:
        return cls("xor", mask=mask & WORD_MASK)

    @classmethod
    def add_xor(cls, offset: int, mask: int) -> EncodingSpec:
        """``X = (A + O) ^ M``."""
        return cls("add_xor", offset=offset, mask=mask & WORD_MASK)

    @classmethod
    def xor_add(cls, mask: int, offset: int) -> EncodingSpec:
        """``X = (A ^ M) + O``."""
        return cls("xor_add", offset=offset, mask=mask & WORD_MASK)

    @classmethod
    def rnc(cls, moduli) -> EncodingSpec:
        return cls("rnc", moduli=tuple(int(m) for m in moduli))

    @classmethod
    def dyn_xor(cls, policy: str, n: int, initial_mask: int,
                deterministic_period: bool = False) -> EncodingSpec:
        policy = policy.lower()
        if policy not in ("uow", "uor"):
            raise EncodingError(f"dynamic policy must be 'uow' or 'uor', got {policy!r}")
        return cls(f"dyn_xor_{policy}", mean_events_per_update=n,
                   initial_mask=initial_mask & WORD_MASK,
                   deterministic_period=deterministic_period)

    # -- properties -------------------------------------------------------
    @property
    def is_dynamic(self) -> bool:
        return self.kind in DYNAMIC_KINDS

    @property
    def footprint(self) -> int:
        return len(self.moduli) if self.kind == "rnc" else 1

    @property
    def policy(self) -> str | None:
        return {"dyn_xor_uow": WRITE, "dyn_xor_uor": READ}.get(self.kind)

    @property
    def capacity(self) -> int | None:
        """Exclusive upper bound on representable plaintexts (RNC only)."""
        return prod(self.moduli) if self.kind == "rnc" else None

    # -- JSON -------------------------------------------------------------
    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.kind in ("offset", "add_xor", "xor_add"):
            out["O"] = self.offset
        if self.kind in ("xor", "add_xor", "xor_add"):
            out["M"] = f"0x{self.mask:X}"
        if self.kind == "rnc":
            out["moduli"] = list(self.moduli)
        if self.is_dynamic:
            out["N"] = self.mean_events_per_update
            out["initial_mask"] = f"0x{self.initial_mask:X}"
            out["deterministic_period"] = self.deterministic_period
        return out

    @classmethod
    def from_json(cls, obj: dict) -> EncodingSpec:
        try:
            kind = obj["kind"]
            if kind == "base":
                return cls.base()
            if kind == "offset":
                return cls.offset_enc(int(obj["O"]))
            if kind == "xor":
                return cls.xor(_parse_word(obj["M"]))
            if kind == "add_xor":
                return cls.add_xor(int(obj["O"]), _parse_word(obj["M"]))
            if kind == "xor_add":
                return cls.xor_add(_parse_word(obj["M"]), int(obj["O"]))
            if kind == "rnc":
                return cls.rnc(obj["moduli"])
            if kind in DYNAMIC_KINDS:
                return cls.dyn_xor(kind.rsplit("_", 1)[1], int(obj["N"]),
                                   _parse_word(obj.get("initial_mask", 0)),
                                   bool(obj.get("deterministic_period", False)))
        except KeyError as exc:
            raise EncodingError(f"encoding object missing key {exc.args[0]!r}") from None
        raise EncodingError(f"unknown encoding kind {kind!r}")


def _parse_word(v) -> int:
    if isinstance(v, str):
        return int(v, 0) & WORD_MASK
    return int(v) & WORD_MASK


@dataclass
class EncoderState:
    """Mutable per-run encoder state.  Single owner; never share across runs."""

    footprint: int = 1
    current_mask: int = 0
    rng: random.Random = field(default_factory=random.Random)
    events_seen: int = 0
    updates: int = 0

    @classmethod
    def for_spec(cls, spec: EncodingSpec, seed: int = 0) -> EncoderState:
        return cls(footprint=spec.footprint,
                   current_mask=spec.initial_mask if spec.is_dynamic else 0,
                   rng=random.Random(seed))


def encode(spec: EncodingSpec, state: EncoderState, value: int, bits: int = WORD_BITS) -> list[int]:
    """Encode ``value`` into ``state.footprint`` words.  Never mutates ``state``."""
    mask = (1 << bits) - 1
    if value < 0:
        raise EncodingError(f"resource value must be non-negative, got {value}")
    kind = spec.kind
    if kind == "rnc":
        if value >= spec.capacity:
            raise EncodingError(f"value {value} outside RNC range [0, {spec.capacity})")
        return [value % m for m in spec.moduli]
    if kind == "base":
        return [value & mask]
    if kind == "offset":
        return [(value + spec.offset) & mask]
    if kind == "xor":
        return [(value ^ spec.mask) & mask]
    if kind == "add_xor":
        return [((value + spec.offset) & mask) ^ (spec.mask & mask)]
    if kind == "xor_add":
        return [((value ^ spec.mask) + spec.offset) & mask]
    return [(value ^ state.current_mask) & mask]


def decode(spec: EncodingSpec, state: EncoderState, words, bits: int = WORD_BITS) -> int:
    mask = (1 << bits) - 1
    words = [int(w) for w in words]
    if len(words) != spec.footprint:
        raise EncodingError(f"expected {spec.footprint} words, got {len(words)}")
    kind = spec.kind
    if kind == "rnc":
        for w, m in zip(words, spec.moduli):
            if not 0 <= w < m:
                raise EncodingError(f"residue {w} out of range for modulus {m}")
        return crt(words, spec.moduli)
    (x,) = words
    if kind == "base":
        return x & mask
    if kind == "offset":
        return (x - spec.offset) & mask
    if kind == "xor":
        return (x ^ spec.mask) & mask
    if kind == "add_xor":
        return ((x ^ (spec.mask & mask)) - spec.offset) & mask
    if kind == "xor_add":
        return (((x - spec.offset) & mask) ^ spec.mask) & mask
    return (x ^ state.current_mask) & mask


def crt(residues, moduli) -> int:
    """Garner reconstruction of the unique value in ``[0, prod(moduli))``."""
    value, step = 0, 1
    for r, m in zip(residues, moduli):
        # solve value + step * k == r (mod m)
        k = ((r - value) * pow(step, -1, m)) % m
        value += step * k
        step *= m
    return value


def mask_update(spec: EncodingSpec, state: EncoderState, event: str) -> bool:
    """Feed one read/write event to a dynamic encoder; return whether the mask changed.

    Matching events update with probability ``1/N`` (or, with
    ``deterministic_period``, on every N-th matching event).  A new mask is
    always different from the old one.
    """
    if not spec.is_dynamic:
        raise EncodingError(f"mask_update called on static encoding {spec.kind!r}")
    if event not in (READ, WRITE):
        raise ValueError(f"unknown event {event!r}")
    if event != spec.policy:
        return False
    n = spec.mean_events_per_update
    state.events_seen += 1
    if spec.deterministic_period:
        fire = state.events_seen % n == 0
    else:
        fire = n == 1 or state.rng.random() * n < 1.0
    if not fire:
        return False
    new = state.current_mask
    while new == state.current_mask:
        new = state.rng.getrandbits(WORD_BITS)
    state.current_mask = new
    state.updates += 1
    return True


def encode_many(spec: EncodingSpec, state: EncoderState, values, bits: int = WORD_BITS):
    """Vectorised ``encode``: returns an int64 array of shape ``(len(values), footprint)``."""
    mask = (1 << bits) - 1
    a = np.asarray(values, dtype=np.int64)
    if a.size and a.min() < 0:
        raise EncodingError("resource values must be non-negative")
    kind = spec.kind
    if kind == "rnc":
        if a.size and a.max() >= spec.capacity:
            raise EncodingError(f"values outside RNC range [0, {spec.capacity})")
        return np.stack([a % m for m in spec.moduli], axis=-1)
    if kind == "base":
        x = a & mask
    elif kind == "offset":
        x = (a + spec.offset) & mask
    elif kind == "xor":
        x = (a ^ spec.mask) & mask
    elif kind == "add_xor":
        x = ((a + spec.offset) & mask) ^ (spec.mask & mask)
    elif kind == "xor_add":
        x = ((a ^ spec.mask) + spec.offset) & mask
    else:
        x = (a ^ state.current_mask) & mask
    return x[..., None]


def decode_many(spec: EncodingSpec, state: EncoderState, words, bits: int = WORD_BITS):
    """Vectorised ``decode`` over rows of a ``(count, footprint)`` array."""
    mask = (1 << bits) - 1
    w = np.asarray(words, dtype=np.int64)
    if w.shape[-1] != spec.footprint:
        raise EncodingError(f"expected {spec.footprint} words per value, got {w.shape[-1]}")
    kind = spec.kind
    if kind == "rnc":
        moduli = np.array(spec.moduli, dtype=np.int64)
        if np.any(w < 0) or np.any(w >= moduli):
            raise EncodingError("residue out of range")
        value = np.zeros(w.shape[:-1], dtype=np.int64)
        step = 1
        for k, m in enumerate(spec.moduli):
            value = value + step * (((w[..., k] - value) * pow(step, -1, m)) % m)
            step *= m
        return value
    x = w[..., 0]
    if kind == "base":
        return x & mask
    if kind == "offset":
        return (x - spec.offset) & mask
    if kind == "xor":
        return (x ^ spec.mask) & mask
    if kind == "add_xor":
        return ((x ^ (spec.mask & mask)) - spec.offset) & mask
    if kind == "xor_add":
        return (((x - spec.offset) & mask) ^ spec.mask) & mask
    return (x ^ state.current_mask) & mask
