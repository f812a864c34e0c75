"""Synthetic protected game process that produces dump sequences.

The process holds one resource (coins, bullets, ...) stored under an
encoding at fixed word indices, surrounded by background memory.  A
deterministic event schedule drives it: frame reads, resource writes and
dump captures.  Capturing a dump suspends the process, so no state
advances at that instant.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .core import Dump, DumpSequence, GroundTruth
from .encodings import READ, WRITE, EncoderState, EncodingError, EncodingSpec, decode, encode, mask_update

BACKGROUND_CLASSES = ("static", "per_dump_noise", "drifting_counters", "zeros", "event_coupled")

FRAME_READ = "frame_read"
RESOURCE_WRITE = "resource_write"
TAKE_DUMP = "take_dump"
# events sharing a timestamp: the dump sees the state before anything else runs
_EVENT_PRIORITY = {TAKE_DUMP: 0, RESOURCE_WRITE: 1, FRAME_READ: 2}


class ConfigError(ValueError):
    """Invalid simulator or campaign configuration.  ``field`` names the culprit."""

    def __init__(self, field_path: str, message: str):
        super().__init__(f"{field_path}: {message}")
        self.field = field_path


@dataclass(frozen=True)
class Collection:
    """Dump collection schedule.

    ``paced``: change the resource every 3 dumps; ``fast``: a dump every
    500 ms and a change every 6 dumps.
    """

    kind: str = "paced"
    interval_ms: int = 1000
    change_every_n_dumps: int = 3
    pre_level_dump: bool = False

    @classmethod
    def paced(cls, interval_ms: int = 1000, change_every_n_dumps: int = 3,
              pre_level_dump: bool = False) -> Collection:
        return cls("paced", interval_ms, change_every_n_dumps, pre_level_dump)

    @classmethod
    def fast(cls, interval_ms: int = 500, change_every_n_dumps: int = 6) -> Collection:
        return cls("fast", interval_ms, change_every_n_dumps, False)

    def descriptor(self) -> dict:
        return {"kind": self.kind, "interval_ms": self.interval_ms,
                "change_every_n_dumps": self.change_every_n_dumps}


def default_mix() -> dict:
    return {"static": 0.595, "per_dump_noise": 0.20, "drifting_counters": 0.10,
            "zeros": 0.10, "event_coupled": 0.005}


def no_distractors() -> dict:
    return {"duplicate_display": False, "opposite_stride": False, "same_stride": False}


@dataclass(frozen=True)
class SimConfig:
    encoding: EncodingSpec = field(default_factory=EncodingSpec.base)
    word_count: int = 2 ** 18
    seed: int = 0
    game_label: str = "synthetic"
    resource_start: int = 100
    resource_direction: int = 1
    resource_change_count: int = 7
    background_mix: dict = field(default_factory=default_mix)
    distractors: dict = field(default_factory=no_distractors)
    distractor_offset: int = 1000
    frame_period_ms: int = 16
    collection: Collection = field(default_factory=Collection.paced)

    def validate(self) -> None:
        if self.word_count <= 0:
            raise ConfigError("word_count", "must be positive")
        if self.resource_direction not in (1, -1):
            raise ConfigError("resource_direction", "must be +1 or -1")
        if self.resource_start < 0:
            raise ConfigError("resource_start", "must be non-negative")
        if self.resource_change_count < 1:
            raise ConfigError("resource_change_count", "must be positive")
        final = self.resource_start + self.resource_direction * self.resource_change_count
        if final < 0:
            raise ConfigError("resource_change_count", "resource would go negative")
        mix = self.background_mix
        unknown = set(mix) - set(BACKGROUND_CLASSES)
        if unknown:
            raise ConfigError("background_mix", f"unknown classes {sorted(unknown)}")
        if any(not 0.0 <= float(v) <= 1.0 for v in mix.values()):
            raise ConfigError("background_mix", "fractions must lie in [0, 1]")
        if abs(sum(float(v) for v in mix.values()) - 1.0) > 1e-9:
            raise ConfigError("background_mix", "fractions must sum to 1")
        unknown = set(self.distractors) - set(no_distractors())
        if unknown:
            raise ConfigError("distractors", f"unknown flags {sorted(unknown)}")
        if self.frame_period_ms <= 0:
            raise ConfigError("frame_period_ms", "must be positive")
        c = self.collection
        if c.kind not in ("paced", "fast"):
            raise ConfigError("collection.kind", "must be 'paced' or 'fast'")
        if c.interval_ms <= 0:
            raise ConfigError("collection.interval_ms", "must be positive")
        if c.change_every_n_dumps < 1:
            raise ConfigError("collection.change_every_n_dumps", "must be positive")
        enc = self.encoding
        if enc.kind == "rnc":
            top = max(self.resource_start, final)
            if top >= enc.capacity:
                raise ConfigError("encoding.moduli",
                                  f"product {enc.capacity} must exceed the largest resource value {top}")
        n_special = enc.footprint + sum(bool(v) for v in self.distractors.values())
        # RNC words are spread out, so reserve a gap around each one
        if n_special * 2 + 1 > self.word_count:
            raise ConfigError("word_count", "too small for ground truth and distractors")

    # -- JSON -------------------------------------------------------------
    def to_json(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["encoding"] = self.encoding.to_json()
        out["collection"] = asdict(self.collection)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> SimConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown SimConfig key")
        kwargs = dict(obj)
        if "encoding" in kwargs:
            try:
                kwargs["encoding"] = EncodingSpec.from_json(kwargs["encoding"])
            except (EncodingError, TypeError) as exc:
                raise ConfigError("encoding", str(exc)) from None
        if "collection" in kwargs:
            col = dict(kwargs["collection"])
            kind = col.get("kind", "paced")
            base = Collection.fast() if kind == "fast" else Collection.paced()
            try:
                kwargs["collection"] = Collection(**{**asdict(base), **col})
            except TypeError as exc:
                raise ConfigError("collection", str(exc)) from None
        if "background_mix" in kwargs:
            mix = kwargs["background_mix"]
            if not isinstance(mix, dict):
                raise ConfigError("background_mix", "must be an object")
            kwargs["background_mix"] = {k: float(v) for k, v in mix.items()}
        if "distractors" in kwargs:
            kwargs["distractors"] = {**no_distractors(), **kwargs["distractors"]}
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> SimConfig:
        try:
            with open(path) as fh:
                obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("", f"invalid JSON: {exc}") from None
        if not isinstance(obj, dict):
            raise ConfigError("", "config must be a JSON object")
        return cls.from_json(obj)


@dataclass(frozen=True)
class Event:
    timestamp_ms: int
    kind: str
    new_value: int | None = None


def schedule(config: SimConfig) -> list[Event]:
    """Deterministic event trace for a configuration.

    Dumps come every ``interval_ms``; after each ``change_every_n_dumps``
    dumps the resource moves one step, halfway to the next dump.  A
    pre-level dump, when enabled, precedes the first window.
    """
    col = config.collection
    interval = col.interval_ms
    events = []
    t0 = 0
    if col.pre_level_dump:
        events.append(Event(0, TAKE_DUMP))
        t0 = interval
    n_windows = config.resource_change_count + 1
    value = config.resource_start
    t = t0
    for w in range(n_windows):
        for _ in range(col.change_every_n_dumps):
            events.append(Event(t, TAKE_DUMP))
            t += interval
        if w < config.resource_change_count:
            value += config.resource_direction
            events.append(Event(t - interval + interval // 2, RESOURCE_WRITE, value))
    end = t - interval
    fp = config.frame_period_ms
    events.extend(Event(ft, FRAME_READ) for ft in range(fp, end + 1, fp))
    events.sort(key=lambda e: (e.timestamp_ms, _EVENT_PRIORITY[e.kind]))
    return events


def _layout(config: SimConfig, rng: np.random.Generator):
    """Pick ground-truth, distractor and background word indices."""
    n = config.word_count
    enc = config.encoding
    taken = np.zeros(n, dtype=bool)

    def pick(count, spread):
        out = []
        while len(out) < count:
            i = int(rng.integers(n))
            lo, hi = (max(0, i - 1), min(n, i + 2)) if spread else (i, i + 1)
            if taken[lo:hi].any():
                continue
            taken[i] = True
            out.append(i)
        return out

    locations = tuple(pick(enc.footprint, spread=enc.footprint > 1))
    roles = {"duplicate_display": "duplicate-display", "opposite_stride": "opposite-stride",
             "same_stride": "same-stride"}
    distractors = {}
    for flag in ("duplicate_display", "opposite_stride", "same_stride"):
        if config.distractors.get(flag):
            (i,) = pick(1, spread=False)
            distractors[i] = roles[flag]

    free = np.flatnonzero(~taken)
    free = free[rng.permutation(len(free))]
    classes = {}
    start = 0
    mix = config.background_mix
    for k, name in enumerate(BACKGROUND_CLASSES):
        if k == len(BACKGROUND_CLASSES) - 1:
            count = len(free) - start
        else:
            count = int(round(float(mix.get(name, 0.0)) * len(free)))
            count = min(count, len(free) - start)
        classes[name] = np.sort(free[start:start + count])
        start += count
    return locations, distractors, classes


def _static_values(rng: np.random.Generator, size: int) -> np.ndarray:
    # half small integers (flags, counts, enums), half arbitrary 32-bit data
    small = rng.integers(0, 1024, size=size, dtype=np.uint32)
    wide = rng.integers(0, 2 ** 32, size=size, dtype=np.uint32)
    return np.where(rng.random(size) < 0.5, small, wide).astype(np.uint32)


def simulate(config: SimConfig, return_log: bool = False):
    """Run the synthetic process and capture its dump sequence.

    With ``return_log`` also returns the per-dump encoder masks, which the
    self-check needs for dynamic encodings.
    """
    config.validate()
    ss = np.random.SeedSequence(config.seed & (2 ** 64 - 1))
    layout_ss, background_ss, encoder_ss = ss.spawn(3)
    rng = np.random.default_rng(background_ss)
    locations, distractors, classes = _layout(config, np.random.default_rng(layout_ss))
    enc = config.encoding
    state = EncoderState.for_spec(enc, seed=int(encoder_ss.generate_state(1, np.uint64)[0]))

    mem = np.zeros(config.word_count, dtype=np.uint32)
    mem[classes["static"]] = _static_values(rng, len(classes["static"]))
    mem[classes["event_coupled"]] = rng.integers(0, 2 ** 32, size=len(classes["event_coupled"]),
                                                 dtype=np.uint32)
    drift_idx = classes["drifting_counters"]
    mem[drift_idx] = rng.integers(0, 2 ** 16, size=len(drift_idx), dtype=np.uint32)
    noise_idx = classes["per_dump_noise"]
    coupled_idx = classes["event_coupled"]

    role_index = {r: i for i, r in distractors.items()}
    value = config.resource_start
    offset = config.distractor_offset
    if "duplicate-display" in role_index:
        mem[role_index["duplicate-display"]] = value
    if "opposite-stride" in role_index:
        mem[role_index["opposite-stride"]] = offset & 0xFFFFFFFF
    if "same-stride" in role_index:
        mem[role_index["same-stride"]] = offset & 0xFFFFFFFF
    loc_arr = np.array(locations, dtype=np.int64)

    def store():
        mem[loc_arr] = np.array(encode(enc, state, value), dtype=np.uint32)

    store()
    dumps = []
    masks = []
    for ev in schedule(config):
        if ev.kind == TAKE_DUMP:
            mem[noise_idx] = rng.integers(0, 2 ** 32, size=len(noise_idx), dtype=np.uint32)
            dumps.append(Dump(len(dumps), ev.timestamp_ms, value, mem.copy()))
            masks.append(state.current_mask)
        elif ev.kind == FRAME_READ:
            mem[drift_idx] += rng.integers(0, 3, size=len(drift_idx), dtype=np.uint32)
            if enc.is_dynamic and mask_update(enc, state, READ):
                store()
            if "duplicate-display" in role_index:
                mem[role_index["duplicate-display"]] = value
        else:
            step = ev.new_value - value
            value = ev.new_value
            if value < 0:
                raise ConfigError("resource_change_count", "resource would go negative")
            if enc.is_dynamic:
                mask_update(enc, state, WRITE)
            store()
            mem[coupled_idx] = rng.integers(0, 2 ** 32, size=len(coupled_idx), dtype=np.uint32)
            if "opposite-stride" in role_index:
                i = role_index["opposite-stride"]
                mem[i] = (int(mem[i]) - step) & 0xFFFFFFFF
            if "same-stride" in role_index:
                i = role_index["same-stride"]
                mem[i] = (int(mem[i]) + step) & 0xFFFFFFFF

    seq = DumpSequence(
        game_label=config.game_label,
        word_count=config.word_count,
        dumps=dumps,
        ground_truth=GroundTruth(locations, enc, distractors),
        collection_policy=config.collection.descriptor(),
        rng_seed=config.seed,
    )
    if return_log:
        return seq, masks
    return seq


def self_check(seq: DumpSequence, masks: list[int]) -> list[int]:
    """Ordinals whose ground-truth words fail to decode to the on-screen value."""
    enc = seq.ground_truth.encoding
    bad = []
    for d, m in zip(seq.dumps, masks):
        state = EncoderState(footprint=enc.footprint, current_mask=m)
        words = [int(d.words[i]) for i in seq.ground_truth.locations]
        if decode(enc, state, words) != d.on_screen_value:
            bad.append(d.ordinal)
    return bad
