"""Dump sequences and the on-disk dump archive.

Memory is one flat region of little-endian 32-bit words; a candidate
location is a word index.  An archive is a directory::

    <dir>/manifest.json
    <dir>/dumps/000000.bin   # word_count * 4 bytes each
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .encodings import EncoderState, EncodingError, EncodingSpec, decode

FORMAT_VERSION = 1
DISTRACTOR_ROLES = ("duplicate-display", "opposite-stride", "same-stride")
COLLECTION_KINDS = ("paced", "fast", "custom")
_LE_U32 = np.dtype("<u4")


class ArchiveError(ValueError):
    """Malformed or inconsistent dump archive."""


@dataclass(eq=False)
class Dump:
    ordinal: int
    timestamp_ms: int
    on_screen_value: int
    words: np.ndarray = field(repr=False)

    def __eq__(self, other):
        if not isinstance(other, Dump):
            return NotImplemented
        return (self.ordinal == other.ordinal
                and self.timestamp_ms == other.timestamp_ms
                and self.on_screen_value == other.on_screen_value
                and self.words.dtype == other.words.dtype
                and np.array_equal(self.words, other.words))


@dataclass(frozen=True)
class GroundTruth:
    locations: tuple[int, ...]
    encoding: EncodingSpec
    distractors: dict[int, str] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "locations": list(self.locations),
            "distractors": [{"index": i, "role": r} for i, r in sorted(self.distractors.items())],
        }


@dataclass(eq=False)
class DumpSequence:
    """An ordered run of dumps plus the defender's ground truth.

    Immutable by convention once built; attacks share it freely.
    """

    game_label: str
    word_count: int
    dumps: list[Dump] = field(repr=False)
    ground_truth: GroundTruth = None
    collection_policy: dict = field(default_factory=lambda: {"kind": "custom"})
    rng_seed: int = 0

    def __len__(self):
        return len(self.dumps)

    def __eq__(self, other):
        if not isinstance(other, DumpSequence):
            return NotImplemented
        return (self.game_label == other.game_label
                and self.word_count == other.word_count
                and self.rng_seed == other.rng_seed
                and self.collection_policy == other.collection_policy
                and self.ground_truth == other.ground_truth
                and self.dumps == other.dumps)

    @cached_property
    def matrix(self) -> np.ndarray:
        """All words as a ``(len(dumps), word_count)`` uint32 array."""
        if not self.dumps:
            return np.zeros((0, self.word_count), dtype=np.uint32)
        return np.stack([np.asarray(d.words, dtype=np.uint32) for d in self.dumps])

    @cached_property
    def values(self) -> np.ndarray:
        return np.array([d.on_screen_value for d in self.dumps], dtype=np.int64)

    @cached_property
    def timestamps(self) -> np.ndarray:
        return np.array([d.timestamp_ms for d in self.dumps], dtype=np.int64)


@dataclass(frozen=True)
class SelectedSequence:
    """An attacker scan subsequence: strictly increasing dump ordinals."""

    source: DumpSequence = field(repr=False)
    indices: tuple[int, ...] = ()

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if not idx:
            raise ValueError("selected sequence must be non-empty")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError(f"indices must be strictly increasing: {idx}")
        if idx[0] < 0 or idx[-1] >= len(self.source.dumps):
            raise ValueError(f"indices out of range for {len(self.source.dumps)} dumps")

    def __len__(self):
        return len(self.indices)

    def __hash__(self):
        return hash((id(self.source), self.indices))

    def __eq__(self, other):
        if not isinstance(other, SelectedSequence):
            return NotImplemented
        return self.source is other.source and self.indices == other.indices

    @property
    def values(self) -> list[int]:
        return [self.source.dumps[i].on_screen_value for i in self.indices]


def validate_sequence(seq: DumpSequence) -> list[str]:
    """Return human-readable invariant violations; empty means well formed."""
    out = []
    if seq.word_count <= 0:
        out.append("word_count must be positive")
    prev_ts = None
    for pos, d in enumerate(seq.dumps):
        if d.ordinal != pos:
            out.append(f"ordinal not consecutive at {d.ordinal}")
        if d.timestamp_ms < 0 or (prev_ts is not None and d.timestamp_ms <= prev_ts):
            out.append(f"timestamp not increasing at {d.ordinal}")
        prev_ts = d.timestamp_ms
        if d.on_screen_value < 0:
            out.append(f"negative on-screen value at {d.ordinal}")
        if len(d.words) != seq.word_count:
            out.append(f"word count mismatch at {d.ordinal}")

    gt = seq.ground_truth
    if gt is None:
        out.append("ground truth required")
        return out
    if not gt.locations:
        out.append("ground truth has no locations")
    if any(not 0 <= i < seq.word_count for i in gt.locations):
        out.append("location out of range")
    if len(set(gt.locations)) != len(gt.locations):
        out.append("duplicate ground-truth location")
    if len(gt.locations) != gt.encoding.footprint:
        out.append("location count does not match encoding footprint")
    if any(not 0 <= i < seq.word_count for i in gt.distractors):
        out.append("distractor out of range")
    if set(gt.locations) & set(gt.distractors):
        out.append("locations overlap distractors")
    if any(r not in DISTRACTOR_ROLES for r in gt.distractors.values()):
        out.append("unknown distractor role")
    if out or gt.encoding.is_dynamic:
        # dynamic masks are not recorded per dump; only the simulator can check them
        return out
    state = EncoderState.for_spec(gt.encoding)
    for d in seq.dumps:
        try:
            plain = decode(gt.encoding, state, [d.words[i] for i in gt.locations])
        except EncodingError:
            plain = None
        if plain != d.on_screen_value:
            out.append(f"ground truth decode mismatch at {d.ordinal}")
    return out


def _manifest(seq: DumpSequence) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "game_label": seq.game_label,
        "word_count": seq.word_count,
        "rng_seed": seq.rng_seed,
        "collection_policy": seq.collection_policy,
        "encoding": seq.ground_truth.encoding.to_json(),
        "ground_truth": seq.ground_truth.to_json(),
        "dumps": [
            {"file": f"dumps/{d.ordinal:06d}.bin", "ordinal": d.ordinal,
             "timestamp_ms": d.timestamp_ms, "on_screen_value": d.on_screen_value}
            for d in seq.dumps
        ],
    }


def write_archive(seq: DumpSequence, path) -> None:
    problems = validate_sequence(seq)
    if problems:
        raise ArchiveError("refusing to write invalid sequence: " + "; ".join(problems))
    path = Path(path)
    (path / "dumps").mkdir(parents=True, exist_ok=True)
    manifest = _manifest(seq)
    for d, entry in zip(seq.dumps, manifest["dumps"]):
        data = np.asarray(d.words, dtype=np.uint32).astype(_LE_U32, copy=False).tobytes()
        (path / entry["file"]).write_bytes(data)
    tmp = path / "manifest.json.tmp"
    tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    os.replace(tmp, path / "manifest.json")


def read_archive(path) -> DumpSequence:
    path = Path(path)
    try:
        manifest = json.loads((path / "manifest.json").read_text())
    except FileNotFoundError:
        raise ArchiveError(f"no manifest.json in {path}") from None
    except json.JSONDecodeError as exc:
        raise ArchiveError(f"manifest.json is not valid JSON: {exc}") from None

    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise ArchiveError(f"unknown format_version {version!r}")
    if "ground_truth" not in manifest or "encoding" not in manifest:
        raise ArchiveError("ground truth required")
    for key in ("game_label", "word_count", "dumps"):
        if key not in manifest:
            raise ArchiveError(f"manifest missing {key!r}")

    word_count = int(manifest["word_count"])
    try:
        encoding = EncodingSpec.from_json(manifest["encoding"])
    except EncodingError as exc:
        raise ArchiveError(f"bad encoding: {exc}") from None
    gt_obj = manifest["ground_truth"]
    gt = GroundTruth(
        locations=tuple(int(i) for i in gt_obj.get("locations", ())),
        encoding=encoding,
        distractors={int(d["index"]): str(d["role"]) for d in gt_obj.get("distractors", ())},
    )

    dumps = []
    entries = manifest["dumps"]
    on_disk = sorted((path / "dumps").glob("*.bin")) if (path / "dumps").is_dir() else []
    if len(on_disk) != len(entries):
        raise ArchiveError(f"manifest lists {len(entries)} dumps but {len(on_disk)} files exist")
    for entry in entries:
        fpath = path / entry["file"]
        try:
            raw = fpath.read_bytes()
        except FileNotFoundError:
            raise ArchiveError(f"missing dump file {entry['file']}") from None
        if len(raw) != word_count * 4:
            raise ArchiveError(
                f"truncated dump file {entry['file']}: {len(raw)} bytes, expected {word_count * 4}")
        words = np.frombuffer(raw, dtype=_LE_U32).astype(np.uint32)
        dumps.append(Dump(int(entry["ordinal"]), int(entry["timestamp_ms"]),
                          int(entry["on_screen_value"]), words))

    seq = DumpSequence(
        game_label=str(manifest["game_label"]),
        word_count=word_count,
        dumps=dumps,
        ground_truth=gt,
        collection_policy=dict(manifest.get("collection_policy", {"kind": "custom"})),
        rng_seed=int(manifest.get("rng_seed", 0)),
    )
    problems = validate_sequence(seq)
    if problems:
        raise ArchiveError("invalid archive: " + "; ".join(problems))
    return seq
