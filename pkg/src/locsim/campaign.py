"""Campaign matrices: archives x attacks x lengths, run on a process pool.

Every cell ``(archive, logic, mode, policy, n)`` gets its own seed derived
by hashing, so results do not depend on matrix order or on how many
workers ran it.  Wall-clock timings go to a separate log.
"""
from __future__ import annotations

import hashlib
import json
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import presets
from .aggregation import aggregate, emit_report
from .core import DumpSequence, read_archive
from .gamesim import ConfigError, SimConfig, simulate
from .pruning import (DEFAULT_CRITERION, LOGIC_NAMES, get_logic, greedy_attack_many,
                      statistical_attack_many, SuccessCriterion)
from .selection import SelectionPolicy, enumerate_subsequences

MODES = ("greedy", "statistical")


def parse_range(text) -> tuple[int, int]:
    """``"a..b"``, ``"n"`` or ``[a, b]`` -> inclusive ``(a, b)``."""
    if isinstance(text, (list, tuple)):
        lo, hi = (int(v) for v in text)
    elif isinstance(text, int):
        lo = hi = text
    else:
        a, sep, b = str(text).partition("..")
        lo, hi = (int(a), int(b)) if sep else (int(a), int(a))
    if lo < 1 or hi < lo:
        raise ValueError(f"bad length range {text!r}")
    return lo, hi


def cell_seed(campaign_seed: int, archive: str, logic: str, policy: str, n: int) -> int:
    blob = json.dumps([int(campaign_seed), archive, logic, policy, int(n)]).encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "little")


@dataclass(frozen=True)
class AttackSpec:
    logic: str
    mode: str
    policy: SelectionPolicy
    lengths: tuple[int, int]
    cap: int = 1000
    criteria: tuple = (DEFAULT_CRITERION,)
    archives: tuple = ()  # restrict to these archive labels; empty means all

    def validate(self, where: str = "attack"):
        if self.logic not in LOGIC_NAMES:
            raise ConfigError(f"{where}.logic", f"unknown logic {self.logic!r}")
        if self.mode not in MODES:
            raise ConfigError(f"{where}.mode", f"unknown mode {self.mode!r}")
        if get_logic(self.logic).unit_stride and self.policy.kind != "incremental":
            raise ConfigError(f"{where}.policy", f"{self.logic} logic requires incremental selection")
        if self.cap < 1:
            raise ConfigError(f"{where}.cap", "cap must be >= 1")

    @classmethod
    def from_json(cls, obj: dict, where: str = "attack") -> AttackSpec:
        try:
            policy = obj.get("policy", {"kind": "fully_random"})
            if isinstance(policy, str):
                policy = {"kind": policy}
            crit = tuple(SuccessCriterion.from_json(c) for c in obj.get("criteria", [DEFAULT_CRITERION.to_json()]))
            spec = cls(obj["logic"], obj.get("mode", "greedy"), SelectionPolicy.from_json(policy),
                       parse_range(obj.get("n", "1..8")), int(obj.get("cap", 1000)), crit,
                       tuple(obj.get("archives", ())))
        except KeyError as e:
            raise ConfigError(f"{where}.{e.args[0]}", "missing field") from None
        except (TypeError, ValueError) as e:
            raise ConfigError(where, str(e)) from None
        spec.validate(where)
        return spec


@dataclass
class CampaignConfig:
    archives: list          # (label, SimConfig | path)
    attacks: list
    seed: int = 0
    parallelism: int = 1
    formats: tuple = ("csv", "json", "svg")
    base_dir: Path = field(default_factory=Path)

    @classmethod
    def from_json(cls, obj: dict, base_dir=".") -> CampaignConfig:
        base_dir = Path(base_dir)
        if not isinstance(obj, dict):
            raise ConfigError("", "campaign config must be an object")
        archives = []
        for k, a in enumerate(obj.get("archives", [])):
            where = f"archives[{k}]"
            if "path" in a:
                path = base_dir / a["path"]
                archives.append((a.get("label", path.name), path))
            elif "preset" in a:
                maker = {"supertux": presets.supertux, "assaultcube": presets.assaultcube}.get(a["preset"])
                if maker is None:
                    raise ConfigError(f"{where}.preset", f"unknown preset {a['preset']!r}")
                try:
                    cfg = maker(a.get("encoding", "base"), seed=int(a.get("seed", presets.REFERENCE_SEED)),
                                word_count=int(a.get("word_count", presets.TEST_WORD_COUNT)),
                                fast=bool(a.get("fast", False)))
                except KeyError:
                    raise ConfigError(f"{where}.encoding", f"unknown encoding {a.get('encoding')!r}") from None
                cfg.validate()
                archives.append((a.get("label", cfg.game_label), cfg))
            elif "config" in a:
                cfg = SimConfig.from_json(a["config"])
                cfg.validate()
                archives.append((a.get("label", cfg.game_label), cfg))
            else:
                raise ConfigError(where, "needs one of path, preset, config")
        if not archives:
            raise ConfigError("archives", "at least one archive required")
        labels = [lab for lab, _ in archives]
        if len(set(labels)) != len(labels):
            raise ConfigError("archives", "archive labels must be unique")
        attacks = [AttackSpec.from_json(a, f"attacks[{k}]") for k, a in enumerate(obj.get("attacks", []))]
        if not attacks:
            raise ConfigError("attacks", "at least one attack required")
        par = int(obj.get("parallelism", 1))
        if par < 1:
            raise ConfigError("parallelism", "must be >= 1")
        return cls(archives, attacks, int(obj.get("seed", 0)), par,
                   tuple(obj.get("formats", ("csv", "json", "svg"))), base_dir)

    @classmethod
    def load(cls, path) -> CampaignConfig:
        path = Path(path)
        try:
            obj = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise ConfigError("", f"invalid JSON: {e}") from None
        return cls.from_json(obj, path.parent)


def effective_parallelism(configured: int) -> int:
    env = os.environ.get("LOCSIM_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ConfigError("LOCSIM_THREADS", f"not an integer: {env!r}") from None
        if value < 1:
            raise ConfigError("LOCSIM_THREADS", "must be >= 1")
        return value
    return configured


def load_archive(source) -> DumpSequence:
    return simulate(source) if isinstance(source, SimConfig) else read_archive(source)


def run_cell(seq: DumpSequence, attack: AttackSpec, n: int, seed: int):
    """All traces for one length: enumerate (or sample) selections, attack each."""
    sels = enumerate_subsequences(seq, attack.policy, n, cap=attack.cap, seed=seed)
    if not sels:
        return []
    if attack.mode == "greedy":
        return greedy_attack_many(seq, sels, attack.logic, policy=attack.policy.label)
    return statistical_attack_many(seq, sels, attack.logic, attack.criteria, policy=attack.policy.label)


_WORKER_ARCHIVES: dict = {}


def _init_worker(archives):
    _WORKER_ARCHIVES.clear()
    _WORKER_ARCHIVES.update(archives)


def _run_job(job):
    label, attack, n, seed = job
    start = time.perf_counter()
    traces = run_cell(_WORKER_ARCHIVES[label], attack, n, seed)
    return traces, time.perf_counter() - start


@dataclass
class CampaignResult:
    rows: list
    traces: dict            # (archive label, attack index) -> list of traces
    timings: list
    empty_cells: list

    @property
    def ok(self) -> bool:
        return not self.empty_cells


def run_campaign(config: CampaignConfig, parallelism: int | None = None) -> CampaignResult:
    par = effective_parallelism(config.parallelism) if parallelism is None else parallelism
    archives = {label: load_archive(src) for label, src in config.archives}
    jobs = []
    for label, _ in config.archives:
        for k, attack in enumerate(config.attacks):
            if attack.archives and label not in attack.archives:
                continue
            lo, hi = attack.lengths
            for n in range(lo, hi + 1):
                jobs.append((label, attack, n,
                             cell_seed(config.seed, label, attack.logic, attack.policy.label, n), k))
    payload = [(label, attack, n, seed) for label, attack, n, seed, _ in jobs]
    if par == 1:
        _init_worker(archives)
        results = [_run_job(j) for j in payload]
    else:
        with ProcessPoolExecutor(max_workers=par, initializer=_init_worker, initargs=(archives,)) as pool:
            results = list(pool.map(_run_job, payload))

    traces, timings, empty = {}, [], []
    for (label, attack, n, seed, k), (cell_traces, seconds) in zip(jobs, results):
        timings.append({"archive": label, "logic": attack.logic, "mode": attack.mode,
                        "policy": attack.policy.label, "n": n, "traces": len(cell_traces),
                        "seconds": round(seconds, 6)})
        if not cell_traces:
            empty.append((label, attack.logic, attack.mode, attack.policy.label, n))
            warnings.warn(f"no conforming subsequences for {label} {attack.logic} "
                          f"{attack.policy.label} n={n}; row omitted")
            continue
        for t in cell_traces:
            t.game_label = label
        traces.setdefault((label, k), []).extend(cell_traces)

    rows = []
    for (label, k), group in traces.items():
        attack = config.attacks[k]
        crits = attack.criteria if attack.mode == "statistical" else (DEFAULT_CRITERION,)
        for crit in crits:
            rows.extend(aggregate(group, criterion=crit, final_only=True))
    rows.sort(key=lambda r: (r.game_label, r.logic, r.mode, r.criterion, r.n))
    return CampaignResult(rows, traces, timings, empty)


def write_traces(traces, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for t in traces:
            fh.write(json.dumps(t.to_json(), sort_keys=True) + "\n")


def write_campaign(result: CampaignResult, config: CampaignConfig, out_dir) -> None:
    out = Path(out_dir)
    emit_report(result.rows, config.formats, out)
    for (label, k), group in sorted(result.traces.items()):
        a = config.attacks[k]
        write_traces(group, out / "traces" / f"{label}_{a.logic}_{a.mode}_{a.policy.label}_{k}.jsonl")
    with open(out / "timing.jsonl", "w") as fh:
        for t in result.timings:
            fh.write(json.dumps(t) + "\n")
