"""Command line entry point: generate, attack, campaign, report.

Exit codes: 0 success, 2 configuration error, 3 data error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import warnings
from dataclasses import replace
from pathlib import Path

from .aggregation import ReportError, aggregate, emit_report
from .campaign import (AttackSpec, CampaignConfig, cell_seed, parse_range, run_campaign, run_cell,
                       write_campaign, write_traces)
from .core import ArchiveError, read_archive, write_archive
from .encodings import EncodingError
from .gamesim import ConfigError, SimConfig, simulate
from .pruning import PreconditionError, SuccessCriterion, trace_from_json
from .selection import SelectionPolicy

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3


def _load_policy(text: str) -> SelectionPolicy:
    path = Path(text)
    if path.is_file():
        obj = json.loads(path.read_text())
    elif text.lstrip().startswith("{"):
        obj = json.loads(text)
    elif text.startswith("rapid"):
        return SelectionPolicy.rapid(int(text.split(":")[-1].removeprefix("rapid")))
    else:
        obj = {"kind": text}
    return SelectionPolicy.from_json(obj)


def cmd_generate(args) -> int:
    cfg = SimConfig.load(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    seq = simulate(cfg)
    write_archive(seq, args.out)
    gt = seq.ground_truth
    print(f"word_count {seq.word_count}")
    print(f"dumps {len(seq.dumps)}")
    print(f"ground_truth {gt.encoding.kind} at {list(gt.locations)}"
          + (f", distractors {dict(sorted(gt.distractors.items()))}" if gt.distractors else ""))
    return EXIT_OK


def cmd_attack(args) -> int:
    seq = read_archive(args.archive)
    try:
        policy = _load_policy(args.policy)
        crits = [SuccessCriterion.parse(c) for c in args.criteria] if args.criteria else None
        spec = {"logic": args.logic, "mode": args.mode, "policy": policy.to_json(),
                "n": args.n, "cap": args.cap}
        if crits:
            spec["criteria"] = [c.to_json() for c in crits]
    except (ValueError, json.JSONDecodeError) as e:
        raise ConfigError("attack", str(e)) from None
    attack = AttackSpec.from_json(spec)
    lo, hi = attack.lengths
    traces = []
    for n in range(lo, hi + 1):
        traces.extend(run_cell(seq, attack, n, cell_seed(args.seed, seq.game_label, attack.logic,
                                                          policy.label, n)))
    out = Path(args.out)
    write_traces(traces, out / f"{seq.game_label}_{attack.logic}_{attack.mode}_{policy.label}.jsonl")
    print(f"{len(traces)} traces written to {out}")
    return EXIT_OK


def cmd_campaign(args) -> int:
    config = CampaignConfig.load(args.config)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = run_campaign(config)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    write_campaign(result, config, args.out)
    print(f"{len(result.rows)} report rows written to {args.out}")
    return EXIT_OK if result.ok else EXIT_DATA


def cmd_report(args) -> int:
    files = sorted(Path(args.traces).rglob("*.jsonl"))
    files = [f for f in files if f.name != "timing.jsonl"]
    if not files:
        raise ReportError(f"no trace files under {args.traces}")
    groups = {}
    for f in files:
        for line in f.read_text().splitlines():
            if line.strip():
                t = trace_from_json(json.loads(line))
                groups.setdefault((t.mode, t.game_label, t.logic, t.policy), []).append(t)
    rows = []
    for (mode, *_), traces in sorted(groups.items()):
        if mode == "greedy":
            rows.extend(aggregate(traces, final_only=True))
        else:
            for label in sorted(traces[0].records[0].recall_under):
                rows.extend(aggregate(traces, criterion=label, final_only=True))
    rows.sort(key=lambda r: (r.game_label, r.logic, r.mode, r.criterion, r.n))
    emit_report(rows, [f.strip() for f in args.formats.split(",") if f.strip()], args.out)
    print(f"{len(rows)} report rows written to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="locsim", description="Simulated resource localisation attacks.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="simulate a game run and write a dump archive")
    g.add_argument("--config", required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int)
    g.set_defaults(func=cmd_generate)

    a = sub.add_parser("attack", help="attack one archive with one logic")
    a.add_argument("--archive", required=True)
    a.add_argument("--logic", required=True)
    a.add_argument("--mode", choices=("greedy", "statistical"), default="greedy")
    a.add_argument("--policy", required=True, help="JSON file, inline JSON, or a policy name")
    a.add_argument("--n", required=True, help="length range a..b")
    a.add_argument("--cap", type=int, default=1000)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--criteria", nargs="*", help="e.g. top_k:100 threshold:0.9 score_drop:0.2")
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_attack)

    c = sub.add_parser("campaign", help="run a campaign matrix")
    c.add_argument("--config", required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_campaign)

    r = sub.add_parser("report", help="aggregate trace files into reports")
    r.add_argument("--traces", required=True)
    r.add_argument("--formats", default="csv,json,svg")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArchiveError, ReportError, PreconditionError, EncodingError, OSError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA


def digest_dir(path) -> str:
    """sha256 over relative paths and contents, for reproducibility checks."""
    h = hashlib.sha256()
    root = Path(path)
    for f in sorted(p for p in root.rglob("*") if p.is_file()):
        h.update(str(f.relative_to(root)).encode())
        h.update(f.read_bytes())
    return h.hexdigest()


if __name__ == "__main__":
    sys.exit(main())
