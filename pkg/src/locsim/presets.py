"""Reference encodings and simulator configurations for the two model games.

``supertux`` collects coins 100 -> 107 with a pre-level dump;
``assaultcube`` fires bullets 20 -> 13 and tracks shots fired in a counter
that moves the opposite way.
"""
from __future__ import annotations

from dataclasses import replace

from .encodings import EncodingSpec
from .gamesim import Collection, SimConfig, no_distractors

MASK = 0xABCD123
ADD_XOR_OFFSET = 17

ENCODINGS = {
    "supertux": {
        "base": EncodingSpec.base(),
        "offset": EncodingSpec.offset_enc(24),
        "xor": EncodingSpec.xor(MASK),
        "add_xor": EncodingSpec.add_xor(ADD_XOR_OFFSET, MASK),
        "xor_add": EncodingSpec.xor_add(MASK, ADD_XOR_OFFSET),
        "rnc": EncodingSpec.rnc((89, 97, 93)),
        "dyn_xor_uor": EncodingSpec.dyn_xor("uor", 300, MASK),
        "dyn_xor_uow": EncodingSpec.dyn_xor("uow", 2, MASK),
    },
    "assaultcube": {
        "base": EncodingSpec.base(),
        "offset": EncodingSpec.offset_enc(24),
        "xor": EncodingSpec.xor(MASK),
        "add_xor": EncodingSpec.add_xor(ADD_XOR_OFFSET, MASK),
        "xor_add": EncodingSpec.xor_add(MASK, ADD_XOR_OFFSET),
        "rnc": EncodingSpec.rnc((2, 3, 5)),
        "dyn_xor_uor": EncodingSpec.dyn_xor("uor", 1500, MASK),
        "dyn_xor_uow": EncodingSpec.dyn_xor("uow", 2, MASK),
    },
}

STATIC_ENCODINGS = ("base", "offset", "xor", "add_xor", "xor_add", "rnc")

# pruning logic that targets each static encoding
MATCHED_LOGIC = {
    "base": "base", "offset": "offset", "xor": "xor",
    "add_xor": "add_xor", "xor_add": "xor_add", "rnc": "rnc",
}

# dump selection used with each logic in the static experiments
LOGIC_SELECTION = {
    "base": "binned", "offset": "binned", "xor": "binned", "rnc": "binned",
    "add_xor": "incremental", "xor_add": "incremental",
    "inc_dec": "fully_random", "change_no_change": "fully_random", "change": "fully_random",
}

REFERENCE_SEED = 20240601
TEST_WORD_COUNT = 2 ** 16


def supertux(encoding: str = "base", seed: int = REFERENCE_SEED, word_count: int = TEST_WORD_COUNT,
             fast: bool = False, **overrides) -> SimConfig:
    """Coins 100 -> 107; paced runs add the pre-level dump (25 dumps)."""
    collection = Collection.fast() if fast else Collection.paced(pre_level_dump=True)
    cfg = SimConfig(
        encoding=ENCODINGS["supertux"][encoding],
        word_count=word_count,
        seed=seed,
        game_label=f"supertux-{encoding}",
        resource_start=100,
        resource_direction=1,
        resource_change_count=7,
        distractors={**no_distractors(), "duplicate_display": True},
        collection=collection,
    )
    return replace(cfg, **overrides)


def assaultcube(encoding: str = "base", seed: int = REFERENCE_SEED, word_count: int = TEST_WORD_COUNT,
                fast: bool = False, **overrides) -> SimConfig:
    """Bullets 20 -> 13 (24 paced dumps) with a shots-fired counter."""
    collection = Collection.fast() if fast else Collection.paced()
    cfg = SimConfig(
        encoding=ENCODINGS["assaultcube"][encoding],
        word_count=word_count,
        seed=seed,
        game_label=f"assaultcube-{encoding}",
        resource_start=20,
        resource_direction=-1,
        resource_change_count=7,
        distractors={**no_distractors(), "opposite_stride": True},
        distractor_offset=0,
        collection=collection,
    )
    return replace(cfg, **overrides)


def reference_campaign(seed: int = 1, word_count: int = TEST_WORD_COUNT, parallelism: int = 1) -> dict:
    """Campaign config covering both games, every static encoding and its matched logic.

    Each archive also gets the cross logics (+xor vs xor+), the generic
    change/no-change logic, and a statistical xor run.
    """
    archives, attacks = [], []
    for game in ("supertux", "assaultcube"):
        for enc in STATIC_ENCODINGS:
            archives.append({"preset": game, "encoding": enc, "word_count": word_count,
                             "label": f"{game}-{enc}"})
    labels = [a["label"] for a in archives]
    for enc in STATIC_ENCODINGS:
        logic = MATCHED_LOGIC[enc]
        attacks.append({"logic": logic, "mode": "greedy", "policy": LOGIC_SELECTION[logic], "n": "1..8",
                        "archives": [lab for lab in labels if lab.endswith("-" + enc)]})
    attacks.append({"logic": "add_xor", "mode": "greedy", "policy": "incremental", "n": "2..8",
                    "archives": [lab for lab in labels if lab.endswith("-xor_add")]})
    attacks.append({"logic": "xor_add", "mode": "greedy", "policy": "incremental", "n": "2..8",
                    "archives": [lab for lab in labels if lab.endswith("-add_xor")]})
    attacks.append({"logic": "change_no_change", "mode": "greedy", "policy": "fully_random", "n": "2..6"})
    attacks.append({"logic": "xor", "mode": "statistical", "policy": "binned", "n": "2..5",
                    "criteria": [{"criterion": "top_k", "value": 100},
                                 {"criterion": "score_drop", "value": 0.2}],
                    "archives": [lab for lab in labels if lab.endswith("-xor")]})
    return {"seed": seed, "parallelism": parallelism, "archives": archives, "attacks": attacks,
            "formats": ["csv", "json", "svg"]}
