"""Locating an obfuscated coin counter.

A simulated platformer collects coins 100 -> 107 while memory is dumped
every frame.  Each encoding hides the counter differently; the matching
pruning logic still finds it, a mismatched one loses it.

Run with ``python3 demos/01_static_encodings.py``.
"""
from locsim import presets, simulate
from locsim.aggregation import aggregate
from locsim.pruning import greedy_attack_many
from locsim.selection import SelectionPolicy, enumerate_subsequences

# A smaller address space keeps this quick; the behaviour is the same.
WORDS = 2 ** 14

# %% What the dump sequence looks like
seq = simulate(presets.supertux("xor", word_count=WORDS))
print(f"{len(seq.dumps)} dumps of {WORDS} words, resource values {sorted(set(seq.values.tolist()))}")
print("ground truth at word", seq.ground_truth.locations)

# %% Matched logic per encoding
for enc in presets.STATIC_ENCODINGS:
    seq = simulate(presets.supertux(enc, word_count=WORDS))
    logic = presets.MATCHED_LOGIC[enc]
    policy = SelectionPolicy(presets.LOGIC_SELECTION[logic])
    line = []
    for n in (2, 4, 8):
        sels = enumerate_subsequences(seq, policy, n, cap=200, seed=n)
        row = aggregate(greedy_attack_many(seq, sels, logic), final_only=True)[0]
        line.append(f"n={n}: {row.p50:>5} left, success {row.mean_success_rate:.2f}")
    print(f"{enc:>8} / {logic:<8}", " | ".join(line))

# %% A mismatched logic: the add-then-xor test on an xor-then-add counter
seq = simulate(presets.supertux("xor_add", word_count=WORDS))
for n in range(2, 9):
    sels = enumerate_subsequences(seq, SelectionPolicy.incremental(), n, cap=200, seed=n)
    row = aggregate(greedy_attack_many(seq, sels, "add_xor"), final_only=True)[0]
    print(f"add_xor on xor_add, n={n}: success {row.mean_success_rate:.2f}")
