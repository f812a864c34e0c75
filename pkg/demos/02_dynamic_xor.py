"""When the mask keeps moving.

With a dynamic xor mask the exact logics give up, but the counter still
changes exactly when the game says it does.  Greedy change/no-change
pruning can't get below a few hundred candidates, while scoring every
word by how often it fits the xor relation puts the counter near the top.
"""
from locsim import presets, simulate
from locsim.aggregation import aggregate
from locsim.pruning import greedy_attack_many, statistical_attack_many
from locsim.selection import SelectionPolicy, enumerate_subsequences

seq = simulate(presets.supertux("dyn_xor_uor", fast=True, word_count=2 ** 15))
print(f"fast collection: {len(seq.dumps)} dumps")

rapid = SelectionPolicy.rapid(5000)
for n in (4, 8, 16, 24):
    sels = enumerate_subsequences(seq, rapid, n, cap=200, seed=n)
    g = aggregate(greedy_attack_many(seq, sels, "change_no_change"), final_only=True)[0]
    s = aggregate(statistical_attack_many(seq, sels, "xor"), final_only=True)[0]
    print(f"n={n:>2}  greedy CNC: median {g.p50:>5} left (success {g.mean_success_rate:.2f})"
          f"   statistical xor: median rank {s.p50}")
