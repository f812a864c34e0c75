"""A small campaign written to disk, then re-read as a report.

Writes to ./campaign-demo (csv, json and one svg per row group).
"""
import sys
from pathlib import Path

from locsim.campaign import CampaignConfig, run_campaign, write_campaign

out = Path(sys.argv[1] if len(sys.argv) > 1 else "campaign-demo")
config = CampaignConfig.from_json({
    "seed": 7,
    "archives": [{"preset": "assaultcube", "encoding": "rnc", "word_count": 4096},
                 {"preset": "assaultcube", "encoding": "offset", "word_count": 4096}],
    "attacks": [{"logic": "offset", "mode": "greedy", "policy": "binned", "n": "1..6", "cap": 200}],
    "formats": ["csv", "json", "svg"],
})
result = run_campaign(config)
write_campaign(result, config, out)
for row in result.rows:
    print(f"{row.encoding:>7} n={row.n}  median left {row.p50:>5}  success {row.mean_success_rate:.2f}")
print("report written to", out.resolve())
