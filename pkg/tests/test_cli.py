import json
import subprocess
import sys

import pytest

from locsim import presets
from locsim.campaign import CampaignConfig, cell_seed, parse_range, run_campaign
from locsim.cli import digest_dir, main
from locsim.gamesim import ConfigError


@pytest.fixture
def st_config(tmp_path):
    cfg = presets.supertux("xor", word_count=4096)
    p = tmp_path / "st.json"
    p.write_text(json.dumps(cfg.to_json()))
    return p


def test_generate_prints_summary(tmp_path, st_config, capsys):
    assert main(["generate", "--config", str(st_config), "--out", str(tmp_path / "a")]) == 0
    out = capsys.readouterr().out
    assert "word_count 4096" in out and "dumps 25" in out and "xor" in out
    assert main(["generate", "--config", str(st_config), "--out", str(tmp_path / "b")]) == 0
    assert digest_dir(tmp_path / "a") == digest_dir(tmp_path / "b")
    assert main(["generate", "--config", str(st_config), "--out", str(tmp_path / "c"), "--seed", "3"]) == 0
    assert digest_dir(tmp_path / "a") != digest_dir(tmp_path / "c")


def test_generate_bad_mix(tmp_path, capsys):
    obj = presets.supertux(word_count=1024).to_json()
    obj["background_mix"] = {"static": 0.7, "zeros": 0.7}
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(obj))
    assert main(["generate", "--config", str(p), "--out", str(tmp_path / "x")]) == 2
    assert "background_mix" in capsys.readouterr().err


def test_attack_trace_counts(tmp_path, st_config):
    arc = tmp_path / "arc"
    main(["generate", "--config", str(st_config), "--out", str(arc)])
    out = tmp_path / "tr"
    assert main(["attack", "--archive", str(arc), "--logic", "base", "--mode", "greedy",
                 "--policy", "binned", "--n", "1..2", "--out", str(out)]) == 0
    lines = next(out.glob("*.jsonl")).read_text().splitlines()
    assert len(lines) == 25 + 273


def test_attack_rejects_bad_policy(tmp_path, st_config, capsys):
    arc = tmp_path / "arc"
    main(["generate", "--config", str(st_config), "--out", str(arc)])
    rc = main(["attack", "--archive", str(arc), "--logic", "add_xor", "--policy", "fully_random",
               "--n", "2..3", "--out", str(tmp_path / "t")])
    assert rc == 2
    assert "requires incremental selection" in capsys.readouterr().err


def test_attack_missing_archive(tmp_path):
    assert main(["attack", "--archive", str(tmp_path / "none"), "--logic", "xor", "--policy", "binned",
                 "--n", "2", "--out", str(tmp_path / "t")]) == 3


def test_statistical_three_criteria_and_report(tmp_path, st_config):
    arc = tmp_path / "arc"
    main(["generate", "--config", str(st_config), "--out", str(arc)])
    tr = tmp_path / "tr"
    policy = tmp_path / "policy.json"
    policy.write_text('{"kind": "binned"}')
    assert main(["attack", "--archive", str(arc), "--logic", "xor", "--mode", "statistical",
                 "--policy", str(policy), "--n", "2..3", "--cap", "50", "--out", str(tr),
                 "--criteria", "top_k:100", "threshold:0.9", "score_drop:0.2"]) == 0
    for line in next(tr.glob("*.jsonl")).read_text().splitlines():
        rec = json.loads(line)["records"][-1]
        assert set(rec["recall_under"]) == {"top_k:100", "threshold:0.9", "score_drop:0.2"}
    rep = tmp_path / "rep"
    assert main(["report", "--traces", str(tr), "--formats", "csv,svg", "--out", str(rep)]) == 0
    rows = (rep / "report.csv").read_text().splitlines()
    assert len(rows) == 1 + 3 * 2
    assert len(list(rep.glob("*.svg"))) == 3


def test_report_without_traces(tmp_path):
    (tmp_path / "empty").mkdir()
    assert main(["report", "--traces", str(tmp_path / "empty"), "--out", str(tmp_path / "r")]) == 3


def small_campaign(seed=4):
    obj = {
        "seed": seed,
        "archives": [{"preset": "supertux", "encoding": "offset", "word_count": 2048},
                     {"preset": "assaultcube", "encoding": "add_xor", "word_count": 2048}],
        "attacks": [{"logic": "offset", "mode": "greedy", "policy": "binned", "n": "1..4", "cap": 40},
                    {"logic": "add_xor", "mode": "greedy", "policy": "incremental", "n": "2..3",
                     "archives": ["assaultcube-add_xor"]},
                    {"logic": "xor", "mode": "statistical", "policy": {"kind": "rapid", "t_max_ms": 3000},
                     "n": "2..3", "cap": 30}],
        "formats": ["csv", "json"],
    }
    return obj


def test_campaign_command(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(small_campaign()))
    assert main(["campaign", "--config", str(cfg), "--out", str(tmp_path / "o1")]) == 0
    assert main(["campaign", "--config", str(cfg), "--out", str(tmp_path / "o2")]) == 0
    a = (tmp_path / "o1/report.csv").read_bytes()
    assert a == (tmp_path / "o2/report.csv").read_bytes()
    assert (tmp_path / "o1/timing.jsonl").exists()
    assert list((tmp_path / "o1/traces").glob("*.jsonl"))


def test_campaign_parallel_invariance(monkeypatch):
    cfg = CampaignConfig.from_json(small_campaign())
    one = run_campaign(cfg, parallelism=1).rows
    monkeypatch.setenv("LOCSIM_THREADS", "3")
    assert run_campaign(cfg).rows == one


def test_campaign_empty_cell_exit_code(tmp_path):
    obj = small_campaign()
    obj["attacks"] = [{"logic": "base", "mode": "greedy", "policy": "binned", "n": "8..9"}]
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(obj))
    with pytest.warns(UserWarning):
        cc = CampaignConfig.load(cfg)
        result = run_campaign(cc, parallelism=1)
    assert not result.ok
    assert main(["campaign", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3


def test_campaign_config_errors():
    obj = small_campaign()
    obj["attacks"][0]["policy"] = "fully_random"
    obj["attacks"][0]["logic"] = "xor_add"
    with pytest.raises(ConfigError) as err:
        CampaignConfig.from_json(obj)
    assert err.value.field == "attacks[0].policy"
    with pytest.raises(ConfigError):
        CampaignConfig.from_json({**small_campaign(), "archives": []})
    with pytest.raises(ConfigError):
        CampaignConfig.from_json({**small_campaign(), "parallelism": 0})


def test_seed_derivation_and_ranges():
    assert cell_seed(1, "a", "xor", "binned", 3) == cell_seed(1, "a", "xor", "binned", 3)
    assert cell_seed(1, "a", "xor", "binned", 3) != cell_seed(1, "a", "xor", "binned", 4)
    assert parse_range("2..5") == (2, 5) and parse_range("3") == (3, 3) and parse_range([1, 2]) == (1, 2)
    with pytest.raises(ValueError):
        parse_range("5..2")


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "locsim", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "campaign" in r.stdout
