import json
import subprocess
import sys

import pytest

from penaltysim.cli import ConfigInvalid, ScenarioConfig, load_config, main


def run_json(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_run_honest(capsys):
    code, res = run_json(capsys, ["run", "--variant", "Ours", "--n", "4"])
    assert code == 0
    assert set(res["net_balances"].values()) == {0}


def test_run_fig3(capsys):
    code, res = run_json(capsys, ["run", "--variant", "Ours", "--n", "4",
                                  "--schedule", "fig3_abort"])
    assert code == 0
    assert [res["net_balances"][k] for k in "1234"] == [-2, 1, 1, 0]


def test_run_remark2_fails(capsys):
    code, res = run_json(capsys, ["run", "--variant", "MergedTau34", "--n", "4",
                                  "--schedule", "remark2"])
    assert code == 1
    assert not res["verdict"]["condition_a"]["passed"]


def test_run_q_scaling(capsys):
    code, res = run_json(capsys, ["run", "--variant", "Naive2", "--n", "2", "--q", "3",
                                  "--schedule", "naive2_steal"])
    assert code == 1 and res["net_balances"]["1"] == -3


@pytest.mark.parametrize("argv", [
    ["run", "--variant", "Ours", "--n", "2"],
    ["run", "--variant", "Bogus", "--n", "4"],
    ["run", "--variant", "Ours", "--n", "4", "--q", "0"],
    ["run", "--variant", "Ours", "--n", "4", "--schedule", "nope"],
    ["run", "--variant", "Ours", "--n", "4", "--corrupted", "9"],
    ["run", "--variant", "Ours", "--n", "4", "--corrupted", "a,b"],
    ["audit", "--variant", "Ours", "--n", "7"],
    ["show-graph", "--variant", "BK2", "--n", "3"],
])
def test_invalid_input_exits_2(argv, capsys):
    assert main(argv) == 2
    assert "error:" in capsys.readouterr().err


def test_config_file_and_overrides(tmp_path, capsys):
    cfg = tmp_path / "s.yaml"
    cfg.write_text("variant: OursReduced\nl: 1\nn: 6\nq: 2\nschedule: follow_honest\n"
                   f"output:\n  trace: {tmp_path}/t.jsonl\n  result: {tmp_path}/r.json\n")
    c = load_config(str(cfg))
    assert c.variant == "OursReduced(1)" and c.n == 6 and c.q == 2
    code, res = run_json(capsys, ["run", "--config", str(cfg), "--q", "3"])
    assert code == 0 and res["q"] == 3 and res["variant"] == "OursReduced(1)"
    assert json.loads((tmp_path / "r.json").read_text()) == res
    rows = [json.loads(x) for x in (tmp_path / "t.jsonl").read_text().splitlines()]
    assert rows and {r["kind"] for r in rows} == {"deposit", "claim"}


def test_config_explicit_schedule(tmp_path, capsys):
    cfg = tmp_path / "s.yaml"
    cfg.write_text("variant: Naive2\nn: 2\nschedule:\n  corrupted: [2]\n  actions:\n"
                   "    - [deposit, 2, skip]\n    - [claim, 1, claim]\n")
    code, res = run_json(capsys, ["run", "--config", str(cfg)])
    assert code == 1 and res["net_balances"]["1"] == -1


@pytest.mark.parametrize("text", ["variant: Ours\nbogus: 1\n", "- a\n- b\n", "d: 2\n",
                                  "n: [unclosed\n"])
def test_bad_configs(tmp_path, text):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text(text)
    with pytest.raises(ConfigInvalid):
        load_config(str(cfg)).validate()


def test_missing_config_file():
    with pytest.raises(ConfigInvalid):
        load_config("/nonexistent/cfg.yaml")


def test_default_config_valid():
    assert str(ScenarioConfig().validate()) == "Ours"


def test_traces_byte_identical(tmp_path, capsys):
    for k in (1, 2):
        main(["run", "--variant", "OursEquiv", "--n", "5", "--schedule", "equiv_double_refund",
              "--seed", "7", "--trace", str(tmp_path / f"t{k}.jsonl")])
    capsys.readouterr()
    assert (tmp_path / "t1.jsonl").read_bytes() == (tmp_path / "t2.jsonl").read_bytes()


def test_audit_command(tmp_path, capsys):
    out = tmp_path / "rep.json"
    assert main(["audit", "--variant", "BKn", "--n", "3..4", "--json", str(out)]) == 0
    text = capsys.readouterr().out
    assert "BKn" in text and "equivalent" in text
    rows = json.loads(out.read_text())
    assert [(r["rounds"], r["calls"]) for r in rows] == [(6, 4), (8, 6)]
    assert all(r["compensation"] == "equivalent" for r in rows)


def test_audit_flags_naive2(capsys):
    assert main(["audit", "--variant", "Naive2", "--n", "2"]) == 1


def test_list_and_show(capsys):
    assert main(["list-variants"]) == 0
    out = capsys.readouterr().out.split()
    assert "OursReduced(l)" in out and "MergedTau34" in out
    assert main(["show-graph", "--variant", "Ours", "--n", "4"]) == 0
    assert "(8) P1 →[2q, τ1]{T3} P3" in capsys.readouterr().out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "penaltysim", "run", "--variant", "Ours",
                          "--n", "3"], capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["ok"]
