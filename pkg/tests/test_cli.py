import json
import shutil
import subprocess
import sys

import pytest

from resilience_lab import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def tiny(tmp_path, capsys):
    path = tmp_path / "tiny.json"
    assert run(capsys, "construct", "rs", "--v", "3", "--w", "2", "--l", "1", "-o", str(path))[0] == 0
    return path


def test_construct_rs(tmp_path, capsys):
    out = tmp_path / "f.json"
    code, stdout, _ = run(capsys, "construct", "rs", "--v", "7", "--w", "4", "--l", "2", "-o", str(out))
    assert code == 0
    summary = json.loads(stdout)
    assert (summary["u"], summary["n"]) == (49, 28)
    assert json.loads(out.read_text())["u"] == 49


def test_construct_rs_rejects_composite(capsys):
    code, _, err = run(capsys, "construct", "rs", "--v", "4", "--w", "2", "--l", "1")
    assert code == 2 and "4 is not prime" in err


def test_construct_sampler(tmp_path, capsys):
    args = ["construct", "sampler", "--v", "13", "--D", "3", "--M", "4", "--w", "4", "--c", "1", "--l", "2"]
    code, _, err = run(capsys, *args)
    assert code == 2 and "--seed" in err
    code, stdout, _ = run(capsys, *args, "--seed", "1", "-o", str(tmp_path / "s.json"))
    assert code == 0 and json.loads(stdout)["u"] == 13 * 3**2
    code, stdout, _ = run(capsys, *args, "--extractor", "mod", "-o", str(tmp_path / "m.json"))
    assert code == 0 and json.loads(stdout)["u"] == 117


def test_construct_missing_option(capsys):
    code, _, err = run(capsys, "construct", "rs", "--v", "5")
    assert code == 2 and "--w" in err


def test_usage_error_exit_code(capsys):
    assert run(capsys, "no-such-command")[0] == 2
    assert run(capsys)[0] == 2


def test_verify_duplicate_and_single(tmp_path, capsys):
    dup, one = tmp_path / "dup.json", tmp_path / "one.json"
    run(capsys, "construct", "explicit", "--v", "3", "--w", "2", "--strings", "0,1;0,1", "-o", str(dup))
    run(capsys, "construct", "explicit", "--v", "3", "--w", "2", "--strings", "0,1", "-o", str(one))
    assert run(capsys, "verify", str(dup), "--checks", "design")[0] == 1
    code, stdout, _ = run(capsys, "verify", str(one), "--checks", "design")
    assert code == 0 and json.loads(stdout)["checks"]["design"]["pass"]


def test_verify_full_suite_cites_bounds(tiny, capsys):
    code, stdout, _ = run(capsys, "verify", str(tiny))
    rep = json.loads(stdout)
    assert code == 0 and rep["pass"]
    assert set(rep["checks"]) == {"design", "balance", "bias", "influence"}
    for name in ("design", "balance", "bias", "influence"):
        assert rep["checks"][name]["provenance"]


def test_verify_unknown_check(tiny, capsys):
    assert run(capsys, "verify", str(tiny), "--checks", "vibes")[0] == 2


def test_verify_malformed_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"version": 1,\n "v": 3,\n')
    code, _, err = run(capsys, "verify", str(bad))
    assert code == 2 and "line" in err and "offset" in err


def test_eval_all_ones(tiny, capsys):
    code, stdout, _ = run(capsys, "eval", str(tiny), "--x", "3f")
    assert code == 0 and json.loads(stdout)["value"] == 1
    assert json.loads(run(capsys, "eval", str(tiny), "--x", "0")[1])["value"] == 0
    assert run(capsys, "eval", str(tiny), "--x", "ff")[0] == 2


def test_bias_exact_vs_mc(tmp_path, capsys):
    fam = tmp_path / "f.json"
    run(capsys, "construct", "rs", "--v", "5", "--w", "4", "--l", "1", "-o", str(fam))  # n = 20
    exact = json.loads(run(capsys, "bias", str(fam), "--exact")[1])["exact"]["float"]
    code, stdout, _ = run(capsys, "bias", str(fam), "--mc", "--samples", "50000", "--seed", "9")
    mc = json.loads(stdout)["mc"]
    assert code == 0 and abs(mc["estimate"] - exact) <= mc["half_width"]
    assert run(capsys, "bias", str(fam), "--mc")[0] == 2


def test_influence_commands(tiny, capsys):
    rep = json.loads(run(capsys, "influence", str(tiny), "--Q", "0,1")[1])
    assert rep["influence"]["value"]["fraction"] == "5/8"
    worst = json.loads(run(capsys, "influence", str(tiny), "--worst", "2")[1])
    assert worst["worst"]["value"]["fraction"] == "5/8"
    tw = json.loads(run(capsys, "influence", str(tiny), "--Q", "0,1", "--mode", "twise", "--t", "4")[1])
    assert tw["influence"]["value"]["fraction"] == "5/8"
    assert run(capsys, "influence", str(tiny), "--Q", "0", "--mode", "mc")[0] == 2


def test_params(capsys):
    code, stdout, _ = run(capsys, "params", "--kind", "rs", "--w", "10", "--l", "2")
    rep = json.loads(stdout)
    assert code == 0 and {"v", "residual", "bias"} <= set(rep)


def test_bounds(capsys):
    code, stdout, _ = run(capsys, "bounds", "binomial", "--v", "4", "--p", "1/100", "--k", "2", "--r", "1")
    assert code == 0 and json.loads(stdout)["holds"]
    assert run(capsys, "bounds", "binomial", "--v", "37", "--p", "1/100", "--k", "6", "--r", "4")[0] == 1
    assert run(capsys, "bounds", "facts")[0] == 0
    assert run(capsys, "bounds", "bias", "--u", "3", "--v", "3", "--w", "2", "--d", "1", "--k", "1")[0] == 0
    assert run(capsys, "bounds", "influence", "--u", "3", "--v", "3", "--w", "2", "--q", "1", "--tau", "2")[0] == 0
    assert run(capsys, "bounds", "kwise-bias", "--r", "2", "--v", "5", "--w", "2", "--eps", "0.1")[0] == 0
    assert run(capsys, "bounds", "influence", "--u", "3")[0] == 2


SAMPLER = ["--v", "8", "--D", "2", "--M", "4", "--w", "4", "--l", "2", "--N", "16"]


def test_sample_commands(tmp_path, capsys):
    code, stdout, _ = run(capsys, "sample", "mgf", *SAMPLER, "--trials", "3", "--seed", "1")
    assert code == 0 and json.loads(stdout)["pass"]
    table = tmp_path / "f.txt"
    table.write_text("\n".join(" ".join(["0.25"] * 4) for _ in range(8)))
    assert run(capsys, "sample", "tail", *SAMPLER, "--seed", "1", "--functions", str(table), "--threshold", "2")[0] == 0
    alpha = json.loads(run(capsys, "sample", "generate", *SAMPLER, "--seed", "1", "--x", "3", "--y", "1,2")[1])["alpha"]
    assert len(alpha) == 4
    assert run(capsys, "sample", "extractor-check", *SAMPLER, "--seed", "2", "--trials", "2")[0] == 0
    assert run(capsys, "sample", "mgf", *SAMPLER)[0] == 2


def test_circuit_roundtrip(tiny, tmp_path, capsys):
    circ = tmp_path / "c.txt"
    code, stdout, _ = run(capsys, "circuit", str(tiny), "-o", str(circ))
    assert code == 0 and json.loads(stdout)["gates"] == 1 + 3 + 9
    assert circ.read_text().startswith("# monotone depth-3 circuit")
    assert run(capsys, "circuit-check", str(tiny), str(circ))[0] == 0
    broken = tmp_path / "b.txt"
    broken.write_text(circ.read_text().replace("g1 OR", "g1 AND"))
    assert run(capsys, "circuit-check", str(tiny), str(broken))[0] == 1


def test_budget_option(tiny, capsys):
    code, _, err = run(capsys, "bias", str(tiny), "--budget", "3")
    assert code == 2 and "budget" in err


def test_manifest_rerun(tiny, tmp_path, capsys):
    man = tmp_path / "m.json"
    args = ["influence", str(tiny), "--Q", "0,1", "--mode", "mc", "--samples", "5000", "--seed", "4"]
    assert run(capsys, *args, "--manifest", str(man))[0] == 0
    rec = json.loads(man.read_text())
    assert rec["rng_seed"] == 4 and "--manifest" not in rec["argv"]
    code, stdout, _ = run(capsys, "rerun", str(man))
    assert code == 0 and json.loads(stdout)["identical"]
    tiny.write_text(tiny.read_text().replace('"l": 1', '"l": 1, "note": 1'))
    assert run(capsys, "rerun", str(man))[0] == 1


def test_rerun_with_out_file(tiny, tmp_path, capsys):
    man, out = tmp_path / "m.json", tmp_path / "o.json"
    assert run(capsys, "bias", str(tiny), "--mc", "--seed", "2", "--samples", "1000", "-o", str(out), "--manifest", str(man))[0] == 0
    out.unlink()
    assert run(capsys, "rerun", str(man))[0] == 0


def test_console_script_installed():
    exe = shutil.which("resilience-lab")
    cmd = [exe] if exe else [sys.executable, "-m", "resilience_lab.cli"]
    res = subprocess.run([*cmd, "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "resilience-lab" in res.stdout
