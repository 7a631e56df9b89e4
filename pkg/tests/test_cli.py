import json
import subprocess
import sys
from fractions import Fraction

import pytest

from hypercube_clusters import cli, ursell


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def records(out):
    return [json.loads(line) for line in out.splitlines() if line.startswith("{")]


def test_lk_at_lambda_one(capsys):
    code, out, _ = run(capsys, "lk", "1", "--at-lambda", "1")
    assert code == 0 and records(out)[0]["L_at_lambda_1"] == "1/2"
    code, out, _ = run(capsys, "lk", "2", "--at-lambda", "1")
    assert records(out)[0]["L_at_lambda_1"] == "(3d^2-3d-2)/8 * 2^-d"


def test_lk_value_at_point(capsys):
    code, out, _ = run(capsys, "lk", "1", "--at-lambda", "1", "--at-d", "4")
    assert Fraction(records(out)[0]["value"]) == Fraction(1, 2)


@pytest.mark.parametrize("k", ["0", "9"])
def test_lk_out_of_range(capsys, k):
    code, _, err = run(capsys, "lk", k)
    assert code == 2 and "k must be" in err


def test_lk_beyond_capability(capsys, cache_dir, monkeypatch):
    monkeypatch.setenv("HYPERCUBE_CLUSTERS_CACHE", str(cache_dir))
    code, _, err = run(capsys, "--cache-dir", str(cache_dir), "lk", "6")
    assert code == 3


def test_exact_z_and_ivalue(capsys):
    code, out, _ = run(capsys, "exact-z", "2", "1")
    rec = records(out)[0]
    assert code == 0 and rec["Z"] == "7"
    assert set(rec) >= {"version", "config", "cache", "elapsed_s"}
    code, out, _ = run(capsys, "ivalue", "4")
    assert records(out)[0]["i_Qd"] == 743


def test_exact_z_capability(capsys):
    code, _, err = run(capsys, "exact-z", "7", "1")
    assert code == 3 and "d <= 6" in err


def test_bad_lambda(capsys):
    assert run(capsys, "approx-z", "10", "-1", "2")[0] == 2


def test_approx_z_record(capsys):
    code, out, _ = run(capsys, "approx-z", "10", "1", "3")
    rec = records(out)[0]
    assert rec["k"] == 3 and len(rec["L_values"]) == 3
    assert rec["error_bound_form"]["note"] == "up to unspecified constant"


def test_defects_commands(capsys):
    code, out, _ = run(capsys, "defects", "3")
    assert records(out)[0]["n_types"] == 2
    code, out, _ = run(capsys, "defects", "--poisson-mean", "2", "1")
    assert records(out)[0]["poisson_mean"] == pytest.approx(0.0104, abs=5e-4)
    code, out, _ = run(capsys, "defects", "--threshold", "2", "1", "10")
    assert 0 < records(out)[0]["threshold_lambda"] < 1
    code, out, _ = run(capsys, "defects", "--stats", "10", "1", "1")
    assert len(records(out)) == 1


def test_defects_needs_something(capsys):
    assert run(capsys, "defects")[0] == 2


def test_sample_determinism(capsys, tmp_path):
    paths = [tmp_path / f"{i}.csv" for i in range(3)]
    for p, seed in zip(paths, ("5", "5", "6")):
        assert run(capsys, "sample", "4", "1", "1000", seed, "--out", str(p))[0] == 0
    a, b, c = (p.read_bytes() for p in paths)
    assert a == b and a != c
    assert a.splitlines()[0] == b"sample,type_id,size,count"


def test_sample_reports_fit(capsys, tmp_path):
    code, out, _ = run(capsys, "sample", "5", "1", "2000", "1", "--out", str(tmp_path / "x.csv"))
    rec = records(out)[0]
    assert {"fit_poisson_size1", "fit_exact", "tv_exact"} <= set(rec)


def test_glauber_sample(capsys, tmp_path):
    code, out, _ = run(capsys, "sample", "6", "1", "200", "3", "--engine", "glauber", "--burn-in", "20",
                       "--out", str(tmp_path / "g.csv"))
    assert code == 0 and records(out)[0]["n"] == 200


def test_output_file_and_cache_dir(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("HYPERCUBE_CLUSTERS_CACHE", "unused")  # restored afterwards
    log = tmp_path / "log.jsonl"
    cache = tmp_path / "cache"
    run(capsys, "--cache-dir", str(cache), "--output", str(log), "lk", "2")
    run(capsys, "--cache-dir", str(cache), "--output", str(log), "lk", "2")
    recs = [json.loads(line) for line in log.read_text().splitlines()]
    assert recs[0]["cache"]["lk_k2.json"] == "miss" and recs[1]["cache"]["lk_k2.json"] == "hit"
    assert (cache / "v1" / "lk_k2.json").exists()


def test_verify_single_criterion(capsys):
    code, out, _ = run(capsys, "verify", "--only", "3")
    assert code == 0 and "[PASS]  3 Ursell values" in out


def test_verify_catches_wrong_ursell(capsys, monkeypatch):
    real = ursell.ursell_fast

    def broken(H):
        if H.n == 3 and all(bin(a).count("1") == 2 for a in H.adj):
            return Fraction(1, 2)
        return real(H)

    monkeypatch.setattr(ursell, "ursell_fast", broken)
    code, out, _ = run(capsys, "verify", "--only", "3")
    assert code == 4
    assert "[FAIL]  3 Ursell values" in out and "triangle" in out


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "hypercube_clusters", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip()
