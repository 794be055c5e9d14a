import csv
import io
import math
import subprocess
import sys

import numpy as np
import pytest

from structembed import cli, diagnostics


def run(args, capsys):
    code = cli.main(args)
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture
def pair_file(tmp_path):
    p = tmp_path / "pair.txt"
    p.write_text("# two orthogonal unit vectors\n1, 0, 0, 0\n\n0 1 0 0\n")
    return str(p)


def test_diagnose_toeplitz_exact(capsys):
    code, out, err = run(["diagnose", "--family", "toeplitz", "--n", "16", "--m", "8", "--exact"], capsys)
    r = rows(out)[0]
    assert code == 0 and r["chi"] == "2" and r["chi_is_exact"] == "true" and r["mu_tilde"] == "0"
    assert "effective n = 16" in err


def test_diagnose_circulant_and_rounding(capsys):
    code, out, err = run(["diagnose", "--family", "circulant", "--n", "12", "--m", "8", "--exact"], capsys)
    r = rows(out)[0]
    assert code == 0 and int(r["chi"]) <= 3 and float(r["mu_tilde"]) == 0 and r["n"] == "16"
    assert "rounded up from 12" in err


def test_diagnose_graph_export(tmp_path, capsys):
    path = tmp_path / "g.txt"
    code, _, _ = run(["diagnose", "--family", "circulant", "--n", "8", "--m", "2",
                      "--graph-export", str(path)], capsys)
    lines = [s for s in path.read_text().splitlines() if not s.startswith("#")]
    assert code == 0 and len(lines) == 8 and all(" -- " in s for s in lines)


def test_missing_family_is_usage_error(capsys):
    code, _, err = run(["diagnose", "--n", "16", "--m", "8"], capsys)
    assert code == 2 and "usage" in err and "--family" in err


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 2


def test_cap_exit_code(capsys):
    code, _, err = run(["diagnose", "--family", "circulant", "--n", "1024", "--m", "4"], capsys)
    assert code == 3 and "resource limit" in err


def test_estimate_orthogonal_pair(pair_file, capsys):
    code, out, _ = run(["estimate", "--family", "circulant", "--m", "4", "--f", "identity",
                        "--dataset", pair_file, "--n", "256", "--seed", "1"], capsys)
    assert code == 0
    head = out.splitlines()[0]
    assert head == "m,family,f,pair_id,estimate,exact,abs_error,seed"
    r = rows(out)[0]
    assert r["exact"] == "0" and r["pair_id"] == "0-1" and r["seed"] == "1"


def test_estimate_large_m_magnitude(pair_file, capsys):
    code, out, _ = run(["estimate", "--family", "circulant", "--m", "256", "--n", "256",
                        "--dataset", pair_file], capsys)
    assert code == 0 and abs(float(rows(out)[0]["estimate"])) < 0.2


def test_estimate_sincos_duplicate_is_one(tmp_path, capsys):
    p = tmp_path / "dup.txt"
    p.write_text("0.3,-0.2,0.5\n0.3,-0.2,0.5\n")
    code, out, _ = run(["estimate", "--family", "toeplitz", "--m", "4", "--f", "sincos",
                        "--dataset", str(p)], capsys)
    r = rows(out)[0]
    assert code == 0 and r["estimate"] == "1" and r["exact"] == "1"


def test_estimate_oracle_columns(pair_file, capsys):
    code, out, err = run(["estimate", "--family", "circulant", "--m", "4", "--f", "heaviside",
                          "--dataset", pair_file, "--oracle", "2000"], capsys)
    r = rows(out)[0]
    assert code == 0 and "oracle_mean" in r and float(r["oracle_stderr"]) > 0
    assert "(pi - theta) / (2 pi)" in err


def test_estimate_malformed_line(tmp_path, capsys):
    p = tmp_path / "bad.txt"
    p.write_text("1,2\n3,4\n5,abc\n")
    code, _, err = run(["estimate", "--family", "circulant", "--m", "2", "--dataset", str(p)], capsys)
    assert code == 4 and "line 3" in err


def test_estimate_ragged_and_missing(tmp_path, capsys):
    p = tmp_path / "ragged.txt"
    p.write_text("1,2\n3\n")
    assert run(["estimate", "--family", "circulant", "--m", "2", "--dataset", str(p)], capsys)[0] == 4
    missing = str(tmp_path / "nope.txt")
    assert run(["estimate", "--family", "circulant", "--m", "2", "--dataset", missing], capsys)[0] == 4
    one = tmp_path / "one.txt"
    one.write_text("1,2\n")
    assert run(["estimate", "--family", "circulant", "--m", "2", "--dataset", str(one)], capsys)[0] == 4


def test_estimate_m_too_large_is_usage(pair_file, capsys):
    code, _, _ = run(["estimate", "--family", "circulant", "--m", "8", "--dataset", pair_file], capsys)
    assert code == 2


def test_byte_identical_reruns(tmp_path, capsys):
    p = tmp_path / "d.txt"
    X = np.random.default_rng(0).standard_normal((5, 20))
    p.write_text("\n".join(",".join(str(float(x)) for x in row) for row in X))
    args = ["estimate", "--family", "hankel", "--m", "8", "--f", "relu", "--dataset", str(p)]
    assert run(args, capsys)[1] == run(args, capsys)[1]


def test_float_round_trip(tmp_path, capsys):
    p = tmp_path / "d.txt"
    p.write_text("0.1,0.2,0.3\n-0.7,0.11,0.5\n")
    _, out, _ = run(["estimate", "--family", "toeplitz", "--m", "3", "--f", "identity", "--dataset", str(p)], capsys)
    r = rows(out)[0]
    assert float(r["exact"]) == 0.1 * -0.7 + 0.2 * 0.11 + 0.3 * 0.5


def test_sweep_columns(tmp_path, capsys):
    p = tmp_path / "d.txt"
    X = np.random.default_rng(1).standard_normal((12, 64))
    p.write_text("\n".join(" ".join(str(float(x)) for x in row) for row in X))
    code, out, _ = run(["sweep", "--family", "circulant", "--f", "heaviside", "--dataset", str(p),
                        "--m-values", "16,64", "--reps", "3", "--tau", "0.3"], capsys)
    rs = rows(out)
    assert code == 0 and [r["m"] for r in rs] == ["16", "64"]
    for r in rs:
        m = int(r["m"])
        assert float(r["cor1_threshold"]) == pytest.approx(m ** -0.3 + 1 / math.log(m))
        assert r["tail_note"] == "up-to-constant"


def test_sweep_identity_rmse_decreases(tmp_path, capsys):
    p = tmp_path / "d.txt"
    X = np.random.default_rng(2).standard_normal((30, 256))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    p.write_text("\n".join(",".join(str(float(x)) for x in row) for row in X))
    wins = 0
    for seed in range(10):
        _, out, _ = run(["sweep", "--family", "toeplitz", "--dataset", str(p), "--m-values", "64,256",
                         "--reps", "1", "--seed", str(seed)], capsys)
        a, b = rows(out)
        wins += float(b["rmse"]) < float(a["rmse"])
    assert wins >= 9


def test_sweep_empty_m_values(pair_file, capsys):
    assert run(["sweep", "--family", "circulant", "--dataset", pair_file, "--m-values", ""], capsys)[0] == 2


def test_config_precedence(tmp_path, pair_file, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"family = toeplitz\nm = 2\nseed = 5\ndataset = {pair_file}\n")
    _, out, _ = run(["estimate", "--config", str(cfg)], capsys)
    r = rows(out)[0]
    assert r["family"] == "toeplitz" and r["seed"] == "5" and r["m"] == "2"
    _, out, _ = run(["estimate", "--config", str(cfg), "--seed", "7", "--m", "3"], capsys)
    r = rows(out)[0]
    assert r["seed"] == "7" and r["m"] == "3"
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = red\n")
    assert run(["estimate", "--config", str(bad)], capsys)[0] == 2


def test_default_seed(pair_file, capsys):
    _, out, _ = run(["estimate", "--family", "circulant", "--m", "2", "--dataset", pair_file], capsys)
    assert rows(out)[0]["seed"] == str(0x5EED)


def test_output_file(tmp_path, pair_file, capsys):
    dest = tmp_path / "out.csv"
    code, out, _ = run(["estimate", "--family", "circulant", "--m", "2", "--dataset", pair_file,
                        "--output", str(dest)], capsys)
    assert code == 0 and out == "" and dest.read_text().startswith("m,family")


def test_bench_rows(capsys):
    code, out, _ = run(["bench", "--family", "circulant,toeplitz,hankel", "--n", "64", "--reps", "3"], capsys)
    rs = rows(out)
    assert code == 0 and [r["family"] for r in rs] == ["circulant", "toeplitz", "hankel"]
    assert all(float(r["speedup"]) > 0 for r in rs)


def test_bench_dense_skipped(capsys):
    code, out, err = run(["bench", "--family", "circulant", "--n", "256", "--reps", "2",
                          "--dense-cap", "10"], capsys)
    assert code == 0 and rows(out)[0]["dense_median_s"] == "" and "skipped" in err


def test_verify_only_filter(capsys):
    code, out, _ = run(["verify", "--only", "chromatic"], capsys)
    lines = [s for s in out.splitlines() if s.startswith("[")]
    assert code == 0 and len(lines) == 1 and "chromatic" in lines[0]


def test_verify_unknown_criterion(capsys):
    assert run(["verify", "--only", "nonsense"], capsys)[0] == 2


def test_verify_negative_control(monkeypatch, capsys):
    real = diagnostics._sigma_closed

    def corrupted(M, i1, i2, n1, n2):
        if M.family.tag == "circulant":
            return 1.0 if (n1 - n2 + (i1 - i2)) % M.n == 0 else 0.0
        return real(M, i1, i2, n1, n2)

    monkeypatch.setattr(diagnostics, "_sigma_closed", corrupted)
    code, out, _ = run(["verify", "--only", "sigma_closed_forms"], capsys)
    assert code == 1 and "FAIL" in out and "sigma_closed_forms" in out


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "structembed.cli", "diagnose", "--family", "hankel",
                           "--n", "8", "--m", "4"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("family,")
