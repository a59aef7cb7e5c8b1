import csv
import json
import subprocess
import sys

import pytest

from fairsketch.cli import main
from fairsketch.hashing import RowHasher, derive_seeds, hash_bucket
from fairsketch.experiments import RESULT_COLUMNS


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize(
    "sizes,w,d,expect",
    [("50,50", "10", "1", [5, 5]), ("3,9", "8", "2", [2, 6]), ("10,20,70", "10", "1", [1, 2, 7])],
)
def test_alloc(capsys, sizes, w, d, expect):
    code, out, _ = run(capsys, "alloc", "--sizes", sizes, "--w", w, "--d", d)
    assert code == 0
    assert json.loads(out)["widths"] == expect


def test_alloc_infeasible(capsys):
    code, _, err = run(capsys, "alloc", "--sizes", "1,1,1", "--w", "2", "--d", "2")
    assert code == 2 and "infeasible" in err


def test_usage_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["alloc", "--sizes", "1,x", "--w", "2", "--d", "1"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_gen_degenerate(capsys, tmp_path):
    out_path = tmp_path / "u.csv"
    code, out, _ = run(capsys, "gen", "--dist", "uniform:5,5", "--n", "3", "--seed", "1", "--out", str(out_path))
    assert code == 0
    rows = list(csv.reader(out_path.open()))
    assert rows[0] == ["element", "group", "count"]
    assert [r[2] for r in rows[1:]] == ["5", "5", "5"]
    assert json.loads(out)["N"] == 15


def test_gen_is_byte_identical_and_seed_env(capsys, tmp_path, monkeypatch):
    args = ["gen", "--dist", "gaussian:100,50", "--dist", "gaussian:1000,500", "--sizes", "900,100"]
    monkeypatch.setenv("FAIR_SKETCH_SEED", "17")
    run(capsys, *args, "--out", str(tmp_path / "a.csv"))
    run(capsys, *args, "--seed", "17", "--out", str(tmp_path / "b.csv"))
    run(capsys, *args, "--seed", "18", "--out", str(tmp_path / "c.csv"))
    a, b, c = ((tmp_path / f"{x}.csv").read_bytes() for x in "abc")
    assert a == b and a != c


def test_gen_bad_combination(capsys, tmp_path):
    code, _, err = run(capsys, "gen", "--dist", "zipf:1", "--dist", "zipf:2", "--out", str(tmp_path / "x.csv"))
    assert code == 2 and "--sizes" in err


def test_bad_seed_env(capsys, monkeypatch):
    monkeypatch.setenv("FAIR_SKETCH_SEED", "abc")
    code, _, err = run(capsys, "alloc", "--sizes", "1,1", "--w", "2", "--d", "1")
    assert code == 0  # alloc has no seed
    code, _, err = run(capsys, "mc-wl", "--nl", "5", "--nh", "5", "--w", "4", "--d", "1",
                       "--dist-l", "zipf:1", "--dist-h", "zipf:1", "--trials", "1")
    assert code == 2 and "FAIR_SKETCH_SEED" in err


@pytest.fixture
def dataset(tmp_path, capsys):
    p = tmp_path / "ds.csv"
    main(["gen", "--dist", "zipf:1.0", "--n", "400", "--seed", "3", "--group", "rank:300", "--out", str(p)])
    capsys.readouterr()
    return p


def test_estimate_cm_matches_brute_force(capsys, dataset):
    code, out, _ = run(capsys, "estimate", "--dataset", str(dataset), "--sketch", "cm",
                       "--w", "32", "--d", "3", "--seed", "5", "--query", "e007")
    assert code == 0
    res = json.loads(out)
    rows = list(csv.DictReader(dataset.open()))
    hashers = [RowHasher(s) for s in derive_seeds(5, 3)]
    counts = [[0] * 32 for _ in hashers]
    for r in rows:
        for h, row in zip(hashers, counts):
            row[hash_bucket(h, r["element"], 32)] += int(r["count"])
    expect = min(row[hash_bucket(h, "e007", 32)] for h, row in zip(hashers, counts))
    f = next(int(r["count"]) for r in rows if r["element"] == "e007")
    assert res["estimate"] == expect
    assert res["true"] == f and res["additive_error"] == expect - f
    assert res["alpha"] == pytest.approx(f / expect)


def test_estimate_fcm_needs_group(capsys, dataset):
    code, _, err = run(capsys, "estimate", "--dataset", str(dataset), "--sketch", "fcm",
                       "--w", "32", "--d", "2", "--query", "e007")
    assert code == 2 and "group" in err
    code, out, _ = run(capsys, "estimate", "--dataset", str(dataset), "--sketch", "fcm",
                       "--w", "32", "--d", "2", "--query", "e007,1")
    res = json.loads(out)
    assert code == 0 and res["estimate"] >= res["true"] and sum(res["widths"]) == 32
    code, _, err = run(capsys, "estimate", "--dataset", str(dataset), "--sketch", "fcm",
                       "--w", "32", "--d", "2", "--query", "e007,7")
    assert code == 2


def test_estimate_single_and_unseen(capsys, tmp_path):
    p = tmp_path / "one.csv"
    p.write_text("element,group,count\nonly,0,42\n")
    code, out, _ = run(capsys, "estimate", "--dataset", str(p), "--sketch", "cm", "--w", "8", "--d", "2", "--query", "only")
    assert json.loads(out)["estimate"] == 42
    code, out, _ = run(capsys, "estimate", "--dataset", str(p), "--sketch", "cm", "--w", "1024", "--d", "4", "--query", "ghost")
    res = json.loads(out)
    assert code == 0 and "true" not in res and res["estimate"] in (0, 42)


def test_estimate_bad_dataset(capsys, tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("element,group\na,0\n")
    code, _, err = run(capsys, "estimate", "--dataset", str(p), "--sketch", "cm", "--w", "8", "--d", "1", "--query", "a")
    assert code == 2 and "line 1" in err


def test_mc_wl(capsys):
    code, out, _ = run(capsys, "mc-wl", "--nl", "100", "--nh", "100", "--w", "20", "--d", "2",
                       "--dist-l", "zipf:1.0", "--dist-h", "zipf:1.0", "--trials", "6", "--seed", "1")
    res = json.loads(out)
    assert code == 0 and len(res["per_trial"]) == 6
    assert res["solver_wl"] == 10 and abs(res["avg_wl"] - 10) <= 1


def test_run_writes_results(capsys, tmp_path):
    out_path = tmp_path / "r.csv"
    spec = "n=3000;l=gaussian:100,50;h=gaussian:1000,500"
    args = ["run", "--experiment", "unfairness", "--sweep", "n_l", "--values", "500,2500",
            "--dataset", spec, "--w", "128", "--d", "3", "--trials", "2", "--seed", "4", "--with-rp"]
    assert main(args + ["--out", str(out_path)]) == 0
    rows = list(csv.DictReader(out_path.open()))
    assert list(rows[0]) == RESULT_COLUMNS
    assert {r["sketch"] for r in rows} == {"cm", "fcm", "rp"}
    fcm = [r for r in rows if r["sketch"] == "fcm" and r["group"] == "all"]
    assert all(float(r["unfairness"]) <= 0.02 for r in fcm)
    # reproducible apart from timing columns
    out2 = tmp_path / "r2.csv"
    main(args + ["--out", str(out2)])
    strip = lambda p: [{k: v for k, v in r.items() if k not in ("build_ms", "query_ns")} for r in csv.DictReader(p.open())]
    assert strip(out_path) == strip(out2)


def test_run_file_dataset_and_stdout(capsys, dataset):
    code, out, _ = run(capsys, "run", "--experiment", "pof", "--sweep", "w", "--values", "32,64",
                       "--dataset", str(dataset), "--w", "0", "--d", "1", "--trials", "1")
    assert code == 0 and out.splitlines()[0] == ",".join(RESULT_COLUMNS)


def test_run_bad_dataset(capsys):
    code, _, err = run(capsys, "run", "--experiment", "pof", "--sweep", "w", "--values", "8",
                       "--dataset", "/no/such/file.csv", "--w", "8", "--d", "1")
    assert code == 2


def test_console_script():
    res = subprocess.run(
        [sys.executable, "-m", "fairsketch", "alloc", "--sizes", "3,9", "--w", "8", "--d", "2"],
        capture_output=True, text=True, check=False,
    )
    assert res.returncode == 0 and json.loads(res.stdout)["widths"] == [2, 6]


def test_internal_error_exit_1(capsys, monkeypatch):
    import fairsketch.cli as cli

    def boom(*a, **k):
        raise RuntimeError("kaput")

    monkeypatch.setattr(cli, "solve_multi", boom)
    code, _, err = run(capsys, "alloc", "--sizes", "1,1", "--w", "2", "--d", "1")
    assert code == 1 and "kaput" in err
