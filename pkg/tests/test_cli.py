import json
import subprocess
import sys

import numpy as np
import pytest

from lshe.cli import _int_list, main
from lshe.oracle import LinearModel


@pytest.fixture
def people(tmp_path):
    path = tmp_path / "people.csv"
    assert main(["simulate", "--kind", "people", "--size", "1500", "--seed", "3", "--out", str(path)]) == 0
    return path


def run_json(capsys, argv):
    assert main(argv) == 0
    return json.loads(capsys.readouterr().out)


def test_int_list():
    assert _int_list("5") == [5]
    assert _int_list("1,3") == [1, 3]
    assert _int_list("5:20:5") == [5, 10, 15, 20]


def test_estimate_restaurant_report(capsys, tmp_path):
    pairs = tmp_path / "pairs.csv"
    d = run_json(capsys, ["estimate", "--dataset", "restaurant", "--shingle", "12",
                          "--export-pairs", str(pairs)])
    assert set(d) >= {"estimate", "std_error", "p", "m", "n_prime", "n_star", "method", "seed", "elapsed_ms"}
    assert set(d["n_prime"]) == {"1", "2", "3", "4plus"}
    assert d["method"] == "lshe" and d["meta"]["K"] == 1 and d["meta"]["L"] == 20
    lines = pairs.read_text().splitlines()
    assert lines[0] == "id_a,id_b" and len(lines) == d["m"] + 1
    body = [tuple(map(int, x.split(","))) for x in lines[1:]]
    assert body == sorted(body) and all(a < b for a, b in body)


def test_estimate_records_file_with_pair_truth(capsys, tmp_path):
    rec = tmp_path / "r.csv"
    rec.write_text("name,city\nANN SMITH,ROME\nANN SMYTH,ROME\nBOB JONES,PARIS\n")
    truth = tmp_path / "t.csv"
    truth.write_text("id_a,id_b,label\n0,1,1\n0,2,0\n1,2,0\n")
    d = run_json(capsys, ["estimate", "--records", str(rec), "--truth", str(truth), "--shingle", "2"])
    assert d["estimate"] == pytest.approx(2.0) and d["p"] == 1.0


def test_estimate_budget_and_errors(capsys, people):
    assert main(["estimate", "--records", str(people), "--entity-column", "entity",
                 "--k", "2", "--l", "10", "--shingle", "4", "--budget", "5"]) == 2
    assert "budget" in capsys.readouterr().err
    assert main(["estimate", "--records", str(people), "--entity-column", "entity",
                 "--oracle", "bogus"]) == 2
    assert "unknown oracle" in capsys.readouterr().err
    assert main(["estimate"]) == 2


def test_estimate_reseed_stderr(capsys, people):
    d = run_json(capsys, ["estimate", "--records", str(people), "--entity-column", "entity",
                          "--k", "2", "--l", "10", "--shingle", "4", "--stderr", "reseed,4"])
    assert d["meta"]["stderr_method"] == "reseed,4" and "plugin_std_error" in d["meta"]
    assert d["std_error"] >= 0
    with pytest.raises(SystemExit):
        main(["estimate", "--stderr", "reseed,1"])


def test_sweep_csv(capsys, people, tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--records", str(people), "--entity-column", "entity",
                 "--k", "1,2", "--l", "2:6:2", "--shingle", "3,4", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "K,L,shingle,m,recall,reduction_ratio,elapsed_ms,error"
    assert len(lines) == 1 + 2 * 3 * 2


def test_compare_csv_is_byte_identical(people, tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"cmp{i}.csv"
        assert main(["compare", "--records", str(people), "--entity-column", "entity",
                     "--k", "2", "--l", "5,10", "--shingle", "4", "--seed", "3",
                     "--repeats", "2", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    text = outs[0].decode()
    assert text.splitlines()[0] == "K,L,budget,method,seed,estimate,std_error,p,relative_error,status"
    assert "elapsed" not in text and "np." not in text


def test_simulate_graph(capsys):
    assert main(["simulate", "--counts", "1:70,2:10,3:5", "--p", "0.5,1.0", "--replicates", "50"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("p,n,replicates,mean_estimate")
    last = lines[2].split(",")
    assert float(last[0]) == 1.0 and float(last[3]) == 85.0 and float(last[6]) == 0.0


def test_train_oracle_and_use_model(capsys, people, tmp_path):
    model = tmp_path / "m.bin"
    assert main(["train-oracle", "--records", str(people), "--entity-column", "entity",
                 "--shingle", "4", "--train-pairs", "400", "--dim", "4096",
                 "--out", str(model)]) == 0
    meta = json.loads(capsys.readouterr().out)
    assert "test" in meta and meta["negatives"] == "uniform"
    m = LinearModel.load(model)
    assert m.k == 4 and m.dim == 4096
    d = run_json(capsys, ["estimate", "--records", str(people), "--entity-column", "entity",
                          "--k", "2", "--l", "10", "--shingle", "4", "--oracle", f"model:{model}"])
    assert d["estimate"] > 0
    assert main(["train-oracle", "--records", str(people), "--entity-column", "entity"]) == 2


def test_train_oracle_lsh_negatives(capsys, people, tmp_path):
    model = tmp_path / "m.bin"
    assert main(["train-oracle", "--records", str(people), "--entity-column", "entity",
                 "--shingle", "4", "--k", "2", "--l", "10", "--negatives", "lsh",
                 "--train-pairs", "200", "--dim", "4096", "--out", str(model)]) == 0
    assert json.loads(capsys.readouterr().out)["negatives"] == "lsh"


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "lshe", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "estimate" in r.stdout and "train-oracle" in r.stdout
