import json
import math
import subprocess
import sys

import pytest

from partnfl.cli import main, read_clustering
from partnfl.partitions import bell, canonicalize


def write_labels(path, labels):
    path.write_text("\n".join(map(str, labels)) + "\n")
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def report(capsys, *argv):
    code, out, _ = run(capsys, *argv)
    return code, json.loads(out)


@pytest.fixture
def files(tmp_path):
    return {
        "one2": write_labels(tmp_path / "one2.txt", ["a", "a"]),
        "full2": write_labels(tmp_path / "full2.txt", ["a", "b"]),
        "one5": write_labels(tmp_path / "one5.txt", ["x"] * 5),
        "t5": write_labels(tmp_path / "t5.txt", ["u", "u", "v", "w", "w"]),
        "c5": write_labels(tmp_path / "c5.txt", [3, 1, 1, 2, 2]),
        "t8": write_labels(tmp_path / "t8.txt", [0, 0, 1, 1, 1, 2, 3, 3]),
    }


def test_score_identical_max_entropy(capsys, files):
    code, rep = report(capsys, "score", files["t5"], files["t5"], "--metric", "ami",
                       "--model", "all", "--norm", "max-entropy")
    assert code == 0
    assert rep["result"]["value"] == pytest.approx(1.0, abs=1e-12)
    assert rep["schema_version"] == "1" and rep["command"] == "score"
    assert set(rep) == {"schema_version", "command", "inputs", "metric", "result", "seed",
                        "timing"}


def test_score_two_elements(capsys, files):
    code, rep = report(capsys, "score", files["one2"], files["full2"], "--metric", "ami",
                       "--model", "all", "--norm", "constant-logn")
    assert code == 0
    assert rep["result"]["value"] == pytest.approx(-1.0, abs=1e-15)
    assert rep["result"]["loss"] == pytest.approx(2.0, abs=1e-15)
    assert rep["result"]["expectation"]["mean"] == pytest.approx(math.log(2) / 2)


def test_score_smi_one_partition_truth(capsys, files):
    code, out, err = run(capsys, "score", files["t5"], files["one5"], "--metric", "smi")
    assert code == 3 and out == "" and "variance" in err


def test_score_size_mismatch(capsys, files):
    code, _, err = run(capsys, "score", files["t5"], files["t8"])
    assert code == 2 and "nodes" in err


def test_score_monte_carlo_reports_seed(capsys, files):
    args = ("score", files["c5"], files["t5"], "--method", "mc", "--samples", "2000",
            "--seed", "9")
    code, a = report(capsys, *args)
    _, b = report(capsys, *args)
    assert code == 0 and a["seed"] == 9
    a.pop("timing"), b.pop("timing")
    assert a == b


def test_expectation(capsys, files):
    code, rep = report(capsys, "expectation", files["full2"])
    assert code == 0 and rep["result"]["mean"] == pytest.approx(math.log(2) / 2, abs=1e-16)
    for model in ("all", "num", "interior"):
        extra = ("--blocks", "2") if model == "num" else ()
        _, rep = report(capsys, "expectation", files["one5"], "--model", model, *extra)
        assert rep["result"]["mean"] == 0.0


def test_expectation_exact_vs_monte_carlo(capsys, files):
    _, exact = report(capsys, "expectation", files["t8"])
    _, mc = report(capsys, "expectation", files["t8"], "--method", "mc",
                   "--samples", "100000", "--seed", "3")
    assert mc["result"]["method"] == "monte-carlo"
    assert abs(mc["result"]["mean"] - exact["result"]["mean"]) <= 4 * mc["result"]["stderr"]


def test_verify_nfl_exit_codes(capsys):
    code, rep = report(capsys, "verify-nfl", "--n", "5", "--metric", "ami", "--model", "all",
                       "--truths", "all")
    assert code == 0 and abs(rep["result"]["lambda"]) <= 1e-9
    code, rep = report(capsys, "verify-nfl", "--n", "5", "--metric", "ami", "--model", "perm",
                       "--truths", "all")
    assert code == 4 and rep["result"]["boundary_deviation"] > 1e-6
    code, _, err = run(capsys, "verify-nfl", "--n", "2", "--metric", "ami",
                       "--model", "interior")
    assert code == 2 and err


def test_verify_nfl_sampled_is_deterministic(capsys):
    args = ("verify-nfl", "--n", "7", "--truths", "boundary+sample:10", "--seed", "5")
    code, a = report(capsys, *args)
    _, b = report(capsys, *args)
    assert code == 0
    a.pop("timing"), b.pop("timing")
    assert a == b


def test_verify_nfl_bad_truths(capsys):
    code, _, _ = run(capsys, "verify-nfl", "--n", "4", "--truths", "most")
    assert code == 2


def test_free_morsel(capsys):
    code, rep = report(capsys, "free-morsel", "--n-max", "5")
    assert code == 0
    rows = rep["result"]["rows"]
    assert [r["n"] for r in rows] == [3, 4, 5]
    assert rep["result"]["normalized_gap_decreasing"] is True


@pytest.mark.parametrize("argv, expected", [
    (("--n", "3", "--model", "all"), "5"),
    (("--n", "3", "--shape", "2,1"), "3"),
    (("--n", "12", "--model", "all"), "4213597"),
    (("--n", "6", "--model", "num", "--blocks", "3"), "90"),
    (("--n", "40", "--model", "all"), str(bell(40))),
])
def test_count(capsys, argv, expected):
    code, rep = report(capsys, "count", *argv)
    assert code == 0 and rep["result"]["count"] == expected


def test_enumerate_round_trip(capsys, tmp_path):
    code, out, _ = run(capsys, "enumerate", "--n", "4")
    lines = out.splitlines()
    assert code == 0 and len(lines) == bell(4)
    for i, line in enumerate(lines):
        labels = line.split()
        path = write_labels(tmp_path / f"p{i}.txt", labels)
        assert read_clustering(path) == canonicalize(labels)
    code, out, _ = run(capsys, "enumerate", "--n", "3", "--shape", "2,1")
    assert out.splitlines() == ["0 0 1", "0 1 0", "0 1 1"]


def test_enumerate_limit(capsys):
    code, _, err = run(capsys, "enumerate", "--n", "13")
    assert code == 2 and err


def test_sample(capsys):
    code, a, _ = run(capsys, "sample", "--n", "6", "--count", "20", "--seed", "4")
    _, b, _ = run(capsys, "sample", "--n", "6", "--count", "20", "--seed", "4")
    assert code == 0 and a == b and len(a.splitlines()) == 20
    _, out, _ = run(capsys, "sample", "--n", "6", "--count", "5", "--model", "num",
                    "--blocks", "2")
    assert all(len(set(line.split())) == 2 for line in out.splitlines())


def test_read_formats(tmp_path):
    path = tmp_path / "c.txt"
    path.write_text("# comment\nb\n\na\nb\n")
    assert read_clustering(path).assignment == (0, 1, 0)
    js = tmp_path / "c.json"
    js.write_text(json.dumps({"n": 3, "assignment": [4, 4, 1]}))
    assert read_clustering(js, "json").assignment == (0, 0, 1)


@pytest.mark.parametrize("text", ['{"n": 2, "assignment": [0]}', '{"n": 1}', "[0, 1]",
                                  '{"n": 2, "assignment": [0, -1]}', "not json"])
def test_bad_json_exits_2(capsys, tmp_path, text):
    path = tmp_path / "bad.json"
    path.write_text(text)
    code, _, err = run(capsys, "score", str(path), str(path), "--format", "json")
    assert code == 2 and err


def test_bad_labels_exit_2(capsys, tmp_path):
    empty = write_labels(tmp_path / "empty.txt", ["# nothing"])
    assert run(capsys, "score", empty, empty)[0] == 2
    spaced = tmp_path / "spaced.txt"
    spaced.write_text("a b\nc\n")
    assert run(capsys, "score", str(spaced), str(spaced))[0] == 2
    assert run(capsys, "score", str(tmp_path / "missing"), empty)[0] == 2


def test_usage_error_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["score"])
    assert exc.value.code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "partnfl", "count", "--n", "3"],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["result"]["count"] == "5"
