import json

import numpy as np
import pytest

from semcodebook.cli import main
from semcodebook.formats import read_codebook, read_features

FAST = ["--epochs", "3", "--step-size", "1.0"]


@pytest.fixture
def work(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def _tree(path):
    return {p.relative_to(path).as_posix(): p.read_bytes() for p in sorted(path.rglob("*")) if p.is_file()}


def test_gen_writes_features(work):
    assert main(["gen", "--mixture", "channel_demo", "--out", "g"]) == 0
    Z = read_features(work / "g" / "features.semf")
    assert (Z.M, Z.dim) == (500, 2)
    assert json.loads((work / "g" / "gen.json").read_text())["M"] == 500
    assert len((work / "g" / "labels.csv").read_text().splitlines()) == 501


def test_train_round_trip_and_defaults(work):
    assert main(["gen", "--mixture", "channel_demo", "--out", "g"]) == 0
    assert main(["train", "--features", "g/features.semf", "--k", "4", *FAST, "--out", "t"]) == 0
    C = read_codebook(work / "t" / "codebook.semc")
    assert (C.K, C.dim) == (4, 2)
    assert np.array_equal(C.codewords, C.codewords.astype(np.float32))
    rep = json.loads((work / "t" / "train_report.json").read_text())
    cfg = rep["config"]
    assert (cfg["gamma"], cfg["omega"], cfg["channel"]["p"]) == (0.1, 0.1, 0.0)
    assert cfg["train"]["batch_size"] == 0 and cfg["train"]["init"] == "kmeans_pp"
    assert len((work / "t" / "train_report.csv").read_text().splitlines()) == 4


def test_train_snr_channel(work):
    args = ["train", "--mixture", "channel_demo", "--k", "4", "--snr-db", "10", "--mod", "64qam",
            "--fading", "rayleigh", *FAST, "--out", "t"]
    assert main(args) == 0
    ch = json.loads((work / "t" / "train_report.json").read_text())["config"]["channel"]
    assert 0.2 < ch["p"] < 0.3 and ch["p"] == ch["p_from_snr"]
    assert main(args + ["--p", "0.1"]) == 2


def test_simulate_and_analyze(work):
    assert main(["train", "--mixture", "channel_demo", "--k", "4", *FAST, "--out", "t"]) == 0
    base = ["--mixture", "channel_demo", "--codebook", "t/codebook.semc", "--p", "0.05"]
    assert main(["simulate", *base, "--trials", "20", "--out", "s"]) == 0
    rep = json.loads((work / "s" / "link_report.json").read_text())["report"]
    assert rep["trials"] == 20 and rep["symbols"] == 20 * 500
    assert main(["analyze", *base, "--confusion", "exact", "--out", "a"]) == 0
    ana = json.loads((work / "a" / "analysis.json").read_text())
    assert ana["L"] == 2 and abs(sum(ana["usage"]) - 1) < 1e-12
    assert len((work / "a" / "confusion.csv").read_text().splitlines()) == 5


def test_sweep_grid_rows(work):
    args = ["sweep", "--mixture", "separated", "--ks", "2,4", "--ps", "0,0.05,0.1", "--p", "0.05",
            "--lambda", "1e-4", *FAST, "--out", "w"]
    assert main(args) == 0
    grid = (work / "w" / "sweep_grid.csv").read_text().splitlines()
    assert len(grid) == 1 + 2 * 3
    assert (work / "w" / "codebook_K4.semc").exists()
    assert json.loads((work / "w" / "sweep.json").read_text())["K_star"] in (2, 4)


def test_compare_variants(work):
    args = ["compare", "--mixture", "channel_demo", "--k", "4", "--p", "0.05", "--ps", "0.01,0.05",
            "--variants", "a:0:0,b:0:0.1", "--trials", "5", *FAST, "--out", "c"]
    assert main(args) == 0
    lines = (work / "c" / "compare.csv").read_text().splitlines()
    assert len(lines) == 1 + 2 * 2
    assert main(args[:-2] + ["--variants", " , ", "--out", "c2"]) == 2


def test_config_file_and_flag_override(work):
    (work / "run.cfg").write_text("mixture = channel_demo\nk = 4\nepochs = 2\ngamma = 0.2\n")
    assert main(["train", "--config", "run.cfg", "--gamma", "0.3", "--out", "t"]) == 0
    cfg = json.loads((work / "t" / "train_report.json").read_text())["config"]
    assert (cfg["K"], cfg["gamma"]) == (4, 0.3)


@pytest.mark.parametrize("argv,code", [
    (["train", "--mixture", "nope", "--k", "4"], 3),
    (["train", "--features", "missing.semf"], 3),
    (["train", "--mixture", "channel_demo", "--k", "4", "--p", "0.7"], 2),
    (["train", "--mixture", "channel_demo", "--k", "4", "--omega", "1.0"], 2),
    (["train", "--k", "4"], 2),
    (["sweep", "--mixture", "separated", "--ks", "2,2"], 2),
    (["sweep", "--mixture", "separated", "--ks", ""], 2),
    (["simulate", "--mixture", "channel_demo"], 2),
])
def test_exit_codes(work, argv, code):
    assert main(argv + ["--out", "x"]) == code


def test_corrupt_codebook_is_io_error(work):
    (work / "bad.semc").write_bytes(b"JUNK" + bytes(20))
    assert main(["analyze", "--mixture", "channel_demo", "--codebook", "bad.semc"]) == 3


def test_unknown_command_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


@pytest.mark.parametrize("argv", [
    ["gen", "--mixture", "channel_demo"],
    ["train", "--mixture", "channel_demo", "--k", "4", "--p", "0.05", *FAST],
    ["sweep", "--mixture", "separated", "--ks", "2,4", "--ps", "0,0.1", "--p", "0.05", *FAST],
    ["compare", "--mixture", "channel_demo", "--k", "4", "--p", "0.05", "--variants", "a:0:0,b:0:0.1",
     "--trials", "5", *FAST],
])
def test_reruns_are_byte_identical(work, argv):
    assert main(argv + ["--out", "r1"]) == 0
    assert main(argv + ["--out", "r2"]) == 0
    assert _tree(work / "r1") == _tree(work / "r2")
