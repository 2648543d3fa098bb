import time

import pytest

from structcl import artifacts as art
from structcl.autodiff import load_tensors
from structcl.cli import main
from structcl.mining import load_structure_view

SMALL = ["--set", "pretrain_epochs=30", "--set", "detect_epochs=60", "--set", "sss_hidden=16",
         "--set", "gcn_hidden=16", "--set", "out_dim=8", "--d", "4"]


@pytest.fixture
def dataset(tmp_path):
    d = tmp_path / "data"
    assert main(["synth", "--blocks", "2", "--size", "15", "--p-in", "0.5", "--p-out", "0.03",
                 "--seed", "4", "--out-dir", str(d)]) == 0
    return d


def test_synth_files(dataset, tmp_path):
    for name in ("edges.txt", "attrs.txt", "labels.txt", "dataset.cfg"):
        assert (dataset / name).exists()
    assert (dataset / "attrs.txt").read_text().splitlines()[0] == "30 2"
    other = tmp_path / "again"
    main(["synth", "--blocks", "2", "--size", "15", "--p-in", "0.5", "--p-out", "0.03",
          "--seed", "4", "--out-dir", str(other)])
    for name in ("edges.txt", "attrs.txt", "labels.txt"):
        assert (dataset / name).read_bytes() == (other / name).read_bytes()


def test_synth_bad_probabilities(tmp_path, capsys):
    rc = main(["synth", "--blocks", "2", "--size", "5", "--p-in", "0.1", "--p-out", "0.3",
               "--out-dir", str(tmp_path)])
    assert rc != 0
    assert "p_in" in capsys.readouterr().err


def test_info(dataset, capsys):
    assert main(["info", "--config", str(dataset / "dataset.cfg")]) == 0
    out = capsys.readouterr().out.splitlines()
    n, e, deg, f, c = out[1].split()
    assert (n, f, c) == ("30", "2", "2")
    assert float(deg) == pytest.approx(2 * int(e) / 30, abs=0.01)


def test_missing_edge_file(tmp_path, capsys):
    assert main(["info", "--edges", str(tmp_path / "none.txt")]) == 2
    assert "none.txt" in capsys.readouterr().err


def test_unknown_config_key(dataset, tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(f"edges = {dataset / 'edges.txt'}\nlearning_rate = 1\n")
    assert main(["info", "--config", str(cfg)]) == 2
    assert "learning_rate" in capsys.readouterr().err


def test_mine_outputs(dataset, tmp_path):
    out = tmp_path / "mine"
    assert main(["mine", "--config", str(dataset / "dataset.cfg"), "--out-dir", str(out),
                 "--patterns", "triangle,k-core(2)"]) == 0
    view = load_structure_view(out / "mined.txt")
    assert view.n_nodes == 30
    rows = (out / "mined.txt").read_text().splitlines()[1:]
    assert all(len(r.split()) == 4 for r in rows)
    assert (out / "high_edges.txt").exists()


def chain(cfg, out, extra=()):
    args = ["--config", str(cfg), "--seed", "7", "--out-dir", str(out), *SMALL, *extra]
    assert main(["pretrain", *args]) == 0
    assert main(["detect", *args]) == 0


def test_full_chain_deterministic(dataset, tmp_path):
    t0 = time.perf_counter()
    a, b = tmp_path / "a", tmp_path / "b"
    chain(dataset / "dataset.cfg", a)
    chain(dataset / "dataset.cfg", b)
    for name in ("embeddings.txt", "predictions.txt", "metrics.txt", "loss_history.csv",
                 "config.cfg", "encoder.ckpt", "head.ckpt"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    assert time.perf_counter() - t0 < 60
    z = art.read_embeddings(a / "embeddings.txt")
    assert z.shape == (30, 8)
    assert len(art.read_loss_history(a / "loss_history.csv")) == 30
    assert set(load_tensors(a / "encoder.ckpt")) >= {"gcn.w1", "sss.s.w1", "sss.x.w2"}
    m = art.read_metrics(a / "metrics.txt")
    assert {"ACC", "NMI", "MF1", "seed", "config_hash"} <= set(m)
    assert "seed = 7" in (a / "config.cfg").read_text()


def test_pretrain_from_mined_cache(dataset, tmp_path):
    main(["mine", "--config", str(dataset / "dataset.cfg"), "--out-dir", str(tmp_path / "m")])
    a, b = tmp_path / "a", tmp_path / "b"
    base = ["pretrain", "--config", str(dataset / "dataset.cfg"), "--seed", "1", *SMALL]
    assert main(base + ["--out-dir", str(a)]) == 0
    assert main(base + ["--out-dir", str(b), "--mined", str(tmp_path / "m" / "mined.txt")]) == 0
    assert (a / "embeddings.txt").read_bytes() == (b / "embeddings.txt").read_bytes()


def test_ablation_and_no_attributes_flags(dataset, tmp_path):
    out = tmp_path / "scl"
    assert main(["pretrain", "--config", str(dataset / "dataset.cfg"), "--out-dir", str(out),
                 "--ablate", "SCL", "--no-attributes", *SMALL]) == 0
    assert art.read_loss_history(out / "loss_history.csv") == []
    text = (out / "config.cfg").read_text()
    assert "use_SCL = False" in text and "no_attributes = True" in text


def test_eval_identical(dataset, capsys):
    labels = dataset / "labels.txt"
    assert main(["eval", "--pred", str(labels), "--labels", str(labels)]) == 0
    assert capsys.readouterr().out.strip() == "ACC 1.00  NMI 1.00  MF1 1.00"


def test_eval_matches_detect_metrics(dataset, tmp_path, capsys):
    out = tmp_path / "run"
    chain(dataset / "dataset.cfg", out)
    capsys.readouterr()
    assert main(["eval", "--pred", str(out / "predictions.txt"), "--labels",
                 str(dataset / "labels.txt"), "--test-split-seed", "7"]) == 0
    printed = capsys.readouterr().out.split()
    m = art.read_metrics(out / "metrics.txt")
    assert printed[1] == f"{float(m['ACC']):.2f}"


def test_export(dataset, tmp_path):
    out = tmp_path / "run"
    main(["pretrain", "--config", str(dataset / "dataset.cfg"), "--out-dir", str(out), *SMALL])
    tsv = tmp_path / "z.tsv"
    assert main(["export", "--embeddings", str(out / "embeddings.txt"), "--labels",
                 str(dataset / "labels.txt"), "--out", str(tsv)]) == 0
    lines = tsv.read_text().splitlines()
    assert lines[0].split("\t")[:3] == ["node", "label", "z0"]
    assert len(lines) == 31 and len(lines[1].split("\t")) == 2 + 8


def test_sweep(dataset, tmp_path):
    out = tmp_path / "sw"
    args = ["--config", str(dataset / "dataset.cfg"), "--seed", "2", *SMALL]
    assert main(["sweep", *args, "--out-dir", str(out), "--param", "tau", "--values", "1,10"]) == 0
    rows = (out / "sweep_tau.csv").read_text().splitlines()
    assert rows[0] == "value,ACC,NMI,MF1" and len(rows) == 3
    # a one-point sweep equals a standalone run
    main(["sweep", *args, "--out-dir", str(out), "--param", "d", "--values", "4"])
    single = (out / "sweep_d.csv").read_text().splitlines()[1].split(",")
    solo = tmp_path / "solo"
    chain(dataset / "dataset.cfg", solo, ["--seed", "2"])
    m = art.read_metrics(solo / "metrics.txt")
    assert float(single[1]) == float(m["ACC"]) and float(single[2]) == float(m["NMI"])


def test_sweep_parallel_matches_serial(dataset, tmp_path):
    args = ["sweep", "--config", str(dataset / "dataset.cfg"), *SMALL, "--param", "tau",
            "--values", "1,5"]
    main(args + ["--out-dir", str(tmp_path / "s")])
    main(args + ["--out-dir", str(tmp_path / "p"), "--jobs", "2"])
    assert (tmp_path / "s" / "sweep_tau.csv").read_bytes() == (tmp_path / "p" / "sweep_tau.csv").read_bytes()
