from pathlib import Path

import numpy as np
import pytest

from structcl import artifacts as art
from structcl.config import load_config, parse_config_text, resolve
from structcl.errors import ConfigError, DimensionError, ParseError


def test_parse_and_resolve(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# run\nedges = data/e.txt\ntau = 2.5\nuse_SCL = false\nseed=3\n")
    rc = load_config(p)
    assert rc.train.tau == 2.5 and rc.train.use_SCL is False and rc.train.seed == 3
    assert rc.edges == str(tmp_path / "data/e.txt")
    rc2 = load_config(p, {"seed": 9, "d": "16"})
    assert rc2.train.seed == 9 and rc2.train.d == 16
    # override paths stay relative to the caller, not the config file
    assert load_config(p, {"mined": "out/mined.txt"}).mined == "out/mined.txt"


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="bogus"):
        resolve({"bogus": "1"})


def test_bad_values():
    with pytest.raises(ConfigError, match="tau"):
        resolve({"tau": "hot"})
    with pytest.raises(ConfigError, match="use_S"):
        resolve({"use_S": "maybe"})
    with pytest.raises(ParseError):
        parse_config_text("no equals sign here")


def test_to_text_round_trip(tmp_path):
    rc = resolve({"tau": "0.5", "patterns": "triangle,k-core(2)", "edges": "/x/e.txt"})
    p = tmp_path / "r.cfg"
    p.write_text(rc.to_text())
    assert load_config(p) == rc


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "nope.cfg")


def test_embeddings_round_trip(tmp_path):
    z = np.random.default_rng(0).normal(size=(5, 3))
    art.write_embeddings(tmp_path / "z.txt", z)
    assert (tmp_path / "z.txt").read_text().splitlines()[0] == "5 3"
    assert art.read_embeddings(tmp_path / "z.txt").tobytes() == z.tobytes()
    (tmp_path / "bad.txt").write_text("2 3\n1 2 3\n")
    with pytest.raises(DimensionError):
        art.read_embeddings(tmp_path / "bad.txt")


def test_predictions_and_history(tmp_path):
    art.write_predictions(tmp_path / "p.txt", np.array([2, 0, 1]))
    assert (tmp_path / "p.txt").read_text() == "0 2\n1 0\n2 1\n"
    assert art.read_predictions(tmp_path / "p.txt").tolist() == [2, 0, 1]
    (tmp_path / "bare.txt").write_text("1\n1\n0\n")
    assert art.read_predictions(tmp_path / "bare.txt").tolist() == [1, 1, 0]
    art.write_loss_history(tmp_path / "h.csv", [1.5, 0.25])
    assert (tmp_path / "h.csv").read_text().splitlines() == ["epoch,loss", "1,1.5", "2,0.25"]
    assert art.read_loss_history(tmp_path / "h.csv") == [1.5, 0.25]


def test_saved_config_reloads_from_its_directory(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "data").mkdir()
    rc = resolve({"edges": "data/e.txt", "seed": "4"})
    (tmp_path / "run").mkdir()
    (tmp_path / "run" / "config.cfg").write_text(rc.to_text(relative_to="run"))
    back = load_config(tmp_path / "run" / "config.cfg")
    assert Path(back.edges).resolve() == (tmp_path / "data" / "e.txt").resolve()
    assert back.train == rc.train
