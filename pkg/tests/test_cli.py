import json

import numpy as np
import pytest

from rrgru import autodiff as ad
from rrgru import cli
from rrgru.autodiff import Value
from rrgru.checkpoint import check_arrays, load_checkpoint, save_checkpoint
from rrgru.config import RunConfig, substream
from rrgru.errors import CheckpointError, ConfigError

SMALL = ["--d-e", "12", "--d-h", "12"]


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture
def prepped(tmp_path, mini_train, mini_test):
    out = tmp_path / "run"
    assert run("preprocess", "--train-file", mini_train, "--test-file", mini_test, "--out-dir", out) == 0
    return out


def test_preprocess_outputs(prepped):
    names = {p.name for p in prepped.iterdir()}
    assert {"vocab.txt", "train.cache", "test.cache", "embeddings_coverage.json", "config.txt"} <= names
    report = json.loads((prepped / "embeddings_coverage.json").read_text())
    assert report["train_examples"] == 20 and report["test_examples"] == 5 and report["seed"] == 1
    assert len((prepped / "train.cache").read_text().splitlines()) == 20


def test_preprocess_is_idempotent(prepped, mini_train, mini_test):
    first = {p.name: p.read_bytes() for p in prepped.iterdir()}
    assert run("preprocess", "--train-file", mini_train, "--test-file", mini_test, "--out-dir", prepped) == 0
    assert {p.name: p.read_bytes() for p in prepped.iterdir()} == first


def test_preprocess_missing_embeddings(tmp_path, mini_train, capsys):
    code = run("preprocess", "--train-file", mini_train, "--embeddings", tmp_path / "nope.txt", "--out-dir", tmp_path)
    assert code == cli.EXIT_DATA
    assert "embeddings file not found" in capsys.readouterr().err


def test_preprocess_parse_error_names_line(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text('1\t"The <e1>a</e1> and <e2>b</e2>."\nNot-A-Label(e1,e2)\n\n')
    assert run("preprocess", "--train-file", bad, "--out-dir", tmp_path / "o") == cli.EXIT_DATA
    assert "bad.txt:2:" in capsys.readouterr().err


def test_bad_config_value_exit_code(tmp_path):
    assert run("preprocess", "--epochs", "ten", "--out-dir", tmp_path) == cli.EXIT_CONFIG
    assert run("train", "--dropout-final", "1.5", "--out-dir", tmp_path) == cli.EXIT_CONFIG


def test_zero_epochs_checkpoint_equals_init(prepped):
    assert run("train", "--out-dir", prepped, "--epochs", 0, *SMALL) == 0
    header, arrays = load_checkpoint(prepped / "model.ckpt")
    cfg = RunConfig(d_e=12, d_h=12, out_dir=str(prepped))
    vocab = cli._load_vocab(cfg)
    init = cli.ModelParams.init(cfg.model_config(), cli._embeddings(cfg, vocab).matrix, substream(1, "init"))
    assert set(arrays) == set(init.arrays())
    for name, a in init.arrays().items():
        assert arrays[name].tobytes() == a.tobytes()
    assert header["config"]["seed"] == 1
    assert (prepped / "train.log").read_text() == "epoch\tmean_loss\ttrain_accuracy\tvalid_macro_f1\n"


def test_relation_only_checkpoint_shape(prepped):
    assert run("train", "--out-dir", prepped, "--epochs", 1, "--variant", "relation_only", *SMALL) == 0
    _, arrays = load_checkpoint(prepped / "model.ckpt")
    assert arrays["W_c"].shape == (18, 12)
    assert not any(n.startswith("gru.e1") for n in arrays)


def test_train_log_is_tab_separated(prepped):
    assert run("train", "--out-dir", prepped, "--epochs", 2, "--folds", 5, *SMALL) == 0
    rows = [l.split("\t") for l in (prepped / "train.log").read_text().splitlines()]
    assert rows[0] == ["epoch", "mean_loss", "train_accuracy", "valid_macro_f1"]
    assert [r[0] for r in rows[1:]] == ["1", "2"]
    for r in rows[1:]:
        assert len(r) == 4 and all(float(x) >= 0 for x in r[1:])


def test_eval_outputs(prepped, mini_test, capsys):
    assert run("train", "--out-dir", prepped, "--epochs", 1, *SMALL) == 0
    capsys.readouterr()
    assert run("eval", "--out-dir", prepped, "--test-file", mini_test) == 0
    assert "macro-F1" in capsys.readouterr().out
    preds = (prepped / "predictions.txt").read_text().splitlines()
    key = (prepped / "answer_key.txt").read_text().splitlines()
    assert [p.split("\t")[0] for p in preds] == ["8001", "8002", "8003", "8004", "8005"]
    assert key[0] == "8001\tEntity-Destination(e1,e2)"
    report = json.loads((prepped / "metrics.json").read_text())
    assert 0.0 <= report["macro_f1"] <= 1.0


def test_eval_empty_dataset(prepped, tmp_path):
    assert run("train", "--out-dir", prepped, "--epochs", 0, *SMALL) == 0
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    assert run("eval", "--out-dir", prepped, "--test-file", empty) == cli.EXIT_DATA


def test_eval_refuses_vocab_mismatch(prepped, mini_test, capsys):
    assert run("train", "--out-dir", prepped, "--epochs", 0, *SMALL) == 0
    with open(prepped / "vocab.txt", "a", encoding="utf-8") as fh:
        fh.write("extra\n")
    assert run("eval", "--out-dir", prepped, "--test-file", mini_test) == cli.EXIT_DATA
    assert "does not match" in capsys.readouterr().err


def test_predict_unlabeled(prepped, tmp_path):
    assert run("train", "--out-dir", prepped, "--epochs", 0, *SMALL) == 0
    unlabeled = tmp_path / "u.txt"
    unlabeled.write_text('9001\t"A <e1>cup</e1> of <e2>tea</e2>."\n9002\t"The <e2>fire</e2> made <e1>smoke</e1>."\n')
    assert run("predict", "--out-dir", prepped, "--test-file", unlabeled) == 0
    lines = (prepped / "predictions.txt").read_text().splitlines()
    assert [l.split("\t")[0] for l in lines] == ["9001", "9002"]


# checkpoints

def test_checkpoint_roundtrip_is_bitwise(tmp_path):
    rng = np.random.default_rng(0)
    arrays = {"b_c": np.zeros((18, 1)), "W_c": rng.normal(size=(18, 6)), "att.fwd": rng.normal(size=(3, 1))}
    save_checkpoint(tmp_path / "a.ckpt", arrays, {"seed": 3, "variant": "full"}, "ab" * 32)
    header, loaded = load_checkpoint(tmp_path / "a.ckpt")
    save_checkpoint(tmp_path / "b.ckpt", loaded, header["config"], header["vocab_sha256"])
    assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()
    for name in arrays:
        assert loaded[name].tobytes() == arrays[name].tobytes()


def test_checkpoint_truncated(tmp_path):
    save_checkpoint(tmp_path / "a.ckpt", {"x": np.ones((4, 4))}, {}, "00")
    data = (tmp_path / "a.ckpt").read_bytes()
    (tmp_path / "a.ckpt").write_bytes(data[:-8])
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "a.ckpt")


def test_checkpoint_shape_and_name_mismatch():
    with pytest.raises(CheckpointError):
        check_arrays({"W_c": np.zeros((18, 4))}, {"W_c": (18, 5)})
    with pytest.raises(CheckpointError):
        check_arrays({"W_c": np.zeros((18, 4))}, {"W_c": (18, 4), "b_c": (18, 1)})
    with pytest.raises(CheckpointError):
        check_arrays({"W_c": np.zeros((18, 4)), "junk": np.zeros(1)}, {"W_c": (18, 4)})


def test_load_model_rejects_wrong_shapes(prepped):
    assert run("train", "--out-dir", prepped, "--epochs", 0, *SMALL) == 0
    header, arrays = load_checkpoint(prepped / "model.ckpt")
    arrays["W_c"] = arrays["W_c"][:, :-1]
    save_checkpoint(prepped / "model.ckpt", arrays, header["config"], header["vocab_sha256"])
    with pytest.raises(CheckpointError):
        cli.load_model(RunConfig(out_dir=str(prepped)))


# configuration

def test_config_text_roundtrip(tmp_path):
    cfg = RunConfig(variant="att_bgru", epochs=7, l2_bias=True, dropout_final=0.5, train_file="a b.txt")
    (tmp_path / "c.txt").write_text(cfg.to_text())
    assert RunConfig.from_file(tmp_path / "c.txt") == cfg


def test_config_file_with_flag_override(tmp_path):
    (tmp_path / "c.txt").write_text("# comment\nepochs = 3\nvariant = nominals_only\nk = 2\n")
    args = cli.build_parser().parse_args(["train", "--config", str(tmp_path / "c.txt"), "--k", "5"])
    cfg = cli.resolve_config(args)
    assert (cfg.epochs, cfg.variant, cfg.k) == (3, "nominals_only", 5)


def test_config_errors(tmp_path):
    (tmp_path / "c.txt").write_text("epochs: 3\n")
    with pytest.raises(ConfigError, match=":1"):
        RunConfig.from_file(tmp_path / "c.txt")
    with pytest.raises(ConfigError, match="unknown"):
        RunConfig().update({"learning_rate": "1"})
    with pytest.raises(ConfigError):
        RunConfig(fold=10).validate()


def test_default_config_carries_reference_hyperparameters():
    cfg = RunConfig()
    assert (cfg.d_e, cfg.d_h, cfg.k, cfg.batch_size, cfg.l2_coeff) == (100, 100, 3, 10, 1e-5)
    assert (cfg.dropout_embed, cfg.dropout_hidden, cfg.dropout_final) == (0.3, 0.3, 0.7)
    assert (cfg.m_plus, cfg.m_minus, cfg.gamma, cfg.lr_scale) == (2.5, 0.5, 2.0, 1.0)


def test_substreams_are_independent_and_stable():
    a = substream(5, "init").random(3)
    assert np.array_equal(a, substream(5, "init").random(3))
    assert not np.array_equal(a, substream(5, "shuffle").random(3))
    assert not np.array_equal(a, substream(6, "init").random(3))


# gradient check command

def test_gradcheck_passes(capsys):
    assert run("gradcheck", "--variant", "att_bgru") == 0
    out = capsys.readouterr().out
    assert "[att_bgru]" in out and "max relative error" in out.lower()


def test_gradcheck_detects_injected_fault(monkeypatch):
    def broken_tanh(a):
        t = np.tanh(a.data)

        def backward(out):
            a.grad += out.grad * (1.0 - t)

        return Value._make(t, "tanh", (a,), backward)

    monkeypatch.setattr(ad, "tanh", broken_tanh)
    assert run("gradcheck", "--variant", "relation_only") == cli.EXIT_GRADCHECK
