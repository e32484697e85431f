import json
from dataclasses import replace
from unittest.mock import patch

import numpy as np
import pytest

from biattn.bin.cli import main
from biattn.bin.manifest import RunManifest
from biattn.bin.reports import load_direction, read_token_lines
from biattn.corpus import UNK_ID, SentencePair, read_pharaoh
from biattn.decode import extract_one_to_one, force_decode, greedy_decode
from biattn.metrics import bleu, corpus_aer
from biattn.models import init_parameters
from biattn.trainer import load_checkpoint, save_checkpoint

MODEL_FLAGS = ["--embed-dim", "4", "--hidden-dim", "4", "--batch-size", "8", "--epochs", "1",
               "--validation-interval", "1"]


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    code = main(["synth", "--data", "copy-task", "--vocab-size", "8", "--pairs", "16", "--length", "2:4",
                 "--held-out", "4", "--out", str(out)])
    assert code == 0
    return out


def train_args(data_dir, out, *extra):
    return ["train", "--src", str(data_dir / "train.src"), "--tgt", str(data_dir / "train.tgt"),
            *MODEL_FLAGS, "--out", str(out), *extra]


@pytest.fixture(scope="module")
def joint_dir(data_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("joint")
    assert main(train_args(data_dir, out, "--mode", "joint")) == 0
    return out


@pytest.fixture(scope="module")
def independent_dir(data_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("independent")
    assert main(train_args(data_dir, out, "--mode", "independent")) == 0
    return out


def read_table(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    return [line.split("\t") for line in lines[1:]]


def test_synth_writes_corpus_and_manifest(data_dir):
    assert len(read_token_lines(data_dir / "train.src")) == 12
    assert len(read_token_lines(data_dir / "valid.tgt")) == 4
    assert len(read_pharaoh(data_dir / "train.gold")) == 12

    manifest = RunManifest.from_json((data_dir / "manifest.json").read_text())
    assert manifest.command == "synth"
    assert manifest.inputs["data"] == "copy"
    assert str(data_dir / "train.src") in manifest.outputs


def test_joint_training_writes_a_run_directory(joint_dir):
    assert {p.name for p in joint_dir.iterdir()} >= {"fwd.ckpt", "bwd.ckpt", "history.tsv", "manifest.json"}

    fwd, bwd = load_checkpoint(joint_dir / "fwd.ckpt"), load_checkpoint(joint_dir / "bwd.ckpt")
    assert list(fwd.models) == ["fwd"] and list(bwd.models) == ["bwd"]
    assert bwd.models["bwd"].source_vocab == fwd.models["fwd"].target_vocab

    manifest = json.loads((joint_dir / "manifest.json").read_text())
    assert manifest["command"] == "train"
    assert manifest["config"]["embed_dim"] == "4"
    assert manifest["seed"] == 1234
    assert (joint_dir / "history.tsv").read_text().startswith("step\tepoch\tobjective")


def test_independent_training_writes_both_histories(independent_dir):
    names = {p.name for p in independent_dir.iterdir()}
    assert {"fwd.ckpt", "bwd.ckpt", "history.tsv", "history.bwd.tsv"} <= names
    for row in read_table(independent_dir / "history.tsv"):
        assert row[4] == "0.0" and row[5] == "0.0"


def test_training_is_reproducible(data_dir, joint_dir, tmp_path):
    assert main(train_args(data_dir, tmp_path, "--mode", "joint")) == 0
    assert (tmp_path / "fwd.ckpt").read_bytes() == (joint_dir / "fwd.ckpt").read_bytes()
    assert (tmp_path / "history.tsv").read_text() == (joint_dir / "history.tsv").read_text()


def test_resume_continues_where_the_run_stopped(data_dir, joint_dir, tmp_path):
    resumed, fresh = tmp_path / "resumed", tmp_path / "fresh"
    assert main(train_args(data_dir, resumed, "--resume", str(joint_dir), "--epochs", "2")) == 0
    assert main(train_args(data_dir, fresh, "--epochs", "2")) == 0

    for name in ("fwd.ckpt", "bwd.ckpt"):
        a = load_checkpoint(resumed / name)
        b = load_checkpoint(fresh / name)
        assert a.progress == b.progress
        for direction, state in a.models.items():
            assert state.params == b.models[direction].params


def test_zero_lambda_warns(data_dir, tmp_path, caplog):
    assert main(train_args(data_dir, tmp_path, "--lambda", "0")) == 0
    assert "agreement term is inert" in caplog.text


@pytest.mark.parametrize(
    "argv",
    [
        ["train", "--src", "missing.src", "--tgt", "missing.tgt", "--out", "unused"],
        ["train", "--data", "copy-task", "--mode", "independent", "--init-from", "somewhere", "--out", "unused"],
        ["train", "--data", "copy-task", "--loss", "none", "--out", "unused"],
        ["train", "--data", "parity", "--out", "unused"],
        ["eval"],
        ["eval", "--aer", "missing.txt"],
    ],
)
def test_usage_errors_exit_with_2(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2


def test_argument_errors_exit_with_2():
    with pytest.raises(SystemExit) as excinfo:
        main(["train"])
    assert excinfo.value.code == 2
    with pytest.raises(SystemExit) as excinfo:
        main(["synth", "--data", "copy", "--length", "3-5", "--out", "x"])
    assert excinfo.value.code == 2


def test_translate_beam_one_is_greedy(data_dir, joint_dir, tmp_path):
    out, links = tmp_path / "out.txt", tmp_path / "out.align"
    src = data_dir / "valid.src"
    assert main(["translate", "--checkpoint", str(joint_dir), "--src", str(src), "--out", str(out),
                 "--max-len", "6", "--emit-align", str(links)]) == 0

    _, state = load_direction(joint_dir, "fwd")
    sources = read_token_lines(src)
    expected = [
        " ".join(state.target_vocab.decode(greedy_decode(state.source_vocab.encode(s), state.params, 6).tokens))
        for s in sources
    ]
    assert out.read_text(encoding="utf-8").splitlines() == expected

    link_lines = links.read_text(encoding="utf-8").splitlines()
    assert len(link_lines) == len(sources)
    for line, source, translation in zip(link_lines, sources, expected):
        pairs = [tuple(map(int, link.split("-"))) for link in line.split()]
        assert len(pairs) == len(translation.split())
        assert all(m < len(source) for m, _ in pairs)
    assert (tmp_path / "out.txt.manifest.json").is_file()


def test_translate_usage_checks(joint_dir, data_dir, tmp_path):
    src = str(data_dir / "valid.src")
    assert main(["translate", "--checkpoint", str(joint_dir), "--src", src, "--out", "x", "--beam", "0"]) == 2
    assert main(["translate", "--checkpoint", str(joint_dir), "--src", src, "--out", "x",
                 "--lexicon", src]) == 2
    assert main(["translate", "--checkpoint", str(tmp_path / "none"), "--src", src, "--out", "x"]) == 2



def checkpoint_with_best(run_dir, out_dir, token):
    """A forward checkpoint whose best-validation parameters differ from its latest ones."""
    checkpoint = load_checkpoint(run_dir / "fwd.ckpt")
    state = checkpoint.models["fwd"]
    best = init_parameters(state.params.config, seed=99)
    tensors = dict(best.tensors)
    tensors["out.b_o"] = np.zeros_like(tensors["out.b_o"])
    tensors["out.b_o"][0, token] = 50.0
    best = best.with_tensors(tensors)
    path = out_dir / "fwd.ckpt"
    save_checkpoint(replace(checkpoint, models={"fwd": replace(state, best=best)}), path)
    return path, state, best


def test_commands_use_the_best_validation_parameters(data_dir, joint_dir, tmp_path):
    path, state, best = checkpoint_with_best(joint_dir, tmp_path, token=4)
    assert best != state.params
    src, tgt = data_dir / "valid.src", data_dir / "valid.tgt"
    sources, targets = read_token_lines(src), read_token_lines(tgt)
    word = state.target_vocab.token(4)

    out = tmp_path / "out.txt"
    assert main(["translate", "--checkpoint", str(path), "--src", str(src), "--out", str(out), "--max-len", "3"]) == 0
    assert out.read_text(encoding="utf-8").splitlines() == [" ".join([word] * 3)] * len(sources)

    links = tmp_path / "links.txt"
    assert main(["align", "--checkpoint", str(path), "--src", str(src), "--tgt", str(tgt), "--out", str(links)]) == 0
    expected = []
    for s, t in zip(sources, targets):
        pair = SentencePair(tuple(state.source_vocab.encode(s)), tuple(state.target_vocab.encode(t)))
        expected.append(extract_one_to_one(force_decode(pair, best), exclude_eos=True).to_pharaoh())
    assert links.read_text(encoding="utf-8").splitlines() == expected

    result = tmp_path / "eval.tsv"
    assert main(["eval", "--checkpoint", str(path), "--direction", "fwd", "--src", str(src), "--tgt", str(tgt),
                 "--max-len", "3", "--out", str(result)]) == 0
    scores = {row[0]: float(row[2]) for row in read_table(result)}
    assert scores["bleu"] == bleu([[word] * 3 for _ in sources], [[t] for t in targets])


def test_translate_keeps_unknowns_of_empty_sources(joint_dir, tmp_path):
    path, _, _ = checkpoint_with_best(joint_dir, tmp_path, token=UNK_ID)
    src = tmp_path / "in.txt"
    src.write_text("w1 w2\n\nw3\n", encoding="utf-8")
    out, links = tmp_path / "out.txt", tmp_path / "out.align"

    assert main(["translate", "--checkpoint", str(path), "--src", str(src), "--out", str(out), "--max-len", "2",
                 "--replace-unk", "--emit-align", str(links)]) == 0

    lines = out.read_text(encoding="utf-8").splitlines()
    assert set(lines[0].split()) <= {"w1", "w2"}
    assert lines[1] == "<unk> <unk>"
    assert lines[2] == "w3 w3"
    assert links.read_text(encoding="utf-8").splitlines()[1] == ""


def test_corrupt_checkpoint_exits_with_1(joint_dir, data_dir, tmp_path):
    broken = tmp_path / "fwd.ckpt"
    broken.write_bytes((joint_dir / "fwd.ckpt").read_bytes()[:-5])
    out = tmp_path / "out.txt"
    assert main(["translate", "--checkpoint", str(broken), "--src", str(data_dir / "valid.src"),
                 "--out", str(out)]) == 1
    assert not out.exists()


@pytest.mark.parametrize("direction", ["fwd", "bwd"])
def test_align_writes_links_in_file_orientation(data_dir, joint_dir, tmp_path, direction):
    out, soft = tmp_path / "links.txt", tmp_path / "soft.tsv"
    src, tgt = data_dir / "valid.src", data_dir / "valid.tgt"
    assert main(["align", "--checkpoint", str(joint_dir), "--direction", direction, "--src", str(src),
                 "--tgt", str(tgt), "--out", str(out), "--soft-out", str(soft), "--threads", "2"]) == 0

    sources, targets = read_token_lines(src), read_token_lines(tgt)
    lines = out.read_text(encoding="utf-8").splitlines()
    assert len(lines) == len(sources)
    for line, s, t in zip(lines, sources, targets):
        links = [tuple(map(int, link.split("-"))) for link in line.split()]
        assert all(m < len(s) and n < len(t) for m, n in links)
        assert len(links) == (len(t) if direction == "fwd" else len(s))

    rows = read_table(soft)
    outputs = targets if direction == "fwd" else sources
    inputs = sources if direction == "fwd" else targets
    assert len(rows) == sum(len(y) + 1 for y in outputs)
    for row in rows:
        weights = np.array([float(w) for w in row[2:]])
        assert len(weights) == len(inputs[int(row[0])]) + 1
        assert weights.sum() == pytest.approx(1.0)


def test_eval_aer_matches_the_library(data_dir, joint_dir, tmp_path):
    links = tmp_path / "links.txt"
    src, tgt, gold = (str(data_dir / f"valid.{ext}") for ext in ("src", "tgt", "gold"))
    assert main(["align", "--checkpoint", str(joint_dir), "--src", src, "--tgt", tgt, "--out", str(links)]) == 0

    result = tmp_path / "aer.tsv"
    assert main(["eval", "--aer", str(links), "--gold", gold, "--out", str(result)]) == 0

    values = {row[0]: float(row[2]) for row in read_table(result)}
    predicted = [g.sure for g in read_pharaoh(links)]
    assert values["aer"] == corpus_aer(predicted, read_pharaoh(gold))
    assert 0.0 <= values["precision"] <= 1.0 and 0.0 <= values["recall"] <= 1.0
    assert (tmp_path / "aer.tsv.manifest.json").is_file()


def test_eval_aer_needs_gold(data_dir, tmp_path):
    assert main(["eval", "--aer", str(data_dir / "valid.gold")]) == 2


def test_eval_bleu_of_identical_files(tmp_path, capsys):
    text = tmp_path / "ref.txt"
    text.write_text("a b c d e\nf g h i j\n", encoding="utf-8")
    assert main(["eval", "--hyp", str(text), "--ref", str(text)]) == 0
    assert capsys.readouterr().out == "metric\tdirection\tvalue\nbleu\tfwd\t100.0\n"


def test_eval_compares_two_systems(tmp_path, capsys):
    ref, worse = tmp_path / "ref.txt", tmp_path / "worse.txt"
    ref.write_text("a b c d e\nf g h i j\n", encoding="utf-8")
    worse.write_text("a b x d e\nf q h i j\n", encoding="utf-8")
    assert main(["eval", "--hyp", str(ref), "--ref", str(ref), "--compare", str(worse),
                 "--resamples", "20"]) == 0
    rows = [line.split("\t") for line in capsys.readouterr().out.splitlines()[1:]]
    assert [row[0] for row in rows] == ["bleu", "bleu_compare", "bootstrap_p"]
    assert float(rows[2][2]) == 0.0


def test_eval_models_of_a_run_directory(data_dir, joint_dir, tmp_path):
    result = tmp_path / "eval.tsv"
    src, tgt, gold = (str(data_dir / f"valid.{ext}") for ext in ("src", "tgt", "gold"))
    assert main(["eval", "--checkpoint", str(joint_dir), "--src", src, "--tgt", tgt, "--gold", gold,
                 "--max-len", "6", "--out", str(result)]) == 0

    rows = read_table(result)
    assert [(row[0], row[1]) for row in rows] == [
        ("bleu", "fwd"), ("aer", "fwd"), ("entropy", "fwd"),
        ("bleu", "bwd"), ("aer", "bwd"), ("entropy", "bwd"),
        ("agreement_mul", "both"),
    ]
    assert all(np.isfinite(float(row[2])) for row in rows)


def test_analyze_compares_two_runs(data_dir, joint_dir, independent_dir, tmp_path):
    out = tmp_path / "entropy.tsv"
    assert main(["analyze", "--independent", str(independent_dir), "--joint", str(joint_dir),
                 "--src", str(data_dir / "train.src"), "--tgt", str(data_dir / "train.tgt"),
                 "--out", str(out)]) == 0

    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "token\tband\tfrequency\tindependent\tjoint"
    frequencies = [int(line.split("\t")[2]) for line in lines[1:]]
    assert frequencies == sorted(frequencies, reverse=True)
    assert sum(frequencies) == sum(len(t) for t in read_token_lines(data_dir / "train.tgt"))


def test_sweep_writes_one_row_per_setting_and_direction(tmp_path):
    assert main(["sweep", "--data", "copy-task", "--vocab-size", "8", "--pairs", "12", "--length", "2:3",
                 "--held-out", "4", "--settings", "independent,mul", *MODEL_FLAGS, "--out", str(tmp_path)]) == 0

    rows = read_table(tmp_path / "sweep.tsv")
    assert [(row[0], row[1]) for row in rows] == [
        ("independent", "fwd"), ("independent", "bwd"), ("mul", "fwd"), ("mul", "bwd"),
    ]
    assert all(row[3] != "-" for row in rows)
    assert (tmp_path / "mul" / "fwd.ckpt").is_file()


def test_sweep_needs_validation_data(tmp_path):
    assert main(["sweep", "--data", "copy-task", "--pairs", "8", "--out", str(tmp_path)]) == 2


def test_unexpected_failures_exit_with_1(data_dir, tmp_path):
    with patch("biattn.bin.cli.train_joint", side_effect=OSError("disk full")):
        assert main(train_args(data_dir, tmp_path)) == 1
