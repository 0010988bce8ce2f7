import json
import sys

import numpy as np
import pytest

from phonoinfo.ingest import (
    BackendError, ProcessBackend, TableBackend, clean_text, ingest_documents, join_documents,
    normalize_ipa_spacing, phonemize, read_ids, read_manifest, run_ingest, split_corpus, write_ids,
)
from phonoinfo.ipa_tok import Vocabulary

TABLE = {"a": "a", "l": "l", "m": "m", "d": "d", "o": "ɔ", "k": "k", "t": "t", "cz": "t͡ʂ", "sz": "ʂ", "ę": "ɛ̃", "e": "ɛ"}


@pytest.fixture
def table_backend():
    return TableBackend(dict(TABLE))


def test_clean_text_removes_emoji():
    assert clean_text("ala 🙂 ma") == "ala ma"


def test_clean_text_collapses_whitespace():
    assert clean_text("a\t\nb") == "a b"


def test_clean_text_keeps_punctuation_and_digits():
    assert clean_text("  Ala, 2 koty!  ") == "Ala, 2 koty!"
    assert clean_text("x → y © z") == "x y z"


def test_table_backend_example(table_backend):
    out = phonemize("dom", table_backend)
    assert out.ipa == "dɔm"
    assert out.backend == "table" and out.version == "1"


def test_table_backend_longest_match_and_failure(table_backend):
    assert table_backend("czosz") == "t͡ʂɔʂ"
    with pytest.raises(BackendError, match="'q'"):
        table_backend("q")


def test_empty_text_phonemizes_to_empty(table_backend):
    assert phonemize("", table_backend).ipa == ""


def test_process_backend_round_trip():
    echo = ProcessBackend([sys.executable, "-c", "import sys; sys.stdout.write(sys.stdin.read())"],
                          name="echo", version_cmd=[sys.executable, "--version"])
    assert echo("pa ta") == "pa ta"
    assert echo.version.startswith("Python")


def test_process_backend_nonzero_exit_carries_stderr():
    bad = ProcessBackend([sys.executable, "-c", "import sys; sys.stderr.write('voice not found'); sys.exit(3)"])
    with pytest.raises(BackendError, match="voice not found"):
        bad("x")


def test_missing_program():
    with pytest.raises(BackendError):
        ProcessBackend(["/nonexistent/g2p"])("x")


def test_normalize_ipa_spacing():
    assert normalize_ipa_spacing(" pa\n ta  ") == "pa ta"


@pytest.mark.parametrize("n,train,dev", [(100, 90, 10), (10, 9, 1)])
def test_split_sizes(n, train, dev):
    s = split_corpus(np.arange(n), 0.9, seed=3)
    assert (len(s.train), len(s.dev)) == (train, dev)
    assert np.array_equal(np.concatenate([s.train, s.dev]), np.arange(n))


def test_split_errors():
    with pytest.raises(ValueError):
        split_corpus([], 0.9)
    with pytest.raises(ValueError):
        split_corpus([1], 0.9)
    with pytest.raises(ValueError):
        split_corpus([1, 2], 1.0)


def test_ids_file_round_trip(tmp_path):
    write_ids(tmp_path / "x.bin", [0, 65, 3])
    assert (tmp_path / "x.bin").stat().st_size == 6
    assert read_ids(tmp_path / "x.bin").tolist() == [0, 65, 3]


def test_join_documents():
    assert join_documents([["a"], [], ["b", "c"]]) == ["a", " ", "b", "c"]


def _corpus(tmp_path):
    (tmp_path / "a.txt").write_text("Ala ma kota.\n", encoding="utf-8")
    (tmp_path / "b.txt").write_text("Tomek 🙂 ma dom. " * 5, encoding="utf-8")
    (tmp_path / "manifest.txt").write_text("# docs\na.txt\nb.txt\n", encoding="utf-8")
    return tmp_path / "manifest.txt"


def test_read_manifest_relative(tmp_path):
    m = _corpus(tmp_path)
    assert read_manifest(m) == [tmp_path / "a.txt", tmp_path / "b.txt"]


def test_ingest_documents_parallel_matches_serial(tmp_path, table_backend):
    paths = read_manifest(_corpus(tmp_path))
    assert ingest_documents(paths, table_backend, jobs=2) == ingest_documents(paths, table_backend, jobs=1)


def test_run_ingest_outputs_and_determinism(tmp_path, table_backend):
    m = _corpus(tmp_path)
    prov = run_ingest(m, tmp_path / "out1", table_backend, seed=7)
    run_ingest(m, tmp_path / "out2", table_backend, seed=7)
    for name in ("train.bin", "dev.bin", "vocab.txt", "provenance.json"):
        assert (tmp_path / "out1" / name).read_bytes() == (tmp_path / "out2" / name).read_bytes()
    stored = json.loads((tmp_path / "out1" / "provenance.json").read_text())
    assert stored["backend"] == "table" and stored["backend_version"] == "1"
    vocab = Vocabulary.load(tmp_path / "out1" / "vocab.txt")
    assert stored["vocab_sha256"] == vocab.digest()
    assert prov["n_train"] + prov["n_dev"] == prov["n_tokens"]
    ids = np.concatenate([read_ids(tmp_path / "out1" / "train.bin"), read_ids(tmp_path / "out1" / "dev.bin")])
    text = "".join(vocab.tokens[i] for i in ids)
    assert text.startswith("ala ma kɔta tɔmɛk")


def test_run_ingest_empty_manifest(tmp_path, table_backend):
    (tmp_path / "m.txt").write_text("# nothing\n", encoding="utf-8")
    with pytest.raises(ValueError, match="no files"):
        run_ingest(tmp_path / "m.txt", tmp_path / "out", table_backend)


def test_run_ingest_empty_corpus(tmp_path, table_backend):
    (tmp_path / "e.txt").write_text("🙂 🙂\n", encoding="utf-8")
    (tmp_path / "m.txt").write_text("e.txt\n", encoding="utf-8")
    with pytest.raises(ValueError, match="empty"):
        run_ingest(tmp_path / "m.txt", tmp_path / "out", table_backend)
