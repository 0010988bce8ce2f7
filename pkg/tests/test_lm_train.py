import json
import math

import numpy as np
import pytest
import torch

from phonoinfo.ingest import split_corpus
from phonoinfo.lm import (
    REFERENCE_TRAIN_CONFIG, ConfigError, ModelConfig, TrainConfig, forward, init_model, learning_rate,
    model_from_checkpoint, train,
)
from synth import MICRO_MODEL, MICRO_TRAIN, period8_corpus


def test_schedule_warmup_then_cosine():
    t = TrainConfig(lr_max=1e-3, lr_min=1e-4, max_iters=1000, warmup_frac=0.02)
    lrs = [learning_rate(i, t) for i in range(1001)]
    assert lrs[0] == pytest.approx(1e-3 / 21)
    assert np.all(np.diff(lrs[:20]) > 0)
    assert lrs[20] == pytest.approx(1e-3)
    assert np.all(np.diff(lrs[20:]) <= 1e-15)
    assert lrs[1000] == pytest.approx(1e-4)
    mid = 20 + (1000 - 20) // 2
    assert lrs[mid] == pytest.approx(0.55e-3, rel=1e-3)


def test_reference_train_defaults():
    t = REFERENCE_TRAIN_CONFIG
    assert (t.max_iters, t.eval_interval, t.eval_patience) == (60000, 250, 5)
    assert (t.lr_max, t.lr_min, t.grad_clip, t.weight_decay) == (1e-4, 1e-5, 1.0, 0.1)
    assert (t.beta1, t.beta2) == (0.9, 0.95)


def test_train_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(lr_min=1.0, lr_max=0.1)
    with pytest.raises(ConfigError):
        TrainConfig(eval_patience=0)


@pytest.fixture(scope="module")
def periodic_run(tmp_path_factory):
    split = split_corpus(period8_corpus(10000), 0.9)
    log = tmp_path_factory.mktemp("train") / "log.jsonl"
    model = init_model(ModelConfig(**MICRO_MODEL), seed=0)
    ckpt = train(model, split.train, split.dev, TrainConfig(**MICRO_TRAIN), vocab_hash="h", log_path=log)
    return ckpt, log, split


def test_periodic_corpus_learned(periodic_run):
    ckpt, _, split = periodic_run
    assert ckpt.dev_loss < 0.05
    assert ckpt.iteration <= 2000
    assert ckpt.vocab_hash == "h"
    # predictions follow the pattern
    model = model_from_checkpoint(ckpt)
    seq = split.dev[:16]
    pred = forward(model, seq[:-1]).argmax(-1).numpy()
    assert (pred[3:] == seq[4:]).all()


def test_log_records(periodic_run):
    _, log, _ = periodic_run
    recs = [json.loads(line) for line in log.read_text().splitlines()]
    evals = [r for r in recs if "dev_loss" in r]
    assert evals[0]["iteration"] == 0
    assert all(b["iteration"] - a["iteration"] == 50 for a, b in zip(evals, evals[1:-1]))
    assert evals[0]["dev_loss"] == pytest.approx(math.log(6), abs=0.3)
    assert recs[-1]["event"] == "stop"


def test_training_deterministic():
    split = split_corpus(period8_corpus(2000), 0.9)
    cfg = TrainConfig(batch_size=4, lr_max=1e-3, lr_min=1e-4, max_iters=20, eval_interval=10, eval_batches=2)
    runs = [train(init_model(ModelConfig(**MICRO_MODEL), 0), split.train, split.dev, cfg) for _ in range(2)]
    for k in runs[0].weights:
        assert torch.equal(runs[0].weights[k], runs[1].weights[k])
    assert runs[0].dev_loss == runs[1].dev_loss


def test_early_stop_on_patience(tmp_path):
    # a random corpus cannot be learned: dev loss stops improving
    rng = np.random.default_rng(0)
    ids = rng.integers(0, 6, 3000)
    cfg = TrainConfig(batch_size=8, lr_max=3e-2, lr_min=3e-2, max_iters=2000, eval_interval=5,
                      eval_patience=2, eval_batches=2, warmup_frac=0.0)
    ckpt = train(init_model(ModelConfig(**MICRO_MODEL), 0), ids[:2700], ids[2700:], cfg, log_path=tmp_path / "l.jsonl")
    assert ckpt.extra["early_stop"] is True
    assert ckpt.extra["stopped_at"] < 2000
    stop = json.loads((tmp_path / "l.jsonl").read_text().splitlines()[-1])
    assert stop["early_stop"] is True and stop["iteration"] == ckpt.extra["stopped_at"]


def test_resume_continues_iterations(tmp_path):
    split = split_corpus(period8_corpus(3000), 0.9)
    cfg = TrainConfig(batch_size=8, lr_max=3e-3, lr_min=3e-4, max_iters=40, eval_interval=10, eval_batches=2)
    first = train(init_model(ModelConfig(**MICRO_MODEL), 0), split.train, split.dev,
                  TrainConfig(**{**cfg.to_dict(), "max_iters": 20}))
    assert first.iteration == 20 and first.optimizer
    model = model_from_checkpoint(first)
    second = train(model, split.train, split.dev, cfg, resume=first, log_path=tmp_path / "l.jsonl")
    recs = [json.loads(x) for x in (tmp_path / "l.jsonl").read_text().splitlines()]
    assert recs[0]["iteration"] == 20
    assert second.extra["stopped_at"] == 40
    assert second.iteration >= 20


def test_dataset_too_small():
    with pytest.raises(ValueError, match="block_size"):
        train(init_model(ModelConfig(**MICRO_MODEL)), np.zeros(10, int), np.zeros(10, int), TrainConfig(max_iters=1))
