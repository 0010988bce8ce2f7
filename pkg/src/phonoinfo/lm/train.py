"""Training loop: AdamW, warmup + cosine schedule, periodic dev evaluation, early stopping."""

from __future__ import annotations

import copy
import json
import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
import torch

from .checkpoint import Checkpoint, model_weights
from .model import GPT, ConfigError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 64
    lr_max: float = 1e-4
    lr_min: float = 1e-5
    max_iters: int = 60_000
    eval_interval: int = 250
    eval_patience: int = 5
    grad_clip: float = 1.0
    seed: int = 0
    warmup_frac: float = 0.02
    weight_decay: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.95
    eval_batches: int = 20

    def __post_init__(self):
        if self.lr_min > self.lr_max:
            raise ConfigError(f"lr_min {self.lr_min} > lr_max {self.lr_max}")
        if self.batch_size < 1 or self.max_iters < 0 or self.eval_interval < 1 or self.eval_patience < 1:
            raise ConfigError("batch_size, eval_interval and eval_patience must be >= 1, max_iters >= 0")
        if not 0.0 <= self.warmup_frac < 1.0:
            raise ConfigError(f"warmup_frac must be in [0, 1), got {self.warmup_frac}")

    def to_dict(self) -> dict:
        return asdict(self)


REFERENCE_TRAIN_CONFIG = TrainConfig(batch_size=64, lr_max=1e-4, lr_min=1e-5, max_iters=60_000,
                                     eval_interval=250, eval_patience=5)


def learning_rate(it: int, t: TrainConfig) -> float:
    """Linear warmup to lr_max, then cosine decay to lr_min at max_iters."""
    warmup = int(t.warmup_frac * t.max_iters)
    if it < warmup:
        return t.lr_max * (it + 1) / (warmup + 1)
    if it >= t.max_iters:
        return t.lr_min
    ratio = (it - warmup) / max(t.max_iters - warmup, 1)
    return t.lr_min + 0.5 * (1.0 + math.cos(math.pi * ratio)) * (t.lr_max - t.lr_min)


def _windows(data: torch.Tensor, offsets: np.ndarray, length: int) -> tuple[torch.Tensor, torch.Tensor]:
    idx = torch.as_tensor(offsets, dtype=torch.long)[:, None] + torch.arange(length + 1)[None, :]
    chunk = data[idx]
    return chunk[:, :-1], chunk[:, 1:]


def _make_optimizer(model: GPT, t: TrainConfig) -> torch.optim.AdamW:
    decay = [p for p in model.parameters() if p.dim() >= 2]
    no_decay = [p for p in model.parameters() if p.dim() < 2]
    return torch.optim.AdamW(
        [{"params": decay, "weight_decay": t.weight_decay}, {"params": no_decay, "weight_decay": 0.0}],
        lr=t.lr_max, betas=(t.beta1, t.beta2), foreach=False,
    )


def optimizer_tensors(model: GPT, opt: torch.optim.Optimizer) -> dict:
    names = {id(p): n for n, p in model.named_parameters()}
    out = {}
    for group in opt.param_groups:
        for p in group["params"]:
            state = opt.state.get(p)
            if not state:
                continue
            name = names[id(p)]
            out[f"{name}.exp_avg"] = state["exp_avg"].detach().clone()
            out[f"{name}.exp_avg_sq"] = state["exp_avg_sq"].detach().clone()
            out[f"{name}.step"] = torch.as_tensor(state["step"], dtype=torch.float32).reshape(()).clone()
    return out


def _restore_optimizer(model: GPT, opt: torch.optim.Optimizer, tensors: dict) -> None:
    for name, p in model.named_parameters():
        if f"{name}.exp_avg" not in tensors:
            continue
        opt.state[p] = {
            "step": tensors[f"{name}.step"].clone().reshape(()),
            "exp_avg": tensors[f"{name}.exp_avg"].clone(),
            "exp_avg_sq": tensors[f"{name}.exp_avg_sq"].clone(),
        }


@torch.no_grad()
def evaluate(model: GPT, data: torch.Tensor, offsets: np.ndarray, length: int, batch_size: int) -> float:
    """Mean next-token cross-entropy (nats) over the windows starting at *offsets*."""
    was_training = model.training
    model.eval()
    total, count = 0.0, 0
    for i in range(0, len(offsets), batch_size):
        x, y = _windows(data, offsets[i:i + batch_size], length)
        _, l = model(x, y)
        total += float(l) * y.numel()
        count += y.numel()
    model.train(was_training)
    return total / count


def train(
    model: GPT,
    train_ids,
    dev_ids,
    t: TrainConfig,
    vocab_hash: str = "",
    log_path=None,
    resume: Checkpoint | None = None,
) -> Checkpoint:
    """Train *model* in place and return the best-dev-loss checkpoint.

    Batches are ``batch_size`` random windows of ``block_size + 1``
    tokens drawn from a seeded stream. The dev loss is evaluated at
    iteration 0 and every ``eval_interval`` steps on a fixed window set;
    training stops after ``eval_patience`` consecutive evaluations without
    improvement. The returned checkpoint's ``extra`` records the stop
    iteration and whether training ended early.
    """
    c = model.config
    train_data = torch.as_tensor(np.asarray(train_ids), dtype=torch.long)
    dev_data = torch.as_tensor(np.asarray(dev_ids), dtype=torch.long)
    if len(train_data) < c.block_size + 1:
        raise ValueError(f"train set has {len(train_data)} tokens; need at least block_size + 1 = {c.block_size + 1}")
    if len(dev_data) < 2:
        raise ValueError("dev set needs at least 2 tokens")
    for name, d in (("train", train_data), ("dev", dev_data)):
        if int(d.min()) < 0 or int(d.max()) >= c.vocab_size:
            raise ValueError(f"{name} set contains ids outside the vocabulary")

    torch.manual_seed(t.seed)
    rng = np.random.default_rng(t.seed)
    eval_rng = np.random.default_rng([t.seed, 1])
    dev_len = min(c.block_size, len(dev_data) - 1)
    n_eval = t.eval_batches * t.batch_size
    dev_offsets = eval_rng.integers(0, len(dev_data) - dev_len, size=n_eval)
    train_eval_offsets = eval_rng.integers(0, len(train_data) - c.block_size, size=n_eval)

    opt = _make_optimizer(model, t)
    start = 0
    if resume is not None:
        start = resume.iteration
        _restore_optimizer(model, opt, resume.optimizer)
        # skip the batch offsets already consumed so the stream continues
        for _ in range(start):
            rng.integers(0, len(train_data) - c.block_size, size=t.batch_size)

    best_loss = math.inf
    best: Checkpoint | None = None
    bad_evals = 0
    stopped_early = False
    it = start
    log = open(log_path, "a", encoding="utf-8") if log_path else None

    def do_eval(it: int) -> bool:
        nonlocal best_loss, best, bad_evals
        dev_loss = evaluate(model, dev_data, dev_offsets, dev_len, t.batch_size)
        train_loss = evaluate(model, train_data, train_eval_offsets, c.block_size, t.batch_size)
        lr = learning_rate(it, t)
        logger.info("iter %d: train %.4f, dev %.4f, lr %.3g", it, train_loss, dev_loss, lr)
        if log:
            log.write(json.dumps({"iteration": it, "train_loss": train_loss, "dev_loss": dev_loss, "lr": lr}) + "\n")
            log.flush()
        if dev_loss < best_loss:
            best_loss = dev_loss
            bad_evals = 0
            best = Checkpoint(c, model_weights(model), it, dev_loss, vocab_hash,
                              optimizer=copy.deepcopy(optimizer_tensors(model, opt)))
            return False
        bad_evals += 1
        return bad_evals >= t.eval_patience

    try:
        model.train()
        while it < t.max_iters:
            if it % t.eval_interval == 0 and do_eval(it):
                stopped_early = True
                break
            lr = learning_rate(it, t)
            for group in opt.param_groups:
                group["lr"] = lr
            offsets = rng.integers(0, len(train_data) - c.block_size, size=t.batch_size)
            x, y = _windows(train_data, offsets, c.block_size)
            _, l = model(x, y)
            opt.zero_grad(set_to_none=True)
            l.backward()
            if t.grad_clip > 0:
                torch.nn.utils.clip_grad_norm_(model.parameters(), t.grad_clip)
            opt.step()
            it += 1
        if not stopped_early:
            do_eval(it)
        if log:
            log.write(json.dumps({"event": "stop", "iteration": it, "early_stop": stopped_early,
                                  "best_iteration": best.iteration, "best_dev_loss": best.dev_loss}) + "\n")
    finally:
        if log:
            log.close()

    best.extra = {"stopped_at": it, "early_stop": stopped_early, "train_config": t.to_dict()}
    return best
