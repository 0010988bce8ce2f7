"""Decoder-only transformer over phoneme token ids (GPT-2 layout)."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import torch
import torch.nn as nn
from torch.nn import functional as F


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    n_layers: int = 12
    n_heads: int = 12
    d_embed: int = 768
    block_size: int = 256
    vocab_size: int = 66
    dropout: float = 0.0

    def __post_init__(self):
        for name in ("n_layers", "n_heads", "d_embed", "block_size", "vocab_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.d_embed % self.n_heads:
            raise ConfigError(f"d_embed {self.d_embed} not divisible by n_heads {self.n_heads}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")

    def to_dict(self) -> dict:
        return asdict(self)


REFERENCE_CONFIG = ModelConfig(n_layers=12, n_heads=12, d_embed=768, block_size=256, vocab_size=66, dropout=0.0)


def count_parameters(c: ModelConfig) -> int:
    """Trainable parameters; the tied output projection is counted once.

    Per block: attention qkv + output projection (4 d^2 + 4 d), the
    feed-forward pair (8 d^2 + 5 d) and two layer norms (4 d).
    """
    d = c.d_embed
    return c.vocab_size * d + c.block_size * d + c.n_layers * (12 * d * d + 13 * d) + 2 * d


class CausalSelfAttention(nn.Module):
    def __init__(self, c: ModelConfig):
        super().__init__()
        self.n_heads = c.n_heads
        self.c_attn = nn.Linear(c.d_embed, 3 * c.d_embed)
        self.c_proj = nn.Linear(c.d_embed, c.d_embed)
        self.attn_dropout = nn.Dropout(c.dropout)
        self.resid_dropout = nn.Dropout(c.dropout)
        mask = torch.tril(torch.ones(c.block_size, c.block_size, dtype=torch.bool))
        self.register_buffer("mask", mask.view(1, 1, c.block_size, c.block_size), persistent=False)

    def forward(self, x):
        B, T, C = x.shape
        q, k, v = self.c_attn(x).split(C, dim=2)
        hs = C // self.n_heads
        q = q.view(B, T, self.n_heads, hs).transpose(1, 2)
        k = k.view(B, T, self.n_heads, hs).transpose(1, 2)
        v = v.view(B, T, self.n_heads, hs).transpose(1, 2)
        # explicit masked softmax keeps row t bitwise independent of later tokens
        att = (q @ k.transpose(-2, -1)) * (1.0 / math.sqrt(hs))
        att = att.masked_fill(~self.mask[:, :, :T, :T], float("-inf"))
        att = self.attn_dropout(F.softmax(att, dim=-1))
        y = (att @ v).transpose(1, 2).contiguous().view(B, T, C)
        return self.resid_dropout(self.c_proj(y))


class MLP(nn.Module):
    def __init__(self, c: ModelConfig):
        super().__init__()
        self.c_fc = nn.Linear(c.d_embed, 4 * c.d_embed)
        self.gelu = nn.GELU()
        self.c_proj = nn.Linear(4 * c.d_embed, c.d_embed)
        self.dropout = nn.Dropout(c.dropout)

    def forward(self, x):
        return self.dropout(self.c_proj(self.gelu(self.c_fc(x))))


class Block(nn.Module):
    def __init__(self, c: ModelConfig):
        super().__init__()
        self.ln_1 = nn.LayerNorm(c.d_embed)
        self.attn = CausalSelfAttention(c)
        self.ln_2 = nn.LayerNorm(c.d_embed)
        self.mlp = MLP(c)

    def forward(self, x):
        x = x + self.attn(self.ln_1(x))
        return x + self.mlp(self.ln_2(x))


class GPT(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.wte = nn.Embedding(config.vocab_size, config.d_embed)
        self.wpe = nn.Embedding(config.block_size, config.d_embed)
        self.drop = nn.Dropout(config.dropout)
        self.blocks = nn.ModuleList(Block(config) for _ in range(config.n_layers))
        self.ln_f = nn.LayerNorm(config.d_embed)
        self.lm_head = nn.Linear(config.d_embed, config.vocab_size, bias=False)
        self.lm_head.weight = self.wte.weight

    def _init_weights(self, generator: torch.Generator):
        std = 0.02
        resid_std = std / math.sqrt(2 * self.config.n_layers)
        for name, p in self.named_parameters():
            if name.endswith("c_proj.weight"):
                nn.init.normal_(p, 0.0, resid_std, generator=generator)
            elif p.dim() >= 2:
                nn.init.normal_(p, 0.0, std, generator=generator)
            elif name.endswith("weight"):
                nn.init.ones_(p)
            else:
                nn.init.zeros_(p)

    def forward(self, idx, targets=None):
        B, T = idx.shape
        if T > self.config.block_size:
            raise ValueError(f"sequence length {T} exceeds block size {self.config.block_size}")
        pos = torch.arange(T, device=idx.device)
        x = self.drop(self.wte(idx) + self.wpe(pos))
        for block in self.blocks:
            x = block(x)
        logits = self.lm_head(self.ln_f(x))
        if targets is None:
            return logits
        return logits, F.cross_entropy(logits.view(-1, logits.size(-1)), targets.reshape(-1))

    def num_parameters(self) -> int:
        return sum(p.numel() for p in self.parameters())


def init_model(config: ModelConfig, seed: int = 0) -> GPT:
    """Fresh model with N(0, 0.02) weights; residual projections scaled by 1/sqrt(2 n_layers)."""
    model = GPT(config)
    g = torch.Generator().manual_seed(seed)
    model._init_weights(g)
    return model


def _check_ids(model: GPT, ids) -> torch.Tensor:
    t = torch.as_tensor(ids, dtype=torch.long)
    if t.dim() != 1:
        raise ValueError("expected a 1-D token id sequence")
    n = t.numel()
    if not 1 <= n <= model.config.block_size:
        raise ValueError(f"sequence length {n} outside [1, {model.config.block_size}]")
    if int(t.min()) < 0 or int(t.max()) >= model.config.vocab_size:
        raise ValueError(f"token id out of range for vocabulary of size {model.config.vocab_size}")
    return t


@torch.no_grad()
def forward(model: GPT, ids) -> torch.Tensor:
    """Logits of shape (len(ids), vocab_size) for a single sequence."""
    t = _check_ids(model, ids)
    was_training = model.training
    model.eval()
    try:
        return model(t[None, :])[0]
    finally:
        model.train(was_training)


def loss(logits, targets) -> float:
    """Mean natural-log cross-entropy of *targets* under softmax(*logits*), in nats."""
    logits = torch.as_tensor(logits)
    targets = torch.as_tensor(targets, dtype=torch.long)
    if logits.dim() != 2 or targets.dim() != 1 or logits.shape[0] != targets.shape[0]:
        raise ValueError(f"shape mismatch: logits {tuple(logits.shape)}, targets {tuple(targets.shape)}")
    return float(F.cross_entropy(logits.double(), targets))


@torch.no_grad()
def next_distribution(model: GPT, context):
    """Softmax over the next token after *context*, as a float64 numpy vector."""
    if len(context) == 0:
        raise ValueError("next_distribution needs a non-empty context")
    logits = forward(model, context)[-1].double()
    return torch.softmax(logits, dim=-1).numpy()


@torch.no_grad()
def next_distributions(model: GPT, contexts) -> "numpy.ndarray":
    """Batched :func:`next_distribution` for equal-length contexts."""
    t = torch.as_tensor(contexts, dtype=torch.long)
    if t.dim() != 2 or t.shape[1] == 0:
        raise ValueError("expected a 2-D batch of non-empty contexts")
    for row in t:
        _check_ids(model, row)
    was_training = model.training
    model.eval()
    try:
        logits = model(t)[:, -1, :].double()
    finally:
        model.train(was_training)
    return torch.softmax(logits, dim=-1).numpy()
