"""Pipeline configuration: one TOML file of flat dotted keys, overridable from the command line."""

from __future__ import annotations

import os
import sys
from dataclasses import fields
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .features import DSPParams
from .lm.model import ModelConfig
from .lm.train import TrainConfig


class ConfigFileError(ValueError):
    pass


PATH_KEYS = (
    "paths.audio_dir", "paths.textgrid_dir", "paths.ipa_dir", "paths.manifest", "paths.label_map",
    "paths.vocab", "paths.checkpoint", "paths.out_dir", "paths.data_dir", "paths.speakers",
    "g2p.table",
)

DEFAULTS: dict[str, Any] = {
    **{k: None for k in PATH_KEYS},
    "paths.out_dir": "out",
    "textgrid.phone_tier": "MAU",
    "g2p.backend": "process",
    "g2p.command": ["espeak-ng", "-q", "--ipa=3", "-v", "pl", "--stdin"],
    "g2p.version_command": ["espeak-ng", "--version"],
    "ingest.ratio": 0.9,
    "surprisal.window": 10,
    "mode": "strict",
    "seed": 0,
    "jobs": 0,
    "report.figures": True,
    **{f"dsp.{f.name}": f.default for f in fields(DSPParams)},
    **{f"model.{f.name}": f.default for f in fields(ModelConfig)},
    **{f"train.{f.name}": f.default for f in fields(TrainConfig) if f.name != "seed"},
}


def flatten(table: dict, prefix: str = "") -> dict[str, Any]:
    out = {}
    for k, v in table.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(flatten(v, key + "."))
        else:
            out[key] = v
    return out


def parse_value(text: str) -> Any:
    """Interpret a command-line value as a TOML value, falling back to a bare string."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


class PipelineConfig:
    """Flat ``key -> value`` settings with typed accessors for each stage."""

    def __init__(self, values: dict[str, Any] | None = None, base_dir: Path | None = None):
        self.base_dir = Path(base_dir) if base_dir else Path.cwd()
        self.values = dict(DEFAULTS)
        self.explicit: set[str] = set()
        if values:
            self.update(values)

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        path = Path(path)
        try:
            with open(path, "rb") as fh:
                table = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as err:
            raise ConfigFileError(f"{path}: {err}") from None
        return cls(flatten(table), base_dir=path.parent)

    def update(self, values: dict[str, Any]) -> None:
        for k, v in values.items():
            if k not in DEFAULTS:
                raise ConfigFileError(f"unknown configuration key {k!r}")
            self.values[k] = v
            self.explicit.add(k)

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def path(self, key: str) -> Path | None:
        v = self.values[key]
        if v is None or v == "":
            return None
        p = Path(os.path.expanduser(str(v)))
        return p if p.is_absolute() else self.base_dir / p

    @property
    def out_dir(self) -> Path:
        return self.path("paths.out_dir")

    @property
    def strict(self) -> bool:
        mode = self.values["mode"]
        if mode not in ("strict", "lenient"):
            raise ConfigFileError(f"mode must be 'strict' or 'lenient', got {mode!r}")
        return mode == "strict"

    @property
    def jobs(self) -> int:
        j = int(self.values["jobs"])
        return j if j > 0 else (os.cpu_count() or 1)

    def dsp(self) -> DSPParams:
        kw = {f.name: self.values[f"dsp.{f.name}"] for f in fields(DSPParams)}
        kw["ceiling_grid"] = tuple(kw["ceiling_grid"])
        return DSPParams(**kw)

    def model(self, vocab_size: int | None = None) -> ModelConfig:
        kw = {f.name: self.values[f"model.{f.name}"] for f in fields(ModelConfig)}
        if vocab_size is not None:
            kw["vocab_size"] = vocab_size
        return ModelConfig(**kw)

    def train(self) -> TrainConfig:
        kw = {f.name: self.values[f"train.{f.name}"] for f in fields(TrainConfig) if f.name != "seed"}
        return TrainConfig(seed=int(self.values["seed"]), **kw)

    def dump(self) -> str:
        lines = []
        for k in sorted(self.values):
            v = self.values[k]
            if v is None:
                continue
            lines.append(f"{k} = {_toml_value(v)}")
        return "\n".join(lines) + "\n"


def _toml_value(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    s = str(v).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{s}"'
