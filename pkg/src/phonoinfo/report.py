"""Figures written next to the tabular outputs."""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams["axes.grid"] = True
plt.rcParams["figure.autolayout"] = True
plt.rcParams["font.size"] = 10.0
plt.rcParams["legend.fontsize"] = "small"

_SAVE = dict(dpi=120, metadata={"Software": None})


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, **_SAVE)
    plt.close(fig)
    return path


def plot_training_log(log_path, out_path) -> Path:
    """Train and dev loss (nats/token) per evaluation, learning rate on a twin axis."""
    evals = []
    with open(log_path, encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            if "dev_loss" in rec:
                evals.append(rec)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    it = [r["iteration"] for r in evals]
    ax.plot(it, [r["train_loss"] for r in evals], label="train")
    ax.plot(it, [r["dev_loss"] for r in evals], label="dev")
    ax.set_xlabel("iteration")
    ax.set_ylabel("loss (nats/token)")
    ax.set_yscale("log")
    ax2 = ax.twinx()
    ax2.plot(it, [r["lr"] for r in evals], color="0.6", lw=0.8, ls="--")
    ax2.set_ylabel("learning rate")
    ax2.grid(False)
    ax.legend(loc="upper right")
    return _save(fig, out_path)


def plot_surprisal(tokens, surprisal, entropy, out_path, title: str = "") -> Path:
    """Per-token surprisal bars with the predictive entropy overlaid."""
    n = len(tokens)
    x = np.arange(n)
    fig, ax = plt.subplots(figsize=(max(4.0, 0.25 * n + 1), 3.2))
    s = np.nan_to_num(np.asarray(surprisal, dtype=float), nan=0.0)
    ax.bar(x, s, color="tab:blue", width=0.8, label="surprisal")
    ax.plot(x, entropy, color="tab:orange", marker=".", lw=1, label="entropy")
    ax.set_xticks(x)
    ax.set_xticklabels(["␣" if t == " " else t for t in tokens], fontsize=7)
    ax.set_ylabel("bits")
    if title:
        ax.set_title(title)
    ax.legend()
    return _save(fig, out_path)


def plot_tracks(pitch, formants, tier, out_path, title: str = "") -> Path:
    """f0 and formant tracks with the phoneme boundaries of *tier*."""
    fig, (a0, a1) = plt.subplots(2, 1, figsize=(8, 5), sharex=True)
    a0.plot(pitch.times, pitch.f0, ".", ms=2, color="tab:blue")
    a0.set_ylabel("f0 (Hz)")
    for k in range(formants.freqs.shape[1]):
        a1.plot(formants.times, formants.freqs[:, k], ".", ms=1.5, label=f"F{k + 1}")
    a1.set_ylabel("formants (Hz)")
    a1.set_xlabel("time (s)")
    a1.legend(ncol=5, loc="upper right")
    if tier is not None:
        for iv in tier.intervals:
            for ax in (a0, a1):
                ax.axvline(iv.xmin, color="0.8", lw=0.5)
            a1.text(iv.midpoint, a1.get_ylim()[1], iv.label, ha="center", va="bottom", fontsize=6)
    if title:
        a0.set_title(title)
    return _save(fig, out_path)


def plot_records(records, out_dir) -> list[Path]:
    """Summary figures for the merged table: surprisal vs duration, normalized vowel space."""
    out_dir = Path(out_dir)
    paths = []
    fig, ax = plt.subplots(figsize=(5, 4))
    s = np.array([r.surprisal for r in records], dtype=float)
    d = np.array([r.duration for r in records], dtype=float) * 1000.0
    vowel = np.array([r.is_vowel for r in records], dtype=bool)
    ax.scatter(s[~vowel], d[~vowel], s=8, label="consonants", alpha=0.7)
    ax.scatter(s[vowel], d[vowel], s=8, label="vowels", alpha=0.7)
    ax.set_xlabel("surprisal (bits)")
    ax.set_ylabel("duration (ms)")
    ax.legend()
    paths.append(_save(fig, out_dir / "surprisal_duration.png"))

    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    for r in records:
        if not r.is_vowel:
            continue
        f1 = np.nanmean(r.contours["F1"]) if np.isfinite(r.contours["F1"]).any() else np.nan
        f2 = np.nanmean(r.contours["F2"]) if np.isfinite(r.contours["F2"]).any() else np.nan
        if np.isfinite(f1) and np.isfinite(f2):
            ax.text(f2, f1, r.phoneme, ha="center", va="center")
            ax.plot(f2, f1, alpha=0)
    ax.invert_xaxis()
    ax.invert_yaxis()
    ax.set_xlabel("F2 (z)")
    ax.set_ylabel("F1 (z)")
    paths.append(_save(fig, out_dir / "vowel_space.png"))
    return paths
