"""Acceptance checks, one per criterion, each printing a PASS/FAIL line.

Run directly (``python3 tests/test_acceptance.py``) or through pytest.
"""

import contextlib
import functools
import io
import math
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest
import torch
from scipy.signal import lfilter

sys.path.insert(0, str(Path(__file__).parent))

from phonoinfo.cli import main as cli_main
from phonoinfo.dsp import (
    AudioBuffer, burg_lpc, extract_formants, extract_pitch, lobanov_normalize, lpc_to_formants,
    spectral_centroid, spectral_tilt,
)
from phonoinfo.dsp.lpc import predictor_from_poles
from phonoinfo.infomeasures import entropy, sequence_surprisals, surprisal
from phonoinfo.ingest import split_corpus
from phonoinfo.ipa_tok import build_vocabulary, decode, encode, tokenize
from phonoinfo.lm import REFERENCE_CONFIG, ModelConfig, TrainConfig, count_parameters, forward, init_model, loss, train
from phonoinfo.merge import CONTOURS, read_table, table_columns
from phonoinfo.textgrid import parse_textgrid, serialize_textgrid
from synth import (
    MICRO_MODEL, MICRO_TRAIN, build_project, finite_difference_errors, impulse_vowel, n_nonpause,
    period8_corpus, sine,
)


def c1():
    n = count_parameters(REFERENCE_CONFIG)
    cfg = REFERENCE_CONFIG
    shape = (cfg.n_layers, cfg.n_heads, cfg.d_embed, cfg.block_size, cfg.vocab_size)
    rel = abs(n - 85e6) / 85e6
    return shape == (12, 12, 768, 256, 66) and rel < 0.01, f"{n:,} parameters, {rel:.2%} from 85M"


def c2():
    target = math.log2(66)
    s = surprisal(1 / 66)
    h = entropy(np.full(66, 1 / 66))
    ok = abs(s - target) < 1e-9 and abs(h - target) < 1e-9 and round(target, 4) == 6.0444
    return ok, f"surprisal {s:.12f}, entropy {h:.12f}, log2 66 = {target:.12f}"


@functools.lru_cache(maxsize=None)
def _periodic_model():
    split = split_corpus(period8_corpus(10000), 0.9)
    cfg = ModelConfig(**MICRO_MODEL)
    model = init_model(cfg, seed=0)
    t0 = time.perf_counter()
    ckpt = train(model, split.train, split.dev, TrainConfig(**{**MICRO_TRAIN, "max_iters": 2000}))
    return model, ckpt, split, time.perf_counter() - t0


def c3():
    model, ckpt, _, elapsed = _periodic_model()
    c = ckpt.config
    ok = (c.n_layers <= 4 and c.d_embed <= 64 and ckpt.dev_loss < 0.05 and ckpt.iteration <= 2000
          and elapsed < 600)
    return ok, (f"micro model dev loss {ckpt.dev_loss:.4f} nats at iteration {ckpt.iteration} "
                f"(stopped at {ckpt.extra['stopped_at']}), {elapsed:.1f} s")


def c4():
    cfg = ModelConfig(n_layers=1, n_heads=2, d_embed=8, block_size=8, vocab_size=10)
    model = init_model(cfg, seed=0).double()
    g = torch.Generator().manual_seed(0)
    with torch.no_grad():
        for p in model.parameters():
            p.add_(0.3 * torch.randn(p.shape, generator=g, dtype=torch.float64))
    x = torch.randint(0, 10, (3, 8), generator=g)
    y = torch.randint(0, 10, (3, 8), generator=g)
    err = finite_difference_errors(model, x, y)
    frac = float((err < 1e-4).mean())
    return model.num_parameters() <= 2000 and frac >= 0.99, (
        f"{model.num_parameters()} parameters, {frac:.2%} of coordinates with relative error < 1e-4")


def c5():
    track = extract_pitch(AudioBuffer(sine(150.0, 1.0, 16000), 16000), 0.01, 75.0, 300.0)
    voiced = track.f0[track.voiced]
    frac = float((np.abs(voiced - 150.0) <= 2.0).mean()) if len(voiced) else 0.0
    return frac >= 0.95 and track.voiced.mean() >= 0.95, (
        f"{track.voiced.mean():.1%} frames voiced, {frac:.1%} of voiced within 2 Hz")


def c6():
    audio = AudioBuffer(impulse_vowel((500, 1500), (50, 100), 100.0, 1.0, 10000), 10000)
    tr = extract_formants(audio, time_step=0.01, window=0.025, max_formants=5, ceiling=5000.0, preemph_from=50.0)
    f1, f2 = np.nanmedian(tr.freqs[:, 0]), np.nanmedian(tr.freqs[:, 1])
    ok = abs(f1 - 500) <= 25 and abs(f2 - 1500) <= 75
    return ok, f"median F1 {f1:.1f} Hz, F2 {f2:.1f} Hz"


def c7():
    fs = 10000.0
    a_true = predictor_from_poles([0.95j, -0.95j])
    noise = np.random.default_rng(0).standard_normal(100_000)
    x = lfilter([1.0], np.concatenate([[1.0], -a_true]), noise)
    ((f, b),) = lpc_to_formants(burg_lpc(x, 2), fs)
    ok = abs(f - 2500) <= 25 and abs(b - 163.3) <= 0.05 * 163.3
    return ok, f"Burg on AR(2) noise: F {f:.1f} Hz, B {b:.1f} Hz"


def c8():
    exact = lobanov_normalize({"s": {"F1": [400.0, 500.0, 600.0]}})["s"]["F1"].tolist()
    rng = np.random.default_rng(0)
    data = {f"s{i}": {"F1": rng.normal(500, 60 + 10 * i, 50), "F2": rng.normal(1500, 200, 50)} for i in range(5)}
    out = lobanov_normalize(data)
    worst = max(max(abs(v.mean()), abs(v.std(ddof=1) - 1)) for spk in out.values() for v in spk.values())
    return exact == [-1.0, 0.0, 1.0] and worst < 1e-9, f"{exact}; worst mean/sd deviation {worst:.1e}"


def c9():
    cen = spectral_centroid(sine(1000.0, 0.5, 16000), 16000)
    x = lfilter([1.0], [1.0, -0.95], np.random.default_rng(1).standard_normal(20000))
    tilt = spectral_tilt(x)
    alt = spectral_tilt(np.tile([1.0, -1.0], 8000))
    ok = abs(cen - 1000) <= 10 and abs(tilt - 0.95) <= 0.03 and abs(alt + 1) < 1e-3
    return ok, f"centroid {cen:.2f} Hz, one-pole tilt {tilt:.4f}, alternating tilt {alt:.6f}"


def c10():
    from test_ipa_tok import generated_corpus

    corpus = generated_corpus(1000)
    vocab = build_vocabulary(t for s in corpus for t in tokenize(s))
    vocab2 = build_vocabulary(t for s in reversed(corpus) for t in tokenize(s))
    lossless = all("".join(tokenize(s)) == s for s in corpus)
    round_trip = all(decode(encode(tokenize(s), vocab), vocab) == s for s in corpus)
    n_tie = sum("͡" in s or "͜" in s for s in corpus)
    ok = lossless and round_trip and vocab.digest() == vocab2.digest() and n_tie > 0
    return ok, f"1000 strings ({n_tie} with tie bars), vocabulary of {vocab.size}, lossless={lossless}"


def c11():
    model, _, split, _ = _periodic_model()
    model.eval()
    seg_len = model.config.block_size + 1
    bits, ce = [], []
    for start in range(0, len(split.dev) - seg_len + 1, seg_len):
        seg = split.dev[start:start + seg_len]
        bits.append(np.nanmean(sequence_surprisals(model, seg, window=seg_len - 1).surprisal))
        ce.append(loss(forward(model, seg[:-1]), torch.as_tensor(seg[1:])) / math.log(2))
    diff = abs(float(np.mean(bits)) - float(np.mean(ce)))
    return diff < 1e-6, f"{len(bits)} dev segments, mean surprisal {np.mean(bits):.6f} bits, |diff| {diff:.1e}"


def c12():
    with tempfile.TemporaryDirectory() as tmp:
        cfg = build_project(Path(tmp) / "proj")
        with contextlib.redirect_stdout(io.StringIO()):
            codes = [cli_main([cmd, "--config", str(cfg)]) for cmd in ("extract", "surprisal", "merge")]
        raw = (Path(tmp) / "proj" / "out" / "phonemes.csv").read_bytes()
        rows = read_table(raw)
        header = raw.split(b"\r\n")[0].decode().split(",")
        contour_cols = [c for c in table_columns() if c[-2:] in {f"_{k}" for k in range(1, 10)}]
        ok = (codes == [0, 0, 0] and len(rows) == n_nonpause() and header == table_columns()
              and len(contour_cols) == 9 * len(CONTOURS) and rows[0]["surprisal_flag"] == "undefined")
        return ok, (f"exit codes {codes}, {len(rows)} rows for {n_nonpause()} non-pause intervals, "
                    f"{len(contour_cols)} contour columns, first flag {rows[0]['surprisal_flag']!r}")


def c13():
    from hypothesis import find, settings
    from strategies import textgrids

    worst = [0.0]
    seen = [0]

    def differs(tg):
        back = parse_textgrid(serialize_textgrid(tg))
        seen[0] += 1
        same = [t.name for t in back.tiers] == [t.name for t in tg.tiers]
        dt = abs(back.xmin - tg.xmin) + abs(back.xmax - tg.xmax)
        for a, b in zip(back.tiers, tg.tiers):
            same &= len(a) == len(b) and all(x.label == y.label for x, y in zip(a, b))
            for x, y in zip(a, b):
                dt = max(dt, abs(x.xmin - y.xmin), abs(x.xmax - y.xmax))
        worst[0] = max(worst[0], dt)
        return not same or dt > 1e-9

    try:
        find(textgrids(), differs, settings=settings(max_examples=200, database=None, deadline=None))
        return False, "counterexample found"
    except Exception as err:  # hypothesis raises NoSuchExample when nothing fails
        if type(err).__name__ != "NoSuchExample":
            raise
    return seen[0] >= 100, f"{seen[0]} generated TextGrids, worst time error {worst[0]:.1e} s"


CRITERIA = [c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11, c12, c13]


def report(i: int) -> tuple[bool, str]:
    ok, detail = CRITERIA[i - 1]()
    return ok, f"criterion {i:2d}: {'PASS' if ok else 'FAIL'}  {detail}"


@pytest.mark.parametrize("i", range(1, len(CRITERIA) + 1))
def test_criterion(i, capsys):
    ok, line = report(i)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [report(i) for i in range(1, len(CRITERIA) + 1)]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
