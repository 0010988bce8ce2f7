"""Batch stages behind the command-line interface.

Each ``stage_*`` function takes a :class:`PipelineConfig`, does its work (or
only validation when ``dry_run`` is set) and returns a :class:`StageResult`
whose report is also written as JSON into the output directory.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import report
from .config import ConfigFileError, PipelineConfig
from .dsp import read_wav
from .dsp.tracks import formant_track_to_text, pitch_track_to_text
from .features import extract_file_features, segments_from_text, segments_to_text
from .infomeasures import SurprisalSeries, informativity, sequence_surprisals
from .ingest import ProcessBackend, TableBackend, read_ids, read_manifest, run_ingest
from .ipa_tok import Vocabulary, decode_tokens, encode, is_vowel, tokenize
from .lm import (
    init_model, model_from_checkpoint, read_checkpoint, save_checkpoint, train,
)
from .merge import (
    LabelMap, MergeError, align_streams, build_records, map_labels, normalize_records, write_table,
)
from .textgrid import TextGridError, find_tier, parse_textgrid

logger = logging.getLogger(__name__)


class StageError(RuntimeError):
    """Configuration or input problem that stops a stage before it starts."""


@dataclass
class StageResult:
    name: str
    exit_code: int = 0
    report: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)


def _require(cfg: PipelineConfig, key: str, kind: str = "exists") -> Path:
    p = cfg.path(key)
    if p is None:
        raise StageError(f"configuration key {key} is required")
    if kind == "file" and not p.is_file():
        raise StageError(f"{key}: file {p} does not exist")
    if kind == "dir" and not p.is_dir():
        raise StageError(f"{key}: directory {p} does not exist")
    return p


def _write_report(cfg: PipelineConfig, name: str, rep: dict) -> Path:
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name}_report.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(rep, fh, indent=2, ensure_ascii=False, sort_keys=True)
        fh.write("\n")
    return path


def _vocab_path(cfg: PipelineConfig) -> Path:
    p = cfg.path("paths.vocab")
    if p is None and cfg.path("paths.data_dir") is not None:
        p = cfg.path("paths.data_dir") / "vocab.txt"
    if p is None:
        raise StageError("set paths.vocab or paths.data_dir")
    return p


def _checkpoint_path(cfg: PipelineConfig) -> Path:
    return cfg.path("paths.checkpoint") or cfg.out_dir / "model.ckpt"


def make_backend(cfg: PipelineConfig):
    kind = cfg["g2p.backend"]
    if kind == "table":
        return TableBackend.from_tsv(_require(cfg, "g2p.table", "file"))
    if kind == "process":
        return ProcessBackend(list(cfg["g2p.command"]), name=str(cfg["g2p.command"][0]),
                              version_cmd=cfg["g2p.version_command"])
    raise ConfigFileError(f"unknown g2p.backend {kind!r} (expected 'table' or 'process')")


# --------------------------------------------------------------------------
# ingest

def stage_ingest(cfg: PipelineConfig, dry_run: bool = False) -> StageResult:
    manifest = _require(cfg, "paths.manifest", "file")
    data_dir = _require(cfg, "paths.data_dir")
    docs = read_manifest(manifest)
    if not docs:
        raise StageError(f"manifest {manifest} lists no files")
    missing = [str(p) for p in docs if not p.is_file()]
    if missing:
        raise StageError(f"manifest entries not found: {missing}")
    backend = make_backend(cfg)
    res = StageResult("ingest")
    if dry_run:
        res.report = {"documents": len(docs), "backend": backend.name, "data_dir": str(data_dir)}
        return res
    prov = run_ingest(manifest, data_dir, backend, ratio=float(cfg["ingest.ratio"]),
                      seed=int(cfg["seed"]), jobs=cfg.jobs)
    res.report = prov
    res.outputs = [data_dir / n for n in ("train.bin", "dev.bin", "vocab.txt", "provenance.json")]
    return res


# --------------------------------------------------------------------------
# train

def stage_train(cfg: PipelineConfig, dry_run: bool = False, resume: bool = False) -> StageResult:
    data_dir = _require(cfg, "paths.data_dir", "dir")
    for name in ("train.bin", "dev.bin"):
        if not (data_dir / name).is_file():
            raise StageError(f"{data_dir / name} missing; run ingest first")
    vocab = Vocabulary.load(_require_file(_vocab_path(cfg)))
    mcfg = cfg.model(vocab_size=vocab.size)
    tcfg = cfg.train()
    train_ids, dev_ids = read_ids(data_dir / "train.bin"), read_ids(data_dir / "dev.bin")
    if len(train_ids) < mcfg.block_size + 1:
        raise StageError(f"train set has {len(train_ids)} tokens, fewer than block_size + 1 = {mcfg.block_size + 1}")
    ckpt_path = _checkpoint_path(cfg)
    res = StageResult("train")
    if dry_run:
        res.report = {"model": mcfg.to_dict(), "train": tcfg.to_dict(), "checkpoint": str(ckpt_path),
                      "n_train": int(len(train_ids)), "n_dev": int(len(dev_ids))}
        return res

    previous = None
    if resume:
        if not ckpt_path.is_file():
            raise StageError(f"--resume given but {ckpt_path} does not exist")
        previous = read_checkpoint(ckpt_path.read_bytes(), vocab.digest())
        model = model_from_checkpoint(previous)
        model.train()
    else:
        model = init_model(mcfg, seed=tcfg.seed)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    log_path = cfg.out_dir / "train_log.jsonl"
    if not resume and log_path.exists():
        log_path.unlink()
    ckpt = train(model, train_ids, dev_ids, tcfg, vocab_hash=vocab.digest(), log_path=log_path, resume=previous)
    ckpt_path.parent.mkdir(parents=True, exist_ok=True)
    ckpt_path.write_bytes(save_checkpoint(ckpt))
    res.report = {"checkpoint": str(ckpt_path), "best_iteration": ckpt.iteration, "dev_loss": ckpt.dev_loss,
                  **ckpt.extra}
    res.outputs = [ckpt_path, log_path]
    if cfg["report.figures"]:
        res.outputs.append(report.plot_training_log(log_path, cfg.out_dir / "figures" / "training.png"))
    return res


def _require_file(p: Path) -> Path:
    if not p.is_file():
        raise StageError(f"file {p} does not exist")
    return p


# --------------------------------------------------------------------------
# surprisal

SURPRISAL_COLUMNS = ["position", "token", "token_id", "context_length", "surprisal", "entropy", "flag"]


def surprisal_table(series: SurprisalSeries, vocab: Vocabulary) -> bytes:
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(SURPRISAL_COLUMNS)
    tokens = decode_tokens(series.ids, vocab)
    for i, tok in enumerate(tokens):
        s, e = series.surprisal[i], series.entropy[i]
        defined = math.isfinite(s)
        w.writerow([i, tok, int(series.ids[i]), int(series.context_length[i]),
                    repr(float(s)) if defined else "", repr(float(e)) if defined else "",
                    "" if defined else "undefined"])
    return buf.getvalue().encode("utf-8")


def read_surprisal_table(data: bytes, vocab: Vocabulary | None = None) -> SurprisalSeries:
    rows = list(csv.DictReader(io.StringIO(data.decode("utf-8"), newline="")))
    ids = np.array([int(r["token_id"]) for r in rows], dtype=np.int64)
    if vocab is not None:
        for r in rows:
            if vocab.tokens[int(r["token_id"])] != r["token"]:
                raise MergeError(f"surprisal table token {r['token']!r} does not match the vocabulary")
    num = lambda s: float(s) if s else math.nan
    return SurprisalSeries(
        ids=ids,
        context_length=np.array([int(r["context_length"]) for r in rows], dtype=np.int64),
        surprisal=np.array([num(r["surprisal"]) for r in rows]),
        entropy=np.array([num(r["entropy"]) for r in rows]),
        window=int(max((int(r["context_length"]) for r in rows), default=0)),
    )


def _load_model(cfg: PipelineConfig):
    vocab = Vocabulary.load(_require_file(_vocab_path(cfg)))
    ckpt = read_checkpoint(_require_file(_checkpoint_path(cfg)).read_bytes(), vocab.digest())
    return model_from_checkpoint(ckpt), vocab


def _ipa_inputs(cfg: PipelineConfig) -> dict[str, Path]:
    ipa_dir = _require(cfg, "paths.ipa_dir", "dir")
    return {p.stem: p for p in sorted(ipa_dir.iterdir()) if p.suffix in (".ipa", ".txt") and p.is_file()}


def stage_surprisal(cfg: PipelineConfig, text: str | None = None, ids: list | None = None,
                    out: Path | None = None, dry_run: bool = False) -> StageResult:
    """Score one IPA string / id list (``text`` or ``ids``), or every file of paths.ipa_dir."""
    window = int(cfg["surprisal.window"])
    if window < 1:
        raise StageError("surprisal.window must be >= 1")
    res = StageResult("surprisal")
    single = text is not None or ids is not None
    inputs = {} if single else _ipa_inputs(cfg)
    model, vocab = _load_model(cfg)
    if dry_run:
        res.report = {"inputs": sorted(inputs) if inputs else ["<single>"], "window": window}
        return res

    def score(seq_ids) -> SurprisalSeries:
        return sequence_surprisals(model, seq_ids, window=window)

    if single:
        seq = encode(tokenize(text), vocab) if text is not None else [int(i) for i in ids]
        series = score(seq)
        table = surprisal_table(series, vocab)
        if out is None:
            res.report = {"table": table.decode("utf-8")}
        else:
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_bytes(table)
            res.outputs.append(out)
        res.report["floored"] = series.floored
        return res

    out_dir = cfg.out_dir / "surprisal"
    out_dir.mkdir(parents=True, exist_ok=True)
    files = {}
    for fid, path in inputs.items():
        try:
            ipa = " ".join(path.read_text(encoding="utf-8").split())
            series = score(encode(tokenize(ipa), vocab))
        except ValueError as err:
            files[fid] = {"status": "error", "error": str(err)}
            res.exit_code = 1 if cfg.strict else res.exit_code
            continue
        target = out_dir / f"{fid}.csv"
        target.write_bytes(surprisal_table(series, vocab))
        res.outputs.append(target)
        files[fid] = {"status": "ok", "tokens": len(series), "floored": series.floored}
        if cfg["report.figures"]:
            res.outputs.append(report.plot_surprisal(
                decode_tokens(series.ids, vocab), series.surprisal, series.entropy,
                cfg.out_dir / "figures" / f"{fid}.surprisal.png", title=fid))
    res.report = {"window": window, "files": files}
    _write_report(cfg, "surprisal", res.report)
    return res


# --------------------------------------------------------------------------
# extract

def read_speakers(path: Path | None) -> dict[str, tuple[str, str]]:
    """file id -> (speaker id, sex) from a ``file<TAB>speaker[<TAB>sex]`` table."""
    out = {}
    if path is None:
        return out
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            cols = line.split("\t")
            out[cols[0]] = (cols[1] if len(cols) > 1 else cols[0], cols[2].lower() if len(cols) > 2 else "")
    return out


def _pairs(cfg: PipelineConfig) -> tuple[dict, dict]:
    audio_dir = _require(cfg, "paths.audio_dir", "dir")
    tg_dir = _require(cfg, "paths.textgrid_dir", "dir")
    wavs = {p.stem: p for p in audio_dir.iterdir() if p.suffix.lower() == ".wav"}
    grids = {p.stem: p for p in tg_dir.iterdir() if p.suffix.lower() == ".textgrid"}
    return wavs, grids


def _extract_one(job) -> tuple[str, dict, dict]:
    fid, wav, grid, dsp, tier_name, label_map, figures, out_dir = job
    try:
        tg = parse_textgrid(str(grid))
        tier = find_tier(tg, tier_name)
        audio = read_wav(wav)
        vowels = []
        if dsp.optimize_ceiling:
            for iv in tier.intervals:
                target = label_map.target(iv.label)
                if target is not None and is_vowel(target):
                    vowels.append((iv.xmin, iv.xmax, target))
        ff = extract_file_features(audio, tier, dsp, is_pause=label_map.is_pause, vowel_intervals=vowels)
    except (OSError, ValueError, KeyError, TextGridError) as err:
        return fid, {"status": "error", "error": f"{type(err).__name__}: {err}"}, {}
    texts = {
        f"{fid}.pitch.tsv": pitch_track_to_text(ff.pitch),
        f"{fid}.formant.tsv": formant_track_to_text(ff.formants),
        f"{fid}.segments.tsv": segments_to_text(ff),
    }
    for name, text in texts.items():
        (out_dir / name).write_text(text, encoding="utf-8")
    if figures:
        report.plot_tracks(ff.pitch, ff.formants, tier, out_dir.parent / "figures" / f"{fid}.tracks.png", title=fid)
    return fid, {"status": "ok", "segments": len(ff.segments), "ceiling": ff.ceiling,
                 "notes": ff.notes}, texts


def stage_extract(cfg: PipelineConfig, dry_run: bool = False) -> StageResult:
    wavs, grids = _pairs(cfg)
    label_map = LabelMap.load(cfg.path("paths.label_map")) if cfg.path("paths.label_map") else LabelMap.default()
    speakers = read_speakers(cfg.path("paths.speakers"))
    res = StageResult("extract")
    files = {}
    jobs = []
    out_dir = cfg.out_dir / "features"
    base = cfg.dsp()
    for fid in sorted(set(wavs) | set(grids)):
        if fid not in wavs or fid not in grids:
            which = "audio" if fid not in wavs else "TextGrid"
            files[fid] = {"status": "error", "error": f"missing {which} file"}
            continue
        dsp = cfg.dsp()
        sex = speakers.get(fid, ("", ""))[1]
        if "dsp.formant_ceiling" not in cfg.explicit and sex in ("f", "m"):
            dsp.formant_ceiling = 5500.0 if sex == "f" else 5000.0
        jobs.append((fid, wavs[fid], grids[fid], dsp, cfg["textgrid.phone_tier"], label_map,
                     bool(cfg["report.figures"]), out_dir))
    if dry_run:
        res.report = {"pairs": [j[0] for j in jobs], "files": files, "dsp": vars(base)}
        res.exit_code = 1 if (files and cfg.strict) else 0
        return res
    out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_extract_one, jobs))
    else:
        results = [_extract_one(j) for j in jobs]
    for fid, status, texts in results:
        files[fid] = status
        res.outputs += [out_dir / n for n in texts]
    errors = [f for f, s in files.items() if s["status"] != "ok"]
    if errors and cfg.strict:
        res.exit_code = 1
    res.report = {"files": dict(sorted(files.items())), "errors": len(errors)}
    _write_report(cfg, "extract", res.report)
    return res


# --------------------------------------------------------------------------
# merge

def stage_merge(cfg: PipelineConfig, dry_run: bool = False) -> StageResult:
    tg_dir = _require(cfg, "paths.textgrid_dir", "dir")
    vocab = Vocabulary.load(_require_file(_vocab_path(cfg)))
    label_map = LabelMap.load(cfg.path("paths.label_map")) if cfg.path("paths.label_map") else LabelMap.default()
    label_map.validate(vocab)
    speakers = read_speakers(cfg.path("paths.speakers"))
    feat_dir = cfg.out_dir / "features"
    surp_dir = cfg.out_dir / "surprisal"
    strict = cfg.strict
    grids = {p.stem: p for p in tg_dir.iterdir() if p.suffix.lower() == ".textgrid"}
    res = StageResult("merge")
    if dry_run:
        res.report = {"files": sorted(grids)}
        return res

    files: dict[str, dict] = {}
    series_by_file: dict[str, SurprisalSeries] = {}
    for fid in sorted(grids):
        p = surp_dir / f"{fid}.csv"
        if p.is_file():
            series_by_file[fid] = read_surprisal_table(p.read_bytes(), vocab)
    info = informativity(
        (int(t), float(s)) for ser in series_by_file.values() for t, s in zip(ser.ids, ser.surprisal)
    )

    records = []
    for fid in sorted(grids):
        entry: dict = {"status": "ok"}
        files[fid] = entry
        try:
            if fid not in series_by_file:
                raise MergeError(f"no surprisal table {surp_dir / (fid + '.csv')}")
            seg_path = feat_dir / f"{fid}.segments.tsv"
            if not seg_path.is_file():
                raise MergeError(f"no feature file {seg_path}")
            tier = find_tier(parse_textgrid(str(grids[fid])), cfg["textgrid.phone_tier"])
            mapped = map_labels(tier, label_map, vocab, strict=strict, file_id=fid)
            series = series_by_file[fid]
            alignment = align_streams(mapped, series.ids, vocab.space_id, strict=strict)
            features = segments_from_text(seg_path.read_text(encoding="utf-8"))
            speaker = speakers.get(fid, (fid, ""))[0]
            recs = build_records(fid, speaker, mapped, alignment, features, series, info, vocab)
        except (MergeError, TextGridError, KeyError, OSError) as err:
            entry.update(status="error", error=f"{type(err).__name__}: {err}")
            continue
        n_phone = sum(1 for m in mapped if m.kind != "pause")
        entry.update(
            intervals=len(mapped), pauses=sum(1 for m in mapped if m.kind == "pause"),
            mapped=n_phone, records=len(recs), skipped=len(alignment.skipped),
            diverged=len(alignment.divergences), divergences=alignment.divergences,
            first_divergence=alignment.first_divergence,
        )
        records.extend(recs)

    try:
        problems = normalize_records(records, strict=strict)
    except ValueError as err:
        problems = [str(err)]
        files.setdefault("_normalization", {})["status"] = "error"
        files["_normalization"]["error"] = str(err)
    records.sort(key=lambda r: (r.file_id, r.start))

    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    table_path = out / "phonemes.csv"
    table_path.write_bytes(write_table(records))
    res.outputs.append(table_path)
    errors = [f for f, e in files.items() if e.get("status") != "ok"]
    res.report = {
        "files": files,
        "totals": {
            "records": len(records),
            "skipped": sum(e.get("skipped", 0) for e in files.values()),
            "diverged": sum(e.get("diverged", 0) for e in files.values()),
            "errors": len(errors),
        },
        "normalization_problems": problems,
    }
    if errors and strict:
        res.exit_code = 1
    res.outputs.append(_write_report(cfg, "merge", res.report))
    if cfg["report.figures"] and records:
        res.outputs += report.plot_records(records, out / "figures")
    return res
