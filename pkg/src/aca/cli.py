"""Command-line front end: ``aca <subcommand> [options]``.

Every analysis prints a JSON report (or CSV for time-series and matrix
payloads with ``--format csv``). Exit status is 0 on success, 1 when an
analysis fails (a JSON error object goes to stderr) and 2 on usage or
configuration errors.

Settings are resolved in this order, later winning: built-in defaults, the
top level of the TOML file named by ``ACA_CONFIG``, that file's table for the
command's pipeline (``[tonal]``, ``[rhythm]``, ...), command-line flags.
"""
from __future__ import annotations

import argparse
import csv
import glob
import io
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import classify as cls
from . import features as feat
from . import fingerprint as fpr
from . import rhythm, structure, tonal
from .errors import AcaError, ParameterError
from .signal import BlockSpec, read_wav, stft_magnitude

SCHEMA_VERSION = "1.0"

PIPELINE = {
    "features": "tonal", "chroma": "tonal", "key": "tonal", "f0": "tonal", "nmf": "tonal",
    "structure": "tonal",
    "novelty": "rhythm", "onsets": "rhythm", "tempo": "rhythm", "beats": "rhythm",
    "fingerprint": "fingerprint", "classify": "classify",
}
PIPELINE_DEFAULTS = {
    "tonal": {"block": 4096, "hop": 2048, "window": "hann"},
    "rhythm": {"block": 1024, "hop": 512, "window": "hann"},
    "fingerprint": {},
    "classify": {},
}
DEFAULTS = {
    "profile": "krumhansl",
    "bpm_min": 60.0,
    "bpm_max": 180.0,
    "seed": 0,
    "format": "json",
    "db": None,
    "threshold": fpr.MATCH_THRESHOLD,
}
CONFIG_KEYS = {"block", "hop", "window", *DEFAULTS}


class UsageError(Exception):
    """Bad invocation or configuration; maps to exit status 2."""


# --------------------------------------------------------------------------
# Configuration


def load_config_file(path) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib

    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise UsageError(f"ACA_CONFIG file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"ACA_CONFIG {path}: {exc}") from None
    for key, value in data.items():
        if isinstance(value, dict):
            if key not in PIPELINE_DEFAULTS:
                raise UsageError(f"ACA_CONFIG: unknown table [{key}]")
            bad = set(value) - CONFIG_KEYS
        else:
            bad = {key} - CONFIG_KEYS
        if bad:
            raise UsageError(f"ACA_CONFIG: unknown key(s) {sorted(bad)}")
    return data


def resolve_config(command: str, args: argparse.Namespace, file_config: dict | None = None) -> dict:
    pipeline = PIPELINE[command]
    cfg = {**DEFAULTS, **PIPELINE_DEFAULTS[pipeline]}
    if command == "f0" and getattr(args, "method", "acf") == "acf":
        # the ACF tracker is more robust against octave errors without tapering
        cfg["window"] = "rectangular"
    if file_config:
        cfg.update({k: v for k, v in file_config.items() if not isinstance(v, dict)})
        cfg.update(file_config.get(pipeline, {}))
    for key in CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if pipeline not in ("tonal", "rhythm"):
        for key in ("block", "hop", "window"):
            cfg.pop(key, None)
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    try:
        if "block" in cfg:
            BlockSpec(int(cfg["block"]), int(cfg["hop"]), cfg["window"])
        if not 0 < float(cfg["bpm_min"]) < float(cfg["bpm_max"]):
            raise ParameterError(f"need 0 < bpm-min < bpm-max, got {cfg['bpm_min']}, {cfg['bpm_max']}")
        if not 0.0 <= float(cfg["threshold"]) <= 1.0:
            raise ParameterError(f"threshold must lie in [0, 1], got {cfg['threshold']}")
        tonal.get_profile(cfg["profile"])
        if cfg["format"] not in ("json", "csv"):
            raise ParameterError(f"format must be json or csv, got {cfg['format']!r}")
        if int(cfg["seed"]) != cfg["seed"]:
            raise ParameterError(f"seed must be an integer, got {cfg['seed']!r}")
    except (ParameterError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid configuration: {exc}") from None


def _spec(cfg) -> BlockSpec:
    return BlockSpec(int(cfg["block"]), int(cfg["hop"]), cfg["window"])


# --------------------------------------------------------------------------
# Output helpers


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, allow_nan=False) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header is not None:
        w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _time_rows(times, matrix):
    matrix = np.asarray(matrix)
    if matrix.ndim == 1:
        matrix = matrix[:, None]
    return [[float(t), *map(float, row)] for t, row in zip(times, matrix)]


# --------------------------------------------------------------------------
# Analyses. Each returns (result payload, csv text or None).


def cmd_features(args, cfg):
    buf = read_wav(args.input)
    spec = _spec(cfg)
    spg = stft_magnitude(buf, spec)
    series = [feat.spectral_centroid(spg), feat.rms(buf, spec), feat.envelope_peak(buf, spec),
              feat.mfcc(spg, args.mel_bands, args.mfcc)]
    if cfg["format"] == "csv":
        header = ["time"] + [c for s in series for c in s.column_names()]
        values = np.hstack([s.values for s in series])
        return None, _csv(header, _time_rows(spg.frame_times, values))
    agg = feat.aggregate(series)
    return {"num_frames": spg.num_frames, "names": list(agg.names), "vector": agg.vector,
            "aggregated": agg.as_dict()}, None


def _chroma(args, cfg):
    buf = read_wav(args.input)
    return tonal.pitch_chroma(stft_magnitude(buf, _spec(cfg)), tuning=args.tuning)


def cmd_chroma(args, cfg):
    seq = _chroma(args, cfg)
    if cfg["format"] == "csv":
        return None, _csv(["time", *tonal.PITCH_CLASSES], _time_rows(seq.frame_times, seq.frames))
    avg = tonal.average_chroma(seq)
    return {"pitch_classes": list(tonal.PITCH_CLASSES), "average": avg.energies,
            "num_frames": len(seq.frame_times)}, None


def cmd_key(args, cfg):
    avg = tonal.average_chroma(_chroma(args, cfg))
    est = tonal.detect_key(avg, cfg["profile"], args.similarity)
    return {**est.to_dict(), "profile": cfg["profile"], "chroma": avg.energies}, None


def cmd_f0(args, cfg):
    buf = read_wav(args.input)
    spec = _spec(cfg)
    if args.method == "acf":
        track = tonal.acf_f0(buf, spec, fmin=args.fmin, fmax=args.fmax or 3333.0)
    else:
        track = tonal.hps_f0(stft_magnitude(buf, spec), order=args.order, fmin=args.fmin, fmax=args.fmax)
    if cfg["format"] == "csv":
        return None, _csv(["time", "f0"], _time_rows(track.frame_times, track.frequencies))
    return {"method": args.method, "times": track.frame_times, "f0": track.frequencies}, None


def cmd_nmf(args, cfg):
    buf = read_wav(args.input)
    spg = stft_magnitude(buf, _spec(cfg))
    res = tonal.nmf(spg.magnitudes.T, args.rank, args.iterations, int(cfg["seed"]))
    payload = {"rank": args.rank, "iterations": args.iterations, "seed": int(cfg["seed"]),
               "final_loss": float(res.loss_history[-1]),
               "relative_error": float(np.sqrt(res.loss_history[-1]) / max(np.linalg.norm(spg.magnitudes), 1e-300))}
    if cfg["format"] == "csv":
        if not args.output:
            raise UsageError("nmf --format csv needs -o PREFIX for the W and H matrices")
        w_path, h_path = f"{args.output}_W.csv", f"{args.output}_H.csv"
        Path(w_path).write_text(_csv(None, res.templates.tolist()))
        Path(h_path).write_text(_csv(None, res.activations.tolist()))
        payload.update(templates_csv=w_path, activations_csv=h_path)
        args.output = None  # the report itself goes to stdout
        return payload, None
    payload.update(templates=res.templates, activations=res.activations)
    return payload, None


def _novelty(args, cfg):
    return rhythm.novelty(read_wav(args.input), _spec(cfg), args.source, args.smoothing)


def cmd_novelty(args, cfg):
    curve = _novelty(args, cfg)
    if cfg["format"] == "csv":
        return None, _csv(["time", "novelty"], _time_rows(curve.times, curve.values))
    return {"source": args.source, "frame_rate": curve.frame_rate, "times": curve.times,
            "values": curve.values}, None


def cmd_onsets(args, cfg):
    onsets = rhythm.pick_onsets(_novelty(args, cfg), args.onset_threshold, args.min_distance)
    return {"onsets": onsets.times, "strengths": onsets.strengths}, None


def cmd_tempo(args, cfg):
    curve = _novelty(args, cfg)
    lo, hi = float(cfg["bpm_min"]), float(cfg["bpm_max"])
    if args.method == "acf":
        est = rhythm.tempo_acf(curve, lo, hi)
    elif args.method == "comb":
        est = rhythm.tempo_comb(curve, np.arange(lo, hi + 0.5, 1.0))
    else:
        est = rhythm.tempo_ioi(rhythm.pick_onsets(curve, args.onset_threshold, args.min_distance), lo, hi)
    return {"method": args.method, **est.to_dict()}, None


def cmd_beats(args, cfg):
    curve = _novelty(args, cfg)
    lo, hi = float(cfg["bpm_min"]), float(cfg["bpm_max"])
    tempo = rhythm.tempo_acf(curve, lo, hi)
    onsets = rhythm.pick_onsets(curve, args.onset_threshold, args.min_distance)
    grid = rhythm.track_beats(curve, onsets, tempo, lo, hi)
    return {"bpm": tempo.bpm, "beats": grid.beat_times, "bpm_track": grid.bpm_track}, None


def cmd_structure(args, cfg):
    buf = read_wav(args.input)
    spg = stft_magnitude(buf, _spec(cfg))
    frames = tonal.pitch_chroma(spg) if args.feature == "chroma" else feat.mfcc(spg)
    S = structure.ssm(frames)
    if cfg["format"] == "csv":
        step = args.downsample
        if step < 1:
            raise UsageError("--downsample must be >= 1")
        return None, _csv(None, S.values[::step, ::step].tolist())
    bounds = structure.boundary_novelty(S, args.kernel, args.boundary_threshold)
    max_lag = (S.size - 1) * S.hop
    reps = structure.repetition_lags(S, args.min_lag, args.lag_threshold).lags if args.min_lag <= max_lag else ()
    return {"feature": args.feature, "num_frames": S.size, "hop": S.hop,
            "boundaries": bounds.times, "boundary_frames": bounds.frames,
            "repetitions": [{"lag": s, "lag_frames": f, "support": v} for s, f, v in reps]}, None


def cmd_fingerprint_build(args, cfg):
    folder = Path(args.input)
    if not folder.is_dir():
        raise ParameterError(f"not a directory: {folder}")
    if not args.output:
        raise UsageError("fingerprint build needs -o DB")
    files = sorted(folder.glob("*.wav"))
    if not files:
        raise ParameterError(f"no .wav files in {folder}")
    db = fpr.FingerprintDB()
    for f in files:
        db.add(f.stem, f.name, fpr.extract_fingerprint(read_wav(f)))
    fpr.db_save(db, args.output)
    result = {"database": args.output, "tracks": [{"track_id": t, "num_words": len(db.fingerprint(t))}
                                                  for t in db.track_ids()]}
    args.output = None
    return result, None


def cmd_fingerprint_match(args, cfg):
    if not cfg["db"]:
        raise UsageError("fingerprint match needs --db")
    db = fpr.db_load(cfg["db"])
    query = fpr.extract_fingerprint(read_wav(args.input))
    match = fpr.identify(db, query, float(cfg["threshold"]))
    return {"match": None if match is None else match.to_dict(), "query_words": len(query)}, None


def _dataset_features(path, which: str):
    buf = read_wav(path)
    spec = BlockSpec(1024, 512, "hann")
    agg = feat.aggregate([feat.spectral_centroid(stft_magnitude(buf, spec)), feat.rms(buf, spec)])
    d = agg.as_dict()
    if which == "compact":
        names = ["spectral_centroid.mean", "rms.std"]
        return names, [d[n] for n in names]
    return list(agg.names), list(agg.vector)


def cmd_classify_extract(args, cfg):
    if not args.output:
        raise UsageError("classify extract needs -o CSV")
    rows, names = [], None
    for spec in args.files:
        label, _, pattern = spec.rpartition("=")
        if not label:
            raise UsageError(f"expected LABEL=GLOB, got {spec!r}")
        matches = sorted(glob.glob(pattern))
        if not matches:
            raise UsageError(f"no files match {pattern!r}")
        for path in matches:
            names, vec = _dataset_features(path, args.features)
            rows.append((path, label, vec))
    data = cls.LabeledDataset([r[2] for r in rows], [r[1] for r in rows], [r[0] for r in rows], names)
    cls.write_dataset_csv(data, args.output)
    result = {"dataset": args.output, "points": len(data), "feature_names": data.feature_names,
              "classes": data.classes}
    args.output = None
    return result, None


def cmd_classify_train(args, cfg):
    data = cls.read_dataset_csv(args.input)
    if args.algo == "knn":
        model = cls.fit_knn(data, args.k)
        summary = {"algo": "knn", "k": model.k, "points": len(model)}
    else:
        model = cls.fit_threshold(data, args.feature_index)
        summary = {"algo": "threshold", "feature_index": model.feature_index, "threshold": model.threshold,
                   "label_above": model.label_above, "label_below": model.label_below,
                   "training_accuracy": model.training_accuracy}
    cls.save_model(model, args.model)
    return {**summary, "model": args.model}, None


def cmd_classify_predict(args, cfg):
    model = cls.load_model(args.model)
    data = cls.read_dataset_csv(args.input)
    preds = [cls.predict(model, v) for v in data.vectors]
    return {"predictions": [{"source": s, "label": p} for s, p in zip(data.sources, preds)]}, None


def cmd_classify_eval(args, cfg):
    return cls.evaluate(cls.load_model(args.model), cls.read_dataset_csv(args.input)), None


def cmd_classify_loo(args, cfg):
    return {"k": args.k, **cls.leave_one_out(cls.read_dataset_csv(args.input), args.k)}, None


# --------------------------------------------------------------------------
# Parser


def _common(p, *, audio=True):
    g = p.add_argument_group("common options")
    if audio:
        g.add_argument("--block", type=int, help="block size in samples (power of two)")
        g.add_argument("--hop", type=int, help="hop size in samples")
        g.add_argument("--window", choices=["hann", "rectangular"])
    g.add_argument("--format", choices=["json", "csv"])
    g.add_argument("-o", "--output", help="write output here instead of stdout")
    g.add_argument("--no-timing", action="store_true", help="report duration_s as null")


def _rhythm_opts(p):
    p.add_argument("--source", default="spectral_flux", choices=["spectral_flux", "envelope", "rms"])
    p.add_argument("--smoothing", type=int, default=5, help="odd smoothing length in frames")
    p.add_argument("--onset-threshold", type=float, default=0.1, help="peak threshold relative to the maximum")
    p.add_argument("--min-distance", type=float, default=0.05, help="seconds between onsets")
    p.add_argument("--bpm-min", dest="bpm_min", type=float)
    p.add_argument("--bpm-max", dest="bpm_max", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aca", description="Audio content analysis toolkit.")
    parser.add_argument("--version", action="version", version=f"aca {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("features", help="spectral centroid, RMS, envelope and MFCCs")
    p.add_argument("input")
    p.add_argument("--mfcc", type=int, default=13, help="number of coefficients")
    p.add_argument("--mel-bands", type=int, default=40)
    _common(p)
    p.set_defaults(func=cmd_features)

    for name, func, helptext in (("chroma", cmd_chroma, "pitch chroma"), ("key", cmd_key, "key detection")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("input")
        p.add_argument("--tuning", type=float, default=440.0, help="A4 reference in Hz")
        if name == "key":
            p.add_argument("--profile", choices=sorted(tonal.key_profiles()))
            p.add_argument("--similarity", choices=["correlation", "euclidean"], default="correlation")
        _common(p)
        p.set_defaults(func=func)

    p = sub.add_parser("f0", help="monophonic fundamental frequency track")
    p.add_argument("input")
    p.add_argument("--method", choices=["acf", "hps"], default="acf")
    p.add_argument("--fmin", type=float, default=50.0)
    p.add_argument("--fmax", type=float, default=None)
    p.add_argument("--order", type=int, default=4, help="HPS order")
    _common(p)
    p.set_defaults(func=cmd_f0)

    p = sub.add_parser("nmf", help="factor the magnitude spectrogram into templates and activations")
    p.add_argument("input")
    p.add_argument("--rank", type=int, default=4)
    p.add_argument("--iterations", type=int, default=200)
    p.add_argument("--seed", type=int)
    _common(p)
    p.set_defaults(func=cmd_nmf)

    for name, func, helptext in (("novelty", cmd_novelty, "novelty function"),
                                 ("onsets", cmd_onsets, "onset times"),
                                 ("tempo", cmd_tempo, "tempo estimate"),
                                 ("beats", cmd_beats, "beat times")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("input")
        _rhythm_opts(p)
        if name == "tempo":
            p.add_argument("--method", choices=["acf", "comb", "ioi"], default="acf")
        _common(p)
        p.set_defaults(func=func)

    p = sub.add_parser("structure", help="self-similarity, boundaries and repetitions")
    p.add_argument("input")
    p.add_argument("--feature", choices=["chroma", "mfcc"], default="chroma")
    p.add_argument("--kernel", type=int, default=16, help="checkerboard half size in frames")
    p.add_argument("--boundary-threshold", type=float, default=0.1)
    p.add_argument("--min-lag", type=float, default=2.0, help="shortest repetition lag in seconds")
    p.add_argument("--lag-threshold", type=float, default=0.9)
    p.add_argument("--downsample", type=int, default=1, help="SSM CSV decimation factor")
    _common(p)
    p.set_defaults(func=cmd_structure)

    p = sub.add_parser("fingerprint", help="build a fingerprint database or identify a recording")
    fsub = p.add_subparsers(dest="action", metavar="ACTION", required=True)
    q = fsub.add_parser("build", help="fingerprint every .wav in a directory")
    q.add_argument("input", metavar="DIR")
    _common(q, audio=False)
    q.set_defaults(func=cmd_fingerprint_build)
    q = fsub.add_parser("match", help="identify a recording")
    q.add_argument("input")
    q.add_argument("--db")
    q.add_argument("--threshold", type=float, help="maximum bit error rate")
    _common(q, audio=False)
    q.set_defaults(func=cmd_fingerprint_match)

    p = sub.add_parser("classify", help="feature datasets, kNN and threshold classifiers")
    csub = p.add_subparsers(dest="action", metavar="ACTION", required=True)
    q = csub.add_parser("extract", help="build a dataset CSV from labelled audio globs")
    q.add_argument("files", nargs="+", metavar="LABEL=GLOB")
    q.add_argument("--features", choices=["compact", "all"], default="compact",
                   help="compact: mean centroid and std RMS; all: mean and std of both")
    _common(q, audio=False)
    q.set_defaults(func=cmd_classify_extract, input=None)
    q = csub.add_parser("train")
    q.add_argument("input", metavar="DATASET")
    q.add_argument("--algo", choices=["knn", "threshold"], default="knn")
    q.add_argument("--k", type=int, default=1)
    q.add_argument("--feature-index", type=int, default=0)
    q.add_argument("--model", required=True, help="where to write the model JSON")
    _common(q, audio=False)
    q.set_defaults(func=cmd_classify_train)
    for name, func in (("predict", cmd_classify_predict), ("eval", cmd_classify_eval)):
        q = csub.add_parser(name)
        q.add_argument("input", metavar="DATASET")
        q.add_argument("--model", required=True)
        _common(q, audio=False)
        q.set_defaults(func=func)
    q = csub.add_parser("loo", help="leave-one-out kNN accuracy")
    q.add_argument("input", metavar="DATASET")
    q.add_argument("--k", type=int, default=1)
    _common(q, audio=False)
    q.set_defaults(func=cmd_classify_loo)

    p = sub.add_parser("batch", help="run one analysis over every file matching a glob")
    p.add_argument("pattern")
    p.add_argument("analysis", choices=[c for c in PIPELINE if c not in ("fingerprint", "classify")] +
                   ["fingerprint-match"])
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-o", "--output")
    p.add_argument("--no-timing", action="store_true")
    return parser


# --------------------------------------------------------------------------
# Running


def _command_name(args) -> str:
    action = getattr(args, "action", None)
    return f"{args.command} {action}" if action else args.command


def _error_payload(exc: BaseException) -> dict:
    return {"type": type(exc).__name__, "message": str(exc)}


def analyze(args, file_config) -> dict:
    """Run a parsed single-file command and return the report (minus timing)."""
    cfg = resolve_config(args.command, args, file_config)
    result, _ = args.func(args, cfg)
    return {"schema_version": SCHEMA_VERSION, "tool_version": __version__, "command": _command_name(args),
            "input": args.input, "config": cfg, "result": result}


def _emit(text: str, output: str | None):
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _run_single(args, file_config) -> int:
    started = time.perf_counter()
    cfg = resolve_config(args.command, args, file_config)
    try:
        result, csv_text = args.func(args, cfg)
    except UsageError:
        raise
    except (AcaError, OSError) as exc:
        sys.stderr.write(dumps({"error": _error_payload(exc), "command": _command_name(args),
                                "input": args.input}))
        return 1
    if csv_text is not None:
        _emit(csv_text, args.output)
        return 0
    report = {"schema_version": SCHEMA_VERSION, "tool_version": __version__, "command": _command_name(args),
              "input": args.input, "config": cfg, "result": result,
              "duration_s": None if args.no_timing else round(time.perf_counter() - started, 6)}
    _emit(dumps(report), args.output)
    return 0


def _run_batch(args, parser, file_config) -> int:
    started = time.perf_counter()
    files = sorted(glob.glob(args.pattern, recursive=True))
    if not files:
        raise UsageError(f"no files match {args.pattern!r}")
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    sub_argv = args.analysis.split("-") if args.analysis == "fingerprint-match" else [args.analysis]
    rest = list(args.rest)
    if "-o" in rest or "--output" in rest or "csv" in rest:
        raise UsageError("batch collects JSON results; per-file -o and --format csv are not supported")
    parsed = [parser.parse_args([*sub_argv, f, *rest]) for f in files]
    cfg = resolve_config(parsed[0].command, parsed[0], file_config)

    def one(a):
        try:
            rep = analyze(a, file_config)
            return {"input": a.input, "status": "ok", "result": rep["result"]}
        except (AcaError, OSError) as exc:
            return {"input": a.input, "status": "error", "error": _error_payload(exc)}

    if args.jobs == 1:
        entries = [one(a) for a in parsed]
    else:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            entries = list(pool.map(one, parsed))
    failed = sum(e["status"] == "error" for e in entries)
    report = {"schema_version": SCHEMA_VERSION, "tool_version": __version__,
              "command": f"batch {args.analysis}", "input": args.pattern, "config": cfg,
              "result": {"files": entries, "succeeded": len(entries) - failed, "failed": failed},
              "duration_s": None if args.no_timing else round(time.perf_counter() - started, 6)}
    _emit(dumps(report), args.output)
    return 1 if failed else 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        # unknown options are legal only for batch, which forwards them to each analysis
        args, extras = parser.parse_known_args(argv)
        if extras and args.command != "batch":
            parser.error(f"unrecognized arguments: {' '.join(extras)}")
        args.rest = extras
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        file_config = load_config_file(os.environ["ACA_CONFIG"]) if os.environ.get("ACA_CONFIG") else None
        if args.command == "batch":
            return _run_batch(args, parser, file_config)
        return _run_single(args, file_config)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(dumps({"error": {"type": "UsageError", "message": str(exc)}}))
        return 2
    except SystemExit as exc:  # argparse failures inside batch
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
