"""Command-line entry point: synth, train, analyze, eval and composite.

Exit codes: 0 success (or an authentic-consistent verdict), 2 suspect
verdict, 1 any error.
"""

import argparse
import copy
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from .compositor import blend, build_mask, perturb_colors, read_pnm, warp_back, write_pnm
from .errors import BlinkScopeError, ConfigError, FormatError
from .evaluation.experiment import ear_scores
from .evaluation.roc import roc, write_summary
from .evaluation.synthetic import (LabeledFrameSet, LabeledSequenceSet, SynthConfig,
                                   make_synthetic_benchmarks, render_video)
from .evaluation.training import TrainConfig, train_cnn, train_lrcn
from .geometry import (EYE_INDICES, LandmarkFrame, align_image, crop_eye_sequence, estimate_alignment,
                       read_landmarks, transform_frame, write_landmarks)
from .nn.checkpoint import ModelCheckpoint
from .nn.models import ArchConfig, from_checkpoint, to_checkpoint
from .pipeline import (SUSPECT, SegmentConfig, VerdictThresholds, analyze_series, classify_cnn,
                       classify_ear, classify_lrcn, fuse_series, write_state_csv)
from .sequence import EyeSequence, read_ebsq, write_ebsq

FORMAT_VERSION = 1
EYES = ("left", "right")
METHODS = ("cnn", "lrcn", "ear")
EVAL_METHODS = METHODS + ("random",)


def _train_defaults(batch_size):
    d = TrainConfig(batch_size=batch_size).to_dict()
    del d["seed"]
    return d


_synth = SynthConfig().to_dict()
del _synth["fps"]

DEFAULTS = {
    "synth": {
        "seed": 0,
        "fps": 25.0,
        "mode": "benchmark",  # benchmark | video
        "benchmark": _synth,
        "video": {
            "duration_s": 30.0,
            "blinking": True,
            "blink_times_s": None,
            "image_size": [256, 256],
            "noise": 0.03,
            "crop_size": [36, 60],
        },
    },
    "train": {
        "seed": 0,
        "stage": "both",  # both | cnn | lrcn
        "arch": ArchConfig().to_dict(),
        "cnn": _train_defaults(16),
        "lrcn": _train_defaults(4),
        "lrcn_sets": ["sequences", "ambiguity"],
    },
    "analyze": {
        "seed": 0,
        "method": "cnn",
        "fps": None,  # None: from the input manifest, else 25
        "enter": 0.6,
        "exit": 0.4,
        "min_dur_s": None,
        "max_dur_s": 0.5,
        "min_rate_per_min": 2.0,
        "max_gap_s": 15.0,
        "ear_window": 3,
        "ear_threshold": 0.2,
    },
    "eval": {
        "seed": 0,
        "methods": ["lrcn", "cnn", "ear"],
        "set": "ambiguity",
        "split": "test",
        "ear_window": 3,
        "landmark_noise_px": 0.0,
    },
    "composite": {
        "seed": 0,
        "fps": None,
        "source": None,  # directory of replacement-face frames; None: tone-shifted target
        "blur_sigma": 3.0,
        "crop_size": [36, 60],
    },
}

# --- configuration ------------------------------------------------------------

def merge_config(defaults, user, where="config"):
    """Overlay ``user`` on ``defaults``; keys absent from the defaults are rejected."""
    if not isinstance(user, dict):
        raise ConfigError(f"{where} must be a JSON object")
    out = copy.deepcopy(defaults)
    for key, value in user.items():
        if key not in defaults:
            raise ConfigError(f"unknown config key {where}.{key}")
        if isinstance(defaults[key], dict):
            out[key] = merge_config(defaults[key], value, f"{where}.{key}")
        else:
            out[key] = value
    return out


def resolve_config(command, args):
    user = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                user = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON: {exc}") from None
    cfg = merge_config(DEFAULTS[command], user)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.fps is not None:
        if "fps" not in cfg:
            raise ConfigError(f"--fps does not apply to {command}")
        cfg["fps"] = args.fps
    if args.method is not None:
        if command == "analyze":
            cfg["method"] = args.method
        elif command == "eval":
            cfg["methods"] = args.method.split(",")
        else:
            raise ConfigError(f"--method does not apply to {command}")
    return cfg


def stamp(command, cfg):
    return {"format_version": FORMAT_VERSION, "command": command, "config": cfg}


def comment_line(command, cfg):
    return (f"blinkscope format_version={FORMAT_VERSION} command={command} "
            f"config={json.dumps(cfg, sort_keys=True, separators=(',', ':'))}")


def sha256_file(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def write_json(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _output_dir(path):
    if path is None:
        raise ConfigError("--output is required")
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- manifests ----------------------------------------------------------------

def file_entry(out, name, role, **extra):
    entry = {"path": name, "role": role, "sha256": sha256_file(out / name)}
    entry.update(extra)
    return entry


def load_manifest(path):
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.json"
    if not path.exists():
        raise ConfigError(f"manifest not found: {path}")
    with open(path, encoding="utf-8") as fh:
        try:
            man = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid manifest JSON: {exc.msg}", exc.pos) from None
    man["_root"] = path.parent
    return man


def _entries(man, role, split=None):
    return [e for e in man.get("files", []) if e["role"] == role and (split is None or e.get("split") == split)]


def frame_set(man, split):
    entries = _entries(man, "frames", split)
    if not entries:
        raise ConfigError(f"manifest has no '{split}' frame set")
    frames, labels = read_ebsq(man["_root"] / entries[0]["path"])
    if labels is None or (labels[:, 0] < 0).any():
        raise ConfigError(f"{entries[0]['path']}: frame set is not fully labeled")
    return LabeledFrameSet(frames, labels[:, 0].astype(np.int64), None,
                           {"source": entries[0]["path"], "split": split})


def sequence_set(man, kinds, split):
    """Concatenate the segments of the listed sequence sets into a LabeledSequenceSet."""
    items, marks = [], []
    fps = float(man.get("fps", 25.0))
    for kind in kinds:
        crops = _entries(man, kind, split)
        if not crops:
            raise ConfigError(f"manifest has no '{kind}' set for split '{split}'")
        entry = crops[0]
        frames, labels = read_ebsq(man["_root"] / entry["path"])
        landmarks = read_landmarks(man["_root"] / entry["landmarks"])
        if len(landmarks) != len(frames):
            raise FormatError(f"{entry['landmarks']}: {len(landmarks)} landmark frames for "
                              f"{len(frames)} crops")
        for start, length in entry["segments"]:
            lab = None if labels is None else labels[start:start + length, 0]
            items.append(EyeSequence(frames[start:start + length], fps, "left", lab))
            marks.append(landmarks[start:start + length])
    return LabeledSequenceSet(items, marks, None, None, {"sets": list(kinds), "split": split})


# --- synth ----------------------------------------------------------------------

def _write_sequence_file(out, kind, split, sset, fps):
    frames = np.concatenate([s.frames for s in sset.items])
    left = np.concatenate([s.labels for s in sset.items])
    labels = np.stack([left, np.full_like(left, -1)], axis=1)
    segments, marks, start = [], [], 0
    for seq, lm in zip(sset.items, sset.landmarks):
        segments.append([start, len(seq)])
        for f in lm:
            idx = start + f.frame_index
            marks.append(LandmarkFrame(idx, idx / fps, f.points, f.left_label, f.right_label))
        start += len(seq)
    crops_name = f"{kind}_{split}.ebsq"
    marks_name = f"{kind}_{split}.jsonl"
    write_ebsq(out / crops_name, frames, labels)
    write_landmarks(out / marks_name, marks)
    return [file_entry(out, crops_name, kind, split=split, format="ebsq", segments=segments,
                       landmarks=marks_name),
            file_entry(out, marks_name, "landmarks", split=split, format="jsonl", of=crops_name)]


def _write_video(out, images, frames, fps, crop_size, command, cfg):
    """Write frames (PGM/PPM), landmarks and aligned left/right eye crops; return manifest entries."""
    frame_dir = out / "frames"
    frame_dir.mkdir(exist_ok=True)
    comment = comment_line(command, cfg)
    files, quantized = [], []
    for k, img in enumerate(images):
        ext = "ppm" if np.ndim(img) == 3 and np.shape(img)[2] == 3 else "pgm"
        name = f"frames/frame_{k:06d}.{ext}"
        write_pnm(out / name, img, comment)
        quantized.append(read_pnm(out / name) / 255.0)
        files.append(file_entry(out, name, "frame", index=k, format=ext))
    write_landmarks(out / "landmarks.jsonl", frames)
    files.append(file_entry(out, "landmarks.jsonl", "landmarks", format="jsonl"))
    for eye, seq in eye_crops(quantized, frames, tuple(crop_size), fps).items():
        seq.save(out / f"{eye}.ebsq")
        files.append(file_entry(out, f"{eye}.ebsq", "crops", eye=eye, format="ebsq",
                                clamped_frames=seq.metadata.get("clamped_frames", [])))
    return files


def eye_crops(images, frames, crop_size=(36, 60), fps=25.0):
    aligned, aligned_frames = [], []
    for img, f in zip(images, frames):
        t = estimate_alignment(f)
        aligned.append(align_image(img, t))
        aligned_frames.append(transform_frame(f, t))
    return {eye: crop_eye_sequence(aligned_frames, aligned, eye, crop_size, fps) for eye in EYES}


def cmd_synth(cfg, output):
    out = _output_dir(output)
    fps = float(cfg["fps"])
    if cfg["mode"] == "benchmark":
        sc = SynthConfig(**cfg["benchmark"], fps=fps)
        bench = make_synthetic_benchmarks(cfg["seed"], sc)
        files = []
        for split, fs in (("train", bench.frames_train), ("test", bench.frames_test)):
            if len(fs) == 0:
                continue
            name = f"frames_{split}.ebsq"
            labels = np.stack([fs.labels, np.full(len(fs), -1)], axis=1)
            write_ebsq(out / name, fs.images, labels)
            files.append(file_entry(out, name, "frames", split=split, format="ebsq",
                                    segments=[[0, len(fs)]]))
        for kind, train, test in (("sequences", bench.sequences_train, bench.sequences_test),
                                  ("ambiguity", bench.ambiguity_train, bench.ambiguity_test)):
            for split, sset in (("train", train), ("test", test)):
                if len(sset):
                    files += _write_sequence_file(out, kind, split, sset, fps)
    elif cfg["mode"] == "video":
        v = cfg["video"]
        images, frames = render_video(v["duration_s"], fps, cfg["seed"], v["blink_times_s"],
                                      tuple(v["image_size"]), v["noise"], v["blinking"])
        files = _write_video(out, images, frames, fps, v["crop_size"], "synth", cfg)
    else:
        raise ConfigError(f"synth mode must be 'benchmark' or 'video', got {cfg['mode']!r}")
    manifest = stamp("synth", cfg)
    manifest.update({"mode": cfg["mode"], "fps": fps, "files": files})
    write_json(out / "manifest.json", manifest)
    print(f"wrote {len(files)} files to {out}")
    return 0


# --- train ----------------------------------------------------------------------

def write_train_log(path, log, comment):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# {comment}\n")
        fh.write("epoch,loss,lr\n")
        for e in log.epochs:
            fh.write(f"{e['epoch']},{e['loss']!r},{e['lr']!r}\n")


def load_model(path, kind=None):
    if path is None:
        raise ConfigError(f"a {kind or 'model'} checkpoint is required (--checkpoint)")
    ckpt = ModelCheckpoint.load(path)
    model = from_checkpoint(ckpt)
    if kind is not None and model.kind != kind:
        raise ConfigError(f"{path}: expected a {kind} checkpoint, found {model.kind}")
    return model, ckpt.checksum()


def cmd_train(cfg, manifest_path, output, checkpoints):
    if manifest_path is None:
        raise ConfigError("train needs the dataset manifest (--input)")
    man = load_manifest(manifest_path)
    out = _output_dir(output)
    stage = cfg["stage"]
    if stage not in ("both", "cnn", "lrcn"):
        raise ConfigError(f"stage must be both, cnn or lrcn, got {stage!r}")
    meta = stamp("train", cfg)
    comment = comment_line("train", cfg)
    summary = stamp("train", cfg)
    if stage in ("both", "cnn"):
        arch = ArchConfig.from_dict(cfg["arch"])
        cnn, log = train_cnn(frame_set(man, "train"), arch, TrainConfig(**cfg["cnn"], seed=cfg["seed"]))
        cnn_path = out / "cnn.bscp"
        digest = to_checkpoint(cnn, epoch=cfg["cnn"]["epochs"], seed=cfg["seed"], **meta).save(cnn_path)
        write_train_log(out / "cnn_log.csv", log, comment)
        summary["cnn"] = {"checkpoint": "cnn.bscp", "sha256": digest, "log": "cnn_log.csv",
                          "initial_loss": log.initial_loss, "final_loss": log.losses[-1] if log.epochs else None}
        print(f"cnn: loss {log.initial_loss:.4f} -> {summary['cnn']['final_loss']}")
    else:
        if not checkpoints:
            raise ConfigError("LRCN training needs a trained CNN checkpoint: pass --checkpoint or use stage 'both'")
        cnn_path = checkpoints[0]
    if stage in ("both", "lrcn"):
        # Always read the CNN back from disk so the LSTM sees the stored features.
        cnn, cnn_sha = load_model(cnn_path, "cnn")
        data = sequence_set(man, cfg["lrcn_sets"], "train")
        lrcn_cfg = TrainConfig(**cfg["lrcn"], seed=cfg["seed"] + 1)
        lrcn, log = train_lrcn(data, cnn, lrcn_cfg, cfg["arch"].get("hidden_size"))
        digest = to_checkpoint(lrcn, epoch=cfg["lrcn"]["epochs"], seed=cfg["seed"] + 1,
                               feature_checkpoint_sha256=cnn_sha, **meta).save(out / "lrcn.bscp")
        write_train_log(out / "lrcn_log.csv", log, comment)
        summary["lrcn"] = {"checkpoint": "lrcn.bscp", "sha256": digest, "log": "lrcn_log.csv",
                           "feature_checkpoint_sha256": cnn_sha, "initial_loss": log.initial_loss,
                           "final_loss": log.losses[-1] if log.epochs else None}
        print(f"lrcn: loss {log.initial_loss:.4f} -> {summary['lrcn']['final_loss']}")
    write_json(out / "train_summary.json", summary)
    return 0


# --- analyze ----------------------------------------------------------------------

def _load_inputs(inputs, method):
    """Return ("landmarks", frames, fps) or ("crops", {eye: EyeSequence}, fps) for the method."""
    if not inputs:
        raise ConfigError("analyze needs --input")
    want = "landmarks" if method == "ear" else "crops"
    fps = None
    paths = []
    for p in map(Path, inputs):
        if p.is_dir():
            man = load_manifest(p)
            fps = man.get("fps", fps)
            found = _entries(man, want)
            if not found:
                raise ConfigError(f"{p}: manifest lists no {want} file")
            paths += [man["_root"] / e["path"] for e in found]
        else:
            paths.append(p)
    if want == "landmarks":
        if len(paths) != 1 or paths[0].suffix != ".jsonl":
            raise ConfigError("--method ear needs exactly one landmark .jsonl input")
        return want, read_landmarks(paths[0]), fps
    seqs = {}
    for p in paths:
        if p.suffix != ".ebsq":
            raise ConfigError(f"--method {method} needs EBSQ eye crops, got {p}")
        seq = EyeSequence.load(p)
        eye = seq.eye if seq.eye not in seqs else next(e for e in EYES if e not in seqs)
        if eye in seqs:
            raise ConfigError("at most two crop files (left and right eye) may be given")
        seq.eye = eye
        seqs[eye] = seq
    return want, seqs, fps


def cmd_analyze(cfg, inputs, output, checkpoints):
    method = cfg["method"]
    if method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}, got {method!r}")
    kind, data, manifest_fps = _load_inputs(inputs, method)
    if cfg["fps"] is None:
        cfg["fps"] = float(manifest_fps or 25.0)
    fps = float(cfg["fps"])
    checksum = None
    if method == "ear":
        series = {eye: classify_ear(data, cfg["ear_window"], cfg["ear_threshold"], eye) for eye in EYES}
    else:
        model, checksum = load_model(checkpoints[0] if checkpoints else None, method)
        classify = classify_cnn if method == "cnn" else classify_lrcn
        series = {eye: classify(seq, model) for eye, seq in data.items()}
    seg = SegmentConfig(cfg["enter"], cfg["exit"], cfg["min_dur_s"], cfg["max_dur_s"])
    thresholds = VerdictThresholds(cfg["min_rate_per_min"], cfg["max_gap_s"])
    report = analyze_series(series, fps, seg, thresholds, method=method, model_checksum=checksum,
                            config=cfg)
    out = _output_dir(output)
    doc = report.to_dict()
    doc["command"] = "analyze"
    write_json(out / "report.json", doc)
    write_state_csv(out / "states.csv", fuse_series(series), fps, comment=comment_line("analyze", cfg))
    s = report.statistics
    print(f"{report.verdict}: {s.count} blinks, {s.blinks_per_minute:.2f}/min, "
          f"longest blink-free gap {s.max_blinkless_gap_s:.2f} s")
    return 2 if report.verdict == SUSPECT else 0


# --- eval ------------------------------------------------------------------------

def method_scores(method, sset, models, cfg, rng):
    if method == "cnn":
        return np.concatenate([classify_cnn(s, models["cnn"]).p_closed for s in sset.items])
    if method == "lrcn":
        return np.concatenate([classify_lrcn(s, models["lrcn"]).p_closed for s in sset.items])
    if method == "ear":
        return ear_scores(sset, cfg["ear_window"], float(cfg["landmark_noise_px"]), rng)
    if method == "random":
        return rng.random(sum(len(s) for s in sset.items))
    raise ConfigError(f"unknown eval method {method!r}; choose from {EVAL_METHODS}")


def cmd_eval(cfg, manifest_path, output, checkpoints):
    if manifest_path is None:
        raise ConfigError("eval needs the dataset manifest (--input)")
    man = load_manifest(manifest_path)
    for m in cfg["methods"]:
        if m not in EVAL_METHODS:
            raise ConfigError(f"unknown eval method {m!r}; choose from {EVAL_METHODS}")
    sset = sequence_set(man, [cfg["set"]], cfg["split"])
    if any(s.labels is None or (s.labels < 0).any() for s in sset.items):
        raise ConfigError("evaluation needs fully labeled sequences")
    labels = sset.all_labels()
    models, checksums = {}, {}
    for path in checkpoints or []:
        model, digest = load_model(path)
        models[model.kind] = model
        checksums[model.kind] = digest
    for m in cfg["methods"]:
        if m in ("cnn", "lrcn") and m not in models:
            raise ConfigError(f"method {m} needs a {m} checkpoint (--checkpoint)")
    out = _output_dir(output)
    rng = np.random.default_rng(cfg["seed"])
    comment = comment_line("eval", cfg)
    curves = {}
    for m in cfg["methods"]:
        curves[m] = roc(method_scores(m, sset, models, cfg, rng), labels)
        curves[m].write_csv(out / f"roc_{m}.csv", comment)
    extra = stamp("eval", cfg)
    extra["checkpoints"] = checksums
    write_summary(out / "summary.json", curves, extra)
    for m, c in sorted(curves.items(), key=lambda kv: -kv[1].auc):
        print(f"{m}: AUC {c.auc:.4f}")
    return 0


# --- composite -----------------------------------------------------------------

def load_video_dir(path):
    """Frames and landmarks from a directory (manifest.json, else *.pgm/*.ppm + landmarks.jsonl)."""
    root = Path(path)
    if not root.is_dir():
        raise ConfigError(f"not a frame directory: {root}")
    fps = None
    if (root / "manifest.json").exists():
        man = load_manifest(root)
        fps = man.get("fps")
        frame_paths = [root / e["path"] for e in sorted(_entries(man, "frame"), key=lambda e: e["index"])]
        marks = _entries(man, "landmarks")
        landmark_path = root / marks[0]["path"] if marks else None
    else:
        frame_paths = sorted(list(root.glob("*.pgm")) + list(root.glob("*.ppm")))
        landmark_path = root / "landmarks.jsonl"
    if landmark_path is None or not landmark_path.exists():
        raise ConfigError(f"{root}: missing landmarks (landmarks.jsonl)")
    frames = read_landmarks(landmark_path)
    if len(frames) != len(frame_paths):
        raise ConfigError(f"{root}: {len(frame_paths)} frames but landmarks for {len(frames)}")
    if not frame_paths:
        raise ConfigError(f"{root}: no frames found")
    images = [read_pnm(p) / 255.0 for p in frame_paths]
    return images, frames, fps


def cmd_composite(cfg, inputs, output):
    if not inputs or len(inputs) != 1:
        raise ConfigError("composite needs exactly one target frame directory (--input)")
    images, frames, manifest_fps = load_video_dir(inputs[0])
    if cfg["fps"] is None:
        cfg["fps"] = float(manifest_fps or 25.0)
    source = load_video_dir(cfg["source"]) if cfg["source"] else None
    out = _output_dir(output)
    # One tone draw per clip keeps the replacement face temporally consistent.
    tone_seed = int(np.random.default_rng(cfg["seed"]).integers(2 ** 31))
    results, out_frames = [], []
    for k, (target, frame) in enumerate(zip(images, frames)):
        if source is not None:
            j = k % len(source[0])
            src_img, src_frame = source[0][j], source[1][j]
        else:
            j, src_img, src_frame = k, target, frame
        src_t = estimate_alignment(src_frame)
        patch = perturb_colors(align_image(src_img, src_t), np.random.default_rng(tone_seed))
        back = estimate_alignment(frame).inverse()
        warped = warp_back(patch, back, target)
        res = blend(warped, target, build_mask(frame, target.shape[:2]), cfg["blur_sigma"],
                    {"target_frame": k, "source_frame": j,
                     "source": str(cfg["source"]) if cfg["source"] else "target"})
        results.append(res)
        # The eyes now come from the source face.
        points = frame.points.copy()
        eye_idx = EYE_INDICES["left"] + EYE_INDICES["right"]
        points[eye_idx] = back.apply(src_t.apply(src_frame.points[eye_idx]))
        out_frames.append(LandmarkFrame(frame.frame_index, frame.timestamp_s, points,
                                        src_frame.left_label, src_frame.right_label))
    files = _write_video(out, [r.composite for r in results], out_frames, cfg["fps"],
                         cfg["crop_size"], "composite", cfg)
    meta = stamp("composite", cfg)
    meta["blur_target"] = "mask"
    meta["frames"] = [r.metadata() for r in results]
    write_json(out / "composite.json", meta)
    files.append(file_entry(out, "composite.json", "metadata", format="json"))
    manifest = stamp("composite", cfg)
    manifest.update({"mode": "video", "fps": cfg["fps"], "files": files})
    write_json(out / "manifest.json", manifest)
    print(f"wrote {len(results)} composite frames to {out}")
    return 0


# --- entry point -----------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """Usage errors exit with 1; exit code 2 is reserved for a suspect verdict."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="blinkscope", description="Eye-blink forensics for face videos.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "synth": "render the synthetic benchmark or a synthetic face video",
        "train": "train the frame CNN, then the LRCN on frozen CNN features",
        "analyze": "blink statistics and verdict for one clip",
        "eval": "ROC curves per method on a labeled sequence set",
        "composite": "splice a replacement face into a frame sequence",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("--config", help="JSON file with config overrides")
        p.add_argument("--seed", type=int)
        p.add_argument("--method", help="cnn | lrcn | ear (eval: comma-separated, may include random)")
        p.add_argument("--input", nargs="+", help="input manifest, directory or files")
        p.add_argument("--output", help="output directory")
        p.add_argument("--checkpoint", action="append", help="model checkpoint (repeatable)")
        p.add_argument("--fps", type=float)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args.command, args)
        first = args.input[0] if args.input else None
        if args.command == "synth":
            return cmd_synth(cfg, args.output)
        if args.command == "train":
            return cmd_train(cfg, first, args.output, args.checkpoint)
        if args.command == "analyze":
            return cmd_analyze(cfg, args.input, args.output, args.checkpoint)
        if args.command == "eval":
            return cmd_eval(cfg, first, args.output, args.checkpoint)
        return cmd_composite(cfg, args.input, args.output)
    except (BlinkScopeError, ValueError, OSError, KeyError, TypeError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"blinkscope {args.command}: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
