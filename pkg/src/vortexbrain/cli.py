"""Command-line front end.

Verbs: simulate | train | eval | sweep-noise | bench | convert.

Every knob lives in a flat key=value config file; defaults are printed by
``--print-defaults``. Each run writes the fully resolved configuration next
to its outputs so results can be reproduced from the output directory alone.

Exit codes: 0 success, 1 usage or bad configuration, 2 data/file errors,
3 numeric failures (diverged training, unattainable noise target).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import math
import sys
from pathlib import Path

import numpy as np

from . import dataset as ds
from . import encoders as enc
from . import optics
from . import pgm
from . import sensor
from . import smallbrain as sb
from . import synth
from .metrics import mse, ssim

# Flat configuration schema. Values double as the type oracle: overrides
# from a config file are coerced to the type of the default.
DEFAULTS = {
    # optical bench
    "grid_n": 128,
    "object_n": 28,
    "object_scale": 2,
    "extent": 1.0,
    "f_lambda": 0.1,
    "aperture_a": 0.5,
    "waist_w": 0.35,
    "alpha0": math.pi / 2,
    "include_lens_term": True,
    # encoder
    "encoder": "vortex",
    "charges": "1,3",
    "random_seed": 0,
    "crop_frac": 0.5,
    "out_n": 28,
    # camera
    "bit_depth": 12,
    "dark_var": 2.0,
    "flux_scale": 1.0,
    "camera_seed": 0,
    "apply_noise": False,
    "target_psnr_db": "",
    # training
    "epochs": 10,
    "batch": 64,
    "lr": 1e-3,
    "optimizer": "adam",
    "hidden": 784,
    "act_hidden": "linear",
    "act_out": "linear",
    "train_seed": 0,
    "init_seed": 0,
    # data
    "dataset": "fashion",
    "n_train": 4500,
    "n_test": 500,
    "split_seed": 0,
    "flip_augment": False,
    # sweep-noise / bench. Attainable PSNR is capped by the clean pattern's
    # peak/mean ratio; random-mask speckle saturates near 10 dB, so the
    # default levels stay below that.
    "psnr_levels": "1,2,4,6",
    "sweep_encoders": "vortex,random",
    "bench_seconds": 2.0,
    "bench_batch": 64,
}

_SEED_KEYS = ("random_seed", "camera_seed", "train_seed", "init_seed", "split_seed")


class UsageError(Exception):
    """Bad arguments or bad configuration; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; the contract here
    # reserves 2 for data errors, so route through UsageError instead.
    def error(self, message):
        raise UsageError(message)


def _coerce(key: str, text: str):
    default = DEFAULTS[key]
    if isinstance(default, bool):
        low = text.strip().lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise UsageError(f"config key {key!r}: expected a boolean, got {text!r}")
    try:
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError:
        raise UsageError(f"config key {key!r}: cannot parse {text!r}") from None
    return text.strip()


def load_config(path) -> dict:
    """Parse a flat key=value file; unknown keys are rejected."""
    overrides = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in DEFAULTS:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        overrides[key] = _coerce(key, value)
    return overrides


def resolve_config(config_path=None, seed=None) -> dict:
    rc = dict(DEFAULTS)
    if config_path is not None:
        rc.update(load_config(config_path))
    if seed is not None:
        for key in _SEED_KEYS:
            rc[key] = seed
    return rc


def format_config(rc: dict) -> str:
    lines = []
    for key in DEFAULTS:
        value = rc[key]
        if isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"


def _log_resolved(rc: dict, out_dir: Path | None) -> str:
    """Write resolved.cfg next to the outputs; returns a short config hash."""
    text = format_config(rc)
    digest = hashlib.sha256(text.encode()).hexdigest()[:12]
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "resolved.cfg").write_text(text)
        print(f"config {digest} -> {out_dir / 'resolved.cfg'}")
    else:
        print(f"config {digest}")
    return digest


# ---------------------------------------------------------------------------
# builders from a resolved config


def optical_from(rc: dict) -> optics.OpticalConfig:
    return optics.OpticalConfig(
        grid_n=rc["grid_n"],
        object_n=rc["object_n"],
        object_scale=rc["object_scale"],
        extent=rc["extent"],
        f_lambda=rc["f_lambda"],
        aperture_a=rc["aperture_a"],
        waist_w=rc["waist_w"],
        alpha0=rc["alpha0"],
        include_lens_term=rc["include_lens_term"],
    )


def camera_from(rc: dict) -> sensor.CameraModel:
    return sensor.CameraModel(
        bit_depth_L=rc["bit_depth"],
        dark_var=rc["dark_var"],
        flux_scale=rc["flux_scale"],
        rng_seed=rc["camera_seed"],
    )


def _parse_charges(text: str) -> tuple:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise UsageError(f"cannot parse charges {text!r}") from None


def spec_from(rc: dict, kind: str | None = None) -> enc.EncoderSpec:
    kind = kind if kind is not None else rc["encoder"]
    charges = _parse_charges(rc["charges"]) if kind == "vortex" else ()
    try:
        return enc.EncoderSpec(
            kind=kind,
            charges=charges,
            random_seed=rc["random_seed"],
            crop_frac=rc["crop_frac"],
            out_n=rc["out_n"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def traincfg_from(rc: dict) -> sb.TrainConfig:
    return sb.TrainConfig(
        epochs=rc["epochs"],
        batch=rc["batch"],
        lr=rc["lr"],
        seed=rc["train_seed"],
        optimizer=rc["optimizer"],
    )


def _target_psnr(rc: dict) -> float | None:
    raw = str(rc["target_psnr_db"]).strip()
    if not raw:
        return None
    try:
        return float(raw)
    except ValueError:
        raise UsageError(f"cannot parse target_psnr_db {raw!r}") from None


def _load_corpus(rc: dict):
    train, test, provenance = synth.load_corpus(
        rc["dataset"], rc["n_train"], rc["n_test"], seed=rc["split_seed"]
    )
    if rc["flip_augment"]:
        train = ds.flip_augment(train)
    return train, test, provenance


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(args) -> int:
    rc = resolve_config(args.config, args.seed)
    out_dir = Path(args.out)
    _log_resolved(rc, out_dir)
    cfg = optical_from(rc)
    spec = spec_from(rc)
    cam = camera_from(rc) if rc["apply_noise"] else None
    target = _target_psnr(rc)
    if target is not None and cam is None:
        raise UsageError("target_psnr_db is set but apply_noise=false")
    train, test, provenance = _load_corpus(rc)
    print(f"data: {provenance}")
    for name, subset in (("train", train), ("test", test)):
        y = enc.encode_batch(subset.images, spec, cfg, cam=cam, target_psnr_db=target)
        enc.save_vpty(out_dir / f"{name}.vpty", y, subset.images, spec.frames, spec.out_n)
        enc.write_metadata_csv(out_dir / f"{name}_meta.csv", y, spec)
        print(f"{name}: {subset.n} samples, {spec.frames} frames, out_n={spec.out_n}")
    print(f"psnr: {_describe_psnr(rc, cam, target, test.images, spec, cfg)}")
    return 0


def _describe_psnr(rc, cam, target, images, spec, cfg) -> str:
    if cam is None:
        return "noiseless (quantization only)"
    if target is not None:
        return f"{target:.2f} dB per capture (flux solved per sample)"
    masks = enc.masks_for(spec, cfg)
    probe = images[: min(16, images.shape[0])]
    values = []
    for mask in masks:
        stack = optics.forward_intensity_stack(probe, mask, cfg)
        values.extend(sensor.psnr(frame, cam) for frame in stack)
    return f"{float(np.mean(values)):.2f} dB mean at flux_scale={cam.flux_scale}"


def cmd_train(args) -> int:
    rc = resolve_config(args.config, args.seed)
    out_dir = Path(args.out)
    _log_resolved(rc, out_dir)
    y_train, x_train, frames, out_n = enc.load_vpty(args.encoded_train)
    y_test, x_test, frames_t, out_n_t = enc.load_vpty(args.encoded_test)
    if (frames, out_n) != (frames_t, out_n_t):
        raise enc.EncodingFileError(
            f"train/test geometry mismatch: {frames}x{out_n}^2 vs {frames_t}x{out_n_t}^2"
        )
    if args.resume is not None:
        net = sb.load_vnet(args.resume)
        if net.input_dim != frames * out_n * out_n:
            raise sb.CheckpointError(
                f"checkpoint expects input {net.input_dim}, data provides "
                f"{frames * out_n * out_n}"
            )
    else:
        net = sb.init(
            frames * out_n * out_n,
            rc["hidden"],
            (rc["act_hidden"], rc["act_out"]),
            seed=rc["init_seed"],
        )
    if rc["epochs"] > 0:
        net, history = sb.train(
            net, y_train, x_train, traincfg_from(rc), y_test=y_test, x_test=x_test
        )
    else:
        history = []
    sb.save_vnet(out_dir / "net.vnet", net)
    sb.write_history_csv(out_dir / "history.csv", history)
    if history:
        last = history[-1]
        print(
            f"epoch {last['epoch']}: train_mse={last['train_mse']:.6f} "
            f"test_mse={last['test_mse']:.6f}"
        )
    else:
        print("0 epochs: checkpoint written unchanged")
    print(f"checkpoint -> {out_dir / 'net.vnet'}")
    return 0


def cmd_eval(args) -> int:
    rc = resolve_config(args.config, args.seed)
    out_dir = Path(args.out)
    _log_resolved(rc, out_dir)
    net = sb.load_vnet(args.checkpoint)
    y, x_truth, frames, out_n = enc.load_vpty(args.encoded_set)
    if net.input_dim != frames * out_n * out_n:
        raise sb.CheckpointError(
            f"checkpoint expects input {net.input_dim}, data provides "
            f"{frames * out_n * out_n}"
        )
    recon = sb.reconstruct(net, y)
    rows = []
    for i in range(recon.shape[0]):
        rows.append((i, mse(recon[i], x_truth[i]), ssim(recon[i], x_truth[i])))
    mean_mse = float(np.mean([r[1] for r in rows]))
    mean_ssim = float(np.mean([r[2] for r in rows]))
    with open(out_dir / "metrics.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "mse", "ssim"])
        for i, m, s in rows:
            writer.writerow([i, f"{m:.8f}", f"{s:.8f}"])
        writer.writerow(["mean", f"{mean_mse:.8f}", f"{mean_ssim:.8f}"])
    k = min(25, recon.shape[0])
    pgm.write_pgm8(out_dir / "truth.pgm", pgm.montage(list(x_truth[:k])))
    pgm.write_pgm8(out_dir / "recon.pgm", pgm.montage(list(recon[:k])))
    y_frames = y.reshape(-1, frames, out_n, out_n)
    for f in range(frames):
        pgm.write_pgm8(out_dir / f"input_frame{f}.pgm", pgm.montage(list(y_frames[:k, f])))
    print(f"{recon.shape[0]} samples: mean_mse={mean_mse:.6f} mean_ssim={mean_ssim:.6f}")
    print(f"report -> {out_dir / 'metrics.csv'}")
    return 0


def _parse_psnr_list(text: str) -> list:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"cannot parse PSNR list {text!r}") from None


def cmd_sweep_noise(args) -> int:
    # One flux per level, solved on a diffuser reference and shared by every
    # encoder: equal illumination is the only footing on which concentrated
    # and spread-out captures can be compared (see encoders.reference_flux).
    rc = resolve_config(args.config, args.seed)
    out_dir = Path(args.out)
    _log_resolved(rc, out_dir)
    levels = _parse_psnr_list(args.psnr if args.psnr is not None else rc["psnr_levels"])
    kinds = [k.strip() for k in rc["sweep_encoders"].split(",") if k.strip()]
    for kind in kinds:
        if kind not in enc.ENCODER_KINDS:
            raise UsageError(f"unknown encoder kind {kind!r} in sweep_encoders")
    cfg = optical_from(rc)
    cam = camera_from(rc)
    train, test, provenance = _load_corpus(rc)
    print(f"data: {provenance}")
    cams = {}
    for level in levels:
        flux = enc.reference_flux(test.images, level, cam, cfg, seed=rc["random_seed"])
        cams[level] = sensor.CameraModel(
            bit_depth_L=cam.bit_depth_L,
            dark_var=cam.dark_var,
            flux_scale=flux,
            rng_seed=cam.rng_seed,
        )
    rows = []
    for kind in kinds:
        spec = spec_from(rc, kind=kind)
        y_train = enc.encode_batch(train.images, spec, cfg)
        y_clean = enc.encode_batch(test.images, spec, cfg)
        net = sb.init(
            spec.input_size(),
            rc["hidden"],
            (rc["act_hidden"], rc["act_out"]),
            seed=rc["init_seed"],
        )
        if rc["epochs"] > 0:
            net, _ = sb.train(net, y_train, train.images, traincfg_from(rc))
        _, clean_ssim = sb.evaluate(net, y_clean, test.images)
        print(f"{spec.label}: noiseless test ssim={clean_ssim:.4f}")
        for level in levels:
            y_noisy = enc.encode_batch(test.images, spec, cfg, cam=cams[level])
            _, s = sb.evaluate(net, y_noisy, test.images)
            rows.append((level, spec.label, s))
            print(f"{spec.label} @ {level:g} dB: mean ssim={s:.4f}")
    with open(out_dir / "sweep.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["psnr_db", "encoder", "mean_ssim"])
        for level, label, s in rows:
            writer.writerow([f"{level:g}", label, f"{s:.8f}"])
    print(f"sweep -> {out_dir / 'sweep.csv'}")
    return 0


def cmd_bench(args) -> int:
    rc = resolve_config(args.config, args.seed)
    out_dir = Path(args.out) if args.out is not None else None
    digest = _log_resolved(rc, out_dir)
    if args.checkpoint is not None:
        net = sb.load_vnet(args.checkpoint)
    else:
        spec = spec_from(rc)
        net = sb.init(
            spec.input_size(),
            rc["hidden"],
            (rc["act_hidden"], rc["act_out"]),
            seed=rc["init_seed"],
        )
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(rc["train_seed"])))
    inputs = rng.random((max(256, rc["bench_batch"]), net.input_dim))
    result = sb.throughput_bench(
        net, inputs, duration=rc["bench_seconds"], batch=rc["bench_batch"]
    )
    lines = [
        f"fps={result['fps']:.1f}",
        f"frames={result['frames']} over {result['seconds']:.3f} s "
        f"(batch={result['batch']}, verified={result['verified']})",
        f"net: {net.input_dim} -> {net.hidden_dim} -> {net.out_dim} "
        f"({net.act_hidden}/{net.act_out})",
        f"machine: {result['machine']}",
        f"config: {digest}",
    ]
    report = "\n".join(lines)
    print(report)
    if out_dir is not None:
        (out_dir / "bench.txt").write_text(report + "\n")
    return 0


def cmd_convert(args) -> int:
    count = ds.csv_to_idx(args.csv_path, args.out_idx)
    images = ds.load_idx(args.out_idx)
    print(f"wrote {count} images -> {args.out_idx} (round-trip shape {images.shape})")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(
        prog="vortexbrain",
        description="Vortex-encoded Fourier imaging: simulate, train, evaluate.",
    )
    parser.add_argument(
        "--print-defaults",
        action="store_true",
        help="print the default configuration as key=value lines and exit",
    )
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--seed", type=int, help="override every *_seed knob at once")

    p = sub.add_parser("simulate", help="encode a dataset to VPTY files")
    common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="train a reconstruction net on VPTY files")
    common(p)
    p.add_argument("encoded_train", help="training VPTY file")
    p.add_argument("encoded_test", help="test VPTY file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--resume", help="resume from an existing VNET checkpoint")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on an encoded set")
    common(p)
    p.add_argument("checkpoint", help="VNET checkpoint")
    p.add_argument("encoded_set", help="VPTY file to evaluate")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser(
        "sweep-noise", help="train noiselessly, evaluate across PSNR levels"
    )
    common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--psnr", help="comma-separated PSNR levels in dB (overrides config)")
    p.set_defaults(func=cmd_sweep_noise)

    p = sub.add_parser("bench", help="measure reconstruction throughput")
    common(p)
    p.add_argument("checkpoint", nargs="?", help="VNET checkpoint (default: fresh net)")
    p.add_argument("--out", help="optional output directory")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("convert", help="convert a 784-column CSV to IDX3")
    common(p)
    p.add_argument("csv_path", help="input CSV, one image per row")
    p.add_argument("out_idx", help="output IDX3 path")
    p.set_defaults(func=cmd_convert)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.print_defaults:
            sys.stdout.write(format_config(DEFAULTS))
            return 0
        if args.command is None:
            raise UsageError("a command is required (see --help)")
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (sb.TrainingDivergedError, sensor.UnachievablePsnrError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except (ds.DatasetError, enc.EncodingFileError, sb.CheckpointError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
