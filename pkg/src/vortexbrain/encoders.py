"""Spatial-encoding schemes and network-input assembly.

An encoder turns a 28x28 object into one sensor frame per mask (plain
Fourier, a set of vortex charges, or a random diffuser), then crops the
central Fourier-plane region, area-average downsamples each frame to
out_n x out_n, and catenates the frames into the network input vector y.

With a camera model attached, Poisson shot and dark noise act at sensor
resolution and the frame stack is quantized jointly (one exposure covers
all lenslets); y is then counts / (2^L - 1). Without one, the clean stack
is quantized the same way so that noiseless-trained networks see inputs on
the same scale as noisy test data.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass

import numpy as np

from .optics import ComplexField, OpticalConfig, forward_intensity_stack, vortex_lens_mask
from .sensor import CameraModel, add_noise, flux_for_target_psnr

VPTY_MAGIC = b"VPTY"
VPTY_VERSION = 1

ENCODER_KINDS = ("plain", "vortex", "random")

_BATCH_BLOCK = 128  # samples per FFT block; bounds peak memory


class EncodingFileError(Exception):
    """Malformed or truncated encoded-dataset file."""


@dataclass(frozen=True)
class EncoderSpec:
    """Which masks to apply and how the Fourier plane is reduced.

    ``plain`` is a single m=0 frame (no spiral phase), ``vortex`` one frame
    per entry of ``charges``, ``random`` a single uniform-phase diffuser
    frame keyed by ``random_seed``.
    """

    kind: str
    charges: tuple = ()
    random_seed: int = 0
    crop_frac: float = 0.5
    out_n: int = 28

    def __post_init__(self):
        if self.kind not in ENCODER_KINDS:
            raise ValueError(f"kind must be one of {ENCODER_KINDS}, got {self.kind!r}")
        charges = tuple(float(m) for m in self.charges)
        if self.kind == "vortex" and not charges:
            raise ValueError("vortex encoder needs at least one charge")
        if self.kind != "vortex" and charges:
            raise ValueError(f"charges are only meaningful for kind='vortex'")
        if not 0.0 < self.crop_frac <= 1.0:
            raise ValueError(f"crop_frac must be in (0, 1], got {self.crop_frac}")
        if self.out_n < 8:
            raise ValueError(f"out_n must be >= 8, got {self.out_n}")
        object.__setattr__(self, "charges", charges)

    @property
    def frames(self) -> int:
        return len(self.charges) if self.kind == "vortex" else 1

    @property
    def label(self) -> str:
        """Filename-safe identifier, e.g. vortex_m1_3."""
        if self.kind == "vortex":
            ms = "_".join(f"{m:g}".replace("-", "n").replace(".", "p") for m in self.charges)
            return f"vortex_m{ms}"
        if self.kind == "random":
            return f"random_s{self.random_seed}"
        return "plain"

    def input_size(self) -> int:
        return self.frames * self.out_n * self.out_n


@dataclass(frozen=True)
class EncodedSample:
    """Network input y (flattened frame stack) plus its ground truth."""

    y: np.ndarray  # (frames * out_n**2,) float
    frame_shape: tuple
    x_truth: np.ndarray  # (28, 28)

    def __post_init__(self):
        frames, out_n, out_n2 = self.frame_shape
        if out_n != out_n2:
            raise ValueError(f"frames must be square, got {self.frame_shape}")
        if self.y.shape != (frames * out_n * out_n,):
            raise ValueError(
                f"y length {self.y.shape} inconsistent with frame shape {self.frame_shape}"
            )

    def frames_2d(self) -> np.ndarray:
        return self.y.reshape(self.frame_shape)


def random_phase_mask(seed: int, cfg: OpticalConfig) -> ComplexField:
    """Fully developed phase diffuser inside the aperture.

    Phase is i.i.d. uniform on [0, 2pi) from a counter-based generator, so
    the mask is reproducible from the seed alone; the quadratic lens term
    stays (only the spiral phase is replaced). |mask| = 1 inside r < a,
    exactly 0 outside, matching the vortex masks' transmitted power.
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    theta = rng.uniform(0.0, 2.0 * np.pi, size=(cfg.grid_n, cfg.grid_n))
    phase = theta
    r, _ = cfg.polar()
    if cfg.include_lens_term:
        phase = phase - np.pi * r**2 / cfg.f_lambda
    mask = np.exp(1j * phase)
    mask[r >= cfg.aperture_a] = 0.0
    return ComplexField(mask, cfg.extent)


def masks_for(spec: EncoderSpec, cfg: OpticalConfig) -> list:
    """Pupil masks in frame order."""
    if spec.kind == "vortex":
        return [vortex_lens_mask(m, cfg) for m in spec.charges]
    if spec.kind == "random":
        return [random_phase_mask(spec.random_seed, cfg)]
    return [vortex_lens_mask(0.0, cfg)]


def _pool_matrix(src_n: int, out_n: int) -> np.ndarray:
    """(out_n, src_n) area-average weights for one axis.

    Output cell i covers the source interval [i*s, (i+1)*s), s = src_n/out_n;
    weights are exact overlap lengths, so constants are preserved and every
    source pixel contributes total weight 1 across the output.
    """
    s = src_n / out_n
    w = np.zeros((out_n, src_n))
    for i in range(out_n):
        lo = i * s
        hi = (i + 1) * s
        for p in range(int(np.floor(lo)), min(src_n, int(np.ceil(hi)))):
            w[i, p] = min(hi, p + 1.0) - max(lo, float(p))
    return w


def crop_downsample(pattern: np.ndarray, crop_frac: float, out_n: int) -> np.ndarray:
    """Central crop to round(n*crop_frac) then area-average pool to out_n.

    Works on a single frame or a stack (..., n, n). Sum over the output
    equals the cropped sum divided by the pool area s^2; a centered delta
    maps to value 1/s^2 at the output center.
    """
    pattern = np.asarray(pattern, dtype=np.float64)
    n = pattern.shape[-1]
    if pattern.shape[-2] != n:
        raise ValueError(f"pattern must be square in its last two axes, got {pattern.shape}")
    crop_n = int(round(n * crop_frac))
    if crop_n < out_n:
        raise ValueError(
            f"crop of {crop_n} px (crop_frac={crop_frac} of {n}) is smaller "
            f"than out_n={out_n}"
        )
    lo = (n - crop_n) // 2
    cropped = pattern[..., lo : lo + crop_n, lo : lo + crop_n]
    if crop_n == out_n:
        return cropped.copy()
    w = _pool_matrix(crop_n, out_n)
    s = crop_n / out_n
    return (w @ cropped @ w.T) / (s * s)


def _clean_stacks(
    x_stack: np.ndarray, spec: EncoderSpec, cfg: OpticalConfig
) -> np.ndarray:
    """(batch, frames, grid_n, grid_n) noiseless sensor intensities."""
    masks = masks_for(spec, cfg)
    frames = [forward_intensity_stack(x_stack, mask, cfg) for mask in masks]
    return np.stack(frames, axis=1)


def _quantize_joint(counts: np.ndarray, cam: CameraModel) -> np.ndarray:
    """Per-sample joint quantization of (batch, frames, n, n) count stacks.

    Same rule as sensor.quantize applied per sample across its whole frame
    stack: one exposure covers all lenslets, so frames share a scale.
    """
    flat = counts.reshape(counts.shape[0], -1)
    peaks = flat.max(axis=1)
    safe = np.where(peaks > 0.0, peaks, 1.0)
    scaled = np.rint(counts * (cam.max_count / safe)[:, None, None, None])
    scaled[peaks == 0.0] = 0.0
    return np.clip(scaled, 0, cam.max_count)


def _noisy_counts(
    stacks: np.ndarray,
    cam: CameraModel,
    first_index: int,
    target_psnr_db,
) -> np.ndarray:
    """Shot + dark noise per capture, stream keyed by absolute sample index."""
    counts = np.empty_like(stacks)
    for j in range(stacks.shape[0]):
        local = cam
        if target_psnr_db is not None:
            flux = flux_for_target_psnr(stacks[j], target_psnr_db, cam)
            local = CameraModel(
                bit_depth_L=cam.bit_depth_L,
                dark_var=cam.dark_var,
                flux_scale=flux,
                rng_seed=cam.rng_seed,
            )
        counts[j] = add_noise(stacks[j], local, stream=(first_index + j,))
    return counts


def encode_batch(
    x_stack: np.ndarray,
    spec: EncoderSpec,
    cfg: OpticalConfig,
    cam: CameraModel | None = None,
    target_psnr_db: float | None = None,
) -> np.ndarray:
    """Encode (batch, 28, 28) objects to (batch, frames*out_n^2) inputs.

    ``cam=None`` gives the noiseless pipeline (clean stack, joint
    quantization to the bit grid, unit scale). With a camera, shot and dark
    noise act at sensor resolution before quantization; the noise stream is
    keyed per sample index so batches are reproducible element by element.
    ``target_psnr_db`` solves for the flux per capture so every sample is
    measured at exactly the stated peak signal-to-noise.
    """
    x_stack = np.asarray(x_stack, dtype=np.float64)
    if x_stack.ndim != 3:
        raise ValueError(f"expected (batch, n, n) objects, got shape {x_stack.shape}")
    if target_psnr_db is not None and cam is None:
        raise ValueError("target_psnr_db requires a camera model")
    ref_cam = cam if cam is not None else CameraModel()
    n_total = x_stack.shape[0]
    out = np.empty((n_total, spec.input_size()), dtype=np.float64)
    for start in range(0, n_total, _BATCH_BLOCK):
        block = x_stack[start : start + _BATCH_BLOCK]
        stacks = _clean_stacks(block, spec, cfg)
        if cam is not None:
            stacks = _noisy_counts(stacks, ref_cam, start, target_psnr_db)
        q = _quantize_joint(stacks, ref_cam)
        pooled = crop_downsample(q, spec.crop_frac, spec.out_n)
        out[start : start + block.shape[0]] = (
            pooled.reshape(block.shape[0], -1) / ref_cam.max_count
        )
    return out


def encode(
    x_img: np.ndarray,
    spec: EncoderSpec,
    cfg: OpticalConfig,
    cam: CameraModel | None = None,
    target_psnr_db: float | None = None,
    sample_index: int = 0,
) -> EncodedSample:
    """Encode a single object; see encode_batch for the pipeline."""
    x_img = np.asarray(x_img, dtype=np.float64)
    stack = _clean_stacks(x_img[None], spec, cfg)
    if target_psnr_db is not None and cam is None:
        raise ValueError("target_psnr_db requires a camera model")
    ref_cam = cam if cam is not None else CameraModel()
    if cam is not None:
        stack = _noisy_counts(stack, ref_cam, sample_index, target_psnr_db)
    q = _quantize_joint(stack, ref_cam)
    reduced = crop_downsample(q[0], spec.crop_frac, spec.out_n) / ref_cam.max_count
    return EncodedSample(
        y=reduced.reshape(-1),
        frame_shape=(spec.frames, spec.out_n, spec.out_n),
        x_truth=x_img,
    )


def reference_flux(
    images: np.ndarray,
    target_psnr_db: float,
    cam: CameraModel,
    cfg: OpticalConfig,
    seed: int = 0,
    probe: int = 16,
) -> float:
    """Photon flux that puts a diffuser reference capture at the target PSNR.

    Encoders concentrate light very differently: a vortex ring packs the same
    energy into a few hot pixels while a diffuser spreads it into speckle, so
    the peak-referenced PSNR of the two captures differs by 10-15 dB at equal
    illumination. Solving the flux per capture would therefore compare
    encoders at wildly different photon budgets. Noise sweeps instead fix the
    illumination: the flux is solved once per level against the mean clean
    pattern of a random-diffuser reference (the flattest capture this bench
    produces, so the dB axis spans its usable range), and that same flux is
    applied to every encoder under test.
    """
    images = np.asarray(images, dtype=np.float64)
    ref_spec = EncoderSpec(kind="random", random_seed=seed)
    mask = masks_for(ref_spec, cfg)[0]
    pattern = forward_intensity_stack(images[: min(probe, images.shape[0])], mask, cfg)
    return flux_for_target_psnr(pattern.mean(axis=0), target_psnr_db, cam)


def save_vpty(path, y: np.ndarray, x_truth: np.ndarray, frames: int, out_n: int) -> None:
    """Write an encoded dataset: VPTY header then per-sample (y, x) float32."""
    y = np.asarray(y, dtype=np.float32)
    x_truth = np.asarray(x_truth, dtype=np.float32)
    count = y.shape[0]
    if y.ndim != 2 or y.shape[1] != frames * out_n * out_n:
        raise ValueError(
            f"y must be (count, frames*out_n^2) = (*, {frames * out_n * out_n}), got {y.shape}"
        )
    if x_truth.shape != (count, 28, 28):
        raise ValueError(f"x_truth must be ({count}, 28, 28), got {x_truth.shape}")
    with open(path, "wb") as fh:
        fh.write(VPTY_MAGIC)
        fh.write(struct.pack("<3I", VPTY_VERSION, count, frames))
        fh.write(struct.pack("<I", out_n))
        for i in range(count):
            fh.write(y[i].astype("<f4").tobytes())
            fh.write(x_truth[i].astype("<f4").reshape(-1).tobytes())


def load_vpty(path) -> tuple[np.ndarray, np.ndarray, int, int]:
    """Read a VPTY file; returns (y, x_truth, frames, out_n) in float64."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 20:
        raise EncodingFileError(f"{path}: too short for a VPTY header")
    if raw[:4] != VPTY_MAGIC:
        raise EncodingFileError(f"{path}: bad magic {raw[:4]!r}")
    version, count, frames, out_n = struct.unpack("<4I", raw[4:20])
    if version != VPTY_VERSION:
        raise EncodingFileError(f"{path}: unsupported version {version}")
    y_len = frames * out_n * out_n
    rec = (y_len + 784) * 4
    need = 20 + count * rec
    if len(raw) < need:
        raise EncodingFileError(
            f"{path}: header declares {count} samples ({need} bytes), file has {len(raw)}"
        )
    flat = np.frombuffer(raw[20:need], dtype="<f4").reshape(count, y_len + 784)
    y = flat[:, :y_len].astype(np.float64)
    x = flat[:, y_len:].reshape(count, 28, 28).astype(np.float64)
    return y, x, frames, out_n


def write_metadata_csv(path, y: np.ndarray, spec: EncoderSpec) -> None:
    """Per-sample summary of the encoded inputs."""
    y = np.asarray(y)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "encoder", "frames", "out_n", "y_min", "y_max", "y_mean"])
        for i in range(y.shape[0]):
            writer.writerow(
                [
                    i,
                    spec.label,
                    spec.frames,
                    spec.out_n,
                    f"{y[i].min():.6g}",
                    f"{y[i].max():.6g}",
                    f"{y[i].mean():.6g}",
                ]
            )
