"""Camera model: Poisson shot and dark noise, bit-depth quantization, and the
peak-signal-to-noise bookkeeping used to set illumination levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CameraModel:
    """Sensor parameters.

    ``flux_scale`` converts pattern intensity to expected photon counts per
    pixel; ``dark_var`` is the expected dark count (mean = variance) per
    pixel per exposure. Noise draws come from the counter-based Philox
    generator keyed by ``rng_seed`` so frames are reproducible.
    """

    bit_depth_L: int = 12
    dark_var: float = 2.0
    flux_scale: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if not 8 <= self.bit_depth_L <= 16:
            raise ValueError(f"bit_depth_L must be in [8, 16], got {self.bit_depth_L}")
        if self.dark_var < 0:
            raise ValueError(f"dark_var must be >= 0, got {self.dark_var}")
        if self.flux_scale <= 0:
            raise ValueError(f"flux_scale must be > 0, got {self.flux_scale}")

    @property
    def max_count(self) -> int:
        return 2**self.bit_depth_L - 1


@dataclass(frozen=True)
class SensorFrame:
    """Integer-quantized intensity image plus the camera that produced it."""

    data: np.ndarray  # uint16 counts in [0, 2^L - 1]
    camera: CameraModel


def add_noise(
    clean: np.ndarray, cam: CameraModel, stream: tuple[int, ...] = ()
) -> np.ndarray:
    """Shot + dark noise: Poisson(flux_scale*clean) + Poisson(dark_var) per pixel.

    Output is nonnegative integer counts (as float64). Reproducible: the
    Philox stream is keyed by (cam.rng_seed, stream) and consumed in fixed
    pixel order, so e.g. stream=(sample_index, frame_index) gives every
    captured frame its own independent, repeatable draw.
    """
    clean = np.asarray(clean, dtype=np.float64)
    if clean.size and clean.min() < 0.0:
        raise ValueError(f"clean intensity must be >= 0, min is {clean.min():.4g}")
    seq = np.random.SeedSequence(cam.rng_seed, spawn_key=tuple(stream))
    rng = np.random.Generator(np.random.Philox(seq))
    shot = rng.poisson(cam.flux_scale * clean).astype(np.float64)
    dark = rng.poisson(cam.dark_var, size=clean.shape).astype(np.float64)
    return shot + dark


def quantize(counts: np.ndarray, cam: CameraModel) -> SensorFrame:
    """Rescale so the frame maximum hits 2^L - 1, round, clamp.

    Uses the full dynamic range regardless of absolute flux; an all-zero
    frame stays all-zero. Scale-invariant: frames differing by a global
    factor quantize identically.
    """
    counts = np.asarray(counts, dtype=np.float64)
    if counts.size and counts.min() < 0.0:
        raise ValueError(f"counts must be >= 0, min is {counts.min():.4g}")
    peak = counts.max() if counts.size else 0.0
    if peak == 0.0:
        data = np.zeros(counts.shape, dtype=np.uint16)
    else:
        scaled = np.rint(counts * (cam.max_count / peak))
        data = np.clip(scaled, 0, cam.max_count).astype(np.uint16)
    return SensorFrame(data=data, camera=cam)


def psnr(clean: np.ndarray, cam: CameraModel) -> float:
    """Peak over mean-plus-dark power ratio in dB.

    10*log10( max(flux*clean) / (mean(flux*clean) + dark_var) ); this is the
    noise-level axis of the robustness experiments.
    """
    clean = np.asarray(clean, dtype=np.float64)
    if not np.any(clean > 0.0):
        raise ValueError("pattern is identically zero; PSNR undefined")
    if clean.min() < 0.0:
        raise ValueError("clean intensity must be >= 0")
    signal = cam.flux_scale * clean
    return 10.0 * math.log10(signal.max() / (signal.mean() + cam.dark_var))


class UnachievablePsnrError(ValueError):
    """Requested PSNR equals or exceeds the dark-free ceiling of the pattern."""


def flux_for_target_psnr(
    clean: np.ndarray, target_db: float, cam: CameraModel
) -> float:
    """Solve for the flux_scale that yields ``target_db`` on this pattern.

    From T = F*max / (F*mean + dark_var):  F = T*dark_var / (max - T*mean),
    valid only below the dark-free ceiling 10*log10(max/mean).
    """
    clean = np.asarray(clean, dtype=np.float64)
    if not np.any(clean > 0.0):
        raise ValueError("pattern is identically zero; PSNR undefined")
    if cam.dark_var <= 0:
        raise ValueError("flux solve requires dark_var > 0")
    ratio = 10.0 ** (target_db / 10.0)
    peak = clean.max()
    mean = clean.mean()
    headroom = peak - ratio * mean
    if headroom <= 0.0:
        ceiling = 10.0 * math.log10(peak / mean)
        raise UnachievablePsnrError(
            f"target {target_db:.2f} dB at or above the dark-free ceiling "
            f"{ceiling:.2f} dB of this pattern"
        )
    return ratio * cam.dark_var / headroom


def noisy_psnr_mse(clean: np.ndarray, noisy: np.ndarray, cam: CameraModel) -> float:
    """Reporting-only PSNR via (2^L - 1)^2 / MSE on quantized frames, in dB."""
    q_clean = quantize(cam.flux_scale * np.asarray(clean, dtype=np.float64), cam)
    q_noisy = quantize(np.asarray(noisy, dtype=np.float64), cam)
    diff = q_clean.data.astype(np.float64) - q_noisy.data.astype(np.float64)
    err = float(np.mean(diff**2))
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(cam.max_count**2 / err)
