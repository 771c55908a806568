"""Image quality metrics for unit-range reconstructions: MSE, windowed SSIM,
and a decibel PSNR report form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass(frozen=True)
class MetricReport:
    mse: float
    ssim: float
    psnr_db: float


def mse(a: np.ndarray, b: np.ndarray) -> float:
    """Mean squared per-pixel difference."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    r = np.arange(size) - size // 2
    g = np.exp(-(r**2) / (2.0 * sigma**2))
    g /= g.sum()
    return np.outer(g, g)


def ssim(a: np.ndarray, b: np.ndarray, data_range: float = 1.0) -> float:
    """Mean local structural similarity between two unit-range images.

    Local means and (biased) covariances are taken under an 11x11 Gaussian
    window with sigma 1.5 and symmetric edge padding; stabilizers are
    C1 = (0.01*range)^2 and C2 = (0.03*range)^2. Identical images score
    exactly 1 and the measure is symmetric in its arguments. On nonnegative
    unit-range inputs the score lands in [0, 1] in practice (anticorrelated
    windows can in principle push local terms negative; values are reported
    as computed, not clamped).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    for name, img in (("first", a), ("second", b)):
        if img.min() < 0.0 or img.max() > data_range:
            raise ValueError(
                f"{name} image values outside [0, {data_range}]: "
                f"[{img.min():.4g}, {img.max():.4g}]"
            )
    win = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA)
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2

    # 'reflect' in scipy.ndimage repeats the edge sample: symmetric padding
    mu_a = correlate(a, win, mode="reflect")
    mu_b = correlate(b, win, mode="reflect")
    var_a = correlate(a * a, win, mode="reflect") - mu_a**2
    var_b = correlate(b * b, win, mode="reflect") - mu_b**2
    cov = correlate(a * b, win, mode="reflect") - mu_a * mu_b

    numer = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    denom = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float(np.mean(numer / denom))


def psnr_report(a: np.ndarray, b: np.ndarray, dynamic_range: float = 1.0) -> float:
    """10*log10(range^2 / MSE) in dB; +inf sentinel for identical images."""
    err = mse(a, b)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(dynamic_range**2 / err)


def report(a: np.ndarray, b: np.ndarray, dynamic_range: float = 1.0) -> MetricReport:
    """Bundle MSE/SSIM/PSNR for one image pair."""
    return MetricReport(
        mse=mse(a, b),
        ssim=ssim(a, b, data_range=dynamic_range),
        psnr_db=psnr_report(a, b, dynamic_range=dynamic_range),
    )
