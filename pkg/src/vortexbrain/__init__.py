"""Vortex-encoded Fourier imaging with shallow dense reconstruction nets.

A laser illuminates a phase object; a lenslet imprinting a spiral (vortex)
phase produces the far-field intensity a camera records. Because the vortex
mixes the field's real and imaginary parts, a single hidden layer suffices
to invert intensities back to the object. This package simulates that
pipeline end to end: optics, sensor noise, encoders, datasets, the small
dense net, metrics, and a CLI.
"""

from .optics import (
    ComplexField,
    OpticalConfig,
    forward_intensity,
    forward_intensity_stack,
    gaussian_aperture,
    phase_object,
    propagate_to_focal_plane,
    vortex_lens_mask,
)
from .metrics import MetricReport, mse, psnr_report, report, ssim
from .sensor import (
    CameraModel,
    SensorFrame,
    UnachievablePsnrError,
    add_noise,
    flux_for_target_psnr,
    psnr,
    quantize,
)
from .dataset import (
    DatasetError,
    ImageSet,
    csv_to_idx,
    flip_augment,
    load_idx,
    load_image_set,
    write_idx,
)
from .synth import load_corpus, surrogate
from .encoders import (
    EncoderSpec,
    EncodingFileError,
    encode,
    encode_batch,
    load_vpty,
    random_phase_mask,
    reference_flux,
    save_vpty,
)
from .smallbrain import (
    CheckpointError,
    DenseNet,
    TrainConfig,
    TrainingDivergedError,
    evaluate,
    forward,
    init,
    load_vnet,
    reconstruct,
    save_vnet,
    throughput_bench,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "CameraModel",
    "CheckpointError",
    "ComplexField",
    "DatasetError",
    "DenseNet",
    "EncoderSpec",
    "EncodingFileError",
    "ImageSet",
    "MetricReport",
    "OpticalConfig",
    "SensorFrame",
    "TrainConfig",
    "TrainingDivergedError",
    "UnachievablePsnrError",
    "add_noise",
    "csv_to_idx",
    "encode",
    "encode_batch",
    "evaluate",
    "flip_augment",
    "flux_for_target_psnr",
    "forward",
    "forward_intensity",
    "forward_intensity_stack",
    "gaussian_aperture",
    "init",
    "load_corpus",
    "load_idx",
    "load_image_set",
    "load_vnet",
    "load_vpty",
    "mse",
    "phase_object",
    "propagate_to_focal_plane",
    "psnr",
    "psnr_report",
    "quantize",
    "random_phase_mask",
    "reference_flux",
    "reconstruct",
    "report",
    "save_vnet",
    "save_vpty",
    "ssim",
    "surrogate",
    "throughput_bench",
    "train",
    "vortex_lens_mask",
    "write_idx",
    "__version__",
]
