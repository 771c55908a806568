"""Encode a small image set with three different optical front ends.

The encoder turns each 28x28 object into the camera frames a single
exposure per mask would produce: forward model, 12-bit quantization,
central crop, and area-average pooling back to 28x28 per frame. The three
front ends compared here are the plain Fourier magnitude (m=0), a vortex
pair m={1,3}, and a uniformly random phase mask.

Run from the repository root:  python3 demos/02_encode_dataset.py
"""

import pathlib

import numpy as np

from vortexbrain import EncoderSpec, OpticalConfig, encode_batch, load_vpty, save_vpty
from vortexbrain.encoders import write_metadata_csv
from vortexbrain.pgm import montage, write_pgm8
from vortexbrain.synth import load_corpus

out = pathlib.Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

cfg = OpticalConfig(include_lens_term=False)
train, test, provenance = load_corpus("fashion", 48, 16, seed=0)
print(f"data: {provenance}")

specs = {
    "plain": EncoderSpec(kind="plain"),
    "vortex": EncoderSpec(kind="vortex", charges=(1, 3)),
    "random": EncoderSpec(kind="random", random_seed=0),
}

for name, spec in specs.items():
    y = encode_batch(test.images, spec, cfg)
    path = out / f"{name}.vpty"
    save_vpty(path, y, test.images, spec.frames, spec.out_n)
    write_metadata_csv(out / f"{name}_meta.csv", y, spec)

    # First frame of the first 16 samples, tiled for inspection.
    frames = y.reshape(-1, spec.frames, spec.out_n, spec.out_n)
    write_pgm8(out / f"{name}_frames.pgm", montage(list(frames[:16, 0]), grid=(4, 4)))

    y2, x2, nf, nn = load_vpty(path)
    assert np.allclose(y, y2, atol=1e-6) and nf == spec.frames and nn == spec.out_n
    print(
        f"  {name:7s}: {y.shape[0]} samples x {spec.frames} frame(s), "
        f"mean pooled level {y.mean():.3f}, file {path.name}"
    )

write_pgm8(out / "truth_16.pgm", montage(list(test.images[:16]), grid=(4, 4)))
print(f"outputs -> {out}")
