"""Train the one-hidden-layer reconstruction net on vortex-encoded images.

The measurement is linear in the object's field, and the vortex keeps the
real/imaginary mixture visible in the intensity, so even a shallow dense
net inverts it. This demo trains a small run (384 images, 8 epochs) and
writes reconstruction montages; expect soft but recognizable garments in a
couple of minutes of CPU time. The full protocol lives in the acceptance
tests and the CLI.

Run from the repository root:  python3 demos/03_train_reconstruct.py
"""

import pathlib

from vortexbrain import (
    EncoderSpec,
    OpticalConfig,
    TrainConfig,
    encode_batch,
    evaluate,
    init,
    reconstruct,
    save_vnet,
    train,
)
from vortexbrain.pgm import montage, write_pgm8
from vortexbrain.smallbrain import write_history_csv
from vortexbrain.synth import load_corpus

out = pathlib.Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

cfg = OpticalConfig(include_lens_term=False)
spec = EncoderSpec(kind="vortex", charges=(1, 3))
train_set, test_set, provenance = load_corpus("fashion", 384, 64, seed=0)
print(f"data: {provenance}")

print("encoding ...")
y_train = encode_batch(train_set.images, spec, cfg)
y_test = encode_batch(test_set.images, spec, cfg)

net = init(spec.input_size(), hidden_dim=784, acts=("linear", "linear"), seed=0)
print("training ...")
net, history = train(
    net,
    y_train,
    train_set.images,
    TrainConfig(epochs=8, batch=32, lr=1e-3, seed=0),
    y_test=y_test,
    x_test=test_set.images,
)
for row in history:
    print(
        f"  epoch {row['epoch']:2d}: train mse {row['train_mse']:.5f}, "
        f"test mse {row['test_mse']:.5f}"
    )

mean_mse, mean_ssim = evaluate(net, y_test, test_set.images)
print(f"test: mse {mean_mse:.5f}, ssim {mean_ssim:.3f} (small run, far from converged)")

save_vnet(out / "demo_net.vnet", net)
write_history_csv(out / "demo_history.csv", history)
recon = reconstruct(net, y_test[:16])
write_pgm8(out / "recon_16.pgm", montage(list(recon), grid=(4, 4)))
write_pgm8(out / "recon_truth_16.pgm", montage(list(test_set.images[:16]), grid=(4, 4)))
print(f"outputs -> {out}")
