"""Numbered end-to-end gates for the headline reconstruction claims.

Each test prints one ``criterion N: PASS/FAIL`` line with the measured
numbers (run with ``-s`` to watch them live); the lines are also appended
to acceptance_out/criteria.txt next to the emitted montages. Shared
experimental footing: 4500 train / 500 test garment images, 12-bit sensor,
784-hidden all-linear nets trained with Adam at lr 1e-3, batch 64, as
sequential single-epoch segments seeded 1000+epoch. The training-heavy
fixtures put the whole file around half an hour on one core; each
individual training run stays well under ten minutes.
"""

import platform
import time
from pathlib import Path

import numpy as np
import pytest

from vortexbrain.dataset import ImageSet, flip_augment
from vortexbrain.encoders import EncoderSpec, encode_batch, reference_flux
from vortexbrain.metrics import mse as metric_mse
from vortexbrain.metrics import ssim as metric_ssim
from vortexbrain.optics import (
    ComplexField,
    OpticalConfig,
    derivative_oracle_check,
    forward_intensity,
    propagate_to_focal_plane,
    vortex_lens_mask,
)
from vortexbrain.pgm import montage, write_pgm8
from vortexbrain.sensor import CameraModel, add_noise
from vortexbrain.smallbrain import (
    TrainConfig,
    evaluate,
    forward,
    init,
    reconstruct,
    throughput_bench,
    train,
)
from vortexbrain.synth import load_corpus

CFG = OpticalConfig(include_lens_term=False)  # pure 2-f arrangement
HIDDEN = 784
BATCH = 64
LR = 1e-3
TRAIN_EPOCHS = 54
C2_LR = 1e-2
C4_EPOCHS = 10
PSNR_LEVELS = (1.0, 2.0, 4.0, 6.0)

SPECS = {
    "plain": EncoderSpec(kind="plain"),
    "1v": EncoderSpec(kind="vortex", charges=(1,)),
    "2v": EncoderSpec(kind="vortex", charges=(1, 3)),
    "3v": EncoderSpec(kind="vortex", charges=(1, 3, 5)),
    "random": EncoderSpec(kind="random", random_seed=0),
}


def _train_protocol(ytr, xtr, epochs, acts=("linear", "linear")):
    """Sequential single-epoch segments with per-epoch seeds."""
    net = init(ytr.shape[1], HIDDEN, acts, seed=0)
    for ep in range(1, epochs + 1):
        seg = TrainConfig(epochs=1, batch=BATCH, lr=LR, seed=1000 + ep, optimizer="adam")
        net, _ = train(net, ytr, xtr, seg)
    return net


@pytest.fixture(scope="module")
def out_dir():
    d = Path(__file__).resolve().parent.parent / "acceptance_out"
    d.mkdir(exist_ok=True)
    (d / "criteria.txt").write_text("")
    return d


def _verdict(out_dir, num, ok, detail):
    line = f"criterion {num}: {'PASS' if ok else 'FAIL'} | {detail}"
    print(f"\n{line}")
    with open(out_dir / "criteria.txt", "a") as fh:
        fh.write(line + "\n")
    return ok


@pytest.fixture(scope="module")
def fashion():
    train_set, test_set, provenance = load_corpus("fashion", 4500, 500, seed=0)
    print(f"\nfashion data source: {provenance}")
    return train_set.images, test_set.images


@pytest.fixture(scope="module")
def encodings(fashion):
    xtr, xte = fashion
    t0 = time.time()
    enc = {
        name: (encode_batch(xtr, spec, CFG), encode_batch(xte, spec, CFG))
        for name, spec in SPECS.items()
    }
    print(f"encoded 5 configurations in {time.time() - t0:.0f}s")
    return enc


@pytest.fixture(scope="module")
def nets(fashion, encodings):
    """Clean-trained nets for every encoder, plus a sigmoid-output variant."""
    xtr, _ = fashion
    out = {}
    for name in ("plain", "1v", "2v", "3v", "random"):
        ytr, _ = encodings[name]
        t0 = time.time()
        out[name] = _train_protocol(ytr, xtr, TRAIN_EPOCHS)
        print(f"trained {name} for {TRAIN_EPOCHS} epochs in {time.time() - t0:.0f}s")
    ytr, _ = encodings["2v"]
    t0 = time.time()
    out["2v_sig"] = _train_protocol(ytr, xtr, TRAIN_EPOCHS, acts=("linear", "sigmoid"))
    print(f"trained 2v sigmoid-out for {TRAIN_EPOCHS} epochs in {time.time() - t0:.0f}s")
    return out


@pytest.fixture(scope="module")
def anchored_cams(fashion):
    """One camera per PSNR level, flux anchored on the diffuser reference."""
    _, xte = fashion
    base = CameraModel(bit_depth_L=12, dark_var=2.0, rng_seed=0)
    cams = {}
    for db in PSNR_LEVELS:
        flux = reference_flux(xte, db, base, CFG, seed=0)
        cams[db] = CameraModel(bit_depth_L=12, dark_var=2.0, flux_scale=flux, rng_seed=0)
    return cams


@pytest.fixture(scope="module")
def noisy_2v(fashion, anchored_cams):
    _, xte = fashion
    return {
        db: encode_batch(xte, SPECS["2v"], CFG, cam=cam)
        for db, cam in anchored_cams.items()
    }


def test_criterion_1_encoder_ladder(out_dir, fashion, encodings, nets):
    _, xte = fashion
    scores = {}
    for name in ("plain", "1v", "2v", "3v"):
        m, s = evaluate(nets[name], encodings[name][1], xte)
        scores[name] = (s, m)
    s = {k: v[0] for k, v in scores.items()}
    m = {k: v[1] for k, v in scores.items()}
    bands_s = {"plain": 0.45, "1v": 0.62, "2v": 0.84, "3v": 0.88}
    bands_m = {"plain": 0.0280, "1v": 0.0242, "2v": 0.0140, "3v": 0.0122}
    ok = (
        s["plain"] < s["1v"] < s["2v"] <= s["3v"]
        and s["2v"] - s["1v"] >= 0.10
        and all(abs(s[k] - bands_s[k]) <= 0.08 for k in bands_s)
        and m["plain"] > m["1v"] > m["2v"] >= m["3v"]
        and all(abs(m[k] - bands_m[k]) <= 0.006 for k in bands_m)
    )
    detail = (
        "ssim " + " ".join(f"{k}={s[k]:.3f}" for k in ("plain", "1v", "2v", "3v"))
        + f" (2v-1v={s['2v'] - s['1v']:.3f})"
        + " | mse " + " ".join(f"{k}={m[k]:.4f}" for k in ("plain", "1v", "2v", "3v"))
    )
    assert _verdict(out_dir, 1, ok, detail), detail


def test_criterion_2_convergence_speed(out_dir, fashion, encodings):
    """Plain SGD keeps the learning order tied to the input spectrum.

    Adam's per-parameter step normalization erases the conditioning gap
    between codes, so this comparison runs its own optimizer, identical
    for both encoders.
    """
    xtr, xte = fashion
    entry = {}
    for name in ("2v", "random"):
        ytr, yte = encodings[name]
        net = init(ytr.shape[1], HIDDEN, seed=0)
        cfg = TrainConfig(epochs=10, batch=BATCH, lr=C2_LR, seed=0, optimizer="sgd")
        _, hist = train(net, ytr, xtr, cfg, yte, xte)
        curve = {row["epoch"]: row["test_mse"] for row in hist}
        final = curve[10]
        entry[name] = next(ep for ep in sorted(curve) if curve[ep] <= 1.10 * final)
    e_v, e_r = entry["2v"], entry["random"]
    ok = e_r >= 2 * e_v
    detail = f"test MSE within 10% of own 10-epoch value: 2v at epoch {e_v}, random at epoch {e_r}"
    assert _verdict(out_dir, 2, ok, detail), detail


def test_criterion_3_noise_robustness_2db(out_dir, fashion, nets, anchored_cams, noisy_2v):
    _, xte = fashion
    y_v = noisy_2v[2.0]
    y_r = encode_batch(xte, SPECS["random"], CFG, cam=anchored_cams[2.0])
    _, s_v = evaluate(nets["2v"], y_v, xte)
    _, s_r = evaluate(nets["random"], y_r, xte)
    k = 25
    tiles_truth = list(xte[:k])
    tiles_v = list(reconstruct(nets["2v"], y_v[:k]))
    tiles_r = list(reconstruct(nets["random"], y_r[:k]))
    for stem, tiles in (("truth", tiles_truth), ("vortex_2db", tiles_v), ("random_2db", tiles_r)):
        write_pgm8(out_dir / f"c3_{stem}.pgm", montage(tiles, grid=(5, 5)))
    ok = s_v - s_r >= 0.15
    detail = (
        f"2 dB captures: vortex ssim {s_v:.3f}, random ssim {s_r:.3f}, "
        f"gap {s_v - s_r:.3f} (montages in {out_dir})"
    )
    assert _verdict(out_dir, 3, ok, detail), detail


def test_criterion_4_cross_family_generalization(out_dir):
    dig_train, _, prov_d = load_corpus("mnist-digits", 4500, 100, seed=0)
    _, kuzu_test, prov_k = load_corpus("kuzushiji", 100, 500, seed=0)
    print(f"\ndigits data source: {prov_d}\nkuzushiji data source: {prov_k}")
    xtr = flip_augment(dig_train).images
    xte = kuzu_test.images
    scores = {}
    for name, spec in (
        ("m3", EncoderSpec(kind="vortex", charges=(3,))),
        ("plain", SPECS["plain"]),
        ("random", SPECS["random"]),
    ):
        t0 = time.time()
        ytr = encode_batch(xtr, spec, CFG)
        yte = encode_batch(xte, spec, CFG)
        net = _train_protocol(ytr, xtr, C4_EPOCHS)
        _, scores[name] = evaluate(net, yte, xte)
        print(f"{name}: encoded+trained {C4_EPOCHS} epochs in {time.time() - t0:.0f}s")
    ok = (
        scores["m3"] - scores["plain"] >= 0.10
        and scores["m3"] - scores["random"] >= 0.10
    )
    detail = (
        f"flip-augmented digit training, kuzushiji testing: ssim m3 {scores['m3']:.3f}, "
        f"plain {scores['plain']:.3f}, random {scores['random']:.3f}"
    )
    assert _verdict(out_dir, 4, ok, detail), detail


def test_criterion_5_output_activation_trend(out_dir, fashion, nets, noisy_2v):
    _, xte = fashion
    lin = nets["2v"]
    sig = nets["2v_sig"]
    diffs = {}
    for db in PSNR_LEVELS:
        _, s_lin = evaluate(lin, noisy_2v[db], xte)
        _, s_sig = evaluate(sig, noisy_2v[db], xte)
        diffs[db] = (s_lin, s_sig)
    lo, hi = min(PSNR_LEVELS), max(PSNR_LEVELS)
    lin_lo, sig_lo = diffs[lo]
    lin_hi, sig_hi = diffs[hi]
    ok = lin_lo >= sig_lo - 0.02 and sig_hi >= lin_hi - 0.02
    detail = "all-linear vs sigmoid-out ssim: " + "; ".join(
        f"{db:g} dB {a:.3f}/{b:.3f}" for db, (a, b) in sorted(diffs.items())
    )
    assert _verdict(out_dir, 5, ok, detail), detail


def test_criterion_6_throughput(out_dir, encodings, nets):
    report = throughput_bench(nets["2v"], encodings["2v"][1], duration=2.0, batch=BATCH)
    ok = report["fps"] >= 1000.0 and report["verified"]
    mach = report["machine"]
    detail = (
        f"{report['fps']:.0f} reconstructions/s (1568->784->784, batch {BATCH}) on "
        f"{mach.get('cpu_model', platform.machine())}, {mach.get('cpu_count', '?')} cores"
    )
    assert _verdict(out_dir, 6, ok, detail), detail


def test_criterion_7_physics_suite(out_dir):
    t0 = time.time()
    checks = {}

    rng = np.random.default_rng(0)
    f = ComplexField(rng.normal(size=(128, 128)) + 1j * rng.normal(size=(128, 128)), 1.0)
    g = propagate_to_focal_plane(f)
    checks["parseval"] = abs(g.power() - f.power()) / f.power() < 1e-10

    bare = OpticalConfig(include_lens_term=False, waist_w=np.inf, aperture_a=8.0)
    rr, cc = np.meshgrid(np.arange(28), np.arange(28), indexing="ij")
    blob = np.exp(-((rr - 13.5) ** 2 + (cc - 13.5) ** 2) / 18.0)
    blob[blob < 1e-3] = 0.0
    i0 = forward_intensity(blob, 0, bare)
    i0_shift = forward_intensity(np.roll(blob, (3, 2), axis=(0, 1)), 0, bare)
    checks["m0 invariance"] = np.linalg.norm(i0 - i0_shift) / np.linalg.norm(i0) < 1e-9

    i3 = forward_intensity(blob, 3, bare)
    i3_shift = forward_intensity(np.roll(blob, (3, 2), axis=(0, 1)), 3, bare)
    checks["m3 sensitivity"] = np.linalg.norm(i3 - i3_shift) / np.linalg.norm(i3) > 0.01

    n, extent, w = 256, 2.0, 0.02
    axis = (np.arange(n) - n // 2) * (extent / n)
    x, y = np.meshgrid(axis, axis)
    h = ComplexField(np.exp(-(x**2 + y**2) / w**2) * np.exp(2j * np.pi * (3 * x + 5 * y)), extent)
    checks["derivative oracle"] = derivative_oracle_check(h, 1) < 1e-3

    donut = forward_intensity(np.zeros((28, 28)), 1, CFG)
    c = donut.shape[0] // 2
    checks["donut null"] = donut[c, c] < 1e-3 * donut.max()

    cam = CameraModel(flux_scale=5.0, dark_var=2.0, rng_seed=1)
    counts = add_noise(np.ones((500, 500)), cam)
    mean_err = abs(counts.mean() - 7.0)
    checks["poisson stats"] = (
        mean_err < 5.0 * np.sqrt(7.0 / counts.size) and abs(counts.var() / 7.0 - 1.0) < 0.05
    )

    yb = rng.random((8, 6))
    xb = rng.random((8, 16))
    for acts in (("linear", "linear"), ("sigmoid", "sigmoid")):
        net = init(6, 5, acts, seed=2, out_dim=16)
        probe = TrainConfig(epochs=1, batch=8, lr=1.0, seed=0, optimizer="sgd")
        stepped, _ = train(net, yb, xb, probe)
        grads = {nm: getattr(net, nm) - getattr(stepped, nm) for nm in ("w1", "b1", "w2", "b2")}
        hstep = 1e-5
        ok_grad = True
        pick = np.random.default_rng(3)
        for nm in ("w1", "b1", "w2", "b2"):
            g_an = grads[nm]
            for k in pick.choice(g_an.size, size=min(6, g_an.size), replace=False):
                idx = np.unravel_index(k, g_an.shape)
                up, down = net.copy(), net.copy()
                getattr(up, nm)[idx] += hstep
                getattr(down, nm)[idx] -= hstep
                lu = float(np.mean((forward(up, yb) - xb) ** 2))
                ld = float(np.mean((forward(down, yb) - xb) ** 2))
                fd = (lu - ld) / (2 * hstep)
                scale = max(abs(fd), abs(g_an[idx]), 1e-8)
                if abs(fd - g_an[idx]) / scale >= 1e-4:
                    ok_grad = False
        checks[f"gradcheck {acts[0][:3]}/{acts[1][:3]}"] = ok_grad

    a = rng.random((28, 28))
    b = rng.random((28, 28))
    checks["metric identities"] = (
        metric_ssim(a, a) == pytest.approx(1.0, abs=1e-12)
        and metric_mse(a, a) == 0.0
        and metric_ssim(a, b) == pytest.approx(metric_ssim(b, a), abs=1e-12)
        and metric_mse(a, b) == pytest.approx(metric_mse(b, a), abs=1e-15)
    )

    elapsed = time.time() - t0
    checks["under 60 s"] = elapsed < 60.0
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    detail = f"{len(checks)} checks in {elapsed:.1f}s" + (
        "" if ok else f"; failed: {failed}"
    )
    assert _verdict(out_dir, 7, ok, detail), detail
