import csv

import numpy as np
import pytest

from vortexbrain.metrics import ssim
from vortexbrain.smallbrain import (
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
    write_history_csv,
)


def _task(n=12, d_in=6, d_out=4, seed=0):
    rng = np.random.default_rng(seed)
    return rng.random((n, d_in)), rng.random((n, d_out))


def _gradient_by_sgd_probe(net, y, x):
    """One full-batch SGD step at lr=1 recovers the exact gradient."""
    cfg = TrainConfig(epochs=1, batch=y.shape[0], lr=1.0, seed=0, optimizer="sgd")
    stepped, _ = train(net, y, x, cfg)
    return {
        "w1": net.w1 - stepped.w1,
        "b1": net.b1 - stepped.b1,
        "w2": net.w2 - stepped.w2,
        "b2": net.b2 - stepped.b2,
    }


def _loss(net, y, x):
    pred = forward(net, y)
    return float(np.mean((pred - x.reshape(x.shape[0], -1)) ** 2))


@pytest.mark.parametrize("acts", [
    ("linear", "linear"),
    ("linear", "sigmoid"),
    ("sigmoid", "linear"),
    ("sigmoid", "sigmoid"),
])
def test_backprop_matches_finite_differences(acts):
    y, x = _task(n=8, d_in=6, d_out=4, seed=1)
    net = init(6, 5, acts, seed=2, out_dim=4)
    grads = _gradient_by_sgd_probe(net, y, x)
    h = 1e-5
    rng = np.random.default_rng(3)
    for name in ("w1", "b1", "w2", "b2"):
        analytic = grads[name]
        flat_idx = rng.choice(analytic.size, size=min(10, analytic.size), replace=False)
        for k in flat_idx:
            idx = np.unravel_index(k, analytic.shape)
            up = net.copy()
            down = net.copy()
            getattr(up, name)[idx] += h
            getattr(down, name)[idx] -= h
            fd = (_loss(up, y, x) - _loss(down, y, x)) / (2 * h)
            scale = max(abs(fd), abs(analytic[idx]), 1e-8)
            assert abs(fd - analytic[idx]) / scale < 1e-4, (acts, name, idx)


def test_zero_learning_rate_is_a_no_op():
    y, x = _task(seed=4)
    net = init(6, 5, ("linear", "linear"), seed=0, out_dim=4)
    for opt in ("sgd", "adam"):
        out, _ = train(net, y, x, TrainConfig(epochs=2, lr=0.0, optimizer=opt, seed=0))
        assert np.array_equal(out.w1, net.w1)
        assert np.array_equal(out.w2, net.w2)
        assert np.array_equal(out.b1, net.b1)
        assert np.array_equal(out.b2, net.b2)


def test_single_sample_memorization():
    rng = np.random.default_rng(5)
    y = rng.random((1, 16))
    x = rng.random((1, 16))
    net = init(16, 32, ("linear", "linear"), seed=1, out_dim=16)
    net, history = train(net, y, x, TrainConfig(epochs=400, batch=1, lr=1e-2, seed=0))
    assert history[-1]["train_mse"] < 1e-6


def test_linear_net_is_exactly_affine():
    net = init(10, 7, ("linear", "linear"), seed=6, out_dim=5)
    rng = np.random.default_rng(7)
    y = rng.random((9, 10))
    direct = y @ (net.w1 @ net.w2) + net.b1 @ net.w2 + net.b2
    assert np.allclose(forward(net, y), direct, atol=1e-10)


def test_forward_handles_1d_and_2d():
    net = init(6, 5, ("linear", "sigmoid"), seed=0, out_dim=4)
    y, _ = _task()
    batched = forward(net, y)
    assert batched.shape == (12, 4)
    single = forward(net, y[3])
    assert single.shape == (4,)
    assert np.allclose(single, batched[3], atol=1e-12)
    # sigmoid output stays in (0, 1)
    assert batched.min() > 0.0 and batched.max() < 1.0


def test_training_is_deterministic_and_seed_sensitive():
    y, x = _task(n=32, seed=8)
    net = init(6, 5, ("linear", "linear"), seed=3, out_dim=4)
    cfg = TrainConfig(epochs=3, batch=8, lr=1e-3, seed=11)
    a, ha = train(net, y, x, cfg)
    b, hb = train(net, y, x, cfg)
    assert np.array_equal(a.w1, b.w1) and np.array_equal(a.w2, b.w2)
    assert ha == hb
    c, _ = train(net, y, x, TrainConfig(epochs=3, batch=8, lr=1e-3, seed=12))
    assert not np.array_equal(a.w1, c.w1)


def test_identity_task_trains_toward_truth(glyphs):
    # feeding the truth in directly is the easiest possible inverse problem;
    # a modest budget must already explain almost all pixel variance
    x = glyphs
    y = x.reshape(20, -1)
    net = init(784, 256, ("linear", "linear"), seed=0)
    net, history = train(net, y, x, TrainConfig(epochs=40, batch=20, lr=3e-3, seed=0))
    mean_mse, mean_ssim = evaluate(net, y, x)
    assert mean_mse < 1e-3
    assert mean_ssim > 0.6
    assert history[-1]["train_mse"] < history[0]["train_mse"] / 10


def test_memorized_single_sample_reconstructs_near_perfectly(glyphs):
    x = glyphs[:1]
    y = x.reshape(1, -1)
    net = init(784, 128, ("linear", "linear"), seed=0)
    net, _ = train(net, y, x, TrainConfig(epochs=250, batch=1, lr=1e-2, seed=0))
    _, mean_ssim = evaluate(net, y, x)
    assert mean_ssim > 0.99


def test_constant_sigmoid_output_closed_form_mse():
    # zero final layer + sigmoid -> every output pixel is exactly 0.5
    rng = np.random.default_rng(9)
    x = rng.random((6, 28, 28))
    y = rng.random((6, 50))
    net = init(50, 20, ("linear", "sigmoid"), seed=0)
    net.w2[:] = 0.0
    net.b2[:] = 0.0
    pred = forward(net, y)
    assert np.all(pred == 0.5)
    mean_mse, _ = evaluate(net, y, x)
    assert mean_mse == pytest.approx(float(np.mean((x - 0.5) ** 2)), rel=1e-12)


def test_init_statistics_and_determinism():
    net = init(100, 50, ("linear", "linear"), seed=4, out_dim=30)
    bound1 = np.sqrt(6.0 / (100 + 50))
    bound2 = np.sqrt(6.0 / (50 + 30))
    assert np.abs(net.w1).max() <= bound1
    assert np.abs(net.w2).max() <= bound2
    assert np.abs(net.w1).max() > 0.8 * bound1  # actually fills the range
    assert abs(net.w1.mean()) < 0.05 * bound1
    assert np.all(net.b1 == 0.0) and np.all(net.b2 == 0.0)
    again = init(100, 50, ("linear", "linear"), seed=4, out_dim=30)
    assert np.array_equal(net.w1, again.w1)
    other = init(100, 50, ("linear", "linear"), seed=5, out_dim=30)
    assert not np.array_equal(net.w1, other.w1)


def test_reconstruct_clips_to_unit_range():
    net = init(6, 5, ("linear", "linear"), seed=0, out_dim=784)
    net.b2[:] = 3.0  # force out-of-range raw outputs
    rng = np.random.default_rng(10)
    out = reconstruct(net, rng.random((2, 6)))
    assert out.shape == (2, 28, 28)
    assert out.max() <= 1.0 and out.min() >= 0.0


def test_divergence_raises():
    y, x = _task(n=64, seed=11)
    net = init(6, 5, ("linear", "linear"), seed=0, out_dim=4)
    net.w1 *= 1e150  # astronomically bad starting point overflows fast
    with pytest.raises(TrainingDivergedError):
        train(net, y, x, TrainConfig(epochs=5, batch=8, lr=1e6, optimizer="sgd"))


def test_vnet_round_trip(tmp_path):
    net = init(12, 9, ("sigmoid", "linear"), seed=13, out_dim=7)
    p = tmp_path / "net.vnet"
    save_vnet(p, net)
    back = load_vnet(p)
    assert back.act_hidden == "sigmoid" and back.act_out == "linear"
    assert np.allclose(back.w1, net.w1, atol=1e-7)  # float32 storage
    assert np.allclose(back.w2, net.w2, atol=1e-7)
    assert back.input_dim == 12 and back.hidden_dim == 9 and back.out_dim == 7


def test_vnet_bad_magic_and_truncation(tmp_path):
    net = init(4, 3, ("linear", "linear"), seed=0, out_dim=2)
    p = tmp_path / "net.vnet"
    save_vnet(p, net)
    raw = bytearray(p.read_bytes())
    bad = tmp_path / "bad.vnet"
    bad.write_bytes(b"XNET" + bytes(raw[4:]))
    with pytest.raises(CheckpointError):
        load_vnet(bad)
    trunc = tmp_path / "trunc.vnet"
    trunc.write_bytes(bytes(raw[:-8]))
    with pytest.raises(CheckpointError):
        load_vnet(trunc)


def test_history_csv_round_trip(tmp_path):
    y, x = _task(n=16, seed=14)
    net = init(6, 5, ("linear", "linear"), seed=0, out_dim=4)
    net, history = train(
        net, y, x, TrainConfig(epochs=3, batch=4), y_test=y[:4], x_test=x[:4]
    )
    p = tmp_path / "history.csv"
    write_history_csv(p, history)
    with open(p) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3
    assert [int(r["epoch"]) for r in rows] == [1, 2, 3]
    assert float(rows[-1]["train_mse"]) == pytest.approx(
        history[-1]["train_mse"], rel=1e-6
    )
    assert float(rows[-1]["test_mse"]) == pytest.approx(
        history[-1]["test_mse"], rel=1e-6
    )


def test_throughput_bench_reports_verified_rate():
    net = init(64, 32, ("linear", "linear"), seed=0, out_dim=16)
    rng = np.random.default_rng(15)
    result = throughput_bench(net, rng.random((128, 64)), duration=0.05, batch=32)
    assert result["fps"] > 0
    assert result["verified"] is True
    assert result["frames"] % 32 == 0
    assert "platform" in result["machine"]


def test_net_validation():
    with pytest.raises(ValueError):
        DenseNet(
            w1=np.zeros((4, 3)),
            b1=np.zeros(3),
            w2=np.zeros((5, 2)),  # hidden mismatch
            b2=np.zeros(2),
            act_hidden="linear",
            act_out="linear",
        )
    with pytest.raises(ValueError):
        init(4, 3, ("relu", "linear"), seed=0, out_dim=2)
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(optimizer="rmsprop")
