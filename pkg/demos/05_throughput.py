"""Measure reconstruction throughput of the shallow dense net.

Inversion is two matrix multiplies, so a CPU sustains thousands of frames
per second; that's the practical payoff of replacing an iterative phase
retrieval or a deep CNN with one hidden layer. The benchmark cycles batches
through the stock forward pass and cross-checks that the timed outputs are
bit-identical to an untimed reference call.

Run from the repository root:  python3 demos/05_throughput.py
"""

import numpy as np

from vortexbrain import init, throughput_bench

# Two 28x28 frames in (the m={1,3} pair), one 28x28 reconstruction out.
net = init(input_dim=2 * 28 * 28, hidden_dim=784, acts=("linear", "linear"), seed=0)

rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(0)))
inputs = rng.random((512, net.input_dim))

result = throughput_bench(net, inputs, duration=2.0, batch=64)
print(f"net: {net.input_dim} -> {net.hidden_dim} -> {net.out_dim} (linear/linear)")
print(f"sustained: {result['fps']:.0f} reconstructions/s")
print(f"  {result['frames']} frames in {result['seconds']:.2f} s, batch {result['batch']}")
print(f"  outputs verified against reference forward pass: {result['verified']}")
print(f"  machine: {result['machine']}")
