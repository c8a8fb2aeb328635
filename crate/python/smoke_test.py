"""Smoke test for the `qat` extension module.

Build and install with `maturin develop -m crates/py/Cargo.toml --features extension-module`
(or copy the release cdylib next to this file as `qat.so`), then run
`python python/smoke_test.py`.
"""

import math
import os
import random
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import qat  # noqa: E402


def close(a, b, tol):
    return abs(a - b) <= tol


def check_circuits():
    amps = qat.ghz_state(3)
    assert close(abs(amps[0]), 1 / math.sqrt(2), 1e-12)
    assert close(abs(amps[7]), 1 / math.sqrt(2), 1e-12)
    assert all(abs(a) < 1e-12 for a in amps[1:7])

    c = qat.Circuit(1, 1)
    c.rx(0, slot=0)
    for theta in (0.0, 0.3, 1.2, math.pi):
        assert close(c.expectations([theta])[0], math.cos(theta), 1e-10)
        assert close(c.gradients([theta])[0][0], -math.sin(theta), 1e-10)


def check_kernel():
    k = qat.Kernel([0.1, 0.2, 0.3], [0.4, 0.5, 0.6])
    assert k.feature_map([0.0, 0.0]) == [1.0, 1.0, 1.0]
    xs = [[random.uniform(-1, 1) for _ in range(2)] for _ in range(5)]
    g = k.gram(xs)
    for i in range(5):
        for j in range(5):
            assert close(g[i][j], g[j][i], 1e-12)
            assert close(g[i][j], k(xs[i], xs[j]), 1e-12)
    try:
        k.feature_map([])
    except ValueError:
        pass
    else:
        raise AssertionError("empty input accepted")


def check_attention():
    L, d, n = 4, 3, 2
    x = [[random.gauss(0, 1) for _ in range(d)] for _ in range(L)]
    w = [[random.gauss(0, 0.5) for _ in range(n)] for _ in range(d)]
    y, attn = qat.interference_attention(x, w, [0.3, -0.2], [0.7, 1.1], math.pi / 4)
    assert len(y) == L and len(y[0]) == d
    for row in attn:
        assert close(sum(row), 1.0, 1e-9)


def check_metrics():
    r = qat.evaluate_predictions([0, 0, 1], [0, 1, 1], 2)
    assert close(r["accuracy"], 2 / 3, 1e-15)
    dis = qat.disagree([0, 1], [1, 0], [0, 0])
    assert dis["n_disagree"] == 2 and dis["a_correct"] == 1 and dis["b_correct"] == 1


def write_toy(path, n, rng):
    filler = [f"w{i}" for i in range(10)]
    with open(path, "w") as f:
        for _ in range(n):
            y = rng.randint(0, 1)
            words = [rng.choice(filler) for _ in range(5)]
            words.insert(rng.randint(0, 5), "good" if y else "bad")
            f.write(f"{y}\t{' '.join(words)}\n")


def check_training():
    rng = random.Random(3)
    with tempfile.TemporaryDirectory() as tmp:
        train, dev = os.path.join(tmp, "train.tsv"), os.path.join(tmp, "dev.tsv")
        write_toy(train, 40, rng)
        write_toy(dev, 10, rng)
        cfg = os.path.join(tmp, "config.txt")
        with open(cfg, "w") as f:
            f.write("embed_dim=8\nn_qubits=3\nseq_len=6\nepochs=2\nbatch_size=8\nlr=1e-3\n")
        out = os.path.join(tmp, "run")
        log = qat.train(cfg, train, dev, out)
        assert [r["epoch"] for r in log] == [0, 1, 2]
        model = qat.Model.load(os.path.join(out, "final.ckpt"))
        assert model.attention_kind == "quantum_single"
        assert model.count_params() > 0
        preds = model.predict(["good w1 w2", "bad w3"])
        assert all(p in (0, 1) for p in preds)
        assert len(model.attention(["good w1"])[0]) == 6
        report, preds = model.evaluate(dev)
        assert len(preds) == 10 and 0.0 <= report["accuracy"] <= 1.0


def main():
    random.seed(0)
    for check in (check_circuits, check_kernel, check_attention, check_metrics, check_training):
        check()
        print(f"ok  {check.__name__}")


if __name__ == "__main__":
    main()
