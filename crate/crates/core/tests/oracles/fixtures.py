#!/usr/bin/env python3
"""Straight-line scalar evaluations used as frozen fixtures by the Rust tests.

Nothing here imports the Rust code or numpy: every value is computed with
plain floats and `math`, one formula at a time, so the fixtures stay
independent of the implementation they check.

Run: python3 crates/core/tests/oracles/fixtures.py
"""

import math


def sigmoid(v):
    return 1.0 / (1.0 + math.exp(-v))


def relu(v):
    return v if v > 0.0 else 0.0


def show(name, value):
    if isinstance(value, (list, tuple)):
        print(f"{name} = [" + ", ".join(repr(v) for v in value) + "]")
    else:
        print(f"{name} = {value!r}")


def matmul_example():
    a = [[1.0, 2.0], [3.0, 4.0]]
    b = [5.0, 6.0]
    show("matmul", [a[0][0] * b[0] + a[0][1] * b[1], a[1][0] * b[0] + a[1][1] * b[1]])


def activations():
    show("sigmoid(ln 3)", sigmoid(math.log(3.0)))


def conv_example():
    # N=2, T=3, k=2; f_0 = (1, 0), f_1 = (0, 1); out_t = f_0.x_t + f_1.x_{t-1}
    x = [(1.0, 2.0), (3.0, 4.0), (5.0, 6.0)]
    f = [(1.0, 0.0), (0.0, 1.0)]
    out = []
    for t in range(3):
        acc = 0.0
        for j in range(2):
            if t - j >= 0:
                acc += f[j][0] * x[t - j][0] + f[j][1] * x[t - j][1]
        out.append(acc)
    show("conv pre-activations", out)


def gru_scalar(y, h, wr, br, wu, bu, wc, bc):
    r = sigmoid(wr[0] * y + wr[1] * h + br)
    u = sigmoid(wu[0] * y + wu[1] * h + bu)
    c = math.tanh(wc[0] * y + wc[1] * (r * h) + bc)
    return u * h + (1.0 - u) * c, r, u, c


def gru_examples():
    h, r, u, c = gru_scalar(1.0, 0.0, (1.0, 1.0), 0.0, (1.0, 1.0), 0.0, (1.0, 1.0), 0.0)
    show("gru cell r", r)
    show("gru cell u", u)
    show("gru cell c", c)
    show("gru cell h", h)
    # two-step sequence, 1-dim
    params = ((0.4, -0.6), 0.1, (-0.3, 0.8), -0.2, (0.9, 0.5), 0.05)
    h0 = 0.0
    h1 = gru_scalar(0.7, h0, *params)[0]
    h2 = gru_scalar(-1.3, h1, *params)[0]
    show("gru two-step", [h1, h2])


def lstm_example():
    x, h, c = 0.8, 0.3, -0.5
    i = sigmoid(0.5 * x - 0.3 * h + 0.1)
    f = sigmoid(0.2 * x + 0.6 * h - 0.1)
    g = math.tanh(-0.7 * x + 0.4 * h + 0.05)
    o = sigmoid(0.9 * x - 0.2 * h + 0.0)
    c_next = f * c + i * g
    h_next = o * math.tanh(c_next)
    show("lstm c", c_next)
    show("lstm h", h_next)


def dense_example():
    h = (1.0, 2.0)
    w = ((1.0, 3.0), (2.0, 4.0))
    b = (0.5, -0.5)
    show("dense", [h[0] * w[0][j] + h[1] * w[1][j] + b[j] for j in range(2)])


def softmax(v):
    m = max(v)
    e = [math.exp(x - m) for x in v]
    s = sum(e)
    return [x / s for x in e]


def head_examples():
    show("softmax(0, ln 2)", softmax([0.0, math.log(2.0)]))
    target = [1.0, 0.0, 0.0, 0.0]
    pred = [0.25] * 4
    show("mse", sum((p - t) ** 2 for p, t in zip(pred, target)))


def tiny_hcg():
    # N=2 sensors, T=4, one conv kernel (k=2), one GRU unit, direct head to 2 classes.
    x = [(0.5, -1.0), (1.5, 0.25), (-0.75, 2.0), (1.0, -0.5)]
    taps = [(0.6, -0.4), (0.3, 0.8)]
    conv_bias = 0.05
    ys = []
    for t in range(4):
        acc = 0.0
        for j in range(2):
            if t - j >= 0:
                acc += taps[j][0] * x[t - j][0] + taps[j][1] * x[t - j][1]
        ys.append(relu(acc + conv_bias))
    params = ((0.7, -0.3), 0.1, (-0.5, 0.9), -0.2, (1.2, 0.4), 0.05)
    h = 0.0
    for y in ys:
        h = gru_scalar(y, h, *params)[0]
    logits = [h * 1.5 + 0.2, h * -0.8 - 0.1]
    show("tiny hcg conv out", ys)
    show("tiny hcg h_T", h)
    show("tiny hcg probabilities", softmax(logits))


def adam_two_steps():
    lr, b1, b2, eps = 0.001, 0.9, 0.999, 1e-8
    theta, m, v = 1.0, 0.0, 0.0
    out = []
    for t in (1, 2):
        g = 2.0 * theta
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        mh = m / (1.0 - b1 ** t)
        vh = v / (1.0 - b2 ** t)
        theta = theta - lr * mh / (math.sqrt(vh) + eps)
        out.append(theta)
    show("adam theta", out)


def metrics_example():
    true = [0, 0, 1]
    pred = [0, 1, 1]
    res = []
    for c in (0, 1):
        tp = sum(1 for t, p in zip(true, pred) if t == c and p == c)
        fp = sum(1 for t, p in zip(true, pred) if t != c and p == c)
        fn = sum(1 for t, p in zip(true, pred) if t == c and p != c)
        prec = tp / (tp + fp)
        rec = tp / (tp + fn)
        res.append((prec, rec, 2 * prec * rec / (prec + rec)))
    show("metrics accuracy", sum(1 for t, p in zip(true, pred) if t == p) / 3)
    show("metrics per-class (P, R, F1)", res)
    show("metrics macro F1", (res[0][2] + res[1][2]) / 2)


def sweep_std():
    xs = [0.8, 1.0]
    mean = sum(xs) / len(xs)
    var = sum((x - mean) ** 2 for x in xs) / (len(xs) - 1)
    show("sweep mean", mean)
    show("sweep sample std", math.sqrt(var))


if __name__ == "__main__":
    matmul_example()
    activations()
    conv_example()
    gru_examples()
    lstm_example()
    dense_example()
    head_examples()
    tiny_hcg()
    adam_two_steps()
    metrics_example()
    sweep_std()
