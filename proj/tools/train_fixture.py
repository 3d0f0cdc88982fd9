#!/usr/bin/env python3
"""Train the small fixture CNN and write it in the binary model/dataset containers.

Synthetic task: ten 8x8 single-channel prototype patterns plus noise and a
random shift. Network: conv 3x3 (1 -> 8) + ReLU, dense 288 -> 32 + ReLU,
dense 32 -> 10. Weights are quantized to 4-bit signed integers per layer and
each hidden layer gets a requantization shift chosen on the training set.

The integer forward pass below mirrors the C++ one (HWC feature maps, lowered
conv rows (l * k + j) * depth + h, round-half-up shift, clamp to 8-bit), and
the resulting clean accuracy is stored in fixture_meta.json.
"""

import argparse
import json
import struct
from pathlib import Path

import numpy as np
import torch
from torch import nn

H = W = 8
CLASSES = 10
WEIGHT_BITS = 4
ACT_BITS = 8
ACT_MAX = 2 ** (ACT_BITS - 1) - 1


def prototypes(rng):
    protos = []
    for _ in range(CLASSES):
        p = np.zeros((H + 2, W + 2))
        for _ in range(3):
            cy, cx = rng.uniform(0, H + 2, size=2)
            sy, sx = rng.uniform(0.8, 2.5, size=2)
            yy, xx = np.mgrid[0 : H + 2, 0 : W + 2]
            p += rng.uniform(0.5, 1.0) * np.exp(-((yy - cy) ** 2 / (2 * sy**2) + (xx - cx) ** 2 / (2 * sx**2)))
        protos.append(p / p.max())
    return protos


def make_split(protos, count, noise, rng):
    xs = np.zeros((count, H, W), dtype=np.int64)
    ys = rng.integers(0, CLASSES, size=count)
    for i, y in enumerate(ys):
        dy, dx = rng.integers(0, 3, size=2)
        img = protos[y][dy : dy + H, dx : dx + W] + rng.normal(0, noise, size=(H, W))
        xs[i] = np.clip(np.round(img * ACT_MAX), 0, ACT_MAX)
    return xs, ys


class Net(nn.Module):
    def __init__(self):
        super().__init__()
        self.conv = nn.Conv2d(1, 8, 3, bias=False)
        self.fc1 = nn.Linear(6 * 6 * 8, 32, bias=False)
        self.fc2 = nn.Linear(32, CLASSES, bias=False)

    def forward(self, x):
        x = torch.relu(self.conv(x))
        # HWC flattening, matching the integer pipeline.
        x = x.permute(0, 2, 3, 1).reshape(x.shape[0], -1)
        x = torch.relu(self.fc1(x))
        return self.fc2(x)


def quantize(w):
    qmax = 2 ** (WEIGHT_BITS - 1) - 1
    scale = np.abs(w).max() / qmax
    q = np.clip(np.round(w / scale), -(qmax + 1), qmax).astype(np.int64)
    return q, float(scale)


def requant(acc, shift):
    v = np.maximum(acc, 0)
    if shift > 0:
        v = (v + (1 << (shift - 1))) >> shift
    return np.clip(v, -ACT_MAX - 1, ACT_MAX)


def lowered_conv(q):
    # torch weight [out, in, kh, kw] -> rows (l * k + j) * depth + h, cols = out channel.
    out_c, in_c, k, _ = q.shape
    m = np.zeros((k * k * in_c, out_c), dtype=np.int64)
    for l in range(k):
        for j in range(k):
            for h in range(in_c):
                m[(l * k + j) * in_c + h, :] = q[:, h, l, j]
    return m


def conv_acc(x, m, k=3):
    # x: [N, H, W] single channel -> [N, oh*ow*out] HWC
    n = x.shape[0]
    oh, ow = H - k + 1, W - k + 1
    cols = np.zeros((n, oh, ow, k * k), dtype=np.int64)
    for l in range(k):
        for j in range(k):
            cols[:, :, :, l * k + j] = x[:, l : l + oh, j : j + ow]
    return (cols @ m).reshape(n, -1)


def int_forward(x, mats, shifts):
    a = requant(conv_acc(x, mats[0]), shifts[0])
    a = requant(a @ mats[1], shifts[1])
    return a @ mats[2]


def pick_shift(acc):
    # Smallest shift that keeps the 99.9th percentile of positive accumulators in range.
    top = np.percentile(np.maximum(acc, 0), 99.9)
    s = 0
    while top / (1 << s) > ACT_MAX:
        s += 1
    return s


def write_model(path, mats, scales, shifts):
    kinds = [1, 0, 0]
    with open(path, "wb") as f:
        f.write(b"IMCGMODL")
        f.write(struct.pack("<III", 1, ACT_BITS, len(mats)))
        for i, m in enumerate(mats):
            conv = kinds[i] == 1
            relu = 1 if i + 1 < len(mats) else 0
            f.write(struct.pack("<BBHIid", kinds[i], relu, 0, WEIGHT_BITS, shifts[i], scales[i]))
            f.write(struct.pack("<IIIIII", m.shape[0], m.shape[1], 3 if conv else 0, 1 if conv else 0,
                                H if conv else 0, W if conv else 0))
            f.write(m.astype(np.int8).tobytes())


def write_dataset(path, xs, ys):
    with open(path, "wb") as f:
        f.write(b"IMCGDATA")
        f.write(struct.pack("<IIIII", 1, ACT_BITS, len(xs), H * W, CLASSES))
        for x, y in zip(xs, ys):
            f.write(struct.pack("<I", int(y)))
            f.write(x.reshape(-1).astype(np.int8).tobytes())


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "tests" / "fixtures")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--train", type=int, default=6000)
    ap.add_argument("--test", type=int, default=1000)
    ap.add_argument("--noise", type=float, default=0.35)
    ap.add_argument("--epochs", type=int, default=40)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    torch.manual_seed(args.seed)
    protos = prototypes(rng)
    xtr, ytr = make_split(protos, args.train, args.noise, rng)
    xte, yte = make_split(protos, args.test, args.noise, rng)

    net = Net()
    opt = torch.optim.Adam(net.parameters(), lr=3e-3)
    xt = torch.tensor(xtr[:, None] / ACT_MAX, dtype=torch.float32)
    yt = torch.tensor(ytr)
    for _ in range(args.epochs):
        perm = torch.randperm(len(xt))
        for i in range(0, len(xt), 128):
            idx = perm[i : i + 128]
            opt.zero_grad()
            loss = nn.functional.cross_entropy(net(xt[idx]), yt[idx])
            loss.backward()
            opt.step()

    with torch.no_grad():
        float_acc = float((net(torch.tensor(xte[:, None] / ACT_MAX, dtype=torch.float32)).argmax(1).numpy() == yte).mean())

    qc, sc = quantize(net.conv.weight.detach().numpy())
    q1, s1 = quantize(net.fc1.weight.detach().numpy().T)
    q2, s2 = quantize(net.fc2.weight.detach().numpy().T)
    mats = [lowered_conv(qc), q1, q2]

    s0 = pick_shift(conv_acc(xtr, mats[0]))
    a0 = requant(conv_acc(xtr, mats[0]), s0)
    s_1 = pick_shift(a0 @ mats[1])
    shifts = [s0, s_1, 0]

    logits = int_forward(xte, mats, shifts)
    pred = logits.argmax(1)  # numpy argmax picks the lowest index on ties
    int_acc = float((pred == yte).mean())

    args.out.mkdir(parents=True, exist_ok=True)
    write_model(args.out / "model.imcg", mats, [sc, s1, s2], shifts)
    write_dataset(args.out / "dataset.imcg", xte, yte)
    meta = {
        "samples": int(len(xte)),
        "clean_correct": int((pred == yte).sum()),
        "clean_accuracy": int_acc,
        "float_accuracy": float_acc,
        "shifts": shifts,
        "first_logits": logits[0].tolist(),
        "first_prediction": int(pred[0]),
    }
    (args.out / "fixture_meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    print(json.dumps(meta))


if __name__ == "__main__":
    main()
