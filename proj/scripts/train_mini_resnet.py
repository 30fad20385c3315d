#!/usr/bin/env python3
"""Trains the mini-resnet fixture on the synthetic dataset and exports the
weights to the AIQW container.

The architecture mirrors the mini-resnet builder (widths 8/8/16/32, input
3x16x16, no projection shortcuts: transition blocks simply skip the
residual add). Datasets come from `aiq-mkfixtures` (train.aiqd/eval.aiqd).

The exported fixture additionally rescales one stem-conv filter (with the
batch-norm running stats compensated, so the FP32 function is unchanged) to
give the stem a wide weight dynamic range. Per-tensor INT4 quantization of
that layer then collapses the remaining filters while INT8 still resolves
them; this pins down a realistically INT4-fragile layer for the fixture.

    python3 scripts/train_mini_resnet.py --data-dir fx --out-dir fixtures
"""

import argparse
import json
import pathlib
import sys

import numpy as np
import torch
import torch.nn as nn

sys.path.insert(0, str(pathlib.Path(__file__).parent))
from aiq_ref import read_aiqd, write_aiqw  # noqa: E402


class Block(nn.Module):
    def __init__(self, c_in, c_out, stride):
        super().__init__()
        self.conv1 = nn.Conv2d(c_in, c_out, 3, stride, 1, bias=False)
        self.bn1 = nn.BatchNorm2d(c_out)
        self.conv2 = nn.Conv2d(c_out, c_out, 3, 1, 1, bias=False)
        self.bn2 = nn.BatchNorm2d(c_out)
        self.relu = nn.ReLU()
        self.skip = c_in == c_out and stride == 1

    def forward(self, x):
        y = self.relu(self.bn1(self.conv1(x)))
        y = self.bn2(self.conv2(y))
        if self.skip:
            y = y + x
        return self.relu(y)


class MiniResnet(nn.Module):
    def __init__(self, widths=(8, 8, 16, 32), classes=10):
        super().__init__()
        stem, s1, s2, s3 = widths
        self.conv1 = nn.Conv2d(3, stem, 3, 1, 1, bias=False)
        self.bn1 = nn.BatchNorm2d(stem)
        self.relu = nn.ReLU()
        blocks = []
        c_in = stem
        for si, width in enumerate((s1, s2, s3)):
            for b in range(3):
                stride = 2 if (si > 0 and b == 0) else 1
                blocks.append(Block(c_in, width, stride))
                c_in = width
        self.blocks = nn.Sequential(*blocks)
        self.head = nn.Linear(c_in, classes)

    def forward(self, x):
        x = self.relu(self.bn1(self.conv1(x)))
        x = self.blocks(x)
        x = x.mean(dim=(2, 3))
        return self.head(x)


def bn_tensor(bn):
    return np.stack([
        bn.weight.detach().numpy(),
        bn.bias.detach().numpy(),
        bn.running_mean.detach().numpy(),
        bn.running_var.detach().numpy(),
    ]).astype(np.float32)


def export(model, out_weights, plant_scale):
    model.eval()
    tensors = {}
    conv1_w = model.conv1.weight.detach().numpy().astype(np.float32).copy()
    bn1 = bn_tensor(model.bn1)
    if plant_scale != 1.0:
        s = np.float32(plant_scale)
        conv1_w[0] *= s
        bn1[2, 0] *= s        # running mean
        bn1[3, 0] *= s * s    # running var
    tensors["c1.w"] = conv1_w
    tensors["c1.bn.w"] = bn1
    for i, block in enumerate(model.blocks):
        stage, b = i // 3 + 1, i % 3
        prefix = f"{stage}.{b}"
        tensors[f"{prefix}c1.w"] = block.conv1.weight.detach().numpy().astype(np.float32)
        tensors[f"{prefix}c1.bn.w"] = bn_tensor(block.bn1)
        tensors[f"{prefix}c2.w"] = block.conv2.weight.detach().numpy().astype(np.float32)
        tensors[f"{prefix}c2.bn.w"] = bn_tensor(block.bn2)
    tensors["lin.w"] = model.head.weight.detach().numpy().astype(np.float32)
    tensors["lin.b"] = model.head.bias.detach().numpy().astype(np.float32)
    write_aiqw(out_weights, tensors)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--data-dir", default="fx", help="directory with train.aiqd / eval.aiqd")
    ap.add_argument("--out-dir", default="fixtures")
    ap.add_argument("--epochs", type=int, default=40)
    ap.add_argument("--lr", type=float, default=3e-3)
    ap.add_argument("--weight-decay", type=float, default=1e-4)
    ap.add_argument("--batch", type=int, default=128)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--plant-scale", type=float, default=5.0)
    args = ap.parse_args()

    torch.manual_seed(args.seed)
    np.random.seed(args.seed)
    torch.set_num_threads(2)

    train_x, train_y = read_aiqd(f"{args.data_dir}/train.aiqd")
    eval_x, eval_y = read_aiqd(f"{args.data_dir}/eval.aiqd")
    train_x = torch.from_numpy(train_x)
    train_y = torch.from_numpy(train_y.astype(np.int64))
    eval_xt = torch.from_numpy(eval_x)
    eval_yt = torch.from_numpy(eval_y.astype(np.int64))

    model = MiniResnet()
    opt = torch.optim.Adam(model.parameters(), lr=args.lr, weight_decay=args.weight_decay)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=args.epochs)
    loss_fn = nn.CrossEntropyLoss()

    n = len(train_y)
    for epoch in range(args.epochs):
        model.train()
        perm = torch.randperm(n)
        total_loss = 0.0
        for i in range(0, n, args.batch):
            idx = perm[i:i + args.batch]
            opt.zero_grad()
            out = model(train_x[idx])
            loss = loss_fn(out, train_y[idx])
            loss.backward()
            opt.step()
            total_loss += loss.item() * len(idx)
        sched.step()
        if (epoch + 1) % 5 == 0 or epoch == args.epochs - 1:
            model.eval()
            with torch.no_grad():
                acc = (model(eval_xt).argmax(1) == eval_yt).float().mean().item()
            print(f"epoch {epoch + 1}: loss {total_loss / n:.4f}, eval acc {acc:.4f}")

    out_dir = pathlib.Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    export(model, str(out_dir / "mini_resnet.aiqw"), args.plant_scale)
    print(f"exported {out_dir}/mini_resnet.aiqw (plant scale {args.plant_scale})")


if __name__ == "__main__":
    main()
