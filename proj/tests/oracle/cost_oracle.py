#!/usr/bin/env python3
"""Independent cost oracle.

Recomputes per-layer FLOPs / byte traffic and global arithmetic intensity
from the closed-form counting rules, using an explicit layer table that is
written out by hand here (NOT generated from the C++ builders). The numbers
printed by this script are frozen into the C++ unit tests.

Counting rules:
  - MAC = 2 FLOPs.
  - Conv2d  flops = 2*kh*kw*(in_c/groups)*out_c*out_h*out_w*batch
  - Linear  flops = 2*in_f*out_f*batch
  - ReLU/Add/pool 1 flop per output element (pool: per element in window),
    BatchNorm 2 flops per element.
  - Every layer reads its full input activations and writes its full output
    activations at 4 bytes/element (Add reads both inputs).
  - Weights are read once per batch: weight_bytes(b) = ceil(elems*b/8),
    bias always 4 bytes/element.
"""

import math
from dataclasses import dataclass, field


@dataclass
class L:
    kind: str
    in_shape: tuple
    out_shape: tuple
    welems: int = 0  # weight elements (quantizable layers only)
    belems: int = 0  # bias elements (always f32)
    kk: int = 0      # kernel area, for pool flops
    extra_in: int = 0  # second input of Add

    def flops(self, batch):
        ci, hi, wi = (self.in_shape + (1, 1))[:3]
        co, ho, wo = (self.out_shape + (1, 1))[:3]
        n_out = co * ho * wo
        if self.kind == "conv":
            # welems = kh*kw*(in_c/groups)*out_c, so flops = 2*welems*oh*ow
            return 2 * self.welems * ho * wo * batch
        if self.kind == "linear":
            return 2 * self.welems * batch
        if self.kind == "bn":
            return 2 * n_out * batch
        if self.kind in ("relu", "add"):
            return n_out * batch
        if self.kind == "avgpool":
            return n_out * self.kk * batch
        if self.kind == "gap":
            return co * (hi * wi) * batch  # one flop per pooled elem
        if self.kind == "flatten":
            return 0
        raise ValueError(self.kind)

    def act_bytes(self, batch):
        n_in = math.prod(self.in_shape) + self.extra_in
        n_out = math.prod(self.out_shape)
        return 4 * (n_in + n_out) * batch

    def weight_bytes(self, bits):
        if self.welems == 0:
            return self.belems * 4
        return (self.welems * bits + 7) // 8 + self.belems * 4


def conv(ci, hi, wi, co, k, s, p, residual_in=False):
    ho = (hi + 2 * p - k) // s + 1
    wo = (wi + 2 * p - k) // s + 1
    return L("conv", (ci, hi, wi), (co, ho, wo), welems=k * k * ci * co)


def bn(c, h, w):
    return L("bn", (c, h, w), (c, h, w))


def relu(c, h, w):
    return L("relu", (c, h, w), (c, h, w))


def add(c, h, w):
    return L("add", (c, h, w), (c, h, w), extra_in=c * h * w)


def resnet20_layers(widths, hw):
    """Stem conv + 3 stages x 3 blocks x 2 convs + GAP + flatten + linear.

    widths = (stem, s1, s2, s3). Stages 2 and 3 downsample in their first
    block. A block gets a residual Add only when its input and output shapes
    match (so transition blocks have none, and there are no projection
    shortcuts anywhere).
    """
    stem, s1, s2, s3 = widths
    h = w = hw
    layers = [conv(3, h, w, stem, 3, 1, 1), bn(stem, h, w), relu(stem, h, w)]
    c_in = stem
    for si, width in enumerate((s1, s2, s3)):
        for b in range(3):
            stride = 2 if (si > 0 and b == 0) else 1
            h2, w2 = h // stride, w // stride
            skip = (c_in == width and stride == 1)
            layers += [conv(c_in, h, w, width, 3, stride, 1), bn(width, h2, w2),
                       relu(width, h2, w2), conv(width, h2, w2, width, 3, 1, 1),
                       bn(width, h2, w2)]
            if skip:
                layers.append(add(width, h2, w2))
            layers.append(relu(width, h2, w2))
            c_in, h, w = width, h2, w2
    layers.append(L("gap", (c_in, h, w), (c_in, 1, 1)))
    layers.append(L("flatten", (c_in, 1, 1), (c_in,)))
    layers.append(L("linear", (c_in,), (10,), welems=c_in * 10, belems=10))
    return layers


def global_cost(layers, bits_for, batch=1):
    flops = sum(l.flops(batch) for l in layers)
    by = sum(l.act_bytes(batch) + l.weight_bytes(bits_for(l)) for l in layers)
    return flops, by


def report(name, layers, batch=1):
    n_q = sum(1 for l in layers if l.kind in ("conv", "linear"))
    f32 = global_cost(layers, lambda l: 32, batch)
    i8 = global_cost(layers, lambda l: 8, batch)
    i4 = global_cost(layers, lambda l: 4, batch)
    ai32, ai8, ai4 = (f / b for f, b in (f32, i8, i4))
    print(f"== {name} (batch {batch}) ==")
    print(f"  quantizable layers : {n_q}")
    print(f"  total weight elems : {sum(l.welems for l in layers)}")
    print(f"  global flops       : {f32[0]}")
    print(f"  bytes fp32/int8/int4: {f32[1]} {i8[1]} {i4[1]}")
    print(f"  AI fp32/int8/int4  : {ai32:.9g} {ai8:.9g} {ai4:.9g}")
    print(f"  AI ratio int8/fp32 : {ai8 / ai32:.9g}")
    print(f"  AI ratio int4/fp32 : {ai4 / ai32:.9g}")
    return layers


# Single-layer spot checks (frozen into test_cost_model.cpp)
def single_layer_checks():
    print("== single layer checks ==")
    lin = L("linear", (4,), (2,), welems=8, belems=2)
    print("  Linear(4->2) b=1 fp32: flops", lin.flops(1),
          "weight_bytes", lin.weight_bytes(32), "act_bytes", lin.act_bytes(1))
    print("  Linear(4->2) int4 weight_bytes:", lin.weight_bytes(4))
    c = conv(16, 32, 32, 32, 3, 2, 1)
    print("  Conv 3x3 s2 p1 16->32 @32x32: out", c.out_shape, "flops", c.flops(1))
    c2 = conv(3, 16, 16, 8, 3, 1, 1)
    print("  Conv 3x3 s1 p1 3->8 @16x16: welems", c2.welems,
          "flops", c2.flops(1), "act_bytes", c2.act_bytes(1),
          "wbytes fp32/int8/int4:", c2.weight_bytes(32), c2.weight_bytes(8),
          c2.weight_bytes(4))
    # odd element count -> int4 rounds up to whole bytes
    odd = L("conv", (3, 1, 1), (1, 1, 1), welems=27)
    print("  27-elem tensor int4 bytes:", odd.weight_bytes(4))


if __name__ == "__main__":
    single_layer_checks()
    r20 = report("resnet20 widths(16,16,32,64) @16x16", resnet20_layers((16, 16, 32, 64), 16))
    report("resnet20 @16x16", r20, batch=4)
    report("mini-resnet widths(8,8,16,32) @16x16", resnet20_layers((8, 8, 16, 32), 16))
