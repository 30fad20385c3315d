#!/usr/bin/env python3
"""Reference implementation of the aiq model formats and forward pass.

Pure numpy, float32. Used to produce golden logits for the C++ engine
tests and as the import/export bridge for the training script:

    python3 scripts/aiq_ref.py golden --model m.json --weights m.aiqw \
        --data eval.aiqd --count 8 --out golden.f32
"""

import argparse
import json
import struct

import numpy as np

ALIGN = 64


# ---------- containers ----------

def read_aiqw(path):
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != b"AIQW":
        raise ValueError("not an AIQW container")
    (hlen,) = struct.unpack_from("<I", blob, 4)
    header = json.loads(blob[8:8 + hlen].decode("utf-8"))
    tensors = {}
    for tid, entry in header.items():
        off = entry["offset"]
        shape = entry["shape"]
        n = int(np.prod(shape)) if shape else 0
        dtype = entry["dtype"]
        if dtype == "f32":
            arr = np.frombuffer(blob, dtype="<f4", count=n, offset=off).reshape(shape).copy()
        elif dtype == "i8":
            codes = np.frombuffer(blob, dtype=np.int8, count=n, offset=off)
            arr = codes.astype(np.float32).reshape(shape) * np.float32(entry["scale"])
        elif dtype == "i4p":
            nbytes = (n + 1) // 2
            raw = np.frombuffer(blob, dtype=np.uint8, count=nbytes, offset=off)
            lo = (raw & 0x0F).astype(np.int8)
            hi = (raw >> 4).astype(np.int8)
            lo = ((lo ^ 8) - 8).astype(np.int8)
            hi = ((hi ^ 8) - 8).astype(np.int8)
            codes = np.empty(nbytes * 2, dtype=np.int8)
            codes[0::2] = lo
            codes[1::2] = hi
            arr = codes[:n].astype(np.float32).reshape(shape) * np.float32(entry["scale"])
        else:
            raise ValueError(f"unknown dtype {dtype}")
        tensors[tid] = arr
    return tensors


def write_aiqw(path, tensors):
    """tensors: dict id -> float32 ndarray."""
    ids = sorted(tensors)

    def layout(base):
        header = {}
        pos = base
        for tid in ids:
            pos = (pos + ALIGN - 1) // ALIGN * ALIGN
            arr = tensors[tid]
            header[tid] = {"dtype": "f32", "offset": pos, "shape": list(arr.shape)}
            pos += arr.size * 4
        return header

    base = 8
    for _ in range(64):
        header = layout(base)
        text = json.dumps(header, sort_keys=True, separators=(",", ":"))
        nxt = 8 + len(text.encode())
        if nxt == base:
            break
        base = nxt
    with open(path, "wb") as f:
        f.write(b"AIQW")
        f.write(struct.pack("<I", len(text.encode())))
        f.write(text.encode())
        pos = 8 + len(text.encode())
        for tid in ids:
            aligned = (pos + ALIGN - 1) // ALIGN * ALIGN
            f.write(b"\x00" * (aligned - pos))
            data = np.ascontiguousarray(tensors[tid], dtype="<f4").tobytes()
            f.write(data)
            pos = aligned + len(data)


def read_aiqd(path):
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != b"AIQD":
        raise ValueError("not an AIQD dataset")
    n, c, h, w = struct.unpack_from("<IIII", blob, 4)
    images = np.frombuffer(blob, dtype="<f4", count=n * c * h * w, offset=20).reshape(n, c, h, w)
    labels = np.frombuffer(blob, dtype="<u2", count=n, offset=20 + images.nbytes)
    return images.copy(), labels.copy()


# ---------- forward pass ----------

def conv2d(x, w, stride, pad):
    # x: (C, H, W), w: (K, C, kh, kw); cross-correlation with zero padding
    c, h, ww = x.shape
    k, _, kh, kw = w.shape
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (ww + 2 * pad - kw) // stride + 1
    xp = np.zeros((c, h + 2 * pad, ww + 2 * pad), dtype=np.float32)
    xp[:, pad:pad + h, pad:pad + ww] = x
    out = np.zeros((k, oh, ow), dtype=np.float32)
    for oy in range(oh):
        for ox in range(ow):
            patch = xp[:, oy * stride:oy * stride + kh, ox * stride:ox * stride + kw]
            out[:, oy, ox] = np.tensordot(w, patch, axes=([1, 2, 3], [0, 1, 2]))
    return out


def forward(manifest, tensors, image):
    x = image.astype(np.float32)
    outputs = []
    for layer in manifest["layers"]:
        kind = layer["kind"]
        p = layer.get("params", {})
        w = tensors.get(layer["weight"]) if layer.get("weight") else None
        b = tensors.get(layer["bias"]) if layer.get("bias") else None
        if kind == "conv2d":
            x = conv2d(x, w, p["stride"], p["padding"])
            if b is not None:
                x = x + b[:, None, None]
        elif kind == "linear":
            x = w.astype(np.float32) @ x
            if b is not None:
                x = x + b
        elif kind == "batchnorm2d":
            gamma, beta, mean, var = w
            a = gamma / np.sqrt(var + np.float32(1e-5))
            x = x * a[:, None, None] + (beta - mean * a)[:, None, None]
        elif kind == "relu":
            x = np.maximum(x, np.float32(0))
        elif kind == "avgpool2d":
            k, s = p["kernel"], p["stride"]
            c, h, ww = x.shape
            oh, ow = (h - k) // s + 1, (ww - k) // s + 1
            out = np.zeros((c, oh, ow), dtype=np.float32)
            for oy in range(oh):
                for ox in range(ow):
                    out[:, oy, ox] = x[:, oy * s:oy * s + k, ox * s:ox * s + k].mean(axis=(1, 2))
            x = out
        elif kind == "globalavgpool":
            x = x.mean(axis=(1, 2), dtype=np.float32)[:, None, None]
        elif kind == "add":
            src = layer["residual_from"]
            idx = [l["id"] for l in manifest["layers"]].index(src)
            x = x + outputs[idx]
        elif kind == "flatten":
            x = x.reshape(-1)
        else:
            raise ValueError(f"unknown kind {kind}")
        x = x.astype(np.float32)
        outputs.append(x)
    return x


def cmd_golden(args):
    manifest = json.load(open(args.model))
    tensors = read_aiqw(args.weights)
    images, labels = read_aiqd(args.data)
    logits = np.stack([forward(manifest, tensors, images[i]) for i in range(args.count)])
    logits.astype("<f4").tofile(args.out)
    preds = logits.argmax(axis=1)
    print(f"wrote {args.out}: {logits.shape}, labels {labels[:args.count].tolist()}, "
          f"preds {preds.tolist()}")


def cmd_accuracy(args):
    manifest = json.load(open(args.model))
    tensors = read_aiqw(args.weights)
    images, labels = read_aiqd(args.data)
    n = len(labels) if args.count == 0 else min(args.count, len(labels))
    correct = 0
    for i in range(n):
        logits = forward(manifest, tensors, images[i])
        correct += int(np.argmax(logits) == labels[i])
    print(f"accuracy {correct}/{n} = {correct / n:.4f}")


def main():
    ap = argparse.ArgumentParser()
    sub = ap.add_subparsers(dest="cmd", required=True)
    g = sub.add_parser("golden")
    g.add_argument("--model", required=True)
    g.add_argument("--weights", required=True)
    g.add_argument("--data", required=True)
    g.add_argument("--count", type=int, default=8)
    g.add_argument("--out", required=True)
    g.set_defaults(fn=cmd_golden)
    a = sub.add_parser("accuracy")
    a.add_argument("--model", required=True)
    a.add_argument("--weights", required=True)
    a.add_argument("--data", required=True)
    a.add_argument("--count", type=int, default=0)
    a.set_defaults(fn=cmd_accuracy)
    args = ap.parse_args()
    args.fn(args)


if __name__ == "__main__":
    main()
