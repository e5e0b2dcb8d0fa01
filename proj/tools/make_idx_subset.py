#!/usr/bin/env python3
"""Build small gzipped IDX image/label files from the JSON digit dumps shipped
in the `mnist` and `fashion-mnist` npm packages.

    npm pack mnist && tar xzf mnist-*.tgz
    tools/make_idx_subset.py --src package/src/digits --classes 1,3,5 \
        --per-class 500 --scale 255 --out tests/data/mnist-135

Samples are taken in file order and interleaved round-robin across classes.
"""
import argparse
import gzip
import json
import os
import struct


def load_class(path, scale):
    with open(path) as fh:
        data = json.load(fh)["data"]
    if data and isinstance(data[0], list):
        rows = data
    else:
        rows = [data[i:i + 784] for i in range(0, len(data), 784)]
    out = []
    for row in rows:
        out.append(bytes(min(255, max(0, int(round(v * scale)))) for v in row))
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--src", required=True)
    ap.add_argument("--classes", required=True)
    ap.add_argument("--per-class", type=int, required=True)
    ap.add_argument("--scale", type=float, default=1.0,
                    help="multiplier applied to stored values (255 for [0,1] floats)")
    ap.add_argument("--out", required=True, help="output prefix")
    args = ap.parse_args()

    classes = [int(c) for c in args.classes.split(",")]
    per_class = {}
    for c in classes:
        imgs = load_class(os.path.join(args.src, f"{c}.json"), args.scale)
        if len(imgs) < args.per_class:
            raise SystemExit(f"class {c}: only {len(imgs)} samples")
        per_class[c] = imgs[:args.per_class]

    images, labels = [], []
    for i in range(args.per_class):
        for c in classes:
            images.append(per_class[c][i])
            labels.append(c)

    n = len(images)
    with gzip.GzipFile(args.out + "-images-idx3-ubyte.gz", "wb", mtime=0) as fh:
        fh.write(struct.pack(">IIII", 0x00000803, n, 28, 28))
        for img in images:
            fh.write(img)
    with gzip.GzipFile(args.out + "-labels-idx1-ubyte.gz", "wb", mtime=0) as fh:
        fh.write(struct.pack(">II", 0x00000801, n))
        fh.write(bytes(labels))


if __name__ == "__main__":
    main()
