#!/usr/bin/env python3
"""Convert the digit sample bundled in the `mnist` npm package into IDX files.

The npm package (https://www.npmjs.com/package/mnist) ships 10,000 MNIST
digits as JSON arrays of pixel intensities rounded to three decimals. Each
value is mapped back to its original byte with round(v * 255), shuffled with a
fixed seed and split into train/test IDX files (gzip-compressed).

    npm pack mnist && tar xzf mnist-1.1.0.tgz
    python3 tools/make_mnist_idx.py package/src/digits data/mnist
"""
import argparse
import gzip
import json
import pathlib
import struct

import numpy as np


def write_idx(path, magic, dims, payload):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">I", magic))
        for d in dims:
            f.write(struct.pack(">I", d))
        f.write(payload.tobytes())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("digits_dir")
    ap.add_argument("out_dir")
    ap.add_argument("--test", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=2021)
    args = ap.parse_args()

    images, labels = [], []
    for digit in range(10):
        raw = json.loads(pathlib.Path(args.digits_dir, f"{digit}.json").read_text())["data"]
        arr = np.rint(np.asarray(raw, dtype=np.float64) * 255.0).astype(np.uint8)
        arr = arr.reshape(-1, 28, 28)
        images.append(arr)
        labels.append(np.full(len(arr), digit, dtype=np.uint8))
    images = np.concatenate(images)
    labels = np.concatenate(labels)

    order = np.random.default_rng(args.seed).permutation(len(labels))
    images, labels = images[order], labels[order]
    n_test = args.test
    splits = {
        "train": (images[n_test:], labels[n_test:]),
        "t10k": (images[:n_test], labels[:n_test]),
    }
    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, (imgs, labs) in splits.items():
        write_idx(out / f"{name}-images-idx3-ubyte.gz", 2051, imgs.shape, imgs)
        write_idx(out / f"{name}-labels-idx1-ubyte.gz", 2049, labs.shape, labs)
        print(name, imgs.shape, np.bincount(labs, minlength=10).tolist())


if __name__ == "__main__":
    main()
