#!/usr/bin/env python3
"""Convert the digit JSON bundled in the npm `mnist` package into IDX files.

The package ships 10,000 MNIST digits grouped by class as floats in [0,1]
(byte/255 rounded to three decimals). We recover the bytes, interleave the
classes with a fixed-seed shuffle and write gzipped IDX image/label files.

    npm pack mnist && tar xzf mnist-*.tgz
    python3 tools/mnist_from_npm.py package/src/digits data/mnist
"""
import gzip
import json
import os
import random
import struct
import sys


def main(src, dst):
    samples = []
    for digit in range(10):
        with open(os.path.join(src, f"{digit}.json")) as fh:
            flat = json.load(fh)["data"]
        assert len(flat) % 784 == 0
        for i in range(0, len(flat), 784):
            pixels = bytes(int(round(v * 255)) for v in flat[i : i + 784])
            samples.append((pixels, digit))
    random.Random(0).shuffle(samples)

    os.makedirs(dst, exist_ok=True)
    n = len(samples)
    with gzip.GzipFile(os.path.join(dst, "mnist10k-images-idx3-ubyte.gz"), "wb", mtime=0) as fh:
        fh.write(struct.pack(">IIII", 0x803, n, 28, 28))
        for pixels, _ in samples:
            fh.write(pixels)
    with gzip.GzipFile(os.path.join(dst, "mnist10k-labels-idx1-ubyte.gz"), "wb", mtime=0) as fh:
        fh.write(struct.pack(">II", 0x801, n))
        fh.write(bytes(label for _, label in samples))
    print(f"wrote {n} samples to {dst}")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
