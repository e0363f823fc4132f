#!/usr/bin/env python3
"""Write MNIST digits from a CSV (784 pixel columns + label) as IDX files.

The default source is the 5000-image MNIST subset shipped inside the
`mlxtend` wheel (mlxtend/data/data/mnist_5k.csv.gz). Any CSV with the same
layout works, e.g. a full export of the 60k training set.

    python3 scripts/make_mnist_idx.py [--csv PATH] [--out data/mnist]
"""
import argparse
import gzip
import os
import struct


def locate_mlxtend_csv():
    try:
        import mlxtend  # noqa: F401
    except ImportError as exc:
        raise SystemExit("mlxtend not installed; pass --csv or `pip install mlxtend`") from exc
    import mlxtend.data
    return os.path.join(os.path.dirname(mlxtend.data.__file__), "data", "mnist_5k.csv.gz")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--csv", default=None)
    ap.add_argument("--out", default="data/mnist")
    ap.add_argument("--prefix", default="mnist5k")
    args = ap.parse_args()

    path = args.csv or locate_mlxtend_csv()
    opener = gzip.open if path.endswith(".gz") else open
    images, labels = bytearray(), bytearray()
    count = 0
    with opener(path, "rt") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            vals = [int(float(v)) for v in line.split(",")]
            if len(vals) != 785:
                raise SystemExit(f"row {count + 1}: expected 785 columns, got {len(vals)}")
            images.extend(bytes(vals[:784]))
            labels.append(vals[784])
            count += 1

    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, f"{args.prefix}-images-idx3-ubyte"), "wb") as fh:
        fh.write(struct.pack(">IIII", 2051, count, 28, 28))
        fh.write(images)
    with open(os.path.join(args.out, f"{args.prefix}-labels-idx1-ubyte"), "wb") as fh:
        fh.write(struct.pack(">II", 2049, count))
        fh.write(labels)
    print(f"wrote {count} images to {args.out}")


if __name__ == "__main__":
    main()
