#!/usr/bin/env python3
"""Write a 5000-image MNIST subset as IDX files.

The source is the `mnist_5k.csv.gz` table shipped inside the mlxtend wheel
(500 images per digit drawn from the official MNIST training set, pixel
values 0..255 followed by the label). The output uses the same big-endian
IDX layout as the official distribution, so the regular loader reads it.

    pip download --no-deps mlxtend -d /tmp/mlx
    python3 tools/make_mnist_subset.py /tmp/mlx/mlxtend-*.whl data/mnist
"""

import gzip
import io
import os
import struct
import sys
import zipfile

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def read_rows(source):
    if source.endswith(".whl"):
        with zipfile.ZipFile(source) as whl:
            raw = whl.read(MEMBER)
    else:
        with open(source, "rb") as fh:
            raw = fh.read()
    text = gzip.decompress(raw).decode("ascii")
    rows = []
    for line in io.StringIO(text):
        line = line.strip()
        if not line:
            continue
        values = [int(float(v)) for v in line.split(",")]
        if len(values) != 785:
            raise ValueError(f"expected 785 columns, got {len(values)}")
        rows.append(values)
    return rows


def main(argv):
    if len(argv) != 3:
        print(__doc__)
        return 2
    rows = read_rows(argv[1])
    os.makedirs(argv[2], exist_ok=True)
    images = os.path.join(argv[2], "mnist5k-images-idx3-ubyte")
    labels = os.path.join(argv[2], "mnist5k-labels-idx1-ubyte")
    with open(images, "wb") as fh:
        fh.write(struct.pack(">IIII", 0x803, len(rows), 28, 28))
        for r in rows:
            fh.write(bytes(r[:784]))
    with open(labels, "wb") as fh:
        fh.write(struct.pack(">II", 0x801, len(rows)))
        fh.write(bytes(r[784] for r in rows))
    print(f"wrote {len(rows)} images to {images} and {labels}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
