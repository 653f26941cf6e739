"""Write the 5000-image MNIST subset shipped inside the mlxtend wheel as gzipped IDX files.

    pip download --no-deps mlxtend -d /tmp/wheels
    python scripts/export_mnist_subset.py /tmp/wheels/mlxtend-*.whl data/

The subset holds 500 images per digit taken from the MNIST training set. The
wheel is only read as a zip archive; mlxtend itself is never imported.
"""

import argparse
import gzip
import io
import zipfile
from pathlib import Path

import numpy as np

from ldprobust.harness.datasets import write_mnist_idx

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("source", type=Path, help="mlxtend wheel, or the extracted mnist_5k.csv.gz")
    parser.add_argument("outdir", type=Path)
    args = parser.parse_args()

    if args.source.suffix == ".whl":
        raw = zipfile.ZipFile(args.source).read(MEMBER)
    else:
        raw = args.source.read_bytes()
    table = np.loadtxt(io.StringIO(gzip.decompress(raw).decode()), delimiter=",")
    # Columns: 784 pixel values, then the digit label.
    images = np.rint(table[:, :-1]).astype(np.uint8).reshape(-1, 28, 28)
    labels = table[:, -1].astype(np.uint8)

    args.outdir.mkdir(parents=True, exist_ok=True)
    img = args.outdir / "mnist5k-images-idx3-ubyte.gz"
    lab = args.outdir / "mnist5k-labels-idx1-ubyte.gz"
    write_mnist_idx(images, labels, img, lab)
    print(f"wrote {len(labels)} images to {img} and {lab}")


if __name__ == "__main__":
    main()
