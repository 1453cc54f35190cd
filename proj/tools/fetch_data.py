#!/usr/bin/env python3
"""Stage the datasets used by the acceptance suite into ./data.

MovieLens 100K and a 5k MNIST subset are pulled out of PyPI wheels that
bundle them (recbole, mlxtend); Diabetes comes from scikit-learn.
"""
import argparse
import gzip
import io
import pathlib
import struct
import subprocess
import sys
import tempfile
import zipfile


def fetch_wheel(name, dest):
    subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps",
                    "-q", name, "-d", str(dest)], check=True)
    return next(pathlib.Path(dest).glob("*.whl"))


def movielens(out):
    with tempfile.TemporaryDirectory() as tmp:
        whl = zipfile.ZipFile(fetch_wheel("recbole==1.2.1", tmp))
        lines = whl.read("recbole/dataset_example/ml-100k/ml-100k.inter").decode().splitlines()
    target = out / "ml-100k" / "u.data"
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text("".join(l + "\n" for l in lines[1:]))
    print(f"{target}: {len(lines) - 1} ratings")


def mnist(out):
    import numpy as np
    with tempfile.TemporaryDirectory() as tmp:
        whl = zipfile.ZipFile(fetch_wheel("mlxtend==0.24.0", tmp))
        raw = gzip.decompress(whl.read("mlxtend/data/data/mnist_5k.csv.gz")).decode()
    pixels = np.loadtxt(io.StringIO(raw), delimiter=",")[:, 1:].astype(np.uint8)
    target = out / "mnist" / "mnist5k-images-idx3-ubyte"
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "wb") as f:
        f.write(struct.pack(">IIII", 0x803, pixels.shape[0], 28, 28))
        f.write(pixels.tobytes())
    print(f"{target}: {pixels.shape[0]} images")


def diabetes(out):
    from sklearn.datasets import load_diabetes
    target = out / "tabular" / "diabetes.csv"
    target.parent.mkdir(parents=True, exist_ok=True)
    load_diabetes(as_frame=True, scaled=False).frame.to_csv(target, index=False)
    print(f"{target}")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data"))
    args = parser.parse_args()
    out = pathlib.Path(args.out)
    movielens(out)
    mnist(out)
    diabetes(out)


if __name__ == "__main__":
    main()
