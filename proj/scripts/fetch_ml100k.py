#!/usr/bin/env python3
"""Materialize MovieLens-100k u.data at data/ml-100k/u.data.

Tries the GroupLens archive first, then falls back to the copy bundled in the
pytorch-widedeep wheel (same rows, same order as the original u.data).
"""
import io
import os
import subprocess
import sys
import tempfile
import urllib.request
import zipfile

GROUPLENS = "https://files.grouplens.org/datasets/movielens/ml-100k.zip"
WHEEL_MEMBER = "pytorch_widedeep/datasets/data/MovieLens100k_data.parquet.brotli"


def from_grouplens():
    with urllib.request.urlopen(GROUPLENS, timeout=20) as resp:
        archive = zipfile.ZipFile(io.BytesIO(resp.read()))
    return archive.read("ml-100k/u.data").decode()


def from_wheel():
    import pandas as pd

    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "--no-deps", "-q",
             "pytorch-widedeep==1.7.0", "-d", tmp],
            check=True)
        wheel = next(f for f in os.listdir(tmp) if f.endswith(".whl"))
        raw = zipfile.ZipFile(os.path.join(tmp, wheel)).read(WHEEL_MEMBER)
    df = pd.read_parquet(io.BytesIO(raw))
    cols = ["user_id", "movie_id", "rating", "timestamp"]
    return "".join("\t".join(str(v) for v in row) + "\n"
                   for row in df[cols].itertuples(index=False))


def main():
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    out = os.path.join(root, "data", "ml-100k", "u.data")
    if os.path.exists(out):
        print(out)
        return
    try:
        text = from_grouplens()
    except Exception as exc:  # noqa: BLE001
        print(f"grouplens download failed ({exc}); using wheel copy",
              file=sys.stderr)
        text = from_wheel()
    os.makedirs(os.path.dirname(out), exist_ok=True)
    with open(out, "w") as fh:
        fh.write(text)
    print(out)


if __name__ == "__main__":
    main()
