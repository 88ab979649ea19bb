#!/usr/bin/env python3
"""Fetches MovieLens-100K into data/ml-100k/.

Writes u.data (user<TAB>item<TAB>rating<TAB>timestamp, the original layout)
and u.item.tsv (item<TAB>title). Tries grouplens first, then falls back to
the copy bundled in the recbole wheel from the package index.
"""
import io
import os
import subprocess
import sys
import tempfile
import urllib.request
import zipfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
OUT = os.path.join(ROOT, "data", "ml-100k")
URL = "https://files.grouplens.org/datasets/movielens/ml-100k.zip"


def from_grouplens():
    with urllib.request.urlopen(URL, timeout=20) as resp:
        z = zipfile.ZipFile(io.BytesIO(resp.read()))
    ratings = z.read("ml-100k/u.data").decode("latin-1")
    titles = []
    for line in z.read("ml-100k/u.item").decode("latin-1").splitlines():
        fields = line.split("|")
        if len(fields) > 1:
            titles.append(f"{fields[0]}\t{fields[1]}")
    return ratings, "\n".join(titles) + "\n"


def from_recbole():
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps",
                        "-q", "recbole==1.2.1", "-d", tmp], check=True)
        wheel = [f for f in os.listdir(tmp) if f.endswith(".whl")][0]
        z = zipfile.ZipFile(os.path.join(tmp, wheel))
        base = "recbole/dataset_example/ml-100k/ml-100k"
        inter = z.read(base + ".inter").decode("latin-1").splitlines()[1:]
        item = z.read(base + ".item").decode("latin-1").splitlines()[1:]
    ratings = "\n".join(inter) + "\n"
    titles = []
    for line in item:
        fields = line.split("\t")
        if len(fields) > 1:
            titles.append(f"{fields[0]}\t{fields[1]}")
    return ratings, "\n".join(titles) + "\n"


def main():
    os.makedirs(OUT, exist_ok=True)
    try:
        ratings, titles = from_grouplens()
    except Exception as err:  # noqa: BLE001
        print(f"grouplens unavailable ({err}); using recbole wheel copy")
        ratings, titles = from_recbole()
    with open(os.path.join(OUT, "u.data"), "w", encoding="utf-8") as f:
        f.write(ratings)
    with open(os.path.join(OUT, "u.item.tsv"), "w", encoding="utf-8") as f:
        f.write(titles)
    print(f"wrote {OUT}: {ratings.count(chr(10))} interactions")


if __name__ == "__main__":
    main()
