#!/usr/bin/env python3
"""Fetch the benchmark datasets into data/ as plain CSV files.

The files are extracted from published Python wheels so that only a package
index is needed:

  * ISLP            -> Carseats, College, Hitters, Wage
  * mlxtend         -> Boston (13-feature version, includes `black`)
  * pytorch-widedeep -> California housing (20,640 x 8)

Usage: python3 scripts/fetch_data.py [--out data]
"""
import argparse
import csv
import glob
import io
import os
import subprocess
import sys
import tempfile
import zipfile

BOSTON_HEADER = [
    "crim", "zn", "indus", "chas", "nox", "rm", "age", "dis",
    "rad", "tax", "ptratio", "black", "lstat", "medv",
]


def download(package, dest):
    subprocess.check_call(
        [sys.executable, "-m", "pip", "download", package, "--no-deps",
         "--timeout", "120", "-d", dest],
        stdout=subprocess.DEVNULL,
    )
    wheels = glob.glob(os.path.join(dest, "*.whl"))
    if len(wheels) != 1:
        raise RuntimeError(f"expected one wheel for {package}, got {wheels}")
    return zipfile.ZipFile(wheels[0])


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data"))
    args = parser.parse_args()
    os.makedirs(args.out, exist_ok=True)

    with tempfile.TemporaryDirectory() as tmp:
        islp = download("ISLP", os.path.join(tmp, "islp"))
        for name in ["Carseats", "College", "Hitters", "Wage"]:
            data = islp.read(f"ISLP/data/{name}.csv")
            with open(os.path.join(args.out, f"{name.lower()}.csv"), "wb") as f:
                f.write(data)

        mlx = download("mlxtend", os.path.join(tmp, "mlxtend"))
        raw = mlx.read("mlxtend/data/data/boston_housing.csv").decode()
        with open(os.path.join(args.out, "boston.csv"), "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(BOSTON_HEADER)
            for row in csv.reader(io.StringIO(raw)):
                if row:
                    w.writerow([repr(float(v)) for v in row])

        import pandas as pd

        wd = download("pytorch-widedeep", os.path.join(tmp, "widedeep"))
        member = "pytorch_widedeep/datasets/data/california_housing.parquet.brotli"
        path = os.path.join(tmp, "california.parquet")
        with open(path, "wb") as f:
            f.write(wd.read(member))
        pd.read_parquet(path).to_csv(
            os.path.join(args.out, "california.csv"), index=False
        )


if __name__ == "__main__":
    main()
