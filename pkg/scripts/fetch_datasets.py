#!/usr/bin/env python3
"""Fetch Auto MPG and Cleveland Heart Disease into ``data/`` as headed CSVs.

Tries the UCI repository first.  Without direct web access it falls back to
copies shipped inside two PyPI wheels (``vega_datasets`` for Auto MPG,
``Orange3`` for Heart Disease), fetched with ``pip download``.

Output columns use the UCI attribute names, with ``?`` for missing cells:

    data/auto-mpg.csv       mpg,cylinders,...,origin,car_name   (398 rows)
    data/heart-disease.csv  age,sex,cp,...,thal,num             (303 rows)

Usage: python scripts/fetch_datasets.py [--out data] [--source auto|uci|pypi]
"""
import argparse
import csv
import glob
import json
import subprocess
import sys
import tempfile
import urllib.request
import zipfile
from pathlib import Path

UCI_MPG = "https://archive.ics.uci.edu/ml/machine-learning-databases/auto-mpg/auto-mpg.data"
UCI_HEART = "https://archive.ics.uci.edu/ml/machine-learning-databases/heart-disease/processed.cleveland.data"

MPG_COLS = ["mpg", "cylinders", "displacement", "horsepower", "weight", "acceleration",
            "model_year", "origin", "car_name"]
HEART_COLS = ["age", "sex", "cp", "trestbps", "chol", "fbs", "restecg", "thalach", "exang",
              "oldpeak", "slope", "ca", "thal", "num"]


def _write(path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    print(f"wrote {path} ({len(rows)} rows)")


def _get(url):
    with urllib.request.urlopen(url, timeout=20) as r:
        return r.read().decode("utf-8")


def uci_mpg():
    rows = []
    for line in _get(UCI_MPG).splitlines():
        if not line.strip():
            continue
        nums, name = line.split("\t")
        rows.append(nums.split() + [name.strip().strip('"')])
    return rows


def uci_heart():
    return [line.split(",") for line in _get(UCI_HEART).splitlines() if line.strip()]


def _wheel(pkg, workdir):
    subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps", "-q", "-d", workdir, pkg],
                   check=True)
    return zipfile.ZipFile(glob.glob(f"{workdir}/*.whl")[0])


def pypi_mpg(workdir):
    z = _wheel("vega_datasets==0.9.0", workdir)
    cars = json.loads(z.read("vega_datasets/_data/cars.json"))
    origin = {"USA": 1, "Europe": 2, "Japan": 3}
    rows = []
    for c in cars:
        # the vega copy also carries the 8 cars without an MPG value
        if c["Miles_per_Gallon"] is None:
            continue
        hp = "?" if c["Horsepower"] is None else c["Horsepower"]
        rows.append([c["Miles_per_Gallon"], c["Cylinders"], c["Displacement"], hp, c["Weight_in_lbs"],
                     c["Acceleration"], int(c["Year"][2:4]), origin[c["Origin"]], c["Name"]])
    return rows


def pypi_heart(workdir):
    z = _wheel("orange3==3.39.0", workdir)
    lines = z.read("Orange/datasets/heart_disease.tab").decode("utf-8").splitlines()[3:]
    maps = {
        1: {"male": 1, "female": 0},
        2: {"typical ang": 1, "atypical ang": 2, "non-anginal": 3, "asymptomatic": 4},
        6: {"normal": 0, "ST-T abnormal": 1, "left vent hypertrophy": 2},
        10: {"upsloping": 1, "flat": 2, "downsloping": 3},
        12: {"normal": 3, "fixed defect": 6, "reversable defect": 7},
    }
    rows = []
    for line in lines:
        cells = [c.strip() for c in line.split("\t")]
        out = []
        for i, c in enumerate(cells):
            if c in ("", "?"):
                out.append("?")
            elif i in maps:
                out.append(maps[i][c])
            else:
                out.append(c)
        rows.append(out)
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="data")
    ap.add_argument("--source", choices=("auto", "uci", "pypi"), default="auto")
    args = ap.parse_args(argv)
    out = Path(args.out)
    mpg = heart = None
    if args.source in ("auto", "uci"):
        try:
            mpg, heart = uci_mpg(), uci_heart()
        except OSError as exc:
            if args.source == "uci":
                raise
            print(f"UCI unreachable ({exc}); falling back to PyPI wheels")
    if mpg is None:
        with tempfile.TemporaryDirectory() as a, tempfile.TemporaryDirectory() as b:
            mpg, heart = pypi_mpg(a), pypi_heart(b)
    _write(out / "auto-mpg.csv", MPG_COLS, mpg)
    _write(out / "heart-disease.csv", HEART_COLS, heart)


if __name__ == "__main__":
    main()
