#!/usr/bin/env python3
"""Download the two UCI datasets used by the `iris` and `rice` presets.

Neither dataset is vendored with the package; this script fetches them and
writes per-group numeric CSVs that `otqq run --preset iris --y <file>` and
`otqq run --preset rice --y <file>` consume directly.

Sources (UCI Machine Learning Repository, https://archive.ics.uci.edu):
  * Iris: https://archive.ics.uci.edu/dataset/53/iris
    (classic file: iris.data, 150 rows, 4 numeric columns + species label)
  * Rice (Cammeo and Osmancik): https://archive.ics.uci.edu/dataset/545/
    (rice_cammeo_osmancik.arff; the Osmancik class has 2180 rows; the presets
    use Perimeter, Major Axis Length, Minor Axis Length, Convex Area, Extent)

Usage:
    python scripts/fetch_uci_datasets.py --out data/
"""

import argparse
import csv
import io
import sys
import urllib.request
import zipfile
from pathlib import Path

IRIS_URL = "https://archive.ics.uci.edu/static/public/53/iris.zip"
RICE_URL = "https://archive.ics.uci.edu/static/public/545/rice+cammeo+and+osmancik.zip"

RICE_COLUMNS = ["Perimeter", "Major_Axis_Length", "Minor_Axis_Length", "Convex_Area", "Extent"]


def fetch(url: str) -> bytes:
    print(f"downloading {url}")
    with urllib.request.urlopen(url) as response:
        return response.read()


def write_iris(archive: bytes, out: Path) -> None:
    with zipfile.ZipFile(io.BytesIO(archive)) as zf:
        raw = zf.read("iris.data").decode().strip().splitlines()
    groups: dict[str, list[list[str]]] = {}
    for line in raw:
        parts = line.split(",")
        if len(parts) != 5:
            continue
        groups.setdefault(parts[4], []).append(parts[:4])
    header = "sepal_length,sepal_width,petal_length,petal_width"
    for label, rows in groups.items():
        name = label.replace("Iris-", "iris_") + ".csv"
        path = out / name
        path.write_text("\n".join([header] + [",".join(r) for r in rows]) + "\n")
        print(f"wrote {path} ({len(rows)} rows x 4 columns)")


def write_rice(archive: bytes, out: Path) -> None:
    with zipfile.ZipFile(io.BytesIO(archive)) as zf:
        arff_name = next(n for n in zf.namelist() if n.lower().endswith(".arff"))
        lines = zf.read(arff_name).decode().splitlines()
    attrs: list[str] = []
    rows: list[list[str]] = []
    in_data = False
    for line in lines:
        token = line.strip()
        if not token:
            continue
        if token.lower().startswith("@attribute"):
            attrs.append(token.split()[1])
        elif token.lower().startswith("@data"):
            in_data = True
        elif in_data and not token.startswith("%"):
            rows.append(next(csv.reader([token])))
    keep = [attrs.index(c) for c in RICE_COLUMNS]
    label = attrs.index("Class")
    osmancik = [[r[k] for k in keep] for r in rows if r[label].strip() == "Osmancik"]
    path = out / "rice_osmancik.csv"
    path.write_text("\n".join([",".join(RICE_COLUMNS)] + [",".join(r) for r in osmancik]) + "\n")
    print(f"wrote {path} ({len(osmancik)} rows x {len(RICE_COLUMNS)} columns)")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data", help="output directory")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_iris(fetch(IRIS_URL), out)
    write_rice(fetch(RICE_URL), out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
