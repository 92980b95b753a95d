#!/usr/bin/env python3
"""Download the UCI combined cycle power plant data and write data/ccpp.csv.

Needs pandas and openpyxl. The first sheet of the workbook is used; the
output has the header AT,V,AP,RH,PE and 9568 rows.
"""

import argparse
import io
import sys
import urllib.request
import zipfile
from pathlib import Path

import pandas as pd

URL = "https://archive.ics.uci.edu/static/public/294/combined+cycle+power+plant.zip"
COLUMNS = ["AT", "V", "AP", "RH", "PE"]
ROWS = 9568


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("data/ccpp.csv"))
    parser.add_argument("--url", default=URL)
    args = parser.parse_args()

    with urllib.request.urlopen(args.url) as resp:
        archive = zipfile.ZipFile(io.BytesIO(resp.read()))
    book = next((n for n in archive.namelist() if n.endswith(".xlsx")), None)
    if book is None:
        print(f"no .xlsx workbook in {args.url}", file=sys.stderr)
        return 1
    frame = pd.read_excel(io.BytesIO(archive.read(book)), sheet_name=0)

    if list(frame.columns) != COLUMNS:
        print(f"unexpected header {list(frame.columns)}, wanted {COLUMNS}", file=sys.stderr)
        return 1
    if len(frame) != ROWS:
        print(f"expected {ROWS} rows, found {len(frame)}", file=sys.stderr)
        return 1
    if frame.isna().any().any():
        print("workbook has empty cells", file=sys.stderr)
        return 1

    args.out.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(args.out, index=False)
    print(f"wrote {len(frame)} rows to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
