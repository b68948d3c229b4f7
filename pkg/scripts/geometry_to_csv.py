"""Flatten a geometry export into polygon rows for any plotting tool.

Each output row is: class name, cell index, vertex index, x, y.  Closing a
polygon (repeating vertex 0) is left to the plotting side.

    finbisim export-geometry out/fub.json > geom.json
    python scripts/geometry_to_csv.py geom.json > cells.csv
"""
import csv
import json
import sys


def main(path):
    with open(path, encoding="utf-8") as fh:
        geom = json.load(fh)
    if geom.get("format") != "finbisim-geometry/1":
        sys.exit(f"{path}: not a finbisim-geometry/1 file")
    out = csv.writer(sys.stdout)
    out.writerow(["class", "cell", "vertex", "x", "y"])
    for cls in geom["classes"]:
        for i, cell in enumerate(cls["cells"]):
            for v, (x, y) in enumerate(cell.get("vertices", [])):
                out.writerow([cls["name"], i, v, repr(x), repr(y)])


if __name__ == "__main__":
    if len(sys.argv) != 2:
        sys.exit(__doc__)
    main(sys.argv[1])
