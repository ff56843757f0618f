"""Collect every out/*/results.csv into one table on stdout."""
import csv
import sys
from pathlib import Path


def main(root: str = "out") -> int:
    rows = []
    for path in sorted(Path(root).glob("*/results.csv")):
        with path.open() as fh:
            for r in csv.DictReader(fh):
                rows.append((path.parent.name, r["check"], r["value"], r["oracle"], r["verdict"]))
    if not rows:
        print(f"no results under {root}/", file=sys.stderr)
        return 1
    w = [max(len(r[i]) for r in rows) for i in range(5)]
    for r in rows:
        print("  ".join(c.ljust(n) for c, n in zip(r, w)))
    return 0


if __name__ == "__main__":
    sys.exit(main(*sys.argv[1:]))
