#!/usr/bin/env python3
"""Print both published-table replays and their summary checks."""

import argparse

from clbwtune import fixtures, report
from clbwtune.analysis import penalty_matrix, select_best_average


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--json", action="store_true", help="best-average replay as JSON")
    args = ap.parse_args(argv)

    pm = penalty_matrix(fixtures.copy_matrix_records())
    print(report.penalty_table(pm, fixtures.LONG_NAMES, fixtures.COPY_MATRIX_TAG))
    gpus = ["HD 5850", "W9000", "GTX 285", "K20m"]
    gaps = [pm.penalty(o, t) * 100 for t in gpus for o in gpus if o != t]
    print(f"GPU cross-device copy penalties: {min(gaps):.1f} .. {max(gaps):.1f} points\n")

    best = {d: select_best_average(p) for d, p in fixtures.best_average_records().items()}
    if args.json:
        print(report.best_average_json(best))
    else:
        print(report.best_average_table(best, fixtures.BEST_AVERAGE_TAG))
    print(f"fixture checksum {fixtures.checksum()}")


if __name__ == "__main__":
    main()
