"""Run the acceptance criteria and write one JSON report per criterion.

    python3 scripts/run_criteria.py --seed 0 --out reports/ [numbers ...]
"""

import argparse
import json
import sys
from pathlib import Path

from renorm.checks import CRITERIA, run_criterion


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("numbers", nargs="*", type=int, default=sorted(CRITERIA))
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=Path)
    args = parser.parse_args()

    failed = 0
    for k in args.numbers:
        result = run_criterion(k, args.seed)
        print(result.line())
        failed += not result.passed
        if args.out:
            args.out.mkdir(parents=True, exist_ok=True)
            report = result.to_dict()
            report.pop("elapsed")
            (args.out / f"criterion_{k:02d}.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
