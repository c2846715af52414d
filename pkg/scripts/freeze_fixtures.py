"""Record frozen inequality budgets (max ratio x 1.5) for every harness.

Refuses to overwrite anything unless --freeze is passed.

    python scripts/freeze_fixtures.py --freeze [--only hardy prod1]
"""

import argparse
import time

from dirac_hartree import harnesses


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--freeze", action="store_true", help="actually write the fixture files")
    ap.add_argument("--only", nargs="*", default=None)
    ap.add_argument("--dir", default=str(harnesses.FIXTURE_DIR))
    args = ap.parse_args()
    for name in args.only or harnesses.HARNESS_NAMES:
        t0 = time.perf_counter()
        report = harnesses.run_harness(name)
        line = f"{name:20s} max ratio {report.max_ratio:.6g}  ({time.perf_counter() - t0:.1f}s)"
        if args.freeze:
            fx = harnesses.freeze_fixture(report, args.dir, allow=True)
            line += f"  -> budget {fx['budget']:.6g}"
        print(line, flush=True)
    if not args.freeze:
        print("dry run; pass --freeze to record budgets")


if __name__ == "__main__":
    main()
