"""Sweep one suite over families x sizes x strengths and print a v/us/to table.

    python3 scripts/run_bench.py --suite trend --out runs/trend.csv
"""

import argparse
import tempfile
from collections import defaultdict
from pathlib import Path

from kernelverify.bench import BenchmarkManifest, format_csv, run_bench
from kernelverify.fixtures import SUITES, write_suite
from kernelverify.verifier import VerifierConfig


def print_table(rows):
    """One line per (family, size); one v/us/to triple per strength."""
    grouped = defaultdict(dict)
    strengths = sorted({r.strength for r in rows})
    for r in rows:
        grouped[r.family, r.size][r.strength] = r
    print(f"{'family':<18}{'size':>5}  " + "".join(f"{s:>12g}" for s in strengths))
    for (family, size), cells in sorted(grouped.items()):
        triples = "".join(f"{f'{c.verified}/{c.unsafe}/{c.timeout}':>12}" for c in (cells[s] for s in strengths))
        print(f"{family:<18}{size:>5}  {triples}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--suite", choices=SUITES, default="trend")
    parser.add_argument("--method", choices=("param", "baseline"), default="param")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--timeout", type=float, default=60.0)
    parser.add_argument("--fixtures", type=Path, help="fixture directory (default: temporary)")
    parser.add_argument("--out", type=Path, help="CSV output path")
    args = parser.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        root = args.fixtures or Path(tmp)
        manifest = BenchmarkManifest.load(write_suite(root, args.suite, args.method, args.timeout))
        rows, _ = run_bench(manifest, VerifierConfig(workers=args.workers))
    print_table(rows)
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(format_csv(rows))
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
