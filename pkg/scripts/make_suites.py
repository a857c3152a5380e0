"""Write every fixture suite plus its param/baseline manifests.

    python3 scripts/make_suites.py --out-dir runs/suites
"""

import argparse
from pathlib import Path

from kernelverify.fixtures import SUITES, write_suite


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", type=Path, default=Path("runs/suites"))
    parser.add_argument("--timeout", type=float, default=60.0)
    args = parser.parse_args()
    for name in SUITES:
        for method in ("param", "baseline"):
            path = write_suite(args.out_dir / name, name, method=method, timeout_s=args.timeout)
            print(path)


if __name__ == "__main__":
    main()
