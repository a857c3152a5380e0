"""Paired comparison of the parameterised encoding against the neighbourhood
baseline on every suite: verified counts and the mean lower margin bound.

    python3 scripts/ablation.py
"""

import argparse
import tempfile
from pathlib import Path

import numpy as np

from kernelverify.baseline import neighborhood_bounds
from kernelverify.bench import BenchmarkManifest, run_bench
from kernelverify.bounds import symbolic_propagate
from kernelverify.encode import augment
from kernelverify.fixtures import SUITES, gen_fixture, suite_specs, write_suite
from kernelverify.kernels import make_kernel
from kernelverify.properties import build_query
from kernelverify.tensor import flatten
from kernelverify.verifier import SAFE, VerifierConfig


def margin_gap(name, family="box-blur", size=3, strength=1.0):
    """Mean worst-case margin lower bound over a suite, for both encodings."""
    param, base = [], []
    for seed, spec in suite_specs(name):
        net, prop = gen_fixture(seed, spec)
        q = build_query(net, prop, kernel=make_kernel(family, size), strength=strength)
        aug = augment(net, q.image, q.kernel)
        param.append(symbolic_propagate(aug, q.domain.lower, q.domain.upper, q.label).margin_lower.min())
        box = neighborhood_bounds(q.image, size)
        base.append(symbolic_propagate(net, flatten(box.lower), flatten(box.upper), q.label).margin_lower.min())
    return float(np.mean(param)), float(np.mean(base))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()
    print(f"{'suite':<15}{'queries':>8}{'param v':>9}{'base v':>8}{'param margin':>14}{'base margin':>13}")
    with tempfile.TemporaryDirectory() as tmp:
        for name in SUITES:
            verified = {}
            for method in ("param", "baseline"):
                manifest = BenchmarkManifest.load(write_suite(Path(tmp) / name, name, method))
                _, records = run_bench(manifest, VerifierConfig(workers=args.workers))
                verified[method] = sum(r.verdict.status == SAFE for r in records)
            pm, bm = margin_gap(name)
            print(f"{name:<15}{len(records):>8}{verified['param']:>9}{verified['baseline']:>8}{pm:>14.3f}{bm:>13.3f}")


if __name__ == "__main__":
    main()
