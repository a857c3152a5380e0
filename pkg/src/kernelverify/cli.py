"""Command-line interface.

Exit codes for ``verify``/``attack``: 0 safe, 1 unsafe, 2 undecided;
64 bad usage, 65 malformed input, 66 missing input file.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .bench import BenchmarkManifest, ManifestError, format_csv, run_bench
from .fixtures import SUITES, FixtureError, FixtureSpec, resolve_seed, write_fixture, write_suite
from .kernels import KernelConstructionError, KernelFamily, make_kernel
from .network import NetworkFormatError, load_network
from .properties import PropertyFormatError, build_query, load_property
from .verifier import SAFE, UNSAFE, VerifierConfig, attack, run_query
from .encode import augment

EX_SAFE, EX_UNSAFE, EX_UNDECIDED = 0, 1, 2
EX_USAGE, EX_DATAERR, EX_NOINPUT = 64, 65, 66

STATUS_CODES = {SAFE: EX_SAFE, UNSAFE: EX_UNSAFE}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


class _InputError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def dumps17(obj) -> str:
    """JSON with every float written to 17 significant digits."""
    if isinstance(obj, float):
        text = format(obj, ".17g")
        return text if any(ch in text for ch in ".einf") else text + ".0"
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(k)}: {dumps17(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps17(v) for v in obj) + "]"
    return json.dumps(obj)


def _load_inputs(network, prop):
    for p in (network, prop):
        if not Path(p).exists():
            raise _InputError(EX_NOINPUT, f"no such file: {p}")
    try:
        return load_network(network), load_property(prop)
    except (NetworkFormatError, PropertyFormatError, ValueError) as exc:
        raise _InputError(EX_DATAERR, str(exc)) from None


def _emit(text: str, out):
    print(text)
    if out:
        Path(out).write_text(text + "\n")


def cmd_verify(args) -> int:
    net, prop = _load_inputs(args.network, args.property)
    try:
        query = build_query(net, prop, args.method, args.timeout)
        verdict = run_query(query, VerifierConfig(workers=args.workers))
    except (KernelConstructionError, ValueError) as exc:
        raise _InputError(EX_DATAERR, str(exc)) from None
    _emit(json.dumps(verdict.to_json()), args.out)
    return STATUS_CODES.get(verdict.status, EX_UNDECIDED)


def cmd_attack(args) -> int:
    net, prop = _load_inputs(args.network, args.property)
    try:
        query = build_query(net, prop)
        query.check_correctly_classified()
    except (KernelConstructionError, ValueError) as exc:
        raise _InputError(EX_DATAERR, str(exc)) from None
    aug = augment(net, query.image, query.kernel)
    z = attack(aug, query.domain, query.label, args.budget)
    witness = None if z is None else [float(v) for v in z]
    _emit(json.dumps({"witness": witness}), args.out)
    return EX_UNSAFE if z is not None else EX_UNDECIDED


def cmd_kernel_dump(args) -> int:
    try:
        if args.angle is None:
            family = KernelFamily.from_label(args.family)
        else:
            family = KernelFamily(args.family, args.angle)
        pk = make_kernel(family, args.size, allow_even=args.allow_even)
    except KernelConstructionError as exc:
        raise _InputError(EX_USAGE, str(exc)) from None
    out = pk.to_json()
    if pk.warnings:
        out["warnings"] = list(pk.warnings)
    if args.z is not None:
        out["z"] = args.z
        out["kernel"] = pk.evaluate([args.z] * pk.m).tolist()
    _emit(dumps17(out), args.out)
    return 0


def cmd_bench(args) -> int:
    if not Path(args.manifest).exists():
        raise _InputError(EX_NOINPUT, f"no such file: {args.manifest}")
    try:
        manifest = BenchmarkManifest.load(args.manifest)
    except (ManifestError, ValueError) as exc:
        raise _InputError(EX_DATAERR, str(exc)) from None
    if args.method:
        manifest.method = args.method
    if args.timeout is not None:
        manifest.timeout_s = args.timeout
    rows, _ = run_bench(manifest, VerifierConfig(workers=args.workers))
    text = format_csv(rows, timing=not args.no_timing)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_gen_fixture(args) -> int:
    try:
        if args.suite:
            path = write_suite(args.out_dir, args.suite, method=args.method)
            print(path)
            return 0
        seed = resolve_seed(args.seed)
        spec = FixtureSpec(
            input_shape=(args.channels, args.height, args.width),
            widths=tuple(int(w) for w in args.widths.split(",") if w),
            classes=args.classes,
            mode=args.mode,
            image=args.image,
            conv=args.conv,
            family=args.family,
            size=args.size,
            strength=args.strength,
            z0=args.z0,
        )
        paths = write_fixture(args.out_dir, seed, spec, args.name)
    except (FixtureError, KernelConstructionError) as exc:
        raise _InputError(EX_USAGE, str(exc)) from None
    for p in paths:
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kernelverify", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("verify", help="verify one query")
    p.add_argument("--network", required=True)
    p.add_argument("--property", required=True)
    p.add_argument("--method", choices=("param", "baseline"), default="param")
    p.add_argument("--timeout", type=float, default=None, help="seconds (default: from property)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("attack", help="search for a counterexample by sampling")
    p.add_argument("--network", required=True)
    p.add_argument("--property", required=True)
    p.add_argument("--budget", type=int, default=64)
    p.add_argument("--out")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("kernel", help="kernel utilities")
    ksub = p.add_subparsers(dest="kernel_command", required=True, parser_class=_Parser)
    d = ksub.add_parser("dump", help="print a parameterised kernel as JSON")
    d.add_argument("--family", required=True, help="box-blur, sharpen, motion-blur[-ANGLE]")
    d.add_argument("--size", type=int, required=True)
    d.add_argument("--angle", type=int)
    d.add_argument("--z", type=float)
    d.add_argument("--allow-even", action="store_true")
    d.add_argument("--out")
    d.set_defaults(func=cmd_kernel_dump)

    p = sub.add_parser("bench", help="run a benchmark manifest, write CSV")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out")
    p.add_argument("--method", choices=("param", "baseline"))
    p.add_argument("--timeout", type=float)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-timing", action="store_true",
                   help="leave mean_time_s empty so the CSV is byte-reproducible")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen-fixture", help="write deterministic fixture files")
    p.add_argument("--seed", type=int, help="overridden by KERNELVERIFY_SEED")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--suite", choices=SUITES, help="write a whole suite plus manifest")
    p.add_argument("--method", choices=("param", "baseline"), default="param")
    p.add_argument("--name")
    p.add_argument("--mode", choices=("random", "flip", "template"), default="random")
    p.add_argument("--image", default="blob")
    p.add_argument("--channels", type=int, default=1)
    p.add_argument("--height", type=int, default=8)
    p.add_argument("--width", type=int, default=8)
    p.add_argument("--widths", default="16", help="comma-separated hidden widths")
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--conv", action="store_true")
    p.add_argument("--family", default="box-blur")
    p.add_argument("--size", type=int, default=3)
    p.add_argument("--strength", type=float, default=1.0)
    p.add_argument("--z0", type=float, default=0.5)
    p.set_defaults(func=cmd_gen_fixture)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "workers", 1) is not None and getattr(args, "workers", 1) < 1:
        parser.error("--workers must be >= 1")
    try:
        return args.func(args)
    except _InputError as exc:
        print(f"kernelverify: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
