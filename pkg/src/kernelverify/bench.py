"""Benchmark sweeps: kernel families x sizes x strengths over a query set.

Manifest format (paths relative to the manifest file)::

    {"queries": [{"network": "a.net.json", "property": "a.prop.json"}, ...],
     "families": ["box-blur", "sharpen", "motion-blur-45", ...],
     "sizes": [3, 5], "strengths": [0.2, 1.0],
     "timeout_s": 60, "method": "param"}

The result CSV has one row per (family, size, strength) cell with the
number of verified / unsafe / timed-out (undecided) queries.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .kernels import KernelFamily, make_kernel
from .network import load_network
from .properties import build_query, load_property
from .verifier import SAFE, UNDECIDED, UNSAFE, Verdict, VerifierConfig, run_query

log = logging.getLogger(__name__)

CSV_COLUMNS = ["family", "size", "strength", "verified", "unsafe", "timeout", "mean_time_s"]


class ManifestError(ValueError):
    pass


@dataclass
class BenchmarkManifest:
    queries: list  # [(network_path, property_path)]
    families: list
    sizes: list
    strengths: list
    timeout_s: float = 60.0
    method: str = "param"

    @classmethod
    def load(cls, path) -> "BenchmarkManifest":
        path = Path(path)
        try:
            obj = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ManifestError(f"{path}: line {exc.lineno}: {exc.msg}") from None
        base = path.parent
        queries = []
        for i, q in enumerate(obj.get("queries", [])):
            try:
                pair = (base / q["network"], base / q["property"])
            except (KeyError, TypeError):
                raise ManifestError(f"queries[{i}] needs 'network' and 'property'") from None
            for p in pair:
                if not p.exists():
                    raise ManifestError(f"queries[{i}]: {p} does not exist")
            queries.append(pair)
        manifest = cls(
            queries=queries,
            families=list(obj.get("families", [])),
            sizes=[int(s) for s in obj.get("sizes", [])],
            strengths=[float(s) for s in obj.get("strengths", [])],
            timeout_s=float(obj.get("timeout_s", 60.0)),
            method=obj.get("method", "param"),
        )
        for label in manifest.families:
            KernelFamily.from_label(label)
        if manifest.method not in ("param", "baseline"):
            raise ManifestError(f"unknown method {manifest.method!r}")
        return manifest

    def to_json(self, base: Optional[Path] = None) -> dict:
        def rel(p):
            return str(Path(p).relative_to(base)) if base else str(p)

        return {
            "queries": [{"network": rel(n), "property": rel(p)} for n, p in self.queries],
            "families": self.families,
            "sizes": self.sizes,
            "strengths": self.strengths,
            "timeout_s": self.timeout_s,
            "method": self.method,
        }


@dataclass
class ResultRow:
    family: str
    size: int
    strength: float
    verified: int = 0
    unsafe: int = 0
    timeout: int = 0
    times: list = field(default_factory=list)

    @property
    def count(self) -> int:
        return self.verified + self.unsafe + self.timeout

    @property
    def mean_time(self) -> float:
        return sum(self.times) / len(self.times) if self.times else 0.0

    def add(self, verdict: Verdict):
        if verdict.status == SAFE:
            self.verified += 1
        elif verdict.status == UNSAFE:
            self.unsafe += 1
        else:
            self.timeout += 1
        self.times.append(verdict.time_s)


@dataclass
class QueryRecord:
    index: int
    family: str
    size: int
    strength: float
    verdict: Verdict


def run_bench(manifest: BenchmarkManifest, config: VerifierConfig = VerifierConfig()):
    """Run every cell of the grid; return ``(rows, records)``.

    Strengths are swept in ascending order per query so that a witness found
    at a weaker strength is offered as a hint to the stronger ones.
    """
    loaded = []
    for net_path, prop_path in manifest.queries:
        loaded.append((load_network(net_path), load_property(prop_path)))

    rows = {}
    records = []
    strengths = sorted(manifest.strengths)
    for label in manifest.families:
        family = KernelFamily.from_label(label)
        for size in manifest.sizes:
            kernel = make_kernel(family, size)
            for st in strengths:
                rows[(label, size, st)] = ResultRow(label, size, st)
            for idx, (net, prop) in enumerate(loaded):
                hints = []
                for st in strengths:
                    try:
                        query = build_query(net, prop, manifest.method, manifest.timeout_s,
                                            kernel=kernel, strength=st)
                        verdict = run_query(query, config, hints)
                    except Exception as exc:  # one bad query must not abort the sweep
                        log.warning("query %d (%s, %d, %g) failed: %s", idx, label, size, st, exc)
                        verdict = Verdict(UNDECIDED, reason=f"error: {exc}")
                    if verdict.status == UNSAFE and manifest.method == "param":
                        hints.append(verdict.witness)
                    rows[(label, size, st)].add(verdict)
                    records.append(QueryRecord(idx, label, size, st, verdict))
    ordered = [rows[k] for k in sorted(rows)]
    return ordered, records


def format_csv(rows, timing: bool = True) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in sorted(rows, key=lambda r: (r.family, r.size, r.strength)):
        writer.writerow([r.family, r.size, repr(r.strength), r.verified, r.unsafe, r.timeout,
                         f"{r.mean_time:.6f}" if timing else ""])
    return buf.getvalue()


def read_csv(text: str) -> list:
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        rows.append(ResultRow(rec["family"], int(rec["size"]), float(rec["strength"]),
                              int(rec["verified"]), int(rec["unsafe"]), int(rec["timeout"])))
    return rows
