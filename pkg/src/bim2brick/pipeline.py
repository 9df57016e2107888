"""End-to-end conversion: parse, extract, ingest, localise, infer, build, serialise."""
from __future__ import annotations

import os
import tempfile
import time
from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

from . import step
from .brick import RDF_TYPE, BrickGraph, Literal, Mode, build_graph
from .diagnostics import Diagnostic
from .geo import SiteTransform
from .ifc import extract_model
from .inference import infer_all
from .occupants import filter_defined, localize, read_occupants
from .turtle import serialize_turtle

STAGES = ("parse", "extract", "ingest", "localize", "infer", "build", "serialize")


@dataclass
class RunConfig:
    ifc_path: str | None = None
    occupants_path: str | None = None
    mode: Mode = Mode.DIGITAL_TWIN
    out_path: str | None = None
    origin_lat: float | None = None
    origin_lon: float | None = None
    origin_alt: float = 0.0
    rotation_deg: float = 0.0
    scale: float = 1.0
    as_of: datetime | None = None
    strict: bool = False
    report_path: str | None = None

    def usage_problems(self) -> list[str]:
        mode = Mode(self.mode)
        problems = []
        if not self.ifc_path:
            problems.append("an IFC file is required (--ifc)")
        if not self.out_path:
            problems.append("an output path is required (--out)")
        if mode is not Mode.BMS:
            if not self.occupants_path:
                problems.append(f"mode {mode.value} requires an occupant dataset (--occupants)")
            if self.origin_lat is None or self.origin_lon is None:
                problems.append(f"mode {mode.value} requires the site origin "
                                "(--origin-lat and --origin-lon)")
        if not self.scale > 0:
            problems.append("scale must be positive")
        return problems

    def site_transform(self) -> SiteTransform:
        return SiteTransform.from_geodetic(self.origin_lat, self.origin_lon, self.origin_alt,
                                           self.rotation_deg, self.scale)


@dataclass
class RunReport:
    mode: str
    output_path: str | None
    nodes_by_class: dict[str, int] = field(default_factory=dict)
    relations_by_predicate: dict[str, int] = field(default_factory=dict)
    triple_count: int = 0
    diagnostics: list[Diagnostic] = field(default_factory=list)
    notices: list[str] = field(default_factory=list)
    timings_ms: dict[str, float] = field(default_factory=dict)

    @property
    def node_count(self) -> int:
        return sum(self.nodes_by_class.values())

    @property
    def relation_count(self) -> int:
        return sum(self.relations_by_predicate.values())

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "output": self.output_path,
            "nodes": dict(sorted(self.nodes_by_class.items())),
            "node_total": self.node_count,
            "relations": dict(sorted(self.relations_by_predicate.items())),
            "relation_total": self.relation_count,
            "triples": self.triple_count,
            "diagnostics": [d.to_dict() for d in self.diagnostics],
            "notices": list(self.notices),
            "timings_ms": {k: round(v, 3) for k, v in self.timings_ms.items()},
        }

    def to_text(self) -> str:
        lines = [f"mode: {self.mode}", f"output: {self.output_path}",
                 f"nodes: {self.node_count}"]
        lines += [f"  {k}: {v}" for k, v in sorted(self.nodes_by_class.items())]
        lines.append(f"relations: {self.relation_count}")
        lines += [f"  {k}: {v}" for k, v in sorted(self.relations_by_predicate.items())]
        lines.append(f"triples: {self.triple_count}")
        lines.append(f"diagnostics: {len(self.diagnostics)}")
        lines += [f"  {d}" for d in self.diagnostics]
        lines += [f"notice: {n}" for n in self.notices]
        total = sum(self.timings_ms.values())
        lines.append(f"elapsed: {total:.1f} ms (" + ", ".join(
            f"{k} {v:.1f}" for k, v in self.timings_ms.items()) + ")")
        return "\n".join(lines) + "\n"


def _local(iri: str) -> str:
    return iri.rsplit("#", 1)[-1].rsplit("/", 1)[-1]


def count_graph(graph: BrickGraph) -> tuple[dict[str, int], dict[str, int]]:
    """Nodes per class and IRI-to-IRI relations per predicate local name."""
    nodes = Counter(graph.nodes().values())
    relations = Counter(_local(p) for s, p, o in graph.triples
                        if p != RDF_TYPE and not isinstance(o, Literal))
    return dict(nodes), dict(relations)


@dataclass
class Conversion:
    graph: BrickGraph
    turtle: str
    report: RunReport


@contextmanager
def _timed(timings: dict, stage: str):
    start = time.perf_counter()
    try:
        yield
    finally:
        timings[stage] = timings.get(stage, 0.0) + (time.perf_counter() - start) * 1000.0


def convert(config: RunConfig) -> Conversion:
    """Run every stage in memory; fatal module errors propagate."""
    mode = Mode(config.mode)
    timings: dict[str, float] = {}
    diags: list[Diagnostic] = []
    notices: list[str] = []

    with _timed(timings, "parse"):
        parsed = step.read_step(config.ifc_path)
    with _timed(timings, "extract"):
        model = extract_model(parsed)
    diags.extend(model.diagnostics)

    records = []
    if mode is Mode.BMS:
        if config.occupants_path:
            notices.append("bms mode: occupant dataset ignored")
    else:
        with _timed(timings, "ingest"):
            raw, _ = read_occupants(config.occupants_path, diags)
            records = filter_defined(raw, diags)
        with _timed(timings, "localize"):
            records = localize(records, config.site_transform(), diags)

    with _timed(timings, "infer"):
        relations = infer_all(model, records, config.as_of, diags)
    with _timed(timings, "build"):
        graph = build_graph(model, relations, records, mode)
    with _timed(timings, "serialize"):
        text = serialize_turtle(graph)

    nodes, rels = count_graph(graph)
    report = RunReport(mode.value, config.out_path, nodes, rels, len(graph.triples),
                       diags, notices, {k: timings[k] for k in STAGES if k in timings})
    return Conversion(graph, text, report)


def write_atomic(path, text: str) -> None:
    """Write UTF-8 text with LF endings via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
