"""Change report between two graphs, keyed by element source id."""
from __future__ import annotations

import json
from dataclasses import dataclass

from .brick import BRICK, RDF_TYPE, SOURCE_ID, BrickGraph, Literal


class SourceIdError(ValueError):
    pass


class DuplicateSourceIdError(SourceIdError):
    pass


@dataclass(frozen=True, order=True)
class Statement:
    """A triple seen from its subject, with node objects replaced by source ids."""

    predicate: str
    kind: str  # "node", "iri" or "literal"
    value: str
    datatype: str = ""

    def render(self) -> str:
        if self.kind == "node":
            obj = f"[{self.value}]"
        elif self.kind == "iri":
            obj = f"<{self.value}>"
        else:
            obj = json.dumps(self.value, ensure_ascii=False)
            if self.datatype:
                obj += f"^^<{self.datatype}>"
        return f"<{self.predicate}> {obj}"

    def to_dict(self) -> dict:
        out = {"predicate": self.predicate, self.kind: self.value}
        if self.datatype:
            out["datatype"] = self.datatype
        return out


@dataclass(frozen=True)
class InstanceChange:
    source_id: str
    status: str  # "added", "removed" or "modified"
    node_class: str
    added: tuple[Statement, ...] = ()
    removed: tuple[Statement, ...] = ()

    def to_dict(self) -> dict:
        return {
            "sourceId": self.source_id, "status": self.status, "class": self.node_class,
            "added": [s.to_dict() for s in self.added],
            "removed": [s.to_dict() for s in self.removed],
        }


@dataclass(frozen=True)
class ChangeReport:
    added: tuple[InstanceChange, ...] = ()
    removed: tuple[InstanceChange, ...] = ()
    modified: tuple[InstanceChange, ...] = ()

    @property
    def is_empty(self) -> bool:
        return not (self.added or self.removed or self.modified)

    def changes(self) -> list[InstanceChange]:
        return sorted(self.added + self.removed + self.modified, key=lambda c: c.source_id)

    def to_text(self) -> str:
        if self.is_empty:
            return "no changes\n"
        lines = [f"added: {len(self.added)}, removed: {len(self.removed)}, "
                 f"modified: {len(self.modified)}"]
        marks = {"added": "+", "removed": "-", "modified": "~"}
        for c in self.changes():
            lines.append(f"{marks[c.status]} {c.source_id} ({c.node_class})")
            lines.extend(f"    + {s.render()}" for s in c.added)
            lines.extend(f"    - {s.render()}" for s in c.removed)
        return "\n".join(lines) + "\n"

    def to_jsonl(self) -> str:
        return "".join(json.dumps(c.to_dict(), ensure_ascii=False, sort_keys=True) + "\n"
                       for c in self.changes())


def _instances(graph: BrickGraph) -> tuple[dict[str, str], dict[str, set[Statement]], dict[str, str]]:
    """``iri -> source id``, ``source id -> statements`` and ``source id -> class``."""
    ids: dict[str, str] = {}
    owner: dict[str, str] = {}
    for s, p, o in sorted((t for t in graph.triples if t[1] == SOURCE_ID), key=lambda t: (t[0], str(t[2]))):
        if not isinstance(o, Literal):
            raise SourceIdError(f"sourceId of {s} is not a literal")
        if s in ids and ids[s] != o.lexical:
            raise DuplicateSourceIdError(f"{s} carries sourceIds {ids[s]!r} and {o.lexical!r}")
        if o.lexical in owner and owner[o.lexical] != s:
            raise DuplicateSourceIdError(
                f"sourceId {o.lexical!r} is used by {owner[o.lexical]} and {s}")
        ids[s] = o.lexical
        owner[o.lexical] = s
    for s, _, _ in graph.triples:
        if s not in ids:
            raise SourceIdError(f"{s} has no sourceId annotation")

    statements: dict[str, set[Statement]] = {sid: set() for sid in owner}
    classes: dict[str, str] = {}
    for s, p, o in graph.triples:
        if p == SOURCE_ID:
            continue
        sid = ids[s]
        if isinstance(o, Literal):
            st = Statement(p, "literal", o.lexical, o.datatype or "")
        elif o in ids:
            st = Statement(p, "node", ids[o])
        else:
            st = Statement(p, "iri", o)
            if p == RDF_TYPE:
                classes[sid] = o[len(BRICK):] if o.startswith(BRICK) else o
        statements[sid].add(st)
    return ids, statements, classes


def diff_by_source_id(old: BrickGraph, new: BrickGraph) -> ChangeReport:
    """Instances added, removed or modified between ``old`` and ``new``.

    Instance IRIs are ignored; nodes are matched and compared through their
    ``sourceId`` annotations, so re-minted IRIs do not show as changes.
    """
    _, before, old_cls = _instances(old)
    _, after, new_cls = _instances(new)
    added, removed, modified = [], [], []
    for sid in sorted(set(before) | set(after)):
        if sid not in before:
            added.append(InstanceChange(sid, "added", new_cls.get(sid, ""), tuple(sorted(after[sid]))))
        elif sid not in after:
            removed.append(InstanceChange(sid, "removed", old_cls.get(sid, ""), (),
                                          tuple(sorted(before[sid]))))
        elif before[sid] != after[sid]:
            modified.append(InstanceChange(
                sid, "modified", new_cls.get(sid) or old_cls.get(sid, ""),
                tuple(sorted(after[sid] - before[sid])), tuple(sorted(before[sid] - after[sid]))))
    return ChangeReport(tuple(added), tuple(removed), tuple(modified))
