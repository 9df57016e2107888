"""Deterministic Turtle output and a strict reader for the subset it emits.

Output is byte-stable: prefixes sorted by name, subjects by IRI, predicates
by IRI (``rdf:type`` written as ``a``), objects IRIs-first. The reader
accepts ``@prefix``/``PREFIX`` directives, absolute IRIs, prefixed names,
``a``, plain and typed string literals, bare integers, ``;`` and ``,`` lists
and comments. Blank nodes, collections and language tags are rejected.
"""
from __future__ import annotations

import re
from typing import Iterator, Mapping

from .brick import RDF_TYPE, XSD_INTEGER, BrickGraph, Literal, object_key


class TurtleSyntaxError(ValueError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


_LOCAL = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_-]*\Z")
_INTEGER_LEX = re.compile(r"[+-]?[0-9]+\Z")
_IRI_FORBIDDEN = re.compile(r'[\x00-\x20<>"{}|^`\\]')


# -- writing ------------------------------------------------------------------------

def _escape(text: str) -> str:
    out = []
    for ch in text:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\r":
            out.append("\\r")
        elif ch == "\t":
            out.append("\\t")
        elif ord(ch) < 0x20 or ord(ch) == 0x7F:
            out.append(f"\\u{ord(ch):04X}")
        else:
            out.append(ch)
    return "".join(out)


class _Namer:
    def __init__(self, prefixes: Mapping[str, str]):
        # longest namespace first so nested namespaces pick the tightest prefix
        self.table = sorted(prefixes.items(), key=lambda kv: (-len(kv[1]), kv[0]))

    def iri(self, value: str) -> str:
        for prefix, ns in self.table:
            if value.startswith(ns) and _LOCAL.match(value[len(ns):]):
                return f"{prefix}:{value[len(ns):]}"
        if _IRI_FORBIDDEN.search(value):
            raise ValueError(f"IRI cannot be written: {value!r}")
        return f"<{value}>"

    def term(self, obj) -> str:
        if isinstance(obj, Literal):
            if obj.datatype == XSD_INTEGER and _INTEGER_LEX.match(obj.lexical):
                return obj.lexical
            body = f'"{_escape(obj.lexical)}"'
            return body if obj.datatype is None else f"{body}^^{self.iri(obj.datatype)}"
        return self.iri(obj)


def serialize_turtle(graph: BrickGraph) -> str:
    """Canonical Turtle text; equal graphs give identical strings."""
    namer = _Namer(graph.prefixes)
    lines = [f"@prefix {p}: <{ns}> ." for p, ns in sorted(graph.prefixes.items())]
    by_subject: dict[str, dict[str, list]] = {}
    for s, p, o in graph.triples:
        by_subject.setdefault(s, {}).setdefault(p, []).append(o)
    for subject in sorted(by_subject):
        lines.append("")
        preds = by_subject[subject]
        chunks = []
        for pred in sorted(preds):
            verb = "a" if pred == RDF_TYPE else namer.iri(pred)
            objs = ", ".join(namer.term(o) for o in sorted(preds[pred], key=object_key))
            chunks.append(f"{verb} {objs}")
        lines.append(f"{namer.iri(subject)} " + " ;\n    ".join(chunks) + " .")
    return "\n".join(lines) + "\n"


# -- reading ------------------------------------------------------------------------

_PN_PREFIX = r"(?:[A-Za-z](?:[A-Za-z0-9_.-]*[A-Za-z0-9_-])?)?"
_PN_LOCAL = r"(?:[A-Za-z0-9_](?:[A-Za-z0-9_.-]*[A-Za-z0-9_-])?)?"
_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\r\n]*)
  | (?P<iri><[^<>"{}|^`\\\x00-\x20]*>)
  | (?P<string>"(?:[^"\\\r\n]|\\.)*")
  | (?P<dtype>\^\^)
  | (?P<lang>@[A-Za-z]+(?:-[A-Za-z0-9]+)*)
  | (?P<integer>[+-]?[0-9]+(?![0-9eE]|\.[0-9]))
  | (?P<pname>""" + _PN_PREFIX + ":" + _PN_LOCAL + r""")
  | (?P<word>[A-Za-z]+)
  | (?P<punct>[.;,])
    """,
    re.VERBOSE,
)
_ESCAPES = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


def _unescape(body: str, line: int) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch != "\\":
            out.append(ch)
            i += 1
            continue
        nxt = body[i + 1]
        if nxt in _ESCAPES:
            out.append(_ESCAPES[nxt])
            i += 2
        elif nxt in "uU":
            width = 4 if nxt == "u" else 8
            digits = body[i + 2:i + 2 + width]
            if len(digits) != width or not all(c in "0123456789abcdefABCDEF" for c in digits):
                raise TurtleSyntaxError(line, "malformed unicode escape")
            code = int(digits, 16)
            if code > 0x10FFFF or 0xD800 <= code <= 0xDFFF:
                raise TurtleSyntaxError(line, "escape is not a valid code point")
            out.append(chr(code))
            i += 2 + width
        else:
            raise TurtleSyntaxError(line, f"unknown escape \\{nxt}")
    return "".join(out)


def _tokens(text: str) -> Iterator[tuple[str, str, int]]:
    pos, line, n = 0, 1, len(text)
    while pos < n:
        m = _TOKEN.match(text, pos)
        if m is None:
            ch = text[pos]
            if ch == '"':
                raise TurtleSyntaxError(line, "unterminated string literal")
            if ch == "<":
                raise TurtleSyntaxError(line, "malformed IRI")
            if ch in "[(":
                raise TurtleSyntaxError(line, "blank nodes and collections are not supported")
            if text.startswith("_:", pos):
                raise TurtleSyntaxError(line, "blank nodes are not supported")
            raise TurtleSyntaxError(line, f"unexpected character {ch!r}")
        kind = m.lastgroup
        value = m.group()
        if kind not in ("ws", "comment"):
            yield kind, value, line
        line += value.count("\n")
        pos = m.end()
    yield "eof", "", line


class _Reader:
    def __init__(self, text: str):
        self.tokens = _tokens(text)
        self.prefixes: dict[str, str] = {}
        self.triples: set = set()
        self.advance()

    def advance(self) -> None:
        self.kind, self.value, self.line = next(self.tokens)

    def fail(self, reason: str):
        raise TurtleSyntaxError(self.line, reason)

    def expect(self, kind: str, value: str | None = None) -> str:
        if self.kind != kind or (value is not None and self.value != value):
            found = self.value or "end of input"
            self.fail(f"expected {value or kind}, found {found!r}")
        v = self.value
        self.advance()
        return v

    def iri(self, allow_a: bool = False) -> str:
        if self.kind == "iri":
            value = self.value[1:-1]
            self.advance()
            return value
        if self.kind == "pname":
            prefix, _, local = self.value.partition(":")
            if prefix not in self.prefixes:
                self.fail(f"undeclared prefix {prefix!r}")
            self.advance()
            return self.prefixes[prefix] + local
        if allow_a and self.kind == "word" and self.value == "a":
            self.advance()
            return RDF_TYPE
        self.fail(f"expected an IRI, found {self.value or 'end of input'!r}")

    def obj(self):
        if self.kind == "integer":
            value = self.value
            self.advance()
            return Literal(value, XSD_INTEGER)
        if self.kind == "string":
            line = self.line
            lexical = _unescape(self.value[1:-1], line)
            self.advance()
            if self.kind == "lang":
                self.fail("language-tagged literals are not supported")
            if self.kind == "dtype":
                self.advance()
                return Literal(lexical, self.iri())
            return Literal(lexical)
        return self.iri()

    def directive(self) -> None:
        sparql = self.kind == "word"
        self.advance()
        if self.kind != "pname" or not self.value.endswith(":"):
            self.fail("expected a prefix name ending in ':'")
        prefix = self.value[:-1]
        self.advance()
        if self.kind != "iri":
            self.fail("expected a namespace IRI")
        self.prefixes[prefix] = self.value[1:-1]
        self.advance()
        if not sparql:
            self.expect("punct", ".")

    def statement(self) -> None:
        if self.kind == "lang" and self.value == "@prefix":
            return self.directive()
        if self.kind == "word" and self.value.upper() == "PREFIX":
            return self.directive()
        if self.kind == "lang":
            self.fail(f"unsupported directive {self.value}")
        subject = self.iri()
        while True:
            pred = self.iri(allow_a=True)
            while True:
                self.triples.add((subject, pred, self.obj()))
                if self.kind == "punct" and self.value == ",":
                    self.advance()
                    continue
                break
            if self.kind == "punct" and self.value == ";":
                while self.kind == "punct" and self.value == ";":
                    self.advance()
                if self.kind == "punct" and self.value == ".":
                    break
                continue
            break
        self.expect("punct", ".")

    def run(self) -> BrickGraph:
        while self.kind != "eof":
            self.statement()
        return BrickGraph(dict(self.prefixes), frozenset(self.triples))


def parse_turtle(text: str) -> BrickGraph:
    """Read Turtle in the emitted subset; raises :class:`TurtleSyntaxError`."""
    return _Reader(text).run()


def read_turtle(path) -> BrickGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_turtle(fh.read())
