"""ISO 10303-21 (STEP Part 21) reader.

Produces an entity table without any IFC interpretation. Values map to
plain Python where possible:

======================  ==============================
Part 21                 Python
======================  ==============================
``12``                  ``int``
``1.5``                 ``float``
``'text'``              ``str`` (escapes decoded)
``.ENUM.``              :class:`Enum`
``#12``                 :class:`Ref`
``IFCLABEL('x')``       :class:`Typed`
``(a, b)``              ``tuple``
``"0FF"``               :class:`Binary`
``$``                   :data:`NULL`
``*``                   :data:`DERIVED`
======================  ==============================
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Any, Iterator, Mapping

from . import _tokens as T
from ._kernels import tokenize
from ._tokens import LexError


class StepError(ValueError):
    """Base class for Part 21 parse failures; always carries a location."""

    def __init__(self, line: int, column: int, reason: str):
        super().__init__(f"line {line}, column {column}: {reason}")
        self.line = line
        self.column = column
        self.reason = reason


class StepSyntaxError(StepError):
    pass


class DuplicateIdError(StepSyntaxError):
    def __init__(self, line: int, column: int, entity_id: int):
        super().__init__(line, column, f"duplicate instance id #{entity_id}")
        self.entity_id = entity_id


class MissingDataSectionError(StepSyntaxError):
    def __init__(self, line: int, column: int):
        super().__init__(line, column, "no DATA section")


@dataclass(frozen=True, slots=True)
class Ref:
    id: int

    def __repr__(self) -> str:
        return f"#{self.id}"


@dataclass(frozen=True, slots=True)
class Enum:
    name: str

    def __repr__(self) -> str:
        return f".{self.name}."


@dataclass(frozen=True, slots=True)
class Typed:
    name: str
    value: Any


@dataclass(frozen=True, slots=True)
class Binary:
    hex: str


class _Marker:
    __slots__ = ("_text",)

    def __init__(self, text: str):
        self._text = text

    def __repr__(self) -> str:
        return self._text

    def __reduce__(self):
        return (_marker, (self._text,))


NULL = _Marker("$")
DERIVED = _Marker("*")


def _marker(text: str) -> _Marker:
    return NULL if text == "$" else DERIVED


@dataclass(frozen=True, slots=True)
class StepEntity:
    id: int
    type_name: str
    args: tuple

    def refs(self) -> Iterator[int]:
        """All entity ids referenced anywhere in the argument tree."""
        stack = list(self.args)
        while stack:
            v = stack.pop()
            if isinstance(v, Ref):
                yield v.id
            elif isinstance(v, tuple):
                stack.extend(v)
            elif isinstance(v, Typed):
                stack.append(v.value)


@dataclass(frozen=True)
class StepHeader:
    description: tuple[str, ...] = ()
    name: str = ""
    schema: tuple[str, ...] = ()
    entities: tuple[tuple[str, tuple], ...] = ()


@dataclass(frozen=True)
class StepFile:
    header: StepHeader
    entities: Mapping[int, StepEntity]
    #: ``(entity_id, missing_id)`` pairs; ``None`` until :func:`resolve_refs` runs.
    dangling: tuple[tuple[int, int], ...] | None = None
    _by_type: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.entities, MappingProxyType):
            object.__setattr__(self, "entities", MappingProxyType(dict(self.entities)))
        index: dict[str, list[StepEntity]] = {}
        for ent in self.entities.values():
            index.setdefault(ent.type_name, []).append(ent)
        for items in index.values():
            items.sort(key=lambda e: e.id)
        object.__setattr__(self, "_by_type", index)

    def __getitem__(self, entity_id: int) -> StepEntity:
        return self.entities[entity_id]

    def __len__(self) -> int:
        return len(self.entities)

    def get(self, ref: Any) -> StepEntity | None:
        """Follow a :class:`Ref` (or raw id); ``None`` for null or dangling."""
        if isinstance(ref, Ref):
            ref = ref.id
        if isinstance(ref, int):
            return self.entities.get(ref)
        return None

    def by_type(self, *type_names: str) -> list[StepEntity]:
        """Entities of the given types in instance-id order."""
        out: list[StepEntity] = []
        for name in type_names:
            out.extend(self._by_type.get(name.upper(), ()))
        if len(type_names) > 1:
            out.sort(key=lambda e: e.id)
        return out


# -- string codec -----------------------------------------------------------

_PAGES = "ABCDEFGHI"


def decode_string(raw: str) -> str:
    """Decode the escapes of a Part 21 string body (quotes already removed).

    Raises ``ValueError`` with an offset-bearing message on malformed escapes.
    """
    if "\\" not in raw:
        return raw.replace("''", "'")
    out: list[str] = []
    page = "A"
    i = 0
    n = len(raw)
    while i < n:
        c = raw[i]
        if c == "'":
            # tokenizer guarantees apostrophes come in pairs
            out.append("'")
            i += 2
            continue
        if c != "\\":
            out.append(c)
            i += 1
            continue
        rest = raw[i:i + 4]
        if raw.startswith("\\\\", i):
            out.append("\\")
            i += 2
        elif rest.startswith("\\S\\") and i + 3 < n:
            code = ord(raw[i + 3]) + 128
            if code > 255:
                raise ValueError(f"bad \\S\\ escape at offset {i}")
            out.append(bytes([code]).decode(f"iso8859-{_PAGES.index(page) + 1}", "replace"))
            # an apostrophe after \S\ is still doubled in the raw body
            i += 5 if raw[i + 3] == "'" else 4
        elif rest.startswith("\\P") and len(rest) == 4 and rest[3] == "\\" and rest[2] in _PAGES:
            page = rest[2]
            i += 4
        elif rest == "\\X2\\":
            end = raw.find("\\X0\\", i + 4)
            hexdigits = raw[i + 4:end] if end >= 0 else ""
            if end < 0 or len(hexdigits) % 4 or not _is_hex(hexdigits):
                raise ValueError(f"bad \\X2\\ escape at offset {i}")
            out.append(_decode_units(hexdigits, "utf-16-be", i))
            i = end + 4
        elif rest == "\\X4\\":
            end = raw.find("\\X0\\", i + 4)
            hexdigits = raw[i + 4:end] if end >= 0 else ""
            if end < 0 or len(hexdigits) % 8 or not _is_hex(hexdigits):
                raise ValueError(f"bad \\X4\\ escape at offset {i}")
            out.append(_decode_units(hexdigits, "utf-32-be", i))
            i = end + 4
        elif rest[:3] == "\\X\\" and i + 5 <= n and _is_hex(raw[i + 3:i + 5]):
            out.append(chr(int(raw[i + 3:i + 5], 16)))
            i += 5
        else:
            raise ValueError(f"bad escape at offset {i}")
    return "".join(out)


def _is_hex(s: str) -> bool:
    return all(c in "0123456789ABCDEFabcdef" for c in s)


def _decode_units(hexdigits: str, codec: str, offset: int) -> str:
    try:
        return bytes.fromhex(hexdigits).decode(codec)
    except (UnicodeDecodeError, ValueError):
        raise ValueError(f"bad code units in escape at offset {offset}") from None


def encode_string(text: str) -> str:
    """Encode text as a Part 21 string body (without the surrounding quotes).

    Printable ASCII passes through, control characters become ``\\X\\hh``
    and everything else is grouped into ``\\X2\\`` / ``\\X4\\`` runs, which
    is what common IFC exporters write.
    """
    out: list[str] = []
    wide: list[str] = []

    def flush():
        if wide:
            if any(ord(ch) > 0xFFFF for ch in wide):
                out.append("\\X4\\" + "".join(f"{ord(ch):08X}" for ch in wide) + "\\X0\\")
            else:
                out.append("\\X2\\" + "".join(f"{ord(ch):04X}" for ch in wide) + "\\X0\\")
            wide.clear()

    for ch in text:
        code = ord(ch)
        if code >= 0x80:
            if wide and (code > 0xFFFF) != (ord(wide[0]) > 0xFFFF):
                flush()
            wide.append(ch)
            continue
        flush()
        if ch == "'":
            out.append("''")
        elif ch == "\\":
            out.append("\\\\")
        elif 0x20 <= code < 0x7F:
            out.append(ch)
        else:
            out.append(f"\\X\\{code:02X}")
    flush()
    return "".join(out)


def format_value(value: Any) -> str:
    """Render a value back to Part 21 text."""
    if value is NULL:
        return "$"
    if value is DERIVED:
        return "*"
    if isinstance(value, bool):
        raise TypeError("booleans are enumerations in Part 21; use Enum('T')")
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"cannot encode non-finite real {value!r}")
        text = repr(value).upper()
        if "." not in text:
            mantissa, _, exponent = text.partition("E")
            text = mantissa + "." + ("E" + exponent if exponent else "")
        return text
    if isinstance(value, str):
        return "'" + encode_string(value) + "'"
    if isinstance(value, Ref):
        return f"#{value.id}"
    if isinstance(value, Enum):
        return f".{value.name}."
    if isinstance(value, Typed):
        return f"{value.name}({format_value(value.value)})"
    if isinstance(value, Binary):
        return f'"{value.hex}"'
    if isinstance(value, (tuple, list)):
        return "(" + ",".join(format_value(v) for v in value) + ")"
    raise TypeError(f"not a Part 21 value: {value!r}")


def format_entity(entity: StepEntity) -> str:
    return f"#{entity.id}={entity.type_name}{format_value(entity.args)};"


def format_step(file: StepFile) -> str:
    """Render a whole exchange structure, entities in id order."""
    header = file.header.entities or (
        ("FILE_DESCRIPTION", (file.header.description, "2;1")),
        ("FILE_NAME", (file.header.name, "", (), (), "", "", "")),
        ("FILE_SCHEMA", (file.header.schema,)),
    )
    lines = ["ISO-10303-21;", "HEADER;"]
    lines += [f"{name}{format_value(args)};" for name, args in header]
    lines += ["ENDSEC;", "DATA;"]
    lines += [format_entity(file.entities[k]) for k in sorted(file.entities)]
    lines += ["ENDSEC;", "END-ISO-10303-21;"]
    return "\n".join(lines) + "\n"


# -- parser -----------------------------------------------------------------

_VALUE_START = frozenset(
    {T.INTEGER, T.REAL, T.STRING, T.ENUM, T.BINARY, T.REF, T.DOLLAR, T.STAR, T.LPAREN, T.KEYWORD}
)


class _Parser:
    def __init__(self, text: str, tokens: list):
        self.text = text
        self.tokens = tokens
        self.i = 0

    def here(self) -> int:
        return self.tokens[self.i][2] if self.i < len(self.tokens) else len(self.text)

    def error(self, reason: str, pos: int | None = None) -> StepSyntaxError:
        line, col = location(self.text, self.here() if pos is None else pos)
        return StepSyntaxError(line, col, reason)

    def peek(self) -> tuple | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self, kind: int, what: str | None = None) -> tuple:
        tok = self.peek()
        if tok is None:
            raise self.error(f"unexpected end of input, expected {what or T.NAMES[kind]}")
        if tok[0] != kind:
            raise self.error(f"expected {what or T.NAMES[kind]}, found {tok[1]!r}")
        self.i += 1
        return tok

    def keyword(self, word: str) -> tuple:
        tok = self.next(T.KEYWORD, word)
        if tok[1].upper() != word:
            self.i -= 1
            raise self.error(f"expected {word}, found {tok[1]!r}")
        return tok

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok is not None and tok[0] == T.KEYWORD and tok[1].upper() == word

    def params(self) -> tuple:
        """Parse ``( v, v, ... )`` iteratively; arbitrarily deep nesting is safe."""
        self.next(T.LPAREN)
        # each frame: [items, typed-name-or-None, list-start-token-offset]
        stack: list[list] = [[[], None]]
        expect_value = True
        tokens = self.tokens
        ntok = len(tokens)
        while True:
            if self.i >= ntok:
                raise self.error("unexpected end of input inside parameter list")
            kind, text, pos = tokens[self.i]
            frame = stack[-1]
            if kind == T.RPAREN:
                if expect_value and frame[0]:
                    raise self.error("expected value after ','")
                self.i += 1
                items, typed = stack.pop()
                if typed is not None:
                    if len(items) != 1:
                        raise self.error(f"typed value {typed} takes exactly one parameter", pos)
                    value: Any = Typed(typed, items[0])
                else:
                    value = tuple(items)
                if not stack:
                    return value
                stack[-1][0].append(value)
                expect_value = False
                continue
            if not expect_value:
                if kind != T.COMMA:
                    raise self.error(f"expected ',' or ')', found {text!r}")
                self.i += 1
                expect_value = True
                continue
            if kind not in _VALUE_START:
                raise self.error(f"expected value, found {text!r}")
            self.i += 1
            if kind == T.LPAREN:
                stack.append([[], None])
                continue
            if kind == T.KEYWORD:
                self.next(T.LPAREN, f"'(' after {text}")
                stack.append([[], text.upper()])
                continue
            frame[0].append(self.scalar(kind, text, pos))
            expect_value = False

    def scalar(self, kind: int, text: str, pos: int) -> Any:
        if kind == T.INTEGER:
            return int(text)
        if kind == T.REAL:
            return float(text)
        if kind == T.STRING:
            try:
                return decode_string(text)
            except ValueError as exc:
                raise self.error(f"string literal: {exc}", pos) from None
        if kind == T.ENUM:
            return Enum(text.upper())
        if kind == T.REF:
            return Ref(int(text))
        if kind == T.BINARY:
            return Binary(text.upper())
        if kind == T.DOLLAR:
            return NULL
        return DERIVED

    def parse(self) -> StepFile:
        self.keyword("ISO-10303-21")
        self.next(T.SEMI)
        header = self.header()
        entities: dict[int, StepEntity] = {}
        saw_data = False
        while not self.at_keyword("END-ISO-10303-21"):
            tok = self.peek()
            if tok is None:
                if not saw_data:
                    raise MissingDataSectionError(*location(self.text, len(self.text)))
                raise self.error("unexpected end of input, expected END-ISO-10303-21")
            if self.at_keyword("DATA"):
                saw_data = True
                self.data_section(entities)
            elif tok[0] == T.KEYWORD:
                self.skip_section()
            else:
                raise self.error(f"expected section keyword, found {tok[1]!r}")
        if not saw_data:
            raise MissingDataSectionError(*location(self.text, self.here()))
        self.i += 1
        self.next(T.SEMI)
        if self.peek() is not None:
            raise self.error("content after END-ISO-10303-21")
        return StepFile(header=header, entities=entities)

    def header(self) -> StepHeader:
        self.keyword("HEADER")
        self.next(T.SEMI)
        records = []
        while not self.at_keyword("ENDSEC"):
            name = self.next(T.KEYWORD, "header entity")[1].upper()
            args = self.params()
            self.next(T.SEMI)
            records.append((name, args))
        self.i += 1
        self.next(T.SEMI)
        fields = dict(records)

        def strings(v):
            return tuple(x for x in v if isinstance(x, str)) if isinstance(v, tuple) else ()

        desc = fields.get("FILE_DESCRIPTION", ())
        fname = fields.get("FILE_NAME", ())
        schema = fields.get("FILE_SCHEMA", ())
        return StepHeader(
            description=strings(desc[0]) if desc else (),
            name=fname[0] if fname and isinstance(fname[0], str) else "",
            schema=strings(schema[0]) if schema else (),
            entities=tuple(records),
        )

    def data_section(self, entities: dict[int, StepEntity]) -> None:
        self.i += 1
        if (tok := self.peek()) is not None and tok[0] == T.LPAREN:
            self.params()
        self.next(T.SEMI)
        while not self.at_keyword("ENDSEC"):
            ref = self.next(T.REF, "entity instance '#N' or ENDSEC")
            entity_id = int(ref[1])
            if entity_id <= 0:
                raise self.error("instance id must be positive", ref[2])
            self.next(T.EQUALS)
            tok = self.peek()
            if tok is not None and tok[0] == T.LPAREN:
                raise self.error("complex entity instances are not supported")
            type_name = self.next(T.KEYWORD, "entity type name")[1]
            if type_name.startswith("!") or "-" in type_name:
                raise self.error(f"invalid entity type name {type_name!r}", self.tokens[self.i - 1][2])
            args = self.params()
            self.next(T.SEMI)
            if entity_id in entities:
                line, col = location(self.text, ref[2])
                raise DuplicateIdError(line, col, entity_id)
            entities[entity_id] = StepEntity(entity_id, type_name.upper(), args)
        self.i += 1
        self.next(T.SEMI)

    def skip_section(self) -> None:
        self.i += 1
        while not self.at_keyword("ENDSEC"):
            if self.peek() is None:
                raise self.error("unexpected end of input, expected ENDSEC")
            self.i += 1
        self.i += 1
        self.next(T.SEMI)


def location(text: str, pos: int) -> tuple[int, int]:
    """1-based ``(line, column)`` of a character offset."""
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


def parse_step(source: str | bytes) -> StepFile:
    """Parse Part 21 text into a :class:`StepFile`.

    Raises :class:`StepSyntaxError` (or a subclass) with line and column
    for every malformed input; no other exception escapes.
    """
    if isinstance(source, (bytes, bytearray)):
        try:
            text = bytes(source).decode("utf-8")
        except UnicodeDecodeError as exc:
            prefix = bytes(source)[: exc.start].decode("utf-8")
            line, col = location(prefix, len(prefix))
            raise StepSyntaxError(line, col, "input is not valid UTF-8") from None
    else:
        text = source
    try:
        tokens = tokenize(text)
    except LexError as exc:
        line, col = location(text, exc.pos)
        raise StepSyntaxError(line, col, exc.reason) from None
    return _Parser(text, tokens).parse()


def resolve_refs(step: StepFile) -> StepFile:
    """Check every reference; returns a copy with ``dangling`` filled in."""
    ids = step.entities
    dangling = sorted(
        {(ent.id, target) for ent in ids.values() for target in ent.refs() if target not in ids}
    )
    return replace(step, dangling=tuple(dangling))


def read_step(path) -> StepFile:
    with open(path, "rb") as fh:
        return resolve_refs(parse_step(fh.read()))
