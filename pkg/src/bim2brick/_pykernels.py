"""Pure-Python kernels. Behaviour must match ``_ckernels.pyx`` exactly."""
from __future__ import annotations

import re

from ._tokens import (
    BINARY, COMMA, DOLLAR, ENUM, EQUALS, INTEGER, KEYWORD, LPAREN, REAL, REF,
    RPAREN, SEMI, STAR, STRING, LexError, unexpected,
)

_MASTER = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>/\*.*?\*/)
  | '(?P<string>[^']*(?:''[^']*)*)'(?!')
  | \#(?P<ref>[0-9]+)
  | (?P<number>[+-]?[0-9]+(?P<frac>\.[0-9]*(?:[eE][+-]?[0-9]+)?)?)
  | \.(?P<enum>[A-Za-z_][A-Za-z0-9_]*)\.
  | (?P<keyword>!?[A-Za-z_][A-Za-z0-9_\-]*)
  | "(?P<binary>[0-3][0-9A-Fa-f]*)"
  | (?P<punct>[(),=;$*])
    """,
    re.VERBOSE | re.DOTALL,
)

_PUNCT = {"(": LPAREN, ")": RPAREN, ",": COMMA, "=": EQUALS, ";": SEMI, "$": DOLLAR, "*": STAR}


def _failure(text: str, pos: int) -> LexError:
    ch = text[pos]
    if ch == "/" and text.startswith("/*", pos):
        return LexError(pos, "unterminated comment")
    if ch == "'":
        return LexError(pos, "unterminated string")
    if ch == '"':
        return LexError(pos, "malformed binary literal")
    if ch == "#":
        return LexError(pos, "malformed entity reference")
    if ch == ".":
        return LexError(pos, "malformed enumeration")
    if ch in "+-":
        return LexError(pos, "malformed number")
    return LexError(pos, unexpected(ch))


def tokenize(text: str) -> list[tuple[int, str, int]]:
    """Split Part 21 text into ``(kind, text, offset)`` tokens.

    Comments and whitespace are dropped. String tokens carry the raw
    content between the quotes (doubled apostrophes and backslash
    escapes untouched); enumerations carry the bare name.
    """
    tokens = []
    append = tokens.append
    match = _MASTER.match
    pos = 0
    end = len(text)
    while pos < end:
        m = match(text, pos)
        if m is None:
            raise _failure(text, pos)
        group = m.lastgroup
        if group == "punct":
            append((_PUNCT[m.group(group)], m.group(group), pos))
        elif group == "keyword":
            append((KEYWORD, m.group(group), pos))
        elif group == "ref":
            append((REF, m.group(group), pos))
        elif group == "number" or group == "frac":
            append((REAL if m.group("frac") is not None else INTEGER, m.group("number"), pos))
        elif group == "string":
            append((STRING, m.group(group), pos))
        elif group == "enum":
            append((ENUM, m.group(group), pos))
        elif group == "binary":
            append((BINARY, m.group(group), pos))
        pos = m.end()
    return tokens


def point_in_polygon(x: float, y: float, xy) -> bool:
    """Boundary-inclusive ray casting against a flat ``[x0, y0, x1, y1, ...]`` ring."""
    n = len(xy) // 2
    if n < 3:
        return False
    inside = False
    ax = xy[2 * n - 2]
    ay = xy[2 * n - 1]
    for i in range(n):
        bx = xy[2 * i]
        by = xy[2 * i + 1]
        cross = (bx - ax) * (y - ay) - (x - ax) * (by - ay)
        if cross == 0.0 and min(ax, bx) <= x <= max(ax, bx) and min(ay, by) <= y <= max(ay, by):
            return True
        if (ay > y) != (by > y):
            if by > ay:
                if cross > 0.0:
                    inside = not inside
            elif cross < 0.0:
                inside = not inside
        ax = bx
        ay = by
    return inside


def points_in_polygon(points, xy) -> bytearray:
    """Vectorised :func:`point_in_polygon` over a flat ``[x, y, x, y, ...]`` buffer."""
    out = bytearray(len(points) // 2)
    for k in range(len(out)):
        out[k] = point_in_polygon(points[2 * k], points[2 * k + 1], xy)
    return out
