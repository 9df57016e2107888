# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Behaviour must match ``_pykernels`` exactly."""

from ._tokens import (
    BINARY, COMMA, DOLLAR, ENUM, EQUALS, INTEGER, KEYWORD, LPAREN, REAL, REF,
    RPAREN, SEMI, STAR, STRING, LexError, unexpected,
)

cdef inline bint _digit(Py_UCS4 c):
    return u'0' <= c <= u'9'

cdef inline bint _alpha(Py_UCS4 c):
    return (u'A' <= c <= u'Z') or (u'a' <= c <= u'z') or c == u'_'

cdef inline bint _hex(Py_UCS4 c):
    return _digit(c) or (u'A' <= c <= u'F') or (u'a' <= c <= u'f')


def tokenize(str text):
    """Split Part 21 text into ``(kind, text, offset)`` tokens."""
    cdef Py_ssize_t n = len(text)
    cdef Py_ssize_t pos = 0, j, k
    cdef Py_UCS4 c, d
    cdef bint real
    cdef list tokens = []
    while pos < n:
        c = text[pos]
        if c == u' ' or c == u'\t' or c == u'\r' or c == u'\n':
            pos += 1
            continue
        if c == u'/':
            if pos + 1 < n and text[pos + 1] == u'*':
                j = pos + 2
                while j + 1 < n and not (text[j] == u'*' and text[j + 1] == u'/'):
                    j += 1
                if j + 1 >= n:
                    raise LexError(pos, "unterminated comment")
                pos = j + 2
                continue
            raise LexError(pos, unexpected(c))
        if c == u"'":
            j = pos + 1
            while True:
                if j >= n:
                    raise LexError(pos, "unterminated string")
                if text[j] == u"'":
                    if j + 1 < n and text[j + 1] == u"'":
                        j += 2
                        continue
                    break
                j += 1
            tokens.append((STRING, text[pos + 1:j], pos))
            pos = j + 1
            continue
        if c == u'#':
            j = pos + 1
            while j < n and _digit(text[j]):
                j += 1
            if j == pos + 1:
                raise LexError(pos, "malformed entity reference")
            tokens.append((REF, text[pos + 1:j], pos))
            pos = j
            continue
        if _digit(c) or c == u'+' or c == u'-':
            j = pos
            if c == u'+' or c == u'-':
                j += 1
            k = j
            while j < n and _digit(text[j]):
                j += 1
            if j == k:
                raise LexError(pos, "malformed number")
            real = False
            if j < n and text[j] == u'.':
                real = True
                j += 1
                while j < n and _digit(text[j]):
                    j += 1
                if j < n and (text[j] == u'E' or text[j] == u'e'):
                    k = j + 1
                    if k < n and (text[k] == u'+' or text[k] == u'-'):
                        k += 1
                    if k < n and _digit(text[k]):
                        while k < n and _digit(text[k]):
                            k += 1
                        j = k
            tokens.append((REAL if real else INTEGER, text[pos:j], pos))
            pos = j
            continue
        if c == u'.':
            j = pos + 1
            if j < n and _alpha(text[j]):
                j += 1
                while j < n and (_alpha(text[j]) or _digit(text[j])):
                    j += 1
                if j < n and text[j] == u'.':
                    tokens.append((ENUM, text[pos + 1:j], pos))
                    pos = j + 1
                    continue
            raise LexError(pos, "malformed enumeration")
        if _alpha(c) or c == u'!':
            j = pos
            if c == u'!':
                j += 1
                if not (j < n and _alpha(text[j])):
                    raise LexError(pos, unexpected(c))
            j += 1
            while j < n:
                d = text[j]
                if _alpha(d) or _digit(d) or d == u'-':
                    j += 1
                else:
                    break
            tokens.append((KEYWORD, text[pos:j], pos))
            pos = j
            continue
        if c == u'"':
            j = pos + 1
            if j < n and u'0' <= text[j] <= u'3':
                j += 1
                while j < n and _hex(text[j]):
                    j += 1
                if j < n and text[j] == u'"':
                    tokens.append((BINARY, text[pos + 1:j], pos))
                    pos = j + 1
                    continue
            raise LexError(pos, "malformed binary literal")
        if c == u'(':
            tokens.append((LPAREN, u'(', pos))
        elif c == u')':
            tokens.append((RPAREN, u')', pos))
        elif c == u',':
            tokens.append((COMMA, u',', pos))
        elif c == u'=':
            tokens.append((EQUALS, u'=', pos))
        elif c == u';':
            tokens.append((SEMI, u';', pos))
        elif c == u'$':
            tokens.append((DOLLAR, u'$', pos))
        elif c == u'*':
            tokens.append((STAR, u'*', pos))
        else:
            raise LexError(pos, unexpected(c))
        pos += 1
    return tokens


cdef bint _pip(double x, double y, const double[:] xy, Py_ssize_t n) noexcept nogil:
    cdef bint inside = False
    cdef double ax = xy[2 * n - 2], ay = xy[2 * n - 1], bx, by, cross
    cdef Py_ssize_t i
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


def point_in_polygon(double x, double y, const double[:] xy):
    """Boundary-inclusive ray casting against a flat ``[x0, y0, x1, y1, ...]`` ring."""
    cdef Py_ssize_t n = xy.shape[0] // 2
    if n < 3:
        return False
    return bool(_pip(x, y, xy, n))


def points_in_polygon(const double[:] points, const double[:] xy):
    """Vectorised :func:`point_in_polygon` over a flat ``[x, y, x, y, ...]`` buffer."""
    cdef Py_ssize_t m = points.shape[0] // 2, n = xy.shape[0] // 2, k
    out = bytearray(m)
    cdef unsigned char[:] view = out
    if n < 3:
        return out
    with nogil:
        for k in range(m):
            view[k] = _pip(points[2 * k], points[2 * k + 1], xy, n)
    return out
