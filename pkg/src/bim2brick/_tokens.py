"""Token kinds shared by the compiled and pure-Python STEP lexers."""

KEYWORD = 1
REF = 2
INTEGER = 3
REAL = 4
STRING = 5
ENUM = 6
BINARY = 7
LPAREN = 8
RPAREN = 9
COMMA = 10
EQUALS = 11
SEMI = 12
DOLLAR = 13
STAR = 14

NAMES = {
    KEYWORD: "keyword",
    REF: "entity reference",
    INTEGER: "integer",
    REAL: "real",
    STRING: "string",
    ENUM: "enumeration",
    BINARY: "binary",
    LPAREN: "'('",
    RPAREN: "')'",
    COMMA: "','",
    EQUALS: "'='",
    SEMI: "';'",
    DOLLAR: "'$'",
    STAR: "'*'",
}


class LexError(ValueError):
    """Raised by a lexer kernel; ``pos`` is a character offset into the input."""

    def __init__(self, pos, reason):
        super().__init__(f"{reason} at offset {pos}")
        self.pos = pos
        self.reason = reason


def unexpected(ch):
    return f"unexpected character {ch!r}"
