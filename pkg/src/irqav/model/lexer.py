"""Tokenizer for the supported C subset.

Comments are dropped, ``#include`` lines are skipped (recorded so the parser
can report them), every other preprocessor directive is rejected.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import CSyntaxError, UnsupportedConstruct

KEYWORDS = frozenset(
    """
    int unsigned signed char short long void struct union enum typedef
    if else while for do switch case default goto break continue return
    volatile const static extern register inline sizeof float double
    """.split()
)

# longest operators first
_PUNCT = sorted(
    """
    <<= >>= -> ++ -- << >> <= >= == != && || += -= *= /= %= &= |= ^= ...
    + - * / % & | ^ ~ ! < > = ? : ; , . ( ) [ ] { }
    """.split(),
    key=len,
    reverse=True,
)

_NUMBER = re.compile(r"0[xX][0-9a-fA-F]+[uUlL]*|[0-9]+(\.[0-9]*)?([eE][+-]?[0-9]+)?[uUlLfF]*")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_CHAR = re.compile(r"'(\\.|[^\\'])'")
_STRING = re.compile(r'"(\\.|[^\\"\n])*"')

_ESCAPES = {"n": 10, "t": 9, "r": 13, "0": 0, "\\": 92, "'": 39, '"': 34}


@dataclass(frozen=True)
class Token:
    kind: str  # ident | keyword | int | string | punct | eof
    text: str
    line: int
    col: int
    value: int = 0


def tokenize(source: str) -> tuple[list[Token], list[int]]:
    """Return the token list and the lines of skipped ``#include`` directives."""
    tokens: list[Token] = []
    includes: list[int] = []
    i, line, col = 0, 1, 1
    n = len(source)
    at_line_start = True

    def advance(k: int) -> None:
        nonlocal i, line, col
        for ch in source[i : i + k]:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
        i += k

    while i < n:
        ch = source[i]
        if ch == "\n":
            advance(1)
            at_line_start = True
            continue
        if ch in " \t\r\f\v":
            advance(1)
            continue
        if source.startswith("//", i):
            j = source.find("\n", i)
            advance((n if j < 0 else j) - i)
            continue
        if source.startswith("/*", i):
            j = source.find("*/", i + 2)
            if j < 0:
                raise CSyntaxError(line, "unterminated comment")
            advance(j + 2 - i)
            continue
        if ch == "#" and at_line_start:
            j = source.find("\n", i)
            directive = source[i : (n if j < 0 else j)]
            if re.match(r"#\s*include\b", directive):
                includes.append(line)
                advance(len(directive))
                continue
            raise UnsupportedConstruct(line, f"preprocessor directive {directive.split()[0]!r}")
        at_line_start = False
        start_line, start_col = line, col
        m = _IDENT.match(source, i)
        if m:
            text = m.group()
            kind = "keyword" if text in KEYWORDS else "ident"
            tokens.append(Token(kind, text, start_line, start_col))
            advance(len(text))
            continue
        m = _NUMBER.match(source, i)
        if m:
            text = m.group()
            if m.group(1) is not None or m.group(2) is not None or text[-1] in "fF" and not text.lower().startswith("0x"):
                raise UnsupportedConstruct(start_line, "floating point literal")
            digits = text.rstrip("uUlL")
            value = int(digits, 16) if digits.lower().startswith("0x") else int(digits, 8 if len(digits) > 1 and digits[0] == "0" else 10)
            tokens.append(Token("int", text, start_line, start_col, value))
            advance(len(text))
            continue
        m = _CHAR.match(source, i)
        if m:
            body = m.group(1)
            value = _ESCAPES.get(body[1], ord(body[1])) if body.startswith("\\") else ord(body)
            tokens.append(Token("int", m.group(), start_line, start_col, value))
            advance(len(m.group()))
            continue
        m = _STRING.match(source, i)
        if m:
            tokens.append(Token("string", m.group(), start_line, start_col))
            advance(len(m.group()))
            continue
        for p in _PUNCT:
            if source.startswith(p, i):
                tokens.append(Token("punct", p, start_line, start_col))
                advance(len(p))
                break
        else:
            raise CSyntaxError(line, f"unexpected character {ch!r}")
    tokens.append(Token("eof", "", line, col))
    return tokens, includes
