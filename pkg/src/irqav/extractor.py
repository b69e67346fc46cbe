"""Reachability-based program compression.

Functions not reachable from any scheduling root are replaced by a one-line
``/* elided: name */`` marker. Everything else (globals, prototypes, retained
functions, comments between them) is copied verbatim, and a line map records
where each retained line came from.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .access import CallGraph, EntrySet, reachable_from
from .model.program import ProgramModel


@dataclass(frozen=True)
class CompressedSource:
    text: str
    # compressed line -> original line, for every retained line
    line_map: dict[int, int]
    retained_functions: frozenset[str]
    elided: tuple[str, ...] = ()

    @property
    def compressed(self) -> bool:
        return bool(self.elided)

    def to_original(self, line: int) -> int:
        return self.line_map[line]

    def to_compressed(self, line: int) -> int:
        return self.reverse_map[line]

    @property
    def reverse_map(self) -> dict[int, int]:
        return {o: c for c, o in self.line_map.items()}

    def to_json(self) -> dict:
        return {
            "text": self.text,
            "line_map": {str(k): v for k, v in sorted(self.line_map.items())},
            "retained_functions": sorted(self.retained_functions),
            "elided": list(self.elided),
        }

    def dump(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def reachable_functions(entry: EntrySet, g: CallGraph) -> set[str]:
    """Callee closure of the entry set (FIFO worklist)."""
    return set(reachable_from(g, entry))


def extract(source: str, model: ProgramModel, reach: set[str]) -> CompressedSource:
    """Drop the bodies of functions outside ``reach``."""
    lines = split_lines(source)
    spans = [s for s in model.spans if s[0] == "function"]
    # a function is removable only if no other top-level item shares its lines
    occupied: dict[int, int] = {}
    for s in model.spans:
        for ln in range(s[2], s[3] + 1):
            occupied[ln] = occupied.get(ln, 0) + 1
    drop: dict[int, tuple[str, int]] = {}  # first line -> (name, last line)
    elided: list[str] = []
    retained = set(reach)
    for kind, name, start, end in spans:
        if name in reach:
            continue
        if any(occupied[ln] > 1 for ln in range(start, end + 1)):
            retained.add(name)
            continue
        drop[start] = (name, end)
        elided.append(name)
    out: list[str] = []
    line_map: dict[int, int] = {}
    ln = 1
    while ln <= len(lines):
        if ln in drop:
            name, end = drop[ln]
            eol = _eol(lines[end - 1])
            out.append(f"/* elided: {name} */{eol}")
            ln = end + 1
            continue
        out.append(lines[ln - 1])
        line_map[len(out)] = ln
        ln += 1
    return CompressedSource("".join(out), line_map, frozenset(retained), tuple(elided))


def split_lines(text: str) -> list[str]:
    """Lines with their terminators; only newline ends a line, matching the parser."""
    return re.findall(r"[^\n]*\n|[^\n]+$", text)


def _eol(line: str) -> str:
    if line.endswith("\r\n"):
        return "\r\n"
    if line.endswith("\n"):
        return "\n"
    return ""


_COMMENT_ONLY = re.compile(r"^\s*(//.*|/\*.*\*/\s*)$")


def count_loc(text: str) -> int:
    """Lines of code: non-blank lines that are not a lone comment."""
    n = 0
    in_block = False
    for line in text.splitlines():
        s = line.strip()
        if in_block:
            if "*/" in s:
                in_block = False
                s = s.split("*/", 1)[1].strip()
            else:
                continue
        if not s or _COMMENT_ONLY.match(s):
            continue
        if s.startswith("/*") and "*/" not in s:
            in_block = True
            continue
        n += 1
    return n
