"""One knowledge module per violation pattern.

The worked examples are small standalone programs written for the prompts;
none of them is part of the evaluation fixtures.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from ..highlighter import PATTERNS


@dataclass(frozen=True)
class KnowledgeModule:
    pattern: str
    definition: str
    example_code: str
    example_report: dict

    def render_example(self) -> str:
        numbered = "\n".join(f"{i:4d} | {ln}" for i, ln in enumerate(self.example_code.splitlines(), 1))
        return f"Example program:\n{numbered}\n\nExpected reply:\n{json.dumps(self.example_report, indent=2)}"


def _ref(function: str, line: int, op: str) -> dict:
    return {"function": function, "line": line, "op": op}


_RWR_CODE = """\
int speed;
int limit;
void main() {
  if (speed > 40) {
    limit = speed - 40;
  }
}
void ISR_1() {
  speed = 0;
}"""

_WWR_CODE = """\
int mode;
int out;
void main() {
  mode = 3;
  out = mode * 2;
}
void ISR_2() {
  mode = 7;
}"""

_RWW_CODE = """\
int ticks;
void main() {
  int t = ticks;
  ticks = t + 1;
}
void ISR_1() {
  ticks = 100;
}"""

_WRW_CODE = """\
int frame[2];
void main() {
  frame[0] = 255;
  frame[0] = 0;
}
void ISR_3() {
  int peek = frame[0];
}"""

MODULES: dict[str, KnowledgeModule] = {
    "RWR": KnowledgeModule(
        "RWR",
        "A read, then a later read of the same shared variable in one task, with a "
        "write from a higher-priority ISR able to land between them. The two reads "
        "observe different values although the code assumes they agree.",
        _RWR_CODE,
        {
            "status": "violations",
            "violations": [
                {
                    "var": "speed",
                    "pattern": "RWR",
                    "a1": _ref("main", 4, "R"),
                    "a2": _ref("ISR_1", 9, "W"),
                    "a3": _ref("main", 5, "R"),
                    "rationale": "speed is checked on line 4 and used on line 5; ISR_1 may zero it in between, so limit becomes negative.",
                }
            ],
        },
    ),
    "WWR": KnowledgeModule(
        "WWR",
        "A write followed by a read of the same shared variable in one task, where "
        "a higher-priority ISR can overwrite the variable in between. The task reads "
        "back a value it did not store.",
        _WWR_CODE,
        {
            "status": "violations",
            "violations": [
                {
                    "var": "mode",
                    "pattern": "WWR",
                    "a1": _ref("main", 4, "W"),
                    "a2": _ref("ISR_2", 8, "W"),
                    "a3": _ref("main", 5, "R"),
                    "rationale": "main stores 3 and expects to read 3 back; ISR_2 can store 7 first.",
                }
            ],
        },
    ),
    "RWW": KnowledgeModule(
        "RWW",
        "A read followed by a write of the same shared variable in one task, with an "
        "ISR write possible in between. The task's write is computed from a stale "
        "value and the ISR's update is lost.",
        _RWW_CODE,
        {
            "status": "violations",
            "violations": [
                {
                    "var": "ticks",
                    "pattern": "RWW",
                    "a1": _ref("main", 3, "R"),
                    "a2": _ref("ISR_1", 7, "W"),
                    "a3": _ref("main", 4, "W"),
                    "rationale": "the increment spans lines 3 and 4; a reset by ISR_1 in between is overwritten.",
                }
            ],
        },
    ),
    "WRW": KnowledgeModule(
        "WRW",
        "Two writes of the same shared variable in one task, where a higher-priority "
        "ISR can read the intermediate value between them. The ISR sees a state the "
        "task meant to be transient.",
        _WRW_CODE,
        {
            "status": "violations",
            "violations": [
                {
                    "var": "frame",
                    "pattern": "WRW",
                    "a1": _ref("main", 3, "W"),
                    "a2": _ref("ISR_3", 7, "R"),
                    "a3": _ref("main", 4, "W"),
                    "rationale": "ISR_3 can observe the temporary 255 stored on line 3 before line 4 clears it.",
                }
            ],
        },
    ),
}

assert tuple(MODULES) == PATTERNS or set(MODULES) == set(PATTERNS)


def module_for(pattern: str) -> KnowledgeModule:
    return MODULES[pattern]


def modules_for(patterns) -> list[KnowledgeModule]:
    return [MODULES[p] for p in PATTERNS if p in patterns]
