"""C-subset frontend: parsing, CFGs and the normalized program model."""

from .cfg import CFG, BasicBlock, build_cfg
from .program import (
    FunctionDef,
    GlobalVar,
    IndexClass,
    ProgramModel,
    VarPath,
    parse_program,
    var_key,
)

__all__ = [
    "CFG",
    "BasicBlock",
    "FunctionDef",
    "GlobalVar",
    "IndexClass",
    "ProgramModel",
    "VarPath",
    "build_cfg",
    "parse_program",
    "var_key",
]
