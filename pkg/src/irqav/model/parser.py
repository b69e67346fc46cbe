"""Recursive-descent parser for the supported C subset.

The grammar covers int/unsigned/char scalars, one-dimensional arrays,
single-level structs, pointers to scalars, the usual statements
(if/else, while, for, return, break, continue) and integer expressions.
Anything else raises :class:`UnsupportedConstruct` instead of being skipped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import CSyntaxError, UnsupportedConstruct
from . import syntax as S
from .lexer import Token, tokenize

_QUALIFIERS = {"volatile", "const", "static", "extern", "register", "inline"}
_TYPE_WORDS = {"int", "unsigned", "signed", "char", "short", "long", "void"}
_REJECTED_TYPES = {"float": "floating point", "double": "floating point", "union": "union", "enum": "enum", "typedef": "typedef"}
_ASSIGN_OPS = {"=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="}

_BINARY_LEVELS = [
    ("||",),
    ("&&",),
    ("|",),
    ("^",),
    ("&",),
    ("==", "!="),
    ("<", ">", "<=", ">="),
    ("<<", ">>"),
    ("+", "-"),
    ("*", "/", "%"),
]


@dataclass
class ParsedFunction:
    name: str
    return_type: S.CType
    params: tuple[S.VarDecl, ...]
    body: S.Block | None  # None for a prototype
    line: int
    end_line: int


@dataclass
class ParsedGlobal:
    decl: S.VarDecl
    end_line: int


@dataclass
class ParseResult:
    functions: list[ParsedFunction] = field(default_factory=list)
    globals: list[ParsedGlobal] = field(default_factory=list)
    structs: dict[str, tuple[str, ...]] = field(default_factory=dict)
    includes: list[int] = field(default_factory=list)
    # (first_line, last_line) of every top-level item, in order
    spans: list[tuple[str, str, int, int]] = field(default_factory=list)


class Parser:
    def __init__(self, source: str):
        self.tokens, includes = tokenize(source)
        self.pos = 0
        self.next_nid = 0
        self.next_ordinal = 0
        self.result = ParseResult(includes=includes)
        self._anon = 0

    # -- token helpers -------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("punct", "keyword") and t.text in texts

    def take(self) -> Token:
        t = self.tok
        self.pos += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise CSyntaxError(self.tok.line, f"expected {text!r}, found {self.tok.text or 'end of file'!r}")
        return self.take()

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            raise CSyntaxError(self.tok.line, f"expected identifier, found {self.tok.text or 'end of file'!r}")
        return self.take()

    def nid(self) -> int:
        self.next_nid += 1
        return self.next_nid

    def ordinal(self) -> int:
        o = self.next_ordinal
        self.next_ordinal += 1
        return o

    # -- types ---------------------------------------------------------------

    def at_type_start(self) -> bool:
        t = self.tok
        if t.kind != "keyword":
            return False
        if t.text in _REJECTED_TYPES:
            raise UnsupportedConstruct(t.line, _REJECTED_TYPES[t.text])
        return t.text in _TYPE_WORDS or t.text in _QUALIFIERS or t.text == "struct"

    def parse_base_type(self) -> S.CType:
        words: list[str] = []
        line = self.tok.line
        while self.tok.kind == "keyword" and (self.tok.text in _TYPE_WORDS or self.tok.text in _QUALIFIERS or self.tok.text in _REJECTED_TYPES or self.tok.text == "struct"):
            t = self.take()
            if t.text in _REJECTED_TYPES:
                raise UnsupportedConstruct(t.line, _REJECTED_TYPES[t.text])
            if t.text == "struct":
                if words and any(w in _TYPE_WORDS for w in words):
                    raise CSyntaxError(t.line, "struct mixed with scalar type words")
                return self.parse_struct_type(t.line)
            if t.text in _TYPE_WORDS:
                words.append(t.text)
        if not words:
            raise CSyntaxError(line, "expected a type")
        if "void" in words:
            return S.CType("void")
        unsigned = "unsigned" in words
        if "char" in words:
            width = "char"
        elif "short" in words:
            width = "short"
        elif "long" in words:
            width = "long"
        else:
            width = "int"
        return S.CType(f"unsigned {width}" if unsigned else width)

    def parse_struct_type(self, line: int) -> S.CType:
        tag = None
        if self.tok.kind == "ident":
            tag = self.take().text
        if self.at("{"):
            self.take()
            names: list[str] = []
            while not self.at("}"):
                ftype = self.parse_base_type()
                while True:
                    ptr, name_tok, arr = self.parse_declarator()
                    if ptr or arr is not None or ftype.is_struct:
                        raise UnsupportedConstruct(name_tok.line, "struct field that is not an integer scalar")
                    if name_tok.text in names:
                        raise CSyntaxError(name_tok.line, f"duplicate struct field {name_tok.text!r}")
                    names.append(name_tok.text)
                    if self.at(","):
                        self.take()
                        continue
                    break
                self.expect(";")
            self.expect("}")
            if not names:
                raise CSyntaxError(line, "empty struct")
            if tag is None:
                self._anon += 1
                tag = f"<anon{self._anon}>"
            self.result.structs[tag] = tuple(names)
        elif tag is None:
            raise CSyntaxError(line, "struct without tag or body")
        if tag not in self.result.structs:
            raise CSyntaxError(line, f"unknown struct {tag!r}")
        return S.CType(f"struct {tag}", fields=self.result.structs[tag])

    def parse_declarator(self) -> tuple[bool, Token, int | None]:
        ptr = False
        if self.at("*"):
            self.take()
            ptr = True
            if self.at("*"):
                raise UnsupportedConstruct(self.tok.line, "pointer to pointer")
        if self.at("("):
            raise UnsupportedConstruct(self.tok.line, "function pointer")
        while self.at("const", "volatile"):
            self.take()
        name = self.ident()
        arr = None
        if self.at("["):
            self.take()
            e = self.parse_expr()
            arr = self.const_value(e)
            if arr is None:
                raise UnsupportedConstruct(name.line, "array length that is not a constant")
            if arr < 1:
                raise CSyntaxError(name.line, "array length must be >= 1")
            self.expect("]")
            if self.at("["):
                raise UnsupportedConstruct(name.line, "multi-dimensional array")
            if ptr:
                raise UnsupportedConstruct(name.line, "array of pointers")
        return ptr, name, arr

    @staticmethod
    def make_type(base: S.CType, ptr: bool, arr: int | None, line: int) -> S.CType:
        if ptr and base.is_struct:
            raise UnsupportedConstruct(line, "pointer to struct")
        if arr is not None and base.is_struct:
            raise UnsupportedConstruct(line, "array of structs")
        if base.base == "void" and not ptr:
            return base
        if base.base == "void" and ptr:
            raise UnsupportedConstruct(line, "void pointer")
        return S.CType(base.base, pointer=ptr, array_len=arr, fields=base.fields)

    def const_value(self, e: S.Expr) -> int | None:
        if isinstance(e, S.IntLit):
            return e.value
        if isinstance(e, S.Unary) and e.op == "-":
            v = self.const_value(e.operand)
            return None if v is None else -v
        if isinstance(e, S.Unary) and e.op == "+":
            return self.const_value(e.operand)
        if isinstance(e, S.Binary):
            a, b = self.const_value(e.left), self.const_value(e.right)
            if a is None or b is None:
                return None
            try:
                return _fold(e.op, a, b)
            except ZeroDivisionError:
                return None
        return None

    # -- top level -----------------------------------------------------------

    def parse_program(self) -> ParseResult:
        while self.tok.kind != "eof":
            start = self.tok.line
            if self.at(";"):
                self.take()
                continue
            if not self.at_type_start():
                raise CSyntaxError(self.tok.line, f"expected a declaration, found {self.tok.text!r}")
            base = self.parse_base_type()
            if self.at(";"):  # bare struct definition
                self.take()
                self.result.spans.append(("struct", base.base, start, self.tokens[self.pos - 1].line))
                continue
            ptr, name, arr = self.parse_declarator()
            if self.at("("):
                self.parse_function(base, ptr, name, arr, start)
                continue
            self.parse_global_rest(base, ptr, name, arr, start)
        return self.result

    def parse_global_rest(self, base: S.CType, ptr: bool, name: Token, arr: int | None, start: int) -> None:
        names = []
        while True:
            ctype = self.make_type(base, ptr, arr, name.line)
            if ctype.base == "void":
                raise CSyntaxError(name.line, "variable of type void")
            init = None
            if self.at("="):
                self.take()
                init = self.parse_initializer(ctype, name.line)
            names.append(S.VarDecl(name.text, ctype, init, name.line, name.col))
            if self.at(","):
                self.take()
                ptr, name, arr = self.parse_declarator()
                continue
            break
        end = self.expect(";").line
        for d in names:
            self.result.globals.append(ParsedGlobal(d, end))
            self.result.spans.append(("global", d.name, start, end))

    def parse_initializer(self, ctype: S.CType, line: int):
        if self.at("{"):
            self.take()
            items: list[S.Expr] = []
            while not self.at("}"):
                items.append(self.parse_assign())
                if not self.at("}"):
                    self.expect(",")
            self.expect("}")
            if ctype.kind == "array" and len(items) > (ctype.array_len or 0):
                raise CSyntaxError(line, "too many array initializers")
            if ctype.kind == "struct" and len(items) > len(ctype.fields):
                raise CSyntaxError(line, "too many struct initializers")
            if ctype.kind in ("scalar", "pointer"):
                raise CSyntaxError(line, "brace initializer for a scalar")
            return tuple(items)
        if ctype.kind in ("array", "struct"):
            raise UnsupportedConstruct(line, "aggregate initialized from an expression")
        return self.parse_assign()

    def parse_function(self, ret: S.CType, ptr: bool, name: Token, arr: int | None, start: int) -> None:
        if arr is not None:
            raise CSyntaxError(name.line, "function returning an array")
        rtype = self.make_type(ret, ptr, None, name.line)
        self.expect("(")
        params: list[S.VarDecl] = []
        if self.at("void") and self.peek().text == ")":
            self.take()
        while not self.at(")"):
            if self.at("..."):
                raise UnsupportedConstruct(self.tok.line, "varargs")
            pbase = self.parse_base_type()
            pptr, pname, parr = self.parse_declarator()
            if parr is not None:
                raise UnsupportedConstruct(pname.line, "array parameter")
            if pbase.is_struct:
                raise UnsupportedConstruct(pname.line, "struct parameter")
            params.append(S.VarDecl(pname.text, self.make_type(pbase, pptr, None, pname.line), None, pname.line, pname.col))
            if not self.at(")"):
                self.expect(",")
        self.expect(")")
        if self.at(";"):
            end = self.take().line
            self.result.functions.append(ParsedFunction(name.text, rtype, tuple(params), None, name.line, end))
            self.result.spans.append(("prototype", name.text, start, end))
            return
        self.next_ordinal = 0
        body = self.parse_block()
        end = self.tokens[self.pos - 1].line
        self.result.functions.append(ParsedFunction(name.text, rtype, tuple(params), body, name.line, end))
        self.result.spans.append(("function", name.text, start, end))

    # -- statements ----------------------------------------------------------

    def parse_block(self) -> S.Block:
        line = self.expect("{").line
        stmts: list[S.Stmt] = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise CSyntaxError(self.tok.line, "unexpected end of file inside block")
            stmts.extend(self.parse_statement())
        self.expect("}")
        return S.Block(tuple(stmts), line)

    def unit(self, tok: Token, kind: str, expr: S.Expr | None, decl: S.VarDecl | None = None) -> S.Unit:
        return S.Unit(self.ordinal(), tok.line, tok.col, kind, expr, decl)

    def parse_statement(self) -> list[S.Stmt]:
        t = self.tok
        if t.kind == "keyword":
            if t.text in ("do", "switch", "goto", "case", "default"):
                raise UnsupportedConstruct(t.line, f"{t.text} statement")
            if t.text == "sizeof":
                raise UnsupportedConstruct(t.line, "sizeof")
            if t.text == "if":
                self.take()
                self.expect("(")
                cond = self.unit(self.tok, "cond", self.parse_expr())
                self.expect(")")
                then = self.parse_single()
                other = None
                if self.at("else"):
                    self.take()
                    other = self.parse_single()
                return [S.If(cond, then, other)]
            if t.text == "while":
                self.take()
                self.expect("(")
                cond = self.unit(self.tok, "cond", self.parse_expr())
                self.expect(")")
                return [S.While(cond, self.parse_single())]
            if t.text == "for":
                return [self.parse_for()]
            if t.text == "return":
                self.take()
                expr = None if self.at(";") else self.parse_expr()
                self.expect(";")
                return [S.Return(self.unit(t, "return", expr))]
            if t.text == "break":
                self.take()
                self.expect(";")
                return [S.Break(t.line)]
            if t.text == "continue":
                self.take()
                self.expect(";")
                return [S.Continue(t.line)]
            if self.at_type_start():
                return list(self.parse_local_decl())
        if self.at("{"):
            return [self.parse_block()]
        if self.at(";"):
            self.take()
            return [S.Empty(t.line)]
        expr = self.parse_expr()
        self.expect(";")
        return [S.ExprStmt(self.unit(t, "expr", expr))]

    def parse_single(self) -> S.Stmt:
        stmts = self.parse_statement()
        if len(stmts) == 1:
            return stmts[0]
        return S.Block(tuple(stmts), stmts[0].unit.line if stmts else self.tok.line)  # type: ignore[union-attr]

    def parse_local_decl(self):
        first = self.tok
        base = self.parse_base_type()
        if base.base == "void":
            raise CSyntaxError(first.line, "local of type void")
        while True:
            ptr, name, arr = self.parse_declarator()
            ctype = self.make_type(base, ptr, arr, name.line)
            if ctype.is_struct:
                raise UnsupportedConstruct(name.line, "local struct variable")
            init = None
            if self.at("="):
                self.take()
                init = self.parse_initializer(ctype, name.line)
            decl = S.VarDecl(name.text, ctype, init, name.line, name.col)
            yield S.DeclStmt(S.Unit(self.ordinal(), name.line, name.col, "decl", None, decl))
            if self.at(","):
                self.take()
                continue
            break
        self.expect(";")

    def parse_for(self) -> S.For:
        t = self.take()
        self.expect("(")
        init = None
        if self.at_type_start():
            decls = list(self.parse_local_decl())  # consumes the ';'
            if len(decls) != 1:
                raise UnsupportedConstruct(t.line, "multiple declarations in for-init")
            init = S.Unit(decls[0].unit.ordinal, decls[0].unit.line, decls[0].unit.col, "init", None, decls[0].unit.decl)
        else:
            if not self.at(";"):
                init = self.unit(self.tok, "init", self.parse_expr())
            self.expect(";")
        cond = None
        if not self.at(";"):
            cond = self.unit(self.tok, "cond", self.parse_expr())
        self.expect(";")
        step = None
        if not self.at(")"):
            step = self.unit(self.tok, "step", self.parse_expr())
        self.expect(")")
        body = self.parse_single()
        return S.For(init, cond, step, body, t.line)

    # -- expressions ---------------------------------------------------------

    def parse_expr(self) -> S.Expr:
        e = self.parse_assign()
        if self.at(","):
            raise UnsupportedConstruct(self.tok.line, "comma operator")
        return e

    def parse_assign(self) -> S.Expr:
        left = self.parse_conditional()
        if self.at(*_ASSIGN_OPS):
            op = self.take()
            right = self.parse_assign()
            if not _is_lvalue(left):
                raise CSyntaxError(op.line, "assignment to a non-lvalue")
            return S.Assign(self.nid(), op.line, left.col, op.text, left, right)
        return left

    def parse_conditional(self) -> S.Expr:
        test = self.parse_binary(0)
        if self.at("?"):
            q = self.take()
            then = self.parse_assign()
            self.expect(":")
            other = self.parse_conditional()
            return S.Cond(self.nid(), q.line, test.col, test, then, other)
        return test

    def parse_binary(self, level: int) -> S.Expr:
        if level == len(_BINARY_LEVELS):
            return self.parse_unary()
        left = self.parse_binary(level + 1)
        while self.tok.kind == "punct" and self.tok.text in _BINARY_LEVELS[level]:
            op = self.take()
            right = self.parse_binary(level + 1)
            cls = S.Logical if op.text in ("&&", "||") else S.Binary
            left = cls(self.nid(), op.line, left.col, op.text, left, right)
        return left

    def parse_unary(self) -> S.Expr:
        t = self.tok
        if t.kind == "keyword" and t.text == "sizeof":
            raise UnsupportedConstruct(t.line, "sizeof")
        if self.at("++", "--"):
            self.take()
            target = self.parse_unary()
            if not _is_lvalue(target):
                raise CSyntaxError(t.line, f"{t.text} applied to a non-lvalue")
            return S.IncDec(self.nid(), t.line, t.col, t.text, True, target)
        if self.at("-", "+", "!", "~"):
            self.take()
            operand = self.parse_unary()
            return S.Unary(self.nid(), t.line, t.col, t.text, operand)
        if self.at("*"):
            self.take()
            operand = self.parse_unary()
            if isinstance(operand, S.Deref):
                raise UnsupportedConstruct(t.line, "double dereference")
            return S.Deref(self.nid(), t.line, t.col, operand)
        if self.at("&"):
            self.take()
            operand = self.parse_unary()
            if not isinstance(operand, (S.Name, S.Index, S.Field)):
                raise UnsupportedConstruct(t.line, "address of a non-variable")
            return S.AddrOf(self.nid(), t.line, t.col, operand)
        if self.at("(") and self.peek().kind == "keyword" and (self.peek().text in _TYPE_WORDS or self.peek().text in _QUALIFIERS or self.peek().text in _REJECTED_TYPES or self.peek().text == "struct"):
            self.take()
            base = self.parse_base_type()
            ptr = False
            if self.at("*"):
                self.take()
                ptr = True
            self.expect(")")
            if ptr or base.is_struct or base.base == "void":
                raise UnsupportedConstruct(t.line, "non-integer cast")
            operand = self.parse_unary()
            return S.Cast(self.nid(), t.line, t.col, base, operand)
        return self.parse_postfix()

    def parse_postfix(self) -> S.Expr:
        e = self.parse_primary()
        while True:
            t = self.tok
            if self.at("["):
                if not isinstance(e, S.Name):
                    raise UnsupportedConstruct(t.line, "indexing a non-variable")
                self.take()
                idx = self.parse_expr()
                self.expect("]")
                e = S.Index(self.nid(), e.line, e.col, e, idx)
            elif self.at("."):
                if not isinstance(e, S.Name):
                    raise UnsupportedConstruct(t.line, "nested member access")
                self.take()
                fname = self.ident()
                e = S.Field(self.nid(), e.line, e.col, e, fname.text)
            elif self.at("->"):
                raise UnsupportedConstruct(t.line, "pointer member access '->'")
            elif self.at("("):
                if not isinstance(e, S.Name):
                    raise UnsupportedConstruct(t.line, "call through a function pointer")
                self.take()
                args: list[S.Expr] = []
                while not self.at(")"):
                    args.append(self.parse_assign())
                    if not self.at(")"):
                        self.expect(",")
                self.expect(")")
                e = S.Call(self.nid(), e.line, e.col, e.id, tuple(args))
            elif self.at("++", "--"):
                if not _is_lvalue(e):
                    raise CSyntaxError(t.line, f"{t.text} applied to a non-lvalue")
                self.take()
                e = S.IncDec(self.nid(), e.line, e.col, t.text, False, e)
            else:
                return e

    def parse_primary(self) -> S.Expr:
        t = self.tok
        if t.kind == "int":
            self.take()
            return S.IntLit(self.nid(), t.line, t.col, t.value)
        if t.kind == "string":
            self.take()
            return S.StrLit(self.nid(), t.line, t.col, t.text)
        if t.kind == "ident":
            self.take()
            return S.Name(self.nid(), t.line, t.col, t.text)
        if self.at("("):
            self.take()
            e = self.parse_expr()
            self.expect(")")
            return e
        if t.kind == "eof":
            raise CSyntaxError(t.line, "unexpected end of file")
        raise CSyntaxError(t.line, f"unexpected token {t.text!r}")


def _is_lvalue(e: S.Expr) -> bool:
    return isinstance(e, (S.Name, S.Index, S.Field, S.Deref))


def c_div(a: int, b: int) -> int:
    """Integer division truncating toward zero, as in C."""
    q = abs(a) // abs(b)
    return q if (a < 0) == (b < 0) else -q


def _fold(op: str, a: int, b: int) -> int:
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return c_div(a, b)
    if op == "%":
        return a - c_div(a, b) * b
    if op == "<<":
        return a << b
    if op == ">>":
        return a >> b
    if op == "&":
        return a & b
    if op == "|":
        return a | b
    if op == "^":
        return a ^ b
    if op == "==":
        return int(a == b)
    if op == "!=":
        return int(a != b)
    if op == "<":
        return int(a < b)
    if op == ">":
        return int(a > b)
    if op == "<=":
        return int(a <= b)
    if op == ">=":
        return int(a >= b)
    raise ValueError(op)


fold_binary = _fold


def parse_source(source: str) -> ParseResult:
    return Parser(source).parse_program()
