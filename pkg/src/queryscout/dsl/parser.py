"""Tokenizer and recursive-descent parsers for the query dialects.

Parsing is lenient about whitespace and keyword case but strict about
names: every table, column, and function must exist in the dialect's
schema. ``_`` parses as a blank, so template text round-trips through
the same parser.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import DialectError, ParseError
from . import grammar
from .nodes import (
    AggCall,
    And,
    Assign,
    Blank,
    BoolLit,
    Column,
    Compare,
    Dialect,
    FilterCall,
    FuncName,
    GroupbyCall,
    IntLit,
    Or,
    Program,
    QueryAst,
    Select,
    Star,
    StrLit,
    TableRef,
    VarRef,
)

KEYWORDS = {"SELECT", "FROM", "WHERE", "AND", "OR"}
BOOL_WORDS = {"true": True, "false": False}


@dataclass(frozen=True)
class Token:
    kind: str   # IDENT NUMBER STRING SYMBOL EOF
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        start_col = col
        # the special 5-tuple key starts with a digit
        if text.startswith(grammar.FIVE_TUPLE, i):
            tokens.append(Token("IDENT", grammar.FIVE_TUPLE, line, start_col))
            i += len(grammar.FIVE_TUPLE)
            col += len(grammar.FIVE_TUPLE)
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(Token("NUMBER", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token("IDENT", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if ch == '"':
            j = i + 1
            while j < n and text[j] != '"':
                if text[j] == "\n":
                    raise ParseError("unterminated string literal", line, start_col)
                j += 1
            if j >= n:
                raise ParseError("unterminated string literal", line, start_col)
            tokens.append(Token("STRING", text[i + 1 : j], line, start_col))
            col += j - i + 1
            i = j + 1
            continue
        if ch == "=" and i + 1 < n and text[i + 1] == "=":
            tokens.append(Token("SYMBOL", "==", line, start_col))
            i += 2
            col += 2
            continue
        if ch in "()[],;=><*":
            tokens.append(Token("SYMBOL", ch, line, start_col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", line, start_col)
    tokens.append(Token("EOF", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token], dialect: Dialect):
        self.tokens = tokens
        self.pos = 0
        self.dialect = dialect
        self.schema = grammar.schema_for(dialect)
        self.blank_count = 0
        self.vars: dict[str, VarRef] = {}

    # token helpers ------------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_symbol(self, sym: str) -> Token:
        tok = self.peek()
        if tok.kind != "SYMBOL" or tok.text != sym:
            raise ParseError(f"expected {sym!r}, found {tok.text or 'end of input'!r}", tok.line, tok.column)
        return self.advance()

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "IDENT" and tok.text.upper() == word

    def expect_keyword(self, word: str) -> Token:
        tok = self.peek()
        if not self.at_keyword(word):
            raise ParseError(f"expected {word}, found {tok.text or 'end of input'!r}", tok.line, tok.column)
        return self.advance()

    def expect_ident(self) -> Token:
        tok = self.peek()
        if tok.kind != "IDENT":
            raise ParseError(f"expected a name, found {tok.text or 'end of input'!r}", tok.line, tok.column)
        return self.advance()

    # entry points -------------------------------------------------------

    def parse_program(self) -> Program:
        if self.at_keyword("SELECT"):
            stmt = self.parse_select()
            if self.peek().kind == "SYMBOL" and self.peek().text == ";":
                self.advance()
            tok = self.peek()
            if tok.kind != "EOF":
                raise ParseError("a select query has a single statement", tok.line, tok.column)
            return Program((stmt,))
        if self.dialect is not Dialect.NETWORK:
            tok = self.peek()
            raise ParseError(f"expected SELECT in {self.dialect.value} query", tok.line, tok.column)
        statements: list[Assign] = []
        while self.peek().kind != "EOF":
            statements.append(self.parse_assign())
            if self.peek().kind == "SYMBOL" and self.peek().text == ";":
                self.advance()
        if not statements:
            tok = self.peek()
            raise ParseError("empty query", tok.line, tok.column)
        return Program(tuple(statements))

    # SELECT form --------------------------------------------------------

    def parse_select(self) -> Select:
        self.expect_keyword("SELECT")
        target = self.parse_select_target()
        self.expect_keyword("FROM")
        table_tok = self.expect_ident()
        table = self.schema.table(table_tok.text)
        if table is None:
            raise ParseError(
                f"unknown table {table_tok.text!r} in {self.dialect.value} dialect",
                table_tok.line,
                table_tok.column,
            )
        target = self.canonical_target(target, table, table_tok)
        where = None
        if self.at_keyword("WHERE"):
            self.advance()
            where = self.parse_predicate(table)
        return Select(target=target, table=TableRef(table.name), where=where)

    def parse_select_target(self):
        tok = self.peek()
        if tok.kind == "SYMBOL" and tok.text == "*":
            self.advance()
            return Star()
        name_tok = self.expect_ident()
        if self.peek().kind == "SYMBOL" and self.peek().text == "(":
            func = grammar.lookup_canonical(name_tok.text, grammar.AGG_FUNCTIONS)
            if func is None:
                raise ParseError(f"unknown aggregation function {name_tok.text!r}", name_tok.line, name_tok.column)
            self.advance()
            arg_tok = self.expect_ident()
            self.expect_symbol(")")
            return AggCall(FuncName(func), Column(arg_tok.text))
        return Column(name_tok.text)

    def canonical_target(self, target, table: grammar.TableSpec, tok: Token):
        if isinstance(target, Star):
            return target
        if isinstance(target, AggCall):
            canonical = grammar.lookup_canonical(target.arg.name, table.agg_columns)
            if canonical is None:
                raise ParseError(
                    f"column {target.arg.name!r} cannot be aggregated in table {table.name!r}",
                    tok.line,
                    tok.column,
                )
            return AggCall(target.func, Column(canonical))
        canonical = grammar.lookup_canonical(target.name, table.select_columns)
        if canonical is None:
            raise ParseError(
                f"unknown column {target.name!r} in table {table.name!r}", tok.line, tok.column
            )
        return Column(canonical)

    def parse_predicate(self, table: grammar.TableSpec):
        left = self.parse_comparison(table)
        while True:
            if self.at_keyword("AND"):
                self.advance()
                left = And(left, self.parse_comparison(table))
            elif self.at_keyword("OR"):
                self.advance()
                left = Or(left, self.parse_comparison(table))
            else:
                return left

    def parse_comparison(self, table: grammar.TableSpec) -> Compare:
        col_tok = self.expect_ident()
        spec = None
        canonical = grammar.lookup_canonical(col_tok.text, table.where_columns)
        if canonical is not None:
            spec = table.where_columns[canonical]
        if spec is None:
            raise ParseError(
                f"column {col_tok.text!r} cannot appear in WHERE for table {table.name!r}",
                col_tok.line,
                col_tok.column,
            )
        op_tok = self.advance()
        ops = {"=": "eq", "==": "eq", ">": "gt", "<": "lt"}
        if op_tok.kind != "SYMBOL" or op_tok.text not in ops:
            raise ParseError(f"expected a comparison operator, found {op_tok.text!r}", op_tok.line, op_tok.column)
        operand = self.parse_operand(spec, op_tok)
        return Compare(op=ops[op_tok.text], column=Column(spec.name), operand=operand)

    # pipeline form ------------------------------------------------------

    def parse_assign(self) -> Assign:
        name_tok = self.expect_ident()
        if name_tok.text.upper() in KEYWORDS:
            raise ParseError(f"unexpected keyword {name_tok.text!r}", name_tok.line, name_tok.column)
        self.expect_symbol("=")
        call_tok = self.expect_ident()
        call_name = call_tok.text.lower()
        if call_name == "filter":
            value = self.parse_filter(call_tok)
        elif call_name == "groupby":
            value = self.parse_groupby(call_tok)
        else:
            raise ParseError(f"unknown pipeline operator {call_tok.text!r}", call_tok.line, call_tok.column)
        var = VarRef(name_tok.text)
        self.vars[var.name] = var
        return Assign(target=var, value=value)

    def parse_source(self):
        tok = self.expect_ident()
        if tok.text == "T":
            return TableRef("T")
        if tok.text in self.vars:
            return VarRef(tok.text)
        raise ParseError(f"unknown stream {tok.text!r}", tok.line, tok.column)

    def parse_filter(self, call_tok: Token) -> FilterCall:
        self.expect_symbol("(")
        source = self.parse_source()
        self.expect_symbol(",")
        predicate = self.parse_filter_predicate()
        self.expect_symbol(")")
        return FilterCall(source=source, predicate=predicate)

    def parse_filter_predicate(self):
        left = self.parse_filter_comparison()
        while True:
            if self.at_keyword("AND"):
                self.advance()
                left = And(left, self.parse_filter_comparison())
            elif self.at_keyword("OR"):
                self.advance()
                left = Or(left, self.parse_filter_comparison())
            else:
                return left

    def parse_filter_comparison(self) -> Compare:
        col_tok = self.expect_ident()
        canonical = grammar.lookup_canonical(col_tok.text, self.schema.filter_columns)
        if canonical is None:
            raise ParseError(f"unknown packet column {col_tok.text!r}", col_tok.line, col_tok.column)
        spec = self.schema.filter_columns[canonical]
        op_tok = self.advance()
        ops = {"==": "eq", ">": "gt", "<": "lt"}
        if op_tok.kind != "SYMBOL" or op_tok.text not in ops:
            raise ParseError(f"expected ==, > or <, found {op_tok.text!r}", op_tok.line, op_tok.column)
        operand = self.parse_operand(spec, op_tok)
        return Compare(op=ops[op_tok.text], column=Column(spec.name), operand=operand)

    def parse_groupby(self, call_tok: Token) -> GroupbyCall:
        self.expect_symbol("(")
        source = self.parse_source()
        self.expect_symbol(",")
        self.expect_symbol("[")
        keys: list[Column] = []
        while True:
            key_tok = self.expect_ident()
            canonical = grammar.lookup_canonical(key_tok.text, self.schema.groupby_keys)
            if canonical is None:
                raise ParseError(f"unknown groupby key {key_tok.text!r}", key_tok.line, key_tok.column)
            keys.append(Column(canonical))
            tok = self.peek()
            if tok.kind == "SYMBOL" and tok.text == ",":
                self.advance()
                continue
            break
        self.expect_symbol("]")
        self.expect_symbol(",")
        agg_tok = self.expect_ident()
        agg = grammar.lookup_canonical(agg_tok.text, self.schema.agg_functions)
        if agg is None:
            raise ParseError(f"unknown aggregation {agg_tok.text!r}", agg_tok.line, agg_tok.column)
        self.expect_symbol(")")
        return GroupbyCall(source=source, keys=tuple(keys), agg=FuncName(agg))

    # shared -------------------------------------------------------------

    def parse_operand(self, spec: grammar.ColumnSpec, op_tok: Token):
        tok = self.peek()
        if tok.kind == "IDENT" and tok.text == "_":
            self.advance()
            if spec.param_kind is None:
                raise ParseError(f"column {spec.name!r} does not take a parameter blank", tok.line, tok.column)
            self.blank_count += 1
            return Blank(index=self.blank_count, kind=spec.param_kind)
        if tok.kind == "NUMBER":
            self.advance()
            if spec.type != "int":
                raise ParseError(f"column {spec.name!r} compares against a {spec.type} value", tok.line, tok.column)
            return IntLit(int(tok.text))
        if tok.kind == "STRING":
            self.advance()
            if spec.type != "str":
                raise ParseError(f"column {spec.name!r} compares against a {spec.type} value", tok.line, tok.column)
            return StrLit(tok.text)
        if tok.kind == "IDENT" and tok.text.lower() in BOOL_WORDS:
            self.advance()
            if spec.type != "bool":
                raise ParseError(f"column {spec.name!r} compares against a {spec.type} value", tok.line, tok.column)
            return BoolLit(BOOL_WORDS[tok.text.lower()])
        raise ParseError(f"expected a literal, found {tok.text or 'end of input'!r}", tok.line, tok.column)


def parse_query(text: str, dialect: Dialect) -> QueryAst:
    """Parse ``text`` under the given dialect's grammar.

    Raises :class:`ParseError` on malformed input or names unknown to the
    dialect. Blanks (``_``) are accepted in parameter positions, so this
    also parses serialized templates.
    """

    if not text or not text.strip():
        raise ParseError("empty query text")
    parser = _Parser(tokenize(text), dialect)
    return QueryAst(dialect=dialect, root=parser.parse_program())


def detect_dialect(text: str) -> Dialect:
    """Pick the unique dialect that parses ``text``.

    The forms are disjoint (table names identify the dialect), so at most
    one dialect accepts any given query.
    """

    errors: list[str] = []
    for dialect in Dialect:
        try:
            parse_query(text, dialect)
            return dialect
        except ParseError as exc:
            errors.append(f"{dialect.value}: {exc.message}")
    raise DialectError("query does not parse in any dialect: " + "; ".join(errors))
