"""Canonical text rendering.

One whitespace convention so that parse(render(ast)) == ast and rendered
text is stable enough for exact-match ranking: uppercase keywords, no
spaces around comparison operators, ``_`` for blanks, pipeline statements
terminated with ``;`` and joined by single spaces.
"""

from __future__ import annotations

from .nodes import (
    AggCall,
    And,
    Assign,
    Blank,
    BoolLit,
    Column,
    Compare,
    FilterCall,
    GroupbyCall,
    IntLit,
    Or,
    Program,
    QueryAst,
    QueryTemplate,
    Select,
    Star,
    StrLit,
    TableRef,
    VarRef,
)

_CMP_WHERE = {"eq": "=", "gt": ">", "lt": "<"}
_CMP_FILTER = {"eq": "==", "gt": ">", "lt": "<"}


def render_query(ast: QueryAst) -> str:
    """Render an AST (or a template tree) to canonical query text."""

    return _render_program(ast.root)


def render_template(template: QueryTemplate) -> str:
    return _render_program(template.root)


def _render_program(program: Program) -> str:
    parts = []
    for stmt in program.statements:
        if isinstance(stmt, Select):
            parts.append(_render_select(stmt))
        else:
            parts.append(_render_assign(stmt))
    return " ".join(parts)


def _render_select(stmt: Select) -> str:
    text = f"SELECT {_render_target(stmt.target)} FROM {stmt.table.name}"
    if stmt.where is not None:
        text += f" WHERE {_render_pred(stmt.where, _CMP_WHERE)}"
    return text


def _render_assign(stmt: Assign) -> str:
    return f"{stmt.target.name} = {_render_call(stmt.value)};"


def _render_call(call) -> str:
    if isinstance(call, FilterCall):
        return f"filter({_render_operand(call.source)}, {_render_pred(call.predicate, _CMP_FILTER)})"
    keys = ", ".join(k.name for k in call.keys)
    return f"groupby({_render_operand(call.source)}, [{keys}], {call.agg.name})"


def _render_target(target) -> str:
    if isinstance(target, Star):
        return "*"
    if isinstance(target, AggCall):
        return f"{target.func.name}({target.arg.name})"
    return target.name


def _render_pred(pred, ops: dict[str, str]) -> str:
    if isinstance(pred, And):
        return f"{_render_pred(pred.left, ops)} AND {_render_pred(pred.right, ops)}"
    if isinstance(pred, Or):
        return f"{_render_pred(pred.left, ops)} OR {_render_pred(pred.right, ops)}"
    assert isinstance(pred, Compare)
    return f"{pred.column.name}{ops[pred.op]}{_render_operand(pred.operand)}"


def _render_operand(node) -> str:
    if isinstance(node, Blank):
        return "_"
    if isinstance(node, StrLit):
        return f'"{node.value}"'
    if isinstance(node, IntLit):
        return str(node.value)
    if isinstance(node, BoolLit):
        return "true" if node.value else "false"
    if isinstance(node, (TableRef, VarRef, Column)):
        return node.name
    raise TypeError(f"cannot render {node!r}")
