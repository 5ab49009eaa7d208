"""Template extraction and blank filling.

A template is the query with every subsystem-identifier literal replaced
by a blank; the parameter assignment holds the removed values in blank
order. ``fill_blanks(*extract_template(q)) == q`` for every query.
"""

from __future__ import annotations

from ..errors import DialectError
from .nodes import (
    And,
    Assign,
    Blank,
    Compare,
    FilterCall,
    GroupbyCall,
    IntLit,
    Or,
    ParamAssignment,
    Program,
    QueryAst,
    QueryTemplate,
    Select,
    StrLit,
    walk,
)
from . import grammar


def extract_template(ast: QueryAst) -> tuple[QueryTemplate, ParamAssignment]:
    """Replace parameter literals with blanks, left to right."""

    schema = grammar.schema_for(ast.dialect)
    values: list[int | str] = []
    kinds: list[str] = []

    def rewrite_operand(column_name: str, operand, in_filter: bool):
        if isinstance(operand, Blank):
            raise DialectError("cannot extract a template from a query that already has blanks")
        spec = _column_spec(schema, column_name, in_filter)
        if spec is None or spec.param_kind is None:
            return operand
        values.append(operand.value)
        kinds.append(spec.param_kind)
        return Blank(index=len(values), kind=spec.param_kind)

    root = _rewrite(ast.root, rewrite_operand)
    template = QueryTemplate(dialect=ast.dialect, root=root, blank_kinds=tuple(kinds))
    return template, ParamAssignment(values=tuple(values))


def fill_blanks(template: QueryTemplate, params: ParamAssignment) -> QueryAst:
    """Substitute parameter values back into a template's blanks."""

    if len(params.values) != template.num_blanks:
        raise DialectError(
            f"template has {template.num_blanks} blanks but {len(params.values)} values were given"
        )

    def rewrite_operand(column_name: str, operand, in_filter: bool):
        if not isinstance(operand, Blank):
            return operand
        value = params.values[operand.index - 1]
        if operand.kind == "switch_id":
            return IntLit(int(value))
        return StrLit(str(value))

    root = _rewrite(template.root, rewrite_operand)
    return QueryAst(dialect=template.dialect, root=root)


def template_from_ast(ast: QueryAst) -> QueryTemplate:
    """View a parsed tree that already contains blanks as a template."""

    blanks = sorted((n for n in walk(ast.root) if isinstance(n, Blank)), key=lambda b: b.index)
    indices = [b.index for b in blanks]
    if indices != list(range(1, len(indices) + 1)):
        raise DialectError(f"blank indices are not dense: {indices}")
    return QueryTemplate(dialect=ast.dialect, root=ast.root, blank_kinds=tuple(b.kind for b in blanks))


def _column_spec(schema: grammar.DialectSchema, column_name: str, in_filter: bool):
    if in_filter:
        return schema.filter_columns.get(column_name)
    for table in schema.tables.values():
        if column_name in table.where_columns:
            return table.where_columns[column_name]
    return None


def _rewrite(node, rewrite_operand, in_filter: bool = False):
    """Rebuild the tree, passing each comparison operand through the hook."""

    if isinstance(node, Program):
        return Program(tuple(_rewrite(s, rewrite_operand) for s in node.statements))
    if isinstance(node, Select):
        where = _rewrite(node.where, rewrite_operand, False) if node.where is not None else None
        return Select(target=node.target, table=node.table, where=where)
    if isinstance(node, Assign):
        return Assign(target=node.target, value=_rewrite(node.value, rewrite_operand))
    if isinstance(node, FilterCall):
        return FilterCall(source=node.source, predicate=_rewrite(node.predicate, rewrite_operand, True))
    if isinstance(node, GroupbyCall):
        return node
    if isinstance(node, And):
        return And(_rewrite(node.left, rewrite_operand, in_filter), _rewrite(node.right, rewrite_operand, in_filter))
    if isinstance(node, Or):
        return Or(_rewrite(node.left, rewrite_operand, in_filter), _rewrite(node.right, rewrite_operand, in_filter))
    if isinstance(node, Compare):
        return Compare(op=node.op, column=node.column, operand=rewrite_operand(node.column.name, node.operand, in_filter))
    return node
