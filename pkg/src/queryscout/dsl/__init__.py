"""Debugging-query dialects: parsing, rendering, templates, graphs."""

from .nodes import (
    BLANK_KINDS,
    Blank,
    Dialect,
    KIND_FUNCTION,
    KIND_HOST,
    KIND_SWITCH,
    ParamAssignment,
    QueryAst,
    QueryTemplate,
)
from .parser import detect_dialect, parse_query
from .render import render_query, render_template
from .template import extract_template, fill_blanks, template_from_ast
from .graph import FEATURE_WIDTH, AstGraph, ast_to_graph

__all__ = [
    "BLANK_KINDS",
    "Blank",
    "Dialect",
    "KIND_FUNCTION",
    "KIND_HOST",
    "KIND_SWITCH",
    "ParamAssignment",
    "QueryAst",
    "QueryTemplate",
    "parse_query",
    "detect_dialect",
    "render_query",
    "render_template",
    "extract_template",
    "fill_blanks",
    "template_from_ast",
    "AstGraph",
    "ast_to_graph",
    "FEATURE_WIDTH",
]
