"""The template catalog scored by the ranking models.

Entries are unique by canonical rendering, ordered: the fixed bank first,
then any additional templates observed in training ground truth (sorted by
text). Every training ground-truth template must be present.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..dsl import (
    AstGraph,
    Dialect,
    QueryAst,
    QueryTemplate,
    ast_to_graph,
    extract_template,
    render_template,
)
from ..errors import ModelError
from ..faultlab import Scenario, canonical_templates


@dataclass(frozen=True)
class CatalogEntry:
    index: int
    template: QueryTemplate
    text: str
    graph: AstGraph

    @property
    def dialect(self) -> Dialect:
        return self.template.dialect


class TemplateCatalog:
    def __init__(self, templates: list[QueryTemplate]):
        self.entries: list[CatalogEntry] = []
        self._by_text: dict[str, CatalogEntry] = {}
        for template in templates:
            text = render_template(template)
            if text in self._by_text:
                continue
            entry = CatalogEntry(
                index=len(self.entries), template=template, text=text, graph=ast_to_graph(template)
            )
            self.entries.append(entry)
            self._by_text[text] = entry

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def by_text(self, text: str) -> CatalogEntry | None:
        return self._by_text.get(text)

    def lookup(self, ast: QueryAst) -> CatalogEntry | None:
        template, _ = extract_template(ast)
        return self._by_text.get(render_template(template))

    def texts(self) -> list[str]:
        return [e.text for e in self.entries]


def build_catalog(
    train_scenarios: list[Scenario],
    include_bank: bool = True,
    dialect: Dialect | None = None,
) -> TemplateCatalog:
    templates: list[QueryTemplate] = []
    if include_bank:
        templates.extend(t for t in canonical_templates() if dialect is None or t.dialect is dialect)
    extra: dict[str, QueryTemplate] = {}
    for scenario in train_scenarios:
        template, _ = extract_template(scenario.ground_truth_ast)
        if dialect is not None and template.dialect is not dialect:
            continue
        extra[render_template(template)] = template
    known = {render_template(t) for t in templates}
    for text in sorted(extra):
        if text not in known:
            templates.append(extra[text])
    catalog = TemplateCatalog(templates)
    for scenario in train_scenarios:
        if dialect is not None and scenario.ground_truth_ast.dialect is not dialect:
            continue
        if catalog.lookup(scenario.ground_truth_ast) is None:
            raise ModelError(f"training ground truth missing from catalog: {scenario.ground_truth}")
    return catalog
