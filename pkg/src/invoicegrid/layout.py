"""Page layout: places invoice content through jittered templates.

A template fixes nominal anchor regions for the five header fields, a table
region for the line items, and any number of unlabeled decoy texts. Each
element is shifted by a per-element uniform integer offset drawn from the
document seed, so the same template yields a different geometry per document
while staying byte-reproducible.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .annotations import FieldLabel, HEADER_LABELS, LINE_ITEM_LABELS
from .fonts import COURIER, FontMetric
from .geometry import BBox
from .records import InvoiceRecord, format_amount

DEFAULT_PAGE_WIDTH = 595.0
DEFAULT_PAGE_HEIGHT = 842.0


class TemplateError(ValueError):
    """Template file failed schema validation; message lists every problem."""


class TableOverflowError(ValueError):
    """Record has more line items than the template's table can hold."""


class CollisionError(ValueError):
    """Two jittered elements ended up overlapping on the page."""


@dataclass(frozen=True)
class TableColumn:
    label: FieldLabel
    x: float  # nominal left edge, page points


@dataclass(frozen=True)
class TemplateElement:
    """One placeable unit: a header field, a decoy text, or the item table."""

    kind: str  # "field" | "decoy" | "table"
    anchor: BBox
    jitter_dx: int
    jitter_dy: int
    font_size: float
    label: FieldLabel | None = None  # kind == "field"
    static_text: str | None = None  # kind == "decoy"
    line_height: float | None = None  # multi-line fields; defaults to 1.4 em
    row_height: float | None = None  # kind == "table"
    columns: tuple[TableColumn, ...] = ()

    def effective_line_height(self) -> float:
        return self.line_height if self.line_height is not None else 1.4 * self.font_size


@dataclass(frozen=True)
class Template:
    template_id: str
    page_width: float
    page_height: float
    elements: tuple[TemplateElement, ...]

    def table(self) -> TemplateElement:
        return next(e for e in self.elements if e.kind == "table")

    def capacity(self) -> int:
        """Line-item rows the table region can hold."""
        t = self.table()
        return int(t.anchor.height // t.row_height)


@dataclass(frozen=True)
class PlacedText:
    """One text run on the page. Words inside share the run's box row."""

    text: str
    box: BBox
    font_size: float
    label: FieldLabel | None = None
    row: int | None = None


@dataclass(frozen=True)
class LayoutDocument:
    template_id: str
    page_width: float
    page_height: float
    seed: int
    placed: tuple[PlacedText, ...]


def _validate_template(t: Template) -> list[str]:
    problems: list[str] = []
    if not t.template_id:
        problems.append("template_id: empty")
    if t.page_width <= 0 or t.page_height <= 0:
        problems.append(f"page: non-positive size {t.page_width} x {t.page_height}")

    field_labels: list[FieldLabel] = []
    table_count = 0
    for i, e in enumerate(t.elements):
        where = f"elements[{i}]"
        if e.kind not in ("field", "decoy", "table"):
            problems.append(f"{where}.kind: unknown kind {e.kind!r}")
            continue
        if e.font_size <= 0:
            problems.append(f"{where}.font_size: must be positive, got {e.font_size}")
        if e.jitter_dx < 0 or e.jitter_dy < 0:
            problems.append(f"{where}.jitter: bounds must be non-negative")
        reach = BBox(
            e.anchor.x0 - e.jitter_dx,
            e.anchor.y0 - e.jitter_dy,
            e.anchor.x1 + e.jitter_dx,
            e.anchor.y1 + e.jitter_dy,
        )
        page = BBox(0, 0, t.page_width, t.page_height)
        if not page.contains(reach):
            problems.append(f"{where}.anchor: anchor plus jitter exits the page")

        if e.kind == "field":
            if e.label is None:
                problems.append(f"{where}.label: field element needs a label")
            elif e.label.is_line_item:
                problems.append(
                    f"{where}.label: {e.label.value} belongs in the table, not a field element"
                )
            else:
                field_labels.append(e.label)
        if e.kind == "decoy" and not e.static_text:
            problems.append(f"{where}.text: decoy element needs static text")
        if e.kind == "table":
            table_count += 1
            if e.row_height is None or e.row_height <= 0:
                problems.append(f"{where}.row_height: must be positive")
            got = [c.label for c in e.columns]
            if sorted(got, key=lambda l: l.index) != list(LINE_ITEM_LABELS):
                problems.append(
                    f"{where}.columns: need exactly the three line-item labels, got "
                    f"{[l.value for l in got]}"
                )
            for j, c in enumerate(e.columns):
                if not (e.anchor.x0 <= c.x < e.anchor.x1):
                    problems.append(f"{where}.columns[{j}].x: outside the table anchor")
            if e.row_height is not None and e.row_height > 0 and e.anchor.height < e.row_height:
                problems.append(f"{where}.anchor: shorter than one row")

    for label in HEADER_LABELS:
        n = field_labels.count(label)
        if n != 1:
            problems.append(f"elements: label {label.value} appears {n} times, expected 1")
    if table_count != 1:
        problems.append(f"elements: {table_count} table elements, expected 1")
    return problems


def _element_from_dict(data: dict, where: str, problems: list[str]) -> TemplateElement | None:
    try:
        kind = data["kind"]
        anchor = BBox(*(float(v) for v in data["anchor"]))
        jx, jy = data.get("jitter", [0, 0])
        return TemplateElement(
            kind=kind,
            anchor=anchor,
            jitter_dx=int(jx),
            jitter_dy=int(jy),
            font_size=float(data["font_size"]),
            label=FieldLabel(data["label"]) if "label" in data else None,
            static_text=data.get("text"),
            line_height=float(data["line_height"]) if "line_height" in data else None,
            row_height=float(data["row_height"]) if "row_height" in data else None,
            columns=tuple(
                TableColumn(label=FieldLabel(c["label"]), x=float(c["x"]))
                for c in data.get("columns", [])
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        problems.append(f"{where}: {exc}")
        return None


def parse_template(data: dict) -> Template:
    problems: list[str] = []
    elements = []
    for i, e in enumerate(data.get("elements", [])):
        parsed = _element_from_dict(e, f"elements[{i}]", problems)
        if parsed is not None:
            elements.append(parsed)
    template = Template(
        template_id=data.get("template_id", ""),
        page_width=float(data.get("page_width", DEFAULT_PAGE_WIDTH)),
        page_height=float(data.get("page_height", DEFAULT_PAGE_HEIGHT)),
        elements=tuple(elements),
    )
    problems.extend(_validate_template(template))
    if problems:
        raise TemplateError("invalid template:\n  " + "\n  ".join(problems))
    return template


def load_template(path: Path | str) -> Template:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise TemplateError(f"{path}: not valid JSON: {exc}") from exc
    return parse_template(data)


def list_templates(directory: Path | str) -> list[Template]:
    paths = sorted(Path(directory).glob("*.json"))
    if not paths:
        raise TemplateError(f"no template files in {directory}")
    return [load_template(p) for p in paths]


def default_template_dir() -> Path:
    with resources.as_file(resources.files("invoicegrid") / "data" / "templates") as d:
        return Path(d)


def default_templates() -> list[Template]:
    return list_templates(default_template_dir())


def _field_lines(record: InvoiceRecord, label: FieldLabel) -> list[str]:
    if label is FieldLabel.COMPANY_NAME:
        return [record.company_name]
    if label is FieldLabel.COMPANY_ADDRESS:
        return list(record.company_address)
    if label is FieldLabel.INVOICE_NUMBER:
        return [record.invoice_number]
    if label is FieldLabel.INVOICE_AMOUNT:
        return [format_amount(record.invoice_amount_cents, record.currency_symbol)]
    if label is FieldLabel.INVOICE_DATE:
        return [record.invoice_date]
    raise ValueError(f"not a header label: {label}")


def _run_box(x: float, y: float, text: str, font_size: float, metric: FontMetric) -> BBox:
    return BBox(x, y, x + metric.text_width(text, font_size), y + metric.text_height(font_size))


def instantiate(
    record: InvoiceRecord,
    template: Template,
    seed: int,
    metric: FontMetric = COURIER,
) -> LayoutDocument:
    """Place every record value and decoy; pure in (record, template, seed).

    One uniform integer offset pair is drawn per element, in element order, so
    a template edit that appends elements does not disturb earlier draws.
    """
    rng = random.Random(seed)
    placed: list[PlacedText] = []
    origins: list[int] = []  # element index per run, for collision reporting

    for idx, e in enumerate(template.elements):
        dx = rng.randint(-e.jitter_dx, e.jitter_dx)
        dy = rng.randint(-e.jitter_dy, e.jitter_dy)
        x0, y0 = e.anchor.x0 + dx, e.anchor.y0 + dy
        if e.kind == "field":
            for i, line in enumerate(_field_lines(record, e.label)):
                y = y0 + i * e.effective_line_height()
                placed.append(
                    PlacedText(line, _run_box(x0, y, line, e.font_size, metric), e.font_size, e.label)
                )
                origins.append(idx)
        elif e.kind == "decoy":
            placed.append(
                PlacedText(e.static_text, _run_box(x0, y0, e.static_text, e.font_size, metric), e.font_size)
            )
            origins.append(idx)
        else:  # table
            capacity = template.capacity()
            if len(record.line_items) > capacity:
                raise TableOverflowError(
                    f"{len(record.line_items)} line items exceed table capacity "
                    f"{capacity} of template {template.template_id}"
                )
            for r, item in enumerate(record.line_items):
                y = y0 + r * e.row_height
                cells = {
                    FieldLabel.ITEM_NAME: item.name,
                    FieldLabel.ITEM_QUANTITY: str(item.quantity),
                    FieldLabel.ITEM_AMOUNT: format_amount(item.amount_cents, record.currency_symbol),
                }
                for col in e.columns:
                    text = cells[col.label]
                    placed.append(
                        PlacedText(
                            text,
                            _run_box(col.x + dx, y, text, e.font_size, metric),
                            e.font_size,
                            col.label,
                            row=r,
                        )
                    )
                    origins.append(idx)

    for i in range(len(placed)):
        for j in range(i + 1, len(placed)):
            if placed[i].box.intersects(placed[j].box):
                raise CollisionError(
                    f"template {template.template_id} seed {seed}: "
                    f"{placed[i].text!r} (element {origins[i]}) overlaps "
                    f"{placed[j].text!r} (element {origins[j]})"
                )

    return LayoutDocument(
        template_id=template.template_id,
        page_width=template.page_width,
        page_height=template.page_height,
        seed=seed,
        placed=tuple(placed),
    )
