"""Ground-truth document annotations and their JSON sidecar format.

One JSON file per generated document holds the page size, every word with its
box, and every extractable field instance with its value and boxes. The JSON
schema is documented in docs/formats.md.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .geometry import BBox


class FieldLabel(str, Enum):
    """The eight extractable labels, in fixed channel order.

    Five header fields occur once per document; three line-item fields occur
    once per table row.
    """

    COMPANY_NAME = "company-name"
    COMPANY_ADDRESS = "company-address"
    INVOICE_NUMBER = "invoice-number"
    INVOICE_AMOUNT = "invoice-amount"
    INVOICE_DATE = "invoice-date"
    ITEM_NAME = "item-name"
    ITEM_QUANTITY = "item-quantity"
    ITEM_AMOUNT = "item-amount"

    @property
    def index(self) -> int:
        return _LABEL_ORDER.index(self)

    @property
    def is_line_item(self) -> bool:
        return self in LINE_ITEM_LABELS


_LABEL_ORDER = tuple(FieldLabel)
HEADER_LABELS = _LABEL_ORDER[:5]
LINE_ITEM_LABELS = _LABEL_ORDER[5:]
NUM_LABELS = len(_LABEL_ORDER)  # F = 8


@dataclass(frozen=True)
class Word:
    """A single word on the page with its exact box and reading position."""

    text: str
    box: BBox
    reading_order: int

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("Word.text must be non-empty")
        if "\n" in self.text:
            raise ValueError(f"Word.text must not contain newlines: {self.text!r}")
        if self.reading_order < 0:
            raise ValueError(f"Word.reading_order must be >= 0, got {self.reading_order}")


@dataclass(frozen=True)
class FieldInstance:
    """One occurrence of an extractable field.

    Multi-line fields (company-address) carry one box per line, so the union
    is allowed to be non-rectangular. Line-item fields carry the table row
    index; header fields leave it unset.
    """

    label: FieldLabel
    value: str
    boxes: tuple[BBox, ...]
    row: int | None = None

    def __post_init__(self) -> None:
        if not self.boxes:
            raise ValueError(f"FieldInstance {self.label.value} needs at least one box")
        if self.label.is_line_item:
            if self.row is None or self.row < 0:
                raise ValueError(f"line-item field {self.label.value} needs a row index >= 0")
        elif self.row is not None:
            raise ValueError(f"header field {self.label.value} must not carry a row index")


@dataclass(frozen=True)
class DocumentAnnotation:
    """Complete ground truth for one generated page."""

    doc_id: str
    page_width: float
    page_height: float
    words: tuple[Word, ...]
    fields: tuple[FieldInstance, ...]
    template_id: str
    seed: int

    def words_in_reading_order(self) -> list[Word]:
        return sorted(self.words, key=lambda w: w.reading_order)


def _box_to_list(b: BBox) -> list[float]:
    return [b.x0, b.y0, b.x1, b.y1]


def _box_from_list(v: list[float]) -> BBox:
    if len(v) != 4:
        raise ValueError(f"box must have 4 coordinates, got {v!r}")
    return BBox(*(float(c) for c in v))


def annotation_to_dict(doc: DocumentAnnotation) -> dict:
    out: dict = {
        "doc_id": doc.doc_id,
        "page": {"width": doc.page_width, "height": doc.page_height},
        "template_id": doc.template_id,
        "seed": doc.seed,
        "words": [
            {"text": w.text, "box": _box_to_list(w.box), "order": w.reading_order}
            for w in doc.words
        ],
        "fields": [],
    }
    for f in doc.fields:
        entry: dict = {"label": f.label.value, "value": f.value}
        if f.row is not None:
            entry["row"] = f.row
        entry["boxes"] = [_box_to_list(b) for b in f.boxes]
        out["fields"].append(entry)
    return out


def annotation_from_dict(data: dict) -> DocumentAnnotation:
    words = tuple(
        Word(text=w["text"], box=_box_from_list(w["box"]), reading_order=int(w["order"]))
        for w in data["words"]
    )
    fields = tuple(
        FieldInstance(
            label=FieldLabel(f["label"]),
            value=f["value"],
            boxes=tuple(_box_from_list(b) for b in f["boxes"]),
            row=f.get("row"),
        )
        for f in data["fields"]
    )
    return DocumentAnnotation(
        doc_id=data["doc_id"],
        page_width=float(data["page"]["width"]),
        page_height=float(data["page"]["height"]),
        words=words,
        fields=fields,
        template_id=data["template_id"],
        seed=int(data["seed"]),
    )


def serialize_annotation(doc: DocumentAnnotation) -> bytes:
    """UTF-8 JSON bytes; numbers keep full double precision via repr round-trip."""
    return (json.dumps(annotation_to_dict(doc), ensure_ascii=False, indent=2) + "\n").encode("utf-8")


def parse_annotation(data: bytes | str) -> DocumentAnnotation:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return annotation_from_dict(json.loads(data))


def save_annotation(doc: DocumentAnnotation, path: Path | str) -> None:
    Path(path).write_bytes(serialize_annotation(doc))


def load_annotation(path: Path | str) -> DocumentAnnotation:
    return parse_annotation(Path(path).read_bytes())


def _join_words(words: list[Word]) -> str:
    return " ".join(w.text for w in words)


def validate_annotation(doc: DocumentAnnotation) -> list[str]:
    """Check every structural invariant; returns human-readable violations.

    An empty list means the annotation is sound. Violations are data, not
    exceptions: corpus validation wants to report all of them at once.
    """
    violations: list[str] = []
    page = None
    try:
        page = BBox(0.0, 0.0, doc.page_width, doc.page_height)
    except ValueError:
        violations.append(f"page size invalid: {doc.page_width} x {doc.page_height}")

    def check_box(b: BBox, what: str) -> bool:
        ok = True
        for name in ("x0", "y0", "x1", "y1"):
            if not math.isfinite(getattr(b, name)):
                violations.append(f"{what}: coordinate {name} not finite")
                ok = False
        if b.x0 >= b.x1:
            violations.append(f"{what}: x0 >= x1 ({b.x0} >= {b.x1})")
            ok = False
        if b.y0 >= b.y1:
            violations.append(f"{what}: y0 >= y1 ({b.y0} >= {b.y1})")
            ok = False
        if ok and page is not None and not page.contains(b):
            violations.append(f"{what}: box {_box_to_list(b)} outside page")
            ok = False
        return ok

    orders_seen: dict[int, str] = {}
    for i, w in enumerate(doc.words):
        what = f"word[{i}] {w.text!r}"
        if not w.text:
            violations.append(f"{what}: empty text")
        if "\n" in w.text:
            violations.append(f"{what}: text contains newline")
        if w.reading_order < 0:
            violations.append(f"{what}: negative reading_order")
        elif w.reading_order in orders_seen:
            violations.append(
                f"{what}: reading_order {w.reading_order} duplicates {orders_seen[w.reading_order]}"
            )
        else:
            orders_seen[w.reading_order] = what
        check_box(w.box, what)

    ordered_words = doc.words_in_reading_order()
    for i, f in enumerate(doc.fields):
        what = f"field[{i}] {f.label.value}"
        if f.label.is_line_item and f.row is None:
            violations.append(f"{what}: line-item field missing row")
        if not f.label.is_line_item and f.row is not None:
            violations.append(f"{what}: header field carries row {f.row}")
        if not f.boxes:
            violations.append(f"{what}: no boxes")
            continue
        boxes_ok = all(check_box(b, f"{what} box[{j}]") for j, b in enumerate(f.boxes))
        for j in range(len(f.boxes)):
            for k in range(j + 1, len(f.boxes)):
                if boxes_ok and f.boxes[j].intersects(f.boxes[k]):
                    violations.append(f"{what}: boxes {j} and {k} overlap")
        if boxes_ok:
            covered = [
                w for w in ordered_words if any(b.contains(w.box) for b in f.boxes)
            ]
            reconstructed = _join_words(covered)
            if reconstructed != f.value:
                violations.append(
                    f"{what}: value {f.value!r} != words under boxes {reconstructed!r}"
                )
    return violations
