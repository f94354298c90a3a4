"""Rendering: layout -> single-page PDF bytes plus exact annotation.

The writer is deliberately tiny: one page, one base-14 font resource,
uncompressed content stream, fixed object order, fixed /ID, no timestamps.
Identical layouts produce identical bytes, which makes golden-file tests and
cross-worker determinism checks trivial.

Word geometry never comes from the PDF; it is computed here analytically from
the monospace metric and recorded in the annotation. OCR ingestion exists as
an alternative word source for studying recognition noise.
"""

from __future__ import annotations

from enum import Enum
from pathlib import Path

from .annotations import (
    DocumentAnnotation,
    FieldInstance,
    FieldLabel,
    Word,
    validate_annotation,
)
from .fonts import COURIER, FontMetric
from .geometry import BBox
from .layout import LayoutDocument, PlacedText

PDF_ID = "00000000000000000000000000000000"  # fixed: output must not vary per run


class RenderError(ValueError):
    pass


class OcrParseError(ValueError):
    pass


class WordSource(str, Enum):
    EXACT = "exact"
    OCR = "ocr"


def _fmt(v: float) -> str:
    """Fixed 3-decimal formatting with trailing zeros trimmed."""
    s = f"{v:.3f}".rstrip("0").rstrip(".")
    return s if s else "0"


def _encode_text(text: str) -> bytes:
    try:
        return text.encode("cp1252")
    except UnicodeEncodeError as exc:
        ch = text[exc.start]
        raise RenderError(f"cannot render U+{ord(ch):04X} ({ch!r}) in {text!r}") from exc


def _pdf_string(raw: bytes) -> bytes:
    out = bytearray(b"(")
    for b in raw:
        if b in (0x28, 0x29, 0x5C):  # ( ) \
            out.append(0x5C)
        out.append(b)
    out.append(0x29)
    return bytes(out)


def _split_words(run: PlacedText, metric: FontMetric) -> list[tuple[str, BBox]]:
    """Split a run on single spaces; each word keeps its analytic sub-box."""
    words: list[tuple[str, BBox]] = []
    offset = 0
    for part in run.text.split(" "):
        if part:
            x0 = run.box.x0 + metric.text_width(run.text[:offset], run.font_size)
            x1 = x0 + metric.text_width(part, run.font_size)
            words.append((part, BBox(x0, run.box.y0, x1, run.box.y1)))
        offset += len(part) + 1
    return words


def _build_annotation(
    layout: LayoutDocument, doc_id: str, metric: FontMetric
) -> DocumentAnnotation:
    raw_words: list[tuple[str, BBox]] = []
    for run in layout.placed:
        raw_words.extend(_split_words(run, metric))
    raw_words.sort(key=lambda w: (round(w[1].y0, 6), round(w[1].x0, 6)))
    words = tuple(
        Word(text=t, box=b, reading_order=i) for i, (t, b) in enumerate(raw_words)
    )

    groups: dict[tuple[FieldLabel, int | None], list[PlacedText]] = {}
    for run in layout.placed:
        if run.label is not None:
            groups.setdefault((run.label, run.row), []).append(run)
    fields = []
    for (label, row), runs in groups.items():
        runs.sort(key=lambda r: (round(r.box.y0, 6), round(r.box.x0, 6)))
        fields.append(
            FieldInstance(
                label=label,
                value=" ".join(r.text for r in runs),
                boxes=tuple(r.box for r in runs),
                row=row,
            )
        )
    fields.sort(key=lambda f: (f.label.index, -1 if f.row is None else f.row))

    return DocumentAnnotation(
        doc_id=doc_id,
        page_width=layout.page_width,
        page_height=layout.page_height,
        words=words,
        fields=tuple(fields),
        template_id=layout.template_id,
        seed=layout.seed,
    )


def emit_pdf(
    layout: LayoutDocument,
    doc_id: str = "doc",
    metric: FontMetric = COURIER,
) -> tuple[bytes, DocumentAnnotation]:
    """Write the page and derive its ground truth in one pass.

    Returns (pdf_bytes, annotation). The PDF bytes depend only on the layout
    and metric, never on doc_id, so renaming a document cannot change it.

    Raises:
        RenderError: a character falls outside the PDF text encoding, or the
            derived annotation violates a structural invariant (which means
            the template is unsound — fail loudly, not 12,000 documents later).
    """
    content = bytearray()
    for run in layout.placed:
        baseline = layout.page_height - (run.box.y0 + metric.baseline_offset(run.font_size))
        content += (
            f"BT /F1 {_fmt(run.font_size)} Tf {_fmt(run.box.x0)} {_fmt(baseline)} Td ".encode("ascii")
        )
        content += _pdf_string(_encode_text(run.text))
        content += b" Tj ET\n"

    objects = [
        b"<< /Type /Catalog /Pages 2 0 R >>",
        b"<< /Type /Pages /Kids [3 0 R] /Count 1 >>",
        (
            f"<< /Type /Page /Parent 2 0 R /MediaBox [0 0 {_fmt(layout.page_width)} "
            f"{_fmt(layout.page_height)}] /Resources << /Font << /F1 4 0 R >> >> "
            f"/Contents 5 0 R >>"
        ).encode("ascii"),
        (
            f"<< /Type /Font /Subtype /Type1 /BaseFont /{metric.name} "
            f"/Encoding /WinAnsiEncoding >>"
        ).encode("ascii"),
        f"<< /Length {len(content)} >>\nstream\n".encode("ascii") + bytes(content) + b"endstream",
    ]

    pdf = bytearray(b"%PDF-1.4\n")
    offsets = []
    for num, body in enumerate(objects, start=1):
        offsets.append(len(pdf))
        pdf += f"{num} 0 obj\n".encode("ascii") + body + b"\nendobj\n"
    xref_at = len(pdf)
    pdf += f"xref\n0 {len(objects) + 1}\n".encode("ascii")
    pdf += b"0000000000 65535 f \n"
    for off in offsets:
        pdf += f"{off:010d} 00000 n \n".encode("ascii")
    pdf += (
        f"trailer\n<< /Size {len(objects) + 1} /Root 1 0 R "
        f"/ID [<{PDF_ID}> <{PDF_ID}>] >>\nstartxref\n{xref_at}\n%%EOF\n"
    ).encode("ascii")

    annotation = _build_annotation(layout, doc_id, metric)
    violations = validate_annotation(annotation)
    if violations:
        raise RenderError(
            f"layout for {doc_id} produced an invalid annotation:\n  " + "\n  ".join(violations)
        )
    return bytes(pdf), annotation


# Tesseract-compatible TSV column order; level 5 rows are words.
OCR_COLUMNS = (
    "level", "page_num", "block_num", "par_num", "line_num", "word_num",
    "left", "top", "width", "height", "conf", "text",
)
_WORD_LEVEL = 5
_PAGE_LEVEL = 1


def parse_ocr_tsv(
    tsv: bytes | str, page_size: tuple[float, float], dpi: float
) -> list[Word]:
    """Convert an OCR TSV into words in page points.

    Pixel boxes scale by 72/dpi. If the TSV carries a page row (level 1), its
    scaled size must agree with page_size within 1 pt — a mismatch means the
    sidecar DPI does not belong to this document.
    """
    if dpi <= 0:
        raise OcrParseError(f"dpi must be positive, got {dpi}")
    if isinstance(tsv, bytes):
        tsv = tsv.decode("utf-8")
    scale = 72.0 / dpi

    lines = tsv.splitlines()
    if not lines:
        raise OcrParseError("empty TSV: missing header row")
    header = lines[0].split("\t")
    if tuple(header) != OCR_COLUMNS:
        raise OcrParseError(f"line 1: expected columns {OCR_COLUMNS}, got {tuple(header)}")

    entries: list[tuple[tuple[int, int, int, int], str, BBox]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        cols = line.split("\t")
        if len(cols) != len(OCR_COLUMNS):
            raise OcrParseError(f"line {lineno}: expected {len(OCR_COLUMNS)} columns, got {len(cols)}")
        try:
            level = int(cols[0])
            block, par, ln, wn = (int(c) for c in cols[2:6])
            left, top, width, height = (int(c) for c in cols[6:10])
        except ValueError as exc:
            raise OcrParseError(f"line {lineno}: {exc}") from exc
        if level == _PAGE_LEVEL:
            for got, want, axis in (
                (width * scale, page_size[0], "width"),
                (height * scale, page_size[1], "height"),
            ):
                if abs(got - want) > 1.0:
                    raise OcrParseError(
                        f"line {lineno}: page {axis} {got:.1f} pt at {dpi} DPI "
                        f"does not match document {axis} {want:.1f} pt"
                    )
        if level != _WORD_LEVEL:
            continue
        text = cols[11]
        if not text.strip():
            continue
        box = BBox(left * scale, top * scale, (left + width) * scale, (top + height) * scale)
        entries.append(((block, par, ln, wn), text, box))

    entries.sort(key=lambda e: e[0])
    return [Word(text=t, box=b, reading_order=i) for i, (_, t, b) in enumerate(entries)]


def words_for(
    annotation: DocumentAnnotation,
    source: WordSource | str,
    doc_dir: Path | str | None = None,
) -> list[Word]:
    """The word list the evaluator should run on.

    EXACT returns the annotation words verbatim. OCR loads `{id}.ocr.tsv`
    plus the required `{id}.dpi` sidecar from doc_dir.
    """
    source = WordSource(source)
    if source is WordSource.EXACT:
        return annotation.words_in_reading_order()
    if doc_dir is None:
        raise ValueError("OCR word source needs doc_dir")
    tsv_path = Path(doc_dir) / f"{annotation.doc_id}.ocr.tsv"
    dpi_path = Path(doc_dir) / f"{annotation.doc_id}.dpi"
    if not tsv_path.exists():
        raise FileNotFoundError(f"OCR source requested but {tsv_path} does not exist")
    if not dpi_path.exists():
        raise FileNotFoundError(f"missing DPI sidecar {dpi_path} (required for OCR ingestion)")
    dpi = float(dpi_path.read_text(encoding="ascii").strip())
    return parse_ocr_tsv(
        tsv_path.read_bytes(), (annotation.page_width, annotation.page_height), dpi
    )
