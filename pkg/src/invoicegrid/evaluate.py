"""Overlap-based field accuracy scoring of prediction masks.

Pipeline per document: class mask -> connected components -> component boxes
back-projected to page coordinates -> words assigned to each region when the
region covers more than `threshold` of the word's area -> string comparison
against the annotated value. Corpus accuracy per field = positives divided by
occurrences, where header fields occur once per document and line-item fields
once per table row.

The oracle mode runs the same pipeline on masks rasterized from the ground
truth annotations, bounding what any model could score.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .annotations import (
    DocumentAnnotation,
    FieldLabel,
    HEADER_LABELS,
    LINE_ITEM_LABELS,
    Word,
    load_annotation,
)
from .geometry import BBox, instance_iou, overlap_fraction
from .grids import GridConfig
from .render import WordSource, words_for
from .targets import FieldSchema, rasterize_semantic
from . import tensorio

DEFAULT_THRESHOLD = 0.5
MIN_COMPONENT_AREA = 4  # cells; single-cell specks are prediction noise


@dataclass(frozen=True)
class Extraction:
    """Predicted instances of one label: one box and one text per instance."""

    label: FieldLabel
    instance_boxes: tuple[BBox, ...]
    texts: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.instance_boxes) != len(self.texts):
            raise ValueError(
                f"{self.label.value}: {len(self.instance_boxes)} boxes vs {len(self.texts)} texts"
            )


@dataclass(frozen=True)
class FieldScore:
    label: FieldLabel
    positives: int
    occurrences: int

    def __post_init__(self) -> None:
        if not 0 <= self.positives <= max(self.occurrences, 0):
            raise ValueError(
                f"{self.label.value}: positives {self.positives} out of range "
                f"for {self.occurrences} occurrences"
            )

    @property
    def accuracy(self) -> float:
        return self.positives / self.occurrences if self.occurrences else 0.0


def components(
    mask: np.ndarray, class_index: int, min_area: int = MIN_COMPONENT_AREA
) -> list[BBox]:
    """Tight bounding boxes of 4-connected components of one class.

    Components smaller than min_area cells are dropped. Boxes are in grid
    coordinates (x = columns, y = rows) and sorted by (top row, left column).
    """
    labeled, count = ndimage.label(mask == class_index)  # default: 4-connectivity
    if count == 0:
        return []
    sizes = np.bincount(labeled.ravel())
    boxes = []
    for lbl, sl in enumerate(ndimage.find_objects(labeled), start=1):
        if sl is None or sizes[lbl] < min_area:
            continue
        boxes.append(BBox(sl[1].start, sl[0].start, sl[1].stop, sl[0].stop))
    boxes.sort(key=lambda b: (b.y0, b.x0))
    return boxes


def grid_to_page(box: BBox, page_size: tuple[float, float], cfg: GridConfig) -> BBox:
    """Inverse of the page->grid scaling; cell units back to page points."""
    pw, ph = page_size
    return BBox(
        box.x0 * pw / cfg.grid_width,
        box.y0 * ph / cfg.grid_height,
        box.x1 * pw / cfg.grid_width,
        box.y1 * ph / cfg.grid_height,
    )


def assign_words(
    region: BBox, words: list[Word], threshold: float = DEFAULT_THRESHOLD
) -> str:
    """Words whose area is covered > threshold by the region, in reading order."""
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    picked = [
        w
        for w in sorted(words, key=lambda w: w.reading_order)
        if overlap_fraction(w.box, region) > threshold
    ]
    return " ".join(w.text for w in picked)


def extractions_from_mask(
    mask: np.ndarray,
    page_size: tuple[float, float],
    cfg: GridConfig,
    schema: FieldSchema,
    words: list[Word],
    threshold: float = DEFAULT_THRESHOLD,
    min_area: int = MIN_COMPONENT_AREA,
) -> list[Extraction]:
    """Run components -> page boxes -> word assignment for every field class."""
    out = []
    for label in schema.labels:
        regions = [
            grid_to_page(b, page_size, cfg)
            for b in components(mask, schema.label_index(label), min_area)
        ]
        out.append(
            Extraction(
                label=label,
                instance_boxes=tuple(regions),
                texts=tuple(assign_words(r, words, threshold) for r in regions),
            )
        )
    return out


def _normalize(s: str) -> str:
    return " ".join(s.split())


def score_document(
    extractions: list[Extraction], annotation: DocumentAnnotation
) -> list[FieldScore]:
    """Match predicted instances to annotated ones and count exact values.

    Matching is greedy by descending IoU (multi-box ground-truth instances use
    the IoU of their box union); ties fall back to prediction order, which
    `components` already fixed as (top row, left column). Ground-truth
    instances left unmatched still count as occurrences.
    """
    by_label = {e.label: e for e in extractions}
    scores = []
    for label in FieldLabel:
        gts = [f for f in annotation.fields if f.label is label]
        pred = by_label.get(label)
        pred_boxes = list(pred.instance_boxes) if pred else []
        pred_texts = list(pred.texts) if pred else []

        pairs = []
        for pi, pbox in enumerate(pred_boxes):
            for gi, gt in enumerate(gts):
                overlap = instance_iou([pbox], list(gt.boxes))
                if overlap > 0.0:
                    pairs.append((-overlap, pi, gi))
        pairs.sort()

        matched_pred: set[int] = set()
        matched_gt: set[int] = set()
        positives = 0
        for _, pi, gi in pairs:
            if pi in matched_pred or gi in matched_gt:
                continue
            matched_pred.add(pi)
            matched_gt.add(gi)
            if _normalize(pred_texts[pi]) == _normalize(gts[gi].value):
                positives += 1
        scores.append(FieldScore(label=label, positives=positives, occurrences=len(gts)))
    return scores


def _merge_scores(per_doc: list[list[FieldScore]]) -> list[FieldScore]:
    totals = {label: [0, 0] for label in FieldLabel}
    for scores in per_doc:
        for s in scores:
            totals[s.label][0] += s.positives
            totals[s.label][1] += s.occurrences
    return [
        FieldScore(label=label, positives=p, occurrences=o)
        for label, (p, o) in totals.items()
    ]


def _corpus_annotations(corpus_dir: Path) -> list[Path]:
    manifest = corpus_dir / "manifest.json"
    if manifest.exists():
        entries = json.loads(manifest.read_text(encoding="utf-8"))["documents"]
        return [corpus_dir / f"{e['id']}.json" for e in entries]
    return sorted(p for p in corpus_dir.glob("*.json") if p.name != "manifest.json")


def _evaluate_corpus(
    corpus_dir: Path | str,
    mask_for,
    word_source: WordSource | str,
    threshold: float,
    cfg: GridConfig,
    schema: FieldSchema,
    min_area: int,
) -> tuple[list[FieldScore], int, list[dict]]:
    corpus_dir = Path(corpus_dir)
    per_doc: list[list[FieldScore]] = []
    errors: list[dict] = []
    count = 0
    for path in _corpus_annotations(corpus_dir):
        try:
            annotation = load_annotation(path)
            words = words_for(annotation, word_source, corpus_dir)
            mask = mask_for(annotation)
            extractions = extractions_from_mask(
                mask,
                (annotation.page_width, annotation.page_height),
                cfg,
                schema,
                words,
                threshold,
                min_area,
            )
            per_doc.append(score_document(extractions, annotation))
            count += 1
        except Exception as exc:  # keep evaluating; report at the end
            errors.append({"doc_id": path.stem, "error": str(exc)})
    return _merge_scores(per_doc), count, errors


def _report(
    corpus_dir: Path | str,
    word_source: WordSource | str,
    threshold: float,
    scores: list[FieldScore],
    documents: int,
    errors: list[dict],
) -> dict:
    return {
        "corpus": str(corpus_dir),
        "word_source": WordSource(word_source).value,
        "threshold": threshold,
        "documents": documents,
        "fields": [
            {
                "label": s.label.value,
                "positives": s.positives,
                "occurrences": s.occurrences,
                "accuracy": s.accuracy,
            }
            for s in scores
        ],
        "errors": errors,
    }


def oracle_eval(
    corpus_dir: Path | str,
    word_source: WordSource | str = WordSource.EXACT,
    threshold: float = DEFAULT_THRESHOLD,
    cfg: GridConfig | None = None,
    schema: FieldSchema | None = None,
    min_area: int = MIN_COMPONENT_AREA,
) -> dict:
    """Score ground-truth masks: the ceiling any model could reach."""
    cfg = cfg or GridConfig()
    schema = schema or FieldSchema()

    def mask_for(annotation: DocumentAnnotation) -> np.ndarray:
        return rasterize_semantic(
            list(annotation.fields),
            (annotation.page_width, annotation.page_height),
            cfg,
            schema,
        )

    scores, count, errors = _evaluate_corpus(
        corpus_dir, mask_for, word_source, threshold, cfg, schema, min_area
    )
    return _report(corpus_dir, word_source, threshold, scores, count, errors)


def eval_predictions(
    corpus_dir: Path | str,
    pred_dir: Path | str,
    word_source: WordSource | str = WordSource.EXACT,
    threshold: float = DEFAULT_THRESHOLD,
    cfg: GridConfig | None = None,
    schema: FieldSchema | None = None,
    min_area: int = MIN_COMPONENT_AREA,
) -> dict:
    """Score stored prediction masks ({id}.pred.t, falling back to {id}.sem.t).

    The fallback lets a directory of exported ground-truth bundles be scored
    directly, which must reproduce oracle_eval exactly.
    """
    cfg = cfg or GridConfig()
    schema = schema or FieldSchema()
    pred_dir = Path(pred_dir)

    def mask_for(annotation: DocumentAnnotation) -> np.ndarray:
        path = pred_dir / f"{annotation.doc_id}.pred.t"
        if not path.exists():
            path = pred_dir / f"{annotation.doc_id}.sem.t"
        if not path.exists():
            raise FileNotFoundError(
                f"no prediction mask {annotation.doc_id}.pred.t (or .sem.t) in {pred_dir}"
            )
        mask = tensorio.read_tensor(path)
        expected = (cfg.grid_height, cfg.grid_width)
        if mask.shape != expected:
            raise ValueError(f"{path.name}: mask shape {mask.shape} != {expected}")
        if mask.dtype != np.uint8 or int(mask.max()) > schema.background_index:
            raise ValueError(
                f"{path.name}: mask must be u8 class indices <= {schema.background_index}"
            )
        return mask

    scores, count, errors = _evaluate_corpus(
        corpus_dir, mask_for, word_source, threshold, cfg, schema, min_area
    )
    return _report(corpus_dir, word_source, threshold, scores, count, errors)


# Column orders of the two result tables: header fields then line-item fields.
_HEADER_TABLE = (
    FieldLabel.COMPANY_NAME,
    FieldLabel.INVOICE_NUMBER,
    FieldLabel.INVOICE_DATE,
    FieldLabel.INVOICE_AMOUNT,
    FieldLabel.COMPANY_ADDRESS,
)
_ITEM_TABLE = LINE_ITEM_LABELS


def report_table(report: dict) -> str:
    """Plain-text accuracy tables, one row per run, columns as in the reports."""
    acc = {f["label"]: f["accuracy"] for f in report["fields"]}

    def block(title: str, labels) -> list[str]:
        names = [l.value for l in labels]
        cells = [f"{100.0 * acc.get(l.value, 0.0):.1f}%" for l in labels]
        widths = [max(len(n), len(c)) for n, c in zip(names, cells)]
        head = "  ".join(n.ljust(w) for n, w in zip(names, widths))
        row = "  ".join(c.ljust(w) for c, w in zip(cells, widths))
        return [title, head, row]

    lines = block("header fields", _HEADER_TABLE)
    lines.append("")
    lines += block("line item fields", _ITEM_TABLE)
    lines.append("")
    lines.append(
        f"documents: {report['documents']}   word source: {report['word_source']}   "
        f"threshold: {report['threshold']}   errors: {len(report.get('errors', []))}"
    )
    return "\n".join(lines)
