"""Deterministic synthetic-invoice benchmark pipeline.

Generates annotated invoice PDFs from jittered templates, encodes pages as
character-index and word-embedding grids, builds semantic-segmentation and
anchor-box training targets, and scores prediction masks with an
overlap-threshold field-accuracy metric.
"""

from .annotations import (
    DocumentAnnotation,
    FieldInstance,
    FieldLabel,
    Word,
    load_annotation,
    save_annotation,
    validate_annotation,
)
from .geometry import BBox, iou, overlap_fraction
from .grids import (
    ChargridEncoder,
    GridConfig,
    HashedEmbedding,
    SidecarEmbedding,
    WordgridEncoder,
    build_chargrid,
    build_wordgrid,
    to_cell,
)
from .layout import Template, instantiate, list_templates, load_template
from .records import InvoiceRecord, Lexicons, synth_record
from .render import WordSource, emit_pdf, parse_ocr_tsv, words_for
from .targets import (
    AnchorSet,
    BoxTargetEncoder,
    BoxTargets,
    FieldSchema,
    SemanticMaskEncoder,
    decode_boxes,
    encode_boxes,
    export_targets,
    rasterize_semantic,
)
from .evaluate import (
    Extraction,
    FieldScore,
    assign_words,
    components,
    eval_predictions,
    grid_to_page,
    oracle_eval,
    score_document,
)
from .tensorio import read_tensor, write_tensor

__version__ = "0.1.0"

__all__ = [
    "AnchorSet",
    "BBox",
    "BoxTargetEncoder",
    "BoxTargets",
    "ChargridEncoder",
    "DocumentAnnotation",
    "Extraction",
    "FieldInstance",
    "FieldLabel",
    "FieldSchema",
    "FieldScore",
    "GridConfig",
    "HashedEmbedding",
    "InvoiceRecord",
    "Lexicons",
    "SemanticMaskEncoder",
    "SidecarEmbedding",
    "Template",
    "Word",
    "WordSource",
    "WordgridEncoder",
    "assign_words",
    "build_chargrid",
    "build_wordgrid",
    "components",
    "decode_boxes",
    "emit_pdf",
    "encode_boxes",
    "eval_predictions",
    "export_targets",
    "grid_to_page",
    "instantiate",
    "iou",
    "list_templates",
    "load_annotation",
    "load_template",
    "oracle_eval",
    "overlap_fraction",
    "parse_ocr_tsv",
    "rasterize_semantic",
    "read_tensor",
    "save_annotation",
    "score_document",
    "synth_record",
    "to_cell",
    "validate_annotation",
    "words_for",
    "write_tensor",
]
