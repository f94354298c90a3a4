"""Training targets: semantic class masks and anchor-box regression tensors.

Three tensors per document feed the three decoder heads:
  semantic  (H, W)      u8  class indices, background = F
  box mask  (H, W, 2N)  u8  per anchor (foreground, background); (0,0) = ignore
  box delta (H, W, 4N)  f32 per anchor (tx, ty, tw, th), supervised where fg=1

Anchors sit on a stride-1 lattice: one anchor of each of the N shapes is
centered at (c + 0.5, r + 0.5) for every cell. Box coordinates here live in
continuous grid units (x = columns, y = rows).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .annotations import DocumentAnnotation, FieldInstance, FieldLabel
from .geometry import BBox, iou
from .grids import (
    GridConfig,
    HashedEmbedding,
    build_chargrid,
    build_wordgrid,
    scale_to_grid,
    to_cell,
)
from . import tensorio


@dataclass(frozen=True)
class FieldSchema:
    """Channel order of the F extractable classes; background appended as F."""

    labels: tuple[FieldLabel, ...] = tuple(FieldLabel)

    @property
    def num_fields(self) -> int:
        return len(self.labels)

    @property
    def background_index(self) -> int:
        return self.num_fields

    def label_index(self, label: FieldLabel) -> int:
        return self.labels.index(label)


DEFAULT_ANCHOR_SHAPES = ((4, 4), (4, 8), (4, 16), (4, 32))  # (height, width) cells


@dataclass(frozen=True)
class AnchorSet:
    """N anchor shapes per cell; wide and short, like printed text lines."""

    shapes: tuple[tuple[int, int], ...] = DEFAULT_ANCHOR_SHAPES
    fg_iou: float = 0.5
    bg_iou: float = 0.2

    def __post_init__(self) -> None:
        if len(self.shapes) < 1:
            raise ValueError("need at least one anchor shape")
        for h, w in self.shapes:
            if h <= 0 or w <= 0:
                raise ValueError(f"anchor shapes must be positive, got ({h}, {w})")
        if not self.fg_iou > self.bg_iou:
            raise ValueError(f"fg_iou {self.fg_iou} must exceed bg_iou {self.bg_iou}")

    @property
    def count(self) -> int:
        return len(self.shapes)


@dataclass(frozen=True)
class BoxTargets:
    box_mask: np.ndarray  # (H, W, 2N) u8
    box_deltas: np.ndarray  # (H, W, 4N) f32


def rasterize_semantic(
    fields: list[FieldInstance],
    page_size: tuple[float, float],
    cfg: GridConfig,
    schema: FieldSchema,
) -> np.ndarray:
    """(H, W) u8 mask: background index F except over field boxes.

    Fields are painted in document order; on cell collisions the later field
    wins.
    """
    mask = np.full(
        (cfg.grid_height, cfg.grid_width), schema.background_index, dtype=np.uint8
    )
    for f in fields:
        idx = schema.label_index(f.label)
        for box in f.boxes:
            r0, c0, r1, c1 = to_cell(box, page_size, cfg)
            mask[r0:r1, c0:c1] = idx
    return mask


def _anchor_edges(lo: int, hi: int, size: int) -> tuple[np.ndarray, np.ndarray]:
    centers = np.arange(lo, hi, dtype=np.float64) + 0.5
    return centers - size / 2.0, centers + size / 2.0


def encode_boxes(
    gt_boxes: list[BBox], anchors: AnchorSet, cfg: GridConfig | None = None
) -> BoxTargets:
    """Label every anchor and compute deltas to its best-matching gt box.

    Foreground: IoU >= fg_iou with any gt box, plus the single best anchor of
    every gt box (so no gt box is ever unsupervised). Background: best IoU
    < bg_iou. Everything between is ignore, encoded as (0, 0).

    IoU is only evaluated inside a per-(box, shape) window where it can be
    nonzero; the rest of the lattice never touches a gt box.
    """
    cfg = cfg or GridConfig()
    H, W, N = cfg.grid_height, cfg.grid_width, anchors.count
    best_iou = np.zeros((H, W, N), dtype=np.float64)
    best_gt = np.full((H, W, N), -1, dtype=np.int32)
    forced: list[tuple[int, int, int]] = []

    for gi, g in enumerate(gt_boxes):
        if not (0 <= g.x0 and g.x1 <= W and 0 <= g.y0 and g.y1 <= H):
            raise ValueError(f"gt box {gi} outside the {H}x{W} grid: {g}")
        g_area = g.area
        g_best = 0.0
        g_pos: tuple[int, int, int] | None = None
        for n, (ah, aw) in enumerate(anchors.shapes):
            c_lo = max(0, math.floor(g.x0 - aw / 2.0 - 0.5))
            c_hi = min(W, math.ceil(g.x1 + aw / 2.0 - 0.5) + 1)
            r_lo = max(0, math.floor(g.y0 - ah / 2.0 - 0.5))
            r_hi = min(H, math.ceil(g.y1 + ah / 2.0 - 0.5) + 1)
            if c_lo >= c_hi or r_lo >= r_hi:
                continue
            ax0, ax1 = _anchor_edges(c_lo, c_hi, aw)
            ay0, ay1 = _anchor_edges(r_lo, r_hi, ah)
            ix = np.clip(np.minimum(ax1, g.x1) - np.maximum(ax0, g.x0), 0.0, None)
            iy = np.clip(np.minimum(ay1, g.y1) - np.maximum(ay0, g.y0), 0.0, None)
            inter = iy[:, None] * ix[None, :]
            window_iou = inter / (aw * ah + g_area - inter)

            view = best_iou[r_lo:r_hi, c_lo:c_hi, n]
            improved = window_iou > view
            view[improved] = window_iou[improved]
            best_gt[r_lo:r_hi, c_lo:c_hi, n][improved] = gi

            m = float(window_iou.max(initial=0.0))
            if m > g_best:  # strict: earliest shape then row-major wins ties
                g_best = m
                r_off, c_off = np.unravel_index(
                    int(np.argmax(window_iou)), window_iou.shape
                )
                g_pos = (r_lo + int(r_off), c_lo + int(c_off), n)
        if g_pos is None:
            raise ValueError(f"gt box {gi} has zero IoU with every anchor: {g}")
        forced.append(g_pos)

    fg = best_iou >= anchors.fg_iou
    for r, c, n in forced:
        fg[r, c, n] = True
    bg = (best_iou < anchors.bg_iou) & ~fg

    mask = np.zeros((H, W, 2 * N), dtype=np.uint8)
    mask[..., 0::2] = fg
    mask[..., 1::2] = bg

    deltas = np.zeros((H, W, 4 * N), dtype=np.float32)
    if gt_boxes:
        shapes = np.asarray(anchors.shapes, dtype=np.float64)  # (N, 2) h, w
        centers = np.asarray(
            [((b.x0 + b.x1) / 2.0, (b.y0 + b.y1) / 2.0, b.width, b.height) for b in gt_boxes]
        )
        rs, cs, ns = np.nonzero(fg)
        match = best_gt[rs, cs, ns]
        gx, gy, gw, gh = (centers[match, k] for k in range(4))
        ah, aw = shapes[ns, 0], shapes[ns, 1]
        xa, ya = cs + 0.5, rs + 0.5
        deltas[rs, cs, 4 * ns + 0] = (gx - xa) / aw
        deltas[rs, cs, 4 * ns + 1] = (gy - ya) / ah
        deltas[rs, cs, 4 * ns + 2] = np.log(gw / aw)
        deltas[rs, cs, 4 * ns + 3] = np.log(gh / ah)
    return BoxTargets(box_mask=mask, box_deltas=deltas)


def decode_boxes(
    box_mask_scores: np.ndarray,
    box_deltas: np.ndarray,
    anchors: AnchorSet,
    score_threshold: float = 0.5,
    nms_iou: float = 0.5,
) -> list[tuple[BBox, float]]:
    """Invert the encoding: scores + deltas -> scored boxes after greedy NMS.

    Foreground probability is the per-anchor softmax over (fg, bg), which
    equals sigmoid(fg - bg); thresholding happens on the logit difference so
    only surviving anchors pay for the exponential.
    """
    if not 0.0 < score_threshold < 1.0:
        raise ValueError(f"score_threshold must be in (0, 1), got {score_threshold}")
    H, W, twoN = box_mask_scores.shape
    N = anchors.count
    if twoN != 2 * N:
        raise ValueError(f"score channels {twoN} != 2N = {2 * N}")
    if box_deltas.shape != (H, W, 4 * N):
        raise ValueError(f"delta shape {box_deltas.shape} != {(H, W, 4 * N)}")

    scores = box_mask_scores.astype(np.float64, copy=False)
    diff = scores[..., 0::2] - scores[..., 1::2]  # (H, W, N)
    logit_threshold = math.log(score_threshold / (1.0 - score_threshold))
    picks = np.argwhere(diff >= logit_threshold)  # row-major: natural tie order

    candidates: list[tuple[BBox, float]] = []
    shapes = anchors.shapes
    for r, c, n in picks:
        prob = 1.0 / (1.0 + math.exp(-diff[r, c, n]))
        ah, aw = shapes[n]
        tx, ty, tw, th = box_deltas[r, c, 4 * n : 4 * n + 4]
        xc = float(tx) * aw + (c + 0.5)
        yc = float(ty) * ah + (r + 0.5)
        w = math.exp(float(tw)) * aw
        h = math.exp(float(th)) * ah
        x0 = max(0.0, xc - w / 2.0)
        y0 = max(0.0, yc - h / 2.0)
        x1 = min(float(W), xc + w / 2.0)
        y1 = min(float(H), yc + h / 2.0)
        if x0 < x1 and y0 < y1:
            candidates.append((BBox(x0, y0, x1, y1), prob))

    order = sorted(range(len(candidates)), key=lambda i: -candidates[i][1])
    kept: list[tuple[BBox, float]] = []
    for i in order:  # ties stay in (row, col, anchor) order via stable sort
        box, prob = candidates[i]
        if all(iou(box, k) <= nms_iou for k, _ in kept):
            kept.append((box, prob))
    return kept


def line_item_grid_boxes(
    annotation: DocumentAnnotation, cfg: GridConfig
) -> list[BBox]:
    """Regression targets: line-item instance boxes in continuous grid units."""
    page = (annotation.page_width, annotation.page_height)
    boxes: list[BBox] = []
    for f in annotation.fields:
        if f.label.is_line_item:
            boxes.extend(scale_to_grid(b, page, cfg) for b in f.boxes)
    return boxes


def export_targets(
    annotation: DocumentAnnotation,
    out_dir: Path | str,
    cfg: GridConfig | None = None,
    schema: FieldSchema | None = None,
    anchors: AnchorSet | None = None,
    kind: str = "chargrid",
    provider=None,
) -> dict[str, Path]:
    """Write one tensor bundle for a document; returns name -> path.

    kind selects the model input ("chargrid" or "wordgrid"); the three target
    tensors are always written.
    """
    cfg = cfg or GridConfig()
    schema = schema or FieldSchema()
    anchors = anchors or AnchorSet()
    out = Path(out_dir)
    page = (annotation.page_width, annotation.page_height)
    words = annotation.words_in_reading_order()

    paths: dict[str, Path] = {}
    if kind == "chargrid":
        grid = build_chargrid(words, page, cfg)
        paths["input"] = out / f"{annotation.doc_id}.chargrid.t"
    elif kind == "wordgrid":
        provider = provider or HashedEmbedding(cfg.embed_dim)
        grid = build_wordgrid(words, page, cfg, provider)
        paths["input"] = out / f"{annotation.doc_id}.wordgrid.t"
    else:
        raise ValueError(f"unknown input kind {kind!r} (want chargrid or wordgrid)")
    tensorio.write_tensor(paths["input"], grid)

    sem = rasterize_semantic(list(annotation.fields), page, cfg, schema)
    targets = encode_boxes(line_item_grid_boxes(annotation, cfg), anchors, cfg)
    for name, suffix, array in (
        ("semantic", "sem", sem),
        ("box_mask", "boxmask", targets.box_mask),
        ("box_deltas", "boxdelta", targets.box_deltas),
    ):
        paths[name] = out / f"{annotation.doc_id}.{suffix}.t"
        tensorio.write_tensor(paths[name], array)
    return paths


class SemanticMaskEncoder(TransformerMixin, BaseEstimator):
    """Transformer over annotations: each becomes an (H, W) u8 class mask."""

    def __init__(self, grid_height: int = 364, grid_width: int = 256):
        self.grid_height = grid_height
        self.grid_width = grid_width

    def fit(self, X: list[DocumentAnnotation], y=None) -> "SemanticMaskEncoder":
        return self

    def transform(self, X: list[DocumentAnnotation]) -> list[np.ndarray]:
        cfg = GridConfig(self.grid_height, self.grid_width)
        schema = FieldSchema()
        return [
            rasterize_semantic(
                list(doc.fields), (doc.page_width, doc.page_height), cfg, schema
            )
            for doc in X
        ]


class BoxTargetEncoder(TransformerMixin, BaseEstimator):
    """Transformer over annotations: each becomes a BoxTargets pair."""

    def __init__(
        self,
        grid_height: int = 364,
        grid_width: int = 256,
        fg_iou: float = 0.5,
        bg_iou: float = 0.2,
    ):
        self.grid_height = grid_height
        self.grid_width = grid_width
        self.fg_iou = fg_iou
        self.bg_iou = bg_iou

    def fit(self, X: list[DocumentAnnotation], y=None) -> "BoxTargetEncoder":
        self._anchors()
        return self

    def transform(self, X: list[DocumentAnnotation]) -> list[BoxTargets]:
        cfg = GridConfig(self.grid_height, self.grid_width)
        anchors = self._anchors()
        return [
            encode_boxes(line_item_grid_boxes(doc, cfg), anchors, cfg) for doc in X
        ]

    def _anchors(self) -> AnchorSet:
        return AnchorSet(fg_iou=self.fg_iou, bg_iou=self.bg_iou)
