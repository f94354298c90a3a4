"""Grid encodings of a page: character-index rasters and embedding rasters.

The page is scaled onto a fixed 364x256 cell lattice (portrait A4 aspect).
Chargrid cells hold vocabulary indices; wordgrid cells hold a per-word
embedding vector. Background is index 0 / the zero vector.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from math import ceil, floor
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .annotations import DocumentAnnotation, Word
from .geometry import BBox
from .rng import SplitMix64, fnv1a64

GRID_HEIGHT = 364  # rows
GRID_WIDTH = 256  # columns

BACKGROUND_INDEX = 0
OOV_INDEX = 96
VOCAB_SIZE = 97  # background + 95 printable ASCII + OOV


def char_index(ch: str) -> int:
    """Printable ASCII 0x20..0x7E -> 1..95; everything else -> OOV."""
    cp = ord(ch)
    if 0x20 <= cp <= 0x7E:
        return cp - 0x1F
    return OOV_INDEX


def vocab_hash() -> int:
    """Stable identity of the character->index map, recorded in manifests."""
    spec = ";".join(f"{cp}={cp - 0x1F}" for cp in range(0x20, 0x7F))
    return fnv1a64(f"bg=0;{spec};oov={OOV_INDEX}")


@dataclass(frozen=True)
class GridConfig:
    grid_height: int = GRID_HEIGHT
    grid_width: int = GRID_WIDTH
    embed_dim: int = 96

    def __post_init__(self) -> None:
        if self.grid_height <= 0 or self.grid_width <= 0:
            raise ValueError(f"grid size must be positive, got {self.grid_height}x{self.grid_width}")
        if self.embed_dim <= 0:
            raise ValueError(f"embed_dim must be positive, got {self.embed_dim}")


def to_cell(
    box: BBox, page_size: tuple[float, float], cfg: GridConfig
) -> tuple[int, int, int, int]:
    """Cell rectangle (r0, c0, r1, c1) covering the box; upper bounds exclusive.

    Start edges floor, end edges ceil, so the rectangle never undershoots the
    box. A span that collapses to zero cells is widened to one.
    """
    pw, ph = page_size
    r0 = floor(box.y0 * cfg.grid_height / ph)
    r1 = ceil(box.y1 * cfg.grid_height / ph)
    c0 = floor(box.x0 * cfg.grid_width / pw)
    c1 = ceil(box.x1 * cfg.grid_width / pw)
    r0 = min(max(r0, 0), cfg.grid_height - 1)
    c0 = min(max(c0, 0), cfg.grid_width - 1)
    r1 = min(max(r1, r0 + 1), cfg.grid_height)
    c1 = min(max(c1, c0 + 1), cfg.grid_width)
    return r0, c0, r1, c1


def scale_to_grid(box: BBox, page_size: tuple[float, float], cfg: GridConfig) -> BBox:
    """Continuous grid coordinates (x = columns, y = rows); no cell snapping."""
    pw, ph = page_size
    return BBox(
        box.x0 * cfg.grid_width / pw,
        box.y0 * cfg.grid_height / ph,
        box.x1 * cfg.grid_width / pw,
        box.y1 * cfg.grid_height / ph,
    )


def build_chargrid(
    words: list[Word], page_size: tuple[float, float], cfg: GridConfig
) -> np.ndarray:
    """(H, W) u8 grid of vocabulary indices.

    Each word rectangle is partitioned into len(text) column spans of equal
    nominal width (floor boundaries), one per character. Words are written in
    reading order, so later words win cell collisions.
    """
    grid = np.zeros((cfg.grid_height, cfg.grid_width), dtype=np.uint8)
    for word in sorted(words, key=lambda w: w.reading_order):
        r0, c0, r1, c1 = to_cell(word.box, page_size, cfg)
        n, width = len(word.text), c1 - c0
        for k, ch in enumerate(word.text):
            s0 = c0 + (k * width) // n
            s1 = c0 + ((k + 1) * width) // n
            if s1 > s0:
                grid[r0:r1, s0:s1] = char_index(ch)
    return grid


class EmbeddingProvider:
    """Maps a word string to a fixed-dimension f32 vector, deterministically."""

    dim: int

    def lookup(self, word: str) -> np.ndarray:
        raise NotImplementedError


class HashedEmbedding(EmbeddingProvider):
    """Self-contained pseudo-embedding: hash the word, expand, normalize.

    Not semantically meaningful — it exists so grids can be built and models
    trained with no external NLP dependency. Case-sensitive by construction.
    """

    def __init__(self, dim: int = 96):
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        self.dim = dim

    def lookup(self, word: str) -> np.ndarray:
        stream = SplitMix64(fnv1a64(word))
        vec = np.array(
            [2.0 * stream.next_float() - 1.0 for _ in range(self.dim)], dtype=np.float64
        )
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:  # unreachable in practice; keeps the unit-norm contract
            vec[0] = 1.0
            norm = 1.0
        return (vec / norm).astype(np.float32)


SIDECAR_MAGIC = b"EMBD"
SIDECAR_VERSION = 1


class SidecarEmbedding(EmbeddingProvider):
    """Embeddings read from a per-corpus sidecar file built by external tools."""

    def __init__(self, path: Path | str):
        self.path = Path(path)
        self.dim, self._table = _read_sidecar(self.path)

    def lookup(self, word: str) -> np.ndarray:
        vec = self._table.get(word)
        if vec is None:
            raise KeyError(f"word {word!r} not present in embedding sidecar {self.path}")
        return vec


def _read_sidecar(path: Path) -> tuple[int, dict[str, np.ndarray]]:
    data = path.read_bytes()
    if data[:4] != SIDECAR_MAGIC:
        raise ValueError(f"{path}: bad magic {data[:4]!r}, expected {SIDECAR_MAGIC!r}")
    version, dim = struct.unpack_from("<II", data, 4)
    if version != SIDECAR_VERSION:
        raise ValueError(f"{path}: unsupported sidecar version {version}")
    if dim < 1:
        raise ValueError(f"{path}: non-positive embedding dimension {dim}")
    table: dict[str, np.ndarray] = {}
    offset = 12
    while offset < len(data):
        (wlen,) = struct.unpack_from("<H", data, offset)
        offset += 2
        word = data[offset : offset + wlen].decode("utf-8")
        offset += wlen
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=offset)
        if vec.size != dim:
            raise ValueError(f"{path}: truncated vector for word {word!r}")
        offset += 4 * dim
        table[word] = vec.astype(np.float32)
    return dim, table


def write_sidecar(path: Path | str, table: dict[str, np.ndarray]) -> None:
    dims = {len(v) for v in table.values()}
    if len(dims) != 1:
        raise ValueError(f"all vectors must share one dimension, got {sorted(dims)}")
    (dim,) = dims
    out = bytearray(SIDECAR_MAGIC)
    out += struct.pack("<II", SIDECAR_VERSION, dim)
    for word in sorted(table):
        raw = word.encode("utf-8")
        out += struct.pack("<H", len(raw))
        out += raw
        out += np.asarray(table[word], dtype="<f4").tobytes()
    Path(path).write_bytes(bytes(out))


def build_wordgrid(
    words: list[Word],
    page_size: tuple[float, float],
    cfg: GridConfig,
    provider: EmbeddingProvider,
) -> np.ndarray:
    """(H, W, D) f32 grid; each word's rectangle holds its embedding vector."""
    if provider.dim != cfg.embed_dim:
        raise ValueError(f"provider dim {provider.dim} != config embed_dim {cfg.embed_dim}")
    grid = np.zeros((cfg.grid_height, cfg.grid_width, cfg.embed_dim), dtype=np.float32)
    for word in sorted(words, key=lambda w: w.reading_order):
        try:
            vec = provider.lookup(word.text)
        except Exception as exc:
            raise type(exc)(f"embedding lookup failed for word {word.text!r}: {exc}") from exc
        r0, c0, r1, c1 = to_cell(word.box, page_size, cfg)
        grid[r0:r1, c0:c1, :] = vec
    return grid


class ChargridEncoder(TransformerMixin, BaseEstimator):
    """Transformer over annotations: each becomes an (H, W) u8 index grid."""

    def __init__(self, grid_height: int = GRID_HEIGHT, grid_width: int = GRID_WIDTH):
        self.grid_height = grid_height
        self.grid_width = grid_width

    def fit(self, X: list[DocumentAnnotation], y=None) -> "ChargridEncoder":
        self._config()  # stateless; fit only validates parameters
        return self

    def transform(self, X: list[DocumentAnnotation]) -> list[np.ndarray]:
        cfg = self._config()
        return [
            build_chargrid(list(doc.words), (doc.page_width, doc.page_height), cfg)
            for doc in X
        ]

    def _config(self) -> GridConfig:
        return GridConfig(grid_height=self.grid_height, grid_width=self.grid_width)


class WordgridEncoder(TransformerMixin, BaseEstimator):
    """Transformer over annotations: each becomes an (H, W, D) f32 grid."""

    def __init__(
        self,
        grid_height: int = GRID_HEIGHT,
        grid_width: int = GRID_WIDTH,
        embed_dim: int = 96,
        sidecar_path: str | None = None,
    ):
        self.grid_height = grid_height
        self.grid_width = grid_width
        self.embed_dim = embed_dim
        self.sidecar_path = sidecar_path

    def fit(self, X: list[DocumentAnnotation], y=None) -> "WordgridEncoder":
        self.provider_ = (
            SidecarEmbedding(self.sidecar_path)
            if self.sidecar_path is not None
            else HashedEmbedding(self.embed_dim)
        )
        if self.provider_.dim != self.embed_dim:
            raise ValueError(
                f"sidecar dimension {self.provider_.dim} != embed_dim {self.embed_dim}"
            )
        return self

    def transform(self, X: list[DocumentAnnotation]) -> list[np.ndarray]:
        if not hasattr(self, "provider_"):
            self.fit(X)
        cfg = GridConfig(self.grid_height, self.grid_width, self.embed_dim)
        return [
            build_wordgrid(list(doc.words), (doc.page_width, doc.page_height), cfg, self.provider_)
            for doc in X
        ]
