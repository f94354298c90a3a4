"""Corpus-level drivers: generate documents, export tensors, track a manifest.

Layout of a corpus directory (all files flat, one manifest):

    manifest.json
    doc-00000.pdf        rendered page
    doc-00000.json       annotation sidecar
    doc-00000.chargrid.t / .wordgrid.t   model input (gridify step)
    doc-00000.sem.t / .boxmask.t / .boxdelta.t   targets step

Every per-document artifact is a pure function of (corpus seed, index,
template set), so any worker count produces byte-identical trees. Documents
are assigned to templates round-robin and to splits by index range, in
generation order.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

from .annotations import FieldLabel, load_annotation, save_annotation, validate_annotation
from .grids import (
    GridConfig,
    HashedEmbedding,
    SidecarEmbedding,
    build_chargrid,
    build_wordgrid,
    vocab_hash,
    VOCAB_SIZE,
)
from .layout import Template, default_template_dir, instantiate, list_templates
from .records import default_lexicons, load_lexicons, synth_record
from .render import emit_pdf
from .rng import fnv1a64, mix_seed
from .targets import AnchorSet, FieldSchema, encode_boxes, line_item_grid_boxes, rasterize_semantic
from . import tensorio

MANIFEST_NAME = "manifest.json"
MANIFEST_VERSION = 1

DEFAULT_COUNTS = {"train": 8000, "val": 1000, "test": 3000}
SPLITS = ("train", "val", "test")


class CorpusError(RuntimeError):
    pass


@dataclass(frozen=True)
class CorpusConfig:
    out_dir: str
    seed: int = 0
    counts: dict = field(default_factory=lambda: dict(DEFAULT_COUNTS))
    template_dir: str | None = None  # None: packaged templates
    lexicon_dir: str | None = None  # None: packaged lexicons
    grid_height: int = 364
    grid_width: int = 256
    embed_dim: int = 96
    input_kind: str = "chargrid"
    embedding_source: str = "hashed"  # or path to an EMBD sidecar file
    workers: int = 1

    def __post_init__(self) -> None:
        for split in SPLITS:
            if self.counts.get(split, 0) < 0:
                raise ValueError(f"counts.{split} must be >= 0")
        if self.input_kind not in ("chargrid", "wordgrid"):
            raise ValueError(f"input_kind must be chargrid or wordgrid, got {self.input_kind!r}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")

    @property
    def total(self) -> int:
        return sum(self.counts.get(s, 0) for s in SPLITS)

    def grid_config(self) -> GridConfig:
        return GridConfig(self.grid_height, self.grid_width, self.embed_dim)


def split_for_index(index: int, counts: dict) -> str:
    train, val = counts.get("train", 0), counts.get("val", 0)
    if index < train:
        return "train"
    if index < train + val:
        return "val"
    return "test"


def doc_id_for_index(index: int) -> str:
    return f"doc-{index:05d}"


@lru_cache(maxsize=None)
def _templates_for(dir_str: str | None) -> tuple[Template, ...]:
    directory = Path(dir_str) if dir_str else default_template_dir()
    return tuple(list_templates(directory))


@lru_cache(maxsize=None)
def _lexicons_for(dir_str: str | None):
    return load_lexicons(dir_str) if dir_str else default_lexicons()


def template_set_hash(template_dir: str | None) -> int:
    directory = Path(template_dir) if template_dir else default_template_dir()
    blob = b"".join(p.read_bytes() for p in sorted(directory.glob("*.json")))
    return fnv1a64(blob)


def generate_document(
    out_dir: str,
    index: int,
    corpus_seed: int,
    template_dir: str | None,
    lexicon_dir: str | None,
) -> dict:
    """Produce one document's PDF + annotation; returns its manifest entry."""
    templates = _templates_for(template_dir)
    template = templates[index % len(templates)]
    doc_seed = mix_seed(corpus_seed, index)
    record = synth_record(mix_seed(doc_seed, 0), _lexicons_for(lexicon_dir))
    layout = instantiate(record, template, mix_seed(doc_seed, 1))
    doc_id = doc_id_for_index(index)
    pdf, annotation = emit_pdf(layout, doc_id)
    out = Path(out_dir)
    (out / f"{doc_id}.pdf").write_bytes(pdf)
    save_annotation(annotation, out / f"{doc_id}.json")
    return {"id": doc_id, "seed": doc_seed, "template_id": template.template_id}


def _generate_task(args: tuple) -> tuple[int, dict | None, str | None]:
    out_dir, index, seed, template_dir, lexicon_dir = args
    try:
        entry = generate_document(out_dir, index, seed, template_dir, lexicon_dir)
        return index, entry, None
    except Exception as exc:
        return index, None, str(exc)


def _run_tasks(task_fn, tasks: list[tuple], workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [task_fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunk = max(1, len(tasks) // (workers * 8))
        return list(pool.map(task_fn, tasks, chunksize=chunk))


def generate_corpus(config: CorpusConfig) -> dict:
    """Generate the whole corpus and write its manifest; returns the manifest.

    Any per-document failure aborts the run (a generator that silently skips
    documents would corrupt the split protocol).
    """
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    templates = _templates_for(config.template_dir)

    tasks = [
        (config.out_dir, i, config.seed, config.template_dir, config.lexicon_dir)
        for i in range(config.total)
    ]
    results = _run_tasks(_generate_task, tasks, config.workers)
    results.sort(key=lambda r: r[0])
    failures = [(i, err) for i, _, err in results if err is not None]
    if failures:
        index, err = failures[0]
        raise CorpusError(f"{doc_id_for_index(index)}: {err}")

    documents = [
        {**entry, "split": split_for_index(i, config.counts)} for i, entry, _ in results
    ]
    manifest = {
        "version": MANIFEST_VERSION,
        "seed": config.seed,
        "counts": {s: config.counts.get(s, 0) for s in SPLITS},
        "grid": {
            "height": config.grid_height,
            "width": config.grid_width,
            "embed_dim": config.embed_dim,
            "vocab_size": VOCAB_SIZE,
            "vocab_hash": f"{vocab_hash():016x}",
        },
        "fields": [label.value for label in FieldLabel],
        "templates": {
            "count": len(templates),
            "ids": [t.template_id for t in templates],
            "set_hash": f"{template_set_hash(config.template_dir):016x}",
        },
        "documents": documents,
    }
    write_manifest(out / MANIFEST_NAME, manifest)
    return manifest


def write_manifest(path: Path | str, manifest: dict) -> None:
    Path(path).write_bytes(
        json.dumps(manifest, ensure_ascii=False, indent=2).encode("utf-8") + b"\n"
    )


def load_manifest(corpus_dir: Path | str) -> dict:
    path = Path(corpus_dir) / MANIFEST_NAME
    if not path.exists():
        raise CorpusError(f"no {MANIFEST_NAME} in {corpus_dir}")
    return json.loads(path.read_text(encoding="utf-8"))


def _gridify_task(args: tuple) -> tuple[str, str | None]:
    corpus_dir, doc_id, kind, h, w, d, sidecar = args
    try:
        cfg = GridConfig(h, w, d)
        annotation = load_annotation(Path(corpus_dir) / f"{doc_id}.json")
        words = annotation.words_in_reading_order()
        page = (annotation.page_width, annotation.page_height)
        if kind == "chargrid":
            grid = build_chargrid(words, page, cfg)
        else:
            provider = _provider_for(sidecar, d)
            grid = build_wordgrid(words, page, cfg, provider)
        tensorio.write_tensor(Path(corpus_dir) / f"{doc_id}.{kind}.t", grid)
        return doc_id, None
    except Exception as exc:
        return doc_id, str(exc)


@lru_cache(maxsize=None)
def _provider_for(sidecar: str | None, dim: int):
    return SidecarEmbedding(sidecar) if sidecar else HashedEmbedding(dim)


def gridify_corpus(
    corpus_dir: Path | str,
    kind: str = "chargrid",
    embedding_source: str = "hashed",
    workers: int = 1,
) -> list[tuple[str, str]]:
    """Write the model-input grid for every document; returns per-doc errors."""
    if kind not in ("chargrid", "wordgrid"):
        raise ValueError(f"kind must be chargrid or wordgrid, got {kind!r}")
    corpus_dir = Path(corpus_dir)
    manifest = load_manifest(corpus_dir)
    g = manifest["grid"]
    sidecar = None if embedding_source == "hashed" else embedding_source
    tasks = [
        (str(corpus_dir), e["id"], kind, g["height"], g["width"], g["embed_dim"], sidecar)
        for e in manifest["documents"]
    ]
    results = _run_tasks(_gridify_task, tasks, workers)
    errors = [(doc_id, err) for doc_id, err in results if err is not None]

    if kind == "chargrid":
        dims = [g["height"], g["width"]]
        embedding = None
    else:
        dims = [g["height"], g["width"], g["embed_dim"]]
        embedding = {"source": sidecar or "hashed", "dim": g["embed_dim"]}
    manifest["input"] = {"kind": kind, "dims": dims, "embedding": embedding}
    write_manifest(corpus_dir / MANIFEST_NAME, manifest)
    return errors


def _targets_task(args: tuple) -> tuple[str, str | None]:
    corpus_dir, doc_id, h, w, shapes, fg_iou, bg_iou = args
    try:
        cfg = GridConfig(h, w)
        schema = FieldSchema()
        anchors = AnchorSet(shapes=shapes, fg_iou=fg_iou, bg_iou=bg_iou)
        annotation = load_annotation(Path(corpus_dir) / f"{doc_id}.json")
        page = (annotation.page_width, annotation.page_height)
        sem = rasterize_semantic(list(annotation.fields), page, cfg, schema)
        targets = encode_boxes(line_item_grid_boxes(annotation, cfg), anchors, cfg)
        base = Path(corpus_dir)
        tensorio.write_tensor(base / f"{doc_id}.sem.t", sem)
        tensorio.write_tensor(base / f"{doc_id}.boxmask.t", targets.box_mask)
        tensorio.write_tensor(base / f"{doc_id}.boxdelta.t", targets.box_deltas)
        return doc_id, None
    except Exception as exc:
        return doc_id, str(exc)


def targets_corpus(
    corpus_dir: Path | str,
    anchors: AnchorSet | None = None,
    workers: int = 1,
) -> list[tuple[str, str]]:
    """Write semantic + box target tensors for every document."""
    corpus_dir = Path(corpus_dir)
    anchors = anchors or AnchorSet()
    manifest = load_manifest(corpus_dir)
    g = manifest["grid"]
    tasks = [
        (str(corpus_dir), e["id"], g["height"], g["width"], anchors.shapes, anchors.fg_iou, anchors.bg_iou)
        for e in manifest["documents"]
    ]
    results = _run_tasks(_targets_task, tasks, workers)
    errors = [(doc_id, err) for doc_id, err in results if err is not None]

    n = anchors.count
    num_fields = len(manifest["fields"])
    manifest["targets"] = {
        "semantic": {"dims": [g["height"], g["width"]], "classes": num_fields + 1},
        "box_mask": {"dims": [g["height"], g["width"], 2 * n]},
        "box_deltas": {"dims": [g["height"], g["width"], 4 * n]},
        "anchors": {
            "shapes": [list(s) for s in anchors.shapes],
            "fg_iou": anchors.fg_iou,
            "bg_iou": anchors.bg_iou,
        },
    }
    write_manifest(corpus_dir / MANIFEST_NAME, manifest)
    return errors


def validate_corpus(corpus_dir: Path | str) -> list[tuple[str, str]]:
    """Re-check every annotation's invariants; returns (doc_id, violation)s."""
    corpus_dir = Path(corpus_dir)
    manifest = load_manifest(corpus_dir)
    problems: list[tuple[str, str]] = []
    for entry in manifest["documents"]:
        path = corpus_dir / f"{entry['id']}.json"
        if not path.exists():
            problems.append((entry["id"], "annotation file missing"))
            continue
        try:
            annotation = load_annotation(path)
        except Exception as exc:
            problems.append((entry["id"], f"unreadable annotation: {exc}"))
            continue
        for violation in validate_annotation(annotation):
            problems.append((entry["id"], violation))
        if annotation.doc_id != entry["id"]:
            problems.append((entry["id"], f"doc_id mismatch: {annotation.doc_id}"))
    return problems
