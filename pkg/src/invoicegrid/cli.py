"""Command-line entry point.

Subcommands mirror the pipeline stages:

    generate     synthesize PDFs + annotations + manifest
    gridify      write model-input grids (chargrid / wordgrid)
    targets      write semantic + box target tensors
    oracle-eval  score ground-truth masks (accuracy ceiling)
    eval         score stored prediction masks
    validate     re-check every annotation invariant

All defaults can come from a --config JSON file; explicit flags win. The
packaged template and lexicon sets can be overridden per invocation or via
INVOICEGRID_TEMPLATE_DIR / INVOICEGRID_LEXICON_DIR.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import evaluate
from .evaluate import DEFAULT_THRESHOLD, MIN_COMPONENT_AREA

ENV_TEMPLATE_DIR = "INVOICEGRID_TEMPLATE_DIR"
ENV_LEXICON_DIR = "INVOICEGRID_LEXICON_DIR"


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _pick(flag, config: dict, key: str, env: str | None = None, default=None):
    """Priority: explicit flag > config file > environment > default."""
    if flag is not None:
        return flag
    if key in config:
        return config[key]
    if env is not None and os.environ.get(env):
        return os.environ[env]
    return default


def _corpus_config(args) -> corpus_mod.CorpusConfig:
    config = _load_config(args.config)
    counts = dict(corpus_mod.DEFAULT_COUNTS)
    counts.update(config.get("counts", {}))
    for split in corpus_mod.SPLITS:
        flag = getattr(args, split)
        if flag is not None:
            counts[split] = flag
    grid = config.get("grid", {})
    out_dir = _pick(args.out_dir, config, "out_dir")
    if out_dir is None:
        raise SystemExit("generate: --out-dir (or config out_dir) is required")
    return corpus_mod.CorpusConfig(
        out_dir=str(out_dir),
        seed=_pick(args.seed, config, "seed", default=0),
        counts=counts,
        template_dir=_pick(args.template_dir, config, "template_dir", ENV_TEMPLATE_DIR),
        lexicon_dir=_pick(args.lexicon_dir, config, "lexicon_dir", ENV_LEXICON_DIR),
        grid_height=grid.get("height", 364),
        grid_width=grid.get("width", 256),
        embed_dim=grid.get("embed_dim", 96),
        input_kind=_pick(args.input_kind, config, "input_kind", default="chargrid"),
        embedding_source=_pick(args.embedding, config, "embedding_source", default="hashed"),
        workers=_pick(args.workers, config, "workers", default=1),
    )


def _cmd_generate(args) -> int:
    config = _corpus_config(args)
    try:
        manifest = corpus_mod.generate_corpus(config)
    except corpus_mod.CorpusError as exc:
        print(f"generate failed: {exc}", file=sys.stderr)
        return 1
    print(
        f"wrote {len(manifest['documents'])} documents "
        f"({manifest['counts']}) to {config.out_dir}"
    )
    return 0


def _cmd_gridify(args) -> int:
    errors = corpus_mod.gridify_corpus(
        args.corpus, kind=args.kind, embedding_source=args.embedding, workers=args.workers or 1
    )
    for doc_id, err in errors:
        print(f"{doc_id}: {err}", file=sys.stderr)
    print(f"gridify ({args.kind}): {len(errors)} errors")
    return 1 if errors else 0


def _cmd_targets(args) -> int:
    errors = corpus_mod.targets_corpus(args.corpus, workers=args.workers or 1)
    for doc_id, err in errors:
        print(f"{doc_id}: {err}", file=sys.stderr)
    print(f"targets: {len(errors)} errors")
    return 1 if errors else 0


def _finish_eval(report: dict, json_out: str | None) -> int:
    print(evaluate.report_table(report))
    if json_out:
        Path(json_out).write_text(
            json.dumps(report, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
        )
    for entry in report["errors"]:
        print(f"{entry['doc_id']}: {entry['error']}", file=sys.stderr)
    return 1 if report["errors"] else 0


def _cmd_oracle_eval(args) -> int:
    report = evaluate.oracle_eval(
        args.corpus,
        word_source=args.word_source,
        threshold=args.threshold,
        min_area=args.min_area,
    )
    return _finish_eval(report, args.json_out)


def _cmd_eval(args) -> int:
    report = evaluate.eval_predictions(
        args.corpus,
        args.pred_dir,
        word_source=args.word_source,
        threshold=args.threshold,
        min_area=args.min_area,
    )
    return _finish_eval(report, args.json_out)


def _cmd_validate(args) -> int:
    problems = corpus_mod.validate_corpus(args.corpus)
    for doc_id, problem in problems:
        print(f"{doc_id}: {problem}", file=sys.stderr)
    print(f"validate: {len(problems)} violations")
    return 1 if problems else 0


def _add_eval_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("corpus", help="corpus directory")
    p.add_argument("--word-source", choices=["exact", "ocr"], default="exact")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--min-area", type=int, default=MIN_COMPONENT_AREA,
                   help="drop components smaller than this many cells")
    p.add_argument("--json-out", help="also write the report JSON here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="invoicegrid",
        description="synthetic invoice corpus: generation, grid encoding, evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate PDFs, annotations and manifest")
    g.add_argument("--config", help="JSON config file")
    g.add_argument("--out-dir")
    g.add_argument("--seed", type=int)
    g.add_argument("--train", type=int, help="training split size (default 8000)")
    g.add_argument("--val", type=int, help="validation split size (default 1000)")
    g.add_argument("--test", type=int, help="test split size (default 3000)")
    g.add_argument("--template-dir")
    g.add_argument("--lexicon-dir")
    g.add_argument("--input-kind", choices=["chargrid", "wordgrid"])
    g.add_argument("--embedding", help="'hashed' or path to an EMBD sidecar")
    g.add_argument("--workers", type=int)
    g.set_defaults(func=_cmd_generate)

    gr = sub.add_parser("gridify", help="write model-input grids")
    gr.add_argument("corpus", help="corpus directory")
    gr.add_argument("--kind", choices=["chargrid", "wordgrid"], default="chargrid")
    gr.add_argument("--embedding", default="hashed", help="'hashed' or path to an EMBD sidecar")
    gr.add_argument("--workers", type=int, default=1)
    gr.set_defaults(func=_cmd_gridify)

    t = sub.add_parser("targets", help="write semantic and box target tensors")
    t.add_argument("corpus", help="corpus directory")
    t.add_argument("--workers", type=int, default=1)
    t.set_defaults(func=_cmd_targets)

    oe = sub.add_parser("oracle-eval", help="score ground-truth masks")
    _add_eval_flags(oe)
    oe.set_defaults(func=_cmd_oracle_eval)

    ev = sub.add_parser("eval", help="score prediction masks")
    _add_eval_flags(ev)
    ev.add_argument("--pred-dir", required=True, help="directory of {id}.pred.t masks")
    ev.set_defaults(func=_cmd_eval)

    v = sub.add_parser("validate", help="re-check annotation invariants")
    v.add_argument("corpus", help="corpus directory")
    v.set_defaults(func=_cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
