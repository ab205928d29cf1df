"""Command-line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 internal error. Defaults may be supplied as a JSON object of option names
(``{"n": 20, "k_range": "2..6", "auto": true}``) via ``--config`` or the
``ROCC_CONFIG`` environment variable; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .datasets import DataError, adapt_arc, adapt_multirc, iter_canonical, load_canonical, load_embeddings, read_kb
from .evaluation import InstanceResult, aggregate, aggregate_by_group, prf_single
from .pipeline import METHODS, Pipeline, run_many
from .retrieval import Bm25Params, Index, Sentence
from .scoring import ABLATIONS, Ablation, AlignmentMatcher, ExactMatcher, RoccConfig
from .selector import SelectionConfig, available_backends
from .text import TokenizerConfig, load_stopwords

log = logging.getLogger("rocc")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
ABLATION_ROWS = ("full",) + ABLATIONS


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_k_range(text: str) -> tuple[int, ...]:
    """``"2..6"`` or ``"2,3,5"`` to a tuple of ints."""
    text = str(text).strip()
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ValueError
            return tuple(range(lo, hi + 1))
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise UsageError(f"bad k range {text!r}; use 'LO..HI' or a comma list") from None


def _write_jsonl(path, records):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# configuration ---------------------------------------------------------------

def _tokenizer_from(args) -> TokenizerConfig:
    stop = load_stopwords(args.stopwords) if args.stopwords else frozenset()
    return TokenizerConfig(lowercase=not args.no_lowercase, stopwords=stop, min_token_len=args.min_token_len)


def build_pipeline(args, ablation: Ablation | None = None) -> Pipeline:
    """Validate every option and assemble the pipeline before any work starts."""
    try:
        if args.k is not None and args.k_range is not None:
            raise UsageError("give either --k or --k-range, not both")
        if args.k_range is not None:
            ks = parse_k_range(args.k_range)
            auto = True if args.auto or len(ks) > 1 else False
        else:
            ks = (args.k if args.k is not None else 3,)
            auto = bool(args.auto)
        selection = SelectionConfig(n=args.n, k_values=ks, auto=auto, reorder_by_index=not args.no_reorder,
                                    allow_singletons=args.allow_singletons, top_m=args.top_m,
                                    beam_width=args.beam)
        matcher = ExactMatcher()
        if args.align:
            matcher = AlignmentMatcher(load_embeddings(args.align, args.expected_dim), args.threshold)
        if ablation is None:
            ablation = Ablation.from_names(args.ablate)
        rocc = RoccConfig(epsilon=args.epsilon, ablation=ablation, matcher=matcher,
                          ordered_pairs=not args.unordered_pairs)
        bm25 = Bm25Params(k1=args.k1, b=args.b, unique_query_terms=not args.repeat_query_terms)
        tokenizer = _tokenizer_from(args)
        index = None
        if args.mode == "kb":
            if not args.index:
                raise UsageError("--mode kb requires --index")
            try:
                index = Index.load(args.index)
            except (ValueError, OSError) as exc:
                raise DataError(f"cannot load index: {exc}", args.index) from None
            tokenizer = index.tokenizer
        if args.backend and args.backend not in available_backends():
            raise UsageError(f"backend {args.backend!r} unavailable; have {available_backends()}")
        return Pipeline(tokenizer=tokenizer, bm25=bm25, rocc=rocc, selection=selection, mode=args.mode,
                        index=index, method=args.method, backend=args.backend)
    except DataError:
        raise
    except (ValueError, OSError) as exc:
        raise UsageError(str(exc)) from None


# commands -------------------------------------------------------------------

def cmd_index(args) -> int:
    report = read_kb(args.kb)
    if not report.sentences:
        raise DataError("KB contains no usable sentences", args.kb)
    cfg = _tokenizer_from(args)
    sents = [Sentence.from_text(idx, text, cfg) for idx, text in report.sentences]
    index = Index(sents, cfg)
    index.save(args.output)
    print(f"indexed {len(index)} sentences ({len(index.postings)} terms); "
          f"skipped {report.corrupt} corrupt and {report.empty} empty lines -> {args.output}")
    return EXIT_OK


def _header(pipeline: Pipeline, extra=None) -> dict:
    h = {"type": "header", "tool": "rocc", "version": __version__, "config": pipeline.config_dict()}
    if extra:
        h.update(extra)
    return h


def cmd_select(args) -> int:
    pipeline = build_pipeline(args)
    instances = load_canonical(args.dataset)
    records = list(run_many(pipeline, instances, args.workers))
    _write_jsonl(args.output, [_header(pipeline, {"dataset": str(args.dataset)})] + records)
    errors = sum(r["type"] == "error" for r in records)
    print(f"selected justifications for {len(records) - errors}/{len(records)} instances "
          f"({errors} failed) -> {args.output}")
    return EXIT_OK


def read_selections(path) -> tuple[dict | None, list[dict]]:
    header, recs = None, []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                raise DataError("invalid JSON", path, lineno) from None
            if rec.get("type") == "header":
                header = rec
            else:
                recs.append(rec)
    return header, recs


def evaluate_selections(records, instances, correct_only=False, groups=None):
    by_id = {inst.id: inst for inst in instances}
    unknown = [r["id"] for r in records if r.get("id") not in by_id]
    if unknown:
        raise DataError(f"id mismatch: {len(unknown)} selection ids not in dataset (first: {unknown[0]!r})")
    results, rows = [], []
    for rec in records:
        if rec["type"] != "selection":
            continue
        inst = by_id[rec["id"]]
        res = InstanceResult(rec["id"], tuple(rec["member_idxs"]), inst.gold_idxs, inst.label)
        results.append(res)
        prf = prf_single(res.predicted, res.gold or ())
        rows.append({"id": rec["id"], "k": rec["k"], "predicted": rec["member_idxs"],
                     "gold": list(inst.gold_idxs or []), "breakdown": rec.get("breakdown"),
                     "p": prf[0] if prf else None, "r": prf[1] if prf else None,
                     "f1": prf[2] if prf else None})
    metrics = aggregate(results, correct_only)
    by_group = aggregate_by_group(results, groups, correct_only) if groups else {}
    return metrics, rows, by_group


def cmd_eval(args) -> int:
    header, records = read_selections(args.selections)
    instances = load_canonical(args.dataset)
    groups = json.loads(Path(args.groups).read_text(encoding="utf-8")) if args.groups else None
    metrics, rows, by_group = evaluate_selections(records, instances, args.correct_only, groups)
    failed = sum(r["type"] == "error" for r in records)
    if metrics.n_skipped:
        log.warning("skipped %d instances without gold justifications", metrics.n_skipped)
    print(metrics.summary())
    for g, m in by_group.items():
        print(f"  [{g}] {m.summary()}")
    if args.output:
        _write_json(args.output, {
            "tool": "rocc", "version": __version__,
            "selection_config": header.get("config") if header else None,
            "eval_config": {"correct_only": args.correct_only, "groups": args.groups},
            "metrics": metrics.to_dict(per_question=False),
            "groups": {g: m.to_dict(per_question=False) for g, m in by_group.items()},
            "failed_selections": failed,
            "instances": rows,
        })
    return EXIT_OK


def run_ablation(args, instances) -> list[dict]:
    rows = []
    for name in ABLATION_ROWS:
        pipeline = build_pipeline(args, Ablation.from_names([] if name == "full" else [name]))
        records = list(run_many(pipeline, instances, args.workers))
        metrics, _, _ = evaluate_selections(records, instances, args.correct_only)
        rows.append({"ablation": name, "precision": metrics.precision, "recall": metrics.recall,
                     "f1": metrics.f1, "macro_f1": metrics.macro_f1, "n_scored": metrics.n_scored,
                     "failed": sum(r["type"] == "error" for r in records),
                     "config": pipeline.config_dict()})
    return rows


def cmd_ablate(args) -> int:
    instances = load_canonical(args.dataset)
    rows = run_ablation(args, instances)
    print(f"{'ablation':<14}{'P':>7}{'R':>7}{'F1':>7}")
    for r in rows:
        print(f"{r['ablation']:<14}{100 * r['precision']:>7.1f}{100 * r['recall']:>7.1f}{100 * r['f1']:>7.1f}")
    if args.output:
        _write_json(args.output, {"tool": "rocc", "version": __version__, "dataset": str(args.dataset),
                                  "rows": rows})
    return EXIT_OK


def cmd_adapt_multirc(args) -> int:
    out = adapt_multirc(args.raw, args.output, one_based_gold=args.one_based_gold)
    print(f"wrote {len(out)} instances -> {args.output}")
    return EXIT_OK


def cmd_adapt_arc(args) -> int:
    out = adapt_arc(args.raw, args.output)
    print(f"wrote {len(out)} instances -> {args.output}")
    return EXIT_OK


# parser -----------------------------------------------------------------------

def _add_tokenizer_opts(p):
    p.add_argument("--stopwords", help="stopword file, one term per line")
    p.add_argument("--min-token-len", type=int, default=1)
    p.add_argument("--no-lowercase", action="store_true")


def _add_selection_opts(p):
    _add_tokenizer_opts(p)
    p.add_argument("--mode", choices=("passage", "kb"), default="passage")
    p.add_argument("--index", help="index file built by 'rocc index' (kb mode)")
    p.add_argument("--n", type=int, default=20, help="candidates retrieved in kb mode")
    p.add_argument("--k", type=int, help="fixed set size (parametric)")
    p.add_argument("--k-range", help="set sizes, e.g. 2..6 (implies --auto when several)")
    p.add_argument("--auto", action="store_true", help="rank sets of all sizes together")
    p.add_argument("--ablate", action="append", choices=ABLATIONS, default=None)
    p.add_argument("--align", metavar="EMBEDDINGS", help="text embedding file for soft matching")
    p.add_argument("--threshold", type=float, default=0.95)
    p.add_argument("--expected-dim", type=int)
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--k1", type=float, default=1.2)
    p.add_argument("--b", type=float, default=0.75)
    p.add_argument("--repeat-query-terms", action="store_true",
                   help="weight query terms by multiplicity instead of once each")
    p.add_argument("--unordered-pairs", action="store_true", help="overlap over unordered pairs (range [0, 1])")
    p.add_argument("--top-m", type=int, default=1, help="also report the runner-up sets")
    p.add_argument("--beam", type=int, help="approximate beam search of this width")
    p.add_argument("--method", choices=METHODS, default="rocc")
    p.add_argument("--allow-singletons", action="store_true")
    p.add_argument("--no-reorder", action="store_true")
    p.add_argument("--backend", choices=("cython", "python"))
    p.add_argument("--workers", type=int, default=1)


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rocc", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"rocc {__version__}")
    parser.add_argument("--config", help="JSON defaults (falls back to $ROCC_CONFIG)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("index", help="build a retrieval index over a KB file")
    p.add_argument("kb")
    p.add_argument("-o", "--output", required=True)
    _add_tokenizer_opts(p)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("select", help="select justification sets for a canonical dataset")
    p.add_argument("dataset")
    p.add_argument("-o", "--output", required=True)
    _add_selection_opts(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("eval", help="justification P/R/F1 of a selections file")
    p.add_argument("selections")
    p.add_argument("dataset")
    p.add_argument("-o", "--output")
    p.add_argument("--correct-only", action="store_true", help="score only correct-answer instances")
    p.add_argument("--groups", help="JSON object mapping instance id to a group label")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="F1 for the full model and each ablation")
    p.add_argument("dataset")
    p.add_argument("-o", "--output")
    p.add_argument("--correct-only", action="store_true")
    _add_selection_opts(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("adapt-multirc", help="convert a MultiRC release file")
    p.add_argument("raw")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--one-based-gold", action="store_true")
    p.set_defaults(func=cmd_adapt_multirc)

    p = sub.add_parser("adapt-arc", help="convert ARC question JSONL to kb-mode instances")
    p.add_argument("raw")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_adapt_arc)
    return parser


def _load_config(argv) -> dict:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    path = known.config or os.environ.get("ROCC_CONFIG")
    if not path:
        return {}
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in cfg.items()}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = make_parser()
    try:
        defaults = _load_config(argv)
        if defaults:
            for action in parser._subparsers._group_actions:
                for sp in action.choices.values():
                    known = {a.dest for a in sp._actions}
                    sp.set_defaults(**{k: v for k, v in defaults.items() if k in known})
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return exc.code if isinstance(exc.code, int) else EXIT_USAGE
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        if getattr(args, "k_range", None) is not None and not isinstance(args.k_range, str):
            args.k_range = str(args.k_range)
        return args.func(args)
    except UsageError as exc:
        print(f"rocc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError, UnicodeDecodeError) as exc:
        print(f"rocc: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"rocc: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
