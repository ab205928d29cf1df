"""Canonical QA instance format, dataset adapters, KB and embedding readers.

Canonical records are JSON lines with the fields ``id``, ``question``,
``answer`` and the optional ``label`` (``"correct"``/``"incorrect"``),
``candidates`` (``[{"idx": int, "text": str}, ...]``, passage mode only) and
``gold_idxs`` (list of ints).
"""

from __future__ import annotations

import html
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .retrieval import Sentence
from .scoring import EmbeddingTable
from .text import DEFAULT_TOKENIZER, TokenizerConfig

LABELS = ("correct", "incorrect")


class DataError(ValueError):
    """Malformed input data; carries the offending line and field when known."""

    def __init__(self, message, path=None, line=None, field=None):
        self.path, self.line, self.field = path, line, field
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


@dataclass(frozen=True)
class QAInstance:
    id: str
    question: str
    answer: str
    label: str | None = None
    candidates: tuple[tuple[int, str], ...] | None = None
    gold_idxs: tuple[int, ...] | None = None

    @property
    def passage_mode(self) -> bool:
        return self.candidates is not None

    def sentences(self, cfg: TokenizerConfig = DEFAULT_TOKENIZER) -> list[Sentence]:
        if self.candidates is None:
            raise ValueError(f"instance {self.id} has no candidates (KB mode)")
        return [Sentence.from_text(idx, text, cfg) for idx, text in self.candidates]

    def to_record(self) -> dict:
        rec: dict = {"id": self.id, "question": self.question, "answer": self.answer}
        if self.label is not None:
            rec["label"] = self.label
        if self.candidates is not None:
            rec["candidates"] = [{"idx": i, "text": t} for i, t in self.candidates]
        if self.gold_idxs is not None:
            rec["gold_idxs"] = list(self.gold_idxs)
        return rec


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def parse_record(rec, path=None, line=None) -> QAInstance:
    def fail(msg, field=None):
        raise DataError(msg, path, line, field)

    if not isinstance(rec, dict):
        fail("record must be a JSON object")
    for name in ("id", "question", "answer"):
        if name not in rec:
            fail("missing required field", name)
        if not isinstance(rec[name], str):
            fail("must be a string", name)
    if not rec["question"].strip():
        fail("must be non-empty", "question")
    label = rec.get("label")
    if label is not None and label not in LABELS:
        fail(f"must be one of {LABELS} or null", "label")

    candidates = None
    if rec.get("candidates") is not None:
        raw = rec["candidates"]
        if not isinstance(raw, list) or not raw:
            fail("must be a non-empty list", "candidates")
        seen = set()
        out = []
        for c in raw:
            if not isinstance(c, dict) or not _is_int(c.get("idx")) or not isinstance(c.get("text"), str):
                fail("entries need an integer 'idx' and a string 'text'", "candidates")
            if c["idx"] < 0 or c["idx"] in seen:
                fail(f"idx {c['idx']} is negative or repeated", "candidates")
            seen.add(c["idx"])
            out.append((c["idx"], c["text"]))
        candidates = tuple(out)

    gold = None
    if rec.get("gold_idxs") is not None:
        raw = rec["gold_idxs"]
        if not isinstance(raw, list) or not all(_is_int(g) for g in raw):
            fail("must be a list of integers", "gold_idxs")
        if any(g < 0 for g in raw):
            fail("indices must be >= 0", "gold_idxs")
        if candidates is not None:
            valid = {i for i, _ in candidates}
            bad = sorted(set(raw) - valid)
            if bad:
                fail(f"indices {bad} are not candidate indices", "gold_idxs")
        gold = tuple(sorted(set(raw)))
    return QAInstance(rec["id"], rec["question"], rec["answer"], label, candidates, gold)


def iter_canonical(path) -> Iterator[QAInstance]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"invalid JSON ({exc.msg})", path, lineno) from None
            yield parse_record(rec, path, lineno)


def load_canonical(path) -> list[QAInstance]:
    return list(iter_canonical(path))


def dumps_record(inst: QAInstance) -> str:
    return json.dumps(inst.to_record(), ensure_ascii=False, separators=(",", ":"))


def write_canonical(instances: Iterable[QAInstance], path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for inst in instances:
            fh.write(dumps_record(inst) + "\n")
            n += 1
    return n


# MultiRC --------------------------------------------------------------------

_SENT_RE = re.compile(r"<b>\s*Sent\s+(\d+)\s*:\s*</b>(.*?)(?=<b>\s*Sent\s+\d+\s*:|$)", re.S | re.I)
_TAG_RE = re.compile(r"<[^>]+>")


def split_multirc_paragraph(text: str) -> list[str]:
    """Passage sentences from ``<b>Sent N: </b>...<br>`` markup, in document order."""
    found = _SENT_RE.findall(text)
    if not found:
        raise ValueError("no '<b>Sent N: </b>' markers in passage text")
    numbered = sorted((int(num), body) for num, body in found)
    nums = [n for n, _ in numbered]
    if nums != list(range(nums[0], nums[0] + len(nums))):
        raise ValueError(f"sentence numbers are not consecutive: {nums}")
    return [" ".join(html.unescape(_TAG_RE.sub(" ", body)).split()) for _, body in numbered]


def adapt_multirc(raw_path, out_path=None, one_based_gold: bool = False) -> list[QAInstance]:
    """Convert a MultiRC release file (``{"data": [{"id", "paragraph": ...}]}``).

    Emits one instance per (question, answer option), all sharing the
    passage sentences as candidates. ``sentences_used`` become ``gold_idxs``.
    """
    try:
        raw = json.loads(Path(raw_path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON ({exc.msg})", raw_path, exc.lineno) from None
    docs = raw.get("data") if isinstance(raw, dict) else None
    if not isinstance(docs, list):
        raise DataError("expected a top-level object with a 'data' list", raw_path)
    out: list[QAInstance] = []
    for d_i, doc in enumerate(docs):
        doc_id = str(doc.get("id", d_i))
        para = doc.get("paragraph") or {}
        try:
            sents = split_multirc_paragraph(para.get("text", ""))
        except ValueError as exc:
            raise DataError(f"document {doc_id}: unparseable passage markup ({exc})", raw_path) from None
        candidates = tuple(enumerate(sents))
        for q_i, q in enumerate(para.get("questions", [])):
            q_id = str(q.get("idx", q_i))
            gold = q.get("sentences_used")
            if gold is not None:
                gold = sorted({int(g) - (1 if one_based_gold else 0) for g in gold})
                if any(not 0 <= g < len(sents) for g in gold):
                    raise DataError(f"document {doc_id} question {q_id}: sentences_used {gold} out of range",
                                    raw_path)
                gold = tuple(gold)
            question = " ".join(html.unescape(_TAG_RE.sub(" ", q.get("question", ""))).split())
            for a_i, ans in enumerate(q.get("answers", [])):
                label = None
                if "isAnswer" in ans:
                    label = "correct" if ans["isAnswer"] else "incorrect"
                text = " ".join(html.unescape(_TAG_RE.sub(" ", ans.get("text", ""))).split())
                out.append(QAInstance(f"{doc_id}::{q_id}::{a_i}", question, text, label, candidates, gold))
    if out_path is not None:
        write_canonical(out, out_path)
    return out


# ARC ------------------------------------------------------------------------

def adapt_arc(questions_path, out_path=None) -> list[QAInstance]:
    """Convert ARC question JSONL into KB-mode instances (no candidates, no gold)."""
    out: list[QAInstance] = []
    with open(questions_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                stem = rec["question"]["stem"]
                choices = rec["question"]["choices"]
            except (json.JSONDecodeError, KeyError, TypeError):
                raise DataError("expected {'id', 'question': {'stem', 'choices'}, 'answerKey'}",
                                questions_path, lineno) from None
            key = rec.get("answerKey")
            for ch in choices:
                label = None if key is None else ("correct" if ch.get("label") == key else "incorrect")
                out.append(QAInstance(f"{rec.get('id', lineno)}::{ch.get('label')}", stem, ch.get("text", ""),
                                      label))
    if out_path is not None:
        write_canonical(out, out_path)
    return out


# KB -------------------------------------------------------------------------

@dataclass
class KbReadReport:
    sentences: list[tuple[int, str]]
    corrupt: int = 0
    empty: int = 0


def read_kb(path) -> KbReadReport:
    """Read a one-sentence-per-line KB; idx is the 0-based line number.

    Lines that are not valid UTF-8 count as corrupt, blank lines as empty;
    both are skipped.
    """
    report = KbReadReport([])
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh):
            try:
                text = raw.decode("utf-8").strip()
            except UnicodeDecodeError:
                report.corrupt += 1
                continue
            if not text:
                report.empty += 1
                continue
            report.sentences.append((lineno, text))
    return report


# Embeddings -------------------------------------------------------------------

def load_embeddings(path, expected_dim: int | None = None) -> EmbeddingTable:
    """Read ``term v1 ... vD`` lines. First occurrence of a term wins."""
    vectors: dict[str, np.ndarray] = {}
    dim = expected_dim
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split(" ")
            parts = [p for p in parts if p]
            if not parts:
                continue
            term, vals = parts[0], parts[1:]
            if dim is None:
                dim = len(vals)
                if dim == 0:
                    raise DataError("row has no vector values", path, lineno)
            if len(vals) != dim:
                raise DataError(f"row has {len(vals)} values, expected {dim}", path, lineno)
            if term in vectors:
                continue
            try:
                vectors[term] = np.array([float(v) for v in vals], dtype=np.float64)
            except ValueError:
                raise DataError("non-numeric vector value", path, lineno) from None
    if dim is None:
        raise DataError("embedding file is empty", path)
    return EmbeddingTable(dim, vectors)
