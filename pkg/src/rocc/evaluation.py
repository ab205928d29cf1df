"""Justification precision / recall / F1 against gold sentence indices."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence


def harmonic(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def prf_single(predicted: Iterable[int], gold: Iterable[int]) -> tuple[float, float, float] | None:
    """(precision, recall, f1) of one prediction; None when gold is empty."""
    pred, gold = set(predicted), set(gold)
    if not gold:
        return None
    hit = len(pred & gold)
    p = hit / len(pred) if pred else 0.0
    r = hit / len(gold)
    return p, r, harmonic(p, r)


@dataclass(frozen=True)
class InstanceResult:
    id: str
    predicted: tuple[int, ...]
    gold: tuple[int, ...] | None
    label: str | None = None


@dataclass
class JustificationMetrics:
    precision: float
    recall: float
    f1: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    n_scored: int
    n_skipped: int
    per_question: list[tuple[str, float, float, float]] = field(default_factory=list, repr=False)

    def to_dict(self, per_question: bool = True) -> dict:
        d = {
            "micro": {"precision": self.precision, "recall": self.recall, "f1": self.f1},
            "macro": {"precision": self.macro_precision, "recall": self.macro_recall, "f1": self.macro_f1},
            "n_scored": self.n_scored,
            "n_skipped": self.n_skipped,
        }
        if per_question:
            d["per_question"] = [{"id": i, "p": p, "r": r, "f1": f} for i, p, r, f in self.per_question]
        return d

    def summary(self) -> str:
        return (f"micro P={100 * self.precision:.1f} R={100 * self.recall:.1f} F1={100 * self.f1:.1f} | "
                f"macro P={100 * self.macro_precision:.1f} R={100 * self.macro_recall:.1f} "
                f"F1={100 * self.macro_f1:.1f} | scored={self.n_scored} skipped={self.n_skipped}")


def aggregate(results: Sequence[InstanceResult], correct_only: bool = False) -> JustificationMetrics:
    """Micro-averaged P/R (pooled counts) with F1 as their harmonic mean; macro alongside.

    Instances without gold are skipped and counted. ``correct_only`` restricts
    scoring to instances labelled correct.
    """
    hit = n_pred = n_gold = 0
    skipped = 0
    per_q = []
    for res in results:
        if correct_only and res.label != "correct":
            continue
        if not res.gold:
            skipped += 1
            continue
        pred, gold = set(res.predicted), set(res.gold)
        hit += len(pred & gold)
        n_pred += len(pred)
        n_gold += len(gold)
        per_q.append((res.id, *prf_single(pred, gold)))
    if not per_q:
        raise ValueError("no instance with gold justifications to score")
    p = hit / n_pred if n_pred else 0.0
    r = hit / n_gold
    m = len(per_q)
    return JustificationMetrics(
        precision=p, recall=r, f1=harmonic(p, r),
        macro_precision=sum(x[1] for x in per_q) / m,
        macro_recall=sum(x[2] for x in per_q) / m,
        macro_f1=sum(x[3] for x in per_q) / m,
        n_scored=m, n_skipped=skipped, per_question=per_q,
    )


def aggregate_by_group(results: Sequence[InstanceResult], groups: Mapping[str, str],
                       correct_only: bool = False) -> dict[str, JustificationMetrics]:
    """Separate metrics per user-supplied group label (e.g. question type)."""
    buckets: dict[str, list[InstanceResult]] = {}
    for res in results:
        g = groups.get(res.id)
        if g is not None:
            buckets.setdefault(g, []).append(res)
    out = {}
    for g in sorted(buckets):
        try:
            out[g] = aggregate(buckets[g], correct_only)
        except ValueError:
            continue
    return out
