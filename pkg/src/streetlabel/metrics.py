"""Evaluation metrics and label aggregation."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Optional, Sequence

REGRESSION = "regression"
BINARY = "binary"

NEGATIVE_ROTATION = "negative_rotation"
POSITIVE_ROTATION = "positive_rotation"
ON_AXIS = "on_axis"
ON_AXIS_TOL_RAD = 1e-6

UNRESOLVED = None

KITTI_SIZE = (1242, 375)
CROP_SIZE = (227, 227)


class MetricError(ValueError):
    pass


def _check_pair(preds: Sequence, truths: Sequence) -> None:
    if len(preds) != len(truths):
        raise MetricError(f"length mismatch: {len(preds)} predictions vs {len(truths)} truths")
    if not preds:
        raise MetricError("no samples")


def mae(preds: Sequence[float], truths: Sequence[float]) -> float:
    _check_pair(preds, truths)
    return math.fsum(abs(p - t) for p, t in zip(preds, truths)) / len(preds)


def binary_accuracy(preds: Sequence[bool], truths: Sequence[bool]) -> float:
    """Percentage of matching boolean labels."""
    _check_pair(preds, truths)
    hits = sum(1 for p, t in zip(preds, truths) if bool(p) == bool(t))
    return 100.0 * hits / len(preds)


def majority_vote(labels: Sequence[Hashable]):
    """Label held by strictly more than half the voters, else ``UNRESOLVED``."""
    if not labels:
        return UNRESOLVED
    label, n = Counter(labels).most_common(1)[0]
    return label if 2 * n > len(labels) else UNRESOLVED


def consensus(labels_per_item: Iterable[Sequence[Hashable]], voters: int = 5,
              rule: Callable[[Sequence[Hashable]], object] = majority_vote) -> list:
    """Combine per-item annotator labels; every item must carry ``voters`` labels."""
    out = []
    for i, labels in enumerate(labels_per_item):
        if len(labels) != voters:
            raise MetricError(f"item {i} has {len(labels)} labels, expected {voters}")
        out.append(rule(labels))
    return out


def heading_sign_class(angle: float, tol: float = ON_AXIS_TOL_RAD) -> str:
    if abs(angle) < tol:
        return ON_AXIS
    return NEGATIVE_ROTATION if angle < 0 else POSITIVE_ROTATION


@dataclass(frozen=True)
class ResizeCorrection:
    """Scale factor for angles predicted on an anisotropically resized image.

    The default factor is the ratio of the source and target aspect ratios.
    ``mode="divide"`` applies the inverse correction.
    """

    source: tuple = KITTI_SIZE
    target: tuple = CROP_SIZE
    rf: Optional[float] = None
    mode: str = "multiply"

    def __post_init__(self):
        if self.rf is None:
            (sw, sh), (tw, th) = self.source, self.target
            object.__setattr__(self, "rf", (sw / sh) / (tw / th))
        if not self.rf > 0:
            raise MetricError("resize factor must be positive")
        if self.mode not in ("multiply", "divide"):
            raise MetricError(f"unknown resize mode {self.mode!r}")


def apply_resize_factor(raw_angle: float, corr: ResizeCorrection = ResizeCorrection()) -> float:
    if corr.mode == "divide":
        return raw_angle / corr.rf
    return raw_angle * corr.rf


@dataclass
class MetricEntry:
    name: str
    kind: str
    count: int
    mae: Optional[float] = None
    accuracy_pct: Optional[float] = None


@dataclass
class EvalReport:
    entries: list = field(default_factory=list)
    joined_rows: int = 0
    comparison: str = "mae"

    def to_dicts(self) -> list[dict]:
        return [asdict(e) for e in self.entries]

    def table(self) -> str:
        lines = [f"{'affordance':<28} {'kind':<10} {'count':>7} {'MAE':>10} {'acc %':>8}"]
        for e in self.entries:
            m = f"{e.mae:.4f}" if e.mae is not None else "-"
            a = f"{e.accuracy_pct:.2f}" if e.accuracy_pct is not None else "-"
            lines.append(f"{e.name:<28} {e.kind:<10} {e.count:>7} {m:>10} {a:>8}")
        return "\n".join(lines)


def eval_report(pred_rows: Iterable[Mapping], truth_rows: Iterable[Mapping], kinds: Mapping[str, str],
                key: Callable[[Mapping], Hashable] = lambda r: r["pano_id"]) -> EvalReport:
    """Join predictions to truth and score each affordance.

    A pair is skipped for an affordance when either side is missing
    (``None``); affordances left with no pairs are omitted from the report.
    """
    truth = {key(r): r for r in truth_rows}
    joined = [(p, truth[key(p)]) for p in pred_rows if key(p) in truth]
    if not joined:
        raise MetricError("no predictions share a key with the truth rows")
    report = EvalReport(joined_rows=len(joined))
    for name, kind in kinds.items():
        pairs = [(p.get(name), t.get(name)) for p, t in joined]
        pairs = [(a, b) for a, b in pairs if a is not None and b is not None]
        if kind == BINARY:
            pairs = [(a, b) for a, b in pairs if isinstance(a, bool) and isinstance(b, bool)]
        if not pairs:
            continue
        preds, truths = zip(*pairs)
        if kind == REGRESSION:
            report.entries.append(MetricEntry(name, kind, len(pairs), mae=mae(preds, truths)))
        elif kind == BINARY:
            report.entries.append(MetricEntry(name, kind, len(pairs), accuracy_pct=binary_accuracy(preds, truths)))
        else:
            raise MetricError(f"unknown affordance kind {kind!r}")
    return report
