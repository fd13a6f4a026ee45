"""Baseline classification metrics: zero-one loss, top-k error, instance F1.

Multi-label problems are handled as single-class problems whose classes are
label sets.  A label set is identified by a canonical string such as
``"{1,2}"`` (labels in declaration order, comma separated, braces around).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Union

from .core import Categorical, ClassUniverse, TopList, mode, pad

Number = Union[float, Fraction]


class LabelSetError(ValueError):
    """A class identifier does not decode to a label set."""


def encode_label_set(labels: Iterable[str], order: Optional[Iterable[str]] = None) -> str:
    labels = set(map(str, labels))
    if order is None:
        ordered = sorted(labels, key=lambda s: (len(s), s))
    else:
        rank = {lab: i for i, lab in enumerate(order)}
        unknown = labels - set(rank)
        if unknown:
            raise LabelSetError(f"labels not declared: {sorted(unknown)}")
        ordered = sorted(labels, key=rank.__getitem__)
    return "{" + ",".join(ordered) + "}"


def decode_label_set(cls: str) -> frozenset[str]:
    if len(cls) < 2 or cls[0] != "{" or cls[-1] != "}":
        raise LabelSetError(f"class {cls!r} is not a label set like '{{a,b}}'")
    body = cls[1:-1].strip()
    if not body:
        return frozenset()
    items = [item.strip() for item in body.split(",")]
    if any(not item for item in items) or len(set(items)) != len(items):
        raise LabelSetError(f"malformed label set {cls!r}")
    return frozenset(items)


@dataclass(frozen=True)
class LabelSetUniverse:
    """Labels L together with the universe of label-set classes drawn from 2^L."""

    labels: tuple[str, ...]
    universe: ClassUniverse

    def __init__(self, labels: Iterable[str], classes: Optional[Iterable[Iterable[str]]] = None):
        labels = tuple(map(str, labels))
        if len(set(labels)) != len(labels):
            raise ValueError("labels must be distinct")
        for lab in labels:
            if any(ch in lab for ch in "{},") or lab != lab.strip() or not lab:
                raise ValueError(f"label {lab!r} cannot be encoded")
        if classes is None:
            if len(labels) > 16:
                raise ValueError("refusing to enumerate 2^L for more than 16 labels; pass classes")
            subsets = itertools.chain.from_iterable(
                itertools.combinations(labels, r) for r in range(len(labels) + 1)
            )
        else:
            subsets = classes
        encoded = [encode_label_set(s, labels) for s in subsets]
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "universe", ClassUniverse(encoded))

    def encode(self, labels: Iterable[str]) -> str:
        cls = encode_label_set(labels, self.labels)
        self.universe.index(cls)
        return cls

    def decode(self, cls: str) -> frozenset[str]:
        self.universe.index(cls)
        return decode_label_set(cls)


def zero_one(x: str, y: str, universe: Optional[ClassUniverse] = None) -> float:
    """Misclassification loss 1{x != y}."""
    if universe is not None:
        universe.index(x)
        universe.index(y)
    return 0.0 if x == y else 1.0


def top_k_error(t: TopList, y: str) -> float:
    """1 if ``y`` is missing from the listed classes, else 0; confidences are ignored."""
    t.universe.index(y)
    return 0.0 if y in t.classes else 1.0


def instance_f1(x: str, y: str) -> float:
    """Instance F1 between predicted and observed label sets, 2|x & y| / (|x| + |y|).

    Two empty sets score 0.
    """
    return float(_f1(decode_label_set(x), decode_label_set(y)))


def _f1(x: frozenset, y: frozenset) -> Fraction:
    denom = len(x) + len(y)
    if denom == 0:
        return Fraction(0)
    return Fraction(2 * len(x & y), denom)


def expected_instance_f1(x: str, p: Mapping[str, Number]) -> Number:
    """E[F1(x, Y)] for ``Y ~ p``; exact when ``p`` holds Fractions."""
    xs = decode_label_set(x)
    return sum((q * _f1(xs, decode_label_set(y)) for y, q in p.items()), Fraction(0))


def hard_class(t: TopList) -> str:
    """Class a top list predicts when forced to name one: its padded mode.

    Ties go to the class that comes first in universe order.
    """
    p = pad(t)
    top = max(p.probs)
    return p.universe.labels[p.probs.index(top)]


@dataclass(frozen=True)
class F1DemoReport:
    distribution: dict
    mode: frozenset
    expected_f1: dict
    mode_prediction: str
    best_prediction: str

    @property
    def inconsistent(self) -> bool:
        return self.expected_f1[self.best_prediction] > self.expected_f1[self.mode_prediction]

    def lines(self) -> list[str]:
        out = ["distribution: " + ", ".join(f"p{k} = {float(v):g}" for k, v in self.distribution.items())]
        out.append("mode: " + ", ".join(sorted(self.mode)))
        for cls, val in self.expected_f1.items():
            out.append(f"E[F1({cls}, Y)] = {val} = {float(val):.12g}")
        verdict = "not consistent for the mode" if self.inconsistent else "consistent here"
        out.append(
            f"instance F1 prefers {self.best_prediction} over the mode "
            f"{self.mode_prediction}: {verdict}"
        )
        return out


def f1_mode_inconsistency_demo() -> F1DemoReport:
    """Five labels, mass on {1,2}: 0.28 and {1,3}, {1,4}, {1,5}: 0.24 each.

    The mode {1,2} has expected F1 0.64, while the single label {1} reaches
    2/3; expectations are computed exactly with fractions.
    """
    space = LabelSetUniverse(["1", "2", "3", "4", "5"])
    p = {
        space.encode(["1", "2"]): Fraction(28, 100),
        space.encode(["1", "3"]): Fraction(24, 100),
        space.encode(["1", "4"]): Fraction(24, 100),
        space.encode(["1", "5"]): Fraction(24, 100),
    }
    assert sum(p.values()) == 1
    dist = Categorical.from_mapping(space.universe, {k: float(v) for k, v in p.items()})
    modes = mode(dist)
    (mode_pred,) = modes
    single = space.encode(["1"])
    values = {mode_pred: expected_instance_f1(mode_pred, p), single: expected_instance_f1(single, p)}
    best = max(values, key=values.__getitem__)
    report = F1DemoReport(p, modes, values, mode_pred, best)
    assert report.inconsistent
    return report
