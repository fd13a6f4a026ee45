"""Class universes, categorical distributions and probabilistic top lists.

A top-k list names k distinct classes together with confidence scores whose
sum does not exceed one.  The mass it leaves unaccounted for is spread evenly
over the unlisted classes (the proxy probability), which turns every top
list into a full distribution on the universe, its padded distribution.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

NORM_TOL = 1e-9
VALID_TOL = 1e-12


class UnknownClassError(ValueError):
    """A class identifier is not a member of the universe."""


class UniverseMismatchError(ValueError):
    """Two objects that must share a universe do not."""


@dataclass(frozen=True)
class ClassUniverse:
    """Ordered finite set of class labels; the order fixes each class's index."""

    labels: tuple[str, ...]
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __init__(self, labels: Iterable[str]):
        labels = tuple(str(label) for label in labels)
        if not labels:
            raise ValueError("a class universe needs at least one class")
        index = {label: i for i, label in enumerate(labels)}
        if len(index) != len(labels):
            dupes = sorted({lab for lab in labels if labels.count(lab) > 1})
            raise ValueError(f"duplicate class labels: {dupes}")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_index", index)

    @property
    def m(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __contains__(self, label: object) -> bool:
        return label in self._index

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise UnknownClassError(f"unknown class {label!r}") from None

    @classmethod
    def numbered(cls, m: int) -> "ClassUniverse":
        """Universe with labels "1", ..., "m"."""
        return cls(str(i) for i in range(1, m + 1))


def _check_same_universe(a: ClassUniverse, b: ClassUniverse) -> None:
    if a is not b and a != b:
        raise UniverseMismatchError("objects are defined on different class universes")


@dataclass(frozen=True)
class Categorical:
    """Probability vector over a class universe, in universe order.

    Inputs are accepted when their entries lie in [0, 1] and sum to one
    within ``NORM_TOL``; the stored vector is the renormalized input.
    """

    universe: ClassUniverse
    probs: tuple[float, ...]

    def __init__(self, universe: ClassUniverse, probs: Iterable[float]):
        probs = tuple(float(p) for p in probs)
        if len(probs) != universe.m:
            raise ValueError(f"expected {universe.m} probabilities, got {len(probs)}")
        if any(not (0.0 <= p <= 1.0) for p in probs):
            raise ValueError(f"probabilities must lie in [0, 1]: {probs}")
        total = math.fsum(probs)
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        if total != 1.0:
            probs = tuple(p / total for p in probs)
        object.__setattr__(self, "universe", universe)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def _trusted(cls, universe: ClassUniverse, probs: tuple[float, ...]) -> "Categorical":
        # Bypasses renormalization so padding reproduces its inputs bit for bit.
        obj = object.__new__(cls)
        object.__setattr__(obj, "universe", universe)
        object.__setattr__(obj, "probs", probs)
        return obj

    @classmethod
    def from_mapping(cls, universe: ClassUniverse, probs: dict[str, float]) -> "Categorical":
        for label in probs:
            universe.index(label)
        return cls(universe, (probs.get(label, 0.0) for label in universe.labels))

    @classmethod
    def uniform(cls, universe: ClassUniverse) -> "Categorical":
        return cls._trusted(universe, (1.0 / universe.m,) * universe.m)

    def __getitem__(self, label: str) -> float:
        return self.probs[self.universe.index(label)]

    def __len__(self) -> int:
        return len(self.probs)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.universe.labels, self.probs))


@dataclass(frozen=True)
class TopList:
    """Probabilistic top-k list: k distinct classes with confidence scores.

    Classes are stored in universe order, so two lists naming the same
    classes with the same confidences compare equal regardless of the order
    they were given in.  Validity is not enforced here; invalid lists are
    representable and are dealt with at scoring time.
    """

    universe: ClassUniverse
    classes: tuple[str, ...]
    confidences: tuple[float, ...]

    def __init__(
        self,
        universe: ClassUniverse,
        classes: Iterable[str] = (),
        confidences: Iterable[float] = (),
    ):
        classes = tuple(str(c) for c in classes)
        confidences = tuple(float(c) for c in confidences)
        if len(classes) != len(confidences):
            raise ValueError(
                f"{len(classes)} classes but {len(confidences)} confidence scores"
            )
        if len(set(classes)) != len(classes):
            raise ValueError(f"a top list cannot name a class twice: {classes}")
        indices = [universe.index(c) for c in classes]
        if any(not (0.0 <= c <= 1.0) for c in confidences):
            raise ValueError(f"confidence scores must lie in [0, 1]: {confidences}")
        total = math.fsum(confidences)
        if total > 1.0 + NORM_TOL:
            raise ValueError(f"confidence scores sum to {total!r} > 1")
        if len(classes) == universe.m and abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"a full top-{universe.m} list must sum to 1, got {total!r}")
        order = sorted(range(len(classes)), key=indices.__getitem__)
        object.__setattr__(self, "universe", universe)
        object.__setattr__(self, "classes", tuple(classes[i] for i in order))
        object.__setattr__(self, "confidences", tuple(confidences[i] for i in order))

    @property
    def k(self) -> int:
        return len(self.classes)

    @property
    def m(self) -> int:
        return self.universe.m

    @property
    def alpha(self) -> float:
        """Probability mass not accounted for by the listed classes."""
        return max(0.0, 1.0 - math.fsum(self.confidences))

    def confidence(self, label: str) -> float | None:
        for cls, conf in zip(self.classes, self.confidences):
            if cls == label:
                return conf
        self.universe.index(label)
        return None

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.classes, self.confidences))

    def sublist(self, classes: Iterable[str]) -> "TopList":
        keep = set(classes)
        pairs = [(c, t) for c, t in zip(self.classes, self.confidences) if c in keep]
        return TopList(self.universe, [c for c, _ in pairs], [t for _, t in pairs])

    def __str__(self) -> str:
        names = ",".join(self.classes)
        confs = ",".join(f"{c:g}" for c in self.confidences)
        return f"({{{names}}},({confs}))"


Prediction = Union[str, TopList, Categorical]


@dataclass(frozen=True)
class EvalCase:
    """One prediction paired with the class that was observed.

    Hard class predictions become point-mass top-1 lists and full
    distributions become top-m lists, so ``prediction`` is always a TopList.
    ``kind`` remembers what was supplied: "hard", "toplist" or "dist".
    """

    prediction: TopList
    observation: str
    kind: str = "toplist"

    def __init__(self, prediction: Prediction, observation: str, universe: ClassUniverse | None = None):
        if isinstance(prediction, TopList):
            toplist, kind = prediction, "toplist"
        elif isinstance(prediction, Categorical):
            toplist, kind = full_list(prediction), "dist"
        elif isinstance(prediction, str):
            if universe is None:
                raise ValueError("a hard class prediction needs an explicit universe")
            toplist, kind = point_mass(prediction, universe), "hard"
        else:
            raise TypeError(f"unsupported prediction type {type(prediction).__name__}")
        if universe is not None:
            _check_same_universe(toplist.universe, universe)
        toplist.universe.index(observation)
        object.__setattr__(self, "prediction", toplist)
        object.__setattr__(self, "observation", observation)
        object.__setattr__(self, "kind", kind)

    @property
    def universe(self) -> ClassUniverse:
        return self.prediction.universe


def point_mass(x: str, universe: ClassUniverse) -> TopList:
    """The hard prediction ``x`` as the top-1 list ``({x}, (1.0))``."""
    universe.index(x)
    return TopList(universe, (x,), (1.0,))


def full_list(p: Categorical) -> TopList:
    """The top-m list carrying ``p`` itself."""
    toplist = object.__new__(TopList)
    object.__setattr__(toplist, "universe", p.universe)
    object.__setattr__(toplist, "classes", p.universe.labels)
    object.__setattr__(toplist, "confidences", p.probs)
    return toplist


def proxy_probability(t: TopList) -> float:
    """Unlisted mass divided evenly over the unlisted classes; 0 for k = m."""
    if t.k == t.m:
        return 0.0
    share = (1.0 - math.fsum(t.confidences)) / (t.m - t.k)
    return min(1.0, max(0.0, share))


def pad(t: TopList) -> Categorical:
    """Padded distribution of ``t``.

    Listed classes keep their confidence score and every unlisted class
    receives the proxy probability.

    >>> u = ClassUniverse.numbered(4)
    >>> pad(TopList(u, ["1", "2"], [0.5, 0.2])).probs
    (0.5, 0.2, 0.15000000000000002, 0.15000000000000002)
    """
    u = t.universe
    if t.k == t.m:
        return Categorical._trusted(u, t.confidences)
    fill = proxy_probability(t)
    probs = [fill] * u.m
    for cls, conf in zip(t.classes, t.confidences):
        probs[u.index(cls)] = conf
    return Categorical._trusted(u, tuple(probs))


def is_valid(t: TopList) -> bool:
    """A list is valid iff its least confidence is at least the proxy probability.

    Equivalently, it is the true top-k list of some distribution.  Top-0 and
    top-m lists are always valid.
    """
    if t.k == 0 or t.k == t.m:
        return True
    return min(t.confidences) >= proxy_probability(t) - VALID_TOL


def is_calibrated(t: TopList, p: Categorical, tol: float = NORM_TOL) -> bool:
    """True iff each confidence matches the probability ``p`` gives its class."""
    _check_same_universe(t.universe, p.universe)
    if tol < 0:
        raise ValueError("tolerance must be nonnegative")
    return all(abs(conf - p[cls]) <= tol for cls, conf in zip(t.classes, t.confidences))


def mode(p: Categorical) -> frozenset[str]:
    top = max(p.probs)
    return frozenset(lab for lab, q in zip(p.universe.labels, p.probs) if q == top)


def _ranked(p: Categorical) -> list[int]:
    return sorted(range(p.universe.m), key=lambda i: (-p.probs[i], i))


def _calibrated_list(p: Categorical, indices: Iterable[int]) -> TopList:
    labels = p.universe.labels
    idx = sorted(indices)
    return TopList(p.universe, [labels[i] for i in idx], [p.probs[i] for i in idx])


def top_k_functional(
    p: Categorical, k: int, enumerate_all: bool = False
) -> TopList | list[TopList]:
    """True top-k list(s) of ``p``.

    Parameters
    ----------
    p : Categorical
        The distribution the lists are true relative to.
    k : int
        List length, ``0 <= k <= m``.
    enumerate_all : bool
        When False, return the canonical true list: classes ranked by
        probability (descending) and then universe index, first k taken.
        When True, return every true top-k list, one per way of choosing
        among classes tied at the cut-off probability.
    """
    m = p.universe.m
    if not 0 <= k <= m:
        raise ValueError(f"k must lie in 0..{m}, got {k}")
    ranked = _ranked(p)
    if not enumerate_all:
        return _calibrated_list(p, ranked[:k])
    if k == 0 or k == m:
        return [_calibrated_list(p, ranked[:k])]
    cutoff = p.probs[ranked[k - 1]]
    sure = [i for i in ranked if p.probs[i] > cutoff]
    tied = [i for i in ranked if p.probs[i] == cutoff]
    return [
        _calibrated_list(p, sure + list(extra))
        for extra in itertools.combinations(tied, k - len(sure))
    ]


def largest_valid_sublist(t: TopList) -> TopList:
    """Largest valid sublist of ``t`` (``t`` itself when already valid).

    Every class attaining the minimum confidence is removed per round, since
    no valid sublist can retain any of them; the empty list is always valid,
    so the loop terminates.
    """
    current = t
    while not is_valid(current):
        low = min(current.confidences)
        current = current.sublist(c for c, conf in zip(current.classes, current.confidences) if conf != low)
    return current


def calibrated_list(p: Categorical, classes: Sequence[str]) -> TopList:
    """Top list on ``classes`` whose confidences are the probabilities under ``p``."""
    return TopList(p.universe, classes, [p[c] for c in classes])
