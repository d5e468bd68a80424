"""Quality-of-results scoring against a reference front.

The reference set stands in for the unobtainable exhaustive optimum: the
non-dominated union of fronts from many runs and methods. A front is
scored by the average, over its (deduplicated) points, of the minimum
relative-difference distance to the reference set. `aedrs` combines the
per-objective relative differences with the Euclidean norm; `adrs` is
the classical variant using the larger of the two differences, so
adrs <= aedrs always holds.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable

from .configuration import pareto_filter

log = logging.getLogger(__name__)

Point = tuple


def _points(front) -> list[tuple[float, float]]:
    pts = getattr(front, "points", front)
    if callable(pts):
        pts = pts()
    return [(float(e), float(a)) for e, a in pts]


@dataclass(frozen=True)
class ReferenceSet:
    """Non-dominated (energy, area) points merged from multiple runs."""

    points: tuple[tuple[float, float], ...]
    label: str = ""

    def __len__(self) -> int:
        return len(self.points)


def build_reference(fronts: Iterable, label: str = "") -> ReferenceSet:
    """Non-dominated subset of the union of the given fronts.

    All fronts must come from runs under the same constraint
    configuration; an empty union yields an empty set with a warning.
    """
    merged = []
    for front in fronts:
        merged.extend(_points(front))
    if not merged:
        log.warning("reference set %r built from empty fronts", label)
        return ReferenceSet((), label)
    unique = sorted(set(merged))
    front = pareto_filter(unique)
    return ReferenceSet(tuple(front), label)


def _relative_differences(ref_point, point) -> tuple[float, float]:
    e_ref, a_ref = ref_point
    e, a = point
    return (e - e_ref) / e_ref, (a - a_ref) / a_ref


def _score(reference, front, combine) -> float:
    ref = _points(reference)
    est = sorted(set(_points(front)))  # duplicates must not skew the average
    if not ref:
        raise ValueError("reference set is empty")
    if not est:
        raise ValueError("estimated front is empty")
    for e_ref, a_ref in ref:
        if e_ref <= 0 or a_ref <= 0:
            raise ValueError(
                f"reference point ({e_ref}, {a_ref}) has a non-positive coordinate; "
                "relative differences are undefined"
            )
    total = 0.0
    for point in est:
        total += min(combine(*_relative_differences(r, point)) for r in ref)
    return total / len(est)


def aedrs(reference, front) -> float:
    """Average Euclidean distance of relative differences to the reference.

    For each estimated point, the minimum over reference points of
    sqrt(((E - E_ref)/E_ref)^2 + ((a - a_ref)/a_ref)^2), averaged over
    the estimated front. Zero means the front matches the reference.
    """
    return _score(reference, front, lambda de, da: math.hypot(de, da))


def adrs(reference, front) -> float:
    """Classical average distance to the reference set: like aedrs but
    each term is max(|dE|, |da|) instead of the Euclidean combination."""
    return _score(reference, front, lambda de, da: max(abs(de), abs(da)))
