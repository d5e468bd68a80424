"""System configurations: gene encoding, objectives and front containers.

A configuration (chromosome) selects one alternative per MCC and assigns
one frequency to every frequency-bearing component. Energy is the sum of
the selected alternatives' frequency-scaled energy scores, area the sum
of their areas; FSM and handshake components contribute no energy or
area by default (an idle-contribution hook is provided).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

from .model import SystemModel


class ContractViolation(ValueError):
    """A configuration is structurally incomplete for the given model."""


@dataclass(frozen=True)
class Chromosome:
    """alts[i] selects an alternative for the i-th MCC slot; freqs[j] is
    the MHz frequency of the j-th component in model.frequency_components()
    order."""

    alts: tuple[int, ...]
    freqs: tuple[float, ...]

    def frequency_map(self, model: SystemModel) -> dict[str, float]:
        comps = model.frequency_components()
        if len(comps) != len(self.freqs):
            raise ContractViolation(
                f"chromosome has {len(self.freqs)} frequencies for {len(comps)} components"
            )
        return dict(zip(comps, self.freqs))

    def encode(self) -> str:
        """Semicolon-joined gene list: alternative indices then frequencies."""
        return ";".join([str(a) for a in self.alts] + [repr(f) for f in self.freqs])


def decode_chromosome(text: str, model: SystemModel) -> Chromosome:
    genes = text.split(";")
    n_alts = len(model.mcc_slots())
    n_freqs = len(model.frequency_components())
    if len(genes) != n_alts + n_freqs:
        raise ContractViolation(
            f"encoded chromosome has {len(genes)} genes, expected {n_alts + n_freqs}"
        )
    alts = tuple(int(g) for g in genes[:n_alts])
    freqs = tuple(float(g) for g in genes[n_alts:])
    return Chromosome(alts, freqs)


def validate_chromosome(chrom: Chromosome, model: SystemModel) -> None:
    """Check structural completeness: every slot and component covered,
    alternative indices in range, distinct frequencies within n_fpin."""
    slots = model.mcc_slots()
    if len(chrom.alts) != len(slots):
        raise ContractViolation(
            f"chromosome selects {len(chrom.alts)} alternatives for {len(slots)} MCCs"
        )
    for idx, (psm, mcc) in zip(chrom.alts, slots):
        if not 0 <= idx < len(mcc.alternatives):
            raise ContractViolation(
                f"mcc {psm.id}.{mcc.id}: alternative index {idx} out of range"
            )
    comps = model.frequency_components()
    if len(chrom.freqs) != len(comps):
        raise ContractViolation(
            f"chromosome assigns {len(chrom.freqs)} frequencies for {len(comps)} components"
        )
    if len(set(chrom.freqs)) > model.n_fpin:
        raise ContractViolation(
            f"chromosome uses {len(set(chrom.freqs))} distinct frequencies, "
            f"n_fpin = {model.n_fpin}"
        )


def energy_scale(power: float, f_max: float, period: float) -> float:
    """Linear coefficient mapping an assigned frequency (MHz) to the
    energy score of an alternative: power / (f_max * period)."""
    return power / (f_max * period)


def energy_area(
    model: SystemModel,
    chrom: Chromosome,
    idle_energy: Callable[[str, float], float] | None = None,
) -> tuple[float, float]:
    """Objective values (energy score, area) of a configuration.

    Each selected alternative contributes assigned_frequency * scale with
    scale = power / (f_max * period), and its area. `idle_energy`, when
    given, maps (component id, frequency) to an extra energy term for
    FSM and handshake components; the default contribution is zero.
    """
    comps = model.frequency_components()
    fmap = dict(zip(comps, chrom.freqs))
    energy = 0.0
    area = 0.0
    for slot, (psm, mcc) in enumerate(model.mcc_slots()):
        alt = mcc.alternatives[chrom.alts[slot]]
        freq = fmap[f"mcc:{psm.id}.{mcc.id}"]
        energy += freq * energy_scale(alt.power, alt.f_max, psm.period)
        area += alt.area
    if idle_energy is not None:
        for comp, freq in fmap.items():
            if not comp.startswith("mcc:"):
                energy += idle_energy(comp, freq)
    return energy, area


@dataclass(frozen=True)
class EvaluatedChromosome:
    """A configuration with its objective values and validity verdict."""

    chromosome: Chromosome
    energy: float
    area: float
    valid: bool = True
    violation: str | None = None
    segment: int | None = None
    seed: int | None = None
    from_fallback: bool = False

    @property
    def point(self) -> tuple[float, float]:
        return (self.energy, self.area)


def dominates(p: tuple[float, float], q: tuple[float, float]) -> bool:
    """Strict Pareto dominance for minimization: p is no worse in both
    objectives and better in at least one."""
    return p[0] <= q[0] and p[1] <= q[1] and (p[0] < q[0] or p[1] < q[1])


def pareto_filter(items: Iterable, key=lambda x: x) -> list:
    """Non-dominated subset under strict (energy, area) dominance.

    Ties are kept: items with equal objective pairs survive together.
    Survivors are returned in input order. O(n log n) sweep.
    """
    items = list(items)
    points = [key(x) for x in items]
    order = sorted(range(len(items)), key=lambda i: points[i])
    keep = [False] * len(items)
    best_prev = float("inf")  # min area over groups with strictly lower energy
    i = 0
    while i < len(order):
        j = i
        energy = points[order[i]][0]
        while j < len(order) and points[order[j]][0] == energy:
            j += 1
        group = order[i:j]
        group_min = min(points[g][1] for g in group)
        for g in group:
            a = points[g][1]
            if a == group_min and a < best_prev:
                keep[g] = True
        best_prev = min(best_prev, group_min)
        i = j
    return [items[i] for i in range(len(items)) if keep[i]]


@dataclass(frozen=True)
class ParetoFront:
    """Non-dominated set of evaluated configurations."""

    members: tuple[EvaluatedChromosome, ...]
    abandoned: bool = False

    def points(self) -> list[tuple[float, float]]:
        return [m.point for m in self.members]

    def __len__(self) -> int:
        return len(self.members)


def front_from_members(members: Iterable[EvaluatedChromosome], abandoned: bool = False) -> ParetoFront:
    """Deduplicate by genes, filter to the non-dominated subset, and sort
    by (energy, area, encoding) for stable output."""
    seen = set()
    unique = []
    for m in members:
        if m.chromosome not in seen:
            seen.add(m.chromosome)
            unique.append(m)
    front = pareto_filter(unique, key=lambda m: m.point)
    front.sort(key=lambda m: (m.energy, m.area, m.chromosome.alts, m.chromosome.freqs))
    return ParetoFront(tuple(front), abandoned=abandoned)


def merge_fronts(fronts: Iterable[ParetoFront]) -> ParetoFront:
    members = [m for f in fronts for m in f.members]
    return front_from_members(members)


def save_chromosome(chrom: Chromosome, model: SystemModel, path: str | Path) -> None:
    slots = model.mcc_slots()
    data = {
        "alternatives": {f"{p.id}.{m.id}": idx for (p, m), idx in zip(slots, chrom.alts)},
        "frequencies": chrom.frequency_map(model),
    }
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def load_chromosome(path: str | Path, model: SystemModel) -> Chromosome:
    data = json.loads(Path(path).read_text())
    alt_map = data.get("alternatives", {})
    freq_map = data.get("frequencies", {})
    alts = []
    for psm, mcc in model.mcc_slots():
        key = f"{psm.id}.{mcc.id}"
        if key not in alt_map:
            raise ContractViolation(f"missing alternative selection for mcc {key}")
        alts.append(int(alt_map[key]))
    freqs = []
    for comp in model.frequency_components():
        if comp not in freq_map:
            raise ContractViolation(f"missing frequency for component {comp}")
        freqs.append(float(freq_map[comp]))
    chrom = Chromosome(tuple(alts), tuple(freqs))
    validate_chromosome(chrom, model)
    return chrom
