"""Per-segment elite genetic search under latency constraints.

Each segment of the segmented design space is searched by a generational
GA whose elite is the full non-dominated set found so far (unbounded,
carried across generations). Candidate configurations that violate a
latency constraint or an MCC frequency band never enter the population.
Segments whose population cannot be initialised within the attempt
budget are abandoned and re-run on the fallback (unpruned) subspace.
"""

from __future__ import annotations

import logging
import math
import random
import time
from bisect import bisect_left, bisect_right
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from .configuration import (
    Chromosome,
    EvaluatedChromosome,
    ParetoFront,
    front_from_members,
    merge_fronts,
)
from .evaluation import ChromosomeEvaluator
from .model import SystemModel
from .pathfind import PathSet
from .segmentation import SegmentationResult, Subspace, run_segmentation

log = logging.getLogger(__name__)

ROULETTE_EPSILON = 1e-9
LOG_CLAMP = 1e-5


@dataclass(frozen=True)
class SearchParams:
    """GA hyperparameters; defaults follow the reference configuration."""

    population: int = 230
    generations: int = 800
    segments: int = 44
    select_rate: float = 0.5
    crossover_rate: float = 0.7
    mutation_rate: float = 0.5
    weight_energy: float = 2.0
    weight_area: float = 1.0
    init_attempt_factor: int = 10
    offspring_retries: int = 10
    elite_mode: str = "pareto"  # "pareto": unbounded front; "single": best-cost only


def fitness(
    energy: float,
    area: float,
    energy_max: float,
    area_max: float,
    weight_energy: float = 2.0,
    weight_area: float = 1.0,
) -> float:
    """Weighted-log cost of a configuration; lower cost is better.

    cost = -(A*ln(max(1 - E/E_max, 1e-5)) + B*ln(max(1 - a/a_max, 1e-5)))
    with natural logarithms. The clamp keeps the cost finite when an
    objective reaches or exceeds its normalizer.
    """
    if energy_max <= 0 or area_max <= 0:
        raise ValueError("energy_max and area_max must be > 0")
    e_term = math.log(max(1.0 - energy / energy_max, LOG_CLAMP))
    a_term = math.log(max(1.0 - area / area_max, LOG_CLAMP))
    return -(weight_energy * e_term + weight_area * a_term)


def _member_sort_key(member: EvaluatedChromosome):
    return (member.energy, member.area, member.chromosome.alts, member.chromosome.freqs)


def _nearest(sorted_values, target):
    """Nearest element of an ascending list; the larger value wins ties."""
    pos = bisect_left(sorted_values, target)
    if pos == 0:
        return sorted_values[0]
    if pos == len(sorted_values):
        return sorted_values[-1]
    lo, hi = sorted_values[pos - 1], sorted_values[pos]
    return hi if hi - target <= target - lo else lo


class _Engine:
    """Gene-level operators bound to one subspace."""

    def __init__(
        self,
        subspace: Subspace,
        pathset: PathSet,
        params: SearchParams,
        seed: int,
        segment: int | None,
        from_fallback: bool,
    ):
        self.subspace = subspace
        self.params = params
        self.seed = seed
        self.segment = segment
        self.from_fallback = from_fallback
        self.evaluator = ChromosomeEvaluator(subspace.model, pathset)
        self.pool = tuple(subspace.freq_pool)
        self.n_fpin = subspace.model.n_fpin
        paths = self.evaluator.paths
        self.n_slots = self.evaluator.n_slots
        self.n_components = self.evaluator.n_components
        self.slot_sizes = [len(c) for c in paths.slot_cycles]
        self.comp_slot = {ci: slot for slot, ci in enumerate(paths.slot_component)}
        # per (slot, alt): pool frequencies inside the alternative's band
        self.valid_freqs = [
            tuple(
                tuple(f for f in self.pool if paths.slot_fmin[slot][a] <= f <= paths.slot_fmax[slot][a])
                for a in range(self.slot_sizes[slot])
            )
            for slot in range(self.n_slots)
        ]
        self.bands = [
            tuple(zip(paths.slot_fmin[slot], paths.slot_fmax[slot]))
            for slot in range(self.n_slots)
        ]

    # -- gene sampling ------------------------------------------------

    def _freq_for(self, slot: int | None, alt: int, choices, rng: random.Random) -> float:
        if slot is not None:
            if choices is self.pool:
                valid = self.valid_freqs[slot][alt]
            else:
                lo, hi = self.bands[slot][alt]
                valid = [f for f in choices if lo <= f <= hi]
            if valid:
                choices = valid
        return choices[rng.randrange(len(choices))]

    def random_genes(self, rng: random.Random) -> tuple[tuple[int, ...], tuple[float, ...]]:
        """One random candidate: a random n_fpin-subset of the pool, a
        per-MCC alternative drawn uniformly from the alternatives whose
        frequency band intersects the subset (all alternatives when none
        do), and per-component frequencies from the subset."""
        subset = sorted(rng.sample(self.pool, min(self.n_fpin, len(self.pool))))
        alts = []
        for slot in range(self.n_slots):
            compatible = [
                a for a in range(self.slot_sizes[slot])
                if any(self.bands[slot][a][0] <= f <= self.bands[slot][a][1] for f in subset)
            ]
            if compatible:
                alts.append(compatible[rng.randrange(len(compatible))])
            else:
                alts.append(rng.randrange(self.slot_sizes[slot]))
        alts = tuple(alts)
        freqs = []
        for ci in range(self.n_components):
            slot = self.comp_slot.get(ci)
            freqs.append(self._freq_for(slot, alts[slot] if slot is not None else 0, subset, rng))
        return alts, tuple(freqs)

    def repair(self, alts, freqs) -> tuple[float, ...]:
        """Remap frequencies until at most n_fpin distinct values remain:
        the rarest value moves to the nearest kept value that still
        satisfies the affected component's band, preferring the larger
        frequency on distance ties."""
        counts = Counter(freqs)
        if len(counts) <= self.n_fpin:
            return tuple(freqs)
        freqs = list(freqs)
        while len(counts) > self.n_fpin:
            rarest = min(counts, key=lambda f: (counts[f], f))
            del counts[rarest]
            kept = sorted(counts)
            for ci, f in enumerate(freqs):
                if f != rarest:
                    continue
                slot = self.comp_slot.get(ci)
                cand = kept
                if slot is not None:
                    lo, hi = self.bands[slot][alts[slot]]
                    in_band = kept[bisect_left(kept, lo) : bisect_right(kept, hi)]
                    if in_band:
                        cand = in_band
                new = _nearest(cand, f)
                freqs[ci] = new
                counts[new] += 1
        return tuple(freqs)

    def mutate(self, alts, freqs, rng: random.Random):
        """Re-randomize each gene independently with probability p_m."""
        p_m = self.params.mutation_rate
        alts = list(alts)
        for slot in range(self.n_slots):
            if rng.random() < p_m:
                alts[slot] = rng.randrange(self.slot_sizes[slot])
        freqs = list(freqs)
        for ci in range(self.n_components):
            if rng.random() < p_m:
                slot = self.comp_slot.get(ci)
                freqs[ci] = self._freq_for(slot, alts[slot] if slot is not None else 0, self.pool, rng)
        alts = tuple(alts)
        return alts, self.repair(alts, tuple(freqs))

    def mutate_single(self, alts, freqs, rng: random.Random):
        """Change exactly one gene (used by the annealing baseline)."""
        gene = rng.randrange(self.n_slots + self.n_components)
        alts = list(alts)
        freqs = list(freqs)
        if gene < self.n_slots:
            alts[gene] = rng.randrange(self.slot_sizes[gene])
        else:
            ci = gene - self.n_slots
            slot = self.comp_slot.get(ci)
            freqs[ci] = self._freq_for(slot, alts[slot] if slot is not None else 0, self.pool, rng)
        alts = tuple(alts)
        return alts, self.repair(alts, tuple(freqs))

    # -- evaluation ----------------------------------------------------

    def member(self, alts, freqs) -> EvaluatedChromosome:
        energy, area = self.evaluator.objectives(alts, freqs)
        return EvaluatedChromosome(
            chromosome=Chromosome(alts, freqs),
            energy=energy,
            area=area,
            valid=True,
            segment=self.segment,
            seed=self.seed,
            from_fallback=self.from_fallback,
        )

    def init_pop(self, rng: random.Random):
        """Rejection-sample a valid population of size k; abandon after
        init_attempt_factor * k attempts."""
        k = self.params.population
        limit = self.params.init_attempt_factor * k
        pop = []
        for _ in range(limit):
            alts, freqs = self.random_genes(rng)
            freqs = self.repair(alts, freqs)
            if self.evaluator.valid(alts, freqs):
                pop.append(self.member(alts, freqs))
                if len(pop) == k:
                    return pop, False
        return pop, True

    def normalizers(self, members):
        e_max = max(m.energy for m in members)
        a_max = max(m.area for m in members)
        return (e_max if e_max > 0 else 1.0, a_max if a_max > 0 else 1.0)

    def elite_step(self, pop, elite):
        """Merge the elite into the population, refresh the elite from
        the merged set, and trim the population back to k by discarding
        the worst-cost members."""
        merged = list(pop)
        genes = {m.chromosome for m in pop}
        for e in elite:
            if e.chromosome not in genes:
                merged.append(e)
                genes.add(e.chromosome)
        e_max, a_max = self.normalizers(merged)
        costs = [
            fitness(m.energy, m.area, e_max, a_max,
                    self.params.weight_energy, self.params.weight_area)
            for m in merged
        ]
        if self.params.elite_mode == "single":
            best = min(range(len(merged)), key=lambda i: (costs[i],) + _member_sort_key(merged[i]))
            new_elite = [merged[best]]
        else:
            new_elite = list(front_from_members(merged).members)
        order = sorted(range(len(merged)), key=lambda i: (costs[i],) + _member_sort_key(merged[i]))
        kept = order[: self.params.population]
        return [merged[i] for i in kept], new_elite, [costs[i] for i in kept]

    def offspring(self, pop, costs, rng: random.Random):
        """Roulette selection, single-point crossover over the
        concatenated gene string, mutation, and validity filtering.
        Invalid children are regenerated a bounded number of times, then
        a parent is carried over."""
        k = self.params.population
        n_parents = max(2, round(k * self.params.select_rate))
        weights = [1.0 / (c + ROULETTE_EPSILON) for c in costs]
        picks = rng.choices(range(len(pop)), weights=weights, k=n_parents)
        parents = [pop[i] for i in picks]
        children: list[EvaluatedChromosome] = []
        n_genes = self.n_slots + self.n_components
        while len(children) < k:
            p1 = parents[rng.randrange(len(parents))]
            p2 = parents[rng.randrange(len(parents))]
            produced = None
            for _ in range(self.params.offspring_retries):
                g1 = list(p1.chromosome.alts) + list(p1.chromosome.freqs)
                g2 = list(p2.chromosome.alts) + list(p2.chromosome.freqs)
                if rng.random() < self.params.crossover_rate and n_genes > 1:
                    cut = rng.randrange(1, n_genes)
                    g1, g2 = g1[:cut] + g2[cut:], g2[:cut] + g1[cut:]
                valid_children = []
                for g in (g1, g2):
                    alts = tuple(g[: self.n_slots])
                    freqs = tuple(g[self.n_slots :])
                    alts, freqs = self.mutate(alts, freqs, rng)
                    if self.evaluator.valid(alts, freqs):
                        valid_children.append(self.member(alts, freqs))
                if valid_children:
                    produced = valid_children
                    break
            if produced is None:
                produced = [p1]
            for child in produced:
                if len(children) < k:
                    children.append(child)
        return children

    def finalize(self, elite, abandoned=False) -> ParetoFront:
        """Re-express elite members against the original (unpruned)
        model's alternative indices and package them as a front."""
        remapped = []
        for m in elite:
            alts = tuple(
                self.subspace.alt_origin[(slot, idx)]
                for slot, idx in enumerate(m.chromosome.alts)
            )
            remapped.append(replace(m, chromosome=Chromosome(alts, m.chromosome.freqs)))
        return front_from_members(remapped, abandoned=abandoned)


def pareto_elite(pop, elite, params: SearchParams | None = None, engine: _Engine | None = None):
    """Dynamic Pareto elitism: returns (trimmed population, new elite).

    The merged population's non-dominated members become the new elite
    (unbounded); the merged population is trimmed back to the population
    size by discarding the worst-cost members.
    """
    if engine is None:
        params = params or SearchParams()
        merged = list(pop) + [e for e in elite if e.chromosome not in {m.chromosome for m in pop}]
        e_max = max((m.energy for m in merged), default=1.0)
        a_max = max((m.area for m in merged), default=1.0)
        e_max = e_max if e_max > 0 else 1.0
        a_max = a_max if a_max > 0 else 1.0
        costs = [
            fitness(m.energy, m.area, e_max, a_max, params.weight_energy, params.weight_area)
            for m in merged
        ]
        new_elite = list(front_from_members(merged).members)
        order = sorted(range(len(merged)), key=lambda i: (costs[i],) + _member_sort_key(merged[i]))
        kept = [merged[i] for i in order[: params.population]]
        return kept, new_elite
    kept, new_elite, _ = engine.elite_step(pop, elite)
    return kept, new_elite


def init_pop(
    k: int,
    subspace: Subspace,
    pathset: PathSet,
    seed: int,
    params: SearchParams | None = None,
):
    """Spec-level entry: population of k valid random configurations, or
    (partial population, abandoned=True) when the attempt budget runs out."""
    params = replace(params or SearchParams(), population=k)
    engine = _Engine(subspace, pathset, params, seed, subspace.segment_index, subspace.is_fallback)
    return engine.init_pop(random.Random(seed))


def evolve(
    subspace: Subspace,
    pathset: PathSet,
    params: SearchParams,
    seed: int,
    segment: int | None = None,
    from_fallback: bool = False,
    on_generation=None,
) -> ParetoFront:
    """Run the elite GA on one subspace and return its Pareto front.

    Deterministic for a fixed (subspace, params, seed). An abandoned
    initialisation returns an empty front flagged abandoned.
    """
    if segment is None:
        segment = subspace.segment_index
    rng = random.Random(seed)
    engine = _Engine(subspace, pathset, params, seed, segment, from_fallback)
    pop, abandoned = engine.init_pop(rng)
    if abandoned:
        log.info("segment %s: initialisation abandoned after %d attempts",
                 segment, params.init_attempt_factor * params.population)
        return ParetoFront((), abandoned=True)
    elite: list[EvaluatedChromosome] = []
    for gen in range(params.generations):
        pop, elite, costs = engine.elite_step(pop, elite)
        if on_generation is not None:
            on_generation(gen, list(elite))
        pop = engine.offspring(pop, costs, rng)
    _, elite, _ = engine.elite_step(pop, elite)
    return engine.finalize(elite)


def _evolve_task(args):
    return evolve(*args)


@dataclass(frozen=True)
class SegmentOutcome:
    segment_index: int
    is_fallback_subspace: bool
    abandoned: bool
    reran_on_fallback: bool
    front_size: int


@dataclass(frozen=True)
class SearchRun:
    front: ParetoFront
    outcomes: tuple[SegmentOutcome, ...]
    segmentation: SegmentationResult
    segmentation_seconds: float = 0.0
    search_seconds: float = 0.0


def _run_tasks(tasks, threads: int):
    if threads <= 1 or len(tasks) <= 1:
        return [_evolve_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_evolve_task, tasks))


def run_segmented_search(
    model: SystemModel,
    pathset: PathSet,
    params: SearchParams,
    seed: int,
    threads: int = 1,
) -> SearchRun:
    """Segment the design space, evolve each segment in parallel, re-run
    abandoned segments on the fallback subspace, and merge the fronts.

    Each segment owns an independent RNG seeded seed + segment_index, so
    results are identical for any thread count.
    """
    t0 = time.perf_counter()
    seg = run_segmentation(model, params.segments)
    t_seg = time.perf_counter() - t0
    t0 = time.perf_counter()
    tasks = [
        (sub, pathset, params, seed + sub.segment_index, sub.segment_index, sub.is_fallback)
        for sub in seg.subspaces
    ]
    fronts = _run_tasks(tasks, threads)
    rerun_specs = []
    for sub, front in zip(seg.subspaces, fronts):
        if front.abandoned and not sub.is_fallback:
            rerun_specs.append(
                (seg.fallback, pathset, params, seed + sub.segment_index, sub.segment_index, True)
            )
    reruns = _run_tasks(rerun_specs, threads)
    rerun_by_segment = {spec[4]: front for spec, front in zip(rerun_specs, reruns)}

    outcomes = []
    collected = []
    for sub, front in zip(seg.subspaces, fronts):
        rerun_front = rerun_by_segment.get(sub.segment_index)
        if front.abandoned and rerun_front is not None:
            outcomes.append(
                SegmentOutcome(sub.segment_index, sub.is_fallback, True, True, len(rerun_front))
            )
            collected.append(rerun_front)
        else:
            outcomes.append(
                SegmentOutcome(sub.segment_index, sub.is_fallback, front.abandoned, False, len(front))
            )
            collected.append(front)
    merged = merge_fronts(collected)
    t_search = time.perf_counter() - t0
    if not merged.members:
        log.warning("search produced an empty front: constraints appear infeasible")
        return SearchRun(merged, tuple(outcomes), seg, t_seg, t_search)
    checker = ChromosomeEvaluator(model, pathset)
    for m in merged.members:
        if not checker.valid(m.chromosome.alts, m.chromosome.freqs):
            raise RuntimeError(
                f"front member failed post-hoc constraint re-check: {m.chromosome.encode()}"
            )
    return SearchRun(merged, tuple(outcomes), seg, t_seg, t_search)
