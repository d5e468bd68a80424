"""Prior-work style searchers over the unsegmented design space.

Both baselines share the GA's gene operators and evaluation code so the
comparison isolates segmentation and elitism: the GA baseline is the
elite GA run once on the full (fallback) subspace, and the annealer
walks single-gene mutations with temperature-controlled acceptance,
archiving every feasible configuration it visits.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass

from .configuration import ParetoFront, front_from_members
from .genetic import SearchParams, _Engine, evolve, fitness
from .model import SystemModel
from .pathfind import PathSet
from .segmentation import enumerate_combos, fallback_subspace

log = logging.getLogger(__name__)


def full_space_subspace(model: SystemModel):
    """The unsegmented design space packaged as a single subspace."""
    return fallback_subspace(model, enumerate_combos(model), segment_index=0)


def run_baseline_ga(
    model: SystemModel,
    pathset: PathSet,
    params: SearchParams | None = None,
    seed: int = 0,
) -> ParetoFront:
    """Unsegmented GA: identical machinery to the per-segment search but
    over the original model and the pooled frequency choices."""
    params = params or SearchParams(population=1000, generations=1000, segments=0)
    return evolve(full_space_subspace(model), pathset, params, seed, segment=None)


@dataclass(frozen=True)
class AnnealParams:
    temperature_start: float = 1000.0
    temperature_diff: float = 850.0
    iterations: int = 2000
    init_attempt_limit: int = 2000
    weight_energy: float = 2.0
    weight_area: float = 1.0


def run_baseline_sa(
    model: SystemModel,
    pathset: PathSet,
    params: AnnealParams | None = None,
    seed: int = 0,
) -> ParetoFront:
    """Simulated annealing over single-gene moves.

    Geometric cooling from temperature_start down by temperature_diff
    over the iteration budget; worse moves are accepted with probability
    exp(-delta_cost / temperature). With zero starting temperature this
    degenerates to greedy descent. The returned front is the
    non-dominated subset of every feasible configuration visited.
    """
    params = params or AnnealParams()
    rng = random.Random(seed)
    sub = full_space_subspace(model)
    ga_params = SearchParams(weight_energy=params.weight_energy, weight_area=params.weight_area)
    engine = _Engine(sub, pathset, ga_params, seed, segment=None, from_fallback=False)

    current = None
    for _ in range(params.init_attempt_limit):
        alts, freqs = engine.random_genes(rng)
        freqs = engine.repair(alts, freqs)
        if engine.evaluator.valid(alts, freqs):
            current = engine.member(alts, freqs)
            break
    if current is None:
        log.info("annealing: no feasible start within %d attempts", params.init_attempt_limit)
        return ParetoFront((), abandoned=True)

    t_start = params.temperature_start
    t_end = max(t_start - params.temperature_diff, 0.0)
    if t_start > 0:
        ratio = (max(t_end, 1e-12) / t_start) ** (1.0 / max(params.iterations, 1))
    else:
        ratio = 0.0

    archive = [current]
    e_max = max(current.energy, 1e-300)
    a_max = max(current.area, 1e-300)
    for i in range(params.iterations):
        temperature = t_start * (ratio**i) if t_start > 0 else 0.0
        alts, freqs = engine.mutate_single(current.chromosome.alts, current.chromosome.freqs, rng)
        if not engine.evaluator.valid(alts, freqs):
            continue
        candidate = engine.member(alts, freqs)
        archive.append(candidate)
        e_max = max(e_max, candidate.energy)
        a_max = max(a_max, candidate.area)
        cost_cur = fitness(current.energy, current.area, e_max, a_max,
                           params.weight_energy, params.weight_area)
        cost_new = fitness(candidate.energy, candidate.area, e_max, a_max,
                           params.weight_energy, params.weight_area)
        delta = cost_new - cost_cur
        if delta < 0 or (temperature > 0 and rng.random() < math.exp(-delta / temperature)):
            current = candidate
    return front_from_members(archive)
