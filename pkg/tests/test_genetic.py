import math

import pytest

from conftest import two_psm_model
from oracles import chromosome_is_valid, dominated_by_any
from sysdse.configuration import Chromosome, EvaluatedChromosome
from sysdse.evaluation import ChromosomeEvaluator
from sysdse.genetic import (
    SearchParams,
    evolve,
    fitness,
    init_pop,
    pareto_elite,
    run_segmented_search,
)
from sysdse.model import Mcc, MccAlternative, Psm, SystemModel
from sysdse.pathfind import build_graph, find_paths
from sysdse.segmentation import run_segmentation


class TestFitness:
    def test_zero_at_origin(self):
        assert fitness(0.0, 0.0, 10.0, 10.0, 2.0, 1.0) == 0.0

    def test_clamped_at_maxima(self):
        cost = fitness(10.0, 5.0, 10.0, 5.0, 2.0, 1.0)
        assert cost == pytest.approx(-3.0 * math.log(1e-5), abs=1e-9)
        assert cost == pytest.approx(34.538776394910684, abs=1e-9)

    def test_halfway_point(self):
        cost = fitness(5.0, 2.5, 10.0, 5.0, 2.0, 1.0)
        assert cost == pytest.approx(-3.0 * math.log(0.5), rel=1e-12)

    def test_lower_is_better(self):
        good = fitness(1.0, 1.0, 10.0, 10.0, 2.0, 1.0)
        bad = fitness(9.0, 9.0, 10.0, 10.0, 2.0, 1.0)
        assert good < bad

    def test_scale_invariance_of_ratios(self):
        for c in (2.0, 4.0, 0.5):  # powers of two: exact float ratios
            assert fitness(3.0, 4.0, 10.0, 20.0) == fitness(3.0 * c, 4.0, 10.0 * c, 20.0)

    def test_rejects_nonpositive_normalizers(self):
        with pytest.raises(ValueError):
            fitness(1.0, 1.0, 0.0, 1.0)


def member(e, a, tag=0):
    return EvaluatedChromosome(
        chromosome=Chromosome((tag,), (float(tag),)), energy=float(e), area=float(a)
    )


class TestParetoElite:
    def test_single_member_becomes_elite(self):
        pop, elite = pareto_elite([member(1, 5)], [])
        assert [m.point for m in elite] == [(1.0, 5.0)]

    def test_dominated_new_point_excluded(self):
        old = [member(1, 5, tag=0)]
        pop = [member(2, 4, tag=1), member(3, 3, tag=2), member(2, 6, tag=3)]
        _, elite = pareto_elite(pop, old)
        assert sorted(m.point for m in elite) == [(1.0, 5.0), (2.0, 4.0), (3.0, 3.0)]

    def test_idempotent_on_same_population(self):
        pop = [member(2, 4, tag=1), member(1, 5, tag=0)]
        _, elite1 = pareto_elite(pop, [])
        _, elite2 = pareto_elite(pop, elite1)
        assert [m.point for m in elite1] == [m.point for m in elite2]

    def test_population_trimmed_to_size(self):
        params = SearchParams(population=3)
        pop = [member(i, 10 - i, tag=i) for i in range(8)]
        new_pop, _ = pareto_elite(pop, [], params=params)
        assert len(new_pop) == 3


def searchable_model(bound=9e-4):
    return two_psm_model(bound=bound, freq_grid=(10.0, 50.0, 10.0), n_fpin=2)


def prepared(bound=9e-4, n_seg=3):
    model = searchable_model(bound)
    g = build_graph(model)
    ps = find_paths(g, model.constraints)
    seg = run_segmentation(model, n_seg)
    return model, ps, seg


class TestInitPop:
    def test_fills_under_loose_bounds(self):
        model, ps, seg = prepared(bound=1.0)
        pop, abandoned = init_pop(10, seg.fallback, ps, seed=1)
        assert not abandoned
        assert len(pop) == 10

    def test_members_valid_against_oracle(self):
        model, ps, seg = prepared(bound=9e-4)
        pop, abandoned = init_pop(15, seg.fallback, ps, seed=2)
        assert not abandoned
        for m in pop:
            assert chromosome_is_valid(m.chromosome, ps, model)

    def test_impossible_bound_abandons(self):
        model, ps, seg = prepared(bound=1e-12)
        pop, abandoned = init_pop(5, seg.fallback, ps, seed=3)
        assert abandoned

    def test_respects_n_fpin(self):
        model, ps, seg = prepared(bound=1.0)
        pop, _ = init_pop(20, seg.fallback, ps, seed=4)
        for m in pop:
            assert len(set(m.chromosome.freqs)) <= model.n_fpin


class TestEvolve:
    def test_same_seed_same_front(self):
        model, ps, seg = prepared()
        params = SearchParams(population=12, generations=15, segments=3)
        f1 = evolve(seg.subspaces[0], ps, params, seed=7)
        f2 = evolve(seg.subspaces[0], ps, params, seed=7)
        assert [m.chromosome for m in f1.members] == [m.chromosome for m in f2.members]

    def test_different_seed_may_differ_but_valid(self):
        model, ps, seg = prepared()
        params = SearchParams(population=12, generations=10)
        front = evolve(seg.fallback, ps, params, seed=8)
        checker = ChromosomeEvaluator(model, ps)
        for m in front.members:
            assert checker.report(m.chromosome).ok

    def test_front_is_antichain(self):
        model, ps, seg = prepared()
        front = evolve(seg.fallback, ps, SearchParams(population=15, generations=12), seed=9)
        pts = front.points()
        for p in pts:
            assert not dominated_by_any(p, pts)

    def test_degenerate_single_point(self):
        # every configuration shares identical objectives: the front is one point
        alts = tuple(
            MccAlternative(id=f"a{i}", exec_cycles=1000, critical_path=5.0,
                           power=10.0, f_max=200.0, area=7.0)
            for i in range(2)
        )
        psm = Psm(id="p", period=1e-3, states=("s1", "s2"),
                  transitions=(("s1", "s2"),),
                  mccs=(Mcc("m", "s1", alts),))
        from sysdse.model import LatencyConstraint
        model = SystemModel(
            psms=(psm,), links=(),
            constraints=(LatencyConstraint("c", ("p", "s1"), ("p", "s2"), 1.0),),
            n_fpin=1, freq_grid=(20.0, 30.0, 10.0),
        )
        g = build_graph(model)
        ps = find_paths(g, model.constraints)
        seg = run_segmentation(model, 2)
        front = evolve(seg.fallback, ps, SearchParams(population=2, generations=1), seed=1)
        assert len(set(front.points())) == 1

    def test_elite_monotone_across_generations(self):
        model, ps, seg = prepared()
        snapshots = []
        evolve(
            seg.fallback, ps, SearchParams(population=10, generations=12), seed=5,
            on_generation=lambda gen, elite: snapshots.append([m.point for m in elite]),
        )
        for prev, curr in zip(snapshots, snapshots[1:]):
            for p in prev:
                assert any(
                    (q[0] <= p[0] and q[1] <= p[1]) for q in curr
                ), f"elite point {p} lost without a dominating successor"

    def test_abandoned_init_returns_flagged_empty_front(self):
        model, ps, seg = prepared(bound=1e-12)
        front = evolve(seg.fallback, ps, SearchParams(population=5, generations=5), seed=1)
        assert front.abandoned and len(front) == 0


class TestRunSegmentedSearch:
    def test_merged_is_nondominated_union(self):
        model, ps, _ = prepared()
        params = SearchParams(population=10, generations=10, segments=3)
        run = run_segmented_search(model, ps, params, seed=11)
        pts = run.front.points()
        for p in pts:
            assert not dominated_by_any(p, pts)

    def test_thread_count_does_not_change_result(self):
        model, ps, _ = prepared()
        params = SearchParams(population=8, generations=8, segments=3)
        run1 = run_segmented_search(model, ps, params, seed=13, threads=1)
        run2 = run_segmented_search(model, ps, params, seed=13, threads=3)
        assert [m.chromosome for m in run1.front.members] == [
            m.chromosome for m in run2.front.members
        ]

    def test_abandoned_segment_reruns_on_fallback(self):
        # pool {10, 20} cannot satisfy a bound that requires >= 30 MHz
        model = searchable_model(bound=1.0)
        from dataclasses import replace
        from sysdse.model import LatencyConstraint
        # bound achievable only when the slow MCC runs fast: compute a bound
        # between the fastest latency with 20 MHz and with 50 MHz
        g = build_graph(model)
        ps = find_paths(g, model.constraints)
        ev = ChromosomeEvaluator(model, ps)
        lat_at = lambda f: ev.paths.path_total(ev.paths.compiled[0], (0, 0), (f,) * 6)
        bound = (lat_at(50.0) + lat_at(20.0)) / 2
        model = replace(
            model,
            constraints=(LatencyConstraint("e2e", ("p0", "init"), ("p1", "done"), bound),),
        )
        ps = find_paths(build_graph(model), model.constraints)
        params = SearchParams(population=6, generations=6, segments=5)
        run = run_segmented_search(model, ps, params, seed=3)
        assert any(o.abandoned for o in run.outcomes)
        rerun = [o for o in run.outcomes if o.reran_on_fallback]
        assert rerun, "expected at least one abandoned segment re-run on the fallback"

    def test_provenance_recorded(self):
        model, ps, _ = prepared()
        run = run_segmented_search(model, ps, SearchParams(population=8, generations=6, segments=3), seed=17)
        assert all(m.segment is not None for m in run.front.members)
        assert all(m.seed is not None for m in run.front.members)
