import itertools
import random

import pytest

from conftest import make_alt, two_psm_model
from oracles import brute_force_front
from sysdse.configuration import pareto_filter
from sysdse.exhaustive import exhaustive_front
from sysdse.model import Mcc, MccAlternative, Psm, SystemModel
from sysdse.pathfind import build_graph, find_paths
from sysdse.segmentation import (
    InfeasibleError,
    RejectedSegment,
    Subspace,
    assign_frequency,
    enumerate_combos,
    fallback_subspace,
    pool_of,
    prune_segment,
    run_segmentation,
    segment_combos,
    slice_combos,
)


def model_with_fs(f_s_values, f_max=200.0, period=1e-3, grid=(10.0, 30.0, 10.0), n_fpin=2):
    """One PSM whose MCC alternatives have the given scaled minimum
    frequencies (MHz) under the period."""
    alts = tuple(
        make_alt(f"a{i}", exec_cycles=int(f * period * 1e6), f_max=f_max)
        for i, f in enumerate(f_s_values)
    )
    psm = Psm(id="p", period=period, states=("s",), transitions=(),
              mccs=(Mcc("m", "s", alts),))
    return SystemModel(psms=(psm,), links=(), constraints=(), n_fpin=n_fpin,
                       freq_grid=grid)


class TestEnumerateCombos:
    def test_filter_by_required_top(self):
        model = model_with_fs([15.0], grid=(10.0, 30.0, 10.0), n_fpin=2)
        combos = enumerate_combos(model)
        assert combos == [(10.0, 20.0), (10.0, 30.0), (20.0, 30.0)]
        # brute-force subset filter gives the same list
        grid = model.grid_frequencies()
        want = [c for c in itertools.combinations(grid, 2) if c[-1] >= 15.0]
        assert combos == want

    def test_single_frequency_grid(self):
        model = model_with_fs([5.0], grid=(10.0, 10.5, 10.0), n_fpin=1)
        assert enumerate_combos(model) == [(10.0,)]

    def test_required_top_above_grid_is_infeasible(self):
        model = model_with_fs([35.0], grid=(10.0, 30.0, 10.0), n_fpin=2)
        with pytest.raises(InfeasibleError):
            enumerate_combos(model)

    def test_mcc_without_feasible_alternative_is_infeasible(self):
        model = model_with_fs([500.0], f_max=100.0)
        with pytest.raises(InfeasibleError):
            enumerate_combos(model)

    def test_combos_lexicographic_and_ascending(self):
        model = model_with_fs([5.0], grid=(10.0, 50.0, 10.0), n_fpin=3)
        combos = enumerate_combos(model)
        assert combos == sorted(combos)
        for c in combos:
            assert list(c) == sorted(c)
            assert len(c) == 3


class TestSegmentCombos:
    def test_even_slices(self):
        combos = [(1.0,), (2.0,), (3.0,), (4.0,)]
        slices = slice_combos(combos, 3)
        assert slices == [[(1.0,), (2.0,)], [(3.0,), (4.0,)]]

    def test_remainder_goes_to_last_slice(self):
        combos = [(float(i),) for i in range(7)]
        slices = slice_combos(combos, 4)
        assert [len(s) for s in slices] == [2, 2, 3]

    def test_pool_deduplicates(self):
        pools = segment_combos([(10.0, 20.0), (20.0, 30.0)], 2)
        assert pools == [(10.0, 20.0, 30.0)]

    def test_partition_preserves_order(self):
        combos = [(float(i), float(i + 1)) for i in range(29)]
        slices = slice_combos(combos, 6)
        assert [c for s in slices for c in s] == combos

    def test_1329_combos_44_segments(self):
        combos = [(float(i),) for i in range(1329)]
        slices = slice_combos(combos, 44)
        sizes = [len(s) for s in slices]
        assert len(slices) == 43
        assert sum(sizes) == 1329
        assert min(sizes) == 30  # floor(1329/43)
        assert all(s >= 30 for s in sizes)

    def test_fewer_combos_than_segments_warns(self, caplog):
        import logging
        with caplog.at_level(logging.WARNING):
            slices = slice_combos([(1.0,), (2.0,)], 9)
        assert slices == [[(1.0,)], [(2.0,)]]
        assert "single-combo" in caplog.text

    def test_nseg_below_two_rejected(self):
        with pytest.raises(ValueError):
            slice_combos([(1.0,)], 1)


class TestAssignFrequency:
    def test_smallest_at_or_above_minimum(self):
        alt = make_alt(exec_cycles=15_000, f_max=100.0)  # f_s = 15 MHz at 1 ms
        assert assign_frequency(1e-3, alt, (10.0, 20.0, 30.0)) == 20.0

    def test_none_when_above_pool(self):
        alt = make_alt(exec_cycles=35_000, f_max=100.0)
        assert assign_frequency(1e-3, alt, (10.0, 20.0, 30.0)) is None

    def test_none_when_candidate_exceeds_fmax(self):
        alt = make_alt(exec_cycles=15_000, f_max=18.0)
        # smallest pool frequency >= 15 is 20, which is over f_max
        assert assign_frequency(1e-3, alt, (10.0, 20.0, 30.0)) is None


def dominance_model():
    """Alternatives engineered to score E = 2, 3, 4 with areas 5, 4, 6."""
    period = 1.0
    f_max = 1000.0
    alts = tuple(
        MccAlternative(id=f"a{i}", exec_cycles=10_000_000, critical_path=1.0,
                       power=w, f_max=f_max, area=area)
        for i, (w, area) in enumerate([(200.0, 5.0), (300.0, 4.0), (400.0, 6.0)])
    )  # f_s = 10 MHz; with pool {10}: E = 10 * w / (1000 * 1) = w/100
    psm = Psm(id="p", period=period, states=("s",), transitions=(),
              mccs=(Mcc("m", "s", alts),))
    return SystemModel(psms=(psm,), links=(), constraints=(), n_fpin=1,
                       freq_grid=(10.0, 20.0, 10.0))


class TestPruneSegment:
    def test_dominated_alternative_removed(self):
        model = dominance_model()
        sub = prune_segment(model, (10.0,))
        assert isinstance(sub, Subspace)
        kept = [a.id for a in sub.model.psms[0].mccs[0].alternatives]
        assert kept == ["a0", "a1"]  # (4, 6) dominated by (3, 4)
        assert sub.assignments["p.m.a0"].energy == pytest.approx(2.0)
        assert sub.assignments["p.m.a1"].energy == pytest.approx(3.0)

    def test_rejected_when_no_valid_alternative(self):
        model = model_with_fs([35.0], f_max=100.0, grid=(10.0, 40.0, 10.0))
        out = prune_segment(model, (10.0, 20.0, 30.0))
        assert isinstance(out, RejectedSegment)
        assert "p.m" in out.reason

    def test_energy_linear_in_frequency(self):
        model = model_with_fs([8.0, 12.0], f_max=200.0)
        for pool in [(10.0, 20.0), (20.0, 30.0)]:
            sub = prune_segment(model, pool)
            psm = model.psms[0]
            for alt in psm.mccs[0].alternatives:
                key = f"p.m.{alt.id}"
                if key in sub.assignments:
                    a = sub.assignments[key]
                    scale = alt.power / (alt.f_max * psm.period)
                    assert a.energy == pytest.approx(a.frequency * scale, rel=1e-12)

    def test_survivors_form_antichain(self):
        rng = random.Random(4)
        for _ in range(20):
            f_s = [rng.uniform(3.0, 25.0) for _ in range(6)]
            model = model_with_fs(f_s, f_max=rng.uniform(100.0, 300.0))
            sub = prune_segment(model, model.grid_frequencies())
            if isinstance(sub, RejectedSegment):
                continue
            pts = [
                (sub.assignments[f"p.m.{a.id}"].energy, a.area)
                for a in sub.model.psms[0].mccs[0].alternatives
            ]
            assert sorted(set(brute_force_front(pts))) == sorted(set(pts))

    def test_equal_scores_both_kept(self):
        period, f_max = 1.0, 1000.0
        alts = tuple(
            MccAlternative(id=f"t{i}", exec_cycles=10_000_000, critical_path=1.0,
                           power=200.0, f_max=f_max, area=5.0)
            for i in range(2)
        )
        psm = Psm(id="p", period=period, states=("s",), transitions=(),
                  mccs=(Mcc("m", "s", alts),))
        model = SystemModel(psms=(psm,), links=(), constraints=(), n_fpin=1,
                            freq_grid=(10.0, 20.0, 10.0))
        sub = prune_segment(model, (10.0,))
        assert len(sub.model.psms[0].mccs[0].alternatives) == 2


class TestRunSegmentation:
    def test_fallback_always_appended(self, tiny_model):
        result = run_segmentation(tiny_model, 3)
        assert result.subspaces[-1].is_fallback
        assert result.subspaces[-1].model == tiny_model
        assert result.subspaces[-1].segment_index == 2

    def test_nseg_two_single_pool_plus_fallback(self, tiny_model):
        result = run_segmentation(tiny_model, 2)
        non_fallback = [s for s in result.subspaces if not s.is_fallback]
        assert len(non_fallback) + len(result.rejected) == 1
        combos = enumerate_combos(tiny_model)
        if non_fallback:
            assert non_fallback[0].freq_pool == pool_of(combos)

    def test_pruned_model_reloads_under_schema(self, tiny_model, tmp_path):
        from sysdse.model import load_system, save_system
        result = run_segmentation(tiny_model, 3)
        sub = result.subspaces[0]
        save_system(sub.model, tmp_path / "seg.json")
        assert load_system(tmp_path / "seg.json") == sub.model

    def test_every_oracle_point_reachable_from_subspaces(self):
        # pruning soundness at miniature scale: union of per-subspace
        # exhaustive fronts recovers the oracle front exactly
        from sysdse.configuration import pareto_filter
        from sysdse.metrics import aedrs
        model = two_psm_model(bound=8e-4, freq_grid=(10.0, 40.0, 10.0), n_fpin=2)
        g = build_graph(model)
        ps = find_paths(g, model.constraints)
        oracle, _ = exhaustive_front(model, ps, combo_limit=10**6)
        assert oracle.members
        result = run_segmentation(model, 3)
        recovered = []
        for sub in result.subspaces:
            front, _ = exhaustive_front(sub.model, ps, combo_limit=10**6,
                                        freq_pool=sub.freq_pool)
            recovered.extend(front.points())
        merged = pareto_filter(sorted(set(recovered)))
        assert aedrs(oracle, merged) == 0.0

    def test_alt_origin_maps_back(self, tiny_model):
        result = run_segmentation(tiny_model, 3)
        for sub in result.subspaces:
            for slot, (psm, mcc) in enumerate(sub.model.mcc_slots()):
                original = tiny_model.mcc_slots()[slot][1]
                for pruned_idx, alt in enumerate(mcc.alternatives):
                    orig_idx = sub.alt_origin[(slot, pruned_idx)]
                    assert original.alternatives[orig_idx] == alt
