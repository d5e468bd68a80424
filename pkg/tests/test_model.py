import itertools
import json

import pytest
from hypothesis import given, strategies as st

from conftest import make_alt, two_psm_model
from sysdse.model import (
    Mcc,
    MccAlternative,
    Psm,
    SystemModel,
    ValidationError,
    SystemLoadError,
    design_space_size,
    load_system,
    model_from_dict,
    model_to_dict,
    save_system,
    scaled_min_frequency,
)


class TestValidation:
    def test_roundtrip_is_identity(self, tiny_model, tmp_path):
        path = tmp_path / "m.json"
        save_system(tiny_model, path)
        assert load_system(path) == tiny_model

    def test_fixture_roundtrip(self, tiny_fixture_path, tmp_path):
        model = load_system(tiny_fixture_path)
        save_system(model, tmp_path / "again.json")
        assert load_system(tmp_path / "again.json") == model

    def test_transition_to_undeclared_state_named(self):
        with pytest.raises(ValidationError, match="ghost"):
            Psm(id="p", period=1.0, states=("a",), transitions=(("a", "ghost"),))

    def test_mcc_attached_state_checked(self):
        with pytest.raises(ValidationError, match="nowhere"):
            Psm(
                id="p", period=1.0, states=("a",), transitions=(),
                mccs=(Mcc("m", "nowhere", (make_alt(),)),),
            )

    def test_fmax_vs_critical_path(self):
        # 5 ns critical path allows at most 200 MHz
        with pytest.raises(ValidationError, match="f_max"):
            MccAlternative(id="x", exec_cycles=10, critical_path=5.0,
                           power=1.0, f_max=300.0, area=1.0)

    def test_positive_fields_enforced(self):
        with pytest.raises(ValidationError):
            make_alt(power=-1.0)
        with pytest.raises(ValidationError):
            MccAlternative(id="x", exec_cycles=0, critical_path=5.0,
                           power=1.0, f_max=100.0, area=1.0)

    def test_duplicate_psm_id(self, tiny_model):
        with pytest.raises(ValidationError, match="duplicate psm id"):
            SystemModel(
                psms=(tiny_model.psms[0], tiny_model.psms[0]),
                links=(), constraints=(), n_fpin=1, freq_grid=(1.0, 2.0, 1.0),
            )

    def test_link_port_cross_references(self, tiny_model):
        data = model_to_dict(tiny_model)
        data["links"][0]["sender"] = ["p0", "missing_port"]
        with pytest.raises(ValidationError, match="out-port"):
            model_from_dict(data)

    def test_constraint_endpoint_checked(self, tiny_model):
        data = model_to_dict(tiny_model)
        data["constraints"][0]["end"] = ["p1", "no_such_node"]
        with pytest.raises(ValidationError, match="no_such_node"):
            model_from_dict(data)

    def test_malformed_file_is_load_error(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{ not json")
        with pytest.raises(SystemLoadError):
            load_system(bad)

    def test_missing_field_named(self, tmp_path):
        bad = tmp_path / "missing.json"
        bad.write_text(json.dumps({"psms": [], "links": [], "constraints": []}))
        with pytest.raises(ValidationError, match="n_fpin"):
            load_system(bad)

    def test_ads_like_fixture_counts(self, ads_fixture_path):
        model = load_system(ads_fixture_path)
        assert len(model.psms) == 10
        assert sum(len(p.mccs) for p in model.psms) == 18
        assert sum(len(m.alternatives) for p in model.psms for m in p.mccs) == 490
        assert model.n_fpin == 4
        assert model.freq_grid == (2.0, 108.0, 5.0)


class TestDesignSpaceSize:
    def test_product_rule_single_combo(self):
        # 2 MCCs with 3 and 4 alternatives, frequencies fixed to one choice
        p = Psm(
            id="p", period=1e-3, states=("s",), transitions=(),
            mccs=(
                Mcc("m0", "s", tuple(make_alt(f"x{i}") for i in range(3))),
                Mcc("m1", "s", tuple(make_alt(f"y{i}") for i in range(4))),
            ),
        )
        model = SystemModel(psms=(p,), links=(), constraints=(), n_fpin=1,
                            freq_grid=(10.0, 20.0, 10.0))
        assert design_space_size(model, 1) == 12

    def test_two_choices_three_components(self):
        # one MCC with 2 alternatives; components = 2 FSMs + 1 MCC = 3
        p0 = Psm(id="p0", period=1e-3, states=("s",), transitions=(),
                 mccs=(Mcc("m", "s", tuple(make_alt(f"a{i}") for i in range(2))),))
        p1 = Psm(id="p1", period=1e-3, states=("s",), transitions=())
        model = SystemModel(psms=(p0, p1), links=(), constraints=(), n_fpin=3,
                            freq_grid=(10.0, 20.0, 10.0))
        assert len(model.frequency_components()) == 3
        assert design_space_size(model, 2) == 16
        # brute-force count of all assignments over 2 frequency options
        count = 0
        for _alts in range(2):
            for _freqs in itertools.product((10.0, 20.0), repeat=3):
                count += 1
        assert count == 16

    def test_matches_enumeration_on_tiny_system(self, tiny_model):
        # n_fpin >= component count makes the distinctness cap non-binding,
        # so raw enumeration over the grid must match the counting rule
        model = two_psm_model(n_fpin=6, freq_grid=(10.0, 30.0, 10.0))
        comps = model.frequency_components()
        grid = model.grid_frequencies()
        count = 0
        for alts in itertools.product(range(2), range(2)):
            for freqs in itertools.product(grid, repeat=len(comps)):
                count += 1
        assert design_space_size(model, len(grid)) == count

    def test_multiplicative_in_added_mcc(self, tiny_model):
        base = design_space_size(tiny_model, 1)
        psm0 = tiny_model.psms[0]
        extra = Mcc("extra", "work", tuple(make_alt(f"e{i}") for i in range(5)))
        from dataclasses import replace
        grown = replace(
            tiny_model,
            psms=(replace(psm0, mccs=psm0.mccs + (extra,)),) + tiny_model.psms[1:],
        )
        assert design_space_size(grown, 1) == base * 5

    def test_exact_integer_at_scale(self, ads_fixture_path):
        model = load_system(ads_fixture_path)
        size = design_space_size(model, len(model.grid_frequencies()))
        assert isinstance(size, int)
        assert size > 10**60  # astronomically large, still exact


class TestScaledMinFrequency:
    def test_one_mhz(self):
        alt = make_alt(exec_cycles=1000, f_max=200.0)
        assert scaled_min_frequency(alt, 1e-3) == (1.0, True)

    def test_hundred_mhz(self):
        alt = make_alt(exec_cycles=5_000_000, f_max=200.0)
        mhz, feasible = scaled_min_frequency(alt, 50e-3)
        assert mhz == pytest.approx(100.0)
        assert feasible

    def test_infeasible_flagged_not_fatal(self):
        alt = MccAlternative(id="x", exec_cycles=10_000_000, critical_path=1.0,
                             power=1.0, f_max=500.0, area=1.0)
        mhz, feasible = scaled_min_frequency(alt, 10e-3)
        assert mhz == pytest.approx(1000.0)
        assert not feasible

    def test_rejects_nonpositive_period(self):
        with pytest.raises(ValueError):
            scaled_min_frequency(make_alt(), 0.0)

    @given(
        ec=st.integers(min_value=1, max_value=10**9),
        period=st.floats(min_value=1e-9, max_value=10.0),
        factor=st.floats(min_value=1.001, max_value=100.0),
    )
    def test_monotone_in_period_and_cycles(self, ec, period, factor):
        alt = make_alt(exec_cycles=ec, f_max=1000.0, critical_path=0.9)
        f1 = scaled_min_frequency(alt, period).mhz
        f2 = scaled_min_frequency(alt, period * factor).mhz
        assert f2 <= f1
        bigger = make_alt(exec_cycles=ec * 2, f_max=1000.0, critical_path=0.9)
        assert scaled_min_frequency(bigger, period).mhz >= f1
