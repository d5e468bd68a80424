from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sysdse.model import (
    HandshakeLink,
    LatencyConstraint,
    Mcc,
    MccAlternative,
    Psm,
    SystemModel,
)

FIXTURES = Path(__file__).parent.parent / "fixtures"


def make_alt(alt_id="a0", exec_cycles=1000, f_max=200.0, power=20.0, area=100.0,
             critical_path=None):
    if critical_path is None:
        critical_path = round(0.9 * 1000.0 / f_max, 6)
    return MccAlternative(
        id=alt_id, exec_cycles=exec_cycles, critical_path=critical_path,
        power=power, f_max=f_max, area=area,
    )


def two_psm_model(bound=1.0, n_fpin=2, freq_grid=(10.0, 50.0, 10.0),
                  alts_a=None, alts_b=None):
    """Two linked PSMs, one MCC each; the workhorse for small tests."""
    alts_a = alts_a or (
        make_alt("a0", exec_cycles=2000, f_max=200.0, power=40.0, area=300.0),
        make_alt("a1", exec_cycles=5000, f_max=120.0, power=22.0, area=180.0),
    )
    alts_b = alts_b or (
        make_alt("b0", exec_cycles=10000, f_max=160.0, power=35.0, area=500.0),
        make_alt("b1", exec_cycles=26000, f_max=90.0, power=19.0, area=320.0),
    )
    p0 = Psm(
        id="p0", period=1e-3,
        states=("init", "work", "send"),
        transitions=(("init", "work"), ("work", "send")),
        mccs=(Mcc("m0", "work", alts_a),),
        handshake_out_ports=(("out0", "send"),),
    )
    p1 = Psm(
        id="p1", period=2e-3,
        states=("recv", "work", "done"),
        transitions=(("recv", "work"), ("work", "done")),
        mccs=(Mcc("m0", "work", alts_b),),
        handshake_in_ports=(("in0", "recv"),),
    )
    return SystemModel(
        psms=(p0, p1),
        links=(HandshakeLink("l0", ("p0", "out0"), ("p1", "in0")),),
        constraints=(LatencyConstraint("e2e", ("p0", "init"), ("p1", "done"), bound),),
        n_fpin=n_fpin,
        freq_grid=freq_grid,
    )


@pytest.fixture
def tiny_model():
    return two_psm_model()


@pytest.fixture
def tiny_fixture_path():
    return FIXTURES / "tiny_two_psm.json"


@pytest.fixture
def ads_fixture_path():
    return FIXTURES / "ads_like.json"
