import json
from pathlib import Path

import pytest

from pcsim.errors import ScenarioInvalid
from pcsim.reference import reference_scenario, thermal_capping_scenario
from pcsim.scenario import (
    PcfSpec,
    Scenario,
    VotingBoxSpec,
    load_scenario,
    load_scenario_file,
)

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


def _minimal(**overrides):
    doc = {"duration_s": 0.001, "workloads": {"0": {"kind": "idle"}}}
    doc.update(overrides)
    return doc


def test_minimal_scenario_loads_with_defaults():
    sc = load_scenario(_minimal())
    assert sc.core_count == 9
    assert sc.dt_us == 1.0
    assert sc.controller.type == "pcf"


def test_unknown_field_rejected():
    with pytest.raises(ScenarioInvalid):
        load_scenario(_minimal(pfct_period=500))


def test_workload_for_missing_core_rejected():
    with pytest.raises(ScenarioInvalid, match="core 99"):
        load_scenario(_minimal(workloads={"99": {"kind": "max"}}))


def test_unsorted_budget_schedule_rejected():
    doc = _minimal(
        budget_schedule=[{"t_s": 0.0008, "budget_w": 50}, {"t_s": 0.0002, "budget_w": 60}]
    )
    with pytest.raises(ScenarioInvalid, match="time-sorted"):
        load_scenario(doc)


def test_schedule_beyond_duration_rejected():
    doc = _minimal(budget_schedule=[{"t_s": 0.5, "budget_w": 50}])
    with pytest.raises(ScenarioInvalid, match="within"):
        load_scenario(doc)


def test_period_off_grid_rejected():
    doc = _minimal(controller={"type": "pcf", "pvct_period_us": 125.5, "pfct_period_us": 502.0})
    with pytest.raises(ScenarioInvalid, match="multiple of dt"):
        load_scenario(doc)


def test_workload_needs_kind_or_trace():
    with pytest.raises(ScenarioInvalid):
        load_scenario(_minimal(workloads={"0": {"seed": 1}}))
    with pytest.raises(ScenarioInvalid):
        load_scenario(
            _minimal(
                workloads={
                    "0": {
                        "kind": "max",
                        "trace": {"segments": [{"duration_s": 1.0, "mix": {"idle": 1.0}}]},
                    }
                }
            )
        )


def test_governor_entry_field_requirements():
    with pytest.raises(ScenarioInvalid):
        load_scenario(_minimal(governor_schedule=[{"t_s": 0.0, "cmd": "perf_level_set"}]))
    ok = load_scenario(
        _minimal(
            governor_schedule=[
                {"t_s": 0.0, "cmd": "perf_level_set", "core": 0, "freq_ghz": 1.0},
                {"t_s": 0.0005, "cmd": "base_version"},
            ]
        )
    )
    assert len(ok.governor_schedule) == 2


def test_resolve_controller_precedence():
    sc = reference_scenario()
    assert isinstance(sc.resolve_controller("pcf"), PcfSpec)
    hottest = sc.resolve_controller("voting_hottest")
    assert isinstance(hottest, VotingBoxSpec)
    assert hottest.t_limit_c == pytest.approx(78.5)
    with pytest.raises(ScenarioInvalid):
        sc.resolve_controller("nonsense")


def test_resolver_falls_back_to_defaults():
    sc = load_scenario(_minimal())
    vb = sc.resolve_controller("voting_percore")
    assert vb.type == "voting_percore"


def test_shipped_reference_file_matches_builder():
    on_disk = json.loads((SCENARIO_DIR / "reference.json").read_text())
    assert Scenario.model_validate(on_disk) == reference_scenario()


def test_shipped_thermal_file_matches_builder():
    on_disk = json.loads((SCENARIO_DIR / "thermal_capping.json").read_text())
    assert Scenario.model_validate(on_disk) == thermal_capping_scenario()


def test_shipped_files_pass_preflight():
    for name in ("reference.json", "thermal_capping.json"):
        sc = load_scenario_file(SCENARIO_DIR / name)
        sc.validate_runnable()


def test_reference_scenario_shape():
    sc = reference_scenario()
    kinds = sorted(w.kind for w in sc.workloads.values())
    assert kinds == ["fast", "fast", "idle", "idle", "max", "max", "mix", "mix", "mix"]
    assert len(sc.budget_schedule) == 5
    assert [e.budget_w for e in sc.budget_schedule] == [120.0, 90.0, 60.0, 100.0, 75.0]
    assert sc.operating_points.fixed_voltage_v == pytest.approx(0.75)
    assert sc.tdp_w == pytest.approx(120.0)
    assert sc.duration_s == pytest.approx(2.0)
