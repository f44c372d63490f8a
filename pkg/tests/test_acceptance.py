"""Acceptance suite: every criterion runs at its stated tolerance and prints
one PASS line with the measured numbers. The heavy 2 s closed-loop runs are
shared across criteria through session fixtures.

Run with: pytest tests/test_acceptance.py -v -s
"""

import struct
from pathlib import Path

import numpy as np
import pytest

from pcsim.errors import ScenarioInvalid
from pcsim.harness import run_lockstep
from pcsim.floorplan import FloorplanConfig
from pcsim.metrics import compute_metrics, retired_deltas_pct
from pcsim.scenario import load_scenario_file
from pcsim.scmi import (
    IMPLEMENTATION_VERSION,
    BaseVersion,
    MailboxRegion,
    PerfLevelSet,
    PowerCapSet,
    platform_drain,
)
from pcsim.telemetry import Telemetry
from pcsim.thermal import RCParams, build_thermal_model, steady_state_temps
from pcsim._kernel import advance_steps

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"

TDP_W = 120.0
BUDGET_TOLERANCE_W = 0.03 * TDP_W  # 3% of TDP
T_LIMIT_C = 85.0


def _core_groups(scenario):
    groups: dict[str, list[int]] = {}
    for core, wl in scenario.workloads.items():
        groups.setdefault(wl.kind, []).append(core)
    return {k: sorted(v) for k, v in groups.items()}


class PfctProbe:
    def __init__(self):
        self.invocations = []  # (task, tick)
        self.computed = []  # per pfct step: frequencies computed for step n+1
        self.dispatched = []  # per pfct step: frequencies dispatched at P1

    def __call__(self, name, tick, act, controller):
        self.invocations.append((name, tick))
        if name == "pfct":
            self.dispatched.append((tick, act.freq_hz.copy()))
            self.computed.append((tick, controller.state.pending_freq_hz.copy()))


@pytest.fixture(scope="session")
def reference_scenario_file():
    return load_scenario_file(SCENARIO_DIR / "reference.json")


@pytest.fixture(scope="session")
def pcf_run(reference_scenario_file):
    probe = PfctProbe()
    telem = run_lockstep(reference_scenario_file, probe=probe)
    return telem, probe


@pytest.fixture(scope="session")
def pcf_run_repeat(reference_scenario_file):
    return run_lockstep(reference_scenario_file)


@pytest.fixture(scope="session")
def percore_run(reference_scenario_file):
    spec = reference_scenario_file.resolve_controller("voting_percore")
    return run_lockstep(reference_scenario_file, controller_spec=spec)


@pytest.fixture(scope="session")
def hottest_run(reference_scenario_file):
    spec = reference_scenario_file.resolve_controller("voting_hottest")
    return run_lockstep(reference_scenario_file, controller_spec=spec)


@pytest.fixture(scope="session")
def thermal_run():
    scenario = load_scenario_file(SCENARIO_DIR / "thermal_capping.json")
    return run_lockstep(scenario), scenario


def test_criterion_1_power_budget_tracking(reference_scenario_file, pcf_run):
    """Mean absolute deviation from the stepped budget stays within 3% of TDP
    over capped samples of the 2 s reference run."""
    telem, _ = pcf_run
    metrics = compute_metrics(telem, reference_scenario_file)
    assert metrics.capped_sample_count > 1000, "capping never engaged; scenario is broken"
    assert metrics.mean_abs_budget_deviation_w <= BUDGET_TOLERANCE_W
    print(
        f"\nACCEPTANCE 1 PASS: budget tracking {metrics.mean_abs_budget_deviation_w:.2f} W "
        f"({metrics.mean_abs_budget_deviation_pct_tdp:.2f}% of TDP) over "
        f"{metrics.capped_sample_count} capped samples (limit 3.60 W)"
    )


def test_criterion_2_thermal_capping(thermal_run):
    """All-max workload with unconstrained budget: 85 C held after a 100 ms
    settling window, transient overshoot at most 1 C."""
    telem, scenario = thermal_run
    t = telem.column("time_s")
    temps = telem.per_core("temp_c")
    settled_max = float(temps[t > 0.100].max())
    overshoot = float(temps.max()) - T_LIMIT_C
    # the criterion must not pass vacuously: unconstrained steady state would
    # exceed the limit (check the model, not the controlled run)
    from pcsim.harness import build_runtime

    rt = build_runtime(scenario)
    demand = (1.0 + 0.01 * (80 - 25)) * (
        rt.plant.power.icc_a * 0.75 + rt.plant.power.ceff_base_f * 2.0e9 * 0.75**2
    )
    uncontrolled = steady_state_temps(rt.plant.model, demand)
    assert uncontrolled.max() > T_LIMIT_C, "plant cannot exceed the limit; test is vacuous"
    assert settled_max <= T_LIMIT_C
    assert overshoot <= 1.0
    print(
        f"\nACCEPTANCE 2 PASS: thermal cap held, max {settled_max:.2f} C after settling "
        f"(limit 85.00 C), transient overshoot {max(overshoot, 0.0):.2f} C (limit 1.00 C)"
    )


def test_criterion_3_baseline_comparison_sign(reference_scenario_file, percore_run, hottest_run):
    """Hottest-core voting relative to per-core voting boosts the sustained-max
    cores: sign strict, magnitude loosely within [+1%, +10%]."""
    groups = _core_groups(reference_scenario_file)
    deltas = retired_deltas_pct(percore_run, hottest_run)
    max_deltas = deltas[groups["max"]]
    assert np.all(max_deltas >= 1.0), f"max-core deltas {max_deltas} below +1%"
    assert np.all(max_deltas <= 10.0), f"max-core deltas {max_deltas} above +10%"
    print(
        f"\nACCEPTANCE 3 PASS: hottest-vs-percore max-core deltas "
        f"{np.round(max_deltas, 2).tolist()} % within [+1, +10]"
    )


def test_criterion_4_pcf_comparison_band(reference_scenario_file, percore_run, pcf_run):
    """PCF relative to the per-core voting box: max cores gain (target +2.5-5%,
    accepted +/-3pp), idle cores lose (target -2 to -3%, accepted +/-3pp), and
    the gain/loss sign pattern holds across the map (max +, mix +, idle -)."""
    telem_pcf, _ = pcf_run
    groups = _core_groups(reference_scenario_file)
    deltas = retired_deltas_pct(percore_run, telem_pcf)
    max_d = deltas[groups["max"]]
    idle_d = deltas[groups["idle"]]
    mix_d = deltas[groups["mix"]]
    assert np.all((max_d >= 2.5 - 3.0) & (max_d <= 5.0 + 3.0)), f"max deltas {max_d}"
    assert np.all((idle_d >= -3.0 - 3.0) & (idle_d <= -2.0 + 3.0)), f"idle deltas {idle_d}"
    # strict sign pattern
    assert np.all(max_d > 0.0), f"max cores must gain, got {max_d}"
    assert np.all(mix_d > 0.0), f"mix cores must gain, got {mix_d}"
    assert np.all(idle_d < 0.0), f"idle cores must lose, got {idle_d}"
    print(
        f"\nACCEPTANCE 4 PASS: pcf-vs-percore deltas max={np.round(max_d, 2).tolist()} "
        f"mix={np.round(mix_d, 2).tolist()} idle={np.round(idle_d, 2).tolist()} %"
    )


def test_criterion_5_thermal_oracle():
    """Ten random RC models: simulated long-run temperature matches the direct
    linear solve within 1e-9 relative error; all spectral radii below 1."""
    rng = np.random.default_rng(505)
    worst_rel = 0.0
    worst_rho = 0.0
    for _ in range(10):
        rows, cols = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        rc = RCParams(
            r_lateral_c_per_w=float(rng.uniform(1.0, 5.0)),
            r_vertical_c_per_w=float(rng.uniform(0.5, 2.5)),
            c_thermal_j_per_c=float(rng.uniform(0.5e-3, 2.0e-3)),
            dt_s=1e-6,
        )
        model = build_thermal_model(FloorplanConfig(rows, cols), rc, t_ambient_c=40.0)
        rho = model.spectral_radius()
        assert rho < 1.0
        n = model.core_count
        u = rng.uniform(0.5, 15.0, size=n)
        tau = rc.r_vertical_c_per_w * rc.c_thermal_j_per_c
        steps = int(30 * tau / model.dt_s)
        theta, _ = advance_steps(
            np.zeros(n), model.a, model.b, u, np.zeros(n), np.zeros((steps, n)), steps
        )
        expected = steady_state_temps(model, u)
        rel = float(np.max(np.abs(theta + 40.0 - expected) / (expected - 40.0)))
        worst_rel = max(worst_rel, rel)
        worst_rho = max(worst_rho, rho)
        assert rel <= 1e-9
    print(
        f"\nACCEPTANCE 5 PASS: 10 random models, worst steady-state rel error "
        f"{worst_rel:.2e} (limit 1e-9), worst spectral radius {worst_rho:.6f}"
    )


def test_criterion_6_scheduler_contract(pcf_run):
    """Any 10 ms window holds exactly 4 PVCT invocations per PFCT invocation,
    and frequencies computed at PFCT step n first reach the plant at step n+1."""
    telem, probe = pcf_run
    ticks = {"pvct": [], "pfct": []}
    for name, tick in probe.invocations:
        ticks[name].append(tick)
    pvct = np.array(ticks["pvct"])
    pfct = np.array(ticks["pfct"])
    window = 10_000  # ticks of 1 us
    for start in (0, 37, 125, 430, 999, 5_000, 123_456, 1_500_000):
        n_pvct = int(((pvct >= start) & (pvct < start + window)).sum())
        n_pfct = int(((pfct >= start) & (pfct < start + window)).sum())
        assert n_pvct == 4 * n_pfct, f"window at {start}: {n_pvct} pvct vs {n_pfct} pfct"

    # one-step delay: the value computed at step n is dispatched at step n+1
    # and is what the plant runs during that period
    times = telem.column("time_s")
    freqs = telem.per_core("freq_hz")
    checked = 0
    for (t_n, computed), (t_n1, dispatched) in zip(probe.computed, probe.dispatched[1:]):
        assert np.array_equal(computed, dispatched)
        row = np.searchsorted(times, (t_n1 + 1) * 1e-6)
        if row < len(times):
            assert np.array_equal(freqs[min(row, len(times) - 1)], dispatched)
            checked += 1
        if checked >= 200:
            break
    print(
        f"\nACCEPTANCE 6 PASS: PVCT:PFCT = 4:1 in all sampled 10 ms windows "
        f"({len(pvct)} PVCT / {len(pfct)} PFCT total); one-step dispatch delay verified "
        f"on {checked} PFCT steps"
    )


def test_criterion_7_scmi_conformance():
    """1e4 random valid commands round-trip through encode/drain byte-exactly,
    records are exactly 40 bytes, and BaseVersion yields the reference bytes."""
    rng = np.random.default_rng(707)
    region = MailboxRegion()
    for i in range(10_000):
        kind = int(rng.integers(0, 3))
        agent = int(rng.integers(0, 2**32))
        if kind == 0:
            cmd = BaseVersion(agent_id=agent)
        elif kind == 1:
            cmd = PerfLevelSet(
                core=int(rng.integers(0, 2**32)),
                freq_hz=float(int(rng.integers(0, 2**32))),
                agent_id=agent,
            )
        else:
            cmd = PowerCapSet(budget_w=int(rng.integers(0, 2**32)) / 1000.0, agent_id=agent)
        record = region.encode(cmd, channel=i % 64)
        assert len(record) == 40
        decoded = platform_drain(region)
        assert decoded == [cmd]

    region = MailboxRegion()
    region.encode(BaseVersion(agent_id=2), channel=0)
    platform_drain(region)
    reference = struct.pack(
        "<IIIBBH8sI12s",
        0,
        1,
        12,
        0x10,
        0x00,
        0,
        struct.pack("<iI", 0, IMPLEMENTATION_VERSION),
        2,
        b"\x00" * 12,
    )
    assert region.channel_bytes(0) == reference
    print(
        "\nACCEPTANCE 7 PASS: 10000 random commands round-tripped byte-exactly; "
        "40 B records; BaseVersion reference response matches"
    )


def test_criterion_8_determinism(pcf_run, pcf_run_repeat, tmp_path):
    """Two lockstep runs of the reference scenario with equal seeds produce
    byte-identical telemetry files."""
    telem_a, _ = pcf_run
    telem_b = pcf_run_repeat
    path_a = tmp_path / "run_a.csv"
    path_b = tmp_path / "run_b.csv"
    telem_a.write_csv(path_a)
    telem_b.write_csv(path_b)
    bytes_a = path_a.read_bytes()
    bytes_b = path_b.read_bytes()
    assert bytes_a == bytes_b
    print(
        f"\nACCEPTANCE 8 PASS: telemetry files byte-identical "
        f"({len(bytes_a)} bytes, {len(telem_a)} samples)"
    )
