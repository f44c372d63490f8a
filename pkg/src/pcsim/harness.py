"""Closed-loop execution: scenario ingestion to telemetry.

Lockstep mode drives plant and controller from one clock in integer micro-step
ticks, fully deterministic for a fixed seed. Async mode free-runs them as two
threads that exchange snapshots and setpoints through last-writer-wins boxes,
mirroring a shared-memory coupling with no synchronization point; its results
are reproducible only statistically.
"""

from __future__ import annotations

import logging
import threading
import time as _time
from collections import deque
from dataclasses import dataclass

import numpy as np

from .baseline import VotingBoxConfig, VotingBoxController
from .control import Actuation
from .errors import ScenarioInvalid
from .floorplan import FloorplanConfig
from .opp import OperatingPointTable, default_table
from .pcf import PcfConfig, PcfController
from .plant import ActuatorDelays, Plant
from .power import PowerParams
from .scenario import (
    ControllerSpec,
    PcfSpec,
    Scenario,
    VotingBoxSpec,
)
from .scmi import BaseVersion, MailboxRegion, PerfLevelSet, PowerCapSet, ScmiCommand, platform_drain
from .telemetry import Telemetry
from .thermal import RCParams, build_thermal_model
from .workload import Segment, WorkloadTrace, gen_wsynth, sample_at

log = logging.getLogger(__name__)

BMC_AGENT_ID = 0xB0
OS_AGENT_ID = 0x01


@dataclass
class TaskSlot:
    name: str
    period_ticks: int
    priority: int


@dataclass
class Runtime:
    scenario: Scenario
    plant: Plant
    controller: PcfController | VotingBoxController
    traces: list[WorkloadTrace]
    region: MailboxRegion
    commands: list[tuple[int, ScmiCommand]]  # tick-sorted governor + budget feed
    tasks: list[TaskSlot]
    duration_ticks: int
    decim_ticks: int
    boundary_ticks: np.ndarray  # sorted unique workload segment boundaries


def _ticks(t_s: float, dt_s: float) -> int:
    return int(round(t_s / dt_s))


def build_table(scenario: Scenario) -> OperatingPointTable:
    opp = scenario.operating_points
    n_levels = int(round((opp.f_max_ghz - opp.f_min_ghz) / opp.step_ghz)) + 1
    levels = np.round(opp.f_min_ghz * 1e9 + np.arange(n_levels) * opp.step_ghz * 1e9, 0)
    base = default_table(scenario.core_count, fixed_voltage_v=opp.fixed_voltage_v)
    if abs(levels[-1] - opp.f_max_ghz * 1e9) > 1.0:
        raise ScenarioInvalid("operating-point range is not a whole number of steps")
    if opp.fixed_voltage_v is not None:
        volts = np.full(n_levels, opp.fixed_voltage_v)
    else:
        volts = np.where(levels <= 0.9e9, 0.60, np.where(levels <= 1.5e9, 0.75, 0.90))
    domains = opp.domains if opp.domains is not None else base.domains
    return OperatingPointTable(levels_hz=levels, volt_v=volts, domains=[list(d) for d in domains])


def build_controller(
    spec: ControllerSpec,
    table: OperatingPointTable,
    params: PowerParams,
    core_count: int,
    os_targets_hz: np.ndarray,
):
    nominal = PowerParams(
        icc_a=params.icc_a,
        ceff_base_f=params.ceff_base_f,
        variability=np.ones(core_count),
        noise_sigma_w=0.0,
        kappa_slope_per_c=params.kappa_slope_per_c,
        kappa_ref_c=params.kappa_ref_c,
    )
    if isinstance(spec, PcfSpec):
        cfg = PcfConfig(
            table=table,
            pfct_period_s=spec.pfct_period_us * 1e-6,
            pvct_period_s=spec.pvct_period_us * 1e-6,
            t_limit_c=spec.t_limit_c,
            t_margin_c=spec.t_margin_c,
            kp_w_per_c=spec.kp_w_per_c,
            ki_w_per_cs=spec.ki_w_per_cs,
            kd_ws_per_c=spec.kd_ws_per_c,
            p_min_w=spec.p_min_w,
            initial_budget_w=spec.initial_budget_w,
        )
        ctl = PcfController(cfg, nominal, core_count)
    else:
        cfg = VotingBoxConfig(
            table=table,
            variant="hottest" if spec.type == "voting_hottest" else "percore",
            period_s=spec.period_us * 1e-6,
            kp_hz_per_c=spec.kp_hz_per_c,
            ki_hz_per_cs=spec.ki_hz_per_cs,
            t_limit_c=spec.t_limit_c,
            power_gain=spec.power_gain,
            release_step_hz=None if spec.release_step_mhz is None else spec.release_step_mhz * 1e6,
            initial_budget_w=spec.initial_budget_w,
        )
        ctl = VotingBoxController(cfg, nominal, core_count)
    ctl.set_os_targets(os_targets_hz)
    return ctl


def build_runtime(
    scenario: Scenario,
    seed: int | None = None,
    controller_spec: ControllerSpec | None = None,
) -> Runtime:
    scenario.validate_runnable()
    n = scenario.core_count
    dt_s = scenario.dt_s
    master_seed = scenario.seed if seed is None else seed
    ss = np.random.SeedSequence(master_seed)
    variability_seed, noise_seed = ss.spawn(2)

    floorplan = FloorplanConfig(scenario.floorplan.rows, scenario.floorplan.cols)
    rc = RCParams(
        r_lateral_c_per_w=scenario.thermal.r_lateral_c_per_w,
        r_vertical_c_per_w=scenario.thermal.r_vertical_c_per_w,
        c_thermal_j_per_c=scenario.thermal.c_thermal_j_per_c,
        dt_s=dt_s,
    )
    model = build_thermal_model(floorplan, rc, t_ambient_c=scenario.thermal.t_ambient_c)
    params = PowerParams.uniform(
        n,
        icc_a=scenario.power.icc_a,
        ceff_base_f=scenario.power.ceff_base_f,
        noise_sigma_w=scenario.power.noise_sigma_w,
        kappa_slope_per_c=scenario.power.kappa_slope_per_c,
        kappa_ref_c=scenario.power.kappa_ref_c,
        variability_sigma=scenario.power.variability_sigma,
        rng=np.random.default_rng(variability_seed),
    )
    table = build_table(scenario)

    os_targets = np.full(n, table.f_max_hz)
    for core, ghz in scenario.os_targets_ghz.items():
        os_targets[core] = ghz * 1e9

    spec = controller_spec if controller_spec is not None else scenario.controller
    controller = build_controller(spec, table, params, n, os_targets)

    init_freq = table.floor_to_level_hz(os_targets)
    init_volt = np.empty(n)
    for domain in table.domains:
        idx = np.asarray(domain)
        init_volt[idx] = table.volt_for_freq_v(float(init_freq[idx].max()))
    plant = Plant(
        model,
        params,
        table,
        seed=noise_seed,
        init_freq_hz=init_freq,
        init_volt_v=init_volt,
        delays=ActuatorDelays(
            pll_delay_s=scenario.actuators.pll_delay_us * 1e-6,
            vrm_delay_s=scenario.actuators.vrm_delay_us * 1e-6,
        ),
        temp_quant_c=scenario.sensors.temp_quant_c,
        power_quant_w=scenario.sensors.power_quant_w,
    )

    traces = []
    for core in range(n):
        wl = scenario.workloads.get(core)
        if wl is None:
            traces.append(gen_wsynth("idle", scenario.duration_s, seed=0))
        elif wl.trace is not None:
            segments = [Segment(s.duration_s, dict(s.mix)) for s in wl.trace.segments]
            traces.append(WorkloadTrace(segments, looping=wl.trace.looping))
        else:
            traces.append(gen_wsynth(wl.kind, scenario.duration_s, seed=wl.seed))

    duration_ticks = _ticks(scenario.duration_s, dt_s)
    boundaries: set[int] = set()
    for trace in traces:
        ends = trace.segment_boundaries_s()
        reps = 1
        if trace.looping and trace.total_duration_s < scenario.duration_s:
            reps = int(np.ceil(scenario.duration_s / trace.total_duration_s))
        for k in range(reps):
            for end in ends:
                tick = _ticks(k * trace.total_duration_s + end, dt_s)
                if 0 < tick < duration_ticks:
                    boundaries.add(tick)

    commands: list[tuple[int, ScmiCommand]] = []
    for entry in scenario.budget_schedule:
        commands.append(
            (_ticks(entry.t_s, dt_s), PowerCapSet(entry.budget_w, agent_id=BMC_AGENT_ID))
        )
    for entry in scenario.governor_schedule:
        if entry.cmd == "perf_level_set":
            cmd: ScmiCommand = PerfLevelSet(
                core=entry.core, freq_hz=entry.freq_ghz * 1e9, agent_id=entry.agent_id
            )
        elif entry.cmd == "power_cap_set":
            cmd = PowerCapSet(budget_w=entry.budget_w, agent_id=entry.agent_id)
        else:
            cmd = BaseVersion(agent_id=entry.agent_id)
        commands.append((_ticks(entry.t_s, dt_s), cmd))
    commands.sort(key=lambda pair: pair[0])

    tasks = [
        TaskSlot(t.name, _ticks(t.period_s, dt_s), t.priority)
        for t in sorted(controller.tasks(), key=lambda t: t.priority)
    ]
    return Runtime(
        scenario=scenario,
        plant=plant,
        controller=controller,
        traces=traces,
        region=MailboxRegion(),
        commands=commands,
        tasks=tasks,
        duration_ticks=duration_ticks,
        decim_ticks=_ticks(scenario.telemetry_decimation_us * 1e-6, dt_s),
        boundary_ticks=np.array(sorted(boundaries), dtype=np.int64),
    )


def _apply_workload(rt: Runtime, tick: int):
    t_mid = (tick + 0.5) * rt.scenario.dt_s
    ceff = np.empty(rt.plant.core_count)
    ipc = np.empty(rt.plant.core_count)
    for i, trace in enumerate(rt.traces):
        s = sample_at(trace, t_mid if trace.looping else min(t_mid, trace.total_duration_s * (1 - 1e-12)))
        ceff[i] = s.ceff_mult
        ipc[i] = s.ipc
    rt.plant.set_workload(ceff, ipc)


def _record(rt: Runtime, telem: Telemetry, budget_w: float, capping: bool, steps: int):
    p = rt.plant
    telem.append(
        time_s=p.time_s,
        temp_c=p.temp_c,
        power_w=p.last_power_w,
        freq_hz=p.freq_hz,
        volt_v=p.volt_v,
        retired=p.retired,
        budget_w=budget_w,
        capping_active=capping,
        ctrl_steps=steps,
    )


def _controller_steps(controller) -> int:
    return getattr(controller, "pfct_steps", None) or getattr(controller, "steps", 0)


def run_lockstep(scenario: Scenario, seed: int | None = None, probe=None,
                 controller_spec: ControllerSpec | None = None) -> Telemetry:
    """Deterministic closed loop: one clock drives governor writes, controller
    tasks (shortest period first at coincident ticks), telemetry, and the plant
    micro-stepping between events."""
    rt = build_runtime(scenario, seed=seed, controller_spec=controller_spec)
    telem = Telemetry(rt.plant.core_count)
    pending_cmds = deque(rt.commands)
    boundary_i = 0
    tick = 0
    _apply_workload(rt, 0)

    while True:
        # governor side: lay due commands into the mailbox region
        while pending_cmds and pending_cmds[0][0] <= tick:
            _, cmd = pending_cmds[0]
            if rt.region.send(cmd) is None:
                log.warning("mailbox full at t=%.6fs; retrying at the next event", rt.plant.time_s)
                break
            pending_cmds.popleft()

        # controller tasks due at this tick, shortest period first
        if tick < rt.duration_ticks:
            due = [t for t in rt.tasks if tick % t.period_ticks == 0]
            if due:
                snapshot = rt.plant.read_sensor_snapshot()
                inbox = platform_drain(rt.region)
                for slot_i, slot in enumerate(due):
                    act = rt.controller.on_task(
                        slot.name, snapshot, inbox if slot_i == 0 else []
                    )
                    if act is not None:
                        rt.plant.apply_setpoints(act.freq_hz, act.volt_v)
                    if probe is not None:
                        probe(slot.name, tick, act, rt.controller)

        if tick % rt.decim_ticks == 0 or tick == rt.duration_ticks:
            _record(
                rt,
                telem,
                rt.controller.budget_w,
                rt.controller.capping_active,
                _controller_steps(rt.controller),
            )
        if tick >= rt.duration_ticks:
            break

        # next event horizon
        nxt = min(
            rt.duration_ticks,
            (tick // rt.decim_ticks + 1) * rt.decim_ticks,
            min((tick // t.period_ticks + 1) * t.period_ticks for t in rt.tasks),
        )
        if pending_cmds:
            nxt = min(nxt, max(pending_cmds[0][0], tick + 1))
        while boundary_i < len(rt.boundary_ticks) and rt.boundary_ticks[boundary_i] <= tick:
            boundary_i += 1
        if boundary_i < len(rt.boundary_ticks):
            nxt = min(nxt, int(rt.boundary_ticks[boundary_i]))

        _apply_workload(rt, tick)
        rt.plant.advance(nxt - tick)
        tick = nxt

    return telem


class _LatestBox:
    """Last-writer-wins exchange between the plant and controller threads."""

    def __init__(self):
        self._lock = threading.Lock()
        self._value = None

    def put(self, value):
        with self._lock:
            self._value = value

    def get(self):
        with self._lock:
            return self._value


def run_async(scenario: Scenario, seed: int | None = None,
              controller_spec: ControllerSpec | None = None) -> Telemetry:
    """Free-running coupling: plant and controller advance as independently
    clocked threads; the controller acts on whatever snapshot is freshest and
    its setpoints land at the plant's next batch boundary. Not bit-deterministic."""
    rt = build_runtime(scenario, seed=seed, controller_spec=controller_spec)
    opts = scenario.async_options
    telem = Telemetry(rt.plant.core_count)
    snapshot_box = _LatestBox()
    setpoint_box = _LatestBox()
    info_box = _LatestBox()
    info_box.put((rt.controller.budget_w, False, 0))
    done = threading.Event()
    pending_cmds = deque(rt.commands)

    plant_rate = opts.plant_rate_sim_per_wall
    if plant_rate <= 0:
        raise ScenarioInvalid("plant_rate_sim_per_wall must be > 0")

    def plant_loop():
        boundary_i = 0
        tick = 0
        wall_start = _time.monotonic()
        _apply_workload(rt, 0)
        snapshot_box.put(rt.plant.read_sensor_snapshot())
        nonlocal_info = lambda: info_box.get() or (rt.controller.budget_w, False, 0)
        budget, capping, steps = nonlocal_info()
        _record(rt, telem, budget, capping, steps)
        while tick < rt.duration_ticks:
            while pending_cmds and pending_cmds[0][0] <= tick:
                _, cmd = pending_cmds[0]
                if rt.region.send(cmd) is None:
                    break
                pending_cmds.popleft()
            act = setpoint_box.get()
            if act is not None:
                setpoint_box.put(None)
                rt.plant.apply_setpoints(act.freq_hz, act.volt_v)
            nxt = min(
                rt.duration_ticks,
                (tick // rt.decim_ticks + 1) * rt.decim_ticks,
            )
            if pending_cmds:
                nxt = min(nxt, max(pending_cmds[0][0], tick + 1))
            while boundary_i < len(rt.boundary_ticks) and rt.boundary_ticks[boundary_i] <= tick:
                boundary_i += 1
            if boundary_i < len(rt.boundary_ticks):
                nxt = min(nxt, int(rt.boundary_ticks[boundary_i]))
            _apply_workload(rt, tick)
            rt.plant.advance(nxt - tick)
            tick = nxt
            snapshot_box.put(rt.plant.read_sensor_snapshot())
            if tick % rt.decim_ticks == 0 or tick == rt.duration_ticks:
                budget, capping, steps = nonlocal_info()
                _record(rt, telem, budget, capping, steps)
            lag = tick * rt.scenario.dt_s / plant_rate - (_time.monotonic() - wall_start)
            if lag > 0:
                _time.sleep(lag)
        done.set()

    def controller_loop():
        slots = sorted(rt.tasks, key=lambda s: s.priority)
        period_wall = {
            s.name: s.period_ticks * rt.scenario.dt_s / plant_rate * opts.controller_slowdown
            for s in slots
        }
        next_fire = {s.name: 0.0 for s in slots}
        wall_start = _time.monotonic()
        while not done.is_set():
            now = _time.monotonic() - wall_start
            due = [s for s in slots if next_fire[s.name] <= now]
            if not due:
                wake = min(next_fire.values()) - now
                done.wait(timeout=max(wake, 1e-4))
                continue
            snapshot = snapshot_box.get()
            inbox = platform_drain(rt.region)
            for slot_i, slot in enumerate(due):
                if snapshot is None:
                    break
                act = rt.controller.on_task(slot.name, snapshot, inbox if slot_i == 0 else [])
                if act is not None:
                    prev = setpoint_box.get()
                    merged = Actuation(
                        freq_hz=act.freq_hz if act.freq_hz is not None else (prev.freq_hz if prev else None),
                        volt_v=act.volt_v if act.volt_v is not None else (prev.volt_v if prev else None),
                    )
                    setpoint_box.put(merged)
                next_fire[slot.name] += period_wall[slot.name]
            info_box.put(
                (rt.controller.budget_w, rt.controller.capping_active, _controller_steps(rt.controller))
            )

    plant_thread = threading.Thread(target=plant_loop, name="plant")
    ctl_thread = threading.Thread(target=controller_loop, name="controller")
    plant_thread.start()
    ctl_thread.start()
    plant_thread.join()
    ctl_thread.join()
    return telem


def run(scenario: Scenario, mode: str | None = None, seed: int | None = None,
        controller_spec: ControllerSpec | None = None) -> Telemetry:
    mode = mode or scenario.execution_mode
    if mode == "lockstep":
        return run_lockstep(scenario, seed=seed, controller_spec=controller_spec)
    if mode == "async":
        return run_async(scenario, seed=seed, controller_spec=controller_spec)
    raise ScenarioInvalid(f"unknown execution mode {mode!r}")
