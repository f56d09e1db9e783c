import numpy as np
import pytest

from flybat.docking import (
    ContactOutcome,
    DockCommands,
    DockPhase,
    DockThresholds,
    DockingError,
    TRANSITIONS,
    capture_check,
    fsm_step,
    maneuver_durations,
)

TH = DockThresholds()
NO_CMD = DockCommands()
DOCK = DockCommands(dock=True)
UNDOCK = DockCommands(undock=True)


def step(phase, lateral, gap, commands=NO_CMD, altitude=1.5):
    return fsm_step(phase, TH, (lateral, gap), altitude, commands)


# ---------------------------------------------------------------------------
# transitions
# ---------------------------------------------------------------------------


def test_grounded_is_noop_without_command():
    assert step(DockPhase.GROUNDED, 3.0, -1.5) is DockPhase.GROUNDED
    assert step(DockPhase.GROUNDED, 3.0, -1.5, DOCK) is DockPhase.TAKEOFF


def test_descend_enters_free_fall_inside_both_thresholds():
    assert step(DockPhase.DESCEND, 0.015, 0.04) is DockPhase.FREE_FALL
    # either threshold alone is not enough
    assert step(DockPhase.DESCEND, 0.015, 0.06) is DockPhase.DESCEND
    assert step(DockPhase.DESCEND, 0.025, 0.04) is DockPhase.DESCEND


def test_docked_undock_command_starts_ascent():
    assert step(DockPhase.DOCKED, 0.0, 0.0) is DockPhase.DOCKED
    assert step(DockPhase.DOCKED, 0.0, 0.0, UNDOCK) is DockPhase.UNDOCK_ASCEND


def test_free_fall_outcomes():
    assert step(DockPhase.FREE_FALL, 0.01, 0.02) is DockPhase.FREE_FALL
    assert step(DockPhase.FREE_FALL, 0.01, 0.0) is DockPhase.DOCKED
    # drift outside the funnel aborts the drop
    assert step(DockPhase.FREE_FALL, 0.03, 0.02) is DockPhase.APPROACH_ABOVE


def test_landing_grounds_on_touchdown():
    assert step(DockPhase.LANDING, 3.0, -1.5, altitude=0.5) is DockPhase.LANDING
    assert step(DockPhase.LANDING, 3.0, -1.5, altitude=0.01) is DockPhase.GROUNDED


def test_fsm_never_leaves_declared_graph(rng):
    phases = list(DockPhase)
    for _ in range(5000):
        phase = phases[int(rng.integers(len(phases)))]
        lateral = float(rng.uniform(0.0, 4.0))
        gap = float(rng.uniform(-2.0, 1.0))
        altitude = float(rng.uniform(0.0, 3.0))
        commands = DockCommands(dock=bool(rng.random() < 0.3), undock=bool(rng.random() < 0.3))
        nxt = fsm_step(phase, TH, (lateral, gap), altitude, commands)
        assert nxt is phase or nxt in TRANSITIONS[phase]
        if nxt is DockPhase.FREE_FALL and phase is DockPhase.DESCEND:
            assert lateral <= TH.lateral_capture_radius
            assert gap <= TH.drop_height


def test_fsm_rejects_non_finite_pose():
    with pytest.raises(DockingError):
        step(DockPhase.DESCEND, float("nan"), 0.1)


def test_thresholds_validation():
    with pytest.raises(DockingError):
        DockThresholds(drop_height=0.5, hover_above_gap=0.3)
    with pytest.raises(DockingError):
        DockThresholds(lateral_capture_radius=0.0)


# ---------------------------------------------------------------------------
# capture_check
# ---------------------------------------------------------------------------


def test_capture_inside_funnel_with_reliable_contact(rng):
    out = capture_check(0.019, TH, 0.0, rng)
    assert out.mechanical_engaged and out.electrical_engaged
    assert out.draw is not None


def test_capture_outside_funnel_fails_mechanically(rng):
    out = capture_check(0.025, TH, 0.0, rng)
    assert not out.mechanical_engaged and not out.electrical_engaged
    assert out.draw is None


def test_capture_certain_electrical_failure(rng):
    out = capture_check(0.0, TH, 1.0, rng)
    assert out.mechanical_engaged
    assert not out.electrical_engaged


def test_capture_electrical_requires_mechanical(rng):
    for _ in range(500):
        lateral = float(rng.uniform(0.0, 0.05))
        out = capture_check(lateral, TH, float(rng.uniform(0.0, 1.0)), rng)
        if out.electrical_engaged:
            assert out.mechanical_engaged
    with pytest.raises(DockingError):
        ContactOutcome(mechanical_engaged=False, electrical_engaged=True)


# ---------------------------------------------------------------------------
# maneuver_durations
# ---------------------------------------------------------------------------


def test_maneuver_durations_from_trace():
    trace = [
        (1.0, "takeoff"),
        (4.0, "approach_above"),
        (18.0, "descend"),
        (21.0, "free_fall"),
        (21.5, "docked"),
        (300.0, "undock_ascend"),
        (301.0, "depart"),
        (303.0, "landing"),
        (308.5, "grounded"),
    ]
    dock, undock = maneuver_durations(trace)
    assert dock == pytest.approx(20.5)
    assert undock == pytest.approx(8.5)


def test_maneuver_durations_empty_trace_flagged():
    assert maneuver_durations([]) == (None, None)
    dock, undock = maneuver_durations([(0.0, "takeoff"), (20.0, "docked")])
    assert dock == pytest.approx(20.0)
    assert undock is None


# ---------------------------------------------------------------------------
# capture robustness regression (engine level)
# ---------------------------------------------------------------------------


def test_hundred_consecutive_dock_cycles_all_capture():
    # 100 descent-to-dock attempts from randomized approach offsets with
    # reliable contact: every one must end mechanically and electrically
    # docked
    from flybat.engine import LEG_HEIGHT, World
    from flybat.scenario import default_scenario

    sc = default_scenario("capture_regression")
    sc.mission.fleet_size = 1
    sc.mission.dispatch_delay = 1e9  # drive dispatch by hand
    sc.docking.contact_failure_probability = 0.0
    world = World(sc)
    rng = np.random.default_rng(99)
    u = world.units[0]
    successes = 0
    for _ in range(100):
        plat = world._platform_point()
        lat = float(rng.uniform(0.0, 0.25))
        ang = float(rng.uniform(0.0, 2 * np.pi))
        z = plat[2] + sc.docking.hover_above_gap + LEG_HEIGHT
        u.state = (
            plat[0] + lat * np.cos(ang), plat[1] + lat * np.sin(ang), z,
            0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        )
        u.ref = [u.state[0], u.state[1], u.state[2]]
        u.ref_v = [0.0, 0.0, 0.0]
        u.pid.reset()
        u.phase = DockPhase.APPROACH_ABOVE
        if u not in world.active_units:
            world.active_units.append(u)
        deadline = world.step_index + 20000  # 20 s budget per attempt
        while u.phase is not DockPhase.DOCKED and world.step_index < deadline:
            world.step()
        assert u.phase is DockPhase.DOCKED
        assert u.outcome is not None and u.outcome.electrical_engaged
        successes += 1
        # release for the next attempt
        world._detach(u, world.step_index * world.dt)
        world.circuit = world.circuit.__class__(diode_drop=world.circuit.diode_drop)
        u.phase = DockPhase.GROUNDED
        if u in world.active_units:
            world.active_units.remove(u)
    assert successes == 100
