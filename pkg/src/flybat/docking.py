"""Docking/undocking state machine for one flying battery.

The dock approach climbs to a point above the platform, centers
laterally, descends, and cuts thrust for a short free fall once the legs
are within the capture funnel (lateral within 2.0 cm of the platform
center AND legs within 5.0 cm of its surface). The platform funnel
guarantees mechanical alignment inside the 2.0 cm radius; electrical
contact additionally depends on a per-docking Bernoulli draw from the
scenario's seeded generator. Undocking is a plain takeoff to 30 cm above
the platform, a lateral departure, and a landing.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class DockingError(ValueError):
    """Raised for invalid docking thresholds or commands."""


class DockPhase(Enum):
    GROUNDED = "grounded"
    TAKEOFF = "takeoff"
    APPROACH_ABOVE = "approach_above"
    DESCEND = "descend"
    FREE_FALL = "free_fall"
    DOCKED = "docked"
    UNDOCK_ASCEND = "undock_ascend"
    DEPART = "depart"
    LANDING = "landing"


# Transition graph: phase -> phases reachable in one step.
TRANSITIONS: dict[DockPhase, tuple[DockPhase, ...]] = {
    DockPhase.GROUNDED: (DockPhase.TAKEOFF,),
    DockPhase.TAKEOFF: (DockPhase.APPROACH_ABOVE,),
    DockPhase.APPROACH_ABOVE: (DockPhase.DESCEND,),
    DockPhase.DESCEND: (DockPhase.FREE_FALL, DockPhase.APPROACH_ABOVE),
    DockPhase.FREE_FALL: (DockPhase.DOCKED, DockPhase.APPROACH_ABOVE),
    DockPhase.DOCKED: (DockPhase.UNDOCK_ASCEND,),
    DockPhase.UNDOCK_ASCEND: (DockPhase.DEPART,),
    DockPhase.DEPART: (DockPhase.LANDING,),
    DockPhase.LANDING: (DockPhase.GROUNDED,),
}


@dataclass(frozen=True)
class DockThresholds:
    hover_above_gap: float = 0.30  # m above the platform for approach/undock
    lateral_capture_radius: float = 0.020  # m, the funnel's alignment radius
    drop_height: float = 0.050  # m, free-fall release gap
    descent_rate: float = 0.15  # m/s during the centered descent

    def __post_init__(self):
        if min(
            self.hover_above_gap,
            self.lateral_capture_radius,
            self.drop_height,
            self.descent_rate,
        ) <= 0.0:
            raise DockingError("all docking thresholds must be positive")
        if self.drop_height > self.hover_above_gap:
            raise DockingError("drop_height cannot exceed hover_above_gap")


@dataclass(frozen=True)
class DockCommands:
    dock: bool = False
    undock: bool = False


@dataclass(frozen=True)
class ContactOutcome:
    """Result of one free-fall capture attempt. The draw records the
    uniform sample spent on the electrical-contact check (None when the
    legs missed the funnel and no draw was consumed)."""

    mechanical_engaged: bool
    electrical_engaged: bool
    draw: float | None = None

    def __post_init__(self):
        if self.electrical_engaged and not self.mechanical_engaged:
            raise DockingError("electrical contact requires mechanical engagement")


# Tolerance bands for "reached" checks on the slewed references.
ALT_REACHED_TOL = 0.05  # m
GAP_REACHED_TOL = 0.02  # m
GROUND_TOL = 0.02  # m


def fsm_step(
    phase: DockPhase,
    thresholds: DockThresholds,
    rel_pose: tuple[float, float],
    altitude: float,
    commands: DockCommands,
) -> DockPhase:
    """Advance the docking state machine by one step.

    rel_pose is (lateral offset, vertical gap) between the vehicle's leg
    plane and the platform surface; altitude is height above ground."""
    lateral, gap = rel_pose
    if not all(map(_finite, (lateral, gap, altitude))):
        raise DockingError(f"non-finite relative pose ({lateral}, {gap}, {altitude})")

    if phase is DockPhase.GROUNDED:
        return DockPhase.TAKEOFF if commands.dock else DockPhase.GROUNDED

    if phase is DockPhase.TAKEOFF:
        if gap >= thresholds.hover_above_gap - ALT_REACHED_TOL:
            return DockPhase.APPROACH_ABOVE
        return DockPhase.TAKEOFF

    if phase is DockPhase.APPROACH_ABOVE:
        centered = lateral <= thresholds.lateral_capture_radius
        at_gap = abs(gap - thresholds.hover_above_gap) <= ALT_REACHED_TOL
        return DockPhase.DESCEND if (centered and at_gap) else DockPhase.APPROACH_ABOVE

    if phase is DockPhase.DESCEND:
        if (
            lateral <= thresholds.lateral_capture_radius
            and gap <= thresholds.drop_height
        ):
            return DockPhase.FREE_FALL
        if lateral > 4.0 * thresholds.lateral_capture_radius:
            # drifted well off center: climb back and retry
            return DockPhase.APPROACH_ABOVE
        return DockPhase.DESCEND

    if phase is DockPhase.FREE_FALL:
        if lateral > thresholds.lateral_capture_radius:
            # bounce-off: outside the funnel, abort and retry
            return DockPhase.APPROACH_ABOVE
        if gap <= 0.0:
            return DockPhase.DOCKED
        return DockPhase.FREE_FALL

    if phase is DockPhase.DOCKED:
        return DockPhase.UNDOCK_ASCEND if commands.undock else DockPhase.DOCKED

    if phase is DockPhase.UNDOCK_ASCEND:
        if gap >= thresholds.hover_above_gap - GAP_REACHED_TOL:
            return DockPhase.DEPART
        return DockPhase.UNDOCK_ASCEND

    if phase is DockPhase.DEPART:
        # the engine slews the reference to the landing point; hand over
        # to LANDING once clear of the platform funnel region
        if lateral >= 10.0 * thresholds.lateral_capture_radius:
            return DockPhase.LANDING
        return DockPhase.DEPART

    if phase is DockPhase.LANDING:
        return DockPhase.GROUNDED if altitude <= GROUND_TOL else DockPhase.LANDING

    raise DockingError(f"unknown phase {phase}")


def _finite(x: float) -> bool:
    return x == x and abs(x) != float("inf")


def capture_check(
    landing_point_lateral: float,
    thresholds: DockThresholds,
    contact_failure_probability: float,
    rng,
) -> ContactOutcome:
    """Outcome of a free-fall impact at the given lateral offset.

    Mechanical engagement succeeds inside the funnel radius. Electrical
    contact then succeeds when a uniform draw from rng clears the
    configured failure probability; the draw is consumed only on
    mechanical engagement so the stream stays aligned across retries."""
    if not 0.0 <= contact_failure_probability <= 1.0:
        raise DockingError("contact_failure_probability must be in [0, 1]")
    mechanical = landing_point_lateral <= thresholds.lateral_capture_radius
    if not mechanical:
        return ContactOutcome(False, False, None)
    draw = float(rng.random())
    electrical = draw >= contact_failure_probability
    return ContactOutcome(True, electrical, draw)


def maneuver_durations(trace) -> tuple[float | None, float | None]:
    """(dock_time, undock_time) measured from a phase-entry trace.

    trace is an iterable of (t, phase) entries for one unit. Dock time
    runs from the first TAKEOFF entry to the first DOCKED entry after
    it; undock time from the first UNDOCK_ASCEND entry to the next
    GROUNDED entry. Missing legs yield None."""
    events = [(float(t), DockPhase(p) if not isinstance(p, DockPhase) else p) for t, p in trace]
    dock_time = None
    undock_time = None
    t_takeoff = None
    t_undock = None
    for t, phase in events:
        if phase is DockPhase.TAKEOFF and t_takeoff is None:
            t_takeoff = t
        elif phase is DockPhase.DOCKED and t_takeoff is not None and dock_time is None:
            dock_time = t - t_takeoff
        elif phase is DockPhase.UNDOCK_ASCEND and t_undock is None:
            t_undock = t
        elif phase is DockPhase.GROUNDED and t_undock is not None and undock_time is None:
            undock_time = t - t_undock
    return dock_time, undock_time
