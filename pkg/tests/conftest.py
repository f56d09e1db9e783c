from functools import lru_cache

import numpy as np
import pytest

from flybat.scenario import Scenario, build_world_inputs, default_scenario


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@lru_cache(maxsize=1)
def full_scale_main_kp() -> float:
    """Host k_p calibrated against the full-size primary pack."""
    return build_world_inputs(default_scenario()).main_params.k_p


def scaled_mission_scenario(
    name: str = "scaled",
    fleet_size: int = 2,
    ground_recharge: bool = True,
    contact_failure_probability: float = 0.0,
    pack_scale: float = 0.08,
    seed: int = 3,
) -> Scenario:
    """Mission scenario with pack capacities scaled down so full missions
    run in a few simulated minutes. The host k_p stays at its full-scale
    calibration, so hover power is unchanged and all timing ratios
    shrink together."""
    sc = default_scenario(name)
    sc.vehicles.main.k_p = full_scale_main_kp()
    sc.batteries.primary.capacity_ah *= pack_scale
    sc.batteries.secondary.capacity_ah *= pack_scale
    sc.mission.fleet_size = fleet_size
    sc.mission.ground_recharge = ground_recharge
    sc.mission.turnaround_delay = 5.0
    sc.docking.contact_failure_probability = contact_failure_probability
    sc.sim.seed = seed
    sc.sim.duration = 2000.0
    return sc
