"""Shared fixtures: scenario builders sized so unit tests stay fast.

The compact scenario keeps the landmarks within about a meter of the vehicle,
which makes the explicit observer update stable at the default 1 ms step (the
correction-term feedback scales with k_w / alpha times the summed squared
landmark ranges, so small geometry tolerates coarse steps).
"""

import numpy as np
import pytest

from slamobs import (
    GainConfig,
    NoiseSpec,
    ObserverState,
    Pose,
    Rotation3,
    ScenarioConfig,
    SensorBias,
    Twist,
    TwistProfile,
)


def make_compact_scenario(
    duration: float = 10.0,
    dt: float = 0.001,
    noise: NoiseSpec = NoiseSpec(),
    k_p: float = 1.0,
    k_w: float = 2.0,
    perfect_start: bool = False,
    zero_bias: bool = False,
) -> ScenarioConfig:
    landmarks = np.array(
        [
            [1.0, 0.5, 0.0],
            [-1.0, 0.8, 0.1],
            [0.6, -1.0, 0.3],
            [-0.4, -0.7, -0.2],
        ]
    )
    pose = Pose(Rotation3.identity(), np.array([0.2, -0.1, 0.8]))
    bias = (
        SensorBias.zero()
        if zero_bias
        else SensorBias(np.array([0.02, -0.03, 0.01]), np.array([0.03, 0.01, -0.02]))
    )
    if perfect_start:
        estimates = ObserverState(
            r_hat=pose.rotation,
            p_hat=pose.position.copy(),
            landmarks_hat=landmarks.copy(),
            b_omega_hat=bias.omega.copy(),
            b_v_hat=bias.vel.copy(),
        )
    else:
        estimates = ObserverState.cold_start(len(landmarks))
    return ScenarioConfig(
        name="compact",
        duration=duration,
        dt=dt,
        twist_profile=TwistProfile.constant(
            Twist(np.array([0.05, -0.04, 0.3]), np.array([0.4, 0.1, 0.05]))
        ),
        initial_pose=pose,
        landmarks=landmarks,
        bias=bias,
        noise=noise,
        gains=GainConfig(k_p=k_p, k_w=k_w, gamma=30.0, alpha=np.full(4, 0.1)),
        initial_estimates=estimates,
    )


def make_gentle_scenario(duration: float = 6.0, dt: float = 0.001) -> ScenarioConfig:
    """Sub-meter geometry with alpha = 1: stable even at dt = 0.01, for tests
    that compare outcomes across coarse step sizes."""
    return ScenarioConfig(
        name="gentle",
        duration=duration,
        dt=dt,
        twist_profile=TwistProfile.constant(
            Twist(np.array([0.02, -0.01, 0.15]), np.array([0.15, 0.05, 0.02]))
        ),
        initial_pose=Pose(Rotation3.identity(), np.array([0.1, -0.05, 0.4])),
        landmarks=np.array(
            [
                [0.8, 0.4, 0.0],
                [-0.7, 0.6, 0.1],
                [0.5, -0.8, 0.2],
                [-0.3, -0.5, -0.15],
            ]
        ),
        bias=SensorBias(np.array([0.02, -0.03, 0.01]), np.array([0.03, 0.01, -0.02])),
        gains=GainConfig(k_p=1.0, k_w=2.0, gamma=5.0, alpha=np.full(4, 1.0)),
        initial_estimates=ObserverState.cold_start(4),
    )


@pytest.fixture
def compact_scenario():
    return make_compact_scenario()


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)
