"""Scenario configuration: file loading, validation, and the built-in scenario.

A scenario bundles everything a run needs: duration and step size, the true
twist profile, the initial true pose and landmark map, sensor bias and noise,
observer gains, and the initial estimates. Scenario files are JSON with the
same field layout; every optional section has a documented default (zero
noise, dt = 0.001, cold-start estimates, identity initial pose).

Validation failures raise ScenarioError naming the violated rule, so the CLI
can distinguish configuration problems (exit code 1) from runtime aborts.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .geometry import Pose, Rotation3, Twist
from .observer import GainConfig, ObserverState
from .world import NoiseSpec, SensorBias

DEFAULT_DT = 0.001

# Hard cap on duration / dt; anything above this is a configuration mistake.
MAX_STEPS = 10 ** 8


class ScenarioError(ValueError):
    """A scenario failed to parse or violated a configuration invariant."""


@dataclass(frozen=True)
class TwistProfile:
    """Piecewise-constant twist schedule: (start time, twist) knots.

    The twist at time t is the one of the last knot starting at or before t.
    A single knot at t = 0 expresses the constant-twist case.
    """

    knots: tuple[tuple[float, Twist], ...]

    def __post_init__(self) -> None:
        if not self.knots:
            raise ScenarioError("twist profile needs at least one knot")
        times = [k[0] for k in self.knots]
        if times[0] > 0.0:
            raise ScenarioError(f"first twist knot must start at t <= 0, got t = {times[0]}")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ScenarioError(f"twist knot times must be strictly increasing, got {times}")

    @staticmethod
    def constant(twist: Twist) -> "TwistProfile":
        return TwistProfile(((0.0, twist),))

    def at(self, t: float) -> Twist:
        current = self.knots[0][1]
        for start, twist in self.knots:
            if start > t:
                break
            current = twist
        return current


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully-validated description of one co-simulation run."""

    duration: float
    twist_profile: TwistProfile
    initial_pose: Pose
    landmarks: np.ndarray
    bias: SensorBias
    gains: GainConfig
    initial_estimates: ObserverState
    noise: NoiseSpec = NoiseSpec()
    dt: float = DEFAULT_DT
    name: str = "scenario"

    def __post_init__(self) -> None:
        if not self.duration > 0.0:
            raise ScenarioError(f"duration must be positive, got {self.duration!r}")
        if not self.dt > 0.0:
            raise ScenarioError(f"dt must be positive, got {self.dt!r}")
        if self.duration / self.dt > MAX_STEPS:
            raise ScenarioError(
                f"duration / dt = {self.duration / self.dt:.3g} exceeds the "
                f"step cap of {MAX_STEPS:g}"
            )
        lm = np.asarray(self.landmarks, dtype=float)
        if lm.ndim != 2 or lm.shape[1] != 3:
            raise ScenarioError(f"landmarks must be an (n, 3) array, got shape {lm.shape}")
        n = lm.shape[0]
        if n < 3:
            raise ScenarioError(
                f"at least 3 landmarks are required for observability, got {n}"
            )
        object.__setattr__(self, "landmarks", lm)
        if self.gains.count != n:
            raise ScenarioError(
                f"gains carry {self.gains.count} alpha values for {n} landmarks"
            )
        if self.initial_estimates.count != n:
            raise ScenarioError(
                f"initial estimates carry {self.initial_estimates.count} landmarks, "
                f"scenario has {n}"
            )
        if self.bias.landmark is not None and self.bias.landmark.shape != (n, 3):
            raise ScenarioError(
                f"landmark bias shape {self.bias.landmark.shape} does not match "
                f"{n} landmarks"
            )

    @property
    def count(self) -> int:
        return self.landmarks.shape[0]

    @property
    def step_count(self) -> int:
        # The 1e-9 slack absorbs float fuzz in duration / dt so that, say,
        # 1.0 / 0.1 counts 10 steps rather than 11.
        return int(math.ceil(self.duration / self.dt - 1e-9))

    def with_overrides(
        self,
        dt: float | None = None,
        duration: float | None = None,
        seed: int | None = None,
    ) -> "ScenarioConfig":
        """Copy with CLI-style overrides applied; validation reruns."""
        config = self
        if dt is not None:
            config = replace(config, dt=dt)
        if duration is not None:
            config = replace(config, duration=duration)
        if seed is not None:
            config = replace(config, noise=replace(config.noise, seed=seed))
        return config


def reference_scenario() -> ScenarioConfig:
    """Built-in reference scenario ("paper-sec5").

    A vehicle circles above four square-corner ground landmarks at constant
    twist, with constant offsets on both velocity measurements, a cold-start
    observer, and no measurement noise.
    """
    n = 4
    return ScenarioConfig(
        name="paper-sec5",
        duration=30.0,
        dt=DEFAULT_DT,
        twist_profile=TwistProfile.constant(
            Twist(np.array([0.0, 0.0, 0.3]), np.array([2.5, 0.0, 0.0]))
        ),
        initial_pose=Pose(Rotation3.identity(), np.array([0.0, 0.0, 6.0])),
        landmarks=np.array(
            [
                [7.0, 7.0, 0.0],
                [-7.0, 7.0, 0.0],
                [7.0, -7.0, 0.0],
                [-7.0, -7.0, 0.0],
            ]
        ),
        bias=SensorBias(
            omega=np.array([0.09, -0.15, -0.1]),
            vel=np.array([0.09, 0.06, -0.07]),
        ),
        noise=NoiseSpec(),
        gains=GainConfig(k_p=1.0, k_w=2.0, gamma=30.0, alpha=np.full(n, 0.1)),
        initial_estimates=ObserverState.cold_start(n),
    )


BUILTIN_SCENARIOS = {"paper-sec5": reference_scenario}


def _check_keys(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ScenarioError(f"unknown field(s) in {where}: {sorted(unknown)}")


def _vec3(value, where: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape != (3,):
        raise ScenarioError(f"{where} must be a 3-vector, got {value!r}")
    return arr


def _twist(entry: dict, where: str) -> Twist:
    _check_keys(entry, {"omega", "vel", "t"}, where)
    if "omega" not in entry or "vel" not in entry:
        raise ScenarioError(f"{where} needs both 'omega' and 'vel'")
    return Twist(_vec3(entry["omega"], f"{where}.omega"), _vec3(entry["vel"], f"{where}.vel"))


def _pose(entry: dict, where: str) -> Pose:
    _check_keys(entry, {"rotation", "position"}, where)
    rotation = Rotation3.identity()
    if "rotation" in entry:
        m = np.asarray(entry["rotation"], dtype=float)
        try:
            rotation = Rotation3(m)
        except ValueError as exc:
            raise ScenarioError(f"{where}.rotation: {exc}") from exc
    position = np.zeros(3)
    if "position" in entry:
        position = _vec3(entry["position"], f"{where}.position")
    return Pose(rotation, position)


def scenario_from_dict(data: dict, name: str = "scenario") -> ScenarioConfig:
    """Build a validated config from parsed scenario-file contents."""
    if not isinstance(data, dict):
        raise ScenarioError(f"scenario must be a mapping, got {type(data).__name__}")
    _check_keys(
        data,
        {
            "name",
            "duration",
            "dt",
            "twist",
            "twist_schedule",
            "initial_pose",
            "landmarks",
            "bias",
            "noise",
            "gains",
            "initial_estimates",
        },
        "scenario",
    )
    for key in ("duration", "landmarks", "gains"):
        if key not in data:
            raise ScenarioError(f"scenario is missing required field '{key}'")

    if ("twist" in data) == ("twist_schedule" in data):
        raise ScenarioError("scenario needs exactly one of 'twist' or 'twist_schedule'")
    if "twist" in data:
        profile = TwistProfile.constant(_twist(data["twist"], "twist"))
    else:
        schedule = data["twist_schedule"]
        if not isinstance(schedule, list) or not schedule:
            raise ScenarioError("twist_schedule must be a non-empty list of knots")
        knots = []
        for i, entry in enumerate(schedule):
            where = f"twist_schedule[{i}]"
            if "t" not in entry:
                raise ScenarioError(f"{where} needs a start time 't'")
            knots.append((float(entry["t"]), _twist(entry, where)))
        profile = TwistProfile(tuple(knots))

    landmarks = np.asarray(data["landmarks"], dtype=float)

    bias = SensorBias.zero()
    if "bias" in data:
        section = data["bias"]
        _check_keys(section, {"omega", "vel", "landmark"}, "bias")
        try:
            bias = SensorBias(
                omega=_vec3(section.get("omega", np.zeros(3)), "bias.omega"),
                vel=_vec3(section.get("vel", np.zeros(3)), "bias.vel"),
                landmark=(
                    np.asarray(section["landmark"], dtype=float)
                    if "landmark" in section
                    else None
                ),
            )
        except ValueError as exc:
            raise ScenarioError(f"bias: {exc}") from exc

    noise = NoiseSpec()
    if "noise" in data:
        section = data["noise"]
        _check_keys(section, {"sigma_omega", "sigma_v", "sigma_y", "seed"}, "noise")
        try:
            noise = NoiseSpec(
                sigma_omega=section.get("sigma_omega", 0.0),
                sigma_v=section.get("sigma_v", 0.0),
                sigma_y=section.get("sigma_y", 0.0),
                seed=section.get("seed", 0),
            )
        except ValueError as exc:
            raise ScenarioError(f"noise: {exc}") from exc

    section = data["gains"]
    _check_keys(section, {"k_p", "k_w", "gamma", "alpha"}, "gains")
    for key in ("k_p", "k_w", "gamma", "alpha"):
        if key not in section:
            raise ScenarioError(f"gains is missing required field '{key}'")
    alpha = np.asarray(section["alpha"], dtype=float)
    if alpha.shape == ():
        alpha = np.full(landmarks.shape[0] if landmarks.ndim == 2 else 0, float(alpha))
    try:
        gains = GainConfig(
            k_p=section["k_p"], k_w=section["k_w"], gamma=np.asarray(section["gamma"]),
            alpha=alpha,
        )
    except ValueError as exc:
        raise ScenarioError(f"gains: {exc}") from exc

    n = landmarks.shape[0] if landmarks.ndim == 2 else 0
    estimates = ObserverState.cold_start(max(n, 3))
    if "initial_estimates" in data:
        section = data["initial_estimates"]
        _check_keys(
            section, {"rotation", "position", "landmarks", "b_omega", "b_v"}, "initial_estimates"
        )
        pose = _pose(
            {k: section[k] for k in ("rotation", "position") if k in section},
            "initial_estimates",
        )
        try:
            estimates = ObserverState(
                r_hat=pose.rotation,
                p_hat=pose.position,
                landmarks_hat=(
                    np.asarray(section["landmarks"], dtype=float)
                    if "landmarks" in section
                    else np.zeros((max(n, 3), 3))
                ),
                b_omega_hat=_vec3(section.get("b_omega", np.zeros(3)), "initial_estimates.b_omega"),
                b_v_hat=_vec3(section.get("b_v", np.zeros(3)), "initial_estimates.b_v"),
            )
        except ValueError as exc:
            raise ScenarioError(f"initial_estimates: {exc}") from exc

    initial_pose = Pose.identity()
    if "initial_pose" in data:
        initial_pose = _pose(data["initial_pose"], "initial_pose")

    try:
        return ScenarioConfig(
            name=str(data.get("name", name)),
            duration=float(data["duration"]),
            dt=float(data.get("dt", DEFAULT_DT)),
            twist_profile=profile,
            initial_pose=initial_pose,
            landmarks=landmarks,
            bias=bias,
            noise=noise,
            gains=gains,
            initial_estimates=estimates,
        )
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Load a scenario by built-in name or from a JSON file."""
    key = str(path)
    if key in BUILTIN_SCENARIOS:
        return BUILTIN_SCENARIOS[key]()
    file_path = Path(path)
    if not file_path.exists():
        raise ScenarioError(
            f"scenario '{key}' is neither a built-in name "
            f"({', '.join(sorted(BUILTIN_SCENARIOS))}) nor an existing file"
        )
    try:
        data = json.loads(file_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"could not parse {file_path}: {exc}") from exc
    return scenario_from_dict(data, name=file_path.stem)
