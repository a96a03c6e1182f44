"""Scenario runner: co-simulates the world and the observer, records metrics.

The loop is strictly sequential. At step k (time t = k * dt) the world is
measured, the metrics are recorded from that measurement and the current
states, and then both the observer and the truth advance by one step. The
final step is always recorded even when a decimation stride is active, so
"final error" summaries are well defined.

All truth-aware diagnostics (pose error, bias error, the Lyapunov-style
energy) are computed here in the harness, where the truth is available; the
observer itself never sees it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterator

import numpy as np

from .geometry import rotation_distance
from .observer import (
    DivergenceError,
    ObserverState,
    bias_error,
    landmark_errors,
    lyapunov_value,
    observer_step,
    pose_error,
)
from .scenario import ScenarioConfig
from .world import SensorFrame, TrueState, sense, true_step

SETTLE_THRESHOLD = 0.05
SETTLE_HOLD = 1.0

SWEEP_AXES = (
    "k_p",
    "k_w",
    "gamma_scale",
    "alpha_scale",
    "sigma_omega",
    "sigma_v",
    "sigma_y",
    "dt",
)


@dataclass(frozen=True)
class MetricsRecord:
    """Per-step metrics: measurable errors plus truth-aware diagnostics."""

    t: float
    e_norm: np.ndarray
    p_err: np.ndarray
    r_tilde_dist: float
    p_tilde_norm: float
    b_omega_tilde_norm: float
    b_v_tilde_norm: float
    lyapunov: float

    @property
    def max_e(self) -> float:
        return float(self.e_norm.max())

    @property
    def max_p_err(self) -> float:
        return float(self.p_err.max())


@dataclass(frozen=True)
class StepSnapshot:
    """One instant of the co-simulation, before the step-k updates apply."""

    k: int
    t: float
    truth: TrueState
    state: ObserverState
    frame: SensorFrame


def trajectory(config: ScenarioConfig) -> Iterator[StepSnapshot]:
    """Generate snapshots for k = 0 .. step_count, advancing both systems.

    The snapshot at k carries the measurement taken at t = k * dt and the
    states before the k-th update. Raises DivergenceError (with the failing
    step index) if the observer update leaves the finite range.
    """
    truth = TrueState(config.initial_pose, config.landmarks)
    state = config.initial_estimates
    rng = config.noise.make_rng()
    steps = config.step_count
    dt = config.dt
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps + 1):
            t = k * dt
            twist = config.twist_profile.at(t)
            frame = sense(truth, config.bias, config.noise, twist, rng, t)
            yield StepSnapshot(k, t, truth, state, frame)
            if k == steps:
                break
            try:
                state = observer_step(state, frame, config.gains, dt)
            except DivergenceError as exc:
                raise DivergenceError(
                    f"observer diverged at step {k} (t = {t:.6g} s): {exc}", step=k
                ) from exc
            truth = true_step(truth, twist, dt)


def compute_metrics(snapshot: StepSnapshot, config: ScenarioConfig) -> MetricsRecord:
    """Pure function of a snapshot; recomputing from a saved trace is bit-exact."""
    state = snapshot.state
    truth = snapshot.truth
    e = landmark_errors(state, snapshot.frame)
    e_norm = np.sqrt((e * e).sum(axis=1))
    diff = truth.landmarks - state.landmarks_hat
    p_err = np.sqrt((diff * diff).sum(axis=1))
    perr = pose_error(state, truth)
    berr = bias_error(state, config.bias)
    return MetricsRecord(
        t=snapshot.t,
        e_norm=e_norm,
        p_err=p_err,
        r_tilde_dist=rotation_distance(perr.r_tilde),
        p_tilde_norm=float(np.linalg.norm(perr.p_tilde)),
        b_omega_tilde_norm=float(np.linalg.norm(berr.b_omega_tilde)),
        b_v_tilde_norm=float(np.linalg.norm(berr.b_v_tilde)),
        lyapunov=lyapunov_value(state, e, config.bias, config.gains),
    )


def run(config: ScenarioConfig, stride: int = 1) -> list[MetricsRecord]:
    """Run the scenario and return the recorded metric series.

    Records every stride-th step plus the final one. Deterministic given the
    config (noise seed included); a non-finite observer state aborts the run
    with a DivergenceError carrying the failing step index.
    """
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    steps = config.step_count
    records = []
    for snapshot in trajectory(config):
        if snapshot.k % stride == 0 or snapshot.k == steps:
            records.append(compute_metrics(snapshot, config))
    return records


def csv_header(n: int) -> str:
    names = ["t"]
    names += [f"e{i + 1}" for i in range(n)]
    names += [f"perr{i + 1}" for i in range(n)]
    names += ["rtilde", "ptilde", "bomega", "bv", "lyap"]
    return ",".join(names)


def csv_rows(records: list[MetricsRecord], n: int) -> Iterator[str]:
    yield csv_header(n)
    for rec in records:
        if rec.e_norm.shape[0] != n:
            raise ValueError(
                f"record carries {rec.e_norm.shape[0]} landmarks, expected {n}"
            )
        cells = [rec.t]
        cells += rec.e_norm.tolist()
        cells += rec.p_err.tolist()
        cells += [
            rec.r_tilde_dist,
            rec.p_tilde_norm,
            rec.b_omega_tilde_norm,
            rec.b_v_tilde_norm,
            rec.lyapunov,
        ]
        yield ",".join(repr(float(c)) for c in cells)


def write_csv(records: list[MetricsRecord], n: int, path: str | Path) -> None:
    """Write the metric series as UTF-8 CSV with LF endings.

    Floats are rendered with repr (shortest round-trip decimal text), so two
    identical runs produce byte-identical files.
    """
    out = Path(path)
    with out.open("w", encoding="utf-8", newline="\n") as fh:
        for line in csv_rows(records, n):
            fh.write(line)
            fh.write("\n")


def settling_time(
    t: np.ndarray,
    max_e: np.ndarray,
    threshold: float = SETTLE_THRESHOLD,
    hold: float = SETTLE_HOLD,
) -> float | None:
    """First time max_e stays below threshold for a full hold window.

    Returns None when no window that fits inside the run qualifies.
    """
    t = np.asarray(t, dtype=float)
    max_e = np.asarray(max_e, dtype=float)
    below = max_e < threshold
    start = None
    for i in range(len(t)):
        if below[i]:
            if start is None:
                start = i
            if t[i] - t[start] >= hold:
                return float(t[start])
        else:
            start = None
    return None


def fit_exponential_decay(t, values) -> tuple[float, float]:
    """Least-squares exponential fit values ~ A exp(-rate t).

    Returns (rate, r_squared) from a linear regression on the log of the
    positive samples; rate > 0 means decay.
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    mask = v > 0.0
    if mask.sum() < 2:
        raise ValueError("need at least two positive samples to fit a decay rate")
    x = t[mask]
    y = np.log(v[mask])
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(((y - fitted) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return -float(slope), r_squared


@dataclass(frozen=True)
class SweepResult:
    """Summary of one run inside a parameter sweep."""

    axis: str
    value: float
    settling_time: float | None
    final_max_e: float
    final_max_p_err: float
    aborted_step: int | None = None


def _apply_axis(config: ScenarioConfig, axis: str, value: float) -> ScenarioConfig:
    if axis == "k_p":
        gains = replace(config.gains, k_p=value)
        return replace(config, gains=gains)
    if axis == "k_w":
        gains = replace(config.gains, k_w=value)
        return replace(config, gains=gains)
    if axis == "gamma_scale":
        gains = replace(config.gains, gamma=config.gains.gamma * value)
        return replace(config, gains=gains)
    if axis == "alpha_scale":
        gains = replace(config.gains, alpha=config.gains.alpha * value)
        return replace(config, gains=gains)
    if axis in ("sigma_omega", "sigma_v", "sigma_y"):
        return replace(config, noise=replace(config.noise, **{axis: value}))
    if axis == "dt":
        return replace(config, dt=value)
    raise ValueError(f"unknown sweep axis {axis!r}; valid axes: {', '.join(SWEEP_AXES)}")


def sweep(base: ScenarioConfig, axis: str, values) -> list[SweepResult]:
    """Run the base scenario once per value of the chosen parameter.

    Each run is independent and summarized by its settling time (first time
    the largest landmark error stays below 0.05 m for 1 s) and final errors.
    A run that diverges is reported with its aborting step and NaN errors
    rather than failing the whole sweep.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; valid axes: {', '.join(SWEEP_AXES)}")
    results = []
    for value in values:
        config = _apply_axis(base, axis, float(value))
        try:
            records = run(config)
        except DivergenceError as exc:
            results.append(
                SweepResult(
                    axis=axis,
                    value=float(value),
                    settling_time=None,
                    final_max_e=math.nan,
                    final_max_p_err=math.nan,
                    aborted_step=exc.step,
                )
            )
            continue
        t = np.array([r.t for r in records])
        max_e = np.array([r.max_e for r in records])
        results.append(
            SweepResult(
                axis=axis,
                value=float(value),
                settling_time=settling_time(t, max_e),
                final_max_e=records[-1].max_e,
                final_max_p_err=records[-1].max_p_err,
            )
        )
    return results
