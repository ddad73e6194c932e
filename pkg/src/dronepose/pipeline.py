"""Scenario-driven experiment runner.

A scenario is a flat text file of ``dotted.key = value`` lines (``#``
starts a comment). Unknown keys are rejected; every omitted key takes
the documented default; the seed is mandatory because every run must
be reproducible. Vectors are space-separated numbers. Indexed groups
use a numeric path segment starting at 0:

    schema_version = 1
    seed = 7
    duration = 30.0
    drone.width = 0.5
    drone.waypoint.0.time = 0.0
    drone.waypoint.0.position = 0 0 20
    scene.0.kind = ground_plane
    scene.0.center = 0 0 0
    scene.0.dimensions = 200 200 1

A run produces per-frame rows (time, estimated and true drone position
in the vehicle camera frame, estimated and true relative orientation
as extrinsic-XYZ angles in degrees, tracking status, correction flag),
plus a metrics summary and a resolved scenario echo that reloads to an
identical run.
"""

from __future__ import annotations

import re
import time as _time
from dataclasses import dataclass, field, replace

import numpy as np

from .detector import KernelParams, NoCandidatesError
from .depth_image import ProjectionParams
from .geom import Pose, euler_to_rotation, euler_xyz, orthonormalize
from .scan_sim import (
    DroneModel,
    IndirectObsModel,
    LidarModel,
    MotorState,
    Scene,
    ScenePrimitive,
    Trajectories,
    TrajectorySpec,
    observe_ego_direction,
    observe_vds,
    simulate_full_scan,
    simulate_vibration_frame,
)
from .tracker import MeanShiftParams, TrackState, acquire, track_step
from .vp_rot import (
    AmbiguousMatchError,
    MotionAccumulator,
    RotationFilterState,
    accumulate_motion,
    correct_rotation,
    estimate_rotation,
    filter_rotation,
    match_vds,
)


class ScenarioError(ValueError):
    """Scenario file could not be parsed or validated."""


# key -> (type tag, default-as-string or None when required)
_SCHEMA = {
    "schema_version": ("int", None),
    "seed": ("int", None),
    "duration": ("float", "30.0"),
    "drone.width": ("float", "0.5"),
    "kernel.outer_band": ("int", "20"),
    "kernel.epsilon": ("float", "0.1"),
    "kernel.max_inner": ("int", "101"),
    "kernel.skip_empty_inner": ("bool", "false"),
    "projection.resolution": ("int", "512"),
    "projection.fov_deg": ("float", "120.0"),
    "projection.view_direction": ("vec3", "0 0 1"),
    "meanshift.radius": ("float", "1.0"),
    "meanshift.iterations": ("int", "10"),
    "meanshift.bandwidth": ("float", "1.0"),
    "meanshift.track_iterations": ("int", "3"),
    "meanshift.miss_limit": ("int", "5"),
    "lidar.beam_count": ("int", "16"),
    "lidar.elevation_span_deg": ("float", "30.0"),
    "lidar.azimuth_step_deg": ("float", "0.2"),
    "lidar.range_noise": ("float", "0.0"),
    "lidar.max_range": ("float", "100.0"),
    "lidar.points_per_second": ("float", "300000.0"),
    "motor.sweep_rpm": ("float", "11.4"),
    "motor.vibration_amplitude_deg": ("float", "5.0"),
    "motor.vibration_period": ("float", "0.12"),
    "observation.vd_noise_deg": ("float", "0.0"),
    "observation.ego_noise_deg": ("float", "0.0"),
    "observation.scramble": ("bool", "true"),
    "rotation.initial_rpy_deg": ("vec3", "0 0 0"),
    "rotation.max_rate_deg": ("float", "20.0"),
    "motion.window": ("int", "7"),
    "motion.frame_gap": ("int", "14"),
    "motion.cone_deg": ("float", "30.0"),
    "motion.min_distance": ("float", "1.0"),
}

_SCENE_FIELDS = {
    "kind": ("str", None),
    "center": ("vec3", None),
    "dimensions": ("vec3", "1 1 1"),
    "count": ("int", "0"),
    "scatter_radius": ("float", "0.0"),
}

_WAYPOINT_FIELDS = {
    "time": ("float", None),
    "position": ("vec3", None),
    "rpy_deg": ("vec3", "0 0 0"),
}

_INDEXED = re.compile(
    r"^(scene|drone\.waypoint|vehicle\.waypoint)\.(\d+)\.([a-z_]+)$")


def _convert(key: str, kind: str, raw: str):
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            if raw.lower() in ("true", "false"):
                return raw.lower() == "true"
            raise ValueError("expected true or false")
        if kind == "vec3":
            parts = [float(p) for p in raw.split()]
            if len(parts) != 3:
                raise ValueError("expected 3 numbers")
            return np.array(parts)
        return raw
    except ValueError as exc:
        raise ScenarioError(f"{key}: cannot parse {raw!r} ({exc})") from None


def _canonical(kind: str, value) -> str:
    if kind == "vec3":
        return " ".join(repr(float(v)) for v in np.asarray(value, dtype=float))
    if kind == "bool":
        return "true" if value else "false"
    if kind == "float":
        return repr(float(value))
    return str(value)


@dataclass
class Scenario:
    seed: int
    duration: float
    drone: DroneModel
    kernel: KernelParams
    projection: ProjectionParams
    meanshift: MeanShiftParams
    lidar: LidarModel
    sweep_rpm: float
    vibration_amplitude: float     # rad
    vibration_period: float        # s
    obs: IndirectObsModel
    initial_rotation: np.ndarray   # prior relative rotation, possibly wrong
    max_rotation_rate: float       # rad/s
    motion_window: int
    motion_frame_gap: int
    motion_cone: float             # rad
    motion_min_distance: float     # m
    primitives: list
    trajectories: Trajectories
    resolved: dict                 # canonical key -> value echo

    def echo_text(self) -> str:
        return "".join(f"{k} = {self.resolved[k]}\n" for k in sorted(self.resolved))


def _collect_raw(text: str, source: str) -> dict:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ScenarioError(f"{source}:{lineno}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ScenarioError(f"{source}:{lineno}: empty key or value")
        if key in raw:
            raise ScenarioError(f"{source}:{lineno}: duplicate key {key!r}")
        if key not in _SCHEMA and not _INDEXED.match(key):
            raise ScenarioError(f"{source}:{lineno}: unknown key {key!r}")
        raw[key] = value
    return raw


def _indexed_group(raw: dict, prefix: str, fields: dict, resolved: dict) -> list:
    indices = set()
    for key in raw:
        m = _INDEXED.match(key)
        if m and m.group(1) == prefix:
            if m.group(3) not in fields:
                raise ScenarioError(f"{key}: unknown field {m.group(3)!r}")
            indices.add(int(m.group(2)))
    if not indices:
        return []
    if sorted(indices) != list(range(len(indices))):
        raise ScenarioError(f"{prefix}: indices must be contiguous from 0")
    entries = []
    for i in range(len(indices)):
        entry = {}
        for name, (kind, default) in fields.items():
            key = f"{prefix}.{i}.{name}"
            if key in raw:
                entry[name] = _convert(key, kind, raw[key])
            elif default is not None:
                entry[name] = _convert(key, kind, default)
            else:
                raise ScenarioError(f"{key}: required field missing")
            resolved[key] = _canonical(kind, entry[name])
        entries.append(entry)
    return entries


def _waypoints_to_trajectory(entries: list, duration: float, label: str) -> TrajectorySpec:
    if not entries:
        entries = [{"time": 0.0, "position": np.zeros(3), "rpy_deg": np.zeros(3)}]
    if len(entries) == 1:
        only = entries[0]
        entries = [only, {**only, "time": max(float(only["time"]) + 1.0, duration)}]
    times = [float(e["time"]) for e in entries]
    positions = [e["position"] for e in entries]
    rotations = [euler_to_rotation(*np.deg2rad(e["rpy_deg"])) for e in entries]
    try:
        return TrajectorySpec(times, positions, rotations)
    except ValueError as exc:
        raise ScenarioError(f"{label}: {exc}") from None


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    raw = _collect_raw(text, source)

    resolved = {}
    values = {}
    for key, (kind, default) in _SCHEMA.items():
        if key in raw:
            values[key] = _convert(key, kind, raw[key])
        elif default is not None:
            values[key] = _convert(key, kind, default)
        else:
            raise ScenarioError(f"{key}: required key missing (seeds are mandatory)"
                                if key == "seed" else f"{key}: required key missing")
        resolved[key] = _canonical(kind, values[key])

    if values["schema_version"] != 1:
        raise ScenarioError("schema_version: only version 1 is supported")
    if values["duration"] <= 0.0:
        raise ScenarioError("duration: must be > 0")
    if values["seed"] < 0:
        raise ScenarioError("seed: must be a non-negative integer")
    if values["drone.width"] <= 0.0:
        raise ScenarioError("drone.width: must be > 0")

    scene_entries = _indexed_group(raw, "scene", _SCENE_FIELDS, resolved)
    drone_wp = _indexed_group(raw, "drone.waypoint", _WAYPOINT_FIELDS, resolved)
    vehicle_wp = _indexed_group(raw, "vehicle.waypoint", _WAYPOINT_FIELDS, resolved)
    if not drone_wp:
        raise ScenarioError("drone.waypoint.0: at least one drone waypoint is required")

    def build(label, factory):
        try:
            return factory()
        except ValueError as exc:
            raise ScenarioError(f"{label}: {exc}") from None

    primitives = [
        build(f"scene.{i}", lambda e=e: ScenePrimitive(
            kind=e["kind"], center=e["center"], dimensions=e["dimensions"],
            count=e["count"], scatter_radius=e["scatter_radius"]))
        for i, e in enumerate(scene_entries)
    ]
    drone = build("drone.width", lambda: DroneModel(width=values["drone.width"]))
    kernel = build("kernel", lambda: KernelParams(
        drone_width=values["drone.width"],
        outer_band_px=values["kernel.outer_band"],
        depth_epsilon=values["kernel.epsilon"],
        max_inner_px=values["kernel.max_inner"],
        inner_skip_empty=values["kernel.skip_empty_inner"]))
    projection = build("projection", lambda: ProjectionParams(
        resolution=values["projection.resolution"],
        half_fov=np.deg2rad(values["projection.fov_deg"] / 2.0),
        view_direction=tuple(values["projection.view_direction"])))
    meanshift = build("meanshift", lambda: MeanShiftParams(
        radius=values["meanshift.radius"],
        iterations=values["meanshift.iterations"],
        bandwidth=values["meanshift.bandwidth"],
        track_iterations=values["meanshift.track_iterations"],
        miss_limit=values["meanshift.miss_limit"]))
    if values["lidar.beam_count"] < 2:
        raise ScenarioError("lidar.beam_count: need at least 2 beams")
    span = np.deg2rad(values["lidar.elevation_span_deg"])
    lidar = build("lidar", lambda: LidarModel(
        beam_elevations=np.linspace(-span / 2.0, span / 2.0, values["lidar.beam_count"]),
        azimuth_step=np.deg2rad(values["lidar.azimuth_step_deg"]),
        range_noise=values["lidar.range_noise"],
        max_range=values["lidar.max_range"],
        points_per_second=values["lidar.points_per_second"]))
    obs = build("observation", lambda: IndirectObsModel(
        vd_noise=np.deg2rad(values["observation.vd_noise_deg"]),
        ego_noise=np.deg2rad(values["observation.ego_noise_deg"]),
        scramble=values["observation.scramble"]))
    if values["motor.sweep_rpm"] <= 0.0:
        raise ScenarioError("motor.sweep_rpm: must be > 0")
    if values["motor.vibration_amplitude_deg"] <= 0.0:
        raise ScenarioError("motor.vibration_amplitude_deg: must be > 0")
    if values["motor.vibration_period"] <= 0.0:
        raise ScenarioError("motor.vibration_period: must be > 0")
    for key in ("motion.window", "motion.frame_gap"):
        if values[key] < 1:
            raise ScenarioError(f"{key}: must be >= 1")
    if values["motion.min_distance"] <= 0.0:
        raise ScenarioError("motion.min_distance: must be > 0")

    trajectories = Trajectories(
        drone=_waypoints_to_trajectory(drone_wp, values["duration"], "drone.waypoint"),
        vehicle=_waypoints_to_trajectory(vehicle_wp, values["duration"], "vehicle.waypoint"),
    )

    return Scenario(
        seed=values["seed"],
        duration=values["duration"],
        drone=drone,
        kernel=kernel,
        projection=projection,
        meanshift=meanshift,
        lidar=lidar,
        sweep_rpm=values["motor.sweep_rpm"],
        vibration_amplitude=np.deg2rad(values["motor.vibration_amplitude_deg"]),
        vibration_period=values["motor.vibration_period"],
        obs=obs,
        initial_rotation=euler_to_rotation(*np.deg2rad(values["rotation.initial_rpy_deg"])),
        max_rotation_rate=np.deg2rad(values["rotation.max_rate_deg"]),
        motion_window=values["motion.window"],
        motion_frame_gap=values["motion.frame_gap"],
        motion_cone=np.deg2rad(values["motion.cone_deg"]),
        motion_min_distance=values["motion.min_distance"],
        primitives=primitives,
        trajectories=trajectories,
        resolved=resolved,
    )


def load_scenario(path, overrides=None, seed=None) -> Scenario:
    """Parse and validate a scenario file, with optional key overrides."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc}") from None
    if overrides or seed is not None:
        lines = [line for line in text.splitlines()]
        replaced = dict(overrides or {})
        if seed is not None:
            replaced["seed"] = str(seed)
        out = []
        for line in lines:
            stripped = line.strip()
            key = stripped.partition("=")[0].strip() if "=" in stripped else None
            if key in replaced:
                out.append(f"{key} = {replaced.pop(key)}")
            else:
                out.append(line)
        out.extend(f"{k} = {v}" for k, v in replaced.items())
        text = "\n".join(out) + "\n"
    return parse_scenario(text, source=str(path))


@dataclass
class RunRecord:
    """Per-frame estimates aligned with ground truth for one run."""

    times: np.ndarray
    est_positions: np.ndarray
    truth_positions: np.ndarray
    est_rotations: np.ndarray
    truth_rotations: np.ndarray
    status: list
    corrected: np.ndarray
    k_init: int | None = None
    acquisition_time: float | None = None
    reacquisitions: int = 0
    frame_compute_times: np.ndarray = field(default_factory=lambda: np.empty(0))


def run(scenario: Scenario) -> RunRecord:
    """Execute one scenario end to end; deterministic for a given seed."""
    rng = np.random.default_rng(scenario.seed)
    scene = Scene(scenario.primitives, seed=scenario.seed)
    traj = scenario.trajectories
    sweep_omega = scenario.sweep_rpm * 2.0 * np.pi / 60.0
    sweep_duration = np.pi / sweep_omega
    period = scenario.vibration_period

    rot_state = RotationFilterState(
        rotation=orthonormalize(scenario.initial_rotation),
        max_rate=scenario.max_rotation_rate,
        last_time=0.0,
    )
    accumulator = MotionAccumulator(
        window=scenario.motion_window,
        frame_gap=scenario.motion_frame_gap,
        cone=scenario.motion_cone,
        min_distance=scenario.motion_min_distance,
    )

    times, est_pos, truth_pos = [], [], []
    est_rot, truth_rot, status, corrected_flags, compute_times = [], [], [], [], []
    world_hist, time_hist = [], []
    state: TrackState | None = None
    acquisition_time = None
    reacquisitions = 0
    corrected = False
    k_init = None
    t = 0.0

    while True:
        if state is None or state.status == "lost":
            if t + sweep_duration > scenario.duration + 1e-9:
                break
            motor = MotorState(mode="sweep", angle=0.0, angular_velocity=sweep_omega)
            frame = simulate_full_scan(scene, traj, scenario.lidar, motor, t,
                                       drone=scenario.drone, rng=rng)
            t += sweep_duration
            was_locked_before = acquisition_time is not None
            try:
                state = acquire(frame, scenario.projection, scenario.kernel,
                                scenario.meanshift)
            except NoCandidatesError:
                state = None
                continue
            if was_locked_before:
                reacquisitions += 1
            else:
                acquisition_time = t
            continue

        if t + period > scenario.duration + 1e-9:
            break
        t_start = t
        t_mid = t_start + period / 2.0
        motor = MotorState(
            mode="vibrate",
            vibrate_center=state.pointing_azimuth,
            vibrate_amplitude=scenario.vibration_amplitude,
            vibrate_period=period,
        )
        frame = simulate_vibration_frame(scene, traj, scenario.lidar, motor, t_start,
                                         drone=scenario.drone, rng=rng)
        t += period

        tic = _time.perf_counter()
        state = track_step(state, frame, scenario.meanshift)

        align_rot = traj.vehicle.rotation_at(t_start)
        align_pos = traj.vehicle.position_at(t_start)
        world_hist.append(align_rot @ state.position + align_pos)
        time_hist.append(t_mid)

        veh_rot_mid = traj.vehicle.rotation_at(t_mid)
        veh_pos_mid = traj.vehicle.position_at(t_mid)
        vehicle_pose = Pose(veh_rot_mid, veh_pos_mid, frame="world")
        drone_pose = traj.drone.pose_at(t_mid)
        v_vehicle = observe_vds(vehicle_pose, scenario.obs, rng)
        v_drone = observe_vds(drone_pose, scenario.obs, rng)
        try:
            match = match_vds(v_vehicle, v_drone, rot_state.rotation)
            measured = estimate_rotation(v_vehicle, match.apply(v_drone), match.residuals)
            rot_state = filter_rotation(rot_state, measured, t_mid)
        except AmbiguousMatchError:
            pass

        if not corrected:
            frame_index = len(world_hist) - 1
            ego = None
            if frame_index >= accumulator.frame_gap:
                try:
                    ego = observe_ego_direction(
                        traj.drone.pose_at(time_hist[frame_index - accumulator.frame_gap]),
                        drone_pose,
                        sigma=scenario.obs.ego_noise,
                        rng=rng,
                    )
                except ValueError:
                    ego = None
            emission = accumulate_motion(accumulator, world_hist, ego,
                                         veh_rot_mid, rot_state.rotation)
            if emission is not None:
                observed_sum, self_sum = emission
                try:
                    fixed = correct_rotation(rot_state.rotation, veh_rot_mid,
                                             observed_sum, self_sum)
                except ValueError:
                    pass
                else:
                    rot_state = replace(rot_state, rotation=orthonormalize(fixed))
                    corrected = True
                    k_init = len(times)
        compute_times.append(_time.perf_counter() - tic)

        times.append(t_mid)
        est_pos.append(state.position.copy())
        truth_pos.append(align_rot.T @ (traj.drone.position_at(t_mid) - align_pos))
        est_rot.append(rot_state.rotation.copy())
        truth_rot.append(veh_rot_mid.T @ traj.drone.rotation_at(t_mid))
        status.append(state.status)
        corrected_flags.append(corrected)

    n = len(times)
    return RunRecord(
        times=np.asarray(times),
        est_positions=np.asarray(est_pos).reshape(n, 3),
        truth_positions=np.asarray(truth_pos).reshape(n, 3),
        est_rotations=np.asarray(est_rot).reshape(n, 3, 3),
        truth_rotations=np.asarray(truth_rot).reshape(n, 3, 3),
        status=status,
        corrected=np.asarray(corrected_flags, dtype=bool),
        k_init=k_init,
        acquisition_time=acquisition_time,
        reacquisitions=reacquisitions,
        frame_compute_times=np.asarray(compute_times),
    )


@dataclass
class MetricsReport:
    """Per-axis RMSE summary of one run."""

    pos_rmse: np.ndarray | None        # m, (x, y, z) over locked frames
    rot_rmse_deg: np.ndarray | None    # deg, (rx, ry, rz) after the correction
    rot_whole_run: bool                # no correction fired; angles cover the run
    acquisition_time: float | None
    mean_frame_time: float | None      # s, processing only
    n_frames: int
    n_locked: int
    k_init: int | None
    reacquisitions: int

    def to_text(self) -> str:
        def fmt(v):
            return "absent" if v is None else repr(float(v))

        lines = []
        for name, arr in (("pos_rmse", self.pos_rmse), ("rot_rmse_deg", self.rot_rmse_deg)):
            for axis, label in enumerate(("x", "y", "z")):
                val = None if arr is None else arr[axis]
                lines.append(f"{name}_{label} = {fmt(val)}")
        lines.append(f"rot_whole_run = {'true' if self.rot_whole_run else 'false'}")
        lines.append(f"acquisition_time = {fmt(self.acquisition_time)}")
        lines.append(f"mean_frame_time = {fmt(self.mean_frame_time)}")
        lines.append(f"n_frames = {self.n_frames}")
        lines.append(f"n_locked = {self.n_locked}")
        lines.append(f"k_init = {'absent' if self.k_init is None else self.k_init}")
        lines.append(f"reacquisitions = {self.reacquisitions}")
        return "\n".join(lines) + "\n"


def _wrap_degrees(diff):
    wrapped = (np.asarray(diff) + 180.0) % 360.0 - 180.0
    return np.where(wrapped == -180.0, 180.0, wrapped)


def _euler_deg(rotations) -> np.ndarray:
    return np.array([np.rad2deg(euler_xyz(r)) for r in rotations]).reshape(-1, 3)


def compute_metrics(record: RunRecord) -> MetricsReport:
    """Position RMSE over locked frames; angle RMSE after the yaw correction.

    When no correction fired the angle RMSE covers the whole run and is
    flagged; angle residuals wrap to (-180, 180] degrees.
    """
    locked = np.array([s == "locked" for s in record.status], dtype=bool)
    n_locked = int(locked.sum())
    pos_rmse = None
    if n_locked:
        resid = record.est_positions[locked] - record.truth_positions[locked]
        pos_rmse = np.sqrt(np.mean(resid ** 2, axis=0))

    start = record.k_init if record.k_init is not None else 0
    rot_rmse = None
    if len(record.times) > start:
        est = _euler_deg(record.est_rotations[start:])
        truth = _euler_deg(record.truth_rotations[start:])
        diff = _wrap_degrees(est - truth)
        rot_rmse = np.sqrt(np.mean(diff ** 2, axis=0))

    mean_frame = (float(np.mean(record.frame_compute_times))
                  if len(record.frame_compute_times) else None)
    return MetricsReport(
        pos_rmse=pos_rmse,
        rot_rmse_deg=rot_rmse,
        rot_whole_run=record.k_init is None,
        acquisition_time=record.acquisition_time,
        mean_frame_time=mean_frame,
        n_frames=len(record.times),
        n_locked=n_locked,
        k_init=record.k_init,
        reacquisitions=record.reacquisitions,
    )


CSV_HEADER = ("time,est_x,est_y,est_z,truth_x,truth_y,truth_z,"
              "est_rx_deg,est_ry_deg,est_rz_deg,truth_rx_deg,truth_ry_deg,truth_rz_deg,"
              "status,corrected")


def record_to_csv(record: RunRecord) -> str:
    """Trajectory table; floats use shortest round-trip formatting."""
    est_euler = _euler_deg(record.est_rotations) if len(record.times) else np.empty((0, 3))
    truth_euler = _euler_deg(record.truth_rotations) if len(record.times) else np.empty((0, 3))
    lines = [CSV_HEADER]
    for i in range(len(record.times)):
        vals = [record.times[i], *record.est_positions[i], *record.truth_positions[i],
                *est_euler[i], *truth_euler[i]]
        cells = [repr(float(v)) for v in vals]
        cells.append(record.status[i])
        cells.append(str(int(record.corrected[i])))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def record_from_csv(path) -> RunRecord:
    """Rebuild a record from an exported trajectory table.

    Timing fields are not stored in the table, so acquisition time and
    per-frame compute times come back absent.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ScenarioError(f"{path}: not a trajectory table (bad header)")
    times, est_p, truth_p, est_r, truth_r, status, flags = [], [], [], [], [], [], []
    for line in lines[1:]:
        cells = line.split(",")
        if len(cells) != 15:
            raise ScenarioError(f"{path}: malformed row {line!r}")
        nums = [float(c) for c in cells[:13]]
        times.append(nums[0])
        est_p.append(nums[1:4])
        truth_p.append(nums[4:7])
        est_r.append(euler_to_rotation(*np.deg2rad(nums[7:10])))
        truth_r.append(euler_to_rotation(*np.deg2rad(nums[10:13])))
        status.append(cells[13])
        flags.append(cells[14] == "1")
    flags = np.asarray(flags, dtype=bool)
    k_init = int(np.argmax(flags)) if flags.any() else None
    n = len(times)
    return RunRecord(
        times=np.asarray(times),
        est_positions=np.asarray(est_p).reshape(n, 3),
        truth_positions=np.asarray(truth_p).reshape(n, 3),
        est_rotations=np.asarray(est_r).reshape(n, 3, 3),
        truth_rotations=np.asarray(truth_r).reshape(n, 3, 3),
        status=status,
        corrected=flags,
        k_init=k_init,
    )


def export(record: RunRecord, report: MetricsReport, out_dir, scenario: Scenario) -> dict:
    """Write trajectory.csv, metrics.txt and the resolved scenario echo."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "trajectory": os.path.join(out_dir, "trajectory.csv"),
        "metrics": os.path.join(out_dir, "metrics.txt"),
        "scenario": os.path.join(out_dir, "scenario.txt"),
    }
    try:
        with open(paths["trajectory"], "w", encoding="utf-8") as fh:
            fh.write(record_to_csv(record))
        with open(paths["metrics"], "w", encoding="utf-8") as fh:
            fh.write(report.to_text())
        with open(paths["scenario"], "w", encoding="utf-8") as fh:
            fh.write(scenario.echo_text())
    except OSError as exc:
        raise ScenarioError(f"cannot write outputs under {out_dir}: {exc}") from None
    return paths
