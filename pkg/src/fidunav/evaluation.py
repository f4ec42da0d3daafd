"""Precision/accuracy and target-localization studies on simulated data.

The precision study tracks a static coil tag over repeated frames and
reports the distribution of the fused camera-distance estimate and of
the orientation error. The localization study places the coil at 15
points on a head hemisphere and reports per-point Euclidean target
error with 4 mm / 6 mm buckets.

Published hardware results are embedded as labeled reference constants
for comparison only; they are never test gates, since real-camera noise
is not reproducible in simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fusion import DistanceEstimate, fuse_distances, propagate_sigma, distance_sigma
from .geometry import angular_distance, compose, invert
from .pnp import ambiguity_check, solve_pnp_planar
from .rig import RigConfig, assemble_frame
from .simulator import (
    LOCALIZATION_FRAMES_PER_POINT,
    Scenario,
    SimFrame,
    simulate,
)

MIN_SAMPLES = 10
DEFAULT_HISTOGRAM_BINS = 30

# Published hardware reference values (comparison constants, not gates).
REFERENCE = {
    "distance_std_band_mm": (0.07, 0.09),
    "angle_std_band_deg": (0.04, 0.06),
    "abs_distance_error_limit_mm": 0.5,
    "abs_angle_error_limit_deg": 0.3,
    "localization_mean_error_mm": 4.94,
    "vuforia_hl1_mean_error_mm": 3.1,
    "hl_ventriculostomy_mean_error_mm": 5.2,
    "intel_sr300_mean_error_mm": 20.0,
}


class InsufficientSamplesError(ValueError):
    pass


class UnsupportedFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Histogram:
    bin_edges: tuple[float, ...]
    counts: tuple[int, ...]

    @staticmethod
    def of(values, bins: int = DEFAULT_HISTOGRAM_BINS) -> "Histogram":
        counts, edges = np.histogram(np.asarray(values, dtype=float), bins=bins)
        return Histogram(tuple(float(e) for e in edges),
                         tuple(int(c) for c in counts))


@dataclass(frozen=True)
class PositionPrecision:
    name: str
    n_samples: int
    true_distance_mm: float
    mean_distance_mm: float
    std_distance_mm: float
    gauss_mu_mm: float
    gauss_sigma_mm: float
    abs_distance_error_mm: float
    mean_angle_deg: float
    std_angle_deg: float
    distance_histogram: Histogram
    angle_histogram: Histogram


@dataclass(frozen=True)
class PrecisionReport:
    positions: tuple[PositionPrecision, ...]
    reference: dict = field(default_factory=lambda: dict(REFERENCE))


@dataclass(frozen=True)
class TargetError:
    index: int
    true_target_head: tuple[float, float, float]
    mean_error_mm: float
    n_samples: int


@dataclass(frozen=True)
class LocalizationReport:
    points: tuple[TargetError, ...]
    mean_error_mm: float
    fraction_below_4mm: float
    fraction_4_to_6mm: float
    fraction_above_6mm: float
    tracked_fraction: float
    reference: dict = field(default_factory=lambda: dict(REFERENCE))


def fused_coil_distance(
    frame: SimFrame, rig: RigConfig, reference_point: np.ndarray
):
    """Inverse-variance fused distance from a fixed reference point to the coil tag.

    Each camera's tag solve is mapped into the world frame; the scalar
    distance from ``reference_point`` to that world position, with the
    camera's propagated distance sigma, enters the inverse-variance
    fusion. Returns (FusedDistance, fused coil rotation candidates) or
    None when no camera sees the coil tag.
    """
    coil_tag = rig.coil_marker.marker.tag_id
    estimates = []
    rotations = []
    for obs in frame.observations:
        if obs.tag_id != coil_tag:
            continue
        cam = rig.camera(obs.camera_id)
        est = ambiguity_check(
            solve_pnp_planar(cam.intrinsics, rig.coil_marker.marker, obs),
            cam.intrinsics, rig.coil_marker.marker, obs,
        )
        t = est.pose.translation
        sigma = propagate_sigma(est.reproj_error, t.z, cam.intrinsics)
        d_est = distance_sigma(t, sigma)
        tag_world = compose(invert(cam.extrinsic), est.pose)
        p = tag_world.translation.as_array()
        estimates.append(
            (
                DistanceEstimate(
                    camera_id=obs.camera_id,
                    distance=float(np.linalg.norm(p - reference_point)),
                    sigma=d_est.sigma,
                    translation=tag_world.translation,
                ),
                est.ambiguous,
            )
        )
        rotations.append((est, tag_world.rotation))
    if not estimates:
        return None
    # Same policy as pose fusion: drop ambiguity-flagged estimates when
    # at least two clean ones remain, otherwise keep them with inflated
    # sigma.
    clean = [e for e, amb in estimates if not amb]
    if len(clean) >= 2:
        use = clean
        rotations = [er for er in rotations if not er[0].ambiguous] or rotations
    else:
        use = [
            e if not amb else
            DistanceEstimate(e.camera_id, e.distance, e.sigma * 10.0,
                             e.translation)
            for e, amb in estimates
        ]
    return fuse_distances(use), rotations


def run_precision_study(
    scenarios: list[Scenario], bins: int = DEFAULT_HISTOGRAM_BINS
) -> PrecisionReport:
    """Per-position distance/orientation statistics with Gaussian ML fits."""
    positions = []
    for sc in scenarios:
        rig = sc.rig
        cam0_pos = invert(rig.cameras[0].extrinsic).translation.as_array()
        distances = []
        angles = []
        true_d = None
        for frame in simulate(sc):
            coil_true = frame.truth.coil_pose
            tag_world_true = compose(coil_true, rig.coil_marker.mount)
            true_d = float(
                np.linalg.norm(tag_world_true.translation.as_array() - cam0_pos)
            )
            fused = fused_coil_distance(frame, rig, cam0_pos)
            if fused is None:
                continue
            fd, rotations = fused
            distances.append(fd.distance)
            # Orientation error of the best (lowest reprojection error)
            # single-camera estimate against truth.
            best = min(rotations, key=lambda er: er[0].reproj_error)
            angles.append(angular_distance(best[1], tag_world_true.rotation))
        if len(distances) < MIN_SAMPLES:
            raise InsufficientSamplesError(
                f"{sc.name}: only {len(distances)} usable frames (< {MIN_SAMPLES})"
            )
        d = np.array(distances)
        a = np.array(angles)
        positions.append(
            PositionPrecision(
                name=sc.name,
                n_samples=len(d),
                true_distance_mm=true_d,
                mean_distance_mm=float(d.mean()),
                std_distance_mm=float(d.std(ddof=1)) if len(d) > 1 else 0.0,
                gauss_mu_mm=float(d.mean()),
                gauss_sigma_mm=float(d.std(ddof=0)),
                abs_distance_error_mm=abs(float(d.mean()) - true_d),
                mean_angle_deg=float(a.mean()),
                std_angle_deg=float(a.std(ddof=1)) if len(a) > 1 else 0.0,
                distance_histogram=Histogram.of(d, bins),
                angle_histogram=Histogram.of(a, bins),
            )
        )
    return PrecisionReport(positions=tuple(positions))


def run_localization_study(
    scenario: Scenario,
    frames_per_point: int = LOCALIZATION_FRAMES_PER_POINT,
) -> LocalizationReport:
    """Per-placement mean target error with 4 mm / 6 mm buckets."""
    rig = scenario.rig
    per_point_errors: dict[int, list[float]] = {}
    per_point_target: dict[int, tuple[float, float, float]] = {}
    tracked = 0
    total = 0
    for i, frame in enumerate(simulate(scenario)):
        point = i // frames_per_point
        total += 1
        result = assemble_frame(list(frame.observations), rig, frame.timestamp_us)
        tt = frame.truth.target_head
        per_point_target[point] = (tt.x, tt.y, tt.z)
        if result.target_point_head is None:
            continue
        tracked += 1
        err = float(
            np.linalg.norm(
                result.target_point_head.as_array() - tt.as_array()
            )
        )
        per_point_errors.setdefault(point, []).append(err)
    points = []
    means = []
    for point in sorted(per_point_target):
        errs = per_point_errors.get(point, [])
        mean_err = float(np.mean(errs)) if errs else float("nan")
        points.append(
            TargetError(
                index=point,
                true_target_head=per_point_target[point],
                mean_error_mm=mean_err,
                n_samples=len(errs),
            )
        )
        if errs:
            means.append(mean_err)
    n = len(means)
    below = sum(1 for m in means if m < 4.0)
    mid = sum(1 for m in means if 4.0 <= m < 6.0)
    above = sum(1 for m in means if m >= 6.0)
    return LocalizationReport(
        points=tuple(points),
        mean_error_mm=float(np.mean(means)) if means else float("nan"),
        fraction_below_4mm=below / n if n else 0.0,
        fraction_4_to_6mm=mid / n if n else 0.0,
        fraction_above_6mm=above / n if n else 0.0,
        tracked_fraction=tracked / total if total else 0.0,
    )


# --- report emission -----------------------------------------------------

PRECISION_CSV_HEADER = (
    "position,n_samples,true_distance_mm,mean_distance_mm,std_distance_mm,"
    "gauss_mu_mm,gauss_sigma_mm,abs_distance_error_mm,"
    "mean_angle_deg,std_angle_deg"
)

LOCALIZATION_CSV_HEADER = (
    "point,true_x_mm,true_y_mm,true_z_mm,mean_error_mm,n_samples"
)


def precision_csv(report: PrecisionReport) -> str:
    lines = [PRECISION_CSV_HEADER]
    for p in report.positions:
        lines.append(
            f"{p.name},{p.n_samples},{p.true_distance_mm!r},"
            f"{p.mean_distance_mm!r},{p.std_distance_mm!r},"
            f"{p.gauss_mu_mm!r},{p.gauss_sigma_mm!r},"
            f"{p.abs_distance_error_mm!r},"
            f"{p.mean_angle_deg!r},{p.std_angle_deg!r}"
        )
    return "\n".join(lines) + "\n"


def localization_csv(report: LocalizationReport) -> str:
    lines = [LOCALIZATION_CSV_HEADER]
    for p in report.points:
        x, y, z = p.true_target_head
        lines.append(
            f"{p.index},{x!r},{y!r},{z!r},{p.mean_error_mm!r},{p.n_samples}"
        )
    return "\n".join(lines) + "\n"


def _histogram_lines(title: str, h: Histogram) -> list[str]:
    lines = [f"histogram: {title}"]
    for i, c in enumerate(h.counts):
        lines.append(f"  [{h.bin_edges[i]!r}, {h.bin_edges[i + 1]!r}): {c}")
    return lines


def report_txt(report) -> str:
    """Deterministic plain-text report for either study."""
    lines = []
    if isinstance(report, PrecisionReport):
        lines.append("precision study")
        for p in report.positions:
            lines.append(
                f"position {p.name}: n={p.n_samples} "
                f"mean={p.mean_distance_mm!r} mm std={p.std_distance_mm!r} mm "
                f"abs_err={p.abs_distance_error_mm!r} mm "
                f"angle_std={p.std_angle_deg!r} deg"
            )
            lines.extend(_histogram_lines(f"{p.name} distance (mm)",
                                          p.distance_histogram))
            lines.extend(_histogram_lines(f"{p.name} angle (deg)",
                                          p.angle_histogram))
    elif isinstance(report, LocalizationReport):
        lines.append("localization study")
        for p in report.points:
            lines.append(
                f"point {p.index}: mean_error={p.mean_error_mm!r} mm "
                f"n={p.n_samples}"
            )
        lines.append(f"mean_error={report.mean_error_mm!r} mm")
        lines.append(f"fraction_below_4mm={report.fraction_below_4mm!r}")
        lines.append(f"fraction_4_to_6mm={report.fraction_4_to_6mm!r}")
        lines.append(f"fraction_above_6mm={report.fraction_above_6mm!r}")
        lines.append(f"tracked_fraction={report.tracked_fraction!r}")
    else:
        raise UnsupportedFormatError(f"unknown report type {type(report)!r}")
    lines.append("reference constants (published hardware values):")
    for k in sorted(report.reference):
        lines.append(f"  {k} = {report.reference[k]!r}")
    return "\n".join(lines) + "\n"


def emit_report(report, fmt: str) -> str:
    """Serialize a report; ``fmt`` is ``csv`` or ``txt``."""
    if fmt == "txt":
        return report_txt(report)
    if fmt == "csv":
        if isinstance(report, PrecisionReport):
            return precision_csv(report)
        if isinstance(report, LocalizationReport):
            return localization_csv(report)
        raise UnsupportedFormatError(f"unknown report type {type(report)!r}")
    raise UnsupportedFormatError(f"unsupported format {fmt!r}")
