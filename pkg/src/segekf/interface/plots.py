"""SVG reports.

Figures are built with the object-oriented API on the Agg canvas, so nothing touches ``pyplot`` global state. The SVG
hash salt is fixed and the date is left out, so the same data always renders to the same bytes.
"""

from collections.abc import Sequence
from pathlib import Path
from typing import Any, Final

import matplotlib as mpl
from matplotlib.axes import Axes
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from segekf.core.extraction import ExtractedSegment
from segekf.core.geometry import FloatArray, Pose, Segment, segment_to_robot_frame
from segekf.core.matching import GlobalMap, LineFeature, MatchPair
from segekf.sim.scenario import RunLog
from segekf.sim.world import World

__all__: Final[tuple[str, ...]] = ("plot_match", "plot_segments", "plot_trajectories")

_RC: Final[dict[str, Any]] = {"svg.hashsalt": "segekf", "svg.fonttype": "none"}
_SIZE: Final[tuple[float, float]] = (6.4, 5.2)


def _figure() -> tuple[Figure, Axes]:
    figure: Final[Figure] = Figure(figsize=_SIZE)
    FigureCanvasAgg(figure)
    axes: Final[Axes] = figure.add_subplot()
    axes.set_aspect("equal", adjustable="datalim")
    axes.grid(visible=True, linewidth=0.3)
    axes.set_xlabel("x [m]")
    axes.set_ylabel("y [m]")
    return figure, axes


def _draw_segments(axes: Axes, segments: Sequence[Segment], /, **style: Any) -> None:
    label: Any = style.pop("label", None)
    for index, segment in enumerate(segments):
        axes.plot(
            (segment.p1.x, segment.p2.x),
            (segment.p1.y, segment.p2.y),
            label=label if index == 0 else None,
            **style,
        )


def _save(figure: Figure, path: Path) -> None:
    with mpl.rc_context(_RC):
        figure.savefig(path, format="svg", metadata={"Date": None})


def plot_trajectories(log: RunLog, world: World, path: Path, /) -> None:
    """Walls, the true path and the three estimated paths."""
    figure, axes = _figure()
    _draw_segments(axes, world.walls, color="black", linewidth=1.5, label="walls")
    columns: Final[dict[str, tuple[str, str, dict[str, Any]]]] = {
        "truth": ("true_x", "true_y", {"color": "black", "linestyle": "--"}),
        "odometry": ("odo_x", "odo_y", {"color": "tab:red"}),
        "EKF (lines)": ("ekf_lrf_x", "ekf_lrf_y", {"color": "tab:orange"}),
        "EKF (lines + heading)": ("ekf_full_x", "ekf_full_y", {"color": "tab:blue"}),
    }
    for label, (x, y, style) in columns.items():
        axes.plot(
            [getattr(row, x) for row in log.rows],
            [getattr(row, y) for row in log.rows],
            label=label,
            linewidth=1.0,
            **style,
        )

    axes.set_title(f"Trajectories, seed {log.seed}")
    axes.legend(loc="best", fontsize="small")
    _save(figure, path)


def plot_segments(points: FloatArray, segments: Sequence[ExtractedSegment], path: Path, /) -> None:
    """Scan points in the robot frame with the extracted segments on top."""
    figure, axes = _figure()
    if points.size > 0:
        axes.scatter(points[:, 0], points[:, 1], s=2.0, color="tab:gray", label="points")

    _draw_segments(axes, [segment.endpoints for segment in segments], color="tab:blue", linewidth=2.0, label="segments")
    axes.plot((0.0,), (0.0,), marker="^", color="tab:red", linestyle="none", label="robot")
    axes.set_title(f"{len(segments)} segments")
    axes.legend(loc="best", fontsize="small")
    _save(figure, path)


def plot_match(
    features: Sequence[LineFeature], global_map: GlobalMap, odom: Pose, pairs: Sequence[MatchPair], path: Path, /
) -> None:
    """Mapped walls moved into the robot frame of ``odom`` against the local segments; pairs are joined by a line."""
    figure, axes = _figure()
    seen: Final[list[Segment]] = [segment_to_robot_frame(segment, odom) for segment in global_map.segments]
    _draw_segments(axes, seen, color="tab:gray", linewidth=3.0, alpha=0.6, label="map")
    local_segments: Final[list[Segment]] = [feature.endpoints for feature in features]
    _draw_segments(axes, local_segments, color="tab:blue", linestyle="--", linewidth=1.5, label="local")
    for pair in pairs:
        local: Segment = features[pair.local_index].endpoints
        mapped: Segment = seen[pair.global_index]
        axes.plot(
            (0.5 * (local.p1.x + local.p2.x), 0.5 * (mapped.p1.x + mapped.p2.x)),
            (0.5 * (local.p1.y + local.p2.y), 0.5 * (mapped.p1.y + mapped.p2.y)),
            color="tab:green",
            linewidth=0.8,
        )

    axes.set_title(f"{len(pairs)} pairs")
    axes.legend(loc="best", fontsize="small")
    _save(figure, path)
