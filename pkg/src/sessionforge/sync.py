"""Temporal alignment of multi-rate streams.

The pipeline: compute the overlap window across all streams, lay a uniform
reference grid at the lowest video frame rate over it, pick the nearest frame
per camera per grid step under a tolerance (falling back to the previously
selected frame on a miss), and linearly resample numeric channels onto the
grid.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    EmptyFrameLog,
    GridOutsideSeries,
    NoOverlap,
    UnbridgeableGap,
)
from .session import (
    Channel,
    FrameTimestampLog,
    RawSession,
    SessionManifest,
    StreamKind,
    TimedSeries,
)

DEFAULT_MAX_GAP = 0.5  # seconds of NaN bridged by interpolation before erroring


@dataclass(frozen=True)
class OverlapWindow:
    t_start: float
    t_end: float

    def __post_init__(self):
        if not self.t_start < self.t_end:
            raise NoOverlap(f"window [{self.t_start}, {self.t_end}] is empty")


@dataclass(frozen=True)
class ReferenceGrid:
    timestamps: np.ndarray
    rate: float

    def __post_init__(self):
        object.__setattr__(self, "timestamps", np.asarray(self.timestamps, dtype=np.float64))

    @property
    def k(self) -> int:
        return len(self.timestamps)


@dataclass(frozen=True)
class FrameSelection:
    stream: str
    selected_indices: np.ndarray  # (K,) int
    accepted_flags: np.ndarray  # (K,) bool

    @property
    def acceptance_rate(self) -> float:
        return float(np.mean(self.accepted_flags))


@dataclass(frozen=True)
class SyncedSession:
    manifest: SessionManifest
    grid: ReferenceGrid
    frame_selections: dict[str, FrameSelection]
    numeric: dict[str, TimedSeries]
    tau: float

    def report(self) -> dict:
        return {
            "grid_rate": self.grid.rate,
            "grid_points": self.grid.k,
            "tau": self.tau,
            "acceptance_rate": {
                name: sel.acceptance_rate for name, sel in self.frame_selections.items()
            },
        }


def _span(stream: TimedSeries | FrameTimestampLog) -> tuple[float, float]:
    t = stream.timestamps if isinstance(stream, TimedSeries) else stream.frame_timestamps
    if len(t) == 0:
        raise EmptyFrameLog("stream has no samples")
    return float(t[0]), float(t[-1])


def compute_overlap(streams: list[TimedSeries | FrameTimestampLog]) -> OverlapWindow:
    """Latest start to earliest end across all streams."""
    if len(streams) < 2:
        raise ValueError("need at least two streams to overlap")
    spans = [_span(s) for s in streams]
    start = max(s for s, _ in spans)
    end = min(e for _, e in spans)
    if start >= end:
        raise NoOverlap(f"latest start {start} >= earliest end {end}")
    return OverlapWindow(t_start=start, t_end=end)


def build_reference_grid(window: OverlapWindow, rate: float) -> ReferenceGrid:
    """Uniform grid t_k = t_start + (k-1)/rate for all t_k <= t_end."""
    if rate <= 0:
        raise ValueError("rate must be > 0")
    span = window.t_end - window.t_start
    k = int(np.floor(span * rate + 1e-9)) + 1
    while window.t_start + (k - 1) / rate > window.t_end + 1e-12:
        k -= 1
    ts = window.t_start + np.arange(k, dtype=np.float64) / rate
    return ReferenceGrid(timestamps=ts, rate=float(rate))


def _nearest_indices(frame_ts: np.ndarray, grid_ts: np.ndarray) -> np.ndarray:
    # Nearest neighbor on a sorted log; equidistant candidates take the
    # earlier frame.
    right = np.searchsorted(frame_ts, grid_ts)
    right = np.clip(right, 0, len(frame_ts) - 1)
    left = np.clip(right - 1, 0, len(frame_ts) - 1)
    d_left = np.abs(frame_ts[left] - grid_ts)
    d_right = np.abs(frame_ts[right] - grid_ts)
    return np.where(d_left <= d_right, left, right)


def match_frames(
    frames: FrameTimestampLog, grid: ReferenceGrid, tau: float
) -> FrameSelection:
    """Tolerance-gated nearest-frame selection per grid step.

    Where the nearest frame is farther than ``tau`` the previous selection is
    repeated; at the first grid step there is no previous selection, so the
    nearest frame is kept but flagged unaccepted.
    """
    if len(frames.frame_timestamps) == 0:
        raise EmptyFrameLog(frames.stream)
    if tau < 0:
        raise ValueError("tau must be >= 0")
    ft = frames.frame_timestamps
    nearest = _nearest_indices(ft, grid.timestamps)
    accepted = np.abs(ft[nearest] - grid.timestamps) <= tau
    # Carry the last accepted selection forward; a leading run of misses
    # falls back to the nearest frame at k=1.
    k = len(nearest)
    source = np.where(accepted, np.arange(k), -1)
    source = np.maximum.accumulate(source)
    source[source == -1] = 0
    selected = nearest[source]
    return FrameSelection(
        stream=frames.stream, selected_indices=selected, accepted_flags=accepted
    )


def interpolate_numeric(
    series: TimedSeries, grid: ReferenceGrid, max_gap: float = DEFAULT_MAX_GAP
) -> TimedSeries:
    """Linear interpolation of every channel onto the grid.

    NaN runs in a channel are bridged by interpolating across them, unless the
    surrounding valid samples are more than ``max_gap`` seconds apart.
    """
    t = series.timestamps
    g = grid.timestamps
    if len(t) < 2:
        raise GridOutsideSeries("series needs at least two samples")
    if t[0] > g[0] + 1e-12 or t[-1] < g[-1] - 1e-12:
        raise GridOutsideSeries(
            f"series [{t[0]}, {t[-1]}] does not span grid [{g[0]}, {g[-1]}]"
        )
    out = np.empty((len(g), series.values.shape[1]))
    for c in range(series.values.shape[1]):
        col = series.values[:, c]
        valid = np.isfinite(col)
        if not np.all(valid):
            tv = t[valid]
            if len(tv) < 2 or tv[0] > g[0] + 1e-12 or tv[-1] < g[-1] - 1e-12:
                raise UnbridgeableGap(
                    f"channel {series.channels[c].name}: too few valid samples"
                )
            gaps = np.diff(tv)
            worst = np.max(gaps)
            if worst > max_gap:
                raise UnbridgeableGap(
                    f"channel {series.channels[c].name}: {worst:.3f} s gap exceeds "
                    f"max_gap {max_gap:.3f} s"
                )
            out[:, c] = np.interp(g, tv, col[valid])
        else:
            out[:, c] = np.interp(g, t, col)
    return TimedSeries(timestamps=g.copy(), values=out, channels=series.channels)


def default_tau(grid_rate: float) -> float:
    """Half the reference frame period: at most one candidate in tolerance."""
    return 0.5 / grid_rate


def sync_session(
    session: RawSession, tau: float | None = None, max_gap: float = DEFAULT_MAX_GAP
) -> SyncedSession:
    """Align a raw session: grid at the lowest video rate, frame selections
    per camera, numeric channels interpolated."""
    video_descs = [
        s for s in session.manifest.streams if s.kind is StreamKind.VIDEO_FRAMES
    ]
    if not video_descs or not session.numeric:
        raise ValueError("sync requires >= 1 video stream and >= 1 numeric stream")
    grid_rate = min(s.nominal_rate for s in video_descs)
    if tau is None:
        tau = default_tau(grid_rate)

    streams: list[TimedSeries | FrameTimestampLog] = list(session.numeric.values())
    streams.extend(session.frame_logs.values())
    window = compute_overlap(streams)
    grid = build_reference_grid(window, grid_rate)

    selections = {
        name: match_frames(log, grid, tau) for name, log in session.frame_logs.items()
    }
    numeric = {
        name: interpolate_numeric(series, grid, max_gap=max_gap)
        for name, series in session.numeric.items()
    }
    return SyncedSession(
        manifest=session.manifest,
        grid=grid,
        frame_selections=selections,
        numeric=numeric,
        tau=tau,
    )


# -- synced-session container ----------------------------------------------

def save_synced(synced: SyncedSession, root_path: str | Path) -> None:
    """Persist a synced session: grid, selections, resampled streams, report."""
    from .session import _fmt, _manifest_to_dict, _write_series_csv

    root = Path(root_path)
    root.mkdir(parents=True, exist_ok=True)
    (root / "manifest.json").write_text(
        json.dumps(_manifest_to_dict(synced.manifest), indent=2) + "\n", encoding="utf-8"
    )
    meta = {"rate": synced.grid.rate, "tau": synced.tau}
    (root / "grid.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    with (root / "grid.csv").open("w", encoding="utf-8", newline="\n") as f:
        f.write("t\n")
        for t in synced.grid.timestamps:
            f.write(_fmt(t) + "\n")
    sel_dir = root / "selections"
    sel_dir.mkdir(exist_ok=True)
    for name, sel in synced.frame_selections.items():
        with (sel_dir / f"{name}.csv").open("w", encoding="utf-8", newline="\n") as f:
            f.write("index,accepted\n")
            for i, a in zip(sel.selected_indices, sel.accepted_flags):
                f.write(f"{int(i)},{int(a)}\n")
    streams_dir = root / "streams"
    streams_dir.mkdir(exist_ok=True)
    for name, series in synced.numeric.items():
        _write_series_csv(streams_dir / f"{name}.csv", series)
    (root / "sync_report.json").write_text(
        json.dumps(synced.report(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_synced(root_path: str | Path) -> SyncedSession:
    from .errors import MissingFile
    from .session import _manifest_from_dict, _read_series_csv

    root = Path(root_path)
    for required in ("manifest.json", "grid.json", "grid.csv"):
        if not (root / required).is_file():
            raise MissingFile(str(root / required))
    manifest = _manifest_from_dict(
        json.loads((root / "manifest.json").read_text(encoding="utf-8"))
    )
    meta = json.loads((root / "grid.json").read_text(encoding="utf-8"))
    with (root / "grid.csv").open("r", encoding="utf-8") as f:
        f.readline()
        grid_ts = np.array([float(line) for line in f if line.strip()])
    grid = ReferenceGrid(timestamps=grid_ts, rate=float(meta["rate"]))

    selections: dict[str, FrameSelection] = {}
    sel_dir = root / "selections"
    if sel_dir.is_dir():
        for path in sorted(sel_dir.glob("*.csv")):
            rows = path.read_text(encoding="utf-8").strip().splitlines()[1:]
            idx, acc = [], []
            for row in rows:
                i, a = row.split(",")
                idx.append(int(i))
                acc.append(bool(int(a)))
            selections[path.stem] = FrameSelection(
                stream=path.stem,
                selected_indices=np.array(idx, dtype=int),
                accepted_flags=np.array(acc, dtype=bool),
            )
    numeric: dict[str, TimedSeries] = {}
    for path in sorted((root / "streams").glob("*.csv")):
        desc = manifest.descriptor(path.stem)
        if desc is not None:
            channels = desc.channels
        else:
            with path.open("r", encoding="utf-8") as f:
                names = f.readline().strip().split(",")[1:]
            channels = tuple(Channel(n, "") for n in names)
        numeric[path.stem] = _read_series_csv(path, channels)
    return SyncedSession(
        manifest=manifest,
        grid=grid,
        frame_selections=selections,
        numeric=numeric,
        tau=float(meta["tau"]),
    )
