"""Butterworth low-pass design and zero-phase forward-backward filtering.

Coefficients come from the analog prototype poles via a prewarped bilinear
transform, computed here directly rather than taken from a library, so the
design is reproducible from first principles. The zero-phase pass uses
odd-reflection padding of length 3*(order+1) at both ends.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.signal import lfilter, lfilter_zi

from .errors import InvalidCutoff, SignalTooShort, UnclassifiedChannel

NYQUIST_CLAMP = 0.45  # cutoff clamped to this fraction of fs when infeasible


@dataclass(frozen=True)
class FilterSpec:
    order: int
    cutoff: float
    sample_rate: float
    b: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "b", np.asarray(self.b, dtype=np.float64))
        object.__setattr__(self, "a", np.asarray(self.a, dtype=np.float64))

    @property
    def padlen(self) -> int:
        return 3 * (self.order + 1)

    def is_stable(self) -> bool:
        return bool(np.all(np.abs(np.roots(self.a)) < 1.0))

    def dc_gain(self) -> float:
        return float(np.sum(self.b) / np.sum(self.a))

    def magnitude(self, freq_hz: float) -> float:
        """Single-pass gain |H(e^{j 2 pi f / fs})|."""
        w = 2.0 * np.pi * freq_hz / self.sample_rate
        z = np.exp(1j * w)
        num = np.polyval(self.b, z) / z ** (len(self.b) - 1)
        den = np.polyval(self.a, z) / z ** (len(self.a) - 1)
        return float(np.abs(num / den))


def design_butterworth_lowpass(order: int, cutoff: float, sample_rate: float) -> FilterSpec:
    """Digital Butterworth low-pass via prewarped bilinear transform.

    Analog prototype poles sit on the unit circle in the left half s-plane;
    prewarping places the -3 dB point exactly at ``cutoff``.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if not 0.0 < cutoff < sample_rate / 2.0:
        raise InvalidCutoff(
            f"cutoff {cutoff} Hz must lie in (0, {sample_rate / 2.0}) Hz"
        )
    # Prototype poles: exp(j*pi*(2k + N - 1) / (2N)), k = 1..N.
    k = np.arange(1, order + 1)
    poles = np.exp(1j * np.pi * (2 * k + order - 1) / (2 * order))
    # Prewarp the cutoff so the bilinear map lands it exactly.
    fs2 = 2.0 * sample_rate
    warped = fs2 * np.tan(np.pi * cutoff / sample_rate)
    poles = warped * poles
    gain = warped**order
    # Bilinear transform s -> z; the N zeros at infinity map to z = -1.
    pz = (fs2 + poles) / (fs2 - poles)
    gain = gain * np.real(1.0 / np.prod(fs2 - poles))
    b = np.real(gain * np.poly(-np.ones(order)))
    a = np.real(np.poly(pz))
    return FilterSpec(order=order, cutoff=cutoff, sample_rate=sample_rate, b=b, a=a)


def filtfilt(spec: FilterSpec, signal: np.ndarray, method: str = "pad") -> np.ndarray:
    """Zero-phase filtering: forward pass, backward pass, squared magnitude.

    With ``method="pad"`` transients are suppressed by odd-reflection padding
    and by seeding the filter state at the padded signal's first value; edge
    transients decay with the slowest pole, so the result is only
    approximately time-reversal symmetric. ``method="gust"`` chooses the two
    initial states by least squares (Gustafsson 1996), which makes the
    operator exactly symmetric under time reversal.
    """
    x = np.asarray(signal, dtype=np.float64)
    if method == "gust":
        from scipy.signal import filtfilt as _scipy_filtfilt

        if len(x) <= 3 * max(len(spec.a), len(spec.b)):
            raise SignalTooShort(f"need more samples, got {len(x)}")
        return _scipy_filtfilt(spec.b, spec.a, x, method="gust")
    if method != "pad":
        raise ValueError(f"unknown method '{method}'")
    padlen = spec.padlen
    if len(x) <= padlen:
        raise SignalTooShort(f"need > {padlen} samples, got {len(x)}")
    head = 2.0 * x[0] - x[padlen:0:-1]
    tail = 2.0 * x[-1] - x[-2 : -padlen - 2 : -1]
    ext = np.concatenate([head, x, tail])
    zi = lfilter_zi(spec.b, spec.a)
    y, _ = lfilter(spec.b, spec.a, ext, zi=zi * ext[0])
    y = y[::-1]
    y, _ = lfilter(spec.b, spec.a, y, zi=zi * y[0])
    y = y[::-1]
    return y[padlen : padlen + len(x)]


class ChannelClass(str, Enum):
    EE_POSE = "ee_pose"
    ARM_JOINTS = "arm_joints"
    WHEELCHAIR_WHEELS = "wheelchair_wheels"
    IMU = "imu"


# Default cutoffs: 5 Hz for kinematic channels, 10 Hz for IMU.
DEFAULT_POLICY_CUTOFFS: dict[ChannelClass, tuple[int, float]] = {
    ChannelClass.EE_POSE: (4, 5.0),
    ChannelClass.ARM_JOINTS: (4, 5.0),
    ChannelClass.WHEELCHAIR_WHEELS: (4, 5.0),
    ChannelClass.IMU: (4, 10.0),
}

_CLASS_PATTERNS: list[tuple[str, ChannelClass]] = [
    (r"imu", ChannelClass.IMU),
    (r"(^|_)ee($|_)|end[_-]?effector", ChannelClass.EE_POSE),
    (r"arm|joint", ChannelClass.ARM_JOINTS),
    (r"wheel", ChannelClass.WHEELCHAIR_WHEELS),
]


def classify_stream(name: str) -> ChannelClass | None:
    lowered = name.lower()
    for pattern, cls in _CLASS_PATTERNS:
        if re.search(pattern, lowered):
            return cls
    return None


@dataclass(frozen=True)
class DenoisePolicy:
    """Map from channel class to (order, cutoff Hz)."""

    cutoffs: dict[ChannelClass, tuple[int, float]]

    @classmethod
    def default(cls) -> "DenoisePolicy":
        return cls(cutoffs=dict(DEFAULT_POLICY_CUTOFFS))

    @classmethod
    def from_json_dict(cls, d: dict) -> "DenoisePolicy":
        cutoffs = {
            ChannelClass(name): (int(v["order"]), float(v["cutoff"]))
            for name, v in d.items()
        }
        return cls(cutoffs=cutoffs)

    def spec_for(self, cls_: ChannelClass, sample_rate: float) -> FilterSpec:
        order, cutoff = self.cutoffs[cls_]
        if cutoff >= sample_rate / 2.0:
            clamped = NYQUIST_CLAMP * sample_rate
            warnings.warn(
                f"{cls_.value}: cutoff {cutoff} Hz >= Nyquist at fs={sample_rate} Hz; "
                f"clamped to {clamped:.3g} Hz"
            )
            cutoff = clamped
        return design_butterworth_lowpass(order, cutoff, sample_rate)


def filter_series(series, spec: FilterSpec):
    """Apply zero-phase filtering to every channel of a TimedSeries."""
    from .session import TimedSeries

    out = np.column_stack(
        [filtfilt(spec, series.values[:, c]) for c in range(series.values.shape[1])]
    )
    return TimedSeries(
        timestamps=series.timestamps.copy(), values=out, channels=series.channels
    )


def denoise_session(synced, policy: DenoisePolicy | None = None, strict: bool = True):
    """Filter every numeric channel of a synced session by its class's spec.

    Frame selections and the grid are untouched. Unknown stream classes raise
    in strict mode and pass through with a warning otherwise.
    """
    from .sync import SyncedSession

    if policy is None:
        policy = DenoisePolicy.default()
    fs = synced.grid.rate
    numeric = {}
    for name, series in synced.numeric.items():
        cls_ = classify_stream(name)
        if cls_ is None or cls_ not in policy.cutoffs:
            if strict:
                raise UnclassifiedChannel(f"stream '{name}' matches no policy class")
            warnings.warn(f"stream '{name}' unclassified; passing through unfiltered")
            numeric[name] = series
            continue
        spec = policy.spec_for(cls_, fs)
        numeric[name] = filter_series(series, spec)
    return SyncedSession(
        manifest=synced.manifest,
        grid=synced.grid,
        frame_selections=synced.frame_selections,
        numeric=numeric,
        tau=synced.tau,
    )


def denoise_raw(
    session,
    policy: DenoisePolicy | None = None,
    strict: bool = True,
    classes: set[ChannelClass] | None = None,
):
    """Filter classified numeric streams at their native rate, pre-sync.

    Denoising after downsampling to the grid cannot remove noise that aliases
    into the grid band, so the batch pipeline filters raw streams first.
    ``classes`` restricts which channel classes are touched. Streams whose
    native rate cannot support their cutoff are left for the grid-rate stage.
    Returns a new RawSession and the set of stream names filtered.
    """
    from .session import RawSession

    if policy is None:
        policy = DenoisePolicy.default()
    numeric = dict(session.numeric)
    filtered: set[str] = set()
    for name, series in session.numeric.items():
        cls_ = classify_stream(name)
        if cls_ is None or cls_ not in policy.cutoffs:
            if strict:
                raise UnclassifiedChannel(f"stream '{name}' matches no policy class")
            warnings.warn(f"stream '{name}' unclassified; passing through unfiltered")
            continue
        if classes is not None and cls_ not in classes:
            continue
        dts = np.diff(series.timestamps)
        native_rate = 1.0 / float(np.median(dts))
        _, cutoff = policy.cutoffs[cls_]
        if native_rate <= 2.0 * cutoff:
            continue
        spec = policy.spec_for(cls_, native_rate)
        numeric[name] = filter_series(series, spec)
        filtered.add(name)
    return (
        RawSession(
            manifest=session.manifest,
            numeric=numeric,
            frame_logs=session.frame_logs,
            audio=session.audio,
            dialogues=session.dialogues,
        ),
        filtered,
    )


def denoise_raw_imu(session, policy: DenoisePolicy | None = None, min_native_rate: float = 20.0):
    """Filter IMU streams at their native rate, before interpolation.

    A 10 Hz cutoff is infeasible at a 12 Hz grid, so IMU denoising happens on
    the raw series whenever the native rate supports it. Returns a new
    RawSession; non-IMU streams are untouched.
    """
    from .session import RawSession

    if policy is None:
        policy = DenoisePolicy.default()
    numeric = dict(session.numeric)
    for name, series in session.numeric.items():
        if classify_stream(name) is not ChannelClass.IMU:
            continue
        dts = np.diff(series.timestamps)
        native_rate = 1.0 / float(np.median(dts))
        if native_rate <= min_native_rate:
            continue
        spec = policy.spec_for(ChannelClass.IMU, native_rate)
        numeric[name] = filter_series(series, spec)
    return RawSession(
        manifest=session.manifest,
        numeric=numeric,
        frame_logs=session.frame_logs,
        audio=session.audio,
        dialogues=session.dialogues,
    )
