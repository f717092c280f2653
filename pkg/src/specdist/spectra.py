"""Windowed periodogram estimation and per-channel spectral statistics.

The estimator tapers a length-N segment with a raised-cosine (Hanning)
window, takes the squared magnitude of its DFT scaled by 1/N^2, drops the
DC bin, and rescales the remaining bins into a probability distribution
over positive frequencies.  Spectral entropy (in nats) and the mode
frequency are statistics of that distribution: a flat spectrum maximizes
the entropy at log(N-1), a single-bin spectrum has entropy zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .errors import DegenerateSpectrumError, InvalidWindowError, OutOfRangeError

EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)

# Probabilities at or below this are treated as exact zeros in entropy sums
# (the 0*log(0) = 0 convention, extended to denormal-range values).
ENTROPY_PROB_FLOOR = 1e-300


def _frozen_array(values, dtype=np.float64) -> np.ndarray:
    out = np.array(values, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SignalPanel:
    """Uniformly sampled multi-channel real time series.

    Parameters
    ----------
    values : ndarray, shape (M, L)
        One row per channel, all sampled on the same grid.
    labels : tuple of str
        Channel names, length M, unique.
    dt : float
        Sampling period in minutes.
    t0 : datetime
        Timestamp of the first sample (UTC).  Defaults to the epoch.

    The panel is immutable after construction; an empty panel (L = 0) is
    allowed as a no-data marker, otherwise at least two samples are
    required.
    """

    values: np.ndarray
    labels: tuple[str, ...]
    dt: float
    t0: datetime = EPOCH

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError(f"panel values must be 2-D (channels, samples), got ndim={v.ndim}")
        m, length = v.shape
        if m < 1:
            raise ValueError("panel needs at least one channel")
        if 0 < length < 2:
            raise ValueError("panel needs at least two samples (or none at all)")
        if length and not np.all(np.isfinite(v)):
            raise ValueError("panel values must all be finite")
        labels = tuple(str(x) for x in self.labels)
        if len(labels) != m:
            raise ValueError(f"expected {m} labels, got {len(labels)}")
        if len(set(labels)) != m:
            raise ValueError("channel labels must be unique")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"sampling period must be positive, got {self.dt}")
        if self.t0.tzinfo is None:
            object.__setattr__(self, "t0", self.t0.replace(tzinfo=timezone.utc))
        object.__setattr__(self, "values", _frozen_array(v))
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def n_channels(self) -> int:
        return self.values.shape[0]

    @property
    def length(self) -> int:
        return self.values.shape[1]

    @property
    def nyquist(self) -> float:
        """Highest resolvable frequency, 1/(2*dt)."""
        return 1.0 / (2.0 * self.dt)

    def channel_index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"no channel named {label!r}") from None


@dataclass(frozen=True)
class WindowSpec:
    """Sliding-window geometry: width in samples and stride between starts."""

    width: int
    stride: int = 1

    def __post_init__(self):
        if int(self.width) != self.width or self.width < 2:
            raise InvalidWindowError(f"window width must be an integer >= 2, got {self.width}")
        if int(self.stride) != self.stride or self.stride < 1:
            raise InvalidWindowError(f"window stride must be an integer >= 1, got {self.stride}")
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "stride", int(self.stride))

    def starts(self, length: int) -> range:
        """Window start offsets that fit entirely inside `length` samples."""
        if length < self.width:
            return range(0)
        return range(0, length - self.width + 1, self.stride)


@dataclass(frozen=True)
class PowerSpectrum:
    """Raw periodogram bins P(f_n), n = 0..N-1, including the DC bin."""

    values: np.ndarray
    dt: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size < 2:
            raise ValueError("power spectrum must be a 1-D array of at least 2 bins")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError("power spectrum bins must be finite and nonnegative")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"sampling period must be positive, got {self.dt}")
        object.__setattr__(self, "values", _frozen_array(v))
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def width(self) -> int:
        return self.values.size

    @property
    def freqs(self) -> np.ndarray:
        """Bin frequencies f_n = n/(N*dt), n = 0..N-1."""
        n = self.values.size
        return np.arange(n) / (n * self.dt)


@dataclass(frozen=True)
class NormalizedSpectrum:
    """Probability distribution over the N-1 positive-frequency bins.

    The DC bin is absent by construction; `probs[i]` is the mass at bin
    n = i+1, frequency (i+1)/(N*dt).
    """

    probs: np.ndarray
    dt: float

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 1 or p.size < 1:
            raise ValueError("normalized spectrum must be a non-empty 1-D array")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValueError("probabilities must be finite and nonnegative")
        total = float(p.sum())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities must sum to 1 within 1e-12, got {total!r}")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"sampling period must be positive, got {self.dt}")
        object.__setattr__(self, "probs", _frozen_array(p))
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def width(self) -> int:
        """The underlying window width N (one more than the bin count)."""
        return self.probs.size + 1

    @property
    def freqs(self) -> np.ndarray:
        """Bin frequencies f_n = n/(N*dt), n = 1..N-1."""
        n = self.width
        return np.arange(1, n) / (n * self.dt)


def hanning_window(width: int) -> np.ndarray:
    """Raised-cosine taper w(k) = (1 - cos(2*pi*k/(width-1)))/2, k = 0..width-1.

    Endpoints are exactly zero; the window is symmetric about its midpoint.
    """
    if int(width) != width or width < 2:
        raise InvalidWindowError(f"window width must be an integer >= 2, got {width}")
    k = np.arange(int(width))
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * k / (width - 1)))


def periodogram(panel: SignalPanel, channel: int, start: int, window: WindowSpec) -> PowerSpectrum:
    """Tapered periodogram of one channel segment.

    Computes P(f_n) = |sum_k w(k) x(k+start) e^{-2*pi*i*k*n/N}|^2 / N^2
    for n = 0..N-1 via the FFT, which matches the direct summation to
    floating-point accuracy.

    Parameters
    ----------
    panel : SignalPanel
    channel : int
        Row index of the channel to analyze.
    start : int
        Offset of the first sample of the window.
    window : WindowSpec
        Only the width is used here; the stride matters to callers
        iterating over windows.
    """
    n = window.width
    if start < 0 or start + n > panel.length:
        raise OutOfRangeError(
            f"window [{start}, {start + n}) overruns series of length {panel.length}"
        )
    segment = panel.values[channel, start : start + n]
    tapered = hanning_window(n) * segment
    amplitude = np.fft.fft(tapered)
    return PowerSpectrum(np.abs(amplitude) ** 2 / n**2, panel.dt)


def normalize_spectrum(spectrum: PowerSpectrum) -> NormalizedSpectrum:
    """Drop the DC bin and rescale the rest to sum to one.

    Raises DegenerateSpectrumError when the AC bins carry no power at all
    (a constant window); the caller decides whether to skip or substitute.
    """
    ac = spectrum.values[1:]
    total = float(ac.sum())
    if total <= 0.0:
        raise DegenerateSpectrumError("all AC power is zero (constant window)")
    return NormalizedSpectrum(ac / total, spectrum.dt)


def spectral_entropy(spectrum: NormalizedSpectrum) -> float:
    """Shannon entropy -sum p*log(p) of the spectrum, in nats.

    Zero-probability bins contribute nothing; the result lies in
    [0, log(N-1)], reaching the top exactly when the spectrum is uniform.
    """
    p = spectrum.probs
    live = p[p > ENTROPY_PROB_FLOOR]
    return float(-(live * np.log(live)).sum() + 0.0)


def mode_frequency(spectrum: NormalizedSpectrum) -> float:
    """Frequency of the largest probability bin; ties go to the lowest frequency."""
    return float(spectrum.freqs[int(np.argmax(spectrum.probs))])
