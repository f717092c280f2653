"""Similarity metrics between normalized power spectra.

Spectra are compared as probability distributions: the Jensen-Shannon
divergence of a weighted ensemble measures how far the members sit from
their mixture, the Kullback-Leibler distance measures how far one member
sits from another (asymmetric), and the mean of the full KL matrix
(diagonal included) gives a single dispersion number per window.  All
values are in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateFitError,
    DimensionError,
    UndefinedCorrelationError,
)
from .spectra import NormalizedSpectrum, spectral_entropy

# Default clamp applied to both arguments of a KL distance before
# renormalizing.  Keeps distances finite on spectra with empty bins while
# leaving typical tapered-periodogram spectra (strictly positive bins)
# untouched.  Pass floor=0 for the literal definition, which may be +inf.
DEFAULT_KL_FLOOR = 1e-12


@dataclass(frozen=True)
class WeightVector:
    """Strictly positive mixture weights summing to one."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("weights must be a non-empty 1-D array")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("weights must be finite and strictly positive")
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1 within 1e-12, got {float(w.sum())!r}")
        frozen = w.copy()
        frozen.setflags(write=False)
        object.__setattr__(self, "weights", frozen)

    @classmethod
    def uniform(cls, m: int) -> "WeightVector":
        if m < 1:
            raise ValueError("need at least one weight")
        return cls(np.full(m, 1.0 / m))

    @property
    def size(self) -> int:
        return self.weights.size

    def entropy(self) -> float:
        """Shannon entropy of the weights; an upper bound for the JS divergence."""
        w = self.weights
        return float(-(w * np.log(w)).sum() + 0.0)


@dataclass(frozen=True)
class SpectrumEnsemble:
    """Two or more normalized spectra on an identical frequency grid."""

    spectra: tuple[NormalizedSpectrum, ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        spectra = tuple(self.spectra)
        if len(spectra) < 2:
            raise DimensionError("an ensemble needs at least two spectra")
        first = spectra[0]
        for s in spectra[1:]:
            _check_same_grid(first, s)
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != len(spectra):
                raise DimensionError(
                    f"expected {len(spectra)} labels, got {len(labels)}"
                )
            object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "spectra", spectra)

    @property
    def size(self) -> int:
        return len(self.spectra)

    @property
    def dt(self) -> float:
        return self.spectra[0].dt

    def prob_matrix(self) -> np.ndarray:
        """Stack the member distributions into an (M, N-1) array."""
        return np.vstack([s.probs for s in self.spectra])


@dataclass(frozen=True)
class MetricSeries:
    """A scalar metric sampled on a window grid (timestamps in epoch seconds)."""

    timestamps: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.timestamps, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if t.ndim != 1 or v.ndim != 1 or t.size != v.size:
            raise DimensionError("timestamps and values must be 1-D and the same length")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValueError("metric series entries must be finite")
        t = t.copy()
        v = v.copy()
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class DistanceReport:
    """Per-window similarity summary for an M-channel ensemble."""

    window_start: int
    js: float
    kl_matrix: np.ndarray
    mean_kl: float
    entropies: np.ndarray
    modes: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.kl_matrix, dtype=np.float64)
        if k.ndim != 2 or k.shape[0] != k.shape[1]:
            raise DimensionError("KL matrix must be square")
        if self.js < 0:
            raise ValueError(f"JS divergence must be nonnegative, got {self.js}")
        if np.any(np.diag(k) != 0):
            raise ValueError("KL matrix diagonal must be exactly zero")
        if np.any(k < 0):
            raise ValueError("KL matrix entries must be nonnegative")
        if self.mean_kl < self.js - 1e-9:
            raise ValueError(
                f"mean KL {self.mean_kl!r} fell below JS {self.js!r}"
            )
        k = k.copy()
        k.setflags(write=False)
        object.__setattr__(self, "kl_matrix", k)


def _check_same_grid(p: NormalizedSpectrum, q: NormalizedSpectrum) -> None:
    if p.probs.size != q.probs.size or p.dt != q.dt:
        raise DimensionError(
            f"spectra on different grids: ({p.probs.size} bins, dt={p.dt}) vs "
            f"({q.probs.size} bins, dt={q.dt})"
        )


def _floored(p: np.ndarray, floor: float) -> np.ndarray:
    clipped = np.clip(p, floor, None)
    return clipped / clipped.sum()


def kl_spectral_distance(
    p: NormalizedSpectrum, q: NormalizedSpectrum, floor: float = DEFAULT_KL_FLOOR
) -> float:
    """Relative entropy sum p*log(p/q) between two spectra, in nats.

    With floor > 0 both distributions are clamped below by `floor` and
    renormalized first, which keeps the result finite.  With floor = 0 the
    definition is applied literally: bins where p = 0 contribute nothing,
    and a bin with p > 0 but q = 0 makes the distance +inf.
    """
    _check_same_grid(p, q)
    if floor < 0:
        raise ValueError(f"floor must be nonnegative, got {floor}")
    if floor == 0.0:
        pv, qv = p.probs, q.probs
        support = pv > 0
        if np.any(support & (qv == 0)):
            return math.inf
        ps = pv[support]
        return max(0.0, float((ps * np.log(ps / qv[support])).sum()))
    pf = _floored(p.probs, floor)
    qf = _floored(q.probs, floor)
    return max(0.0, float((pf * np.log(pf / qf)).sum()))


def js_spectral_divergence(
    ensemble: SpectrumEnsemble, weights: WeightVector | None = None
) -> float:
    """Jensen-Shannon divergence of a spectrum ensemble, in nats.

    H(sum_j pi_j p_j) - sum_j pi_j H(p_j) with the entropy of the
    weighted mixture taken first.  Nonnegative, zero exactly when all
    members coincide, and bounded above by the entropy of the weights.
    Weights default to uniform.
    """
    w = weights if weights is not None else WeightVector.uniform(ensemble.size)
    if w.size != ensemble.size:
        raise DimensionError(
            f"{ensemble.size} spectra but {w.size} weights"
        )
    matrix = ensemble.prob_matrix()
    mixture = NormalizedSpectrum(w.weights @ matrix, ensemble.dt)
    member_entropy = sum(
        float(wj) * spectral_entropy(s) for wj, s in zip(w.weights, ensemble.spectra)
    )
    return max(0.0, spectral_entropy(mixture) - member_entropy)


def kl_matrix(ensemble: SpectrumEnsemble, floor: float = DEFAULT_KL_FLOOR) -> np.ndarray:
    """All pairwise KL distances; entry (l, m) is KL(p_l, p_m).

    The diagonal is exactly zero.  The matrix is generally asymmetric.
    """
    m = ensemble.size
    out = np.zeros((m, m))
    for l in range(m):
        for j in range(m):
            if j != l:
                out[l, j] = kl_spectral_distance(
                    ensemble.spectra[l], ensemble.spectra[j], floor
                )
    return out


def mean_kl(matrix: np.ndarray) -> float:
    """Mean of all M*M entries of a KL matrix, zero diagonal included."""
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    m = a.shape[0]
    return float(a.sum() / (m * m))


def cross_correlation(a: MetricSeries, b: MetricSeries) -> float:
    """Pearson coefficient (<ab> - <a><b>)/(sigma_a*sigma_b), population moments."""
    x, y = a.values, b.values
    if x.size != y.size:
        raise DimensionError(f"series lengths differ: {x.size} vs {y.size}")
    if x.size < 2:
        raise DimensionError("need at least two samples to correlate")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise UndefinedCorrelationError("correlation undefined for a constant series")
    mx, my = float(x.mean()), float(y.mean())
    cov = float((x * y).mean()) - mx * my
    var_x = max(0.0, float((x * x).mean()) - mx * mx)
    var_y = max(0.0, float((y * y).mean()) - my * my)
    if var_x == 0.0 or var_y == 0.0:
        raise UndefinedCorrelationError("correlation undefined for a zero-variance series")
    c = cov / math.sqrt(var_x * var_y)
    return min(1.0, max(-1.0, c))


def fit_proportionality(x: MetricSeries, y: MetricSeries) -> float:
    """Least-squares slope of y = slope * x constrained through the origin."""
    xv, yv = x.values, y.values
    if xv.size != yv.size:
        raise DimensionError(f"series lengths differ: {xv.size} vs {yv.size}")
    if xv.size < 2:
        raise DimensionError("need at least two samples to fit")
    sxx = float((xv * xv).sum())
    if sxx == 0.0:
        raise DegenerateFitError("cannot fit a slope against an all-zero series")
    return float((xv * yv).sum()) / sxx


def fit_affine(x: MetricSeries, y: MetricSeries) -> tuple[float, float]:
    """Unconstrained least-squares line y = slope * x + intercept (diagnostic)."""
    xv, yv = x.values, y.values
    if xv.size != yv.size:
        raise DimensionError(f"series lengths differ: {xv.size} vs {yv.size}")
    if xv.size < 2:
        raise DimensionError("need at least two samples to fit")
    mx, my = float(xv.mean()), float(yv.mean())
    sxx = float(((xv - mx) ** 2).sum())
    if sxx == 0.0:
        raise DegenerateFitError("cannot fit a line against a constant series")
    slope = float(((xv - mx) * (yv - my)).sum()) / sxx
    return slope, my - slope * mx
