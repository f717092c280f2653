"""Sliding-window orchestration: panels in, per-window distance metrics out.

For every window start the selected channels are tapered, transformed, and
normalized into spectra; the window then yields one row of metrics (JS,
the KL matrix and its mean, per-channel entropies and modes).  Windows
where any channel is constant have no spectrum and are skipped with a
logged gap.  Metric CSVs carry a provenance line so downstream comparisons
can refuse rows computed on different window grids.
"""

from __future__ import annotations

import csv
import hashlib
import logging
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone

import numpy as np

from .distances import (
    DistanceReport,
    MetricSeries,
    SpectrumEnsemble,
    WeightVector,
    cross_correlation,
    fit_affine,
    fit_proportionality,
    js_spectral_divergence,
    kl_matrix,
    mean_kl,
    DEFAULT_KL_FLOOR,
)
from .errors import (
    AlignmentError,
    AnalysisError,
    DegenerateSpectrumError,
    FormatError,
)
from .ingest import format_rfc3339, log_returns, parse_rfc3339
from .simulator import SimConfig, run_simulation
from .spectra import (
    NormalizedSpectrum,
    SignalPanel,
    WindowSpec,
    mode_frequency,
    normalize_spectrum,
    periodogram,
    spectral_entropy,
)

log = logging.getLogger(__name__)

TRANSFORMS = ("raw", "log-return")


@dataclass(frozen=True)
class AnalysisConfig:
    """Window geometry and metric options for a sliding-window run."""

    width: int = 128
    stride: int | None = None
    channels: tuple[str, ...] | None = None
    transform: str = "raw"
    weights: tuple[float, ...] | None = None
    kl_floor: float = DEFAULT_KL_FLOOR

    def __post_init__(self):
        if self.width < 4:
            raise AnalysisError(f"window width must be >= 4, got {self.width}")
        if self.stride is not None and self.stride < 1:
            raise AnalysisError(f"stride must be >= 1, got {self.stride}")
        if self.transform not in TRANSFORMS:
            raise AnalysisError(f"transform must be one of {TRANSFORMS}")
        if self.kl_floor < 0:
            raise AnalysisError(f"KL floor must be nonnegative, got {self.kl_floor}")
        if self.channels is not None:
            object.__setattr__(self, "channels", tuple(self.channels))
        if self.weights is not None:
            object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    @property
    def effective_stride(self) -> int:
        return self.stride if self.stride is not None else max(1, self.width // 2)

    def provenance(self) -> dict[str, str]:
        spec = (
            f"width={self.width} stride={self.effective_stride} "
            f"transform={self.transform} floor={self.kl_floor!r} "
            f"weights={'custom' if self.weights else 'uniform'}"
        )
        digest = hashlib.sha256(spec.encode()).hexdigest()[:12]
        return {
            "cfg": digest,
            "width": str(self.width),
            "stride": str(self.effective_stride),
            "transform": self.transform,
            "floor": repr(self.kl_floor),
            "weights": "custom" if self.weights else "uniform",
        }


@dataclass
class AnalysisResult:
    """Everything one sliding-window run produced, in window order."""

    reports: list[DistanceReport]
    gaps: list[int]
    labels: tuple[str, ...]
    width: int
    stride: int
    dt: float
    t0: datetime
    config: AnalysisConfig
    spectra: list[tuple[int, list[NormalizedSpectrum]]] | None = None

    def window_seconds(self, start: int) -> float:
        return self.t0.timestamp() + start * self.dt * 60.0

    def js_series(self) -> MetricSeries:
        return MetricSeries(
            np.array([self.window_seconds(r.window_start) for r in self.reports]),
            np.array([r.js for r in self.reports]),
        )

    def mean_kl_series(self) -> MetricSeries:
        return MetricSeries(
            np.array([self.window_seconds(r.window_start) for r in self.reports]),
            np.array([r.mean_kl for r in self.reports]),
        )


def _select_channels(panel: SignalPanel, channels: tuple[str, ...] | None) -> SignalPanel:
    if channels is None:
        return panel
    rows = [panel.channel_index(name) for name in channels]
    return SignalPanel(panel.values[rows], channels, panel.dt, panel.t0)


def _transform_panel(panel: SignalPanel, transform: str) -> SignalPanel:
    # Log-returns are stamped at the start of the interval they span, so a
    # transformed panel stays on the raw panel's window grid.
    if transform == "raw":
        return panel
    values = log_returns(panel.values)
    return SignalPanel(values, panel.labels, panel.dt, panel.t0)


def analyze(
    panel: SignalPanel, config: AnalysisConfig | None = None, keep_spectra: bool = False
) -> AnalysisResult:
    """Slide a window across the panel and score each position.

    Returns reports in window order plus the starts of skipped
    (degenerate) windows.  `keep_spectra=True` also retains each window's
    normalized spectra, e.g. for debugging dumps.
    """
    cfg = config if config is not None else AnalysisConfig()
    panel = _select_channels(panel, cfg.channels)
    if panel.n_channels < 2:
        raise AnalysisError(f"need at least 2 channels, have {panel.n_channels}")
    panel = _transform_panel(panel, cfg.transform)
    if panel.length < cfg.width:
        raise AnalysisError(
            f"panel of {panel.length} samples is shorter than window {cfg.width}"
        )
    weights = (
        WeightVector(np.array(cfg.weights))
        if cfg.weights is not None
        else WeightVector.uniform(panel.n_channels)
    )
    if weights.size != panel.n_channels:
        raise AnalysisError(
            f"{weights.size} weights for {panel.n_channels} channels"
        )

    window = WindowSpec(cfg.width, cfg.effective_stride)
    reports: list[DistanceReport] = []
    gaps: list[int] = []
    kept: list[tuple[int, list[NormalizedSpectrum]]] = []
    for start in window.starts(panel.length):
        spectra: list[NormalizedSpectrum] = []
        try:
            for ch in range(panel.n_channels):
                segment = panel.values[ch, start : start + window.width]
                if segment.max() == segment.min():
                    # A constant window only carries taper leakage, which
                    # would fake a spectrum where the channel has no signal.
                    raise DegenerateSpectrumError(
                        f"channel {panel.labels[ch]!r} is constant"
                    )
                spectra.append(normalize_spectrum(periodogram(panel, ch, start, window)))
        except DegenerateSpectrumError as exc:
            log.warning("window at %d skipped: %s", start, exc)
            gaps.append(start)
            continue
        ensemble = SpectrumEnsemble(tuple(spectra), panel.labels)
        matrix = kl_matrix(ensemble, cfg.kl_floor)
        reports.append(
            DistanceReport(
                window_start=start,
                js=js_spectral_divergence(ensemble, weights),
                kl_matrix=matrix,
                mean_kl=mean_kl(matrix),
                entropies=np.array([spectral_entropy(s) for s in spectra]),
                modes=np.array([mode_frequency(s) for s in spectra]),
            )
        )
        if keep_spectra:
            kept.append((start, spectra))
    return AnalysisResult(
        reports=reports,
        gaps=gaps,
        labels=panel.labels,
        width=cfg.width,
        stride=cfg.effective_stride,
        dt=panel.dt,
        t0=panel.t0,
        config=cfg,
        spectra=kept if keep_spectra else None,
    )


@dataclass(frozen=True)
class ComparisonReport:
    """Cross-correlation and proportionality slope between two metric series."""

    correlation: float
    slope: float
    intercept: float | None = None


def compare_metric_series(a: MetricSeries, b: MetricSeries, fit: str = "origin") -> ComparisonReport:
    """Correlate two metric series sharing one window grid and fit b ~ slope*a."""
    if len(a) != len(b) or not np.array_equal(a.timestamps, b.timestamps):
        raise AlignmentError("metric series are not on the same window grid")
    if fit == "origin":
        return ComparisonReport(cross_correlation(a, b), fit_proportionality(a, b))
    if fit == "affine":
        slope, intercept = fit_affine(a, b)
        return ComparisonReport(cross_correlation(a, b), slope, intercept)
    raise ValueError(f"fit must be 'origin' or 'affine', got {fit!r}")


# ---------------------------------------------------------------------------
# Metrics CSV round trip
# ---------------------------------------------------------------------------


def write_metrics_csv(result: AnalysisResult, path) -> None:
    """One row per window: time, JS, mean KL, entropies, modes.

    Skipped windows appear as `# gap=<time>` comment lines in window order;
    the leading provenance comment pins the config the rows came from.
    """
    meta = result.config.provenance()
    columns = (
        ["window_start_time", "js", "mean_kl"]
        + [f"H_{name}" for name in result.labels]
        + [f"mode_{name}" for name in result.labels]
    )
    events: list[tuple[int, str]] = []
    for start in result.gaps:
        stamp = format_rfc3339(_seconds_to_dt(result.window_seconds(start)))
        events.append((start, f"# gap={stamp}\n"))
    for r in result.reports:
        stamp = format_rfc3339(_seconds_to_dt(result.window_seconds(r.window_start)))
        cells = (
            [stamp, repr(r.js), repr(r.mean_kl)]
            + [repr(float(h)) for h in r.entropies]
            + [repr(float(m)) for m in r.modes]
        )
        events.append((r.window_start, ",".join(cells) + "\n"))
    events.sort(key=lambda item: item[0])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("# " + " ".join(f"{k}={v}" for k, v in meta.items()) + "\n")
        fh.write(",".join(columns) + "\n")
        for _, line in events:
            fh.write(line)


@dataclass
class MetricsTable:
    """Parsed metrics CSV: column arrays plus the provenance mapping."""

    timestamps: np.ndarray
    js: np.ndarray
    mean_kl: np.ndarray
    entropies: np.ndarray
    modes: np.ndarray
    labels: tuple[str, ...]
    provenance: dict[str, str] = field(default_factory=dict)

    def js_series(self) -> MetricSeries:
        return MetricSeries(self.timestamps, self.js)

    def mean_kl_series(self) -> MetricSeries:
        return MetricSeries(self.timestamps, self.mean_kl)

    def series(self, name: str) -> MetricSeries:
        if name == "js":
            return self.js_series()
        if name == "mean_kl":
            return self.mean_kl_series()
        raise ValueError(f"unknown metric field {name!r}")


def read_metrics_csv(path) -> MetricsTable:
    provenance: dict[str, str] = {}
    rows: list[list[str]] = []
    header: list[str] | None = None
    with open(path, encoding="utf-8", newline="") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                for token in line[1:].split():
                    if "=" in token:
                        key, _, value = token.partition("=")
                        if key != "gap":
                            provenance[key] = value
                continue
            cells = next(csv.reader([line]))
            if header is None:
                header = cells
            else:
                rows.append(cells)
    if header is None:
        raise FormatError(f"{path}: no header row found")
    if header[:3] != ["window_start_time", "js", "mean_kl"]:
        raise FormatError(f"{path}: unexpected metrics header {header[:3]!r}")
    h_names = [c[2:] for c in header[3:] if c.startswith("H_")]
    mode_names = [c[5:] for c in header[3:] if c.startswith("mode_")]
    if h_names != mode_names:
        raise FormatError(f"{path}: entropy and mode columns disagree")
    m = len(h_names)
    stamps, js, mkl = [], [], []
    ents, modes = [], []
    for cells in rows:
        if len(cells) != 3 + 2 * m:
            raise FormatError(f"{path}: row has {len(cells)} cells, expected {3 + 2 * m}")
        stamps.append(parse_rfc3339(cells[0]).timestamp())
        js.append(float(cells[1]))
        mkl.append(float(cells[2]))
        ents.append([float(c) for c in cells[3 : 3 + m]])
        modes.append([float(c) for c in cells[3 + m :]])
    return MetricsTable(
        timestamps=np.array(stamps),
        js=np.array(js),
        mean_kl=np.array(mkl),
        entropies=np.array(ents).reshape(len(rows), m),
        modes=np.array(modes).reshape(len(rows), m),
        labels=tuple(h_names),
        provenance=provenance,
    )


def check_comparable(a: MetricsTable, b: MetricsTable) -> None:
    """Refuse to compare tables produced with different window geometry."""
    for key in ("width", "stride"):
        if key in a.provenance and key in b.provenance:
            if a.provenance[key] != b.provenance[key]:
                raise AlignmentError(
                    f"{key} differs between inputs: "
                    f"{a.provenance[key]} vs {b.provenance[key]}"
                )
    if a.timestamps.size != b.timestamps.size or not np.array_equal(
        a.timestamps, b.timestamps
    ):
        raise AlignmentError("window grids differ between inputs")


def write_kl_csv(result: AnalysisResult, path) -> None:
    """Long-format dump of every KL matrix: window time, row, column, value."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("# channels=" + "|".join(result.labels) + "\n")
        fh.write("window_start_time,l,m,kl\n")
        for r in result.reports:
            stamp = format_rfc3339(_seconds_to_dt(result.window_seconds(r.window_start)))
            m = r.kl_matrix.shape[0]
            for l in range(m):
                for j in range(m):
                    fh.write(f"{stamp},{l},{j},{r.kl_matrix[l, j]!r}\n")


def write_spectra_csv(result: AnalysisResult, path) -> None:
    """Long-format dump of per-window normalized spectra (needs keep_spectra)."""
    if result.spectra is None:
        raise ValueError("analysis was run without keep_spectra=True")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("window_start_time,channel,frequency,prob\n")
        for start, spectra in result.spectra:
            stamp = format_rfc3339(_seconds_to_dt(result.window_seconds(start)))
            for name, spectrum in zip(result.labels, spectra):
                for freq, prob in zip(spectrum.freqs, spectrum.probs):
                    fh.write(f"{stamp},{name},{freq!r},{prob!r}\n")


def _seconds_to_dt(seconds: float) -> datetime:
    return datetime.fromtimestamp(seconds, tz=timezone.utc)


# ---------------------------------------------------------------------------
# Parameter-diversity sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepPoint:
    """Mean windowed JS of the activity panel at one parameter-entropy value."""

    h_a: float
    a_range: tuple[float, float]
    mean_js: float
    per_seed: tuple[float, ...]


def entropy_sweep(
    h_a_values,
    base: SimConfig,
    analysis: AnalysisConfig | None = None,
    seeds: int = 3,
    center: float | None = None,
) -> list[SweepPoint]:
    """Sweep the sensitivity-range width over parameter-entropy values.

    Each H_a maps to a range of width exp(H_a) centered on `center`
    (default: the midpoint of the base range), so widening raises the
    parameter diversity without shifting the typical sensitivity.  For
    every value the simulator runs `seeds` independent seeds (base.seed,
    base.seed+1, ...), the activity panel is analyzed, and the
    time-averaged JS is averaged over seeds.
    """
    if seeds < 1:
        raise ValueError("need at least one seed")
    mid = center if center is not None else 0.5 * (base.a_range[0] + base.a_range[1])
    points: list[SweepPoint] = []
    for h_a in h_a_values:
        half = 0.5 * float(np.exp(h_a))
        if mid - half <= 0:
            raise AnalysisError(
                f"H_a={h_a!r} makes the range touch zero (center {mid!r})"
            )
        a_range = (mid - half, mid + half)
        per_seed: list[float] = []
        for k in range(seeds):
            cfg = replace(base, a_range=a_range, seed=base.seed + k)
            _, activity = run_simulation(cfg)
            result = analyze(activity, analysis)
            if not result.reports:
                raise AnalysisError(
                    f"no usable windows at H_a={h_a!r} seed={cfg.seed}"
                )
            per_seed.append(float(np.mean([r.js for r in result.reports])))
        points.append(
            SweepPoint(
                h_a=float(h_a),
                a_range=a_range,
                mean_js=float(np.mean(per_seed)),
                per_seed=tuple(per_seed),
            )
        )
    return points


def write_sweep_csv(points: list[SweepPoint], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("h_a,a1,a2,mean_js\n")
        for p in points:
            fh.write(f"{p.h_a!r},{p.a_range[0]!r},{p.a_range[1]!r},{p.mean_js!r}\n")


__all__ = [
    "AnalysisConfig",
    "AnalysisResult",
    "ComparisonReport",
    "MetricsTable",
    "SweepPoint",
    "analyze",
    "check_comparable",
    "compare_metric_series",
    "entropy_sweep",
    "read_metrics_csv",
    "write_kl_csv",
    "write_metrics_csv",
    "write_spectra_csv",
    "write_sweep_csv",
]
