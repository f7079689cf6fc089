"""Traffic-matrix data model, CSV ingestion and emission, and the synthetic
scenario generator used in place of operator datasets.

File formats (all UTF-8 CSV):

* cells file: header ``cell_id,lat,lon``, one row per cell.
* traffic file (long form): header ``timestamp,cell_id,service,bytes``;
  timestamps are integer epoch seconds aligned to the resolution.
* wide matrix file: header ``cell_id`` followed by one ISO-8601
  interval-start column per interval.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Sequence

import numpy as np

from .errors import FormatError, NegativeVolume, UnknownCell
from .stable import StableParams, sample as stable_sample

__all__ = [
    "CellMeta",
    "TrafficMatrix",
    "ScenarioSpec",
    "SyntheticTruth",
    "ingest_csv",
    "emit_cells_csv",
    "emit_traffic_csv",
    "emit_wide_csv",
    "generate_synthetic",
    "generate_synthetic_truth",
    "quantized_cdf",
    "diurnal_profile",
]

SERVICE_LABELS = ("IM", "web", "video", "other")


@dataclass(frozen=True)
class CellMeta:
    cell_id: str
    latitude: float
    longitude: float

    def __post_init__(self):
        if not self.cell_id:
            raise ValueError("cell_id must be non-empty")
        if not (-90.0 <= self.latitude <= 90.0):
            raise ValueError(f"latitude out of range: {self.latitude}")
        if not (-180.0 <= self.longitude <= 180.0):
            raise ValueError(f"longitude out of range: {self.longitude}")


@dataclass(frozen=True)
class TrafficMatrix:
    """N cells x T intervals of non-negative volumes plus cell metadata.

    values[i, t] is the traffic of cells[i] over
    [start + t * resolution, start + (t+1) * resolution).
    """

    cells: tuple[CellMeta, ...]
    resolution_seconds: int
    start_timestamp: int
    values: np.ndarray
    service_label: str

    def __post_init__(self):
        vals = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        if vals.ndim != 2 or vals.shape[0] != len(self.cells):
            raise ValueError(f"values must be (n_cells, T), got {vals.shape}")
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise ValueError("traffic volumes must be finite and non-negative")
        if self.resolution_seconds <= 0:
            raise ValueError("resolution_seconds must be positive")
        ids = [c.cell_id for c in self.cells]
        if len(set(ids)) != len(ids):
            raise ValueError("cell_id values must be unique")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "cells", tuple(self.cells))

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_intervals(self) -> int:
        return self.values.shape[1]

    def cell_index(self, cell_id: str) -> int:
        for i, c in enumerate(self.cells):
            if c.cell_id == cell_id:
                return i
        raise KeyError(cell_id)

    def interval_start(self, t: int) -> int:
        return self.start_timestamp + t * self.resolution_seconds


# ---------------------------------------------------------------------------
# CSV ingestion / emission
# ---------------------------------------------------------------------------


def _read_cells(cells_path, merge_colocated: bool):
    cells: list[CellMeta] = []
    alias: dict[str, str] = {}
    seen_ids: dict[str, int] = {}
    by_coord: dict[tuple[float, float], str] = {}
    with open(cells_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["cell_id", "lat", "lon"]:
            raise FormatError("expected header 'cell_id,lat,lon'", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise FormatError(f"expected 3 fields, got {len(row)}", line=lineno)
            cid = row[0].strip()
            try:
                lat, lon = float(row[1]), float(row[2])
            except ValueError:
                raise FormatError(f"bad coordinates {row[1]!r},{row[2]!r}", line=lineno)
            if cid in seen_ids:
                raise FormatError(f"duplicate cell_id {cid!r}", line=lineno)
            seen_ids[cid] = lineno
            coord = (lat, lon)
            if merge_colocated and coord in by_coord:
                alias[cid] = by_coord[coord]
                continue
            by_coord[coord] = cid
            try:
                cells.append(CellMeta(cid, lat, lon))
            except ValueError as exc:
                raise FormatError(str(exc), line=lineno)
    if not cells:
        raise FormatError("cells file contains no cells", line=1)
    return cells, alias


def ingest_csv(
    traffic_path,
    cells_path,
    service: str | None = None,
    resolution_seconds: int | None = None,
    merge_colocated: bool = False,
) -> TrafficMatrix:
    """Build a TrafficMatrix from a long-form traffic CSV and a cells CSV.

    Rows are ordered by first appearance in the cells file; missing
    (cell, interval) pairs are zero; duplicate records are summed.  The
    resolution is inferred as the gcd of timestamp offsets unless given.
    `merge_colocated` folds cells at identical coordinates into one.
    """
    cells, alias = _read_cells(cells_path, merge_colocated)
    index = {c.cell_id: i for i, c in enumerate(cells)}
    for src, dst in alias.items():
        index[src] = index[dst]

    records: list[tuple[int, int, float]] = []
    services: set[str] = set()
    with open(traffic_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["timestamp", "cell_id", "service", "bytes"]
        if header is None or [h.strip() for h in header] != expected:
            raise FormatError("expected header 'timestamp,cell_id,service,bytes'", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 4:
                raise FormatError(f"expected 4 fields, got {len(row)}", line=lineno)
            try:
                ts = int(row[0])
            except ValueError:
                raise FormatError(f"bad timestamp {row[0]!r}", line=lineno)
            cid = row[1].strip()
            svc = row[2].strip()
            try:
                vol = float(row[3])
            except ValueError:
                raise FormatError(f"bad volume {row[3]!r}", line=lineno)
            if vol < 0:
                raise NegativeVolume(f"negative volume {row[3]}", line=lineno)
            if service is not None and svc != service:
                continue
            services.add(svc)
            if cid not in index:
                raise UnknownCell(f"line {lineno}: unknown cell_id {cid!r}")
            records.append((ts, index[cid], vol))

    if not records:
        raise FormatError("traffic file contains no usable records", line=1)
    if service is None and len(services) > 1:
        raise FormatError(
            f"multiple services present ({sorted(services)}); pass service=", line=1
        )
    label = service if service is not None else services.pop()

    stamps = sorted({ts for ts, _, _ in records})
    start = stamps[0]
    if resolution_seconds is not None:
        step = int(resolution_seconds)
    elif len(stamps) > 1:
        step = 0
        for ts in stamps[1:]:
            step = math.gcd(step, ts - start)
    else:
        raise FormatError(
            "cannot infer resolution from a single timestamp; pass resolution_seconds",
            line=1,
        )
    for ts, _, _ in records:
        if (ts - start) % step != 0:
            raise FormatError(f"timestamp {ts} not aligned to resolution {step}", line=1)

    n_t = (stamps[-1] - start) // step + 1
    values = np.zeros((len(cells), n_t))
    for ts, ci, vol in records:
        values[ci, (ts - start) // step] += vol
    return TrafficMatrix(tuple(cells), step, start, values, label)


def emit_cells_csv(matrix: TrafficMatrix, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cell_id", "lat", "lon"])
        for c in matrix.cells:
            writer.writerow([c.cell_id, repr(c.latitude), repr(c.longitude)])


def emit_traffic_csv(matrix: TrafficMatrix, path) -> None:
    """Write the long-form traffic CSV.

    Zero entries are omitted, but every all-zero interval gets one
    explicit zero record so the timeline (start and resolution) survives
    a round trip through ingest_csv.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "cell_id", "service", "bytes"])
        vals = matrix.values
        for t in range(matrix.n_intervals):
            ts = matrix.interval_start(t)
            col = vals[:, t]
            nz = np.flatnonzero(col)
            if nz.size == 0:
                writer.writerow([ts, matrix.cells[0].cell_id, matrix.service_label, 0])
                continue
            for i in nz:
                v = col[i]
                text = str(int(v)) if v == int(v) else repr(float(v))
                writer.writerow([ts, matrix.cells[i].cell_id, matrix.service_label, text])


def emit_wide_csv(matrix: TrafficMatrix, path) -> None:
    """Write the wide matrix CSV with ISO-8601 interval-start columns."""
    heads = [
        datetime.fromtimestamp(matrix.interval_start(t), tz=timezone.utc).isoformat()
        for t in range(matrix.n_intervals)
    ]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cell_id"] + heads)
        for i, c in enumerate(matrix.cells):
            writer.writerow([c.cell_id] + [repr(float(v)) for v in matrix.values[i]])


# ---------------------------------------------------------------------------
# Synthetic scenarios
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioSpec:
    """Synthetic scenario: layout, timeline, stable noise, and hotspots.

    Each column of the generated matrix is D_true @ s_t plus per-cell
    stable innovations; s_t has exactly `hotspot_count` nonzeros drawn as
    diurnal-profile-scaled magnitudes of stable variates, so hotspot load
    pulses over the day while background cells stay stationary.
    """

    n_cells: int
    n_intervals: int
    resolution_seconds: int
    service_label: str
    stable: StableParams
    hotspot_count: int
    dictionary_rank: int
    hotspot_gain: float = 5.0
    flat_profile: bool = False
    # per-interval volumes saturate at baseline + this many sigma: cells
    # have finite capacity, while sub-1 exponents would otherwise produce
    # astronomically large draws
    cap_sigmas: float = 300.0
    start_timestamp: int = 0
    center_latitude: float = 30.25
    center_longitude: float = 120.17
    half_extent_deg: float = 0.05

    def __post_init__(self):
        if self.n_cells < 1 or self.n_intervals < 1:
            raise ValueError("scenario needs at least one cell and one interval")
        if not (0 <= self.hotspot_count <= self.dictionary_rank <= self.n_cells):
            raise ValueError("need 0 <= hotspot_count <= dictionary_rank <= n_cells")
        if self.service_label not in SERVICE_LABELS:
            raise ValueError(f"service_label must be one of {SERVICE_LABELS}")


@dataclass(frozen=True)
class SyntheticTruth:
    """Ground truth behind a synthetic matrix, for oracle tests."""

    matrix: TrafficMatrix
    dictionary: np.ndarray  # N x R, unit-norm columns
    codes: np.ndarray  # R x T, exactly hotspot_count nonzero rows
    profile: np.ndarray  # T


def diurnal_profile(n_intervals: int, resolution_seconds: int) -> np.ndarray:
    """Two-peak daily shape (morning and evening), floor 0.1 of peak."""
    hours = (np.arange(n_intervals) * resolution_seconds / 3600.0) % 24.0
    bumps = np.exp(-((hours - 9.5) ** 2) / (2 * 2.5**2)) + 0.8 * np.exp(
        -((hours - 20.0) ** 2) / (2 * 3.0**2)
    )
    shape = bumps / bumps.max()
    return 0.1 + 0.9 * shape


def generate_synthetic_truth(spec: ScenarioSpec, seed: int) -> SyntheticTruth:
    """Deterministic synthetic matrix plus its generating structure."""
    rng = np.random.default_rng(seed)
    n, t = spec.n_cells, spec.n_intervals
    lat = spec.center_latitude + rng.uniform(-1, 1, n) * spec.half_extent_deg
    lon = spec.center_longitude + rng.uniform(-1, 1, n) * spec.half_extent_deg
    width = max(math.floor(math.log10(max(n, 1))) + 1, 3)
    cells = tuple(
        CellMeta(f"cell_{i:0{width}d}", float(lat[i]), float(lon[i])) for i in range(n)
    )

    profile = (
        np.ones(t)
        if spec.flat_profile
        else diurnal_profile(t, spec.resolution_seconds)
    )

    # spatial atoms: localized bumps around hotspot centers, unit-norm columns
    r = spec.dictionary_rank
    dictionary = np.zeros((n, max(r, 1)))
    if r > 0:
        centers = rng.choice(n, size=r, replace=False)
        length = 0.15 * spec.half_extent_deg
        for j, c in enumerate(centers):
            d2 = (lat - lat[c]) ** 2 + (lon - lon[c]) ** 2
            atom = np.exp(-d2 / (2 * length**2))
            dictionary[:, j] = atom / np.linalg.norm(atom)
    dictionary = dictionary[:, :r] if r > 0 else np.zeros((n, 0))

    cap = spec.cap_sigmas * spec.stable.sigma if spec.stable.sigma > 0 else np.inf

    codes = np.zeros((r, t))
    if spec.hotspot_count > 0:
        support = np.sort(rng.choice(r, size=spec.hotspot_count, replace=False))
        seeds = rng.integers(0, 2**63 - 1, size=spec.hotspot_count)
        for row, s in zip(support, seeds):
            draws = np.minimum(np.abs(stable_sample(spec.stable, t, int(s))), cap)
            codes[row, :] = spec.hotspot_gain * profile * draws

    # A deterministic floor load keeps the non-negativity clamp inactive for
    # the bulk of the draws, so each background cell's marginal stays an
    # exactly stable law (a shift does not move the quantile ratios).
    baseline = 3.0 * spec.stable.sigma
    innov_seed = int(rng.integers(0, 2**63 - 1))
    innovations = baseline + np.minimum(
        stable_sample(spec.stable, n * t, innov_seed).reshape(n, t), cap
    )
    values = np.maximum(dictionary @ codes + innovations, 0.0)
    matrix = TrafficMatrix(
        cells, spec.resolution_seconds, spec.start_timestamp, values, spec.service_label
    )
    return SyntheticTruth(matrix, dictionary, codes, profile)


def generate_synthetic(spec: ScenarioSpec, seed: int) -> TrafficMatrix:
    return generate_synthetic_truth(spec, seed).matrix


# ---------------------------------------------------------------------------
# Quantized CDF
# ---------------------------------------------------------------------------


def quantized_cdf(vector, levels: int):
    """Empirical CDF on a uniform quantization of [min, max].

    Returns (bin_uppers, cumulative); cumulative is non-decreasing and
    ends at 1.  A point-mass vector puts all mass in the first bin.
    """
    v = np.asarray(vector, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("vector must be non-empty")
    if levels < 2:
        raise ValueError("levels must be >= 2")
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        uppers = np.full(levels, hi)
        return uppers, np.ones(levels)
    uppers = lo + (hi - lo) * np.arange(1, levels + 1) / levels
    uppers[-1] = hi
    cumulative = np.searchsorted(np.sort(v), uppers, side="right") / v.size
    return uppers, cumulative
