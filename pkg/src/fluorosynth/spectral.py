"""Wavelength grids, spectra, and the grid arithmetic shared by every other module."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

PAD_VALUE = 1.0e-20
CANONICAL_STEP = 0.5
# Tolerance for deciding that two wavelengths (nm) coincide.
_WL_TOL = 1e-6


class SpectrumError(ValueError):
    """Raised for malformed spectra, grids, or spectrum files."""


class Kind(str, enum.Enum):
    ABSORPTION = "absorption"
    EMISSION = "emission"


@dataclass(frozen=True)
class WavelengthGrid:
    start: float
    step: float
    count: int

    def __post_init__(self) -> None:
        if not self.step > 0:
            raise SpectrumError(f"grid step must be positive, got {self.step}")
        if self.count < 2:
            raise SpectrumError(f"grid needs at least 2 points, got {self.count}")

    @property
    def end(self) -> float:
        return self.start + (self.count - 1) * self.step

    @property
    def span(self) -> float:
        return (self.count - 1) * self.step

    def wavelengths(self) -> np.ndarray:
        return self.start + np.arange(self.count) * self.step

    def index_of(self, wavelength: float) -> int:
        """0-based index of ``wavelength``; it must sit on a grid point."""
        pos = (wavelength - self.start) / self.step
        k = int(round(pos))
        if abs(pos - k) * self.step > _WL_TOL or not 0 <= k < self.count:
            raise SpectrumError(
                f"{wavelength} nm is not a point of the grid "
                f"[{self.start}, {self.end}] step {self.step}"
            )
        return k

    def is_aligned(self, step: float = CANONICAL_STEP) -> bool:
        """True when the grid has ``step`` and its points are multiples of it."""
        if abs(self.step - step) > 1e-12:
            return False
        phase = self.start / step
        return abs(phase - round(phase)) * step <= _WL_TOL


@dataclass(frozen=True, eq=False)
class Spectrum:
    grid: WavelengthGrid
    values: np.ndarray = field(repr=False)
    kind: Kind = Kind.ABSORPTION

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.shape[0] != self.grid.count:
            raise SpectrumError(
                f"expected {self.grid.count} values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise SpectrumError("spectrum values must be finite")
        if np.any(values < 0):
            raise SpectrumError("spectrum values must be nonnegative")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "kind", Kind(self.kind))

    def __len__(self) -> int:
        return self.grid.count

    def with_values(self, values: np.ndarray) -> Spectrum:
        return Spectrum(self.grid, values, self.kind)

    def value_at(self, wavelength: float) -> float:
        return float(self.values[self.grid.index_of(wavelength)])

    def wavelengths(self) -> np.ndarray:
        return self.grid.wavelengths()


def resample(s: Spectrum, target_step: float) -> Spectrum:
    """Resample onto ``target_step`` over the same span.

    Integer step ratios decimate (exact picks of input samples); anything else
    is linearly interpolated. The output starts at ``s.grid.start`` and ends at
    the last target point not past the input end.
    """
    if not target_step > 0:
        raise SpectrumError(f"target step must be positive, got {target_step}")
    grid = s.grid
    if grid.span + _WL_TOL < target_step:
        raise SpectrumError("degenerate span: shorter than one target step")
    count = int(math.floor(grid.span / target_step + 1e-9)) + 1
    out_grid = WavelengthGrid(grid.start, float(target_step), count)

    ratio = target_step / grid.step
    r = int(round(ratio))
    if r >= 1 and abs(ratio - r) < 1e-9:
        return Spectrum(out_grid, s.values[::r][:count].copy(), s.kind)

    # Interpolate on fractional sample position so grid offsets cancel exactly.
    pos = np.arange(count) * (target_step / grid.step)
    pos = np.minimum(pos, grid.count - 1)
    lo = np.minimum(np.floor(pos).astype(int), grid.count - 2)
    frac = pos - lo
    v = s.values
    values = v[lo] + frac * (v[lo + 1] - v[lo])
    # Exact hits keep the sample value bit-for-bit.
    hit = frac == 0.0
    values[hit] = v[lo[hit]]
    hit1 = frac == 1.0
    values[hit1] = v[lo[hit1] + 1]
    return Spectrum(out_grid, values, s.kind)


def pad_to_range(s: Spectrum, global_start: float, global_end: float) -> Spectrum:
    """Extend ``s`` to [global_start, global_end], filling new points with PAD_VALUE."""
    grid = s.grid
    if not grid.is_aligned():
        raise SpectrumError(
            f"grid phase misaligned: start {grid.start} step {grid.step} "
            f"is not on the {CANONICAL_STEP} nm lattice"
        )
    lead = (grid.start - global_start) / grid.step
    total = (global_end - global_start) / grid.step
    if abs(lead - round(lead)) > 1e-6 or abs(total - round(total)) > 1e-6:
        raise SpectrumError(
            f"global range [{global_start}, {global_end}] is misaligned with the grid"
        )
    lead, total = int(round(lead)), int(round(total)) + 1
    if lead < 0 or lead + grid.count > total:
        raise SpectrumError(
            f"global range [{global_start}, {global_end}] does not contain "
            f"[{grid.start}, {grid.end}]"
        )
    values = np.full(total, PAD_VALUE)
    values[lead : lead + grid.count] = s.values
    return Spectrum(WavelengthGrid(float(global_start), grid.step, total), values, s.kind)


def restrict(s: Spectrum, start: float, end: float) -> Spectrum:
    """Sub-spectrum on [start, end]; both ends must be grid points."""
    i, j = s.grid.index_of(start), s.grid.index_of(end)
    if j <= i:
        raise SpectrumError(f"empty restriction [{start}, {end}]")
    grid = WavelengthGrid(float(s.grid.wavelengths()[i]), s.grid.step, j - i + 1)
    return Spectrum(grid, s.values[i : j + 1].copy(), s.kind)


def normalize_sum(s: Spectrum) -> Spectrum:
    total = float(np.sum(s.values))
    if not total > 0:
        raise SpectrumError("null spectrum: values sum to zero")
    return s.with_values(s.values / total)


def normalize_max(s: Spectrum) -> Spectrum:
    peak = float(np.max(s.values))
    if not peak > 0:
        raise SpectrumError("null spectrum: maximum is zero")
    return s.with_values(s.values / peak)


def add_spectra(terms: Iterable[tuple[Spectrum, float]]) -> Spectrum:
    """Weighted elementwise sum of spectra on an identical grid."""
    terms = list(terms)
    if not terms:
        raise SpectrumError("nothing to add")
    first = terms[0][0]
    acc = np.zeros(first.grid.count)
    for s, w in terms:
        if s.grid != first.grid:
            raise SpectrumError(f"grid mismatch: {s.grid} vs {first.grid}")
        if s.kind != first.kind:
            raise SpectrumError(f"kind mismatch: {s.kind.value} vs {first.kind.value}")
        if w < 0:
            raise SpectrumError(f"weights must be nonnegative, got {w}")
        acc += w * s.values
    return first.with_values(acc)


def grid_from_wavelengths(wavelengths: Sequence[float], *, source: str = "") -> WavelengthGrid:
    wl = np.asarray(wavelengths, dtype=float)
    where = f" in {source}" if source else ""
    if wl.size < 2:
        raise SpectrumError(f"need at least 2 samples{where}")
    steps = np.diff(wl)
    step = float(steps[0])
    if step <= 0 or np.any(np.abs(steps - step) > 1e-6 * max(1.0, step)):
        raise SpectrumError(f"wavelengths must be ascending and uniformly spaced{where}")
    # Snap to the nearest thousandth of a nm to absorb text round-off.
    return WavelengthGrid(round(float(wl[0]), 6), round(step, 9), int(wl.size))


def read_spectrum_csv(path: str | Path, kind: Kind | str = Kind.ABSORPTION) -> Spectrum:
    """Read a ``wavelength_nm,value`` CSV file."""
    path = Path(path)
    wavelengths: list[float] = []
    values: list[float] = []
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise SpectrumError(f"cannot open spectrum file {path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["wavelength_nm", "value"]:
            raise SpectrumError(f"{path}:1: expected header 'wavelength_nm,value'")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise SpectrumError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            try:
                wl, val = float(row[0]), float(row[1])
            except ValueError:
                raise SpectrumError(f"{path}:{lineno}: non-numeric field in {row!r}") from None
            if not (math.isfinite(wl) and math.isfinite(val)) or val < 0:
                raise SpectrumError(f"{path}:{lineno}: invalid value in {row!r}")
            wavelengths.append(wl)
            values.append(val)
    grid = grid_from_wavelengths(wavelengths, source=str(path))
    return Spectrum(grid, np.array(values), kind)


def format_float(x: float) -> str:
    return repr(float(x))


def spectrum_csv_text(s: Spectrum) -> str:
    lines = ["wavelength_nm,value"]
    lines.extend(
        f"{format_float(w)},{format_float(v)}" for w, v in zip(s.wavelengths(), s.values)
    )
    return "\n".join(lines) + "\n"


def write_spectrum_csv(s: Spectrum, path: str | Path) -> None:
    Path(path).write_text(spectrum_csv_text(s), encoding="utf-8")
