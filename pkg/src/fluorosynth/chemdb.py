"""Chemical records, Beer-Lambert scaling, quantum-yield emission, and mixtures."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .spectral import (
    CANONICAL_STEP,
    PAD_VALUE,
    Kind,
    Spectrum,
    SpectrumError,
    add_spectra,
    normalize_sum,
    pad_to_range,
    read_spectrum_csv,
    resample,
)

PATHLENGTH_CM = 1.0
# Above this the additivity assumption (no inner-filter effect) is doubtful.
CONCENTRATION_LIMIT_M = 1e-6
MAX_CHEMICALS = 24
DEFAULT_RANGE = (200.0, 800.0)


class ManifestError(ValueError):
    """A manifest or chemical record failed validation."""


class ConcentrationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ChemicalRecord:
    name: str
    solvent: str
    epsilon: float
    lambda_ex: float
    quantum_yield: float
    absorption: Spectrum
    emission: Spectrum

    def __post_init__(self) -> None:
        def bad(fld: str, why: str) -> ManifestError:
            return ManifestError(f"record {self.name!r}: field {fld!r} {why}")

        if not (isinstance(self.epsilon, (int, float)) and self.epsilon > 0):
            raise bad("epsilon_per_M_cm", f"must be > 0, got {self.epsilon!r}")
        if not (isinstance(self.quantum_yield, (int, float)) and 0 < self.quantum_yield <= 1):
            raise bad("quantum_yield", f"must be in (0, 1], got {self.quantum_yield!r}")
        grid = self.absorption.grid
        if not grid.start - 1e-9 <= self.lambda_ex <= grid.end + 1e-9:
            raise bad(
                "lambda_ex_nm",
                f"{self.lambda_ex} nm lies outside the absorption grid [{grid.start}, {grid.end}]",
            )
        try:
            anchor = self.absorption.value_at(self.lambda_ex)
        except SpectrumError as exc:
            raise bad("lambda_ex_nm", str(exc)) from None
        if anchor <= PAD_VALUE:
            raise bad("lambda_ex_nm", f"{self.lambda_ex} nm has no measured absorbance (padding)")
        if self.absorption.grid != self.emission.grid:
            raise bad("emission_csv", "emission grid differs from absorption grid")


@dataclass(frozen=True)
class MixtureSpec:
    """Label for one generated sample.

    ``concentrations`` holds one molar value per present chemical, in ascending
    bit order. ``lambda_ex`` of None means each chemical is excited at its own
    tabulated wavelength.
    """

    code: int
    n_chemicals: int
    concentrations: tuple[float, ...]
    lambda_ex: float | None = None
    incident_intensity: float = 1.0
    pathlength: float = PATHLENGTH_CM

    def __post_init__(self) -> None:
        if not 0 < self.code < (1 << self.n_chemicals):
            raise ValueError(f"code {self.code} needs 1..{self.n_chemicals} set bits")
        if len(self.concentrations) != self.code.bit_count():
            raise ValueError(
                f"code {self.binary} has {self.code.bit_count()} chemicals but "
                f"{len(self.concentrations)} concentrations were given"
            )
        if any(not c > 0 for c in self.concentrations):
            raise ValueError("concentrations must be > 0")
        if not self.incident_intensity > 0:
            raise ValueError("incident intensity must be > 0")
        if self.pathlength != PATHLENGTH_CM:
            raise ValueError("pathlength is fixed at 1 cm")
        if any(c >= CONCENTRATION_LIMIT_M for c in self.concentrations):
            warnings.warn(
                f"concentration >= {CONCENTRATION_LIMIT_M} M breaks the additivity assumption",
                ConcentrationWarning,
                stacklevel=3,
            )

    @property
    def binary(self) -> str:
        return code_binary(self.code, self.n_chemicals)

    def present(self) -> list[int]:
        """0-based indices of present chemicals (bit 1 is index 0)."""
        return code_members(self.code)

    @classmethod
    def uniform(cls, code: int, n_chemicals: int, concentration: float, **kw) -> MixtureSpec:
        return cls(code, n_chemicals, (concentration,) * code.bit_count(), **kw)


def code_binary(code: int, n: int) -> str:
    """Zero-padded binary string; chemical 1 is the rightmost bit."""
    return format(code, f"0{n}b")


def code_members(code: int) -> list[int]:
    return [j for j in range(code.bit_length()) if code >> j & 1]


def _load_record(entry: Mapping, base: Path, global_range: tuple[float, float]) -> ChemicalRecord:
    name = entry.get("name")
    if not isinstance(name, str) or not name:
        raise ManifestError(f"record without a valid 'name': {entry!r}")
    required = (
        "solvent",
        "epsilon_per_M_cm",
        "lambda_ex_nm",
        "quantum_yield",
        "absorption_csv",
        "emission_csv",
    )
    for key in required:
        if key not in entry:
            raise ManifestError(f"record {name!r}: missing field {key!r}")
    for key in ("epsilon_per_M_cm", "lambda_ex_nm", "quantum_yield"):
        if isinstance(entry[key], bool) or not isinstance(entry[key], (int, float)):
            raise ManifestError(f"record {name!r}: field {key!r} must be a number")

    def spectrum(key: str, kind: Kind) -> Spectrum:
        try:
            s = read_spectrum_csv(base / entry[key], kind)
            s = resample(s, CANONICAL_STEP)
            return pad_to_range(s, *global_range)
        except SpectrumError as exc:
            raise ManifestError(f"record {name!r}: field {key!r}: {exc}") from None

    return ChemicalRecord(
        name=name,
        solvent=str(entry["solvent"]),
        epsilon=float(entry["epsilon_per_M_cm"]),
        lambda_ex=float(entry["lambda_ex_nm"]),
        quantum_yield=float(entry["quantum_yield"]),
        absorption=spectrum("absorption_csv", Kind.ABSORPTION),
        emission=spectrum("emission_csv", Kind.EMISSION),
    )


def load_manifest(
    path: str | Path, global_range: tuple[float, float] = DEFAULT_RANGE
) -> list[ChemicalRecord]:
    """Load and validate every record of a JSON manifest.

    Spectrum paths are resolved relative to the manifest's directory. Spectra
    are resampled to 0.5 nm and padded to ``global_range``.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc.strerror}") from exc
    try:
        entries = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    if not isinstance(entries, list):
        raise ManifestError(f"{path}: manifest must be a JSON array of records")
    records = [_load_record(e, path.parent, global_range) for e in entries]
    names = [r.name for r in records]
    if len(set(names)) != len(names):
        raise ManifestError(f"{path}: duplicate chemical names")
    return records


def scale_to_molar_absorptivity(rec: ChemicalRecord, concentration: float) -> Spectrum:
    """Scale the measured absorbance so its value at lambda_ex is epsilon * C (b = 1 cm)."""
    if not concentration > 0:
        raise ValueError(f"concentration must be > 0, got {concentration}")
    anchor = rec.absorption.value_at(rec.lambda_ex)
    if anchor <= PAD_VALUE:
        raise SpectrumError("epsilon anchor on padded region")
    factor = rec.epsilon / anchor
    return rec.absorption.with_values(rec.absorption.values * factor * concentration)


def emission_spectrum(
    rec: ChemicalRecord, s_ab: Spectrum, lambda_ex: float, incident_intensity: float
) -> Spectrum:
    """Emission whose total equals S_Ab(lambda_ex) * quantum yield * I_o."""
    if not incident_intensity > 0:
        raise ValueError(f"incident intensity must be > 0, got {incident_intensity}")
    absorbed = s_ab.value_at(lambda_ex)
    if absorbed <= PAD_VALUE:
        raise SpectrumError(f"no absorption at {lambda_ex} nm (padding floor)")
    shape = normalize_sum(rec.emission)
    return shape.with_values(shape.values * (absorbed * rec.quantum_yield * incident_intensity))


def enumerate_mixtures(
    n: int, k: int | None = None, *, ceiling: int = MAX_CHEMICALS
) -> list[int]:
    """All nonzero presence codes for ``n`` chemicals, ascending.

    With ``k`` only codes with exactly ``k`` chemicals are returned.
    """
    if n < 1:
        raise ValueError(f"need at least one chemical, got n={n}")
    if n > ceiling:
        raise ValueError(
            f"n={n} exceeds the enumeration ceiling of {ceiling}; "
            f"pass a larger ceiling to enumerate 2**{n} - 1 codes"
        )
    if k is not None and not 1 <= k <= n:
        raise ValueError(f"subset size k must be in [1, {n}], got {k}")
    codes = range(1, 1 << n)
    if k is None:
        return list(codes)
    return [c for c in codes if c.bit_count() == k]


def _check_spec(db: Sequence[ChemicalRecord], spec: MixtureSpec) -> None:
    if spec.n_chemicals != len(db):
        raise ValueError(
            f"code length {spec.n_chemicals} does not match database size {len(db)}"
        )


def mixture_absorption(db: Sequence[ChemicalRecord], spec: MixtureSpec) -> Spectrum:
    _check_spec(db, spec)
    parts = []
    for j, c in zip(spec.present(), spec.concentrations):
        try:
            parts.append((scale_to_molar_absorptivity(db[j], c), 1.0))
        except (ValueError, SpectrumError) as exc:
            raise type(exc)(f"{db[j].name}: {exc}") from None
    return add_spectra(parts)


def synthesize_sample(
    db: Sequence[ChemicalRecord], spec: MixtureSpec
) -> tuple[Spectrum, Spectrum]:
    """Absorption and emission spectra of a mixture, summed over present chemicals."""
    _check_spec(db, spec)
    absorption, emission = [], []
    for j, c in zip(spec.present(), spec.concentrations):
        rec = db[j]
        lam = rec.lambda_ex if spec.lambda_ex is None else spec.lambda_ex
        try:
            s_ab = scale_to_molar_absorptivity(rec, c)
            s_em = emission_spectrum(rec, s_ab, lam, spec.incident_intensity)
        except (ValueError, SpectrumError) as exc:
            raise type(exc)(f"{rec.name}: {exc}") from None
        absorption.append((s_ab, 1.0))
        emission.append((s_em, 1.0))
    return add_spectra(absorption), add_spectra(emission)


def record_to_entry(rec: ChemicalRecord, absorption_csv: str, emission_csv: str) -> dict:
    return {
        "name": rec.name,
        "solvent": rec.solvent,
        "epsilon_per_M_cm": rec.epsilon,
        "lambda_ex_nm": rec.lambda_ex,
        "quantum_yield": rec.quantum_yield,
        "absorption_csv": absorption_csv,
        "emission_csv": emission_csv,
    }


__all__ = [
    "ChemicalRecord",
    "ConcentrationWarning",
    "ManifestError",
    "MixtureSpec",
    "code_binary",
    "code_members",
    "emission_spectrum",
    "enumerate_mixtures",
    "load_manifest",
    "mixture_absorption",
    "scale_to_molar_absorptivity",
    "synthesize_sample",
]
