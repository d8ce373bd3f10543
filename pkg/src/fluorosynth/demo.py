"""Write a synthetic stand-in database for the 14 tabulated toluene chemicals.

Measured spectra are not redistributable, so each chemical gets Gaussian-band
absorption and emission spectra placed around its excitation wavelength. The
epsilon, excitation wavelength, and quantum yield values are the tabulated
ones. Grids deliberately mix 0.25, 0.5 and 1.0 nm sampling and differing
ranges so ingestion has real resampling and padding to do.

    python -m fluorosynth.demo OUT_DIR [--n 14]
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

import numpy as np

from .spectral import Kind, Spectrum, WavelengthGrid, write_spectrum_csv

# name, solvent, epsilon (1/(M cm)) at lambda_ex (nm), quantum yield
TABLE_CHEMICALS = [
    ("5,10-Diaryl Chlorin", "Toluene", 89_100, 414.0, 0.260),
    ("5,10-Diaryl Mg-oxoChlorin", "Toluene", 191_000, 408.0, 0.100),
    ("5,10-Diaryl oxoChlorin", "Toluene", 174_000, 414.0, 0.130),
    ("5,10-Diaryl Zn-Chlorin", "Toluene", 186_000, 412.0, 0.083),
    ("5,10-Diaryl Zn-oxoChlorin", "Toluene", 209_000, 408.0, 0.040),
    ("Bis(5-mesityldiprinato)zinc", "Toluene", 115_000, 487.0, 0.360),
    ("Bis(5-phenyldiprinato)zinc", "Toluene", 115_000, 485.0, 0.006),
    ("Magnesium Octaethylporphyrin", "Toluene", 408_300, 410.0, 0.150),
    ("Magnesium Tetramesityporphyrin", "Toluene", 446_700, 426.5, 0.170),
    ("Magnesium Tetraphenylporphyrin", "Toluene", 22_000, 564.0, 0.150),
    ("Perylene-diimide", "Toluene", 44_000, 490.0, 0.97),
    ("Perylene-Monoimide", "Toluene", 32_000, 511.0, 0.86),
    ("Perylene-Monoimide(OR)3", "Toluene", 32_000, 479.0, 0.91),
    ("Perylene-Monoimide (OR)", "Toluene", 40_000, 507.0, 0.82),
]

_GRIDS = [  # (start, step, end) for absorption / emission files, cycled per chemical
    ((250.0, 0.25, 750.0), (450.0, 0.25, 800.0)),
    ((280.0, 0.5, 720.0), (430.0, 0.5, 790.0)),
    ((300.0, 1.0, 700.0), (420.0, 1.0, 780.0)),
]


def _bands(wl: np.ndarray, bands) -> np.ndarray:
    out = np.zeros_like(wl)
    for centre, fwhm, height in bands:
        sigma = fwhm / 2.3548
        out += height * np.exp(-0.5 * ((wl - centre) / sigma) ** 2)
    return out


def _band_layout(index: int, lambda_ex: float, rng: np.random.Generator):
    """(absorption bands, emission bands) as (centre nm, FWHM nm, height) lists."""
    jitter = lambda scale: float(rng.uniform(-scale, scale))  # noqa: E731
    if index <= 4:  # chlorins: Soret plus a strong red Q band
        q = 640 + jitter(15)
        ab = [(lambda_ex, 14 + jitter(3), 1.0), (q - 100, 18, 0.08 + jitter(0.03)),
              (q, 16, 0.25 + jitter(0.08)), (330 + jitter(15), 70, 0.15)]
        em = [(q + 8, 18, 1.0), (q + 70, 30, 0.2 + jitter(0.05))]
    elif index <= 6:  # dipyrrinato zinc: one broad visible band
        ab = [(lambda_ex, 28 + jitter(4), 1.0), (360 + jitter(10), 50, 0.2)]
        em = [(lambda_ex + 25 + jitter(5), 30, 1.0)]
    elif index <= 9:  # magnesium porphyrins: Soret plus weak Q bands
        soret = lambda_ex if index < 9 else 425.0
        ab = [(soret, 12 + jitter(2), 1.0), (525 + jitter(10), 18, 0.04),
              (564 + jitter(2) if index < 9 else 564.0, 16, 0.06),
              (605 + jitter(8), 16, 0.05), (320 + jitter(15), 60, 0.1)]
        em = [(610 + jitter(10), 14, 1.0), (665 + jitter(10), 20, 0.45)]
    else:  # perylenes: vibronic progression to the blue of the main band
        ab = [(lambda_ex, 16 + jitter(3), 1.0), (lambda_ex - 33, 16, 0.6),
              (lambda_ex - 68, 18, 0.22), (265 + jitter(10), 30, 0.3)]
        em = [(lambda_ex + 12, 18, 1.0), (lambda_ex + 48, 22, 0.55), (lambda_ex + 88, 26, 0.15)]
    return ab, em


def demo_records(n: int = len(TABLE_CHEMICALS), seed: int = 2024):
    """Yield (row, absorption Spectrum, emission Spectrum) for the first ``n`` chemicals."""
    if not 0 <= n <= len(TABLE_CHEMICALS):
        raise ValueError(f"n must be in [0, {len(TABLE_CHEMICALS)}]")
    for index, row in enumerate(TABLE_CHEMICALS[:n]):
        rng = np.random.default_rng([seed, index])
        ab_bands, em_bands = _band_layout(index, row[3], rng)
        out = []
        for (start, step, end), bands, kind in zip(
            _GRIDS[index % 3], (ab_bands, em_bands), (Kind.ABSORPTION, Kind.EMISSION)
        ):
            grid = WavelengthGrid(start, step, int(round((end - start) / step)) + 1)
            wl = grid.wavelengths()
            values = _bands(wl, bands)
            values = values / values.max() * float(rng.uniform(0.3, 1.2)) + 1e-4
            out.append(Spectrum(grid, values, kind))
        yield row, out[0], out[1]


def write_demo_database(out_dir: str | Path, n: int = len(TABLE_CHEMICALS)) -> Path:
    """Write ``manifest.json`` and spectrum CSVs under ``out_dir``; returns the manifest path."""
    out_dir = Path(out_dir)
    (out_dir / "spectra").mkdir(parents=True, exist_ok=True)
    manifest = []
    for index, (row, ab, em) in enumerate(demo_records(n)):
        name, solvent, eps, lam, qy = row
        ab_rel = f"spectra/chem{index + 1:02d}_abs.csv"
        em_rel = f"spectra/chem{index + 1:02d}_em.csv"
        write_spectrum_csv(ab, out_dir / ab_rel)
        write_spectrum_csv(em, out_dir / em_rel)
        manifest.append({
            "name": name,
            "solvent": solvent,
            "epsilon_per_M_cm": eps,
            "lambda_ex_nm": lam,
            "quantum_yield": qy,
            "absorption_csv": ab_rel,
            "emission_csv": em_rel,
        })
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="python -m fluorosynth.demo", description=__doc__.split("\n")[0])
    parser.add_argument("out_dir")
    parser.add_argument("--n", type=int, default=len(TABLE_CHEMICALS), help="number of chemicals")
    args = parser.parse_args(argv)
    print(write_demo_database(args.out_dir, args.n))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
