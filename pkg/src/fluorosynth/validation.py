"""Monte-Carlo measurement of noise models against the five distribution guidelines.

Guidelines checked:

    g1  the noise level is random per designed window
    g2  dilation and compression both occur within single noise vectors
    g3  spread of element deltas grows with eta (sweeps only)
    g4  element deltas are symmetric around zero
    g5  whole-vector deltas are symmetric around zero
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .chemdb import ChemicalRecord, MixtureSpec, mixture_absorption, synthesize_sample
from .noise import MODELS, NoiseParams, noise_multiplier
from .spectral import SpectrumError, format_float
from .streams import substream
from .windows import build_plan

DEFAULT_CONCENTRATION = 1e-7
MEAN_GATE = 0.02
SKEW_GATE = 0.5
RANDOM_WINDOW_MODELS = ("failure", "optimized")

PASS, FAIL, NOT_EVALUATED = "pass", "fail", "not_evaluated"


def element_deltas(values: np.ndarray, multiplier: np.ndarray) -> np.ndarray:
    """Per-element change of the max-normalized spectrum."""
    values = np.asarray(values, dtype=float)
    multiplier = np.asarray(multiplier, dtype=float)
    if values.shape != multiplier.shape:
        raise ValueError(f"length mismatch: {values.shape} vs {multiplier.shape}")
    peak = np.max(values)
    if not peak > 0:
        raise SpectrumError("null spectrum")
    n = values / peak
    return multiplier * n - n


def vector_delta(values: np.ndarray, multiplier: np.ndarray) -> float:
    """Total change of the sum-normalized spectrum."""
    values = np.asarray(values, dtype=float)
    multiplier = np.asarray(multiplier, dtype=float)
    if values.shape != multiplier.shape:
        raise ValueError(f"length mismatch: {values.shape} vs {multiplier.shape}")
    total = np.sum(values)
    if not total > 0:
        raise SpectrumError("null spectrum")
    n = values / total
    return float(np.sum(multiplier * n - n))


@dataclass(frozen=True)
class Summary:
    count: int
    mean: float
    std: float
    skewness: float
    fraction_positive: float

    @classmethod
    def of(cls, data: np.ndarray) -> Summary:
        x = np.asarray(data, dtype=float).ravel()
        if x.size == 0:
            return cls(0, 0.0, 0.0, 0.0, 0.0)
        mean = float(np.mean(x))
        centred = x - mean
        m2 = float(np.mean(centred**2))
        m3 = float(np.mean(centred**3))
        skew = m3 / m2**1.5 if m2 > 0 else 0.0
        return cls(x.size, mean, m2**0.5, skew, float(np.mean(x > 0)))

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "mean": self.mean,
            "std": self.std,
            "skewness": self.skewness,
            "fraction_positive": self.fraction_positive,
        }


@dataclass(eq=False)
class IntensityStudy:
    """Raw and summarized intensity displacements of one (model, params) run.

    ``delta_element`` has one row per sample. The element summary skips exact
    zeros, which are the untouched samples outside every peak neighbourhood.
    """

    model: str
    params: NoiseParams
    n_samples: int
    codes: np.ndarray
    delta_element: np.ndarray
    delta_vector: np.ndarray
    n_mixed: int  # samples whose multiplier both raises and lowers some element
    summary_element: Summary = field(init=False)
    summary_vector: Summary = field(init=False)

    def __post_init__(self) -> None:
        self.summary_element = Summary.of(self.nonzero_element_deltas())
        self.summary_vector = Summary.of(self.delta_vector)

    def nonzero_element_deltas(self) -> np.ndarray:
        d = self.delta_element.ravel()
        return d[d != 0]


def run_study(
    db: Sequence[ChemicalRecord],
    model: str,
    params: NoiseParams,
    n_samples: int,
    *,
    seed: int | None = None,
    concentration: float = DEFAULT_CONCENTRATION,
    lambda_ex: float | None = None,
    kind: str = "absorption",
) -> IntensityStudy:
    """Apply ``model`` to ``n_samples`` random mixtures and record the displacements.

    Mixture codes come from stream (seed, 0); sample i's noise from stream
    (seed, 1, i). The seed defaults to ``params.seed``.
    """
    if not db:
        raise ValueError("study needs a nonempty database")
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    if model not in MODELS:
        raise ValueError(f"unknown noise model {model!r}")
    if kind not in ("absorption", "emission"):
        raise ValueError(f"kind must be absorption or emission, got {kind!r}")
    seed = params.seed if seed is None else seed
    n = len(db)
    codes = substream(seed, 0).integers(1, 1 << n, size=n_samples)

    n_points = db[0].absorption.grid.count
    d_elem = np.empty((n_samples, n_points))
    d_vec = np.empty(n_samples)
    n_mixed = 0
    for i, code in enumerate(codes):
        spec = MixtureSpec.uniform(int(code), n, concentration, lambda_ex=lambda_ex)
        try:
            if kind == "absorption":
                values = mixture_absorption(db, spec).values
            else:
                values = synthesize_sample(db, spec)[1].values
            plan = build_plan(values, params.window_len, params.alpha)
            m = noise_multiplier(model, plan, params, substream(seed, 1, i))
            d_elem[i] = element_deltas(values, m)
            d_vec[i] = vector_delta(values, m)
        except (ValueError, SpectrumError) as exc:
            raise type(exc)(f"sample {i} (code {spec.binary}): {exc}") from None
        n_mixed += bool(np.any(m > 1.0) and np.any(m < 1.0))
    return IntensityStudy(model, params, n_samples, codes, d_elem, d_vec, n_mixed)


def run_sweep(
    db: Sequence[ChemicalRecord],
    model: str,
    params: NoiseParams,
    etas: Sequence[float],
    n_samples: int,
    **kw,
) -> list[IntensityStudy]:
    """One study per eta, all sharing the same seed and hence the same mixtures."""
    return [run_study(db, model, params.replace(eta=float(e)), n_samples, **kw) for e in etas]


@dataclass(frozen=True)
class HistogramReport:
    edges: np.ndarray
    counts: np.ndarray
    underflow: int
    overflow: int

    @property
    def total(self) -> int:
        return int(self.counts.sum()) + self.underflow + self.overflow

    def csv_text(self) -> str:
        rows = ["bin_low,bin_high,count"]
        rows += [
            f"{format_float(lo)},{format_float(hi)},{int(c)}"
            for lo, hi, c in zip(self.edges[:-1], self.edges[1:], self.counts)
        ]
        return "\n".join(rows) + "\n"


def histogram(data, n_bins: int, value_range: tuple[float, float]) -> HistogramReport:
    """Uniform bins over [low, high); the last bin also includes ``high``."""
    low, high = value_range
    if n_bins < 1:
        raise ValueError(f"n_bins must be >= 1, got {n_bins}")
    if not low < high:
        raise ValueError(f"empty range [{low}, {high}]")
    x = np.asarray(data, dtype=float).ravel()
    counts, edges = np.histogram(x, bins=n_bins, range=(low, high))
    return HistogramReport(
        edges=edges,
        counts=counts,
        underflow=int(np.sum(x < low)),
        overflow=int(np.sum(x > high)),
    )


def symmetric_range(data: np.ndarray) -> tuple[float, float]:
    x = np.asarray(data, dtype=float)
    m = float(np.max(np.abs(x))) if x.size else 0.0
    m = m if m > 0 else 1.0
    return -m, m


def _gate(s: Summary, mean_gate: float, skew_gate: float) -> bool:
    return abs(s.mean) <= mean_gate and abs(s.skewness) <= skew_gate


def guideline_report(
    studies: IntensityStudy | Sequence[IntensityStudy],
    *,
    mean_gate: float = MEAN_GATE,
    skew_gate: float = SKEW_GATE,
) -> dict[str, str]:
    """Pass/fail per guideline. A list of studies is read as an eta sweep."""
    if isinstance(studies, IntensityStudy):
        studies = [studies]
    studies = list(studies)
    if not studies:
        raise ValueError("no studies to report on")
    verdict = lambda ok: PASS if ok else FAIL  # noqa: E731

    report = {"g1": verdict(all(s.model in RANDOM_WINDOW_MODELS for s in studies))}
    report["g2"] = verdict(all(s.n_mixed > 0 for s in studies if s.params.eta > 0)
                           and any(s.params.eta > 0 for s in studies))
    if len(studies) < 2:
        report["g3"] = NOT_EVALUATED
    else:
        ordered = sorted(studies, key=lambda s: s.params.eta)
        stds = [s.summary_element.std for s in ordered]
        report["g3"] = verdict(all(a < b for a, b in zip(stds, stds[1:])))
    report["g4"] = verdict(all(_gate(s.summary_element, mean_gate, skew_gate) for s in studies))
    report["g5"] = verdict(all(_gate(s.summary_vector, mean_gate, skew_gate) for s in studies))
    return report


def study_report(
    studies: IntensityStudy | Sequence[IntensityStudy], guidelines: dict[str, str]
) -> dict:
    """JSON-ready report; sweeps list one summary per eta."""
    single = isinstance(studies, IntensityStudy)
    studies = [studies] if single else list(studies)
    first = studies[0]
    out = {
        "model": first.model,
        "params": first.params.to_dict(),
        "n_samples": first.n_samples,
    }
    if single:
        out["summary_element"] = first.summary_element.to_dict()
        out["summary_vector"] = first.summary_vector.to_dict()
    else:
        out["etas"] = [s.params.eta for s in studies]
        out["summary_element"] = [s.summary_element.to_dict() for s in studies]
        out["summary_vector"] = [s.summary_vector.to_dict() for s in studies]
    out["guidelines"] = guidelines
    return out
