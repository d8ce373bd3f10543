"""Peak-correlated multiplicative noise plus simple instrument perturbations.

Every model produces a multiplier vector m over the spectrum; the noisy
spectrum is m * s. Randomness is drawn once per designed segment, never per
sample, and always as whole arrays indexed by segment number so a segment's
draw does not depend on how the others are visited.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, fields
from typing import Callable

import numpy as np

from .spectral import PAD_VALUE, Kind, Spectrum, SpectrumError
from .windows import (
    HANNING,
    LEFT_TUKEY,
    ONES,
    RIGHT_TUKEY,
    TUKEY,
    WindowPlan,
    build_plan,
    cached_window,
    foundation,
    tukey_regions,
)

MODELS = ("dilate", "compress", "failure", "optimized")


class ConstraintWarning(UserWarning):
    pass


class TargetUnreachable(UserWarning):
    pass


@dataclass(frozen=True)
class NoiseParams:
    eta: float = 0.1
    alpha: float = 1.0
    window_len: int = 100
    p: float = 0.33
    a_c1: float = 0.5
    a_c2: float = 0.5
    a_c3: float = 0.5
    a_d1: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("eta", "alpha", "p"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        for name in ("a_c1", "a_c2", "a_c3", "a_d1"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be a nonnegative number, got {v}")
        if int(self.window_len) != self.window_len or self.window_len < 2:
            raise ValueError(f"window_len must be an integer >= 2, got {self.window_len}")

    def replace(self, **changes) -> NoiseParams:
        return NoiseParams(**{**asdict(self), **changes})

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> NoiseParams:
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})


# ---------------------------------------------------------------------------
# Segment-level building blocks (broadcast over leading realization axes)


def dilation_peak(hann: np.ndarray, eta: float, a_d1: float, x1) -> np.ndarray:
    return (a_d1 * x1 * eta) * hann + 1.0


def compression_peak(hann: np.ndarray, eta: float, a_c1, a_c2, a_c3, x2, x3) -> np.ndarray:
    return (a_c1 * x2 * eta) * hann + (1.0 - a_c2 * eta + a_c3 * eta * x3)


def blend(w: np.ndarray, edge) -> np.ndarray:
    """Affine map taking w = 1 to 1 and w = 0 to ``edge``."""
    return w * (1.0 - edge) + edge


# ---------------------------------------------------------------------------
# Multipliers


def dilation_multiplier(plan: WindowPlan, eta: float) -> np.ndarray:
    m = np.ones(plan.n)
    hann = cached_window(HANNING, plan.window_len, plan.alpha)
    for i in np.flatnonzero(plan.cases[:-1] == HANNING) + 1:
        m[plan.segment_slice(i)] = eta * hann + 1.0
    return m


def compression_multiplier(plan: WindowPlan, eta: float) -> np.ndarray:
    jf = foundation(plan)
    m = 1.0 - eta * (1.0 - jf)
    m[plan.segment_slice(plan.n_windows + 1)] = 1.0
    return m


def failure_multiplier(plan: WindowPlan, eta: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform-scaled Hanning on peaks, shifted tapers beside them.

    Draws one X ~ U[0, 1] per designed segment.
    """
    x = rng.random(plan.n_windows)
    m = np.ones(plan.n)
    for i, case in enumerate(plan.cases[:-1], start=1):
        if case == ONES:
            continue
        w = cached_window(int(case), plan.window_len, plan.alpha)
        scale = eta * x[i - 1] if case == HANNING else eta
        m[plan.segment_slice(i)] = scale * w + (1.0 - eta / 2)
    return m


@dataclass(frozen=True)
class OptimizedDraws:
    """Per-segment random draws of the optimized model, in draw order."""

    compress: np.ndarray  # Bernoulli(p) indicator, 1 = compression
    x1: np.ndarray
    x2: np.ndarray
    x3: np.ndarray

    @classmethod
    def draw(cls, rng: np.random.Generator, n_windows: int, p: float) -> OptimizedDraws:
        u = rng.random(n_windows)
        x1 = rng.random(n_windows)
        x2 = rng.random(n_windows)
        x3 = rng.random(n_windows)
        return cls(u < p, x1, x2, x3)


def optimized_multiplier(
    plan: WindowPlan,
    params: NoiseParams,
    rng: np.random.Generator | None = None,
    *,
    draws: OptimizedDraws | None = None,
) -> np.ndarray:
    """Bernoulli mix of compression and dilation peaks with continuous tapers."""
    if not 0.0 <= params.p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {params.p}")
    if draws is None:
        if rng is None:
            raise ValueError("need an rng or explicit draws")
        draws = OptimizedDraws.draw(rng, plan.n_windows, params.p)
    L, eta = plan.window_len, params.eta
    hann = cached_window(HANNING, L, plan.alpha)
    m = np.ones(plan.n)
    peaks: dict[int, np.ndarray] = {}
    for i in np.flatnonzero(plan.cases[:-1] == HANNING) + 1:
        k = i - 1
        if draws.compress[k]:
            w = compression_peak(
                hann, eta, params.a_c1, params.a_c2, params.a_c3, draws.x2[k], draws.x3[k]
            )
        else:
            w = dilation_peak(hann, eta, params.a_d1, draws.x1[k])
        peaks[i] = w
        m[plan.segment_slice(i)] = w

    rise, fall = tukey_regions(L, plan.alpha)
    for i, case in enumerate(plan.cases[:-1], start=1):
        if case not in (TUKEY, LEFT_TUKEY, RIGHT_TUKEY):
            continue
        w = cached_window(int(case), L, plan.alpha).copy()
        if case in (TUKEY, LEFT_TUKEY):
            w[rise] = blend(w[rise], peaks[i - 1][-1])
        if case in (TUKEY, RIGHT_TUKEY):
            w[fall] = blend(w[fall], peaks[i + 1][0])
        m[plan.segment_slice(i)] = w
    return m


def noise_multiplier(
    model: str, plan: WindowPlan, params: NoiseParams, rng: np.random.Generator
) -> np.ndarray:
    if model == "dilate":
        return dilation_multiplier(plan, params.eta)
    if model == "compress":
        return compression_multiplier(plan, params.eta)
    if model == "failure":
        return failure_multiplier(plan, params.eta, rng)
    if model == "optimized":
        return optimized_multiplier(plan, params, rng)
    raise ValueError(f"unknown noise model {model!r}; choose from {', '.join(MODELS)}")


# ---------------------------------------------------------------------------
# Spectrum-level wrappers


def _apply(s: Spectrum, m: np.ndarray) -> Spectrum:
    if m.shape != s.values.shape:
        raise SpectrumError(f"multiplier length {m.size} != spectrum length {len(s)}")
    return s.with_values(m * s.values)


def dilation_noise(s: Spectrum, plan: WindowPlan, eta: float) -> Spectrum:
    return _apply(s, dilation_multiplier(plan, eta))


def compression_noise(s: Spectrum, plan: WindowPlan, eta: float) -> Spectrum:
    return _apply(s, compression_multiplier(plan, eta))


def failure_noise(
    s: Spectrum, plan: WindowPlan, eta: float, rng: np.random.Generator
) -> Spectrum:
    return _apply(s, failure_multiplier(plan, eta, rng))


def optimized_noise(
    s: Spectrum, plan: WindowPlan, params: NoiseParams, rng: np.random.Generator
) -> Spectrum:
    report = check_constraints(params)
    if not report.all_pass:
        warnings.warn(f"noise constraints violated: {report}", ConstraintWarning, stacklevel=2)
    return _apply(s, optimized_multiplier(plan, params, rng))


def apply_noise(
    s: Spectrum, model: str, params: NoiseParams, rng: np.random.Generator
) -> tuple[Spectrum, np.ndarray]:
    """Plan windows from ``s``'s own peaks and apply ``model``; returns (noisy, multiplier)."""
    plan = build_plan(s.values, params.window_len, params.alpha)
    m = noise_multiplier(model, plan, params, rng)
    return _apply(s, m), m


# ---------------------------------------------------------------------------
# Constraints and expected intensity


@dataclass(frozen=True)
class ConstraintReport:
    residual_a: float
    residual_b: float
    residual_c: float
    tol: float = 1e-12

    @property
    def a(self) -> bool:
        return self.residual_a <= self.tol

    @property
    def b(self) -> bool:
        return self.residual_b <= self.tol

    @property
    def c(self) -> bool:
        return self.residual_c <= self.tol

    @property
    def all_pass(self) -> bool:
        return self.a and self.b and self.c

    def failed(self) -> set[str]:
        return {name for name in "ABC" if not getattr(self, name.lower())}

    def __str__(self) -> str:
        return ", ".join(
            f"{name}={'pass' if getattr(self, name.lower()) else 'fail'}"
            f"({getattr(self, 'residual_' + name.lower()):.3g})"
            for name in "ABC"
        )


def check_constraints(params: NoiseParams, tol: float = 1e-12) -> ConstraintReport:
    """Residuals of the three coefficient constraints.

    A: equal expected excursion  (2 a_c2 - a_c3 = a_d1)
    B: equal excursion variance  (a_c3^2 = a_d1^2)
    C: compression never exceeds the dilation maximum (a_c1 - a_c2 + a_c3 <= a_d1)
    """
    return ConstraintReport(
        residual_a=abs(2 * params.a_c2 - params.a_c3 - params.a_d1),
        residual_b=abs(params.a_c3**2 - params.a_d1**2),
        residual_c=max(0.0, params.a_c1 - params.a_c2 + params.a_c3 - params.a_d1),
        tol=tol,
    )


@dataclass(frozen=True)
class WindowTripleMeans:
    """Mean multiplier of the compression and dilation three-window arrangements."""

    compression: float
    dilation: float

    def e_win(self, p: float) -> float:
        return p * self.compression + (1 - p) * self.dilation


def window_triple_means(
    params: NoiseParams, n_realizations: int = 100_000, seed: int | None = None,
    chunk: int = 10_000,
) -> WindowTripleMeans:
    """Monte-Carlo means over [ones | dilated peak | ones] and
    [right-taper | compressed peak | left-taper] with tapers blended to the peak edges."""
    if n_realizations < 1:
        raise ValueError("need at least one realization")
    rng = np.random.default_rng(params.seed if seed is None else seed)
    L, eta = params.window_len, params.eta
    hann = cached_window(HANNING, L, params.alpha)
    before = cached_window(RIGHT_TUKEY, L, params.alpha)
    after = cached_window(LEFT_TUKEY, L, params.alpha)
    rise, fall = tukey_regions(L, params.alpha)

    sum_c = sum_d = 0.0
    done = 0
    while done < n_realizations:
        m = min(chunk, n_realizations - done)
        x1, x2, x3 = rng.random((3, m, 1))
        wd = dilation_peak(hann, eta, params.a_d1, x1)
        sum_d += float(np.sum(wd)) + 2 * L * m
        wc = compression_peak(hann, eta, params.a_c1, params.a_c2, params.a_c3, x2, x3)
        left = np.broadcast_to(before, (m, L)).copy()
        left[:, fall] = blend(before[fall], wc[:, :1])
        right = np.broadcast_to(after, (m, L)).copy()
        right[:, rise] = blend(after[rise], wc[:, -1:])
        sum_c += float(np.sum(left) + np.sum(wc) + np.sum(right))
        done += m
    denom = 3 * L * n_realizations
    return WindowTripleMeans(compression=sum_c / denom, dilation=sum_d / denom)


def expected_window_intensity(
    params: NoiseParams, n_realizations: int = 100_000, seed: int | None = None
) -> float:
    """E_win at ``params.p``: p-weighted mean of the compression and dilation arrangements."""
    return window_triple_means(params, n_realizations, seed).e_win(params.p)


def dilation_mean_closed_form(params: NoiseParams) -> float:
    """Exact mean of [ones | dilated peak | ones] with E[X1] = 1/2."""
    hann = cached_window(HANNING, params.window_len, params.alpha)
    return 1.0 + params.a_d1 * params.eta * 0.5 * float(np.mean(hann)) / 3.0


@dataclass(frozen=True)
class PSearch:
    p: float
    e_win: float
    reachable: bool


def bisect_p(
    e_win: Callable[[float], float],
    target: float = 1.0,
    *,
    ftol: float = 1e-3,
    xtol: float = 1e-4,
) -> PSearch:
    """Find p in [0, 1] with e_win(p) ~ target for a monotone ``e_win``."""
    lo, hi = 0.0, 1.0
    f_lo, f_hi = e_win(lo), e_win(hi)
    if f_lo == f_hi:
        return PSearch(0.5, e_win(0.5), f_lo == target)
    if (f_lo - target) * (f_hi - target) > 0:
        warnings.warn(
            f"target unreachable: E_win ranges over [{min(f_lo, f_hi)}, {max(f_lo, f_hi)}]",
            TargetUnreachable,
            stacklevel=2,
        )
        p, f = (lo, f_lo) if abs(f_lo - target) <= abs(f_hi - target) else (hi, f_hi)
        return PSearch(p, f, False)
    for p, f in ((lo, f_lo), (hi, f_hi)):
        if f == target:
            return PSearch(p, f, True)
    rising = f_hi > f_lo
    while True:
        mid = 0.5 * (lo + hi)
        f = e_win(mid)
        if abs(f - target) <= ftol or hi - lo <= xtol:
            return PSearch(mid, f, True)
        if (f < target) == rising:
            lo = mid
        else:
            hi = mid


def optimize_p(
    params: NoiseParams,
    target: float = 1.0,
    *,
    n_realizations: int = 100_000,
    seed: int | None = None,
    ftol: float = 1e-3,
    xtol: float = 1e-4,
) -> PSearch:
    """Choose the compression probability that brings E_win closest to ``target``."""
    means = window_triple_means(params, n_realizations, seed)
    if params.eta > 0 and not means.compression < means.dilation:
        raise ValueError(
            f"E_win is not decreasing in p (compression mean {means.compression:.6g} "
            f">= dilation mean {means.dilation:.6g})"
        )
    return bisect_p(means.e_win, target, ftol=ftol, xtol=xtol)


# ---------------------------------------------------------------------------
# Simple perturbations


def stray_light(s: Spectrum, stray_fraction: float) -> Spectrum:
    """Apparent absorbance with stray light I_s = stray_fraction * I_o."""
    if s.kind is not Kind.ABSORPTION:
        raise SpectrumError("stray light applies to absorption spectra")
    if not stray_fraction >= 0:
        raise ValueError(f"stray fraction must be >= 0, got {stray_fraction}")
    if stray_fraction == 0:
        return s
    a = s.values
    out = -np.log10((10.0 ** (-a) + stray_fraction) / (1.0 + stray_fraction))
    # Rounding can push near-zero absorbances a hair outside [0, A].
    return s.with_values(np.clip(out, 0.0, a))


def wavelength_shift(s: Spectrum, delta_nm: float) -> Spectrum:
    """Shift values by ``delta_nm`` along a fixed grid, padding vacated samples."""
    steps = delta_nm / s.grid.step
    k = int(round(steps))
    if abs(steps - k) > 1e-9:
        raise SpectrumError(f"shift {delta_nm} nm is not a whole number of {s.grid.step} nm steps")
    if abs(delta_nm) >= s.grid.span:
        raise SpectrumError(f"shift {delta_nm} nm is not smaller than the span {s.grid.span} nm")
    if k == 0:
        return s
    out = np.full(len(s), PAD_VALUE)
    if k > 0:
        out[k:] = s.values[:-k]
    else:
        out[:k] = s.values[-k:]
    return s.with_values(out)
