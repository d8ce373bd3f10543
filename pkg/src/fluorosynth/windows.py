"""Peak-aligned windowing foundation.

A spectrum of N samples is cut into C = N // L_w designed segments plus one
residual segment. Each designed segment gets one of five window shapes
depending on where the detected peaks fall:

    1  Hanning            segment holds a peak
    2  Tukey              both neighbours hold a peak
    3  left-taper Tukey   only the left neighbour holds a peak
    4  right-taper Tukey  only the right neighbour holds a peak
    5  ones               no neighbouring peak

Indices exposed to users (peaks, segment numbers) are 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

HANNING, TUKEY, LEFT_TUKEY, RIGHT_TUKEY, ONES = 1, 2, 3, 4, 5


def find_peaks(values: np.ndarray, window_len: int) -> np.ndarray:
    """1-based indices of strict local maxima kept at least ``window_len + 1`` apart.

    A plateau counts as one maximum located at its first sample. Candidates
    are accepted tallest first (ties by position); anything within
    ``window_len`` samples of an accepted peak is dropped.
    """
    v = np.asarray(values, dtype=float)
    n = v.size
    if window_len < 2:
        raise ValueError(f"window length must be >= 2, got {window_len}")
    if window_len > n / 2:
        raise ValueError(f"window length {window_len} too long for {n} samples")

    # Collapse runs of equal values; a run is a maximum if it beats both neighbours.
    starts = np.flatnonzero(np.r_[True, v[1:] != v[:-1]])
    run_vals = v[starts]
    if run_vals.size < 3:
        return np.empty(0, dtype=int)
    is_max = (run_vals[1:-1] > run_vals[:-2]) & (run_vals[1:-1] > run_vals[2:])
    cand = starts[1:-1][is_max]
    if cand.size == 0:
        return np.empty(0, dtype=int)

    order = cand[np.lexsort((cand, -v[cand]))]
    blocked = np.zeros(n, dtype=bool)
    kept = []
    for k in order:
        if blocked[k]:
            continue
        kept.append(k)
        blocked[max(0, k - window_len) : k + window_len + 1] = True
    return np.sort(np.array(kept, dtype=int)) + 1


@dataclass(frozen=True, eq=False)
class WindowPlan:
    n: int
    window_len: int
    alpha: float
    peaks: np.ndarray
    indicator: np.ndarray
    cases: np.ndarray  # length C + 1; the residual segment is always ONES

    @property
    def n_windows(self) -> int:
        """Number of designed segments, C."""
        return self.n // self.window_len

    @property
    def segments(self) -> list[tuple[int, int]]:
        """0-based half-open index ranges of the C + 1 segments."""
        L, c = self.window_len, self.n_windows
        return [(i * L, (i + 1) * L) for i in range(c)] + [(c * L, self.n)]

    def segment_slice(self, i: int) -> slice:
        """Slice of 1-based segment ``i``."""
        if not 1 <= i <= self.n_windows + 1:
            raise IndexError(f"segment {i} out of range 1..{self.n_windows + 1}")
        lo = (i - 1) * self.window_len
        return slice(lo, self.n if i > self.n_windows else lo + self.window_len)


def peak_segments(peaks: np.ndarray, window_len: int) -> np.ndarray:
    """Segment number (1-based) holding each 1-based peak index."""
    return (np.asarray(peaks, dtype=int) - 1) // window_len + 1


def assign_cases(indicator: np.ndarray, n_windows: int) -> np.ndarray:
    """Window case per segment 1..C+1 from the set of peak-holding segments."""
    marked = np.zeros(n_windows + 2, dtype=bool)  # padded: index 0 and C+1 never marked
    for i in np.asarray(indicator, dtype=int):
        if 1 <= i <= n_windows:
            marked[i] = True
    cases = np.full(n_windows + 1, ONES, dtype=int)
    for i in range(1, n_windows + 1):
        left, here, right = marked[i - 1], marked[i], marked[i + 1]
        if here:
            cases[i - 1] = HANNING
        elif left and right:
            cases[i - 1] = TUKEY
        elif left:
            cases[i - 1] = LEFT_TUKEY
        elif right:
            cases[i - 1] = RIGHT_TUKEY
    return cases


def build_plan(values: np.ndarray, window_len: int, alpha: float) -> WindowPlan:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    values = np.asarray(values, dtype=float)
    peaks = find_peaks(values, window_len)
    indicator = peak_segments(peaks, window_len)
    n_windows = values.size // window_len
    return WindowPlan(
        n=values.size,
        window_len=window_len,
        alpha=float(alpha),
        peaks=peaks,
        indicator=indicator,
        cases=assign_cases(indicator, n_windows),
    )


def tukey_regions(window_len: int, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Masks of the rising and falling taper samples of a Tukey window.

    Branches are tested in order (rise, flat, fall) on the sample offset
    j - 1, so a point on a shared boundary belongs to the earlier branch.
    """
    n = np.arange(window_len, dtype=float)
    if alpha == 0:
        none = np.zeros(window_len, dtype=bool)
        return none, none
    gamma = window_len - 1
    beta = 1 - alpha / 2
    rise = n <= alpha * gamma / 2
    flat = ~rise & (n <= gamma * beta)
    fall = ~rise & ~flat
    return rise, fall


def window_vector(case: int, window_len: int, alpha: float) -> np.ndarray:
    """Window shape of the given case, evaluated at j = 1..window_len."""
    L = window_len
    if case == HANNING:
        j = np.arange(1, L + 1)
        return np.clip(0.5 * (1 - np.cos(2 * np.pi * j / L)), 0.0, 1.0)
    if case == ONES:
        return np.ones(L)
    if case not in (TUKEY, LEFT_TUKEY, RIGHT_TUKEY):
        raise ValueError(f"unknown window case {case}")

    w = np.ones(L)
    rise, fall = tukey_regions(L, alpha)
    if alpha == 0:
        return w
    n = np.arange(L, dtype=float)
    gamma = L - 1
    if case in (TUKEY, LEFT_TUKEY):
        w[rise] = (1 + np.cos(np.pi * (2 * n[rise] / (alpha * gamma) - 1))) / 2
    if case in (TUKEY, RIGHT_TUKEY):
        w[fall] = (1 + np.cos(np.pi * (2 * n[fall] / (alpha * gamma) - 2 / alpha + 1))) / 2
    return np.clip(w, 0.0, 1.0)


@lru_cache(maxsize=256)
def cached_window(case: int, window_len: int, alpha: float) -> np.ndarray:
    """Read-only ``window_vector`` shared between calls."""
    w = window_vector(case, window_len, alpha)
    w.flags.writeable = False
    return w


def foundation(plan: WindowPlan) -> np.ndarray:
    """Concatenate the per-segment windows into a length-N vector."""
    out = np.ones(plan.n)
    for i, case in enumerate(plan.cases[:-1], start=1):
        if case != ONES:
            out[plan.segment_slice(i)] = cached_window(int(case), plan.window_len, plan.alpha)
    return out
