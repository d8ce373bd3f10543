from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fluorosynth.chemdb import MixtureSpec, mixture_absorption
from fluorosynth.noise import NoiseParams, apply_noise
from fluorosynth.spectral import SpectrumError
from fluorosynth.streams import substream
from fluorosynth.validation import (
    FAIL,
    NOT_EVALUATED,
    PASS,
    Summary,
    element_deltas,
    guideline_report,
    histogram,
    run_study,
    run_sweep,
    study_report,
    vector_delta,
)

REFERENCE = NoiseParams(eta=0.1, alpha=1.0, window_len=100, p=0.33)
FAILURE_SWEEP = (0.1, 0.3, 0.5, 0.7)


def test_element_deltas_examples():
    v = np.array([1.0, 4.0, 2.0])
    assert element_deltas(v, np.ones(3)).tolist() == [0.0, 0.0, 0.0]
    assert element_deltas(v, np.array([1.0, 2.0, 1.0]))[1] == 1.0


def test_element_deltas_loop_oracle():
    rng = np.random.default_rng(1)
    v, m = rng.uniform(0, 3, 50), rng.uniform(0.5, 1.5, 50)
    peak = max(v)
    expected = [m[k] * (v[k] / peak) - v[k] / peak for k in range(50)]
    assert element_deltas(v, m).tolist() == expected


def test_vector_delta_examples():
    v = np.array([1.0, 4.0, 2.0])
    assert vector_delta(v, np.ones(3)) == 0.0
    assert vector_delta(v, np.full(3, 1.25)) == pytest.approx(0.25, abs=1e-15)


def test_vector_delta_weighted_sum_oracle():
    rng = np.random.default_rng(2)
    v, m = rng.uniform(0, 3, 80), rng.uniform(0.5, 1.5, 80)
    total = math.fsum(v)
    oracle = math.fsum(m[k] * v[k] / total for k in range(80)) - 1.0
    assert vector_delta(v, m) == pytest.approx(oracle, abs=1e-12)


@given(st.lists(st.floats(1e-6, 1e3), min_size=3, max_size=60), st.integers(0, 1000))
def test_vector_delta_cross_identity(values, seed):
    v = np.array(values)
    m = np.random.default_rng(seed).uniform(0.8, 1.2, v.size)
    n_vi = v / v.sum()
    assert vector_delta(v, m) == pytest.approx(float(np.sum((m - 1) * n_vi)), abs=1e-12)


def test_deltas_reject_null_and_mismatch():
    with pytest.raises(SpectrumError):
        element_deltas(np.zeros(3), np.ones(3))
    with pytest.raises(SpectrumError):
        vector_delta(np.zeros(3), np.ones(3))
    with pytest.raises(ValueError):
        element_deltas(np.ones(3), np.ones(4))


def test_histogram_half_open_convention():
    h = histogram([0.0, 0.0, 0.0], 2, (-1.0, 1.0))
    assert h.counts.tolist() == [0, 3]
    assert histogram([1.0], 2, (-1.0, 1.0)).counts.tolist() == [0, 1]
    assert histogram([], 4, (0.0, 1.0)).total == 0


@given(st.lists(st.floats(-5, 5), max_size=200), st.integers(1, 30))
def test_histogram_conserves_total(data, n_bins):
    h = histogram(data, n_bins, (-1.0, 2.0))
    assert h.total == len(data)
    assert int(h.counts.sum()) + h.underflow + h.overflow == len(data)


def test_histogram_uniform_binomial_bound():
    x = np.random.default_rng(9).random(10_000)
    h = histogram(x, 10, (0.0, 1.0))
    sigma = math.sqrt(10_000 * 0.1 * 0.9)
    assert np.all(np.abs(h.counts - 1000) <= 5 * sigma)


def test_histogram_csv_and_errors():
    text = histogram([0.1, 0.6], 2, (0.0, 1.0)).csv_text()
    assert text == "bin_low,bin_high,count\n0.0,0.5,1\n0.5,1.0,1\n"
    with pytest.raises(ValueError):
        histogram([1.0], 0, (0.0, 1.0))
    with pytest.raises(ValueError):
        histogram([1.0], 3, (1.0, 1.0))


def test_summary_recomputable():
    data = np.random.default_rng(4).normal(0.1, 2.0, 5000) ** 3
    s = Summary.of(data)
    mu = data.mean()
    sd = math.sqrt(((data - mu) ** 2).mean())
    skew = ((data - mu) ** 3).mean() / sd**3
    assert s.count == 5000
    assert s.mean == pytest.approx(mu, abs=1e-9)
    assert s.std == pytest.approx(sd, abs=1e-9)
    assert s.skewness == pytest.approx(skew, abs=1e-9)
    assert s.fraction_positive == np.mean(data > 0)


def test_study_without_noise_is_all_zero(db4):
    study = run_study(db4, "dilate", REFERENCE.replace(eta=0.0), 1, seed=0)
    assert study.delta_vector.tolist() == [0.0]
    assert not np.any(study.delta_element)
    report = guideline_report(study)
    assert report["g4"] == PASS and report["g5"] == PASS
    assert report["g3"] == NOT_EVALUATED


def test_study_determinism(db4):
    a = run_study(db4, "optimized", REFERENCE, 40, seed=7)
    b = run_study(db4, "optimized", REFERENCE, 40, seed=7)
    assert np.array_equal(a.codes, b.codes)
    assert np.array_equal(a.delta_element, b.delta_element)
    assert np.array_equal(a.delta_vector, b.delta_vector)
    c = run_study(db4, "optimized", REFERENCE, 40, seed=8)
    assert not np.array_equal(a.delta_vector, c.delta_vector)


def test_study_matches_direct_pipeline(db4):
    study = run_study(db4, "failure", REFERENCE.replace(eta=0.4), 5, seed=3)
    for i, code in enumerate(study.codes):
        s = mixture_absorption(db4, MixtureSpec.uniform(int(code), 4, 1e-7))
        _, m = apply_noise(s, "failure", REFERENCE.replace(eta=0.4), substream(3, 1, i))
        assert np.array_equal(study.delta_element[i], element_deltas(s.values, m))
        assert study.delta_vector[i] == vector_delta(s.values, m)


def test_study_shapes_and_summaries(db4):
    study = run_study(db4, "optimized", REFERENCE, 30, seed=1)
    assert study.delta_vector.shape == (30,)
    assert study.delta_element.shape == (30, db4[0].absorption.grid.count)
    nz = study.delta_element[study.delta_element != 0]
    assert study.summary_element.count == nz.size
    assert study.summary_element.mean == pytest.approx(nz.mean(), abs=1e-9)
    assert study.summary_vector.std == pytest.approx(study.delta_vector.std(), abs=1e-9)


def test_sign_invariants(db4):
    comp = run_study(db4, "compress", REFERENCE.replace(eta=0.3), 50, seed=2)
    dil = run_study(db4, "dilate", REFERENCE.replace(eta=0.3), 50, seed=2)
    assert np.all(comp.delta_element <= 0) and np.all(comp.delta_vector <= 0)
    assert np.all(dil.delta_element >= 0) and np.all(dil.delta_vector >= 0)


def test_study_rejects_bad_inputs(db4):
    with pytest.raises(ValueError):
        run_study(db4, "optimized", REFERENCE, 0)
    with pytest.raises(ValueError):
        run_study([], "optimized", REFERENCE, 5)
    with pytest.raises(ValueError):
        run_study(db4, "smear", REFERENCE, 5)


def test_emission_study_runs(db4):
    study = run_study(db4, "optimized", REFERENCE, 20, seed=0, kind="emission")
    assert study.delta_vector.shape == (20,)


def test_failure_sweep_drifts_negative(db11):
    studies = run_sweep(db11, "failure", REFERENCE, FAILURE_SWEEP, 300, seed=0)
    means = [s.summary_vector.mean for s in studies]
    assert all(a > b for a, b in zip(means, means[1:]))
    report = guideline_report(studies)
    assert report["g5"] == FAIL
    assert report["g1"] == PASS and report["g3"] == PASS


def test_guideline_structure(db4):
    basic = run_study(db4, "dilate", REFERENCE, 20, seed=0)
    report = guideline_report(basic)
    assert report["g1"] == FAIL
    assert report["g2"] == FAIL  # dilation never lowers an element
    assert report["g3"] == NOT_EVALUATED


def test_study_report_layout(db4):
    study = run_study(db4, "optimized", REFERENCE, 10, seed=0)
    rep = study_report(study, guideline_report(study))
    assert set(rep) == {"model", "params", "n_samples", "summary_element", "summary_vector", "guidelines"}
    assert set(rep["guidelines"]) == {"g1", "g2", "g3", "g4", "g5"}
    sweep = run_sweep(db4, "failure", REFERENCE, (0.1, 0.2), 10, seed=0)
    rep = study_report(sweep, guideline_report(sweep))
    assert rep["etas"] == [0.1, 0.2] and len(rep["summary_vector"]) == 2


@pytest.fixture(scope="module")
def optimized_reference_study(db11):
    return run_study(db11, "optimized", REFERENCE, 6000, seed=0)


def test_optimized_vector_mean_gate(optimized_reference_study):
    assert abs(optimized_reference_study.summary_vector.mean) <= 0.02


@pytest.mark.xfail(strict=True, reason="p=0.33 compresses a third of peaks; dilation dominates element counts (~68% positive)")
def test_optimized_fraction_positive(optimized_reference_study):
    assert abs(optimized_reference_study.summary_element.fraction_positive - 0.5) <= 0.05


@pytest.mark.xfail(strict=True, reason="same root cause: element skewness ~ +1.5 at p=0.33")
def test_optimized_guidelines_pass(optimized_reference_study):
    report = guideline_report(optimized_reference_study)
    assert [report[g] for g in ("g1", "g2", "g4", "g5")] == [PASS] * 4


def test_optimized_structural_guidelines_pass(optimized_reference_study):
    report = guideline_report(optimized_reference_study)
    assert report["g1"] == PASS and report["g2"] == PASS
