import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sisnet.errors import UndefinedThresholdError
from sisnet.graph import SpectralData, build_complete, build_ring
from sisnet.model import ModelParams, NoiseSpec
from sisnet.regime import EXTINCTION, GAP, PERMANENCE, classify, thresholds


def params(beta, delta, cap):
    return ModelParams(beta, delta, NoiseSpec(cap=cap))


def spectral(lam):
    return SpectralData(float(lam), np.ones(1), 0, 0.0)


def test_complete_forty_extinction_case():
    r = classify(params(0.5, 23.9, 0.3), build_complete(40).spectral)
    assert r.tau == pytest.approx(0.020921, abs=1e-6)
    assert r.tau_cs == pytest.approx(0.021052, abs=1e-6)
    # 0.0210516 truncates to 0.0210, so compare within one unit of the 4th decimal
    assert abs(r.tau_cs - 0.0210) < 1e-4
    assert r.label == EXTINCTION


def test_ring_permanence_case():
    r = classify(params(1.5, 2.8, 0.8), build_ring(50).spectral)
    assert r.tau == pytest.approx(0.535714, abs=1e-6)
    assert round(r.tau_ps, 4) == 0.5143
    assert r.label == PERMANENCE


def test_strong_noise_gap_case():
    r = classify(params(1.5, 2.4, 40.0), build_ring(50).spectral)
    assert r.tau == 0.625
    assert r.tau_c1 == pytest.approx(0.5)
    assert r.tau_ps == pytest.approx(42.1667, abs=1e-4)
    assert r.label == GAP
    assert r.tau_cs < 0


@pytest.mark.parametrize("beta,delta,label", [(0.4, 1.0, EXTINCTION), (0.5, 1.0, GAP), (0.6, 1.0, PERMANENCE)])
def test_noise_free_split_at_mean_field_threshold(beta, delta, label):
    r = classify(params(beta, delta, 0.0), spectral(2))
    assert r.tau_cs == r.tau_c1 == r.tau_ps
    assert r.label == label


def test_boundaries_are_gap():
    # tau exactly at tau_cs: delta = beta*lam + M^2 lam^2 / 32 = 1 + 0.5
    r = classify(params(0.5, 1.5, 2.0), spectral(2))
    assert abs(r.tau - r.tau_cs) < 1e-15
    assert r.label == GAP
    assert r.drift_C == 0.0


def test_report_text_is_aligned():
    text = classify(params(1.5, 2.8, 0.8), spectral(2)).format(digits=4)
    lines = text.splitlines()
    assert lines[0].startswith("tau ")
    assert {line.index(":") for line in lines} == {len("drift_C") + 1}
    assert "tau_ps  : 0.5143" in text
    assert "label   : Permanence" in text


def test_report_dict():
    d = classify(params(1.5, 2.8, 0.8), spectral(2)).to_dict()
    assert set(d) == {"tau", "tau_c1", "tau_cs", "tau_ps", "drift_C", "label", "margin"}


def test_edgeless_graph_has_no_thresholds():
    with pytest.raises(UndefinedThresholdError):
        thresholds(params(1, 1, 0), spectral(0))


positive = st.floats(0.01, 50)


@settings(max_examples=200)
@given(positive, positive, st.floats(0, 20), st.floats(0.5, 60))
def test_labels_follow_threshold_order(beta, delta, cap, lam):
    r = classify(params(beta, delta, cap), spectral(lam))
    assert r.tau_cs <= r.tau_c1 <= r.tau_ps
    assert r.gap_width == pytest.approx(cap**2 * lam / (16 * delta), rel=1e-9, abs=1e-15)
    assert r.margin >= 0
    if r.label == EXTINCTION:
        assert r.tau < r.tau_cs and r.drift_C < 0
    elif r.label == PERMANENCE:
        assert r.tau > r.tau_ps


@settings(max_examples=100)
@given(positive, st.floats(0, 10), st.floats(0.5, 50))
def test_gap_widens_with_noise(delta, cap, lam):
    narrow = classify(params(1.0, delta, cap), spectral(lam)).gap_width
    wide = classify(params(1.0, delta, cap + 0.5), spectral(lam)).gap_width
    assert wide > narrow


@settings(max_examples=100)
@given(positive, positive, st.floats(0.5, 50))
def test_no_extinction_once_lower_threshold_negative(beta, delta, lam):
    # the cap that puts tau_cs below zero
    cap = np.sqrt(64.0 * delta) / lam
    r = classify(params(beta, delta, cap), spectral(lam))
    assert r.tau_cs < 0
    assert r.label != EXTINCTION
