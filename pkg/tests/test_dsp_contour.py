import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phonoinfo.dsp import NormalizationError, PitchTrack, lobanov_normalize, sample_contour_nine, zscore_f0
from phonoinfo.dsp.contour import contour_times
from phonoinfo.dsp.formants import FormantTrack


def pitch_track(times, f0, step=0.01):
    times = np.asarray(times, dtype=float)
    return PitchTrack(times, np.asarray(f0, dtype=float), np.ones(len(times)), step, 75, 300)


def test_nine_points_exclude_edges():
    assert np.allclose(contour_times(0.0, 1.0), np.arange(1, 10) / 10)


def test_sampling_nearest_frame():
    t = np.arange(0.005, 1.0, 0.01)
    tr = pitch_track(t, 100 + 100 * t)
    c = sample_contour_nine(tr, 0.0, 1.0)
    assert np.allclose(c.times, np.arange(1, 10) / 10)
    # nearest frame to 0.1 is 0.095 or 0.105, both within half a step
    assert np.all(np.abs(c["f0"] - (100 + 100 * c.times)) <= 0.5 + 1e-9)
    assert not c.missing("f0").any()


def test_missing_when_no_frame_close_or_unvoiced():
    t = np.array([0.1, 0.2, 0.5])
    tr = pitch_track(t, [100.0, np.nan, 120.0])
    c = sample_contour_nine(tr, 0.0, 1.0)
    assert c.missing("f0").tolist() == [False, True, True, True, False, True, True, True, True]


def test_short_interval_warns_all_missing():
    tr = pitch_track(np.arange(0.005, 1.0, 0.01), np.full(100, 100.0))
    with pytest.warns(UserWarning, match="shorter"):
        c = sample_contour_nine(tr, 0.5, 0.505)
    assert c.missing("f0").all()


def test_formant_track_columns():
    t = np.arange(0.005, 0.5, 0.01)
    freqs = np.column_stack([np.full(len(t), 500.0), np.full(len(t), 1500.0)])
    tr = FormantTrack(t, freqs, np.full_like(freqs, 80.0), 0.01, 0.025, 2, 5000.0, 50.0)
    c = sample_contour_nine(tr, 0.1, 0.4)
    assert sorted(c.values) == ["F1", "F2"]
    assert np.all(c["F2"] == 1500.0)


def test_bad_interval():
    with pytest.raises(ValueError):
        sample_contour_nine(pitch_track([0.1], [100.0]), 1.0, 1.0)


def test_lobanov_exact():
    out = lobanov_normalize({"s": {"F1": [400.0, 500.0, 600.0]}})
    assert out["s"]["F1"].tolist() == [-1.0, 0.0, 1.0]


def test_zscore_f0_analytic():
    out = zscore_f0({"s": [100.0, 200.0]})["s"]
    assert np.allclose(out, [-np.sqrt(0.5), np.sqrt(0.5)])


def test_nan_passthrough():
    out = zscore_f0({"s": [100.0, np.nan, 300.0]})["s"]
    assert np.isnan(out[1]) and np.allclose(out[[0, 2]], [-np.sqrt(0.5), np.sqrt(0.5)])


@pytest.mark.parametrize("vals", [[100.0], [100.0, 100.0], [np.nan, 5.0]])
def test_normalization_errors(vals):
    with pytest.raises(NormalizationError):
        zscore_f0({"s": vals})


def test_speakers_independent():
    rng = np.random.default_rng(0)
    data = {f"s{i}": {f"F{k}": rng.normal(500 * k, 50 + 10 * i, 40) for k in (1, 2, 3)} for i in range(4)}
    out = lobanov_normalize(data)
    for spk in data:
        for k in ("F1", "F2", "F3"):
            assert abs(out[spk][k].mean()) < 1e-9
            assert abs(out[spk][k].std(ddof=1) - 1) < 1e-9


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(50, 500, allow_nan=False), min_size=2, max_size=60).filter(lambda v: np.ptp(v) > 1e-3))
def test_zscore_property(vals):
    z = zscore_f0({"a": vals})["a"]
    assert abs(z.mean()) < 1e-9
    assert abs(z.std(ddof=1) - 1) < 1e-9
    # affine invariance
    z2 = zscore_f0({"a": [3 * v + 7 for v in vals]})["a"]
    assert np.allclose(z, z2, atol=1e-9)
