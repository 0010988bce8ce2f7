import numpy as np
import pytest

from phonoinfo.dsp import AudioBuffer, AudioError, extract_pitch
from phonoinfo.dsp.pitch import frame_times
from synth import impulse_vowel, sine, vowel


def test_sine_150_hz():
    track = extract_pitch(AudioBuffer(sine(150.0, 1.0, 44100), 44100), 0.01, 75, 300)
    ok = np.abs(track.f0 - 150.0) <= 2.0
    assert ok.mean() >= 0.95
    assert track.time_step == 0.01 and track.floor == 75 and track.ceiling == 300


def test_frames_step_and_centering():
    t = frame_times(44100, 44100, 0.04, 0.01)
    assert np.allclose(np.diff(t), 0.01)
    assert t[0] >= 0.02 - 1e-12 and t[-1] <= 1.0 - 0.02 + 1e-12
    assert abs((t[0] + t[-1]) / 2 - 0.5) < 1e-9


def test_silence_is_unvoiced():
    track = extract_pitch(AudioBuffer(np.zeros(16000), 16000))
    assert not track.voiced.any()


def test_periodicity_above_ceiling_is_unvoiced():
    track = extract_pitch(AudioBuffer(sine(500.0, 0.5, 16000), 16000), ceiling=300)
    assert track.voiced.mean() < 0.05


def test_white_noise_mostly_unvoiced():
    x = np.random.default_rng(1).standard_normal(16000) * 0.1
    assert extract_pitch(AudioBuffer(x, 16000)).voiced.mean() < 0.1


def test_impulse_train_vowel():
    x = impulse_vowel((500, 1500), (50, 100), 100.0, 1.0, 10000)
    f0 = extract_pitch(AudioBuffer(x, 10000)).f0
    assert np.nanmedian(f0) == pytest.approx(100.0, abs=1.0)
    assert np.isfinite(f0).mean() > 0.9


def test_glide_follows_f0():
    x = vowel((700, 1200, 2600, 3500), 110.0, 150.0, 0.6, 16000)
    tr = extract_pitch(AudioBuffer(x, 16000))
    v = tr.voiced
    expected = 110.0 + 40.0 * tr.times[v] / 0.6
    assert np.median(np.abs(tr.f0[v] - expected)) < 3.0


def test_quiet_tail_unvoiced():
    x = np.concatenate([sine(150.0, 0.5, 16000), 1e-4 * sine(150.0, 0.5, 16000)])
    tr = extract_pitch(AudioBuffer(x, 16000))
    assert tr.voiced[tr.times < 0.45].all()
    assert not tr.voiced[tr.times > 0.55].any()


def test_errors():
    with pytest.raises(AudioError, match="shorter"):
        extract_pitch(AudioBuffer(np.zeros(100), 16000))
    with pytest.raises(AudioError):
        extract_pitch(AudioBuffer(np.zeros(16000), 16000), floor=300, ceiling=75)
