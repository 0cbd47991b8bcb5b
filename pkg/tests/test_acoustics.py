import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from usdpc.acoustics import (
    ProbeGeometry,
    RFFrame,
    TransmitPulse,
    analytic_signal,
    element_positions,
    pulse_waveform,
)


def _pulse_frame(pulse, n=512, fs=21.2, center=None, scale=1.0):
    t = np.arange(n) / (fs * 1e6)
    center = t[n // 2] if center is None else center
    return RFFrame((scale * pulse_waveform(pulse, t - center))[None, :], fs)


def _hilbert_direct(x):
    # ideal discrete Hilbert kernel by explicit convolution: 2/(pi n) for odd n
    n = x.size
    k = np.arange(-n + 1, n)
    h = np.where(k % 2 != 0, 2 / (np.pi * np.where(k == 0, 1, k)), 0.0)
    return np.convolve(x, h)[n - 1: 2 * n - 1]


def test_element_positions_full_probe():
    pos = element_positions(ProbeGeometry())
    assert pos.size == 192
    assert pos[0] == pytest.approx(-21.965)
    assert pos[-1] == pytest.approx(21.965)
    assert np.allclose(np.diff(pos), 0.23)


def test_probe_rejects_undersampling():
    with pytest.raises(ValueError):
        ProbeGeometry(64, sampling_frequency=10.0)
    with pytest.raises(ValueError):
        ProbeGeometry(1)


def test_pulse_flips_sign_after_half_period():
    p = TransmitPulse()
    half = 1 / (2 * 5.3e6)
    assert pulse_waveform(p, 0.0) == pytest.approx(1.0)
    assert pulse_waveform(p, half) == pytest.approx(-float(p.envelope(half)))


def test_pulse_bandwidth_matches_definition():
    # -6 dB full width of the amplitude spectrum equals 60% of f0
    p = TransmitPulse()
    fs = 500e6
    t = np.arange(-4096, 4096) / fs
    spec = np.abs(np.fft.rfft(pulse_waveform(p, t), 1 << 16))
    f = np.fft.rfftfreq(1 << 16, 1 / fs)
    above = f[spec >= spec.max() / 2]
    assert (above.max() - above.min()) / 5.3e6 == pytest.approx(0.6, abs=0.01)


def test_analytic_of_cosine():
    fs = 21.2
    n = 424  # whole number of periods at 5.3 MHz
    t = np.arange(n) / (fs * 1e6)
    fr = RFFrame(np.cos(2 * np.pi * 5.3e6 * t)[None, :], fs)
    z = analytic_signal(fr).samples[0]
    assert np.allclose(np.abs(z), 1.0, atol=1e-9)
    assert np.allclose(z.imag, np.sin(2 * np.pi * 5.3e6 * t), atol=1e-9)


def test_analytic_real_part_is_input(pulse):
    fr = _pulse_frame(pulse)
    z = analytic_signal(fr)
    assert np.allclose(z.samples.real, fr.samples, atol=1e-12)
    assert z.time_origin == fr.time_origin and z.angle == fr.angle


def test_analytic_envelope_against_direct_hilbert(pulse):
    fr = _pulse_frame(pulse, n=1024)
    x = fr.samples[0]
    env_ref = np.hypot(x, _hilbert_direct(x))
    env = np.abs(analytic_signal(fr).samples[0])
    core = env_ref > 0.1 * env_ref.max()
    assert np.max(np.abs(env[core] - env_ref[core]) / env_ref[core]) < 0.02
    # and against the closed-form Gaussian envelope
    t = fr.times - fr.times[512]
    gauss = pulse.envelope(t)
    assert np.max(np.abs(env[core] - gauss[core]) / gauss[core]) < 0.02


def test_analytic_zero_frame():
    z = analytic_signal(RFFrame(np.zeros((3, 64)), 21.2))
    assert z.samples.dtype.kind == "c"
    assert not np.any(z.samples)


@settings(max_examples=25, deadline=None)
@given(a=st.floats(-5, 5), b=st.floats(-5, 5), shift=st.integers(-40, 40))
def test_analytic_is_linear(pulse, a, b, shift):
    f1 = _pulse_frame(pulse)
    f2 = _pulse_frame(pulse, center=(256 + shift) / 21.2e6)
    mix = RFFrame(a * f1.samples + b * f2.samples, 21.2)
    lhs = analytic_signal(mix).samples
    rhs = a * analytic_signal(f1).samples + b * analytic_signal(f2).samples
    assert np.allclose(lhs, rhs, atol=1e-9)


@settings(max_examples=15, deadline=None)
@given(scale=st.floats(0.1, 10))
def test_envelope_invariant_to_sign(pulse, scale):
    fr = _pulse_frame(pulse, scale=scale)
    neg = RFFrame(-fr.samples, fr.sampling_frequency)
    assert np.allclose(np.abs(analytic_signal(fr).samples), np.abs(analytic_signal(neg).samples))
