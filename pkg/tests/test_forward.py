import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from usdpc.acoustics import ProbeGeometry, analytic_signal
from usdpc.forward import (
    SimulationConfig,
    TruncationError,
    tilt_angles,
    simulate_rf,
    simulate_sequence,
)
from usdpc.phantom import DiskInclusion, Region

from conftest import point_phantom

SMALL = ProbeGeometry(16)


def _peak_time(frame, element):
    # log of a Gaussian envelope is a parabola, so three samples pin the peak
    env = np.abs(analytic_signal(frame).samples[element])
    k = int(np.argmax(env))
    lm, l0, lp = np.log(env[k - 1: k + 2])
    frac = 0.5 * (lm - lp) / (lm - 2 * l0 + lp)
    return frame.time_origin + (k + frac) / (frame.sampling_frequency * 1e6)


def test_single_scatterer_arrival(probe65, pulse):
    fr = simulate_rf(point_phantom([0, 20]), probe65, pulse, 0.0)
    center = probe65.n_elements // 2
    assert probe65.positions[center] == 0.0
    assert _peak_time(fr, center) == pytest.approx(25.974e-6, abs=1e-9)
    # off-axis element: the two-way path grows with the receive leg
    xe = probe65.positions[0]
    expect = (20 + np.hypot(20, xe)) * 1e-3 / 1540
    assert _peak_time(fr, 0) == pytest.approx(expect, abs=2e-9)


def test_tilted_arrival(probe65, pulse):
    theta = 0.1
    fr = simulate_rf(point_phantom([2, 20]), probe65, pulse, theta)
    center = probe65.n_elements // 2
    expect = (20 * np.cos(theta) + 2 * np.sin(theta) + np.hypot(20, 2)) * 1e-3 / 1540
    assert _peak_time(fr, center) == pytest.approx(expect, abs=1e-9)


def test_inclusion_advances_echo(probe65, pulse):
    center = probe65.n_elements // 2
    base = point_phantom([0, 40])
    fast = point_phantom([0, 40], [DiskInclusion(0, 20, 5, 1572)])
    shift = _peak_time(simulate_rf(fast, probe65, pulse, 0.0), center) - _peak_time(
        simulate_rf(base, probe65, pulse, 0.0), center)
    assert shift == pytest.approx(-264.4e-9, abs=1e-9)


def test_empty_phantom_is_silent(pulse):
    ph = point_phantom(np.zeros((0, 2)))
    fr = simulate_rf(ph, SMALL, pulse, 0.05, SimulationConfig(duration=20e-6))
    assert fr.samples.shape[0] == 16
    assert not np.any(fr.samples)


def test_truncation_raises(pulse):
    with pytest.raises(TruncationError):
        simulate_rf(point_phantom([0, 30]), SMALL, pulse, 0.0, SimulationConfig(duration=30e-6))


def test_angle_limit(pulse):
    with pytest.raises(ValueError):
        simulate_rf(point_phantom([0, 10]), SMALL, pulse, np.pi / 4)


def test_tilt_angles():
    a = tilt_angles()
    assert a.size == 13
    assert a[0] == pytest.approx(-0.15) and a[-1] == pytest.approx(0.15)
    assert np.allclose(np.diff(a), 0.025)
    assert a[6] == pytest.approx(0.0, abs=1e-15)


def test_sequence_identical_angles_identical_frames(pulse):
    ph = point_phantom([[1, 12, 1.0], [-2, 18, -0.5]])
    ds = simulate_sequence(ph, SMALL, pulse, [0.05, 0.05, -0.1])
    assert np.array_equal(ds[0].samples, ds[1].samples)
    assert ds[0].n_samples == ds[2].n_samples
    assert list(ds.angles) == [0.05, 0.05, -0.1]


def test_noise_is_seeded(pulse):
    ph = point_phantom([0, 10])
    cfg = SimulationConfig(noise_rms=0.1, seed=5)
    a = simulate_sequence(ph, SMALL, pulse, [0.0, 0.0], cfg)
    b = simulate_sequence(ph, SMALL, pulse, [0.0, 0.0], cfg)
    assert np.array_equal(a[0].samples, b[0].samples)
    # each frame draws its own noise
    assert not np.array_equal(a[0].samples, a[1].samples)


@settings(max_examples=20, deadline=None)
@given(
    a=st.floats(-3, 3),
    b=st.floats(-3, 3),
    x1=st.floats(-3, 3),
    z1=st.floats(5, 15),
    x2=st.floats(-3, 3),
    z2=st.floats(5, 15),
    theta=st.floats(-0.15, 0.15),
)
def test_superposition(pulse, a, b, x1, z1, x2, z2, theta):
    cfg = SimulationConfig(duration=25e-6)
    f1 = simulate_rf(point_phantom([x1, z1, 1.0]), SMALL, pulse, theta, cfg).samples
    f2 = simulate_rf(point_phantom([x2, z2, 1.0]), SMALL, pulse, theta, cfg).samples
    both = simulate_rf(point_phantom([[x1, z1, a], [x2, z2, b]]), SMALL, pulse, theta, cfg).samples
    assert np.allclose(both, a * f1 + b * f2, atol=1e-9 * max(1.0, np.abs(both).max()))


@settings(max_examples=10, deadline=None)
@given(k=st.floats(-4, 4))
def test_reflectivity_scaling(pulse, k):
    cfg = SimulationConfig(duration=25e-6)
    one = simulate_rf(point_phantom([1, 10, 1.0]), SMALL, pulse, 0.02, cfg).samples
    scaled = simulate_rf(point_phantom([1, 10, k]), SMALL, pulse, 0.02, cfg).samples
    assert np.allclose(scaled, k * one, atol=1e-12)
