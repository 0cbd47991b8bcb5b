import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from usdpc.acoustics import Medium
from usdpc.phantom import (
    CYLINDER_DIAMETERS,
    INCLUSION_TYPES,
    DiskInclusion,
    Phantom,
    Region,
    Scatterers,
    build_standard_phantoms,
    chord_length,
    cylinders049a,
    generate_scatterers,
    homogeneous,
    min_density,
    preset,
    ray_excess_delay,
    sphere049,
)


def _disk_phantom(sos):
    return Phantom(Medium(), Region(-20, 20, 1, 60), Scatterers.empty(), (DiskInclusion(0, 20, 5, sos),))


def test_scatterer_count_and_bounds():
    reg = Region(-10, 10, 5, 45)
    sc = generate_scatterers(reg, 2.0, seed=3)
    assert len(sc) == 1600
    assert sc.x.min() >= -10 and sc.x.max() <= 10
    assert sc.z.min() >= 5 and sc.z.max() <= 45


def test_scatterers_deterministic():
    reg = Region(-5, 5, 1, 11)
    a = generate_scatterers(reg, 3.0, seed=42)
    b = generate_scatterers(reg, 3.0, seed=42)
    c = generate_scatterers(reg, 3.0, seed=43)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.reflectivity, b.reflectivity)
    assert not np.array_equal(a.x, c.x)


def test_scatterer_positions_uniform():
    reg = Region(0, 10, 1, 11)
    sc = generate_scatterers(reg, 1000.0, seed=7)
    assert len(sc) == 100_000
    counts, _, _ = np.histogram2d(sc.x, sc.z, bins=10, range=[[0, 10], [1, 11]])
    assert chisquare(counts.ravel()).pvalue > 0.01
    assert abs(sc.reflectivity.mean()) < 0.02
    assert sc.reflectivity.std() == pytest.approx(1.0, abs=0.02)


def test_scatterers_reject_surface():
    with pytest.raises(ValueError):
        Scatterers(np.array([0.0]), np.array([0.0]), np.array([1.0]))


def test_chord_through_center():
    disk = DiskInclusion(0, 20, 4, 1572)
    assert chord_length(disk, (0, 0), (0, 40)) == pytest.approx(8.0)
    assert chord_length(disk, (0, 0), (0, 20)) == pytest.approx(4.0)
    assert chord_length(disk, (10, 0), (10, 40)) == 0.0


def test_excess_delay_oracle():
    # 10 mm of path at 1572 m/s instead of 1540 m/s
    fast = ray_excess_delay(_disk_phantom(1572), (0, 0), (0, 40))
    assert fast == pytest.approx(-132.2e-9, abs=0.1e-9)
    slow = ray_excess_delay(_disk_phantom(1530), (0, 0), (0, 40))
    assert slow == pytest.approx(42.4e-9, abs=0.1e-9)


def test_excess_delay_zero_without_inclusions():
    ph = Phantom(Medium(), Region(-5, 5, 1, 20), Scatterers.empty())
    assert ray_excess_delay(ph, (0, 0), (3, 15)) == 0.0


@settings(max_examples=50, deadline=None)
@given(x0=st.floats(-15, 15), z0=st.floats(0, 5), x1=st.floats(-15, 15), z1=st.floats(30, 50))
def test_excess_delay_reversal_symmetric(x0, z0, x1, z1):
    ph = _disk_phantom(1552)
    assert ray_excess_delay(ph, (x0, z0), (x1, z1)) == pytest.approx(
        ray_excess_delay(ph, (x1, z1), (x0, z0)), abs=1e-18)


@settings(max_examples=50, deadline=None)
@given(x0=st.floats(-15, 15), x1=st.floats(-15, 15), frac=st.floats(0.05, 0.95))
def test_excess_delay_additive(x0, x1, frac):
    ph = _disk_phantom(1533)
    p0, p1 = (x0, 0.0), (x1, 45.0)
    mid = (x0 + frac * (x1 - x0), 45.0 * frac)
    whole = ray_excess_delay(ph, p0, p1)
    parts = ray_excess_delay(ph, p0, mid) + ray_excess_delay(ph, mid, p1)
    assert whole == pytest.approx(parts, abs=1e-15)


def test_inclusion_types_values():
    assert INCLUSION_TYPES == {"I": 1530.0, "II": 1533.0, "III": 1552.0, "IV": 1572.0}
    assert {k: v - 1540 for k, v in INCLUSION_TYPES.items()} == {"I": -10, "II": -7, "III": 12, "IV": 32}


def test_sphere_preset_geometry():
    ph = sphere049("III", seed=1, region=Region(-10, 10, 1, 40))
    (d,) = ph.inclusions
    assert (d.x, d.z, d.radius, d.sos) == (0.0, 20.0, 5.0, 1552.0)
    assert d.z - d.radius == 15.0


def test_cylinder_preset_geometry():
    ph = cylinders049a("II", seed=0)
    disks = ph.inclusions
    assert len(disks) == 8
    shallow = sorted([d for d in disks if d.z == 30], key=lambda d: d.x)
    deep = sorted([d for d in disks if d.z == 60], key=lambda d: d.x)
    assert [2 * d.radius for d in shallow] == list(CYLINDER_DIAMETERS)
    assert [2 * d.radius for d in deep] == list(CYLINDER_DIAMETERS[::-1])
    assert all(d.sos == 1533 for d in disks)


def test_density_floor():
    lam = 1540 / 5.3e6 * 1e3
    assert min_density() == pytest.approx(5 / lam**2)
    with pytest.raises(ValueError):
        homogeneous(density=1.0, region=Region(-2, 2, 1, 5))
    ph = homogeneous(region=Region(-2, 2, 1, 5), seed=0)
    assert ph.scatterer_density >= 5 / lam**2 * 0.99


def test_overlapping_inclusions_rejected():
    with pytest.raises(ValueError):
        Phantom(Medium(), Region(-20, 20, 1, 60), Scatterers.empty(),
                (DiskInclusion(0, 20, 5, 1572), DiskInclusion(3, 20, 5, 1530)))


def test_inclusion_outside_region_rejected():
    with pytest.raises(ValueError):
        Phantom(Medium(), Region(-5, 5, 1, 20), Scatterers.empty(), (DiskInclusion(0, 18, 5, 1572),))


def test_preset_lookup():
    ph = preset("sphere049-I", seed=0, region=Region(-8, 8, 1, 30))
    assert ph.inclusions[0].sos == 1530
    with pytest.raises(KeyError):
        preset("nope")
    with pytest.raises(KeyError):
        preset("sphere049-V")


def test_standard_set_names():
    names = set(build_standard_phantoms(region=Region(-20, 20, 1, 75), density=60.0))
    assert "homogeneous" in names
    assert {f"sphere049-{k}" for k in INCLUSION_TYPES} <= names
    assert {f"cylinders049A-{k}" for k in INCLUSION_TYPES} <= names
