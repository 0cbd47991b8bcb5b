import json
import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from usdpc.acoustics import ProbeGeometry, RFDataSet, RFFrame
from usdpc.io import (
    BadMagicError,
    ConfigError,
    DimensionMismatchError,
    TruncatedPayloadError,
    UnsupportedVersionError,
    export_image,
    load_config,
    parse_config,
    read_csv_image,
    read_pgm16,
    read_rf,
    write_rf,
)

PROBE = ProbeGeometry(8)
# magic(8) + version(2) + n_transmits(4) + n_elements(4) -> n_samples offset
N_SAMPLES_AT = 18


def _dataset(n_t=50, angles=(-0.1, 0.0, 0.1), seed=0):
    rng = np.random.default_rng(seed)
    frames = [RFFrame(rng.standard_normal((8, n_t)).astype(np.float32), 21.2, 2e-6, a) for a in angles]
    return RFDataSet(frames, PROBE, 1540.0)


def test_round_trip_bit_exact(tmp_path):
    ds = _dataset()
    p = tmp_path / "a.rf"
    write_rf(ds, p)
    back = read_rf(p)
    assert back.probe == PROBE and back.sos == 1540.0
    assert list(back.angles) == [-0.1, 0.0, 0.1]
    for a, b in zip(ds.frames, back.frames):
        assert np.array_equal(a.samples, b.samples)
        assert b.time_origin == 2e-6 and b.sampling_frequency == pytest.approx(21.2)
    write_rf(back, tmp_path / "b.rf")
    assert p.read_bytes() == (tmp_path / "b.rf").read_bytes()


@settings(max_examples=20, deadline=None)
@given(data=arrays(np.float32, (2, 3, 7), elements=st.floats(-1e6, 1e6, width=32)))
def test_round_trip_property(tmp_path_factory, data):
    p = tmp_path_factory.mktemp("rt") / "x.rf"
    ds = RFDataSet([RFFrame(d, 21.2, 0.0, a) for d, a in zip(data, (0.0, 0.05))], ProbeGeometry(3))
    write_rf(ds, p)
    back = read_rf(p)
    assert np.array_equal(np.stack([f.samples for f in back.frames]), data)


def test_bad_magic(tmp_path):
    p = tmp_path / "a.rf"
    write_rf(_dataset(), p)
    raw = bytearray(p.read_bytes())
    raw[0:4] = b"NOPE"
    p.write_bytes(bytes(raw))
    with pytest.raises(BadMagicError):
        read_rf(p)


def test_inflated_header_is_truncation(tmp_path):
    p = tmp_path / "a.rf"
    write_rf(_dataset(), p)
    raw = bytearray(p.read_bytes())
    (n,) = struct.unpack_from("<I", raw, N_SAMPLES_AT)
    assert n == 50
    struct.pack_into("<I", raw, N_SAMPLES_AT, n + 1)
    p.write_bytes(bytes(raw))
    with pytest.raises(TruncatedPayloadError):
        read_rf(p)


def test_trailing_bytes_and_version(tmp_path):
    p = tmp_path / "a.rf"
    write_rf(_dataset(), p)
    good = p.read_bytes()
    p.write_bytes(good + b"\0\0\0\0")
    with pytest.raises(DimensionMismatchError):
        read_rf(p)
    raw = bytearray(good)
    struct.pack_into("<H", raw, 8, 99)
    p.write_bytes(bytes(raw))
    with pytest.raises(UnsupportedVersionError):
        read_rf(p)
    p.write_bytes(good[:10])
    with pytest.raises(TruncatedPayloadError):
        read_rf(p)


def test_writer_rejects_predelayed_or_mixed(tmp_path):
    ds = _dataset()
    ds.frames[1] = RFFrame(ds.frames[1].samples, 21.2, 2e-6, 0.0, predelay=1e-6)
    with pytest.raises(ValueError):
        write_rf(ds, tmp_path / "a.rf")
    mixed = _dataset()
    mixed.frames[0] = RFFrame(np.zeros((8, 10), np.float32), 21.2, 2e-6, -0.1)
    with pytest.raises(DimensionMismatchError):
        write_rf(mixed, tmp_path / "b.rf")


def test_pgm_constant_and_ramp(tmp_path):
    export_image(np.full((3, 2), 7.5), tmp_path / "c.pgm")
    assert not np.any(read_pgm16(tmp_path / "c.pgm"))
    ramp = np.array([[0.0, 1.0], [2.0, 3.0]])
    export_image(ramp, tmp_path / "r.pgm")
    pix = read_pgm16(tmp_path / "r.pgm")
    assert pix.min() == 0 and pix.max() == 65535
    assert np.array_equal(np.argsort(pix.ravel()), np.argsort(ramp.ravel()))
    scale = (tmp_path / "r.pgm.scale.txt").read_text()
    assert "min 0.0" in scale and "max 3.0" in scale
    # rows of the PGM run along depth
    assert (tmp_path / "r.pgm").read_bytes().startswith(b"P5\n2 2\n65535\n")


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    vals = rng.standard_normal((4, 3))
    x, z = np.array([-1.0, 0.0, 1.0, 2.0]), np.array([10.0, 10.5, 11.0])
    export_image(vals, tmp_path / "a.csv", "csv", x=x, z=z)
    back, bx, bz = read_csv_image(tmp_path / "a.csv")
    assert np.array_equal(back, vals) and np.array_equal(bx, x) and np.array_equal(bz, z)


def test_export_rejects_nonfinite(tmp_path):
    v = np.zeros((3, 3))
    v[1, 2] = np.nan
    with pytest.raises(ValueError, match=r"x=1, z=2"):
        export_image(v, tmp_path / "a.pgm")


def test_config_rejects_unknown_keys(tmp_path):
    with pytest.raises(ConfigError):
        parse_config({"seed": 1, "bogus": 2})
    with pytest.raises(ConfigError):
        parse_config({"probe": {"n_elements": 64, "pitchh": 0.2}})
    with pytest.raises(ConfigError):
        parse_config({"angles": [0.0, 1.0]})
    p = tmp_path / "c.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(p)


def test_config_defaults(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"seed": 4, "probe": {"n_elements": 64}}))
    cfg = load_config(p)
    assert cfg.seed == 4
    assert cfg.probe_geometry() == ProbeGeometry(64)
    assert len(cfg.angle_list()) == 13
    assert cfg.dpc.T == [800.0] and cfg.dpc.m == 1 and cfg.dpc.na == 0.6
