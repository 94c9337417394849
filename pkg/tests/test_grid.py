import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from tvlab.examples import make_example
from tvlab.grid import (
    Ball,
    BadMagicError,
    Cylinder,
    DualField,
    FieldFormatError,
    NonIncreasingTimesError,
    OscillationData,
    SpaceTimeField,
    TruncatedFileError,
    ball_volume,
    ess_osc,
    read_dual,
    read_field,
    sample_analytic,
    write_dual,
    write_field,
)


def test_zero_function_samples_to_zero():
    f = sample_analytic(lambda x, t: np.zeros(x.shape[:-1]), [(-1, 1), (0, 2)], 0.25, [0.0, 1.0])
    assert f.data.shape == (2, 8, 8)
    assert np.all(f.data == 0.0)


def test_linear_sampling_is_offset_by_half_a_cell():
    f = sample_analytic(lambda x, t: x[..., 0], [(-1, 1), (-1, 1)], 0.5, [0.0])
    assert f.shape == (4, 4)
    expected = np.array([-0.75, -0.25, 0.25, 0.75])
    for j in range(4):
        np.testing.assert_array_equal(f.data[0][:, j], expected)
    assert f.origin == (-0.75, -0.75)


def test_unbounded_example_nearest_cell_matches_direct_evaluation():
    h = 1 / 16
    ex = make_example("F")
    f = sample_analytic(ex.value, [(-1, 1)] * 3, h, [0.0, 0.25])
    # cell nearest the origin has center (h/2, h/2, h/2)
    for m, t in enumerate((0.0, 0.25)):
        direct = (1 - t) * 2 / (math.sqrt(3) * h / 2)
        assert f.data[m].max() == pytest.approx(direct, rel=1e-14)


def test_non_finite_sample_is_reported_with_coordinate():
    with pytest.raises(ValueError, match="non-finite sample at x="):
        sample_analytic(lambda x, t: np.where(x[..., 0] == 0.25, np.inf, 0.0), [(-1, 1)], 0.5, [0.0])


def test_box_not_multiple_of_h_is_rejected():
    with pytest.raises(ValueError, match="multiple of h"):
        sample_analytic(lambda x, t: x[..., 0], [(0, 1)], 0.3, [0.0])


def test_field_invariants_are_enforced():
    with pytest.raises(NonIncreasingTimesError):
        SpaceTimeField(0.1, (0.0,), [0.0, 0.0], np.zeros((2, 3)))
    with pytest.raises(ValueError, match=">= 2"):
        SpaceTimeField(0.1, (0.0, 0.0), [0.0], np.zeros((1, 1, 3)))
    with pytest.raises(ValueError, match="finite"):
        SpaceTimeField(0.1, (0.0,), [0.0], np.array([[0.0, np.nan]]))


def test_cylinder_time_extent_is_theta_rho():
    back = Cylinder((0.0, 0.0), 1.0, 0.25, 2.0)
    fwd = Cylinder((0.0, 0.0), 1.0, 0.25, 2.0, forward=True)
    assert back.interval == (0.5, 1.0)
    assert fwd.interval == (1.0, 1.5)
    assert back.height == 0.5


def test_oscillation_data_invariants():
    with pytest.raises(ValueError):
        OscillationData(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        OscillationData(1.0, 0.0, 0.5)


def test_ess_osc_constant_field():
    f = sample_analytic(lambda x, t: np.full(x.shape[:-1], 3.5), [(-1, 1)] * 2, 0.125, [0.0, 0.5, 1.0])
    osc = ess_osc(f, Cylinder((0.0, 0.0), 1.0, 0.5, 1.0))
    assert (osc.mu_plus, osc.mu_minus, osc.omega) == (3.5, 3.5, 0.0)


def test_ess_osc_linear_field_extremes_at_boundary_cells():
    h = 1 / 32
    f = sample_analytic(lambda x, t: x[..., 0], [(-1.25, 1.25)] * 2, h, [0.0, 1.0])
    osc = ess_osc(f, Cylinder((0.0, 0.0), 1.0, 1.0, 1.0))
    assert osc.mu_plus == pytest.approx(1 - h / 2)
    assert osc.mu_minus == pytest.approx(-(1 - h / 2))
    assert osc.omega == pytest.approx(2 - h)


def test_ess_osc_u2_on_quarter_ball():
    h = 1 / 256
    ex = make_example("u2")
    f = sample_analytic(ex.value, [(-0.5, 0.5)] * 2, h, [0.0, 0.25])
    osc = ess_osc(f, Cylinder((0.0, 0.0), 0.25, 0.25, 1.0))
    # extremes +-sqrt(rho - h/2) at the outermost in-ball column
    assert osc.omega == pytest.approx(2 * math.sqrt(0.25 - h / 2), rel=1e-12)
    assert abs(osc.omega - 1.0) < 2 * h


def test_ess_osc_empty_cylinder_names_it():
    f = sample_analytic(lambda x, t: x[..., 0], [(-1, 1)] * 2, 0.25, [0.0, 1.0])
    with pytest.raises(ValueError, match="Cylinder"):
        ess_osc(f, Cylinder((0.0, 0.0), 3.0, 0.5, 1.0))


@settings(max_examples=40, deadline=None)
@given(
    data=hnp.arrays(np.float64, (3, 8, 8), elements=st.floats(-10, 10)),
    r1=st.floats(0.05, 0.4),
    extra=st.floats(0.0, 0.3),
    t_small=st.floats(0.05, 0.5),
)
def test_ess_osc_is_monotone_in_the_cylinder(data, r1, extra, t_small):
    f = SpaceTimeField(0.125, (-0.4375, -0.4375), [0.0, 0.5, 1.0], data)
    small = Cylinder((0.0, 0.0), 1.0, r1, t_small / r1)
    big = Cylinder((0.0, 0.0), 1.0, r1 + extra, (t_small + 0.5) / (r1 + extra))
    try:
        w_small = ess_osc(f, small).omega
    except ValueError:
        return
    assert w_small <= ess_osc(f, big).omega


def test_constant_has_exactly_zero_oscillation():
    f = sample_analytic(lambda x, t: np.full(x.shape[:-1], 0.1), [(-1, 1)] * 3, 0.25, [0.0, 0.1])
    assert ess_osc(f, Cylinder((0.0, 0.0, 0.0), 0.1, 0.5, 0.2)).omega == 0.0


def test_ball_volume():
    assert ball_volume(1.0, 2) == pytest.approx(math.pi)
    assert ball_volume(2.0, 3) == pytest.approx(4 / 3 * math.pi * 8)
    assert ball_volume(0.5, 1) == pytest.approx(1.0)


# --- TVF1 / TVZ1 -------------------------------------------------------------


def test_round_trip_small_field_is_byte_identical(tmp_path):
    f = SpaceTimeField(0.5, (0.25, -0.25), [0.0], np.arange(4.0).reshape(1, 2, 2))
    a, b = tmp_path / "a.tvf", tmp_path / "b.tvf"
    write_field(f, a)
    g = read_field(a)
    write_field(g, b)
    assert a.read_bytes() == b.read_bytes()
    np.testing.assert_array_equal(g.data, f.data)
    assert g.origin == f.origin and g.spacing == f.spacing


def test_payload_size_follows_the_format(tmp_path):
    f = SpaceTimeField(1 / 64, (0.0, 0.0), np.arange(10.0), np.zeros((10, 64, 64)))
    p = tmp_path / "f.tvf"
    write_field(f, p)
    header = 4 + 4 + 2 * 4 + 8 + 2 * 8 + 4 + 10 * 8
    assert p.stat().st_size == header + 64 * 64 * 10 * 8


def test_header_layout_is_little_endian(tmp_path):
    f = SpaceTimeField(0.25, (1.0,), [0.5, 0.75], np.ones((2, 3)))
    p = tmp_path / "f.tvf"
    write_field(f, p)
    raw = p.read_bytes()
    assert raw[:4] == b"TVF1"
    assert struct.unpack_from("<I", raw, 4) == (1,)
    assert struct.unpack_from("<I", raw, 8) == (3,)
    assert struct.unpack_from("<d", raw, 12) == (0.25,)
    assert struct.unpack_from("<d", raw, 20) == (1.0,)
    assert struct.unpack_from("<I", raw, 28) == (2,)
    assert struct.unpack_from("<2d", raw, 32) == (0.5, 0.75)


def test_bad_magic(tmp_path):
    p = tmp_path / "x.tvf"
    p.write_bytes(b"XXXX" + bytes(40))
    with pytest.raises(BadMagicError, match="bad magic") as exc:
        read_field(p)
    assert exc.value.code == "bad-magic"


def test_truncated_payload(tmp_path):
    f = SpaceTimeField(0.25, (0.0, 0.0), [0.0], np.ones((1, 4, 4)))
    p = tmp_path / "f.tvf"
    write_field(f, p)
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(TruncatedFileError) as exc:
        read_field(p)
    assert exc.value.code == "truncated"


def test_non_increasing_times_in_file(tmp_path):
    raw = b"TVF1" + struct.pack("<II", 1, 2) + struct.pack("<dd", 0.5, 0.0)
    raw += struct.pack("<I", 2) + struct.pack("<2d", 1.0, 1.0) + struct.pack("<4d", 0, 0, 0, 0)
    p = tmp_path / "f.tvf"
    p.write_bytes(raw)
    with pytest.raises(NonIncreasingTimesError) as exc:
        read_field(p)
    assert exc.value.code == "non-increasing-times"


def test_error_codes_are_distinct():
    codes = {BadMagicError.code, TruncatedFileError.code, NonIncreasingTimesError.code, FieldFormatError.code}
    assert len(codes) == 4


def test_dual_file_uses_its_own_magic(tmp_path):
    z = DualField(0.5, (0.0, 0.0), [0.0, 1.0], np.full((2, 2, 3, 2), 0.5))
    p = tmp_path / "z.tvz"
    write_dual(z, p)
    assert p.read_bytes()[:4] == b"TVZ1"
    back = read_dual(p)
    np.testing.assert_array_equal(back.data, z.data)
    assert back.sup_norm == pytest.approx(math.sqrt(0.5))
    with pytest.raises(BadMagicError):
        read_field(p)


@settings(max_examples=30, deadline=None)
@given(
    dim=st.integers(1, 3),
    nt=st.integers(1, 3),
    seed=st.integers(0, 2**32 - 1),
    h=st.floats(1e-3, 10.0),
)
def test_random_round_trip_is_bit_exact(tmp_path_factory, dim, nt, seed, h):
    r = np.random.default_rng(seed)
    shape = tuple(int(s) for s in r.integers(2, 5, size=dim))
    data = r.standard_normal((nt, *shape)) * 10.0 ** r.integers(-300, 300)
    times = np.cumsum(r.uniform(0.1, 1.0, size=nt))
    f = SpaceTimeField(h, tuple(r.standard_normal(dim)), times, data)
    p = tmp_path_factory.mktemp("rt") / "f.tvf"
    write_field(f, p)
    g = read_field(p)
    assert g.data.tobytes() == f.data.tobytes()
    assert g.times.tobytes() == f.times.tobytes()
    assert g.origin == f.origin and g.spacing == f.spacing
