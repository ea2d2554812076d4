import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from mgising import io, synth
from mgising.errors import EmptyRasterError, InvalidArgumentError
from mgising.filtering import FitTrace
from mgising.raster import BinaryRaster, bin_spike_times, select_top_units


# -- raster type ------------------------------------------------------------

def test_binary_raster_validation():
    r = BinaryRaster([[0, 1], [1, 1]])
    assert r.labels == ["1", "2"] and r.data.dtype == np.int8
    for bad in ([[0, 2]], np.zeros((0, 3)), [1, 0]):
        with pytest.raises(InvalidArgumentError):
            BinaryRaster(bad)
    with pytest.raises(InvalidArgumentError):
        BinaryRaster([[0, 1]], ["a"])


# -- binning ----------------------------------------------------------------

def test_bin_examples():
    r, dropped = bin_spike_times([("1", 0.003), ("1", 0.012), ("1", 0.0999)], 0.010, 0.0, 0.1)
    assert dropped == 0 and r.shape == (10, 1)
    np.testing.assert_array_equal(np.flatnonzero(r.data[:, 0]), [0, 1, 9])


def test_bin_saturates():
    r, _ = bin_spike_times([("a", 0.011), ("a", 0.013), ("a", 0.019)], 0.01, 0.0, 0.05)
    assert r.data.max() == 1 and r.data[:, 0].tolist() == [0, 1, 0, 0, 0]


def test_bin_boundary_is_half_open():
    r, _ = bin_spike_times([("1", 0.020)], 0.010, 0.0, 0.05)
    assert np.flatnonzero(r.data[:, 0]).tolist() == [2]
    # 0.3 / 0.1 is 2.9999999999999996 in floating point
    r, _ = bin_spike_times([("1", 0.3)], 0.1, 0.0, 0.5)
    assert np.flatnonzero(r.data[:, 0]).tolist() == [3]


def test_bin_drops_out_of_range_and_orders_units():
    events = [("10", 0.5), ("2", 0.1), ("2", 1.0), ("x", -0.1), ("2", 0.99)]
    r, dropped = bin_spike_times(events, 0.25, 0.0, 1.0)
    assert dropped == 2
    assert r.labels == ["2", "10", "x"]
    np.testing.assert_array_equal(r.data, [[1, 0, 0], [0, 0, 0], [0, 1, 0], [1, 0, 0]])


def test_bin_errors():
    with pytest.raises(EmptyRasterError):
        bin_spike_times([("1", 5.0)], 0.01, 0.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        bin_spike_times([("1", 0.5)], 0.0, 0.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        bin_spike_times([("1", 0.5)], 0.1, 1.0, 1.0)


@settings(max_examples=50)
@given(st.lists(st.tuples(st.sampled_from("abc"), st.floats(0, 0.999)), min_size=1, max_size=40))
def test_bin_against_floor_oracle(events):
    r, dropped = bin_spike_times(events, 0.01, 0.0, 1.0)
    assert dropped == 0
    expected = np.zeros((100, len(r.labels)), dtype=int)
    for u, t in events:
        k = int(np.floor(t / 0.01 + 1e-9))
        expected[min(k, 99), r.labels.index(u)] = 1
    np.testing.assert_array_equal(r.data, expected)


def test_select_top_units():
    data = np.zeros((10, 3), int)
    data[:3, 0] = 1
    data[:1, 1] = 1
    data[:2, 2] = 1
    r = BinaryRaster(data, ["a", "b", "c"])
    out = select_top_units(r, 2)
    assert out.labels == ["a", "c"]
    np.testing.assert_array_equal(out.data, data[:, [0, 2]])
    np.testing.assert_array_equal(select_top_units(r, 3).data, data)
    tie = BinaryRaster(np.array([[1, 0, 1], [0, 0, 0]]), ["p", "q", "r"])
    assert select_top_units(tie, 1).labels == ["p"]
    with pytest.raises(InvalidArgumentError):
        select_top_units(r, 0)
    with pytest.raises(InvalidArgumentError):
        select_top_units(r, 4)


# -- persistence ------------------------------------------------------------

@settings(max_examples=25, deadline=None)
@given(hnp.arrays(np.int8, st.tuples(st.integers(1, 20), st.integers(1, 6)), elements=st.integers(0, 1)))
def test_raster_round_trip(tmp_path_factory, data):
    path = tmp_path_factory.mktemp("r") / "raster.csv"
    labels = [f"u{k}" for k in range(data.shape[1])]
    io.write_raster(path, BinaryRaster(data, labels))
    back = io.read_raster(path)
    np.testing.assert_array_equal(back.data, data)
    assert back.labels == labels


def test_graph_round_trip_is_exact(tmp_path, rng):
    J = rng.standard_normal((10, 3)) * 1e3 ** rng.uniform(-3, 3, (10, 3))
    io.write_graphs(tmp_path / "J.csv", J)
    np.testing.assert_array_equal(io.read_graphs(tmp_path / "J.csv"), J)
    assert (tmp_path / "J.csv").read_text().splitlines()[0] == "#N=4,D=3"


def test_graph_header_checked(tmp_path):
    (tmp_path / "bad.csv").write_text("#N=3,D=2\n1,2\n3,4\n")
    with pytest.raises(InvalidArgumentError):
        io.read_graphs(tmp_path / "bad.csv")
    (tmp_path / "nohdr.csv").write_text("1,2\n")
    with pytest.raises(InvalidArgumentError):
        io.read_graphs(tmp_path / "nohdr.csv")


def test_trace_round_trip(tmp_path, rng):
    tr = FitTrace(rng.standard_normal((7, 2)), rng.uniform(0, 1, (7, 2)), rng.standard_normal(7))
    io.write_trace(tmp_path / "t.csv", tr)
    back = io.read_trace(tmp_path / "t.csv")
    np.testing.assert_array_equal(back.theta, tr.theta)
    np.testing.assert_array_equal(back.var, tr.var)
    np.testing.assert_array_equal(back.loglik, tr.loglik)
    np.testing.assert_array_equal(back.t, np.arange(1, 8))
    header = (tmp_path / "t.csv").read_text().splitlines()[0]
    assert header == "t,theta_1,theta_2,w_11,w_22,loglik"


def test_spike_time_round_trip(tmp_path):
    events = [("3", 0.125), ("a", 1e-7), ("3", 12.5)]
    io.write_spike_times(tmp_path / "s.csv", events)
    assert io.read_spike_times(tmp_path / "s.csv") == events


def test_bundle_round_trip(tmp_path):
    ds = synth.generate_dataset(synth.plus_tee_graphs(), synth.sinusoid_weights(20, 2), 5)
    io.save_bundle(tmp_path, ds)
    back = io.load_bundle(tmp_path)
    np.testing.assert_array_equal(back.raster, ds.raster)
    np.testing.assert_array_equal(back.J, ds.J)
    np.testing.assert_array_equal(back.schedule.theta, ds.schedule.theta)
    meta = json.loads((tmp_path / "meta.json").read_text())
    assert meta == {"N": 9, "D": 2, "T_ep": 20, "epochs": 2, "seed": 5}


def test_file_digest_and_json(tmp_path):
    (tmp_path / "a").write_bytes(b"abc")
    assert io.file_digest(tmp_path / "a") == (
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad")
    io.write_json(tmp_path / "m.json", {"b": 1, "a": [1, 2]})
    assert json.loads((tmp_path / "m.json").read_text()) == {"a": [1, 2], "b": 1}
