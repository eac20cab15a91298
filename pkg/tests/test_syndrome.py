import numpy as np
import pytest

from xysurface.errors import UsageError
from xysurface.lattice import build_code
from xysurface.noise import ErrorHistory, NoiseParams, sample_history, trial_rng
from xysurface.pauli import PauliOperator
from xysurface.syndrome import (FINAL_ROUND_PERFECT, PERIODIC_TIME, DefectSet, defect_array,
                                extract_defects, measure_rounds)


def _history(layout, ops, flips=None):
    T = len(ops)
    x = np.array([op.x_support for op in ops])
    z = np.array([op.z_support for op in ops])
    m = len(layout.stabilized_vertices)
    f = np.zeros((T, m), dtype=bool) if flips is None else flips
    return ErrorHistory(x, z, f)


def test_single_z_gives_four_defects():
    layout = build_code(6, "periodic")
    op = PauliOperator.single(layout.n, layout.face_index(1, 1), "Z")
    defects = extract_defects(measure_rounds(layout, _history(layout, [op])))
    assert len(defects) == 4
    assert {d.vertex for d in defects} == {(1, 1), (1, 2), (2, 1), (2, 2)}


def test_single_x_gives_two_white_defects():
    layout = build_code(6, "periodic")
    op = PauliOperator.single(layout.n, layout.face_index(1, 1), "X")
    defects = extract_defects(measure_rounds(layout, _history(layout, [op])))
    assert len(defects) == 2
    assert all(d.kind == "Y" for d in defects)


def test_no_error_no_defects():
    layout = build_code(5, "open")
    ident = PauliOperator.identity(layout.n)
    assert len(extract_defects(measure_rounds(layout, _history(layout, [ident] * 3)))) == 0


def test_lone_measurement_flip_is_a_time_pair():
    layout = build_code(4, "periodic")
    m = len(layout.stabilized_vertices)
    flips = np.zeros((4, m), dtype=bool)
    flips[1, 5] = True
    ident = PauliOperator.identity(layout.n)
    defects = extract_defects(measure_rounds(layout, _history(layout, [ident] * 4, flips)))
    v = layout.stabilized_vertices[5]
    assert [(d.t, d.vertex) for d in defects] == [(1, v), (2, v)]


def test_final_round_perfect_has_extra_slice():
    layout = build_code(5, "open")
    m = len(layout.stabilized_vertices)
    flips = np.zeros((3, m), dtype=bool)
    flips[2, 0] = True
    ident = PauliOperator.identity(layout.n)
    syn = measure_rounds(layout, _history(layout, [ident] * 3, flips))
    arr = defect_array(syn, FINAL_ROUND_PERFECT)
    assert arr.shape == (4, m)
    assert np.flatnonzero(arr[:, 0]).tolist() == [2, 3]
    ds = extract_defects(syn, FINAL_ROUND_PERFECT)
    assert ds.slices == 4 and not ds.periodic_time


@pytest.mark.parametrize("boundary,d", [("periodic", 6), ("open", 5)])
@pytest.mark.parametrize("tb", [PERIODIC_TIME, FINAL_ROUND_PERFECT])
def test_defects_summed_over_time_give_final_syndrome(boundary, d, tb):
    layout = build_code(d, boundary)
    for i in range(20):
        h = sample_history(layout, NoiseParams(3, 0.1, 0.1), 4, trial_rng(5, i))
        arr = defect_array(measure_rounds(layout, h), tb)
        total = np.bitwise_xor.reduce(arr, axis=0)
        assert np.array_equal(total, layout.syndrome(h.accumulated()))


def test_dump_parse_round_trip():
    layout = build_code(6, "periodic")
    h = sample_history(layout, NoiseParams(10, 0.1, 0.1), 3, trial_rng(2, 0))
    ds = extract_defects(measure_rounds(layout, h))
    back = DefectSet.parse(ds.dump(), layout, ds.slices)
    assert back.defects == ds.defects


@pytest.mark.parametrize("text", ["0 0 0 Y", "0 1", "9 0 0", "0 a 1", "0 0 1\n0 0 1"])
def test_parse_rejects_bad_dumps(text):
    layout = build_code(4, "periodic")
    with pytest.raises(UsageError):
        DefectSet.parse(text, layout, 2)


def test_parse_rejects_bare_vertex():
    layout = build_code(5, "open")
    with pytest.raises(UsageError):
        DefectSet.parse("0 0 0", layout, 1)
