import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xcoupler.errors import FormatError
from xcoupler.fitter import FitResult
from xcoupler.iofmt import (
    TouchstoneOptions,
    parse_csv,
    parse_touchstone,
    read_mask_json,
    read_matrix_json,
    write_csv,
    write_fit_json,
    write_mask_json,
    write_matrix_json,
    write_touchstone,
)
from xcoupler.matrix import TopologyMask
from xcoupler.response import SParamSweep, sparams


def _max_rel(a, b):
    return np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300))


# --- Touchstone parsing ---------------------------------------------------------

def test_parse_ri_example():
    s = parse_touchstone("# GHz S RI R 50\n3.26 0.01 0 0.99 0 0.99 0 0.01 0")
    assert len(s) == 1
    assert s.freqs_hz[0] == 3.26e9
    assert s.s21[0] == 0.99 + 0j


def test_parse_ma_example():
    s = parse_touchstone("# MHz S MA R 50\n3260 1 90 0 0 0 0 1 90")
    assert abs(s.s11[0] - 1j) < 1e-15
    assert s.freqs_hz[0] == 3.26e9


def test_parse_db_example():
    s = parse_touchstone("# GHz S DB R 50\n6.0 0 0 -20 0 -20 0 0 0")
    assert abs(s.s21[0]) == pytest.approx(0.1, rel=1e-15)


def test_defaults_without_option_line():
    s = parse_touchstone("1.0 1 0 0.5 180 0.5 180 1 0\n")
    assert s.freqs_hz[0] == 1e9
    assert s.s21[0] == pytest.approx(-0.5)
    assert s.z_ref == 50.0


def test_option_line_case_and_order_and_comments():
    text = "! header\n#  r 75 ri hz s ! trailing\n\n1 0.1 0.2 0.3 0.4 0.3 0.4 0.1 0.2 ! inline\n"
    s = parse_touchstone(text)
    assert s.z_ref == 75.0
    assert s.freqs_hz[0] == 1.0
    assert s.s21[0] == 0.3 + 0.4j


@pytest.mark.parametrize("text,line,fragment", [
    ("# GHz S RI R 50\n1 0 0 0 0 0 0 0\n", 2, "9"),
    ("# GHz Y RI R 50\n1 0 0 0 0 0 0 0 0\n", 1, "S"),
    ("# GHz S XX R 50\n", 1, "XX"),
    ("# GHz S RI R 50\n1 0 0 0 0 0 0 0 0\n1 0 0 0 0 0 0 0 0\n", 3, "duplicate"),
    ("# GHz S RI R 50\n2 0 0 0 0 0 0 0 0\n1 0 0 0 0 0 0 0 0\n", 3, "decreasing"),
    ("# GHz S RI R 50\n1 0 0 0 0 0 0 0 0\n2 0 0 0 0\n", 3, "noise"),
    ("# GHz S RI R 50\n1 0 0 0 0 0 x 0 0\n", 2, ""),
    ("# GHz S RI R 50\n# GHz S RI R 50\n", 2, "option"),
])
def test_parse_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(FormatError) as info:
        parse_touchstone(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)
    assert fragment.lower() in str(info.value).lower()


def test_v2_rejected():
    with pytest.raises(FormatError, match="v2|Version|version"):
        parse_touchstone("[Version] 2.0\n# GHz S RI R 50\n")


@settings(max_examples=50, deadline=None)
@given(text=st.text(alphabet="#!0123456789.-+eE \nGHzSRIMADB", max_size=200))
def test_parser_totality(text):
    try:
        s = parse_touchstone(text)
    except FormatError as exc:
        assert exc.line is None or exc.line >= 1
    else:
        assert isinstance(s, SParamSweep)


# --- Touchstone writing -------------------------------------------------------------

def test_writer_header_and_empty_sweep():
    empty = SParamSweep(np.zeros(0), np.zeros((0, 2, 2), complex))
    text = write_touchstone(empty, TouchstoneOptions("GHz", "S", "RI"))
    lines = text.splitlines()
    assert lines[0].startswith("! xcoupler")
    assert [ln for ln in lines if not ln.startswith("!")] == ["# GHz S RI R 50"]
    assert len(parse_touchstone(text)) == 0


@pytest.mark.parametrize("fmt", ["RI", "MA", "DB"])
@pytest.mark.parametrize("unit", ["Hz", "MHz", "GHz"])
def test_round_trip_design_sweep(m1, plan1, fmt, unit):
    s = sparams(m1, plan1, plan1.default_grid(1001))
    back = parse_touchstone(write_touchstone(s, TouchstoneOptions(unit, "S", fmt)))
    assert _max_rel(back.freqs_hz, s.freqs_hz) <= 1e-8
    assert np.max(np.abs(back.s - s.s)) <= 1e-8


def test_ri_ma_ri_chain(m1_sweep):
    ma = parse_touchstone(write_touchstone(m1_sweep, TouchstoneOptions("GHz", "S", "MA")))
    ri = parse_touchstone(write_touchstone(ma, TouchstoneOptions("GHz", "S", "RI")))
    assert np.max(np.abs(ri.s - m1_sweep.s)) <= 1e-8


@settings(max_examples=30, deadline=None)
@given(vals=st.lists(st.complex_numbers(max_magnitude=10.0, allow_nan=False, allow_infinity=False),
                     min_size=4, max_size=4),
       fmt=st.sampled_from(["RI", "MA", "DB"]))
def test_round_trip_property(vals, fmt):
    s = SParamSweep(np.array([1.5e9]), np.array(vals, dtype=complex).reshape(1, 2, 2))
    back = parse_touchstone(write_touchstone(s, TouchstoneOptions("GHz", "S", fmt)))
    assert np.all(np.abs(back.s - s.s) <= 1e-8 * np.maximum(np.abs(s.s), 1.0))


def test_options_validation():
    with pytest.raises(ValueError):
        TouchstoneOptions("THz")
    with pytest.raises(ValueError):
        TouchstoneOptions(param="Z")


# --- CSV ---------------------------------------------------------------------------

def test_csv_layout_and_round_trip(m1_sweep):
    text = write_csv(m1_sweep)
    lines = text.splitlines()
    assert lines[0] == "freq_hz,s11_db,s21_db,s11_deg,s21_deg,gd_s21_ns"
    assert len(lines) == len(m1_sweep) + 1
    assert "e" not in lines[1].lower()
    back = parse_csv(text)
    assert np.max(np.abs(back.s21 - m1_sweep.s21)) <= 1e-7
    assert np.array_equal(back.s12, back.s21)


# --- matrix and mask documents -------------------------------------------------------

def test_matrix_document_round_trip(m1_rounded, plan1):
    text = write_matrix_json(m1_rounded, plan1)
    m, plan = read_matrix_json(text)
    assert np.array_equal(m.values, m1_rounded.values)
    assert plan == plan1
    assert write_matrix_json(m, plan) == text
    doc = json.loads(text)
    assert doc["labels"] == ["S", "1", "2", "3", "4", "L"]
    assert doc["plan"] == {"f0_hz": 3.26e9, "bw_hz": 1.15e9}


def test_missing_plan_is_not_an_error(m1_rounded):
    m, plan = read_matrix_json(write_matrix_json(m1_rounded))
    assert plan is None
    assert m == m1_rounded


def test_asymmetric_document_names_entry(m1_rounded):
    doc = json.loads(write_matrix_json(m1_rounded))
    doc["matrix"][1][2] += 1e-3
    with pytest.raises(FormatError, match=r"1.*2"):
        read_matrix_json(json.dumps(doc))


@pytest.mark.parametrize("edit", [
    lambda d: d.update(order=5),
    lambda d: d.update(labels=["S", "1", "L"]),
    lambda d: d["matrix"].pop(),
    lambda d: d.pop("matrix"),
])
def test_malformed_documents(m1_rounded, edit):
    doc = json.loads(write_matrix_json(m1_rounded))
    edit(doc)
    with pytest.raises(FormatError):
        read_matrix_json(json.dumps(doc))


def test_invalid_json():
    with pytest.raises(FormatError):
        read_matrix_json("{not json")


def test_mask_round_trip():
    mask = TopologyMask.fig7()
    back = read_mask_json(write_mask_json(mask))
    assert np.array_equal(back.allowed, mask.allowed)


def test_matrix_document_as_mask(m1_rounded):
    mask = read_mask_json(write_matrix_json(m1_rounded))
    assert np.array_equal(mask.allowed, TopologyMask.fig7().allowed)


def test_fit_document(m1_rounded, plan1):
    r = FitResult(m1_rounded, 1e-12, 42, True, ((1, 1e-3), (42, 1e-12)), seed=7)
    doc = json.loads(write_fit_json(r, plan1))
    assert doc["fit"] == {"cost": 1e-12, "iterations": 42, "converged": True, "seed": 7}
    m, plan = read_matrix_json(write_fit_json(r, plan1))
    assert m == m1_rounded and plan == plan1
