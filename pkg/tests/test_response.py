import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xcoupler.errors import ExtractionError, SingularNetworkError
from xcoupler.extraction import singly_loaded_matrix
from xcoupler.matrix import CouplingMatrix
from xcoupler.response import (
    FrequencyPlan,
    LossSpec,
    SParamSweep,
    denormalize_tz,
    group_delay,
    midband_insertion_loss,
    network_response,
    normalized_frequency,
    sparams,
    unitarity_error,
)


def _db(x):
    return 20 * np.log10(np.abs(x))


# --- frequency mapping --------------------------------------------------------

def test_center_maps_to_zero(plan1):
    assert normalized_frequency(plan1, 3.26e9) == 0.0


def test_zero_frequency_1(plan1):
    assert normalized_frequency(plan1, 4.15e9) == pytest.approx(1.3819, abs=1e-4)


def test_band_edges_differ_by_bw(plan1):
    half = plan1.bw / 2
    f_lo = -half + math.sqrt(plan1.f0 ** 2 + half ** 2)
    f_hi = half + math.sqrt(plan1.f0 ** 2 + half ** 2)
    assert normalized_frequency(plan1, f_lo) == pytest.approx(-1.0, abs=1e-12)
    assert normalized_frequency(plan1, f_hi) == pytest.approx(1.0, abs=1e-12)
    assert f_hi - f_lo == pytest.approx(1.15e9, rel=1e-12)


def test_nonpositive_frequency_rejected(plan1):
    with pytest.raises(ValueError):
        normalized_frequency(plan1, 0.0)


def test_denormalize_examples(plan1, plan2):
    assert denormalize_tz(plan1, 1.3819) == pytest.approx(4.150e9, abs=1e6)
    om = normalized_frequency(plan2, 4.5e9)
    assert denormalize_tz(plan2, om) == pytest.approx(4.5e9, rel=1e-9)
    assert denormalize_tz(plan1, 0.0) == plan1.f0
    assert denormalize_tz(plan2, 0.0) == plan2.f0


@pytest.mark.parametrize("bad", [(0.0, 1.0), (1.0, 0.0), (1.0, 2.0), (-1.0, 0.5)])
def test_plan_validation(bad):
    with pytest.raises(ValueError):
        FrequencyPlan(*bad)


@given(
    f0=st.floats(1e6, 1e11),
    ratio=st.floats(0.01, 1.99),
    omega=st.floats(-50.0, 50.0),
)
def test_mapping_round_trip(f0, ratio, omega):
    plan = FrequencyPlan(f0, ratio * f0)
    f = denormalize_tz(plan, omega)
    assert f > 0
    assert normalized_frequency(plan, f) == pytest.approx(omega, rel=1e-9, abs=1e-9)
    lo, hi = plan.band_edges()
    assert hi - lo == pytest.approx(plan.bw, rel=1e-12)


# --- S-parameters --------------------------------------------------------------

def test_m1_zero_depth(m1, plan1):
    s = sparams(m1, plan1, np.array([3.0e9, 4.15e9, 5.0e9]))
    assert _db(s.s21[1]) <= -60.0


def test_m1_in_band_match(m1, plan1):
    lo, hi = plan1.band_edges()
    s = sparams(m1, plan1, np.linspace(lo, hi, 2001))
    assert np.max(_db(s.s11)) <= -19.5


def test_rounded_matrix_in_band_match(m1_rounded, plan1):
    lo, hi = plan1.band_edges()
    s = sparams(m1_rounded, plan1, np.linspace(lo, hi, 2001))
    assert np.max(_db(s.s11)) <= -19.5


@pytest.mark.xfail(strict=True, reason="the three-decimal matrix puts its zero near 4.145 GHz; "
                                       "only the full-precision matrix reaches -60 dB at 4.15 GHz")
def test_rounded_matrix_zero_depth(m1_rounded, plan1):
    s = sparams(m1_rounded, plan1, np.array([4.15e9]))
    assert _db(s.s21[0]) <= -60.0


def test_unitarity_and_reciprocity(m1_sweep):
    assert unitarity_error(m1_sweep) <= 1e-10
    assert np.array_equal(m1_sweep.s12, m1_sweep.s21)


@settings(max_examples=30, deadline=None)
@given(entries=st.lists(st.floats(-2.0, 2.0), min_size=10, max_size=10))
def test_unitarity_random_matrices(entries):
    v = np.zeros((5, 5))
    iu = np.triu_indices(5)
    keep = [(i, j) for i, j in zip(*iu) if (i, j) not in ((0, 0), (4, 4), (0, 4))][:10]
    for (i, j), x in zip(keep, entries):
        v[i, j] = v[j, i] = x
    plan = FrequencyPlan(1e9, 0.3e9)
    try:
        s = sparams(CouplingMatrix(v), plan, np.linspace(0.5e9, 1.5e9, 51))
    except SingularNetworkError:
        return
    assert unitarity_error(s) <= 1e-10


def test_plan_equivalence(m1, plan1):
    om = np.linspace(-3, 3, 301)
    s11, s21, _ = network_response(m1.values, om)
    s = sparams(m1, plan1, denormalize_tz(plan1, om))
    assert np.max(np.abs(s.s11 - s11)) <= 1e-12
    assert np.max(np.abs(s.s21 - s21)) <= 1e-12


def test_thread_count_does_not_change_result(m1, plan1):
    f = np.linspace(2e9, 5e9, 1000)
    a = sparams(m1, plan1, f, threads=1)
    b = sparams(m1, plan1, f, threads=4)
    assert np.array_equal(a.s, b.s)


def test_singular_network_reports_frequency():
    # resonator 2 is isolated; with f0 = bw = 1 Hz the mapping gives lambda(2 Hz) = 1.5 exactly
    v = np.zeros((4, 4))
    v[0, 1] = v[1, 0] = v[1, 3] = v[3, 1] = 1.0
    v[2, 2] = -1.5
    plan = FrequencyPlan(1.0, 1.0)
    with pytest.raises(SingularNetworkError) as info:
        sparams(CouplingMatrix(v), plan, np.array([1.0, 2.0, 3.0]))
    assert info.value.freq == 2.0
    with pytest.raises(SingularNetworkError):
        network_response(v, np.array([1.5]))


def test_loss_monotonicity(m1, plan1):
    f = np.linspace(2.0e9, 5.0e9, 601)
    qus = [50, 150, 640, 1180, 1e4]
    sweeps = [sparams(m1, plan1, f, LossSpec(q)) for q in qus]
    il = [midband_insertion_loss(s, plan1) for s in sweeps]
    assert all(a > b for a, b in zip(il, il[1:]))
    away = np.abs(f - 4.15e9) > 0.03 * 4.15e9
    for lossier, better in zip(sweeps, sweeps[1:]):
        assert np.all(np.abs(lossier.s21[away]) <= np.abs(better.s21[away]))


@pytest.mark.xfail(strict=True, reason="dissipation fills in the transmission zero, so |S21| "
                                       "rises with loss near 4.15 GHz (within 0.6 % at Q_U 1180, 2.3 % at 50)")
def test_loss_monotonicity_at_the_zero(m1, plan1):
    f = np.linspace(4.10e9, 4.20e9, 201)
    lossy = np.abs(sparams(m1, plan1, f, LossSpec(1180)).s21)
    better = np.abs(sparams(m1, plan1, f, LossSpec(1e4)).s21)
    assert np.all(lossy <= better)


def test_il_regression_at_1180(m1, plan1):
    s = sparams(m1, plan1, np.linspace(2.0e9, 5.0e9, 601), LossSpec(1180))
    il = midband_insertion_loss(s, plan1)
    assert il > 0
    assert il == pytest.approx(0.06166, abs=5e-5)


@pytest.mark.xfail(strict=True, reason="at f0 the lossless model itself reflects about 0.022 dB "
                                       "(the -20 dB ripple), so nearest-point IL is not zero")
def test_lossless_midband_il_nearest(m1, m1_sweep, plan1):
    assert midband_insertion_loss(m1_sweep, plan1) <= 0.001


def test_lossless_midband_il(m1_sweep, plan1):
    assert midband_insertion_loss(m1_sweep, plan1, mode="dissipative") <= 0.001
    # the nearest-point value is pure mismatch loss
    k = int(np.argmin(np.abs(m1_sweep.freqs_hz - plan1.f0)))
    mismatch = -10 * np.log10(1 - abs(m1_sweep.s11[k]) ** 2)
    assert midband_insertion_loss(m1_sweep, plan1) == pytest.approx(mismatch, abs=1e-9)


def test_midband_il_requires_center(m1, plan1):
    s = sparams(m1, plan1, np.linspace(4e9, 5e9, 11))
    with pytest.raises(ExtractionError):
        midband_insertion_loss(s, plan1)


def test_lossspec_validation():
    assert LossSpec().lossless
    with pytest.raises(ValueError):
        LossSpec(0.0)
    with pytest.raises(ValueError):
        LossSpec(-5.0)


# --- group delay -----------------------------------------------------------------

def test_group_delay_constant_phase():
    f = np.linspace(1e9, 2e9, 11)
    s = SParamSweep.from_params(f, np.full(11, 0.1 + 0.1j), np.full(11, 0.5j))
    assert np.all(group_delay(s) == 0.0)


def test_group_delay_linear_phase():
    f = np.linspace(1e9, 2e9, 401)
    s21 = np.exp(-1j * 2 * np.pi * f * 1e-9)
    s = SParamSweep.from_params(f, np.zeros(401), s21)
    assert np.max(np.abs(group_delay(s) - 1e-9)) <= 1e-12


def test_group_delay_singly_loaded(plan1):
    q = 2.672
    m = singly_loaded_matrix(plan1, q)
    f = np.linspace(0.6e9, 9e9, 8001)
    tau = group_delay(sparams(m, plan1, f), "S11")
    assert np.max(tau) == pytest.approx(2 * q / (math.pi * plan1.f0), rel=0.02)
    assert 2 * q / (math.pi * plan1.f0) == pytest.approx(0.522e-9, rel=1e-3)


def test_group_delay_needs_three_points():
    s = SParamSweep.from_params(np.array([1.0, 2.0]), np.zeros(2), np.ones(2))
    with pytest.raises(ValueError):
        group_delay(s)


def test_sweep_validation():
    with pytest.raises(ValueError):
        SParamSweep.from_params(np.array([2.0, 1.0]), np.zeros(2), np.ones(2))
    with pytest.raises(ValueError):
        SParamSweep.from_params(np.array([1.0, 2.0]), np.array([np.nan, 0]), np.ones(2))
