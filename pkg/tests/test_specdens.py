import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from splitbath.errors import InvalidInputError, ParseError
from splitbath.specdens import (
    CoupledOhmic,
    Difference,
    FreeSpace,
    LorentzianMode,
    LorentzianSum,
    Sum,
    Tabulated,
    dump_tabulated,
    evaluate,
    free_space_j,
    integrate,
    load_tabulated,
)

USC = CoupledOhmic(0.25, 0.58, 0.1)


def test_coupled_ohmic_vanishes_below_zero():
    assert USC(-0.1) == 0.0
    assert USC(0.0) == 0.0
    w = np.linspace(-5, 0, 101)
    assert np.all(USC(w) == 0.0)


def test_coupled_ohmic_peak_value():
    # at w = w_c the denominator is kappa^2 w_c^2, leaving 2 g^2 / (pi kappa)
    assert USC(0.58) == pytest.approx(2 * 0.25**2 / (math.pi * 0.1), rel=1e-14)
    assert USC(0.58) == pytest.approx(0.3978873577, rel=1e-9)


def test_lorentzian_peak_height():
    j = LorentzianSum([LorentzianMode(0.1, 1.3, 0.05)])
    assert j(1.3) == pytest.approx(2 * 0.01 / (math.pi * 0.05), rel=1e-14)


def test_scalar_and_array_evaluation():
    j = LorentzianSum([LorentzianMode(0.1, 1.0, 0.2)])
    assert isinstance(j(1.0), float)
    out = evaluate(j, np.array([[0.5, 1.0], [1.5, 2.0]]))
    assert out.shape == (2, 2)


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_non_finite_frequency_rejected(bad):
    with pytest.raises(InvalidInputError):
        USC(bad)


def test_invalid_modes_rejected():
    with pytest.raises(InvalidInputError):
        LorentzianMode(-0.1, 1.0, 0.1)
    with pytest.raises(InvalidInputError):
        LorentzianMode(0.1, 1.0, 0.0)
    with pytest.raises(InvalidInputError):
        LorentzianMode(0.1, math.inf, 0.1)


def test_free_space_scaling_and_zero():
    assert free_space_j(0.55, 0.0) == 0.0
    w = 1.1445
    assert free_space_j(1.1, w) == pytest.approx(4 * free_space_j(0.55, w), rel=1e-14)
    with pytest.raises(InvalidInputError):
        free_space_j(0.55, -0.1)


def test_free_space_against_codata_by_hand():
    # d^2 w^3 / (6 pi^2 eps0 c^3) with w = E/hbar, converted back to eV
    e = 1.602176634e-19
    eps0 = 8.8541878128e-12
    c = 299792458.0
    hbar = 1.054571817e-34
    d = 0.55 * e * 1e-9
    w = 1.1445 * e / hbar
    j_joule = d**2 * w**3 / (6 * math.pi**2 * eps0 * c**3)
    expected = j_joule / e
    assert free_space_j(0.55, 1.1445) == pytest.approx(expected, rel=1e-8)
    assert FreeSpace(0.55)(1.1445) == pytest.approx(expected, rel=1e-8)
    assert FreeSpace(0.55)(-1.0) == 0.0


def test_free_space_mev_units():
    # J in meV at w in meV equals 1e3 * J in eV at w/1e3 eV
    assert FreeSpace(0.55, "meV")(1144.5) == pytest.approx(1e3 * FreeSpace(0.55)(1.1445), rel=1e-12)


def test_tabulated_midpoint_and_outside():
    j = load_tabulated(b"1.0,0.5\n2.0,0.7\n")
    assert j(1.5) == pytest.approx(0.6, rel=1e-15)
    assert j(0.5) == 0.0
    assert j(2.5) == 0.0


def test_tabulated_round_trip_bit_exact():
    rng = np.random.default_rng(3)
    grid = np.sort(rng.uniform(0, 3, 50))
    vals = rng.uniform(0, 1, 50)
    text = dump_tabulated(Tabulated(grid, vals), comment="synthetic")
    back = load_tabulated(io.StringIO(text))
    assert np.array_equal(back(grid), vals)
    assert np.array_equal(back.grid, grid)


def test_tabulated_header_and_comments(tmp_path):
    p = tmp_path / "j.csv"
    p.write_text("# a comment\nomega,J\n\n0.0,0.0\n1.0,2.0\n")
    j = load_tabulated(p)
    assert j(0.25) == pytest.approx(0.5)


@pytest.mark.parametrize(
    "text, line",
    [
        ("1.0,0.5\n", None),
        ("1.0,0.5\n2.0,0.7\n1.5,0.1\n", 3),
        ("1.0,0.5\n2.0,-0.7\n", 2),
        ("1.0,0.5\n2.0\n", 2),
        ("1.0,0.5\n2.0,abc\n", 2),
        ("# c\n1.0,0.5\n1.0,0.6\n", 3),
    ],
)
def test_tabulated_parse_errors(text, line):
    with pytest.raises(ParseError) as info:
        load_tabulated(text.encode())
    assert info.value.line == line
    if line is not None:
        assert f"line {line}" in str(info.value)


def test_integrate_zero_and_lorentzian_normalization():
    assert integrate(LorentzianSum([]), 0.0, 1.0) == 0.0
    g, w0, k = 0.3, 2.0, 0.1
    j = LorentzianSum([LorentzianMode(g, w0, k)])
    got = integrate(j, w0 - 50 * k, w0 + 50 * k)
    closed = g**2 * (2 / math.pi) * math.atan(50 * k / (k / 2))
    assert got == pytest.approx(closed, rel=1e-9)
    assert got == pytest.approx(g**2, rel=0.01)


def test_integrate_coupled_ohmic_against_riemann():
    # fine midpoint sum as an independent oracle
    b = 20 * 0.58
    n = 2_000_000
    w = (np.arange(n) + 0.5) * (b / n)
    riemann = float(np.sum(USC(w)) * (b / n))
    assert integrate(USC, 0.0, b) == pytest.approx(riemann, rel=1e-6)


def test_integrate_rejects_bad_bounds():
    with pytest.raises(InvalidInputError):
        integrate(USC, 1.0, 0.5)
    with pytest.raises(InvalidInputError):
        integrate(USC, 0.0, math.inf)


def test_tabulated_integral_exact():
    j = Tabulated([0.0, 1.0, 3.0], [0.0, 2.0, 0.0])
    assert integrate(j, -1.0, 5.0) == pytest.approx(3.0, rel=1e-15)
    assert integrate(j, 0.5, 2.0) == pytest.approx(0.75 + 1.5, rel=1e-14)
    # int w J: 2/3 on [0, 1] plus 10/3 on [1, 3]
    assert integrate(j, 0.0, 3.0, moment=1) == pytest.approx(4.0, rel=1e-12)


def test_difference_is_signed_and_linear():
    a = LorentzianSum([LorentzianMode(0.1, 1.0, 0.1)])
    b = LorentzianSum([LorentzianMode(0.2, 1.0, 0.1)])
    d = Difference(a, b)
    assert not d.physical
    assert d(1.0) < 0
    assert (a - b)(1.0) == d(1.0)
    assert Sum((a, b))(1.3) == a(1.3) + b(1.3)
    assert (a + b).physical


# -- properties ---------------------------------------------------------------

modes = st.builds(
    LorentzianMode,
    g=st.floats(0, 2),
    omega0=st.floats(-5, 5),
    kappa=st.floats(1e-3, 2),
)


@settings(max_examples=60, deadline=None)
@given(st.lists(modes, min_size=1, max_size=4))
def test_physical_lorentzians_nonnegative(ms):
    j = LorentzianSum(ms)
    w = np.linspace(-20, 20, 2001)
    assert np.all(j(w) >= 0)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.01, 1), st.floats(0.05, 2), st.floats(0.01, 1))
def test_coupled_ohmic_nonnegative_and_causal(g, wc, k):
    j = CoupledOhmic(g, wc, k)
    w = np.linspace(-10, 10, 2001)
    vals = j(w)
    assert np.all(vals >= 0)
    assert np.all(vals[w <= 0] == 0)


@settings(max_examples=40, deadline=None)
@given(st.lists(modes, min_size=1, max_size=3), st.lists(modes, min_size=1, max_size=3), st.floats(-10, 10))
def test_sum_linearity_exact(m1, m2, w):
    j1, j2 = LorentzianSum(m1), LorentzianSum(m2)
    assert Sum((j1, j2))(w) == j1(w) + j2(w)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, 10), min_size=2, max_size=30, unique=True), st.data())
def test_tabulated_integral_matches_trapezoid(xs, data):
    grid = np.sort(np.array(xs))
    if np.any(np.diff(grid) <= 1e-9):
        return
    vals = np.array(data.draw(st.lists(st.floats(0, 5), min_size=grid.size, max_size=grid.size)))
    j = Tabulated(grid, vals)
    assert integrate(j, grid[0], grid[-1]) == pytest.approx(float(np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(grid))), rel=1e-12, abs=1e-14)
