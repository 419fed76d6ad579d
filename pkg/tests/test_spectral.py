import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from neutralpap.errors import DomainError, NotHyperbolic, SpectrumInSector, ZeroGap
from neutralpap.spectral import (
    FRACTIONAL,
    REAL_INTERP,
    AlphaSpaceSpec,
    DichotomyConstants,
    Eigenmode,
    SpectralOperator,
    alpha_norm,
    analytic_bounds,
    check_hyperbolic,
    check_sectorial,
    estimate_constants,
    extrap_constant,
    semigroup_apply,
    sup_norm,
    verify_estimates,
    verify_interpolation,
)


def heat_op(sigma=1.0, n=16):
    k = np.arange(1, n + 1)
    return SpectralOperator(-(k ** 2) * math.pi ** 2 + sigma, omega=sigma, theta=0.75 * math.pi)


def mixed_op():
    return SpectralOperator(np.array([-1.0, -4.0 + 2.0j, 0.5 - 3.0j]), omega=8.0, theta=2.3)


# --- sectoriality -------------------------------------------------------------


def test_sector_constant_single_mode():
    # |z| / |z + 1| on the ray arg z = 3 pi / 4 peaks at 1 / sin(pi / 4)
    op = SpectralOperator(np.array([-1.0]), omega=0.0, theta=0.75 * math.pi)
    assert op.sector_bound == pytest.approx(math.sqrt(2.0), rel=1e-12)


def test_sector_constant_against_dense_search():
    op = mixed_op()
    r = np.logspace(-6, 6, 400_001)
    best = 1.0
    for phi in (op.theta, -op.theta):
        z = op.omega + r * np.exp(1j * phi)
        dist = np.abs(z[:, None] - op.eigenvalues[None, :]).min(axis=1)
        best = max(best, float(np.max(np.abs(z - op.omega) / dist)))
    assert check_sectorial(op) >= best * (1 - 1e-12)
    assert check_sectorial(op) <= best * (1 + 1e-6)


def test_spectrum_in_sector_rejected():
    with pytest.raises(SpectrumInSector):
        SpectralOperator(np.array([2.0]), omega=0.0, theta=0.75 * math.pi)


def test_bad_angle_rejected():
    with pytest.raises(DomainError):
        SpectralOperator(np.array([-1.0]), theta=0.4 * math.pi)


def test_nonfinite_eigenvalue_rejected():
    with pytest.raises(ValueError):
        Eigenmode(0, complex(np.inf, 0))


def test_from_modes_round_trip():
    op = SpectralOperator.from_modes([Eigenmode(3, -2.0), Eigenmode(5, -7.0 + 1j)], omega=1.0)
    assert list(op.indices) == [3, 5]
    assert [m.lam for m in op.modes] == [-2.0, -7.0 + 1j]


def test_hyperbolicity():
    assert check_hyperbolic(mixed_op()) == pytest.approx(0.5)
    with pytest.raises(NotHyperbolic):
        check_hyperbolic(SpectralOperator(np.array([-1.0, 3j]), omega=20.0, theta=0.6 * math.pi))


def test_analytic_bounds_single_mode():
    op = SpectralOperator(np.array([-2.0]), omega=1.0)
    m0, m1 = analytic_bounds(op)
    t = np.linspace(1e-4, 20, 20001)
    lhs = t * 3.0 * np.exp(-2.0 * t) / np.exp(t)
    assert m0 == 1.0
    assert lhs.max() <= m1 * (1 + 1e-12)
    assert lhs.max() == pytest.approx(m1, rel=1e-6)


# --- norms ----------------------------------------------------------------------


def test_real_interpolation_norm_frozen():
    op = SpectralOperator(np.array([-1.0]))
    # 1 + sup_{t<=1} t^(1/2) e^(-t), maximised at t = 1/2
    expected = 1.0 + math.sqrt(0.5) * math.exp(-0.5)
    got = float(alpha_norm(op, np.array([1.0]), AlphaSpaceSpec(0.5, REAL_INTERP)))
    assert got == pytest.approx(expected, rel=1e-14)
    assert got == pytest.approx(1.4288819424803534, rel=1e-12)


def test_real_interpolation_norm_against_grid():
    op = mixed_op()
    x = np.array([0.3, -1.0 + 0.2j, 0.7j])
    t = np.linspace(1e-9, 1.0, 200_001)
    semi = np.abs(op.eigenvalues * np.exp(np.multiply.outer(t, op.eigenvalues)) * x).max(axis=1)
    grid = sup_norm(x) + float((t ** 0.6 * semi).max())
    exact = float(alpha_norm(op, x, AlphaSpaceSpec(0.4, REAL_INTERP)))
    # the per-mode supremum dominates the grid estimate and is close to it
    assert exact >= grid * (1 - 1e-12)
    assert exact <= grid * 1.01


def test_zero_eigenvalue_gap():
    op = SpectralOperator(np.array([0.0, -1.0]), omega=1.0)
    with pytest.raises(ZeroGap):
        alpha_norm(op, np.array([1.0, 1.0]), 0.5)


def test_alpha_spec_validation():
    with pytest.raises(DomainError):
        AlphaSpaceSpec(1.2)
    with pytest.raises(DomainError):
        AlphaSpaceSpec(0.5, "sobolev")


vec = st.lists(st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False), min_size=3, max_size=3)


@settings(max_examples=100, deadline=None)
@given(vec, vec, st.floats(0.05, 0.95), st.sampled_from([FRACTIONAL, REAL_INTERP]))
def test_alpha_norm_triangle_inequality(x, y, alpha, flavor):
    op = mixed_op()
    x, y = np.array(x), np.array(y)
    spec = AlphaSpaceSpec(alpha, flavor)
    lhs = float(alpha_norm(op, x + y, spec))
    rhs = float(alpha_norm(op, x, spec)) + float(alpha_norm(op, y, spec))
    assert lhs <= rhs * (1 + 1e-12) + 1e-12


@settings(max_examples=100, deadline=None)
@given(vec, st.floats(0.05, 0.95))
def test_extrapolation_inequality(x, alpha):
    op = mixed_op()
    x = np.array(x)
    for flavor in (FRACTIONAL, REAL_INTERP):
        spec = AlphaSpaceSpec(alpha, flavor)
        xs, ax = float(sup_norm(x)), float(sup_norm(op.eigenvalues * x))
        bound = extrap_constant(op, spec) * xs ** (1 - alpha) * (xs + ax) ** alpha
        assert float(alpha_norm(op, x, spec)) <= bound * (1 + 1e-12) + 1e-300


# --- semigroup ------------------------------------------------------------------


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 5), st.floats(0, 5), vec)
def test_semigroup_property(t, s, x):
    op = heat_op(1.0, 3)
    x = np.array(x)
    lhs = semigroup_apply(op, t, semigroup_apply(op, s, x))
    rhs = semigroup_apply(op, t + s, x)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-300)


@settings(max_examples=100, deadline=None)
@given(vec)
def test_projections_split_identity(x):
    op = mixed_op()
    x = np.array(x)
    p = semigroup_apply(op, 0.0, x, "stable")
    q = semigroup_apply(op, 0.0, x, "unstable")
    assert np.allclose(p + q, x, rtol=0, atol=0)
    assert np.all((p == 0) | (q == 0))


def test_semigroup_time_direction():
    op = mixed_op()
    with pytest.raises(DomainError):
        semigroup_apply(op, -1.0, np.ones(3), "stable")
    with pytest.raises(DomainError):
        semigroup_apply(op, 1.0, np.ones(3), "unstable")


# --- dichotomy constants ----------------------------------------------------------


def test_m_alpha_closed_form():
    op = SpectralOperator(np.array([-1.0]))
    c = estimate_constants(op, 0.5, 0.75, gamma_fraction=0.5)
    # sup_t t^(1/2) e^(-t/2) = e^(-1/2)
    assert c.M_alpha == pytest.approx(math.exp(-0.5), rel=1e-14)
    assert c.c_alpha == 0.0


def _brute_sup(fn, lo, hi):
    t = np.geomspace(lo, hi, 20001)
    k = int(np.argmax(fn(t)))
    res = minimize_scalar(lambda s: -fn(s), bounds=(t[max(k - 1, 0)], t[min(k + 1, t.size - 1)]), method="bounded",
                          options={"xatol": 1e-14})
    return max(float(fn(t).max()), -float(res.fun))


def test_constants_against_brute_force():
    op = mixed_op()
    alpha, beta = 0.4, 0.7
    c = estimate_constants(op, alpha, beta)
    lam = op.eigenvalues
    st_, un = op.stable, op.unstable
    g = c.gamma
    m_alpha = max(
        _brute_sup(lambda t, l=l: abs(l) ** alpha * t ** alpha * np.exp((l.real + g) * t), 1e-8, 200.0)
        for l in lam[st_]
    )
    q = 1 + alpha - beta
    c_stable = max(
        _brute_sup(lambda t, l=l: abs(l) ** q * t ** q * np.exp((l.real + g) * t), 1e-8, 200.0) for l in lam[st_]
    )
    c_unstable = float((np.abs(lam[un]) ** q).max())
    assert c.M_alpha == pytest.approx(m_alpha, rel=1e-9)
    assert c.c_beta == pytest.approx(max(c_stable, c_unstable), rel=1e-9)
    assert c.c_alpha == pytest.approx(float((np.abs(lam[un]) ** alpha).max()))
    assert c.k_alpha == pytest.approx(op.spectral_gap ** (alpha - beta))


def test_constants_validation():
    with pytest.raises(DomainError):
        DichotomyConstants(M=1, delta=1, gamma=2, M_alpha=1, c_alpha=1, c_beta=1, k_alpha=1)
    with pytest.raises(DomainError):
        DichotomyConstants(M=-1, delta=1, gamma=1, M_alpha=1, c_alpha=1, c_beta=1, k_alpha=1)
    with pytest.raises(DomainError):
        estimate_constants(mixed_op(), 0.8, 0.5)


@pytest.mark.parametrize("op", [heat_op(1.0, 16), heat_op(30.0, 8), mixed_op()], ids=["heat1", "heat30", "mixed"])
def test_verify_estimates_passes(op):
    c = estimate_constants(op, 0.5, 0.75)
    rep = verify_estimates(op, c, 0.5, 0.75)
    assert [r.name for r in rep.rows] == ["hyP", "hyQ", "hyP*", "hyQ*", "beta1", "beta2"]
    assert rep.passed
    assert verify_interpolation(op, 0.5, 0.75, c.k_alpha).passed


@pytest.mark.parametrize("name", ["M_alpha", "c_beta"])
def test_verify_estimates_detects_shrunk_constant(name):
    op = heat_op(1.0, 16)
    c = estimate_constants(op, 0.5, 0.75)
    rep = verify_estimates(op, c.replace(**{name: getattr(c, name) * 0.5}), 0.5, 0.75)
    assert not rep.passed


def test_report_csv_format():
    op = heat_op(1.0, 4)
    rep = verify_estimates(op, estimate_constants(op, 0.5, 0.75), 0.5, 0.75)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "inequality,max_ratio,argmax_t,pass"
    assert len(lines) == 7
    name, ratio, _, flag = lines[1].split(",")
    assert (name, flag) == ("hyP", "1")
    assert float(ratio) == pytest.approx(1.0, abs=1e-9)
