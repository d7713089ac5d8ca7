import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qprice.errors import DomainError
from qprice.operator_core import (LatticeParams, PriceOperator, TridiagonalOperator,
                                  TwoLevelParams, build_lattice, build_two_level, spectrum,
                                  spread_sample, two_level_observables, two_level_path)

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_zero_coupling_two_level_has_xi_spread():
    p = TwoLevelParams(sigma=0.0, xi0=0.02, xi1=0.0, kappa0=0.0, kappa1=0.0)
    q = two_level_observables(build_two_level(100.0, p, np.random.default_rng(0)))
    assert q.spread == pytest.approx(0.02, abs=1e-12)
    assert q.mid == pytest.approx(100.0, abs=1e-12)
    assert q.ask - q.bid == pytest.approx(q.spread, abs=1e-12)


def test_zero_asymmetry_spread_is_abs_kappa():
    p = TwoLevelParams(kappa0=-0.03)
    q = two_level_observables(build_two_level(50.0, p, np.random.default_rng(1)))
    assert q.spread == pytest.approx(0.03, abs=1e-15)


def test_nonpositive_mid_rejected():
    with pytest.raises(DomainError):
        build_two_level(0.0, TwoLevelParams(), np.random.default_rng(0))


@given(a=finite, d=finite, re=finite, im=finite)
def test_spread_equals_eigenvalue_gap(a, d, re, im):
    op = PriceOperator([[a, re + 1j * im], [re - 1j * im, d]])
    gap = np.ptp(spectrum(op).eigenvalues)
    spread = two_level_observables(op).spread
    assert spread == pytest.approx(gap, rel=1e-12, abs=1e-12 * max(1.0, abs(a), abs(d)))


def test_same_seed_same_operator():
    p = TwoLevelParams(sigma=0.1, xi0=0.01, xi1=0.002, kappa0=0.0, kappa1=0.01)
    a = build_two_level(10.0, p, np.random.default_rng(42)).entries
    b = build_two_level(10.0, p, np.random.default_rng(42)).entries
    assert np.array_equal(a, b)


def test_two_level_path_shapes_and_start():
    p = TwoLevelParams(sigma=0.01, xi0=0.01, xi1=0.001, kappa1=0.005)
    mids, spreads = two_level_path(100.0, p, 50, np.random.default_rng(3))
    assert mids.shape == spreads.shape == (51,)
    assert mids[0] == 100.0 and spreads[0] == 0.0
    assert np.all(spreads[1:] > 0)


def test_spread_sample_matches_hypot_law():
    p = TwoLevelParams(xi0=0.0, xi1=1.0, kappa0=0.0, kappa1=1.0)
    s = spread_sample(p, 200_000, np.random.default_rng(5))
    # sqrt of a chi-square with 2 dof: Rayleigh with scale 1, mean sqrt(pi/2)
    assert s.mean() == pytest.approx(np.sqrt(np.pi / 2), rel=0.01)
    with pytest.raises(DomainError):
        spread_sample(p, 0, np.random.default_rng(0))


def test_lattice_zero_noise_is_scalar():
    p = LatticeParams(n_levels=7, dx=0.01, base_price=3.0)
    op = build_lattice(p, np.random.default_rng(0))
    assert np.allclose(op.entries, 3.0 * np.eye(7))


def test_lattice_injected_diagonal_and_real_couplings():
    p = LatticeParams(n_levels=5, dx=0.01, sigma_kappa=0.5)
    xi = np.array([0.1, -0.2, 0.3, 0.0, 0.05])
    op = build_lattice(p, np.random.default_rng(0), xi=xi)
    assert np.allclose(np.diag(op.entries).real, 1.0 + xi)
    assert np.all(op.upper.imag == 0)
    assert op.is_tridiagonal() and op.is_hermitian()
    with pytest.raises(DomainError):
        build_lattice(p, np.random.default_rng(0), xi=np.zeros(4))


@settings(max_examples=25)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(2, 40))
def test_lattice_spectrum_is_unitary_and_real(seed, n):
    p = LatticeParams(n_levels=n, dx=1.0, sigma_xi=0.3, sigma_kappa=0.2)
    op = build_lattice(p, np.random.default_rng(seed))
    w, v = spectrum(op)
    assert np.all(np.diff(w) >= 0)
    assert np.allclose(v.conj().T @ v, np.eye(n), atol=1e-12)
    assert np.allclose(v @ np.diag(w) @ v.conj().T, op.entries, atol=1e-12)


def test_spectrum_rejects_non_hermitian():
    with pytest.raises(DomainError):
        spectrum(PriceOperator([[0, 1], [0, 0]]))


def test_tridiagonal_matvec_matches_dense():
    rng = np.random.default_rng(9)
    op = TridiagonalOperator(rng.normal(size=6), rng.normal(size=5) + 1j * rng.normal(size=5))
    x = rng.normal(size=(3, 6)) + 1j * rng.normal(size=(3, 6))
    assert np.allclose(op.matvec(x), x @ op.entries.T)


def test_invalid_params():
    with pytest.raises(DomainError):
        TwoLevelParams(xi1=-1)
    with pytest.raises(DomainError):
        LatticeParams(n_levels=1, dx=1)
    with pytest.raises(DomainError):
        LatticeParams(n_levels=4, dx=0)
    with pytest.raises(DomainError):
        PriceOperator(np.zeros((2, 3)))
