"""Fluctuating Hermitian price operators.

Two constructions are provided:

* the two-level (ask/bid) operator whose matrix elements are redrawn every
  step around the previous mid-price, and
* the nearest-neighbour lattice operator on ``n_levels`` log-price levels.

Every constructor takes an explicit ``numpy.random.Generator`` so that equal
seeds give bit-identical operators.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError

HERMITIAN_RTOL = 1e-12


@dataclass(frozen=True)
class TwoLevelParams:
    """Normal laws of the two-level matrix elements (price units).

    ``xi`` ~ N(xi0, xi1) is the diagonal asymmetry, ``kappa`` ~ N(kappa0, kappa1)
    the coupling, and ``sigma`` the per-step mid-price volatility.
    """

    sigma: float = 0.0
    xi0: float = 0.0
    xi1: float = 0.0
    kappa0: float = 0.0
    kappa1: float = 0.0

    def __post_init__(self):
        for name in ("sigma", "xi1", "kappa1"):
            if not getattr(self, name) >= 0:
                raise DomainError(f"{name} must be non-negative")


@dataclass(frozen=True)
class LatticeParams:
    """Nearest-neighbour price operator on ``n_levels`` levels spaced ``dx``."""

    n_levels: int
    dx: float
    sigma_xi: float = 0.0
    sigma_kappa: float = 0.0
    base_price: float = 1.0

    def __post_init__(self):
        if int(self.n_levels) != self.n_levels or self.n_levels < 2:
            raise DomainError("n_levels must be an integer >= 2")
        if not self.dx > 0:
            raise DomainError("dx must be positive")
        if not (self.sigma_xi >= 0 and self.sigma_kappa >= 0):
            raise DomainError("disorder scales must be non-negative")
        if not self.base_price > 0:
            raise DomainError("base_price must be positive")


class PriceOperator:
    """Square complex matrix of price couplings ``s_mn``.

    The constructor does not enforce Hermiticity; :func:`spectrum` refuses
    non-Hermitian input instead of symmetrizing it.
    """

    def __init__(self, entries):
        a = np.array(entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DomainError("price operator must be a square matrix")
        a.setflags(write=False)
        self._entries = a

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def is_hermitian(self, rtol=HERMITIAN_RTOL) -> bool:
        a = self.entries
        scale = max(1.0, float(np.max(np.abs(a))))
        return bool(np.max(np.abs(a - a.conj().T)) <= rtol * scale)

    def is_tridiagonal(self) -> bool:
        a = self.entries
        n = self.dim
        mask = np.abs(np.subtract.outer(np.arange(n), np.arange(n))) > 1
        return not np.any(a[mask])

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class TridiagonalOperator(PriceOperator):
    """Hermitian tridiagonal operator stored as bands.

    ``diag`` is real; ``upper[n]`` is the element ``(n, n+1)`` and the
    element ``(n+1, n)`` is its conjugate, so the operator is Hermitian by
    construction. The dense matrix is only materialized on request.
    """

    def __init__(self, diag, upper):
        d = np.array(diag, dtype=float)
        u = np.array(upper, dtype=complex)
        if d.ndim != 1 or u.shape != (max(d.size - 1, 0),):
            raise DomainError("upper band must have length len(diag) - 1")
        d.setflags(write=False)
        u.setflags(write=False)
        self.diag = d
        self.upper = u
        self._dense = None

    @property
    def dim(self) -> int:
        return self.diag.size

    @property
    def entries(self) -> np.ndarray:
        if self._dense is None:
            a = np.diag(self.diag).astype(complex)
            idx = np.arange(self.dim - 1)
            a[idx, idx + 1] = self.upper
            a[idx + 1, idx] = np.conj(self.upper)
            a.setflags(write=False)
            self._dense = a
        return self._dense

    def is_hermitian(self, rtol=HERMITIAN_RTOL) -> bool:
        return True

    def is_tridiagonal(self) -> bool:
        return True

    def matvec(self, x):
        """Apply the operator along the last axis of ``x``."""
        y = self.diag * x
        y[..., :-1] += self.upper * x[..., 1:]
        y[..., 1:] += np.conj(self.upper) * x[..., :-1]
        return y


class Spectrum(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


class TwoLevelQuote(NamedTuple):
    mid: float
    spread: float
    ask: float
    bid: float


def build_two_level(prev_mid, p: TwoLevelParams, rng) -> PriceOperator:
    """Draw the 2x2 ask/bid operator around the previous mid-price."""
    if not prev_mid > 0:
        raise DomainError("previous mid-price must be positive")
    dz = rng.standard_normal()
    xi = p.xi0 + p.xi1 * rng.standard_normal()
    kappa = p.kappa0 + p.kappa1 * rng.standard_normal()
    base = prev_mid + p.sigma * dz
    return PriceOperator([[base + xi / 2, kappa / 2], [kappa / 2, base - xi / 2]])


def two_level_observables(op: PriceOperator) -> TwoLevelQuote:
    if op.dim != 2 or not op.is_hermitian():
        raise DomainError("expected a 2x2 Hermitian operator")
    a = op.entries
    s11, s22 = a[0, 0].real, a[1, 1].real
    mid = (s11 + s22) / 2
    spread = float(np.sqrt((s11 - s22) ** 2 + 4 * abs(a[0, 1]) ** 2))
    return TwoLevelQuote(mid, spread, mid + spread / 2, mid - spread / 2)


def two_level_path(initial_mid, p: TwoLevelParams, n_steps, rng):
    """Iterate the two-level model; returns (mids, spreads) of length n_steps + 1.

    Entry 0 is the starting mid with zero spread.
    """
    mids = np.empty(n_steps + 1)
    spreads = np.zeros(n_steps + 1)
    mids[0] = initial_mid
    for k in range(1, n_steps + 1):
        quote = two_level_observables(build_two_level(mids[k - 1], p, rng))
        mids[k] = quote.mid
        spreads[k] = quote.spread
    return mids, spreads


def spread_sample(p: TwoLevelParams, count, rng) -> np.ndarray:
    """Sample spreads sqrt(xi^2 + kappa^2) with fresh draws per sample."""
    if count < 1:
        raise DomainError("spread_sample needs count >= 1")
    xi = p.xi0 + p.xi1 * rng.standard_normal(count)
    kappa = p.kappa0 + p.kappa1 * rng.standard_normal(count)
    return np.hypot(xi, kappa)


def build_lattice(p: LatticeParams, rng, xi=None) -> TridiagonalOperator:
    """Nearest-neighbour lattice operator with diagonal ``s + xi_n``.

    ``xi`` may be injected to bypass the random diagonal draw. Couplings are
    real N(0, sigma_kappa) draws mirrored across the diagonal.
    """
    n = p.n_levels
    if xi is None:
        xi = p.sigma_xi * rng.standard_normal(n)
    else:
        xi = np.asarray(xi, dtype=float)
        if xi.shape != (n,):
            raise DomainError("injected xi must have n_levels entries")
    coupling = p.sigma_kappa * rng.standard_normal(n - 1)
    return TridiagonalOperator(p.base_price + xi, coupling)


def spectrum(op: PriceOperator) -> Spectrum:
    """Real eigenvalues (ascending) and unitary eigenvector matrix."""
    if not op.is_hermitian():
        raise DomainError("price operator is not Hermitian")
    w, v = np.linalg.eigh(op.entries)
    return Spectrum(w, v)
