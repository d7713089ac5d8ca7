"""Unitary propagation of price probability amplitudes.

Within one step the operator is held constant, so a step is the exact
exponential ``exp(-i (S/s) dt/tau)`` applied to the amplitude vector.  Dense
operators are exponentiated through their eigendecomposition.  Tridiagonal
operators use a Chebyshev expansion with Bessel coefficients, truncated once
the remaining coefficients fall below double precision; this reproduces the
spectral result to rounding error at O(N) cost per term.  Rows whose
series would be long compared with N fall back to a tridiagonal
eigendecomposition.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import jv

from .errors import DomainError
from .operator_core import PriceOperator, TridiagonalOperator

NORM_ATOL = 1e-10
_CHEB_TOL = 1e-17
SERIES_PER_LEVEL = 5


@dataclass(frozen=True)
class EvolutionConfig:
    """Time stepping of the amplitude equation.

    ``price_scale`` is the price constant factored out of the operator; only
    the combination ``S / (price_scale * tau)`` is observable.  ``stride``
    thins the recorded states of long runs.
    """

    tau: float
    dt: float
    n_steps: int = 1
    price_scale: float = 1.0
    operator_refresh: bool = True
    stride: int = 1

    def __post_init__(self):
        if not (self.tau > 0 and self.dt >= 0):
            raise DomainError("tau must be positive and dt non-negative")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise DomainError("n_steps must be an integer >= 1")
        if int(self.stride) != self.stride or self.stride < 1:
            raise DomainError("stride must be an integer >= 1")
        if not self.price_scale > 0:
            raise DomainError("price_scale must be positive")

    @property
    def dt_over_tau(self) -> float:
        return self.dt / self.tau

    @property
    def step_phase(self) -> float:
        return self.dt / (self.price_scale * self.tau)

    @property
    def record_steps(self) -> np.ndarray:
        """Step indices at which states are recorded (0 is the initial state)."""
        steps = list(range(0, self.n_steps + 1, self.stride))
        if steps[-1] != self.n_steps:
            steps.append(self.n_steps)
        return np.asarray(steps)


@dataclass(frozen=True)
class StateVector:
    """Unit-norm complex amplitudes over price levels."""

    amplitudes: np.ndarray
    grid: object = None

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex)
        if a.ndim != 1:
            raise DomainError("amplitudes must be one-dimensional")
        if abs(np.vdot(a, a).real - 1.0) > NORM_ATOL:
            raise DomainError("state vector is not unit-norm")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @property
    def probability(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))


@dataclass(frozen=True)
class RealizationPath:
    """States of one realization at the recorded times."""

    states: np.ndarray  # (n_records, n_levels) complex
    times: np.ndarray
    grid: object = None
    seed: object = None

    def state(self, i) -> StateVector:
        return StateVector(self.states[i], self.grid)

    @property
    def probability(self) -> np.ndarray:
        return np.abs(self.states) ** 2


@dataclass(frozen=True)
class Propagator:
    entries: np.ndarray
    dt_over_tau: float

    def apply(self, psi: StateVector) -> StateVector:
        return StateVector(self.entries @ psi.amplitudes, psi.grid)


def _gershgorin(diag, upper):
    r = np.zeros(diag.shape)
    au = np.abs(upper)
    r[..., :-1] += au
    r[..., 1:] += au
    return np.min(diag - r, axis=-1), np.max(diag + r, axis=-1)


def expi_tridiagonal(diag, upper, theta, x):
    """Return ``exp(-i theta H) x`` for Hermitian tridiagonal ``H``.

    Arrays may carry a leading batch axis: ``diag`` (..., N), ``upper``
    (..., N-1), ``x`` (..., N).  Each batch row gets its own spectral
    interval and truncation order, and rows whose series would exceed
    ``SERIES_PER_LEVEL * N`` terms are diagonalized instead.  The choice
    depends on the row alone, so results do not depend on batch mates.
    """
    diag = np.asarray(diag, dtype=float)
    upper = np.asarray(upper, dtype=complex)
    x = np.asarray(x, dtype=complex)
    if theta == 0:
        return x.copy()
    shape = np.broadcast_shapes(diag.shape, x.shape)
    n = shape[-1]
    d2 = np.broadcast_to(diag, shape).reshape(-1, n)
    u2 = np.broadcast_to(upper, shape[:-1] + (n - 1,)).reshape(-1, n - 1)
    x2 = np.broadcast_to(x, shape).reshape(-1, n)

    lo, hi = _gershgorin(d2, u2)
    centre = (hi + lo) / 2
    half = np.where(hi > lo, (hi - lo) / 2, 1.0)
    z = theta * half
    long_series = z + 10 * np.cbrt(z) + 40 > SERIES_PER_LEVEL * n

    out = np.empty((d2.shape[0], n), dtype=complex)
    rows = np.nonzero(~long_series)[0]
    if rows.size:
        out[rows] = _chebyshev(d2[rows], u2[rows], theta, x2[rows], centre[rows], half[rows])
    for r in np.nonzero(long_series)[0]:
        out[r] = _spectral(d2[r], u2[r], theta, x2[r])
    return out.reshape(shape)


def _chebyshev(diag, upper, theta, x, centre, half):
    z = theta * half
    zmax = float(np.max(z))
    kmax = int(zmax + 10 * zmax ** (1 / 3) + 40)
    bessel = jv(np.arange(kmax), z[:, None])
    # per-row cutoff, so a row's result does not depend on its batch mates
    big = np.abs(bessel) > _CHEB_TOL
    last = np.where(big.any(axis=1), kmax - 1 - np.argmax(big[:, ::-1], axis=1), 0)
    bessel[np.arange(kmax)[None, :] > last[:, None]] = 0.0
    nterms = max(int(last.max()) + 1, 2)
    k = np.arange(nterms)
    coef = np.where(k == 0, 1.0, 2.0) * (-1j) ** (k % 4) * bessel[:, :nterms]

    h = half[:, None]
    d = (diag - centre[:, None]) / h
    u = upper / h
    uc = np.conj(u)

    def apply(v, out):
        np.multiply(d, v, out=out)
        out[:, :-1] += u * v[:, 1:]
        out[:, 1:] += uc * v[:, :-1]
        return out

    t0 = x.copy()
    t1 = apply(t0, np.empty_like(x))
    acc = coef[:, 0:1] * t0 + coef[:, 1:2] * t1
    t2 = np.empty_like(x)
    for j in range(2, nterms):
        apply(t1, t2)
        t2 *= 2
        t2 -= t0
        acc += coef[:, j:j + 1] * t2
        t0, t1, t2 = t1, t2, t0
    return acc * np.exp(-1j * theta * centre)[:, None]


def _spectral(diag, upper, theta, x):
    # a diagonal phase gauge makes the couplings real and non-negative
    phase = np.exp(1j * np.concatenate(([0.0], np.cumsum(-np.angle(upper)))))
    w, v = eigh_tridiagonal(diag, np.abs(upper))
    y = np.conj(phase) * x
    y = v @ (np.exp(-1j * theta * w) * (v.T @ y))
    return phase * y


def expi_dense(entries, theta, x):
    """Return ``exp(-i theta H) x`` through the eigendecomposition of ``H``."""
    w, v = np.linalg.eigh(entries)
    coeff = np.swapaxes(v.conj(), -1, -2) @ x[..., None]
    phase = np.exp(-1j * theta * w)[..., None]
    return (v @ (phase * coeff))[..., 0]


def evolve_amplitudes(op: PriceOperator, amplitudes, theta, method="auto"):
    """Apply ``exp(-i theta op)`` to ``amplitudes`` without validation."""
    if method not in ("auto", "eigh", "chebyshev"):
        raise DomainError(f"unknown method {method!r}")
    if theta == 0:
        return np.array(amplitudes, dtype=complex)
    if isinstance(op, TridiagonalOperator) and method != "eigh":
        return expi_tridiagonal(op.diag, op.upper, theta, amplitudes)
    if method == "chebyshev":
        raise DomainError("chebyshev stepping needs a tridiagonal operator")
    return expi_dense(op.entries, theta, np.asarray(amplitudes, dtype=complex))


def _check_pair(psi: StateVector, op: PriceOperator):
    if psi.amplitudes.shape[0] != op.dim:
        raise DomainError(
            f"state has {psi.amplitudes.shape[0]} levels, operator has {op.dim}"
        )
    if not op.is_hermitian():
        raise DomainError("operator is not Hermitian")


def step_exact(psi: StateVector, op: PriceOperator, cfg: EvolutionConfig,
               method="auto") -> StateVector:
    """Advance ``psi`` by one step of length ``cfg.dt`` under a fixed operator."""
    _check_pair(psi, op)
    out = evolve_amplitudes(op, psi.amplitudes, cfg.step_phase, method)
    return StateVector(out, psi.grid)


def propagate_realization(psi0: StateVector,
                          operator_source: Callable[[np.random.Generator], PriceOperator],
                          cfg: EvolutionConfig, rng, method="auto") -> RealizationPath:
    """Apply ``cfg.n_steps`` exact steps, drawing operators from ``operator_source``.

    With ``operator_refresh`` off the first draw is reused for every step.
    States are recorded at ``cfg.record_steps`` (the initial state included).
    """
    record = cfg.record_steps
    states = np.empty((record.size, psi0.amplitudes.size), dtype=complex)
    states[0] = psi0.amplitudes
    amps = psi0.amplitudes.copy()
    op = None
    slot = 1
    for step in range(1, cfg.n_steps + 1):
        if op is None or cfg.operator_refresh:
            op = operator_source(rng)
            if step == 1:
                _check_pair(psi0, op)
        amps = evolve_amplitudes(op, amps, cfg.step_phase, method)
        if slot < record.size and record[slot] == step:
            states[slot] = amps
            slot += 1
    seed = getattr(getattr(rng, "bit_generator", None), "seed_seq", None)
    return RealizationPath(states, cfg.dt * record, psi0.grid, seed)


def propagator_matrix(op: PriceOperator, cfg: EvolutionConfig) -> Propagator:
    """Dense single-step propagator ``exp(-i (S/s) dt/tau)``."""
    if not op.is_hermitian():
        raise DomainError("operator is not Hermitian")
    w, v = np.linalg.eigh(op.entries)
    r = (v * np.exp(-1j * cfg.step_phase * w)) @ v.conj().T
    return Propagator(r, cfg.dt_over_tau)


def band_profile(r) -> np.ndarray:
    """Mean ``|R[n, n+k]|`` over n for every offset k = 0 .. dim-1."""
    a = np.abs(np.asarray(getattr(r, "entries", r)))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError("band_profile needs a square matrix")
    return np.array([np.diagonal(a, k).mean() for k in range(a.shape[0])])


def with_unit_price_scale(cfg: EvolutionConfig) -> EvolutionConfig:
    """Copy of ``cfg`` for operators already divided by the price constant."""
    return dataclasses.replace(cfg, price_scale=1.0)
