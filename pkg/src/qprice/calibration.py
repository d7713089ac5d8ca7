"""OHLC ingestion, spread curves and model calibration.

The calibration recipe has three stages:

1. ``w0`` is the mean one-bar relative range ``ln(high / low)``.
2. The disorder scales are matched to the one-bar return distribution.  A
   one-step return is an eigenvalue displacement of the disordered
   generator, weighted by the overlap of its eigenvector with the current
   price level.  The second moment of that measure fixes the overall scale
   and the excess kurtosis fixes the drift-to-diffusion ratio, since one
   moment cannot separate the two scales.
3. ``tau`` is the onset of the width plateau in a saturation scan run with
   the calibrated scales.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.stats import kurtosis

from .continuum import DriftDiffusionField, GridSpec, WavePacket, field_generator_bands
from .ensemble_stats import ModelSetup, SaturationScan, saturation_scan
from .errors import (BarParseError, BoundaryLeakageError, CalibrationError, DegenerateDataError,
                     DomainError)
from .evolution import EvolutionConfig

BAR_COLUMNS = ("timestamp", "open", "high", "low", "close", "volume")
CURVE_COLUMNS = ("horizon_steps", "width", "count")
WINDOW = 5
RHO_MAX = 2.0
GRID_MIN = 201
GRID_SPAN = 15  # half-width in units of the random-walk width bound
GRID_RETRIES = 3


@dataclass(frozen=True)
class OhlcBar:
    timestamp: float  # epoch seconds
    open: float
    high: float
    low: float
    close: float
    volume: float = 0.0

    def __post_init__(self):
        _check_bar(self.open, self.high, self.low, self.close, self.volume)


def _check_bar(o, h, lo, c, v):
    for name, value in (("open", o), ("high", h), ("low", lo), ("close", c)):
        if not (math.isfinite(value) and value > 0):
            raise DomainError(f"{name} must be a positive finite price")
    if h < lo:
        raise DomainError("high is below low")
    if lo > min(o, c):
        raise DomainError("low is above open or close")
    if h < max(o, c):
        raise DomainError("high is below open or close")
    if not v >= 0:
        raise DomainError("volume must be non-negative")


class Bars:
    """Column-oriented bar series; indexing yields :class:`OhlcBar`."""

    def __init__(self, timestamp, open, high, low, close, volume=None):
        cols = [np.asarray(a, dtype=float) for a in (timestamp, open, high, low, close)]
        if volume is None:
            volume = np.zeros_like(cols[0])
        cols.append(np.asarray(volume, dtype=float))
        if len({c.shape for c in cols}) != 1 or cols[0].ndim != 1:
            raise DomainError("bar columns must be 1-D arrays of equal length")
        (self.timestamp, self.open, self.high, self.low,
         self.close, self.volume) = cols
        for c in cols:
            c.setflags(write=False)

    @classmethod
    def from_bars(cls, bars: Sequence[OhlcBar]) -> "Bars":
        if isinstance(bars, Bars):
            return bars
        rows = [(b.timestamp, b.open, b.high, b.low, b.close, b.volume) for b in bars]
        cols = np.array(rows, dtype=float).reshape(-1, 6).T
        return cls(*cols)

    def __len__(self):
        return self.timestamp.size

    def __getitem__(self, i) -> OhlcBar:
        return OhlcBar(float(self.timestamp[i]), float(self.open[i]), float(self.high[i]),
                       float(self.low[i]), float(self.close[i]), float(self.volume[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def scaled(self, c: float) -> "Bars":
        """Same bars with every price multiplied by ``c``."""
        return Bars(self.timestamp, self.open * c, self.high * c, self.low * c,
                    self.close * c, self.volume)


class SpreadCurve(NamedTuple):
    horizons: np.ndarray
    widths: np.ndarray
    counts: np.ndarray


@dataclass(frozen=True)
class FitResult:
    w_dt: float
    beta_eps: float
    rms_residual: float
    horizon_min: int
    horizon_max: int
    degenerate: bool = False

    def to_json(self) -> dict:
        return {"w_dt": self.w_dt, "beta_eps": self.beta_eps,
                "rms_residual": self.rms_residual,
                "horizon_min": self.horizon_min, "horizon_max": self.horizon_max}


@dataclass(frozen=True)
class CalibrationConfig:
    """Search settings for :func:`calibrate_model`.

    ``dx`` defaults to ``w0 / 4`` and ``dt`` to the median bar spacing.
    ``tau_values`` defaults to thirteen values whose disorder strength
    ``sigma_gamma * dt / (tau * dx**2)`` runs from 10**-1.5 to 10**2.5.
    ``grid_points`` of ``None`` sizes the scan grid from the one-step
    dispersion and doubles it (at most ``GRID_RETRIES`` times) if the packet
    reaches the edges; an explicit value is used as given.
    """

    dx: float | None = None
    dt: float | None = None
    tau_values: tuple | None = None
    horizon_steps: int = 30
    grid_points: int | None = None
    ensemble_size: int = 16
    n_draws: int = 200_000
    std_rtol: float = 0.02
    max_rescale: int = 5
    fit_horizons: tuple | None = None

    def __post_init__(self):
        if self.dx is not None and not self.dx > 0:
            raise DomainError("dx must be positive")
        if self.dt is not None and not self.dt > 0:
            raise DomainError("dt must be positive")
        if self.n_draws < 10_000:
            raise DomainError("moment matching needs at least 10^4 operator draws")
        if self.grid_points is not None and self.grid_points < 3:
            raise DomainError("grid_points must be at least 3")
        if self.horizon_steps < 1 or self.ensemble_size < 1:
            raise DomainError("horizon_steps and ensemble_size must be positive")
        if self.tau_values is not None and len(self.tau_values) < 3:
            raise DomainError("tau_values needs at least 3 entries")


@dataclass(frozen=True)
class CalibratedModel:
    w0: float
    sigma_mu: float
    sigma_gamma: float
    tau: float
    dx: float
    dt: float
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (self.w0 > 0 and self.tau > 0 and self.dx > 0 and self.dt > 0):
            raise DomainError("w0, tau, dx and dt must be positive")
        if not (self.sigma_mu >= 0 and self.sigma_gamma >= 0):
            raise DomainError("disorder scales must be non-negative")

    def to_json(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k != "details"}
        out["details"] = self.details
        return out


# -- ingestion -------------------------------------------------------------

def _parse_iso(text: str) -> float:
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    t = datetime.fromisoformat(text)
    if t.tzinfo is None:
        t = t.replace(tzinfo=timezone.utc)
    return t.timestamp()


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_bars(source, fmt: str = "csv") -> Bars:
    """Parse bars from a path, bytes or a binary/text stream.

    The timestamp column is either ISO-8601 or epoch seconds, decided once
    from the first data row.  Rows are numbered as file lines (the header is
    line 1).  The result is sorted by timestamp (stable).
    """
    if fmt != "csv":
        raise DomainError(f"unsupported bar format {fmt!r}")
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
    elif isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    else:
        data = source.read()
    text = data.decode("utf-8-sig") if isinstance(data, bytes) else data.lstrip("\ufeff")

    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != BAR_COLUMNS:
        raise BarParseError(1, "header", f"expected {','.join(BAR_COLUMNS)}")

    rows = []
    epoch = None
    for line, rec in enumerate(reader, start=2):
        if not rec or all(not c.strip() for c in rec):
            continue
        if len(rec) != len(BAR_COLUMNS):
            raise BarParseError(line, "row", f"expected 6 fields, got {len(rec)}")
        rec = [c.strip() for c in rec]
        if epoch is None:
            epoch = _is_number(rec[0])
        try:
            ts = float(rec[0]) if epoch else _parse_iso(rec[0])
        except ValueError:
            kind = "epoch seconds" if epoch else "ISO-8601"
            raise BarParseError(line, "timestamp", f"not {kind}: {rec[0]!r}") from None
        values = []
        for name, cell in zip(BAR_COLUMNS[1:], rec[1:]):
            try:
                v = float(cell)
            except ValueError:
                raise BarParseError(line, name, f"not a number: {cell!r}") from None
            if not math.isfinite(v):
                raise BarParseError(line, name, "not finite")
            values.append(v)
        o, h, lo, c, vol = values
        for name, v in (("open", o), ("high", h), ("low", lo), ("close", c)):
            if v <= 0:
                raise BarParseError(line, name, "price must be positive")
        if h < lo:
            raise BarParseError(line, "high", "high is below low")
        if lo > min(o, c):
            raise BarParseError(line, "low", "low is above open or close")
        if h < max(o, c):
            raise BarParseError(line, "high", "high is below open or close")
        if vol < 0:
            raise BarParseError(line, "volume", "volume must be non-negative")
        rows.append((ts, o, h, lo, c, vol))

    cols = np.array(rows, dtype=float).reshape(-1, 6)
    order = np.argsort(cols[:, 0], kind="stable")
    return Bars(*cols[order].T)


def bars_to_csv(bars, epoch: bool = True) -> str:
    b = Bars.from_bars(bars)
    out = io.StringIO()
    out.write(",".join(BAR_COLUMNS) + "\n")
    for i in range(len(b)):
        ts = b.timestamp[i]
        stamp = repr(float(ts)) if epoch else datetime.fromtimestamp(ts, timezone.utc).isoformat()
        vals = (b.open[i], b.high[i], b.low[i], b.close[i], b.volume[i])
        out.write(stamp + "," + ",".join(repr(float(v)) for v in vals) + "\n")
    return out.getvalue()


# -- spread curves -----------------------------------------------------------

def empirical_spread_curve(bars, horizons) -> SpreadCurve:
    """Mean block width ``ln(max high / min low)`` over non-overlapping blocks.

    Trailing bars that do not fill a whole block are dropped.
    """
    b = Bars.from_bars(bars)
    h = np.asarray(horizons)
    if h.size == 0:
        raise DomainError("horizon list is empty")
    if np.any(h != np.floor(h)) or np.any(h < 1):
        raise DomainError("horizons must be positive integers")
    h = h.astype(int)
    if np.any(np.diff(h) <= 0):
        raise DomainError("horizons must be strictly increasing")
    if h[-1] > len(b):
        raise DomainError(f"horizon {h[-1]} exceeds the {len(b)} available bars")
    log_high = np.log(b.high)
    log_low = np.log(b.low)
    widths = np.empty(h.size)
    counts = np.empty(h.size, dtype=int)
    for i, k in enumerate(h):
        m = len(b) // k
        hi = log_high[: m * k].reshape(m, k).max(axis=1)
        lo = log_low[: m * k].reshape(m, k).min(axis=1)
        widths[i] = np.mean(hi - lo)
        counts[i] = m
    return SpreadCurve(h, widths, counts)


def fit_spread_curve(curve: SpreadCurve) -> FitResult:
    """Fit the spread-curve law linearly in ``w**2``.

    ``w**2 = w_dt**2 + beta_eps**2 (k - 1)`` is solved by least squares with
    weights ``1 / w**4``, i.e. on relative residuals, so that short horizons
    are not swamped by the large widths of long ones.  A negative slope is
    clamped to zero and the intercept refitted alone; the result is then
    flagged ``degenerate``.
    """
    k = np.asarray(curve.horizons, dtype=float)
    w = np.asarray(curve.widths, dtype=float)
    if k.size < 3:
        raise DomainError("fit needs at least 3 curve points")
    if np.any(w <= 0):
        raise DomainError("spread curve contains non-positive widths")
    y = w ** 2
    a = np.column_stack([np.ones_like(k), k - 1]) / y[:, None]
    (c0, c1), *_ = np.linalg.lstsq(a, np.ones_like(y), rcond=None)
    # slopes within rounding of the intercept are a flat curve, not a trend
    tiny = 64 * np.finfo(float).eps * abs(c0)
    degenerate = c1 < -tiny
    if degenerate:
        c0 = np.sum(1 / y) / np.sum(1 / y ** 2)
    if c1 <= tiny:
        c1 = 0.0
    if not c0 > 0:
        raise DomainError("fitted one-step width squared is not positive")
    w_dt = math.sqrt(c0)
    beta_eps = math.sqrt(c1)
    model = np.sqrt(c0 + c1 * (k - 1))
    rms = float(np.sqrt(np.mean((model / w - 1) ** 2)))
    return FitResult(w_dt, beta_eps, rms, int(k[0]), int(k[-1]), bool(degenerate))


def curve_to_csv(curve: SpreadCurve) -> str:
    out = io.StringIO()
    out.write(",".join(CURVE_COLUMNS) + "\n")
    for h, w, c in zip(curve.horizons, curve.widths, curve.counts):
        out.write(f"{int(h)},{float(w)!r},{int(c)}\n")
    return out.getvalue()


def curve_from_csv(source) -> SpreadCurve:
    text = source.decode("utf-8") if isinstance(source, bytes) else source
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != CURVE_COLUMNS:
        raise BarParseError(1, "header", f"expected {','.join(CURVE_COLUMNS)}")
    rows = []
    for line, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != 3:
            raise BarParseError(line, "row", "expected 3 fields")
        try:
            rows.append((float(rec[0]), float(rec[1]), float(rec[2])))
        except ValueError as exc:
            raise BarParseError(line, "row", str(exc)) from None
    arr = np.array(rows, dtype=float).reshape(-1, 3)
    return SpreadCurve(arr[:, 0].astype(int), arr[:, 1], arr[:, 2].astype(int))


def fit_to_json(fit: FitResult) -> str:
    return json.dumps(fit.to_json(), indent=2, sort_keys=True)


# -- moment matching ---------------------------------------------------------

def _window_operators(z_mu, z_gamma, rho):
    """Dense window generators for unit diffusion scale and drift ratio ``rho``.

    With ``dx = 1`` and ``sigma_gamma = 1`` the bands are the generator's in
    units of ``sigma_gamma / dx**2``; ``rho = sigma_mu dx / (2 sigma_gamma)``.
    """
    n = z_gamma.shape[-1]
    mu = 2 * rho * np.broadcast_to(z_mu[:, None], z_gamma.shape)
    diag, bond = field_generator_bands(mu, z_gamma, 1.0)
    h = np.zeros(z_gamma.shape + (n,), dtype=complex)
    idx = np.arange(n)
    h[:, idx, idx] = diag
    h[:, idx[:-1], idx[1:]] = bond
    h[:, idx[1:], idx[:-1]] = np.conj(bond)
    return h


def _raw_moments(z_mu, z_gamma, rho):
    """Mean of ``(H**k)_cc`` for k = 1..4 at the window centre."""
    h = _window_operators(z_mu, z_gamma, rho)
    c = h.shape[-1] // 2
    col = h[:, :, c]
    h2 = h @ col[:, :, None]
    h2 = h2[:, :, 0]
    m1 = col[:, c].real
    m2 = h2[:, c].real
    m3 = np.einsum("rj,rj->r", h[:, c, :], h2).real
    m4 = np.einsum("rj,rj->r", np.conj(h2), h2).real
    return np.array([m1.mean(), m2.mean(), m3.mean(), m4.mean()])


def _central(raw):
    m1, m2, m3, m4 = raw
    var = m2 - m1 ** 2
    c4 = m4 - 4 * m1 * m3 + 6 * m1 ** 2 * m2 - 3 * m1 ** 4
    return var, c4 / var ** 2 - 3


class _MomentModel:
    """Raw moments as exact polynomials in ``rho`` for a fixed set of draws."""

    def __init__(self, rng, n_draws):
        self.z_mu = rng.standard_normal(n_draws)
        self.z_gamma = rng.standard_normal((n_draws, WINDOW))
        nodes = np.linspace(0.0, RHO_MAX, 5)
        vals = np.array([_raw_moments(self.z_mu, self.z_gamma, r) for r in nodes])
        self.poly = [np.polynomial.Polynomial.fit(nodes, vals[:, j], 4) for j in range(4)]

    def stats(self, rho):
        return _central([p(rho) for p in self.poly])

    def variance(self, rho):
        return self.stats(rho)[0]

    def kurtosis(self, rho):
        return self.stats(rho)[1]


def spectral_std(sigma_mu, sigma_gamma, dx, rng, n_draws) -> float:
    """Std of one-step displacements from eigendecompositions of window operators."""
    z_mu = rng.standard_normal(n_draws)
    z_gamma = rng.standard_normal((n_draws, WINDOW))
    mu = sigma_mu * np.broadcast_to(z_mu[:, None], z_gamma.shape)
    diag, bond = field_generator_bands(mu, sigma_gamma * z_gamma, dx)
    n = WINDOW
    h = np.zeros((n_draws, n, n), dtype=complex)
    idx = np.arange(n)
    h[:, idx, idx] = diag
    h[:, idx[:-1], idx[1:]] = bond
    h[:, idx[1:], idx[:-1]] = np.conj(bond)
    e, v = np.linalg.eigh(h)
    weight = np.abs(v[:, n // 2, :]) ** 2
    mean = np.sum(weight * e) / n_draws
    return float(np.sqrt(np.sum(weight * (e - mean) ** 2) / n_draws))


def match_disorder(returns, dx, seed, n_draws=200_000, std_rtol=0.02, max_rescale=5):
    """Disorder scales ``(sigma_mu, sigma_gamma, info)`` matching one-step returns.

    The drift ratio is taken from the excess kurtosis on the branch where it
    decreases with ``rho``; outside the attainable range it is clamped and
    ``info['rho_clamped']`` is set.  The scale is then checked against an
    independent batch of eigendecompositions and rescaled up to
    ``max_rescale`` times before giving up.
    """
    r = np.asarray(returns, dtype=float)
    target_std = float(np.std(r))
    target_kurt = float(kurtosis(r))
    if not target_std > 0:
        raise DegenerateDataError("one-step returns have zero dispersion")
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    fit_rng, check_rng = (np.random.default_rng(s) for s in seed.spawn(2))
    model = _MomentModel(fit_rng, n_draws)

    grid = np.linspace(0.0, RHO_MAX, 401)
    kurt = np.array([model.kurtosis(x) for x in grid])
    turn = int(np.argmin(kurt))
    rho_hi = float(grid[turn])
    clamped = False
    if target_kurt >= kurt[0]:
        rho, clamped = 0.0, target_kurt > kurt[0]
    elif target_kurt <= kurt[turn]:
        rho, clamped = rho_hi, True
    else:
        rho = brentq(lambda x: model.kurtosis(x) - target_kurt, 0.0, rho_hi, xtol=1e-12)

    s_gamma = target_std / math.sqrt(model.variance(rho))
    best = None
    for attempt in range(max_rescale + 1):
        sigma_gamma = s_gamma * dx ** 2
        sigma_mu = 2 * dx * rho * s_gamma
        got = spectral_std(sigma_mu, sigma_gamma, dx, check_rng, max(n_draws // 4, 10_000))
        err = got / target_std - 1
        best = {"sigma_mu": sigma_mu, "sigma_gamma": sigma_gamma, "rho": rho,
                "model_std": got, "target_std": target_std, "relative_error": err}
        if abs(err) <= std_rtol:
            info = dict(best, target_kurtosis=target_kurt, model_kurtosis=model.kurtosis(rho),
                        rho_clamped=bool(clamped), rescales=attempt)
            return sigma_mu, sigma_gamma, info
        s_gamma /= 1 + err
    raise CalibrationError("disorder scales did not reproduce the return dispersion", best)


def default_tau_values(sigma_gamma, dt, dx):
    strength = 10.0 ** np.arange(-1.5, 2.5 + 1e-9, 1 / 3)
    return sigma_gamma * dt / (dx ** 2 * strength)


def default_fit_horizons(n_bars):
    top = max(3, min(390, n_bars // 20))
    h = np.unique(np.round(np.geomspace(1, top, 14)).astype(int))
    return h if h.size >= 3 else np.arange(1, 4)


def calibrate_model(bars, config: CalibrationConfig = CalibrationConfig(), seed=0,
                    threads: int = 1) -> CalibratedModel:
    """Calibrate ``(w0, sigma_mu, sigma_gamma, tau)`` to a bar series.

    ``details`` records the spread curve and its fit, the moment-matching
    diagnostics and the saturation scan.
    """
    b = Bars.from_bars(bars)
    if len(b) < 100:
        raise DomainError("calibration needs at least 100 bars")
    curve1 = empirical_spread_curve(b, [1])
    w0 = float(curve1.widths[0])
    returns = np.diff(np.log(b.close))
    if not w0 > 0 or not np.std(returns) > 0:
        raise DegenerateDataError(
            "degenerate data: bars have zero high-low range or zero returns",
            {"w0": w0, "return_std": float(np.std(returns))},
        )
    dx = config.dx if config.dx is not None else w0 / 4
    if config.dt is not None:
        dt = config.dt
    else:
        dt = float(np.median(np.diff(b.timestamp)))
        if not dt > 0:
            raise DegenerateDataError("bar timestamps do not advance", {"w0": w0})

    match_seed, scan_seed = np.random.SeedSequence(seed).spawn(2)
    sigma_mu, sigma_gamma, info = match_disorder(
        returns, dx, match_seed, config.n_draws,
        config.std_rtol, config.max_rescale)

    tau_values = (np.asarray(config.tau_values, dtype=float) if config.tau_values is not None
                  else default_tau_values(sigma_gamma, dt, dx))
    scan = scan_model(w0, sigma_mu, sigma_gamma, dx, dt, tau_values, config, scan_seed, threads)

    horizons = (np.asarray(config.fit_horizons) if config.fit_horizons is not None
                else default_fit_horizons(len(b)))
    curve = empirical_spread_curve(b, horizons)
    fit = fit_spread_curve(curve)
    details = {
        "moment_match": info,
        "scan": {"tau": scan.tau.tolist(), "final_width": scan.final_width.tolist(),
                 "plateau": scan.plateau, "onset_index": scan.onset_index},
        "curve": {"horizons": curve.horizons.tolist(), "widths": curve.widths.tolist(),
                  "counts": curve.counts.tolist()},
        "fit": fit.to_json(),
    }
    return CalibratedModel(w0, sigma_mu, sigma_gamma, scan.onset_tau, dx, dt, details)


def scan_grid_points(w0, sigma_mu, sigma_gamma, dx, horizon_steps) -> int:
    """Odd node count covering ``GRID_SPAN`` random-walk width bounds each side.

    The bound is ``sqrt(w0**2 + T s**2)`` with ``s`` the one-step spectral
    dispersion, estimated from a fixed batch so the size is reproducible.
    """
    step = spectral_std(sigma_mu, sigma_gamma, dx, np.random.default_rng(0), 10_000)
    bound = math.sqrt(w0 ** 2 + horizon_steps * step ** 2)
    return max(GRID_MIN, 2 * math.ceil(GRID_SPAN * bound / dx) + 1)


def scan_model(w0, sigma_mu, sigma_gamma, dx, dt, tau_values, config: CalibrationConfig,
               seed, threads=1) -> SaturationScan:
    """Saturation scan of the disordered model at the calibrated scales."""
    field_ = DriftDiffusionField(mu_sigma=sigma_mu, gamma_sigma=sigma_gamma, mode="disordered")
    evolution = EvolutionConfig(tau=float(np.max(tau_values)), dt=dt,
                                n_steps=config.horizon_steps)
    if config.grid_points is not None:
        n, retries = config.grid_points, 0
    else:
        n = scan_grid_points(w0, sigma_mu, sigma_gamma, dx, config.horizon_steps)
        retries = GRID_RETRIES
    while True:
        grid = GridSpec(-(n - 1) * dx / 2, (n - 1) * dx / 2, n)
        setup = ModelSetup(grid, WavePacket(w0), field_, evolution)
        try:
            return saturation_scan(setup, tau_values, config.ensemble_size, seed, threads)
        except BoundaryLeakageError:
            if retries == 0:
                raise
            retries -= 1
            n = 2 * n - 1


# -- published fits ----------------------------------------------------------

_REFERENCE_FITS = {
    "LULU,1min": (0.0007, 0.001),
    "LULU,daily": (0.0317, 0.0379),
    "AAPL,1min": (0.0007, 0.00072),
    "AAPL,daily": (0.0197, 0.0241),
}

# average relative bid-ask spreads quoted alongside the intraday fits
REFERENCE_BID_ASK = {"LULU,1min": 0.0006, "AAPL,1min": 0.0001}


def reference_fits(key: str | None = None):
    """Published ``(w_dt, beta_eps)`` pairs keyed ``"SYMBOL,interval"``.

    Without a key the whole table is returned; an unknown key gives ``None``.
    """
    if key is None:
        return dict(_REFERENCE_FITS)
    return _REFERENCE_FITS.get(key)


# -- synthetic bars ----------------------------------------------------------

def _bars_from_log_paths(open_log, trade_logs, dt, start_time):
    close_log = trade_logs[:, -1]
    high = np.exp(np.maximum(open_log, trade_logs.max(axis=1)))
    low = np.exp(np.minimum(open_log, trade_logs.min(axis=1)))
    n = open_log.size
    ts = start_time + dt * np.arange(n)
    vol = np.full(n, float(trade_logs.shape[1]))
    return Bars(ts, np.exp(open_log), high, low, np.exp(close_log), vol)


def model_bars(n_bars, sigma_mu, sigma_gamma, dx, rng, trades_per_bar=4,
               start_price=100.0, dt=60.0, start_time=1_458_135_000.0, window=9) -> Bars:
    """Bars whose trades are one-step displacements of the disordered model.

    For each bar a window generator is drawn; each trade's log-price is the
    open plus an eigenvalue sampled with the weight of its eigenvector at the
    window centre.  The bar closes at its last trade and the next bar opens
    there.
    """
    z_mu = rng.standard_normal(n_bars)
    z_gamma = rng.standard_normal((n_bars, window))
    mu = sigma_mu * np.broadcast_to(z_mu[:, None], z_gamma.shape)
    diag, bond = field_generator_bands(mu, sigma_gamma * z_gamma, dx)
    h = np.zeros((n_bars, window, window), dtype=complex)
    idx = np.arange(window)
    h[:, idx, idx] = diag
    h[:, idx[:-1], idx[1:]] = bond
    h[:, idx[1:], idx[:-1]] = np.conj(bond)
    e, v = np.linalg.eigh(h)
    weight = np.abs(v[:, window // 2, :]) ** 2
    cdf = np.cumsum(weight, axis=1)
    cdf /= cdf[:, -1:]
    u = rng.random((n_bars, trades_per_bar))
    pick = np.minimum((u[:, :, None] > cdf[:, None, :]).sum(axis=2), window - 1)
    moves = np.take_along_axis(e, pick, axis=1)
    close_moves = moves[:, -1]
    open_log = math.log(start_price) + np.concatenate(([0.0], np.cumsum(close_moves)[:-1]))
    return _bars_from_log_paths(open_log, open_log[:, None] + moves, dt, start_time)


def random_walk_bars(n_bars, step_std, rng, trades_per_bar=4, half_spread=0.0,
                     start_price=100.0, dt=60.0, start_time=1_458_135_000.0) -> Bars:
    """Bars from a Gaussian random walk of the log mid-price.

    The mid moves ``trades_per_bar`` times per bar with total per-bar std
    ``step_std``; each trade prints at the mid plus or minus ``half_spread``
    (log units) with a random side.
    """
    m = trades_per_bar
    steps = rng.standard_normal((n_bars, m)) * (step_std / math.sqrt(m))
    mid = math.log(start_price) + np.cumsum(steps.ravel()).reshape(n_bars, m)
    side = np.where(rng.random((n_bars, m)) < 0.5, -1.0, 1.0)
    trades = mid + half_spread * side
    open_log = np.concatenate(([math.log(start_price)], trades[:-1, -1]))
    return _bars_from_log_paths(open_log, trades, dt, start_time)
