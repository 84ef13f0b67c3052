"""ARIMA(p, d, q) baseline fitted by conditional sum of squares.

The model on the d-times differenced series ``w`` is

    w_t = c + sum_i phi_i w_{t-i} + e_t + sum_j theta_j e_{t-j}

with innovations before the first ``p`` observations taken as zero. The fit
standardises ``w`` internally so the simplex tolerances are scale-free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter

from .errors import NonStationaryEstimate, TooShort

MAX_ORDER = 5
MAX_ITER = 500
CSS_TOL = 1e-10
PARAM_TOL = 1e-8


@dataclass(frozen=True)
class ArimaOrder:
    p: int = 1
    d: int = 1
    q: int = 1

    def __post_init__(self):
        if min(self.p, self.d, self.q) < 0 or max(self.p, self.d, self.q) > MAX_ORDER:
            raise ValueError(f"orders must lie in [0, {MAX_ORDER}]")
        if self.p + self.q < 1 and self.d < 1:
            raise ValueError("need p + q >= 1 or d >= 1")

    @classmethod
    def parse(cls, text: str) -> "ArimaOrder":
        p, d, q = (int(v) for v in text.replace("(", "").replace(")", "").split(","))
        return cls(p, d, q)

    def __str__(self) -> str:
        return f"({self.p},{self.d},{self.q})"


@dataclass
class ArimaModel:
    order: ArimaOrder
    phi: list[float]
    theta: list[float]
    intercept: float
    sigma2: float
    tail_values: list[float] = field(default_factory=list)
    tail_residuals: list[float] = field(default_factory=list)
    integration_tail: list[float] = field(default_factory=list)
    css: float = 0.0
    n_obs: int = 0

    def __post_init__(self):
        if len(self.phi) != self.order.p or len(self.theta) != self.order.q:
            raise ValueError("coefficient counts must equal the AR and MA orders")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be non-negative")

    @property
    def aic(self) -> float:
        k = self.order.p + self.order.q + 1
        if self.sigma2 <= 0:
            return -math.inf
        return self.n_obs * math.log(self.sigma2) + 2 * k

    def to_dict(self) -> dict:
        return {
            "order": [self.order.p, self.order.d, self.order.q],
            "phi": list(self.phi), "theta": list(self.theta),
            "intercept": self.intercept, "sigma2": self.sigma2,
            "tail_values": list(self.tail_values),
            "tail_residuals": list(self.tail_residuals),
            "integration_tail": list(self.integration_tail),
            "css": self.css, "n_obs": self.n_obs,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArimaModel":
        d = dict(d)
        d["order"] = ArimaOrder(*d["order"])
        return cls(**d)


def css_residuals(z: np.ndarray, c: float, phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Innovations e_p..e_{n-1}, conditioning on z_0..z_{p-1} and zero pre-sample e."""
    p = phi.size
    r = z[p:] - c
    for i in range(p):
        r = r - phi[i] * z[p - 1 - i: z.size - 1 - i]
    if theta.size:
        r = lfilter([1.0], np.concatenate(([1.0], theta)), r)
    return r


def _lagged(x: np.ndarray, lags: int, start: int) -> np.ndarray:
    return np.column_stack([x[start - k: x.size - k] for k in range(1, lags + 1)]) if lags else \
        np.empty((x.size - start, 0))


def _ols(y: np.ndarray, X: np.ndarray) -> np.ndarray:
    return np.linalg.lstsq(X, y, rcond=None)[0]


def hannan_rissanen(z: np.ndarray, p: int, q: int) -> np.ndarray:
    """Two-stage regression start values ``[c, phi..., theta...]``."""
    n = z.size
    if q == 0:
        X = np.column_stack([np.ones(n - p), _lagged(z, p, p)])
        return _ols(z[p:], X)
    m = max(p + q, min(20, n // 10))
    X = np.column_stack([np.ones(n - m), _lagged(z, m, m)])
    beta = _ols(z[m:], X)
    resid = np.zeros(n)
    resid[m:] = z[m:] - X @ beta
    start = m + q
    X2 = np.column_stack([np.ones(n - start), _lagged(z, p, start), _lagged(resid, q, start)])
    return _ols(z[start:], X2)


def _admissible_start(x0: np.ndarray, p: int, q: int) -> np.ndarray:
    """Zero the AR or MA start block if it lies outside the stationary/invertible region.

    From a non-invertible MA start the innovation filter explodes, every
    simplex vertex hits the barrier value and the search never moves.
    """
    x0 = np.array(x0, dtype=np.float64)
    phi, theta = x0[1:1 + p], x0[1 + p:]
    if p and np.min(np.abs(ar_roots(phi))) <= 1.0:
        x0[1:1 + p] = 0.0
    if q and np.min(np.abs(ar_roots(-theta))) <= 1.0:
        x0[1 + p:] = 0.0
    return x0


def difference(x: np.ndarray, d: int) -> tuple[np.ndarray, list[float]]:
    """d-fold difference plus the last value of each intermediate level."""
    tail = []
    for _ in range(d):
        tail.append(float(x[-1]))
        x = np.diff(x)
    return x, tail


def integrate(forecast: np.ndarray, integration_tail: list[float]) -> np.ndarray:
    """Undo ``difference`` for a forecast continuing past the training data."""
    for last in reversed(integration_tail):
        forecast = last + np.cumsum(forecast)
    return forecast


def ar_roots(phi) -> np.ndarray:
    """Roots of 1 - phi_1 z - ... - phi_p z^p."""
    phi = np.asarray(phi, dtype=np.float64)
    if phi.size == 0 or not np.any(phi):
        return np.empty(0)
    return np.roots(np.concatenate((-phi[::-1], [1.0])))


def arima_fit(u, order: ArimaOrder | tuple = ArimaOrder()) -> ArimaModel:
    if not isinstance(order, ArimaOrder):
        order = ArimaOrder(*order)
    p, d, q = order.p, order.d, order.q
    y = np.asarray(getattr(u, "values", u), dtype=np.float64)
    need = 10 * (p + q + 1) + d
    if y.size < need:
        raise TooShort(f"ARIMA{order} needs at least {need} values, got {y.size}")

    w, integration_tail = difference(y, d)
    mu, s = float(np.mean(w)), float(np.std(w))
    if s == 0.0:
        return ArimaModel(order, [0.0] * p, [0.0] * q, mu, 0.0, [float(v) for v in w[-p:]] if p else [],
                          [0.0] * q, integration_tail, 0.0, w.size - p)
    z = (w - mu) / s

    def objective(x):
        with np.errstate(over="ignore", invalid="ignore"):
            e = css_residuals(z, x[0], x[1:1 + p], x[1 + p:])
            val = float(np.mean(e * e))
        return val if math.isfinite(val) else 1e300

    x0 = _admissible_start(hannan_rissanen(z, p, q), p, q)
    if p + q == 0:
        x = np.array([float(np.mean(z))])
    else:
        res = minimize(objective, x0, method="Nelder-Mead",
                       options={"maxiter": MAX_ITER, "fatol": CSS_TOL, "xatol": PARAM_TOL})
        x = res.x
    c, phi, theta = float(x[0]), x[1:1 + p], x[1 + p:]

    roots = ar_roots(phi)
    if roots.size and np.min(np.abs(roots)) <= 1.0:
        raise NonStationaryEstimate(
            f"AR root modulus {np.min(np.abs(roots)):.4g} is inside the unit circle")

    with np.errstate(over="ignore", invalid="ignore"):
        e = css_residuals(z, c, phi, theta)
        css = float(np.mean(e * e))
    if not math.isfinite(css):
        raise NonStationaryEstimate("MA part is not invertible; innovations diverge")
    return ArimaModel(
        order=order,
        phi=[float(v) for v in phi],
        theta=[float(v) for v in theta],
        intercept=mu * (1.0 - float(np.sum(phi))) + s * c,
        sigma2=s * s * css,
        tail_values=[float(v) for v in w[w.size - p:]] if p else [],
        tail_residuals=[float(v) for v in s * e[e.size - q:]] if q else [],
        integration_tail=integration_tail,
        css=css,
        n_obs=int(e.size),
    )


def arima_forecast(m: ArimaModel, horizon: int) -> list[float]:
    """Recursive forecast with future innovations zero, re-integrated d times."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    p, q = m.order.p, m.order.q
    w = list(m.tail_values)
    e = list(m.tail_residuals)
    out = np.empty(horizon)
    for h in range(horizon):
        val = m.intercept
        for i in range(p):
            val += m.phi[i] * w[-1 - i]
        for j in range(q):
            val += m.theta[j] * e[-1 - j]
        out[h] = val
        if p:
            w.append(val)
        if q:
            e.append(0.0)
    return [float(v) for v in integrate(out, m.integration_tail)]


def arima_select(u, max_p: int = 3, max_d: int = 2, max_q: int = 3) -> ArimaModel:
    """Lowest-AIC fit over the order grid; orders that fail to fit are skipped."""
    best = None
    for d in range(max_d + 1):
        for p in range(max_p + 1):
            for q in range(max_q + 1):
                if p + q == 0 and d == 0:
                    continue
                try:
                    model = arima_fit(u, ArimaOrder(p, d, q))
                except (NonStationaryEstimate, TooShort):
                    continue
                if best is None or model.aic < best.aic:
                    best = model
    if best is None:
        raise NonStationaryEstimate("no order in the search grid produced a valid fit")
    return best
