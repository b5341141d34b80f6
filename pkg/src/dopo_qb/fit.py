"""Curve fits and series utilities used to summarize simulations."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import FitError, InvalidArgumentError, NotConvergedError

LOG_FLOOR = 1e-12


@dataclass(frozen=True)
class FitResult:
    """``params`` is (slope, intercept) for linear fits, (A, k, x0) for logistic.

    ``r`` is the absolute Pearson correlation of the data for linear fits and
    of data vs. model for logistic fits.
    """

    kind: str
    params: tuple
    r: float
    residual_rms: float
    flags: tuple = ()
    dropped: int = 0


def _series(x, y, min_len):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidArgumentError("x and y must be 1-D series of equal length")
    if x.size < min_len:
        raise InvalidArgumentError(f"need at least {min_len} points, got {x.size}")
    return x, y


def _pearson(a, b):
    da, db = a - a.mean(), b - b.mean()
    den = np.sqrt(np.dot(da, da) * np.dot(db, db))
    if den == 0:
        return None
    return float(np.clip(np.dot(da, db) / den, -1.0, 1.0))


def linear_fit(x, y):
    x, y = _series(x, y, 3)
    if np.ptp(x) == 0:
        raise InvalidArgumentError("x values are all equal")
    xm, ym = x.mean(), y.mean()
    slope = float(np.dot(x - xm, y - ym) / np.dot(x - xm, x - xm))
    intercept = float(ym - slope * xm)
    resid = y - (slope * x + intercept)
    r = _pearson(x, y)
    flags = ()
    if r is None:
        r, flags = 0.0, ("degenerate",)
    return FitResult("linear", (slope, intercept), abs(r), float(np.sqrt(np.mean(resid ** 2))), flags)


def log_linear_fit(x, y, floor=LOG_FLOOR):
    """Linear fit of ln y against x, dropping points with y <= floor."""
    x, y = _series(x, y, 3)
    keep = y > floor
    res = linear_fit(x[keep], np.log(y[keep]))
    return FitResult(res.kind, res.params, res.r, res.residual_rms, res.flags,
                     dropped=int((~keep).sum()))


def logistic(x, amplitude, rate, center):
    return amplitude * expit(rate * (np.asarray(x, dtype=float) - center))


def _best_amplitude(x, y, rate, center):
    s = logistic(x, 1.0, rate, center)
    ss = np.dot(s, s)
    amp = np.dot(s, y) / ss if ss > 0 else 0.0
    return amp, np.sum((y - amp * s) ** 2)


def logistic_fit(x, y, max_iter=200, tol=1e-10):
    """Fit y = A / (1 + exp(-k (x - x0))).

    A coarse grid over (k, x0), with A solved linearly at each node, seeds a
    damped Gauss-Newton refinement.  A negative fitted rate is reported in
    ``flags``; failure to converge raises FitError with the best parameters.
    """
    x, y = _series(x, y, 5)
    if np.any(y < 0):
        raise InvalidArgumentError("logistic fit needs nonnegative data")
    span = np.ptp(x)
    if span == 0:
        raise InvalidArgumentError("x values are all equal")
    rates = np.concatenate([-np.geomspace(0.1, 100, 40)[::-1], np.geomspace(0.1, 100, 40)]) / span
    centers = np.linspace(x.min() - span, x.max() + span, 61)
    best = None
    for k in rates:
        for c in centers:
            amp, sse = _best_amplitude(x, y, k, c)
            if best is None or sse < best[0]:
                best = (sse, amp, k, c)
    theta = np.array(best[1:], dtype=float)

    def residual(th):
        return y - logistic(x, *th)

    sse = np.sum(residual(theta) ** 2)
    converged = False
    for _ in range(max_iter):
        a, k, c = theta
        s = expit(k * (x - c))
        ds = s * (1.0 - s)  # d s / d(k (x - c))
        jac = np.column_stack([s, a * ds * (x - c), -a * ds * k])
        res = residual(theta)
        step, *_ = np.linalg.lstsq(jac, res, rcond=None)
        lam = 1.0
        while lam > 1e-8:
            trial = theta + lam * step
            trial_sse = np.sum(residual(trial) ** 2)
            if trial_sse <= sse:
                break
            lam *= 0.5
        else:
            trial, trial_sse = theta, sse
        change = np.max(np.abs(trial - theta) / np.maximum(np.abs(theta), 1e-12))
        theta, sse = trial, trial_sse
        if change < tol or sse == 0:
            converged = True
            break
    if not converged:
        raise FitError("logistic fit did not converge", params=tuple(theta))
    model = logistic(x, *theta)
    r = _pearson(y, model)
    flags = ("negative-rate",) if theta[1] < 0 else ()
    return FitResult("logistic", tuple(float(v) for v in theta), abs(r or 0.0),
                     float(np.sqrt(sse / x.size)), flags)


def peak(x, y, floor=None):
    """First strict local maximum ``y[i-1] < y[i] >= y[i+1]``.

    Maxima with ``y[i] <= floor`` are skipped (roundoff bumps on a series
    that is identically zero in exact arithmetic).  Returns
    ``(x*, y*, is_boundary)``; without an interior peak, the global maximum
    is returned with ``is_boundary`` set.
    """
    x, y = _series(x, y, 3)
    for i in local_maxima(y, floor):
        return float(x[i]), float(y[i]), False
    i = int(np.argmax(y))
    return float(x[i]), float(y[i]), True


def local_maxima(y, floor=None):
    y = np.asarray(y, dtype=float)
    return [i for i in range(1, y.size - 1)
            if y[i - 1] < y[i] >= y[i + 1] and (floor is None or y[i] > floor)]


def derivative(x, y):
    """Central differences inside, one-sided differences at the ends."""
    x, y = _series(x, y, 3)
    if np.any(np.diff(x) <= 0):
        raise InvalidArgumentError("x must be strictly increasing")
    d = np.empty_like(y)
    hl = x[1:-1] - x[:-2]
    hr = x[2:] - x[1:-1]
    # non-uniform three-point formula; reduces to (y[i+1]-y[i-1])/(2h) on a uniform grid
    d[1:-1] = (hl ** 2 * y[2:] - hr ** 2 * y[:-2] + (hr ** 2 - hl ** 2) * y[1:-1]) / (hl * hr * (hl + hr))
    d[0] = (y[1] - y[0]) / (x[1] - x[0])
    d[-1] = (y[-1] - y[-2]) / (x[-1] - x[-2])
    return d


def steady_value(t, y, window, tol):
    """Mean of ``y`` over the trailing ``window`` if it has settled to ``tol``."""
    t, y = _series(t, y, 2)
    if t[-1] - t[0] < 2 * window:
        raise InvalidArgumentError("series must span at least twice the window")
    tail = y[t >= t[-1] - window]
    mean = float(tail.mean())
    spread = float(tail.max() - tail.min())
    variation = spread / abs(mean) if mean != 0 else (0.0 if spread == 0 else np.inf)
    if variation >= tol:
        raise NotConvergedError("series has not settled over the window", variation)
    return mean
