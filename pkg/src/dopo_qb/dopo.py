"""Degenerate optical parametric oscillator as a charger for the signal mode.

All rates are in units of the signal loss rate, drive amplitudes in units of
sqrt(gamma_s).  Composite ordering is (signal, pump).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import fock
from .dynamics import IntegratorOptions, LindbladModel, dormand_prince, evolve_iter
from .errors import InstabilityError, IntegrationError, InvalidArgumentError, TruncationWarning
from .work import avg_power, split

TOP_LEVEL_MAX = 1e-4
MEANFIELD_DIVERGENCE = 1e6


@dataclass(frozen=True)
class DopoParams:
    kappa: float = 0.5
    gamma_s: float = 1.0
    gamma_p: float = 16.0
    f_p: float = 3.0
    delta: float = 0.0
    n_s: int = 32
    n_p: int = 9

    def __post_init__(self):
        for name in ("gamma_s", "gamma_p"):
            if not getattr(self, name) > 0:
                raise InvalidArgumentError(f"{name} must be positive")
        # kappa = 0 (no nonlinearity) is allowed; its threshold is infinite
        if not self.kappa >= 0:
            raise InvalidArgumentError("kappa must be nonnegative")
        if not self.f_p >= 0:
            raise InvalidArgumentError("f_p must be nonnegative")
        if not math.isfinite(self.delta):
            raise InvalidArgumentError("delta must be finite")
        for name in ("n_s", "n_p"):
            v = getattr(self, name)
            if int(v) != v or v < 2:
                raise InvalidArgumentError(f"{name} must be an integer >= 2")


@dataclass(frozen=True)
class MeanFieldState:
    alpha_s: complex
    alpha_p: complex

    def __post_init__(self):
        if not (np.isfinite(self.alpha_s) and np.isfinite(self.alpha_p)):
            raise InvalidArgumentError("mean-field amplitudes must be finite")


@dataclass
class MeanFieldTrajectory:
    times: np.ndarray
    alpha_s: np.ndarray
    alpha_p: np.ndarray


@dataclass
class ErgotropyTrajectory:
    """Charging observables sampled in time.

    ``final_state`` is the composite (signal, pump) state at the last sample.
    ``top_population`` holds the largest populations seen in the highest
    signal and pump Fock levels.  ``trace_drift`` is the largest |Tr rho - 1|
    and ``min_eigenvalue`` the smallest eigenvalue over all sampled
    composite states.
    """

    times: np.ndarray
    W: np.ndarray
    W_c: np.ndarray
    W_i: np.ndarray
    P: np.ndarray
    n_s: np.ndarray
    n_p: np.ndarray
    alpha_s: np.ndarray
    alpha_p: np.ndarray
    final_state: fock.DensityMatrix | None = None
    top_population: tuple = (0.0, 0.0)
    params: DopoParams | None = field(default=None, repr=False)
    trace_drift: float = 0.0
    min_eigenvalue: float = 0.0

    CSV_COLUMNS = ("t", "W", "W_c", "W_i", "P", "n_s", "n_p", "re_alpha_s", "im_alpha_s")

    def rows(self):
        for k in range(len(self.times)):
            yield (self.times[k], self.W[k], self.W_c[k], self.W_i[k], self.P[k],
                   self.n_s[k], self.n_p[k], self.alpha_s[k].real, self.alpha_s[k].imag)


def build_model(p):
    """Rotating-frame Lindblad model on dims (n_s, n_p).

    H = delta a_s^+ a_s + i(kappa/2 a_s^+2 a_p + sqrt(gamma_p) F_p a_p^+ - h.c.),
    collapses gamma_s a_s and gamma_p a_p.
    """
    dims = (p.n_s, p.n_p)
    a_s = fock.embed(fock.annihilation(p.n_s), 0, dims)
    a_p = fock.embed(fock.annihilation(p.n_p), 1, dims)
    gain = 0.5 * p.kappa * (a_s.dag() @ a_s.dag() @ a_p) + (math.sqrt(p.gamma_p) * p.f_p) * a_p.dag()
    h = 1j * gain - 1j * gain.dag()
    if p.delta:
        h = h + p.delta * (a_s.dag() @ a_s)
    return LindbladModel(h, [(p.gamma_s, a_s), (p.gamma_p, a_p)])


def threshold(p):
    """Pump amplitude above which the zero-signal mean field is unstable."""
    if p.kappa == 0:
        return math.inf
    return p.gamma_s * math.sqrt(p.gamma_p) / (4.0 * p.kappa)


def pump_steady_amplitude(p):
    """Pump mean field with the signal at zero: 2 F_p / sqrt(gamma_p)."""
    return 2.0 * p.f_p / math.sqrt(p.gamma_p)


def stability_eigenvalues(p, alpha_p=None):
    """Eigenvalues (lambda_+, lambda_-) of the linearized signal dynamics around alpha_s = 0."""
    if alpha_p is None:
        alpha_p = pump_steady_amplitude(p)
    g = p.kappa * abs(alpha_p)
    return -0.5 * p.gamma_s + g, -0.5 * p.gamma_s - g


def meanfield_evolve(p, s0, t_end, sample_dt, rtol=1e-10, atol=1e-12):
    """Integrate the semiclassical amplitude equations from ``s0``."""
    if not t_end > 0 or not sample_dt > 0:
        raise InvalidArgumentError("t_end and sample_dt must be positive")
    drive = math.sqrt(p.gamma_p) * p.f_p
    gs, gp, k = 0.5 * p.gamma_s, 0.5 * p.gamma_p, p.kappa

    def f(_t, y, out):
        a_s, a_p = y[0], y[1]
        out[0] = -gs * a_s + k * np.conj(a_s) * a_p
        out[1] = -gp * a_p - 0.5 * k * a_s * a_s + drive

    n = int(math.floor(t_end / sample_dt + 1e-9))
    grid = [round(j * sample_dt, 12) for j in range(n + 1)]
    if t_end - grid[-1] > 1e-9 * sample_dt:
        grid.append(float(t_end))
    times, values = [], []
    try:
        for t, y in dormand_prince(f, [s0.alpha_s, s0.alpha_p], 0.0, grid, rtol=rtol, atol=atol,
                                   max_abs=MEANFIELD_DIVERGENCE):
            times.append(t)
            values.append(y.copy())
    except IntegrationError as exc:
        raise InstabilityError("mean-field amplitudes diverged", exc.time) from exc
    values = np.array(values)
    return MeanFieldTrajectory(np.array(times), values[:, 0], values[:, 1])


class _Recorder:
    def __init__(self, p, omega_s):
        self.p = p
        self.h_s = fock.number(p.n_s) * omega_s
        self.num_s = fock.number(p.n_s)
        self.num_p = fock.number(p.n_p)
        self.a_s = fock.annihilation(p.n_s)
        self.a_p = fock.annihilation(p.n_p)
        self.rows = []
        self.top = [0.0, 0.0]
        self.last = None
        self.trace_drift = 0.0
        self.min_eigenvalue = np.inf

    def __call__(self, t, rho):
        rho_s = fock.partial_trace(rho, [0])
        rho_p = fock.partial_trace(rho, [1])
        b = split(rho_s, self.h_s)
        self.top[0] = max(self.top[0], rho_s.data[-1, -1].real)
        self.top[1] = max(self.top[1], rho_p.data[-1, -1].real)
        self.rows.append((t, b.total, b.coherent, b.incoherent,
                          fock.expectation(rho_s, self.num_s).real,
                          fock.expectation(rho_p, self.num_p).real,
                          fock.expectation(rho_s, self.a_s),
                          fock.expectation(rho_p, self.a_p)))
        self.last = rho
        self.trace_drift = max(self.trace_drift, abs(np.trace(rho.data) - 1.0))
        self.min_eigenvalue = min(self.min_eigenvalue, rho.min_eigenvalue)

    def result(self, params):
        cols = list(zip(*self.rows))
        times = np.array(cols[0], dtype=float)
        w = np.array(cols[1], dtype=float)
        if max(self.top) > TOP_LEVEL_MAX:
            warnings.warn(
                f"top Fock populations {self.top[0]:.2e} (signal), {self.top[1]:.2e} (pump) "
                f"exceed {TOP_LEVEL_MAX:g}; truncation (n_s={params.n_s}, n_p={params.n_p}) "
                "may be inadequate",
                TruncationWarning, stacklevel=3)
        return ErgotropyTrajectory(
            times=times, W=w, W_c=np.array(cols[2], dtype=float),
            W_i=np.array(cols[3], dtype=float), P=avg_power(w, times),
            n_s=np.array(cols[4], dtype=float), n_p=np.array(cols[5], dtype=float),
            alpha_s=np.array(cols[6], dtype=complex), alpha_p=np.array(cols[7], dtype=complex),
            final_state=self.last, top_population=tuple(self.top), params=params,
            trace_drift=float(self.trace_drift), min_eigenvalue=float(self.min_eigenvalue))


def charge(p, t_end, sample_dt, opts=None, omega_s=1.0):
    """Charge from the double vacuum and record ergotropy observables.

    ``omega_s`` sets the energy unit of W (default: omega_s = gamma_s).
    """
    rho0 = fock.tensor_states(fock.vacuum(p.n_s), fock.vacuum(p.n_p))
    rec = _Recorder(p, omega_s)
    for t, rho in evolve_iter(build_model(p), rho0, t_end, sample_dt, opts):
        rec(t, rho)
    return rec.result(p)


def continue_charge(traj, p, t_end, sample_dt, opts=None, omega_s=1.0):
    """Extend ``traj`` from its final state under the model built from ``p``.

    The truncations of ``p`` must match the trajectory's state.
    """
    rho = traj.final_state
    if rho is None or rho.dims != (p.n_s, p.n_p):
        raise InvalidArgumentError("trajectory state does not match the requested truncation")
    t0 = float(traj.times[-1])
    if not t_end > t0:
        raise InvalidArgumentError("t_end must be after the end of the trajectory")
    rec = _Recorder(p, omega_s)
    rec.rows = list(zip(traj.times, traj.W, traj.W_c, traj.W_i, traj.n_s, traj.n_p,
                        traj.alpha_s, traj.alpha_p))
    rec.top = list(traj.top_population)
    rec.trace_drift = traj.trace_drift
    rec.min_eigenvalue = traj.min_eigenvalue
    first = True
    for t, state in evolve_iter(build_model(p), rho, t_end, sample_dt, opts, t0=t0):
        if first:
            first = False
            continue
        rec(t, state)
    return rec.result(p)


def charge_with_switchoff(p, t_off, t_end, sample_dt, opts=None, omega_s=1.0):
    """Charge until ``t_off``, then set F_p = 0 and keep evolving to ``t_end``."""
    if not 0 < t_off < t_end:
        raise InvalidArgumentError("need 0 < t_off < t_end")
    pre = charge(p, t_off, sample_dt, opts, omega_s)
    return continue_charge(pre, replace(p, f_p=0.0), t_end, sample_dt, opts, omega_s)
