"""Discharging the charged signal mode into a two-level-system load.

Composite ordering is (signal, atom); the atom basis is (|e>, |g>).
Rates and frequencies are in units of the discharge-stage signal loss.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fock
from .dopo import charge
from .dynamics import IntegratorOptions, LindbladModel, evolve_iter
from .errors import InvalidArgumentError
from .fit import peak
from .work import ergotropy

FRAMES = ("lab", "interaction")
PEAK_FLOOR = 1e-9
# The lab frame carries phases rotating at ~n * omega_s; looser tolerances let
# the accumulated phase error push small eigenvalues below -1e-10.
LAB_FRAME_OPTIONS = IntegratorOptions(rtol=1e-11, atol=1e-13)


@dataclass(frozen=True)
class DischargeParams:
    """``frame='interaction'`` integrates in the frame rotating at omega_a
    for the total excitation number; the ergotropies are frame independent.
    """

    omega_s: float = 1000.0
    omega_a: float = 1000.0
    g: float = 10.0
    gamma_s2: float = 1.0
    gamma_a: float = 1.0
    n_s: int = 32
    frame: str = "lab"

    def __post_init__(self):
        if not (self.omega_s > 0 and self.omega_a > 0):
            raise InvalidArgumentError("frequencies must be positive")
        for name in ("g", "gamma_s2", "gamma_a"):
            if not getattr(self, name) >= 0:
                raise InvalidArgumentError(f"{name} must be nonnegative")
        if int(self.n_s) != self.n_s or self.n_s < 2:
            raise InvalidArgumentError("n_s must be an integer >= 2")
        if self.frame not in FRAMES:
            raise InvalidArgumentError(f"frame must be one of {FRAMES}")


@dataclass
class DischargeResult:
    times: np.ndarray
    kappa_s: np.ndarray
    kappa_a: np.ndarray
    peak_kappa_a: tuple

    CSV_COLUMNS = ("t", "kappa_s", "kappa_a")

    def rows(self):
        return zip(self.times, self.kappa_s, self.kappa_a)


def _operators(n_s):
    dims = (n_s, 2)
    a = fock.embed(fock.annihilation(n_s), 0, dims)
    sp_ = fock.embed(fock.sigma_plus(), 1, dims)
    sz = fock.embed(fock.sigma_z(), 1, dims)
    return a, sp_, sz


def build_discharge_model(p):
    """H' = w_s a^+a + (w_a/2) s_z + g(a s_+ + a^+ s_-), losses gamma_s2 a and gamma_a s_-."""
    a, s_plus, s_z = _operators(p.n_s)
    s_minus = s_plus.dag()
    coupling = p.g * (a @ s_plus + a.dag() @ s_minus)
    if p.frame == "lab":
        h = p.omega_s * (a.dag() @ a) + (0.5 * p.omega_a) * s_z + coupling
    else:
        # subtract omega_a * (a^+a + s_+s_-), which commutes with H'
        h = (p.omega_s - p.omega_a) * (a.dag() @ a) + coupling
    return LindbladModel(h, [(p.gamma_s2, a), (p.gamma_a, s_minus)])


def total_excitation(n_s):
    a, s_plus, _ = _operators(n_s)
    return a.dag() @ a + s_plus @ s_plus.dag()


def discharge(rho_s_t0, p, t_end, sample_dt, opts=None):
    """Connect the charged mode to a ground-state atom and track normalized ergotropies.

    Times in the result count from the moment of connection.  ``peak_kappa_a``
    is the first local maximum of kappa_a above PEAK_FLOOR.
    """
    if opts is None and p.frame == "lab":
        opts = LAB_FRAME_OPTIONS
    if rho_s_t0.dims != (p.n_s,):
        raise InvalidArgumentError(f"state dims {rho_s_t0.dims} do not match n_s={p.n_s}")
    ground = np.zeros((2, 2), dtype=complex)
    ground[1, 1] = 1.0
    rho0 = fock.tensor_states(rho_s_t0, fock.DensityMatrix(ground, (2,)))
    h_s = fock.number(p.n_s) * p.omega_s
    h_a = fock.sigma_z() * (0.5 * p.omega_a)
    times, k_s, k_a = [], [], []
    for t, rho in evolve_iter(build_discharge_model(p), rho0, t_end, sample_dt, opts):
        times.append(t)
        k_s.append(ergotropy(fock.partial_trace(rho, [0]), h_s) / p.omega_s)
        k_a.append(ergotropy(fock.partial_trace(rho, [1]), h_a) / p.omega_a)
    times = np.array(times)
    k_a = np.array(k_a)
    t_pk, v_pk, _ = peak(times, k_a, floor=PEAK_FLOOR)
    return DischargeResult(times, np.array(k_s), k_a, (t_pk, v_pk))


def charge_then_discharge(cp, t0, dp, t_end, sample_dt, opts=None, charge_dt=0.1):
    """Charge with ``cp`` until ``t0``, then discharge the signal state under ``dp``."""
    if not t0 > 0:
        raise InvalidArgumentError("t0 must be positive")
    if cp.n_s != dp.n_s:
        raise InvalidArgumentError(f"charging n_s={cp.n_s} differs from discharge n_s={dp.n_s}")
    traj = charge(cp, t0, min(charge_dt, t0), opts)
    rho_s = fock.partial_trace(traj.final_state, [0])
    return discharge(rho_s, dp, t_end, sample_dt, opts)
