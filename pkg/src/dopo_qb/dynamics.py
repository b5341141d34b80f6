"""Lindblad master equation: generator, right-hand side and adaptive integrator."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import _kernels as _k
from .errors import IntegrationError, InvalidArgumentError
from .fock import DensityMatrix, Operator

TOL_POS_EVOLVE = 1e-10
TOL_TRACE_EVOLVE = 1e-8


class LindbladModel:
    """Hamiltonian (in rate units, hbar = 1) plus ``(rate, L)`` collapse channels.

    Generates  d rho/dt = -i[H, rho] + sum_j rate_j (L_j rho L_j^+ - 1/2 {L_j^+ L_j, rho}).
    """

    def __init__(self, hamiltonian, collapses=()):
        if not isinstance(hamiltonian, Operator):
            raise InvalidArgumentError("hamiltonian must be an Operator")
        if not hamiltonian.is_hermitian():
            raise InvalidArgumentError("hamiltonian is not Hermitian")
        collapses = tuple((float(rate), op) for rate, op in collapses)
        for rate, op in collapses:
            if not rate >= 0:
                raise InvalidArgumentError(f"collapse rate {rate} is negative")
            if not isinstance(op, Operator) or op.dims != hamiltonian.dims:
                raise InvalidArgumentError(f"collapse operator does not act on {hamiltonian.dims}")
        self.hamiltonian = hamiltonian
        self.collapses = collapses
        self.dims = hamiltonian.dims

        # Non-Hermitian effective Hamiltonian absorbs the anticommutator terms.
        heff = hamiltonian.data.astype(complex)
        jumps = []
        for rate, op in collapses:
            if rate == 0:
                continue
            L = op.data
            heff = heff - 0.5j * rate * (L.conj().T @ L)
            jumps.append((0.5 * rate, _csr_parts(L)))
        self._heff = _csr_parts(heff)
        self._jumps = jumps
        self._tmp = None

    @property
    def order(self):
        return self.hamiltonian.order

    def apply(self, r, out=None):
        """d rho/dt for a Hermitian dense array ``r``, written into ``out``.

        Evaluated as  X + X^+  with  X = -i Heff r + 1/2 sum rate L r L^+ ,
        which is exact for Hermitian input and exactly Hermitian on output.
        """
        if out is None:
            out = np.empty_like(r, dtype=complex)
        if self._tmp is None:
            self._tmp = np.empty((self.order, self.order), dtype=complex)
        tmp = self._tmp
        out[...] = 0.0
        _k.csr_matmul_add(*self._heff, r, out, -1j)
        for half_rate, L in self._jumps:
            tmp[...] = 0.0
            _k.csr_matmul_add(*L, r, tmp, 1.0 + 0j)
            # L (L r)^+ = L r L^+ for Hermitian r
            _k.csr_matmul_adj_add(*L, tmp, out, half_rate + 0j)
        _k.add_adjoint_inplace(out)
        return out

    def __repr__(self):
        return f"LindbladModel(dims={self.dims}, channels={len(self.collapses)})"


def _csr_parts(m):
    m = sp.csr_matrix(m, dtype=complex)
    m.sum_duplicates()
    return (m.indptr.astype(np.int64), m.indices.astype(np.int64), m.data.astype(complex))


def rhs(model, rho):
    """Lindblad right-hand side evaluated on a density matrix."""
    data = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    if data.shape != (model.order, model.order):
        raise InvalidArgumentError(f"state shape {data.shape} does not match model order {model.order}")
    if isinstance(rho, DensityMatrix) and rho.dims != model.dims:
        raise InvalidArgumentError(f"state dims {rho.dims} != model dims {model.dims}")
    return model.apply(np.ascontiguousarray(data, dtype=complex))


@dataclass(frozen=True)
class IntegratorOptions:
    rtol: float = 1e-8
    atol: float = 1e-12
    first_step: float | None = None
    max_step: float = math.inf
    min_step: float = 1e-14
    max_steps: int = 50_000_000
    tol_pos: float = TOL_POS_EVOLVE
    tol_trace: float = TOL_TRACE_EVOLVE


@dataclass
class Trajectory:
    times: np.ndarray
    states: list = field(default_factory=list)

    def __len__(self):
        return len(self.times)


# Dormand-Prince 5(4) tableau
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = np.zeros((7, 7))
_A[1, :1] = [1 / 5]
_A[2, :2] = [3 / 40, 9 / 40]
_A[3, :3] = [44 / 45, -56 / 15, 32 / 9]
_A[4, :4] = [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]
_A[5, :5] = [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]
_A[6, :6] = [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_E = _B - np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


def _rms(v):
    return math.sqrt(float(np.mean(np.abs(v) ** 2)))


def _initial_step(f, t, y, k1, rtol, atol):
    scale = atol + rtol * np.abs(y)
    d0 = _rms(y / scale)
    d1 = _rms(k1 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    if not (math.isfinite(h0) and h0 > 0):
        h0 = 1e-6
    k2 = np.empty_like(y)
    f(t + h0, y + h0 * k1, k2)
    d2 = _rms((k2 - k1) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def dormand_prince(f, y0, t0, sample_times, rtol=1e-8, atol=1e-10, first_step=None,
                   max_step=math.inf, min_step=1e-14, max_steps=50_000_000,
                   post_step=None, max_abs=None):
    """Adaptive Dormand-Prince 4(5) integration of a 1-D complex system.

    ``f(t, y, out)`` writes dy/dt into ``out``.  Yields ``(t, y)`` at each of
    ``sample_times``; steps are shortened to land on them exactly.  The error
    norm is the max over entries of ``|err| / (atol + rtol * max(|y|, |y_new|))``.
    ``post_step(y)`` may modify each accepted state in place.  The yielded
    array is a reused buffer: copy it if it must outlive the next iteration.
    """
    y = np.array(y0, dtype=complex).ravel()
    t = float(t0)
    samples = [float(s) for s in sample_times]
    if any(b <= a for a, b in zip(samples, samples[1:])):
        raise InvalidArgumentError("sample times must be strictly increasing")
    if samples and samples[0] < t:
        raise InvalidArgumentError("sample times start before t0")

    ks = np.empty((7, y.size), dtype=complex)
    y_new = np.empty_like(y)
    work = np.empty_like(y)
    f(t, y, ks[0])
    h = first_step or _initial_step(f, t, y, ks[0].copy(), rtol, atol)
    h = min(h, max_step)
    steps = 0
    for target in samples:
        while t < target:
            remaining = target - t
            clamped = h >= remaining * (1 - 1e-12)
            h_try = remaining if clamped else h
            if h_try < min_step * max(1.0, abs(t)):
                raise IntegrationError("step size underflow", t)
            for i in range(1, 7):
                _k.combine(y, ks, _A[i], h_try, y_new)
                f(t + _C[i] * h_try, y_new, ks[i])
            # row 6 of the tableau is the 5th-order weights, so y_new is the solution
            err_norm = _k.error_norm(y, y_new, ks, _E, h_try, rtol, atol, work)
            if not math.isfinite(err_norm):
                raise IntegrationError("non-finite state", t)
            steps += 1
            if steps > max_steps:
                raise IntegrationError("too many steps", t)
            if err_norm <= 1.0:
                t = target if clamped else t + h_try
                y, y_new = y_new, y
                if post_step is not None:
                    post_step(y)
                ks[0] = ks[6]
                if max_abs is not None and np.abs(y).max() > max_abs:
                    raise IntegrationError("solution diverged", t)
                factor = 5.0 if err_norm == 0 else min(5.0, 0.9 * err_norm ** -0.2)
                h_new = h_try * factor
                h = max(h, h_new) if clamped else h_new
            else:
                h = h_try * max(0.2, 0.9 * err_norm ** -0.2)
            h = min(h, max_step)
        yield t, y


def _hermitizer(n):
    def post_step(y):
        _k.hermitize_inplace(y.reshape(n, n))
    return post_step


def evolve_iter(model, rho0, t_end, sample_dt, opts=None, t0=0.0):
    """Yield ``(t, DensityMatrix)`` on the grid t0, t0+dt, ..., t_end.

    Every sample is checked: trace within ``opts.tol_trace`` of 1 and minimum
    eigenvalue above ``-opts.tol_pos``; otherwise IntegrationError.
    """
    opts = opts or IntegratorOptions()
    if not t_end > t0:
        raise InvalidArgumentError("t_end must exceed the start time")
    if not sample_dt > 0:
        raise InvalidArgumentError("sample_dt must be positive")
    if rho0.dims != model.dims:
        raise InvalidArgumentError(f"state dims {rho0.dims} != model dims {model.dims}")
    n = int(math.floor((t_end - t0) / sample_dt + 1e-9))
    grid = [round(t0 + k * sample_dt, 12) for k in range(n + 1)]
    if t_end - grid[-1] > 1e-9 * sample_dt:
        grid.append(float(t_end))
    else:
        grid[-1] = float(t_end)

    dims = model.dims
    d = model.order

    def f(_t, y, out):
        model.apply(y.reshape(d, d), out.reshape(d, d))

    for t, y in dormand_prince(
        f, rho0.data, t0, grid,
        rtol=opts.rtol, atol=opts.atol, first_step=opts.first_step,
        max_step=opts.max_step, min_step=opts.min_step, max_steps=opts.max_steps,
        post_step=_hermitizer(d),
    ):
        try:
            state = DensityMatrix(y.reshape(d, d), dims, tol_herm=1e-12,
                                  tol_trace=opts.tol_trace, tol_pos=opts.tol_pos)
        except InvalidArgumentError as exc:
            raise IntegrationError(f"invalid state ({exc})", t) from exc
        yield t, state


def evolve(model, rho0, t_end, sample_dt, opts=None):
    """Integrate from ``rho0`` at t=0 and keep every sampled state."""
    times, states = [], []
    for t, state in evolve_iter(model, rho0, t_end, sample_dt, opts):
        times.append(t)
        states.append(state)
    return Trajectory(np.array(times), states)
