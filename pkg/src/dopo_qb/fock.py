"""Truncated Fock-space operators and density matrices.

Operators are kept sparse (ladder operators and the model Hamiltonians are
banded); density matrices are dense.  Composite spaces are ordered by their
``dims`` tuple, e.g. ``(n_signal, n_pump)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import prod

import numpy as np
import scipy.sparse as sp
from scipy.special import gammaln

from .errors import InvalidArgumentError, InvalidDimensionError, TruncationError

TOL_HERM = 1e-12
TOL_TRACE = 1e-12
TOL_POS = 1e-12
COHERENT_LEAK_MAX = 1e-8


def _check_dims(dims, order):
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise InvalidDimensionError(f"bad subsystem dims {dims}")
    if prod(dims) != order:
        raise InvalidDimensionError(f"dims {dims} do not multiply to {order}")
    return dims


@dataclass(frozen=True, eq=False)
class Operator:
    """Sparse complex matrix acting on a (possibly composite) truncated space."""

    data: sp.csr_matrix
    dims: tuple

    def __post_init__(self):
        data = sp.csr_matrix(self.data, dtype=complex)
        if data.shape[0] != data.shape[1]:
            raise InvalidDimensionError(f"operator must be square, got {data.shape}")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "dims", _check_dims(self.dims, data.shape[0]))

    @property
    def order(self):
        return self.data.shape[0]

    def dag(self):
        return Operator(self.data.conj().T.tocsr(), self.dims)

    def toarray(self):
        return self.data.toarray()

    def is_hermitian(self, tol=TOL_HERM):
        diff = self.data - self.data.conj().T
        return diff.nnz == 0 or np.abs(diff.data).max() <= tol

    def _coerce(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        if other.dims != self.dims:
            raise InvalidArgumentError(f"dims mismatch {self.dims} vs {other.dims}")
        return other

    def __matmul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return Operator(self.data @ other.data, self.dims)

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return Operator(self.data + other.data, self.dims)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return Operator(self.data - other.data, self.dims)

    def __neg__(self):
        return Operator(-self.data, self.dims)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return Operator(self.data * scalar, self.dims)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __repr__(self):
        return f"Operator(dims={self.dims}, nnz={self.data.nnz})"


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Dense Hermitian, unit-trace, positive semidefinite matrix.

    The tolerances are checked once at construction.  Integrator output is
    built with looser ``tol_trace``/``tol_pos`` than freshly prepared states.
    The smallest eigenvalue found by that check is kept as ``min_eigenvalue``.
    """

    data: np.ndarray
    dims: tuple
    tol_herm: float = TOL_HERM
    tol_trace: float = TOL_TRACE
    tol_pos: float = TOL_POS
    min_eigenvalue: float = field(init=False, repr=False)

    def __post_init__(self):
        data = np.array(self.data, dtype=complex)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise InvalidDimensionError(f"density matrix must be square, got {data.shape}")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "dims", _check_dims(self.dims, data.shape[0]))
        herm_err = np.abs(data - data.conj().T).max()
        if herm_err > self.tol_herm:
            raise InvalidArgumentError(f"not Hermitian (max deviation {herm_err:.3e})")
        tr = np.trace(data)
        if abs(tr - 1.0) > self.tol_trace:
            raise InvalidArgumentError(f"trace {tr.real:.15g} differs from 1")
        lam_min = float(np.linalg.eigvalsh(data)[0])
        if lam_min < -self.tol_pos:
            raise InvalidArgumentError(f"negative eigenvalue {lam_min:.3e}")
        object.__setattr__(self, "min_eigenvalue", lam_min)

    @property
    def order(self):
        return self.data.shape[0]

    def __repr__(self):
        return f"DensityMatrix(dims={self.dims})"


def annihilation(n):
    """Lowering operator on an ``n``-level truncated oscillator."""
    if int(n) != n or n < 2:
        raise InvalidDimensionError(f"truncation must be >= 2, got {n}")
    n = int(n)
    return Operator(sp.diags(np.sqrt(np.arange(1, n)), 1, shape=(n, n), format="csr"), (n,))


def creation(n):
    return annihilation(n).dag()


def number(n):
    return Operator(sp.diags(np.arange(n, dtype=float), 0, format="csr"), (n,))


def identity(n):
    if int(n) != n or n < 1:
        raise InvalidDimensionError(f"dimension must be >= 1, got {n}")
    return Operator(sp.identity(int(n), format="csr"), (int(n),))


# Two-level system in the basis (|e>, |g>), so that sigma_z = diag(1, -1).
def sigma_z():
    return Operator(sp.diags([1.0, -1.0], 0, format="csr"), (2,))


def sigma_plus():
    return Operator(sp.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]])), (2,))


def sigma_minus():
    return sigma_plus().dag()


def kron(a, b, *rest):
    out = Operator(sp.kron(a.data, b.data, format="csr"), a.dims + b.dims)
    for c in rest:
        out = kron(out, c)
    return out


def embed(op, index, dims):
    """Lift a single-subsystem operator into the composite space ``dims``."""
    dims = tuple(dims)
    if not 0 <= index < len(dims) or op.order != dims[index]:
        raise InvalidArgumentError(f"cannot embed {op!r} at slot {index} of {dims}")
    factors = [identity(d) for d in dims]
    factors[index] = op
    out = factors[0]
    for f in factors[1:]:
        out = kron(out, f)
    return out


def partial_trace(rho, keep):
    """Reduce ``rho`` to the subsystems listed in ``keep`` (kept in original order)."""
    dims = rho.dims
    keep = sorted(set(int(k) for k in keep))
    if not keep or keep[0] < 0 or keep[-1] >= len(dims):
        raise InvalidArgumentError(f"keep={keep} invalid for {len(dims)} subsystems")
    n = len(dims)
    traced = [i for i in range(n) if i not in keep]
    t = rho.data.reshape(dims + dims)
    # move traced row/col axes together and contract them
    for i in sorted(traced, reverse=True):
        t = np.trace(t, axis1=i, axis2=i + t.ndim // 2)
    kept_dims = tuple(dims[i] for i in keep)
    d = prod(kept_dims)
    return DensityMatrix(t.reshape(d, d), kept_dims, rho.tol_herm, rho.tol_trace, rho.tol_pos)


def expectation(rho, op):
    """Tr[rho op] as a complex number."""
    if rho.order != op.order:
        raise InvalidArgumentError(f"order mismatch {rho.order} vs {op.order}")
    # Tr[rho O] = sum_ij rho_ij O_ji
    o = op.data.tocoo()
    return complex(np.sum(rho.data[o.col, o.row] * o.data))


def vacuum(n):
    return fock(n, 0)


def fock(n, k):
    if int(n) != n or n < 1:
        raise InvalidDimensionError(f"dimension must be >= 1, got {n}")
    if not 0 <= k < n:
        raise InvalidArgumentError(f"Fock level {k} outside 0..{n - 1}")
    data = np.zeros((n, n), dtype=complex)
    data[k, k] = 1.0
    return DensityMatrix(data, (n,))


def coherent_ket(n, alpha, max_leak=COHERENT_LEAK_MAX):
    """Truncated, renormalized coherent-state vector; raises if too much leaks."""
    ket = np.zeros(n, dtype=complex)
    if alpha == 0:
        ket[0] = 1.0
        return ket
    m = np.arange(n)
    weights = np.exp(-abs(alpha) ** 2 + 2 * m * np.log(abs(alpha)) - gammaln(m + 1))
    leaked = 1.0 - weights.sum()
    if leaked > max_leak:
        raise TruncationError(f"coherent state alpha={alpha} does not fit in {n} levels", leaked)
    ket = np.sqrt(weights) * np.exp(1j * np.angle(alpha) * m)
    return ket / np.linalg.norm(ket)


def coherent(n, alpha, max_leak=COHERENT_LEAK_MAX):
    ket = coherent_ket(n, alpha, max_leak)
    return DensityMatrix(np.outer(ket, ket.conj()), (n,))


def pure(ket, dims=None):
    ket = np.asarray(ket, dtype=complex)
    ket = ket / np.linalg.norm(ket)
    return DensityMatrix(np.outer(ket, ket.conj()), dims or (ket.size,))


def tensor_states(*states):
    data = states[0].data
    dims = states[0].dims
    for s in states[1:]:
        data = np.kron(data, s.data)
        dims = dims + s.dims
    return DensityMatrix(data, dims, tol_trace=1e-10, tol_pos=1e-10)
