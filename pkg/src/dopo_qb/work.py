"""Ergotropy, passive states and the coherent/incoherent split."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, UnsupportedInputError
from .fock import DensityMatrix, Operator

CLAMP_TOL = 1e-10
DEGENERACY_TOL = 1e-12


@dataclass(frozen=True)
class ErgotropyBreakdown:
    total: float
    coherent: float
    incoherent: float


def _check(rho, h):
    if not isinstance(h, Operator):
        raise InvalidArgumentError("h must be an Operator")
    if rho.order != h.order:
        raise InvalidArgumentError(f"order mismatch {rho.order} vs {h.order}")
    if not h.is_hermitian():
        raise InvalidArgumentError("h is not Hermitian")


def _energy_basis(h):
    """Ascending eigenvalues and eigenvectors of ``h`` (diagonal fast path)."""
    coo = h.data.tocoo()
    if np.all((coo.row == coo.col) | (coo.data == 0)):
        diag = h.data.diagonal().real
        order = np.argsort(diag, kind="stable")
        vecs = np.eye(h.order, dtype=complex)[:, order]
        return diag[order], vecs, True
    vals, vecs = np.linalg.eigh(h.toarray())
    return vals, vecs, False


def _sorted_populations(values):
    """Clamp tiny negative weights, renormalize, sort descending."""
    values = np.asarray(values, dtype=float)
    if values.min() < -CLAMP_TOL:
        raise InvalidArgumentError(f"state has negative eigenvalue {values.min():.3e}")
    values = np.clip(values, 0.0, None)
    values = values / values.sum()
    return np.sort(values, kind="stable")[::-1]


def _mean_energy(rho, h):
    o = h.data.tocoo()
    return float(np.sum(rho.data[o.col, o.row] * o.data).real)


def passive_state(rho, h):
    """Pair the eigenvalues of ``rho`` (descending) with the energy levels of ``h`` (ascending)."""
    _check(rho, h)
    _, vecs, _ = _energy_basis(h)
    pops = _sorted_populations(np.linalg.eigvalsh(rho.data))
    # clamping renormalizes to unit sum; keep the trace of the input
    pops = pops * np.trace(rho.data).real
    data = (vecs * pops) @ vecs.conj().T
    return DensityMatrix(data, rho.dims, tol_herm=1e-10, tol_trace=rho.tol_trace,
                         tol_pos=rho.tol_pos)


def _passive_energy(populations, h_levels):
    return float(np.dot(_sorted_populations(populations), h_levels))


def ergotropy(rho, h):
    _check(rho, h)
    levels, _, _ = _energy_basis(h)
    return _mean_energy(rho, h) - _passive_energy(np.linalg.eigvalsh(rho.data), levels)


def _dephased_populations(rho, h):
    levels, vecs, diagonal = _energy_basis(h)
    if np.any(np.diff(levels) < DEGENERACY_TOL):
        raise UnsupportedInputError("dephasing needs a nondegenerate energy spectrum")
    if diagonal:
        pops = np.real(np.diag(rho.data))[np.argsort(h.data.diagonal().real, kind="stable")]
    else:
        pops = np.real(np.einsum("in,ij,jn->n", vecs.conj(), rho.data, vecs))
    return levels, vecs, pops


def dephase(rho, h):
    """Remove all coherences between energy eigenstates of ``h``."""
    _check(rho, h)
    _, vecs, pops = _dephased_populations(rho, h)
    data = (vecs * pops) @ vecs.conj().T
    return DensityMatrix(data, rho.dims, tol_herm=1e-10, tol_trace=rho.tol_trace,
                         tol_pos=rho.tol_pos)


def split(rho, h):
    """Total ergotropy and its coherent/incoherent parts.

    incoherent = E(rho) - E(passive(dephased rho)),
    coherent   = E(passive(dephased rho)) - E(passive(rho)).
    """
    _check(rho, h)
    levels, _, pops = _dephased_populations(rho, h)
    energy = _mean_energy(rho, h)
    e_dephased_passive = _passive_energy(pops, levels)
    e_passive = _passive_energy(np.linalg.eigvalsh(rho.data), levels)
    incoherent = energy - e_dephased_passive
    coherent = e_dephased_passive - e_passive
    return ErgotropyBreakdown(total=incoherent + coherent, coherent=coherent,
                              incoherent=incoherent)


def avg_power(w, t):
    """Time-averaged charging power W(t)/t, with P(0) = 0."""
    w = np.asarray(w, dtype=float)
    t = np.asarray(t, dtype=float)
    if w.shape != t.shape:
        raise InvalidArgumentError("w and t must have equal length")
    if np.any(t < 0):
        raise InvalidArgumentError("times must be nonnegative")
    p = np.zeros_like(w)
    pos = t > 0
    p[pos] = w[pos] / t[pos]
    return p
