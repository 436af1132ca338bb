"""Brute-force propagator used to cross-check the adaptive integrator.

The Liouvillian is frozen at the midpoint of each step, assembled as a dense
dim^2 x dim^2 superoperator (row-major vectorisation, vec(A X B) = (A kron B^T) vec(X))
and exponentiated with scipy's scaling-and-squaring Pade ``expm``.  An optional
``support`` index set restricts every operator to an invariant subspace.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.linalg import expm

from ..errors import InvalidArgument, OracleScaleExceeded
from ..model import Constant, ModelInstance, drive_eval
from .states import as_matrix

MAX_ORACLE_DIM = 40


def _commutator_super(h: np.ndarray) -> np.ndarray:
    eye = np.eye(h.shape[0])
    return -1j * (np.kron(h, eye) - np.kron(eye, h.T))


def _pieces(model: ModelInstance, support):
    idx = np.arange(model.dim) if support is None else np.asarray(support)
    if len(idx) > MAX_ORACLE_DIM:
        raise OracleScaleExceeded(f"oracle limited to dim <= {MAX_ORACLE_DIM}, got {len(idx)}")
    sub = np.ix_(idx, idx)
    eye = np.eye(len(idx))
    L0 = _commutator_super(model.H_static.entries[sub])
    for rate, c in model.collapse_ops:
        m = c.entries[sub]
        mdm = m.conj().T @ m
        L0 += rate * (np.kron(m, m.conj()) - 0.5 * np.kron(mdm, eye) - 0.5 * np.kron(eye, mdm.T))
    Lc = _commutator_super(model.H_coupling.entries[sub])
    harm = [(carrier, w, _commutator_super(op.entries[sub]))
            for carrier, w, op in model.harmonic_terms]
    return idx, L0, Lc, harm


def _assemble(model, pieces, t):
    _, L0, Lc, harm = pieces
    L = L0 + drive_eval(model.drive, t).value * Lc
    for carrier, w, Lk in harm:
        L = L + (math.cos(w * t) if carrier == "cos" else math.sin(w * t)) * Lk
    return L


def liouvillian(model: ModelInstance, t: float, support=None) -> np.ndarray:
    return _assemble(model, _pieces(model, support), t)


def _restrict(rho, model, idx):
    rho = as_matrix(rho)
    if rho.shape == (model.dim, model.dim) and len(idx) != model.dim:
        rho = rho[np.ix_(idx, idx)]
    if rho.shape != (len(idx), len(idx)):
        raise InvalidArgument("state and model dimensions differ")
    return rho


def oracle_step(rho, model: ModelInstance, t: float, dt: float, support=None) -> np.ndarray:
    """Exact exponential of the Liouvillian frozen at t + dt/2."""
    pieces = _pieces(model, support)
    rho = _restrict(rho, model, pieces[0])
    if dt < 0:
        raise InvalidArgument("dt must be >= 0")
    if dt == 0:
        return rho.copy()
    L = _assemble(model, pieces, t + 0.5 * dt)
    return (expm(L * dt) @ rho.reshape(-1)).reshape(rho.shape)


def oracle_propagate(rho, model: ModelInstance, t0: float, t1: float, dt: float,
                     support=None) -> np.ndarray:
    """Compose midpoint-frozen exponential steps from t0 to t1.

    With ``support`` the input may be given on the full space or already
    restricted; the result lives on the support.  A constant generator costs a
    single ``expm``.
    """
    pieces = _pieces(model, support)
    rho = _restrict(rho, model, pieces[0]).copy()
    if not dt > 0:
        raise InvalidArgument("dt must be positive")
    n = max(1, int(round((t1 - t0) / dt)))
    h = (t1 - t0) / n
    shape = rho.shape
    v = rho.reshape(-1)
    constant = not pieces[3] and (isinstance(model.drive, Constant) or not np.any(pieces[2]))
    if constant:
        return (expm(_assemble(model, pieces, t0) * (t1 - t0)) @ v).reshape(shape)
    for k in range(n):
        v = expm(_assemble(model, pieces, t0 + (k + 0.5) * h) * h) @ v
    return v.reshape(shape)
