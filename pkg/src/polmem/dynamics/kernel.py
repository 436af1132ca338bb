"""Compiled Lindblad right-hand side and adaptive Dormand-Prince 8(5,3) stepper.

The generator is kept in the form

    drho/dt = G(t) rho + rho G(t)^+ + sum_j L_j rho L_j^+,
    G(t) = -i H(t) - 1/2 sum_j L_j^+ L_j,

with every operator stored as a list of nonzero entries (row, col, value).
Step control and dense output follow Hairer's DOP853; the Butcher tableau is
read from ``scipy.integrate.DOP853``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba as nb
import numpy as np
from scipy.integrate import DOP853

from ..model import ModelInstance, drive_kernel

_NS = DOP853.n_stages
_A = np.ascontiguousarray(DOP853.A, dtype=float)
_B = np.ascontiguousarray(DOP853.B, dtype=float)
_C = np.ascontiguousarray(DOP853.C, dtype=float)
_E3 = np.ascontiguousarray(DOP853.E3, dtype=float)
_E5 = np.ascontiguousarray(DOP853.E5, dtype=float)
_D = np.ascontiguousarray(DOP853.D, dtype=float)
_AX = np.ascontiguousarray(DOP853.A_EXTRA, dtype=float)
_CX = np.ascontiguousarray(DOP853.C_EXTRA, dtype=float)

SAFETY, MIN_FACTOR, MAX_FACTOR = 0.9, 0.2, 10.0
ERR_EXP = -1.0 / (DOP853.error_estimator_order + 1)

STATUS_OK, STATUS_STEP_TOO_SMALL, STATUS_MAX_STEPS, STATUS_NONFINITE = 0, 1, 2, 3

# time-dependent term carriers
CARRIER_DRIVE, CARRIER_COS, CARRIER_SIN = 0, 1, 2


def _coo(m, tol=0.0):
    m = np.asarray(m, dtype=complex)
    r, c = np.nonzero(np.abs(m) > tol)
    return r.astype(np.int64), c.astype(np.int64), m[r, c].astype(complex)


@dataclass
class CompiledModel:
    """Nonzero-list form of a model restricted to an invariant index set."""

    dim: int
    g0: tuple
    td_ptr: np.ndarray
    td_kind: np.ndarray
    td_freq: np.ndarray
    td: tuple
    j_ptr: np.ndarray
    jumps: tuple
    drive_kind: int
    drive_p: np.ndarray

    def args(self):
        return (self.g0[0], self.g0[1], self.g0[2], self.td_ptr, self.td_kind, self.td_freq,
                self.td[0], self.td[1], self.td[2], self.j_ptr, self.jumps[0], self.jumps[1],
                self.jumps[2], self.drive_kind, self.drive_p)


def _concat(parts):
    ptr = [0]
    rows, cols, vals = [], [], []
    for r, c, v in parts:
        rows.append(r)
        cols.append(c)
        vals.append(v)
        ptr.append(ptr[-1] + len(r))
    if not parts:
        return (np.zeros(1, np.int64), (np.zeros(0, np.int64), np.zeros(0, np.int64),
                                        np.zeros(0, complex)))
    return (np.array(ptr, np.int64),
            (np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)))


def compile_model(model: ModelInstance, support: np.ndarray | None = None) -> CompiledModel:
    idx = np.arange(model.dim) if support is None else np.asarray(support)
    sub = np.ix_(idx, idx)
    g0 = -1j * model.H_static.entries[sub]
    jumps = []
    for rate, op in model.collapse_ops:
        L = math.sqrt(rate) * op.entries[sub]
        g0 = g0 - 0.5 * L.conj().T @ L
        jumps.append(_coo(L))
    terms, kinds, freqs = [_coo(-1j * model.H_coupling.entries[sub])], [CARRIER_DRIVE], [0.0]
    for carrier, w, op in model.harmonic_terms:
        terms.append(_coo(-1j * op.entries[sub]))
        kinds.append(CARRIER_COS if carrier == "cos" else CARRIER_SIN)
        freqs.append(float(w))
    td_ptr, td = _concat(terms)
    j_ptr, jl = _concat(jumps)
    kind, p = model.drive.kernel()
    return CompiledModel(len(idx), _coo(g0), td_ptr, np.array(kinds, np.int64),
                         np.array(freqs, float), td, j_ptr, jl, kind, p)


@nb.njit(cache=True)
def _apply_g(coef, rows, cols, vals, start, stop, rho, out):
    d = rho.shape[0]
    for e in range(start, stop):
        r, c = rows[e], cols[e]
        v = coef * vals[e]
        vc = v.conjugate()
        for k in range(d):
            out[r, k] += v * rho[c, k]
            out[k, r] += rho[k, c] * vc


@nb.njit(cache=True)
def lindblad_kernel(t, rho, out, g0r, g0c, g0v, td_ptr, td_kind, td_freq, tdr, tdc, tdv,
                    j_ptr, jr, jc, jv, dkind, dp):
    out[:, :] = 0.0
    _apply_g(1.0 + 0.0j, g0r, g0c, g0v, 0, g0r.shape[0], rho, out)
    for k in range(td_kind.shape[0]):
        if td_kind[k] == CARRIER_DRIVE:
            coef = drive_kernel(dkind, dp, t)[0]
        elif td_kind[k] == CARRIER_COS:
            coef = math.cos(td_freq[k] * t)
        else:
            coef = math.sin(td_freq[k] * t)
        if coef != 0.0:
            _apply_g(coef + 0.0j, tdr, tdc, tdv, td_ptr[k], td_ptr[k + 1], rho, out)
    for j in range(j_ptr.shape[0] - 1):
        for e1 in range(j_ptr[j], j_ptr[j + 1]):
            r1, c1, v1 = jr[e1], jc[e1], jv[e1]
            for e2 in range(j_ptr[j], j_ptr[j + 1]):
                out[r1, jr[e2]] += v1 * jv[e2].conjugate() * rho[c1, jc[e2]]


@nb.njit(cache=True)
def _apply_rows(coef, rows, cols, vals, start, stop, rho, out):
    d = rho.shape[0]
    for e in range(start, stop):
        r, c = rows[e], cols[e]
        v = coef * vals[e]
        for k in range(d):
            out[r, k] += v * rho[c, k]


@nb.njit(cache=True)
def lindblad_kernel_herm(t, rho, out, g0r, g0c, g0v, td_ptr, td_kind, td_freq, tdr, tdc, tdv,
                         j_ptr, jr, jc, jv, dkind, dp):
    """Same generator for Hermitian rho: rho G^+ is taken as (G rho)^+."""
    d = rho.shape[0]
    out[:, :] = 0.0
    _apply_rows(1.0 + 0.0j, g0r, g0c, g0v, 0, g0r.shape[0], rho, out)
    for k in range(td_kind.shape[0]):
        if td_kind[k] == CARRIER_DRIVE:
            coef = drive_kernel(dkind, dp, t)[0]
        elif td_kind[k] == CARRIER_COS:
            coef = math.cos(td_freq[k] * t)
        else:
            coef = math.sin(td_freq[k] * t)
        if coef != 0.0:
            _apply_rows(coef + 0.0j, tdr, tdc, tdv, td_ptr[k], td_ptr[k + 1], rho, out)
    for i in range(d):
        out[i, i] = 2.0 * out[i, i].real
        for j in range(i + 1, d):
            a = out[i, j]
            b = out[j, i]
            out[i, j] = a + b.conjugate()
            out[j, i] = b + a.conjugate()
    for j in range(j_ptr.shape[0] - 1):
        for e1 in range(j_ptr[j], j_ptr[j + 1]):
            r1, c1, v1 = jr[e1], jc[e1], jv[e1]
            for e2 in range(j_ptr[j], j_ptr[j + 1]):
                out[r1, jr[e2]] += v1 * jv[e2].conjugate() * rho[c1, jc[e2]]


@nb.njit(cache=True)
def _combine(base, h, coef, K, count, dst):
    """dst = base + h * sum_q coef[q] K[q], skipping zero coefficients."""
    n = dst.shape[0]
    for i in range(n):
        dst[i] = base[i]
    for q in range(count):
        c = coef[q]
        if c != 0.0:
            hc = h * c
            for i in range(n):
                dst[i] += hc * K[q, i]


@nb.njit(cache=True)
def _rms_scaled(x, scale):
    s = 0.0
    for i in range(x.shape[0]):
        a = abs(x[i]) / scale[i]
        s += a * a
    return s


@nb.njit(cache=True)
def integrate_dop853(y0, t_out, rtol, atol, max_step, max_steps, max_norm,
                     g0r, g0c, g0v, td_ptr, td_kind, td_freq, tdr, tdc, tdv,
                     j_ptr, jr, jc, jv, dkind, dp, A, B, C, E3, E5, D, AX, CX):
    """Integrate a flattened Hermitian density matrix and sample it on ``t_out``.

    ``max_norm`` replaces the RMS error norm by the largest scaled component.
    Returns (samples, status, n_accepted, n_rejected, n_fev, t_reached).
    """
    n = y0.shape[0]
    d = int(round(math.sqrt(n)))
    ns = B.shape[0]
    nout = t_out.shape[0]
    out = np.empty((nout, n), dtype=np.complex128)
    out[0] = y0
    K = np.zeros((ns + 4, n), dtype=np.complex128)
    y = y0.copy()
    t = t_out[0]
    t_end = t_out[nout - 1]
    nfev = 0

    tmp = np.empty(n, dtype=np.complex128)
    ynew = np.empty(n, dtype=np.complex128)
    fnew = np.empty(n, dtype=np.complex128)
    f = np.empty(n, dtype=np.complex128)
    scale = np.empty(n)
    zero = np.zeros(n, dtype=np.complex128)
    err5 = np.empty(n, dtype=np.complex128)
    err3 = np.empty(n, dtype=np.complex128)

    def fun(tt, yy, dst):
        lindblad_kernel_herm(tt, yy.reshape(d, d), dst.reshape(d, d), g0r, g0c, g0v, td_ptr, td_kind,
                        td_freq, tdr, tdc, tdv, j_ptr, jr, jc, jv, dkind, dp)

    fun(t, y, f)
    nfev += 1

    # initial step (Hairer & Wanner, II.4)
    for i in range(n):
        scale[i] = atol + abs(y[i]) * rtol
    d0 = math.sqrt(_rms_scaled(y, scale) / n)
    d1 = math.sqrt(_rms_scaled(f, scale) / n)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, t_end - t)
    for i in range(n):
        tmp[i] = y[i] + h0 * f[i]
    fun(t + h0, tmp, fnew)
    nfev += 1
    for i in range(n):
        tmp[i] = fnew[i] - f[i]
    d2 = math.sqrt(_rms_scaled(tmp, scale) / n) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 8.0)
    h_abs = min(100 * h0, h1, max_step)

    j_out = 1
    n_acc = 0
    n_rej = 0
    F = np.empty((7, n), dtype=np.complex128)
    while j_out < nout:
        if n_acc >= max_steps:
            return out, STATUS_MAX_STEPS, n_acc, n_rej, nfev, t
        min_step = 10.0 * abs(np.nextafter(t, np.inf) - t)
        if h_abs > max_step:
            h_abs = max_step
        accepted = False
        rejected = False
        h = 0.0
        while not accepted:
            if h_abs < min_step:
                return out, STATUS_STEP_TOO_SMALL, n_acc, n_rej, nfev, t
            t_new = t + h_abs
            if t_new > t_end:
                t_new = t_end
            h = t_new - t
            h_abs = h
            # stages
            for i in range(n):
                K[0, i] = f[i]
            for s in range(1, ns):
                _combine(y, h, A[s], K, s, tmp)
                fun(t + C[s] * h, tmp, K[s])
            _combine(y, h, B, K, ns, ynew)
            fun(t + h, ynew, fnew)
            nfev += ns
            for i in range(n):
                K[ns, i] = fnew[i]
            finite = True
            e5 = 0.0
            e3 = 0.0
            _combine(zero, 1.0, E5, K, ns + 1, err5)
            _combine(zero, 1.0, E3, K, ns + 1, err3)
            for i in range(n):
                sc = atol + max(abs(y[i]), abs(ynew[i])) * rtol
                r5 = abs(err5[i]) / sc
                r3 = abs(err3[i]) / sc
                if max_norm:
                    e5 = max(e5, r5 * r5)
                    e3 = max(e3, r3 * r3)
                else:
                    e5 += r5 * r5
                    e3 += r3 * r3
            if not (math.isfinite(e5) and math.isfinite(e3)):
                finite = False
            if not finite:
                err = np.inf
            elif e5 == 0.0 and e3 == 0.0:
                err = 0.0
            else:
                err = h * e5 / math.sqrt((e5 + 0.01 * e3) * (1 if max_norm else n))
            if err < 1.0:
                if err == 0.0:
                    factor = MAX_FACTOR
                else:
                    factor = min(MAX_FACTOR, SAFETY * err ** ERR_EXP)
                if rejected:
                    factor = min(1.0, factor)
                h_abs = h * factor
                accepted = True
            else:
                if not math.isfinite(err):
                    h_abs = h * MIN_FACTOR
                else:
                    h_abs = h * max(MIN_FACTOR, SAFETY * err ** ERR_EXP)
                rejected = True
                n_rej += 1

        n_acc += 1
        t_old = t
        t = t_new
        # dense output for every sample in (t_old, t]
        if t_out[j_out] < t:
            for s in range(AX.shape[0]):
                st = ns + 1 + s
                _combine(y, h, AX[s], K, st, tmp)
                fun(t_old + CX[s] * h, tmp, K[st])
                nfev += 1
            for i in range(n):
                dy = ynew[i] - y[i]
                F[0, i] = dy
                F[1, i] = h * f[i] - dy
                F[2, i] = 2.0 * dy - h * (fnew[i] + f[i])
            for r in range(4):
                _combine(zero, h, D[r], K, ns + 4, F[3 + r])
            while j_out < nout and t_out[j_out] < t:
                x = (t_out[j_out] - t_old) / h
                for i in range(n):
                    v = 0.0j
                    for r in range(7):
                        v += F[6 - r, i]
                        if r % 2 == 0:
                            v *= x
                        else:
                            v *= 1.0 - x
                    out[j_out, i] = v + y[i]
                j_out += 1
        for i in range(n):
            y[i] = ynew[i]
            f[i] = fnew[i]
        while j_out < nout and t_out[j_out] <= t:
            out[j_out] = y
            j_out += 1
        ok = True
        for i in range(n):
            if not math.isfinite(y[i].real) or not math.isfinite(y[i].imag):
                ok = False
        if not ok:
            return out, STATUS_NONFINITE, n_acc, n_rej, nfev, t
    return out, STATUS_OK, n_acc, n_rej, nfev, t


def run(cm: CompiledModel, rho0: np.ndarray, t_out: np.ndarray, rtol: float, atol: float,
        max_step: float = np.inf, max_steps: int = 50_000_000, error_norm: str = "rms"):
    y0 = np.ascontiguousarray(rho0, dtype=complex).reshape(-1)
    return integrate_dop853(y0, np.ascontiguousarray(t_out, dtype=float), float(rtol), float(atol),
                            float(max_step), int(max_steps), error_norm == "max", *cm.args(),
                            _A, _B, _C, _E3, _E5, _D, _AX, _CX)


def rhs(cm: CompiledModel, t: float, rho: np.ndarray) -> np.ndarray:
    rho = np.ascontiguousarray(rho, dtype=complex)
    out = np.empty_like(rho)
    lindblad_kernel(float(t), rho, out, *cm.args())
    return out
