"""Master-equation integration and the per-sample observable recorder."""
from __future__ import annotations

import csv
import logging
import time as _time
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import CutoffOverflow, DomainError, IntegratorFailure, InvalidArgument
from ..model import ModelInstance, build_jch, drive_series
from ..ops import PolaritonLabel, number_operator, photon_number
from . import kernel
from .states import (HERMITIAN_TOL, POSITIVITY_TOL, PURITY_TOL, TRACE_TOL, InitialStateSpec,
                     as_matrix, initial_density, two_body_projector_vectors)

log = logging.getLogger(__name__)

# upper bound on density-matrix entries processed at once when recording
CHUNK_ENTRIES = 4_000_000

DEFAULT_JCH_POPULATIONS = (("1-", "1-"), ("2-", "0g"), ("0g", "2-"))


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-8
    atol: float = 1e-10
    max_step: float = np.inf
    output_samples: int = 2000
    frame: str | None = None  # None keeps the model's own frame
    cutoff_tail_threshold: float = 1e-6
    max_steps: int = 50_000_000
    check_invariants: bool = True
    reduce_support: bool = True
    error_norm: str = "max"  # "rms" averages over all dim^2 entries (Hairer default)

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise InvalidArgument("tolerances must be positive")
        if self.output_samples < 2:
            raise InvalidArgument("output_samples must be >= 2")
        if self.max_step <= 0:
            raise InvalidArgument("max_step must be positive")
        if self.error_norm not in ("rms", "max"):
            raise InvalidArgument("error_norm must be 'rms' or 'max'")


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    drive: np.ndarray
    drive_rate: np.ndarray
    var_N: np.ndarray  # (samples, sites)
    mean_N: np.ndarray
    photons: np.ndarray
    populations: dict
    purity: np.ndarray
    trace_error: np.ndarray
    hermiticity_error: np.ndarray
    min_eigenvalue: np.ndarray
    tail: np.ndarray
    circuit_a: np.ndarray | None = None
    circuit_b: np.ndarray | None = None
    states: np.ndarray | None = None  # reduced to ``support``
    support: np.ndarray | None = None
    full_dim: int = 0
    model_kind: str = ""
    stats: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    @property
    def n_sites(self) -> int:
        return self.var_N.shape[1]

    def state(self, k: int) -> np.ndarray:
        """Full-space density matrix at sample ``k`` (needs stored states)."""
        if self.states is None:
            raise InvalidArgument("trajectory was recorded without state snapshots")
        rho = np.zeros((self.full_dim, self.full_dim), dtype=complex)
        rho[np.ix_(self.support, self.support)] = self.states[k]
        return rho

    def response(self, kind: str = "var_N", site: int = 0) -> np.ndarray:
        if kind == "var_N":
            return self.var_N[:, site]
        if kind == "photons":
            return self.photons[:, site]
        if kind == "mean_N":
            return self.mean_N[:, site]
        raise InvalidArgument(f"unknown response {kind!r}")

    def columns(self) -> dict:
        cols = {"time": self.times, "drive": self.drive, "drive_rate": self.drive_rate}
        for i in range(self.n_sites):
            cols[f"var_N_{i}"] = self.var_N[:, i]
        for i in range(self.n_sites):
            cols[f"mean_N_{i}"] = self.mean_N[:, i]
        for i in range(self.n_sites):
            cols[f"photons_{i}"] = self.photons[:, i]
        for name, series in self.populations.items():
            cols[f"p[{name}]"] = series
        cols.update(purity=self.purity, trace_error=self.trace_error,
                    hermiticity_error=self.hermiticity_error,
                    min_eigenvalue=self.min_eigenvalue, tail=self.tail)
        if self.circuit_a is not None:
            for i in range(self.n_sites):
                cols[f"a_{i}"] = self.circuit_a[:, i]
                cols[f"b_{i}"] = self.circuit_b[:, i]
        return cols

    def to_csv(self, path, extra: dict | None = None):
        cols = self.columns()
        if extra:
            cols.update(extra)
        write_columns(path, cols)


def write_columns(path, cols: dict):
    names = list(cols)
    n = len(next(iter(cols.values())))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for k in range(n):
            w.writerow([_fmt(cols[c][k]) for c in names])


def _fmt(v):
    if v is None or (isinstance(v, float) and np.isnan(v)):
        return ""
    return f"{float(v):.15g}"


def population_name(labels) -> str:
    return ",".join(str(x) for x in labels)


def invariant_support(model: ModelInstance, rho0: np.ndarray) -> np.ndarray:
    """Smallest set of basis indices holding rho0 that every generator term maps into itself."""
    ops = [model.H_static.entries, model.H_coupling.entries]
    ops += [op.entries for _, _, op in model.harmonic_terms]
    for _, c in model.collapse_ops:
        ops += [c.entries, c.entries.conj().T @ c.entries]
    links = np.zeros((model.dim, model.dim), dtype=bool)
    for op in ops:
        links |= np.abs(op) > 0
    mask = np.any(np.abs(rho0) > 0, axis=1)
    while True:
        grown = mask | links[:, mask].any(axis=1)
        if grown.sum() == mask.sum():
            return np.flatnonzero(mask)
        mask = grown


def _site_number_ops(model: ModelInstance):
    layout = model.layout
    n_ops, a_ops = [], []
    for i, site in enumerate(layout.sites):
        a_ops.append(photon_number(i, layout).entries)
        n_ops.append(number_operator(i, layout).entries if site.has_atom else a_ops[-1])
    return n_ops, a_ops


def _tail_weights(model: ModelInstance) -> np.ndarray:
    """Diagonal weights whose expectation is the cutoff tail population.

    Excitation-conserving models: probability of more total excitations than the
    smallest cutoff can hold. Otherwise: largest top-Fock-level occupancy (per site
    weights are returned stacked, the recorder takes the max).
    """
    layout = model.layout
    if model.conserves_excitations:
        total = sum(np.real(np.diag(op)) for op in _site_number_ops(model)[0])
        cutoff = min(s.n_max for s in layout.sites)
        return (total > cutoff + 0.5).astype(float)[None, :]
    rows = []
    for i, site in enumerate(layout.sites):
        n = np.real(np.diag(photon_number(i, layout).entries))
        rows.append((np.abs(n - site.n_max) < 0.5).astype(float))
    return np.array(rows)


def _expect(op_sub, R):
    # Tr[op rho] for every sample in R
    return np.einsum("ij,tji->t", op_sub, R)


def _dissipator_batch(R, jumps):
    out = np.zeros_like(R)
    for L in jumps:
        Ld = L.conj().T
        LdL = Ld @ L
        out += L @ R @ Ld - 0.5 * (LdL @ R + R @ LdL)
    return out


def _circuit_inputs(model, sub, R, times, n_ops):
    """a(t), b(t) per site with the frozen-scalar alpha_i = N_i^2 - 2<N_i> N_i."""
    h0 = model.H_static.entries[sub]
    hc = model.H_coupling.entries[sub]
    X = -1j * (h0 @ R - R @ h0)
    for carrier, w, op in model.harmonic_terms:
        f = np.cos(w * times) if carrier == "cos" else np.sin(w * times)
        hk = op.entries[sub]
        X += -1j * f[:, None, None] * (hk @ R - R @ hk)
    X += _dissipator_batch(R, [np.sqrt(r) * c.entries[sub] for r, c in model.collapse_ops])
    Y = -1j * (hc @ R - R @ hc)
    a_cols, b_cols = [], []
    for N in n_ops:
        Ns = N[sub]
        c = np.real(_expect(Ns, R))
        N2 = Ns @ Ns
        a_cols.append(np.real(_expect(N2, X) - 2 * c * _expect(Ns, X)))
        b_cols.append(-np.real(_expect(N2, Y) - 2 * c * _expect(Ns, Y)))
    return np.array(a_cols).T, np.array(b_cols).T



def _record(model, sub, support, R, times, n_ops, a_ops, populations, detunings, tail_w,
            record_circuit) -> dict:
    """Per-sample observables and invariant diagnostics for a block of states."""
    out = {}
    mean, var, phot = [], [], []
    for N, A in zip(n_ops, a_ops):
        Ns = N[sub]
        m = np.real(_expect(Ns, R))
        mean.append(m)
        var.append(np.real(_expect(Ns @ Ns, R)) - m ** 2)
        phot.append(np.real(_expect(A[sub], R)))
    out.update(mean_N=np.array(mean).T, var_N=np.array(var).T, photons=np.array(phot).T)
    for labels in populations:
        V = two_body_projector_vectors(labels, model, detunings)[:, support]
        out[f"p:{population_name(labels)}"] = np.real(np.einsum("ti,tij,tj->t", V.conj(), R, V))
    diag = np.real(np.einsum("tii->ti", R))
    out["tail"] = np.max(diag @ tail_w.T, axis=1)
    out["trace_error"] = np.abs(np.einsum("tii->t", R) - 1.0)
    Rh = np.conj(np.transpose(R, (0, 2, 1)))
    out["hermiticity_error"] = np.max(np.abs(R - Rh), axis=(1, 2))
    out["purity"] = np.real(np.einsum("tij,tji->t", R, R))
    out["min_eigenvalue"] = np.linalg.eigvalsh(0.5 * (R + Rh))[:, 0]
    if record_circuit:
        out["circuit_a"], out["circuit_b"] = _circuit_inputs(model, sub, R, times, n_ops)
    return out


def evolve(init: InitialStateSpec, model: ModelInstance, duration: float,
           cfg: IntegratorConfig | None = None, *, populations=None,
           record_circuit: bool = False, store_states: bool = False) -> Trajectory:
    """Integrate the master equation and record observables on a uniform grid.

    ``populations`` lists per-site polariton label tuples whose instantaneous
    occupation is recorded; JCH models default to p(1-,1-), p(2-,0g), p(0g,2-).
    """
    cfg = cfg or IntegratorConfig()
    if cfg.frame is not None and model.kind == "jch" and model.frame != cfg.frame:
        model = build_jch(replace(model.params, frame=cfg.frame), model.drive)
    if not duration > 0:
        raise InvalidArgument("duration must be positive")
    if duration > model.drive.horizon * (1 + 1e-12):
        raise DomainError(f"duration {duration} exceeds drive domain {model.drive.horizon}")
    if populations is None:
        populations = DEFAULT_JCH_POPULATIONS if model.kind == "jch" else ()
        n_max = min(site.n_max for site in model.layout.sites)
        populations = tuple(lab for lab in populations
                            if all(PolaritonLabel.parse(x).n <= n_max for x in lab))

    rho0 = as_matrix(initial_density(init, model) if not isinstance(init, np.ndarray) else init)
    support = invariant_support(model, rho0) if cfg.reduce_support else np.arange(model.dim)
    sub = np.ix_(support, support)
    cm = kernel.compile_model(model, support)
    times = np.linspace(0.0, float(duration), int(cfg.output_samples))

    t0 = _time.perf_counter()
    flat, status, n_acc, n_rej, nfev, t_reached = kernel.run(
        cm, rho0[sub], times, cfg.rtol, cfg.atol, cfg.max_step, cfg.max_steps, cfg.error_norm)
    elapsed = _time.perf_counter() - t0
    if status != kernel.STATUS_OK:
        reason = {kernel.STATUS_STEP_TOO_SMALL: "step size underflow",
                  kernel.STATUS_MAX_STEPS: "maximum step count exceeded",
                  kernel.STATUS_NONFINITE: "non-finite state"}[status]
        raise IntegratorFailure(f"integration stopped at t = {t_reached:.6g}: {reason}")
    d = len(support)
    R = flat.reshape(len(times), d, d)
    log.debug("evolve %s: dim %d -> %d, %d steps (%d rejected), %d rhs evals, %.2fs",
              model.kind, model.dim, d, n_acc, n_rej, nfev, elapsed)

    drive, rate = drive_series(model.drive, times)
    n_ops, a_ops = _site_number_ops(model)
    detunings = np.array([model.local_detuning(x) for x in drive]) if populations else None
    tail_w = _tail_weights(model)[:, support]
    # observables are reduced chunk by chunk to bound temporary memory
    step = max(1, int(CHUNK_ENTRIES // (d * d)))
    parts = []
    for lo in range(0, len(times), step):
        sl = slice(lo, lo + step)
        parts.append(_record(model, sub, support, R[sl], times[sl], n_ops, a_ops, populations,
                             None if detunings is None else detunings[sl], tail_w,
                             record_circuit))
    rec = {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}
    mean_N, var_N, photons = rec["mean_N"], rec["var_N"], rec["photons"]
    tail, trace_err, herm = rec["tail"], rec["trace_error"], rec["hermiticity_error"]
    purity, min_eig = rec["purity"], rec["min_eigenvalue"]
    if d < model.dim:
        min_eig = np.minimum(min_eig, 0.0)  # the complement block is identically zero
    pops = {population_name(lab): rec[f"p:{population_name(lab)}"] for lab in populations}
    circuit_a = rec.get("circuit_a")
    circuit_b = rec.get("circuit_b")

    over = np.flatnonzero(tail > cfg.cutoff_tail_threshold)
    if over.size:
        k = over[0]
        raise CutoffOverflow(
            f"cutoff tail population {tail[k]:.3g} exceeds {cfg.cutoff_tail_threshold:g} "
            f"at t = {times[k]:.6g}", time=float(times[k]), tail=float(tail[k]))
    if cfg.check_invariants:
        bad = ((trace_err >= TRACE_TOL) | (herm >= HERMITIAN_TOL) | (min_eig < -POSITIVITY_TOL)
               | (purity < 1.0 / model.dim - PURITY_TOL) | (purity > 1 + PURITY_TOL))
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            raise IntegratorFailure(
                f"density-matrix invariants violated at t = {times[k]:.6g}: trace error "
                f"{trace_err[k]:.3g}, hermiticity {herm[k]:.3g}, min eigenvalue {min_eig[k]:.3g}, "
                f"purity {purity[k]:.6g}")

    return Trajectory(
        times=times, drive=drive, drive_rate=rate, var_N=var_N, mean_N=mean_N,
        photons=photons, populations=pops, purity=purity, trace_error=trace_err,
        hermiticity_error=herm, min_eigenvalue=min_eig, tail=tail,
        circuit_a=circuit_a, circuit_b=circuit_b,
        states=R if store_states else None, support=support, full_dim=model.dim,
        model_kind=model.kind,
        stats=dict(steps=int(n_acc), rejected=int(n_rej), rhs_evals=int(nfev),
                   seconds=elapsed, reduced_dim=int(d), dim=int(model.dim)))


def cutoff_sentinel(traj: Trajectory) -> float:
    """Largest recorded cutoff tail population."""
    return float(np.max(traj.tail)) if len(traj.tail) else 0.0


def lindblad_rhs(rho, model: ModelInstance, t: float) -> np.ndarray:
    """-i[H(t), rho] + D rho on the full space."""
    rho = as_matrix(rho)
    if rho.shape != (model.dim, model.dim):
        raise InvalidArgument(f"state shape {rho.shape} does not match model dimension {model.dim}")
    h = model.hamiltonian(t)
    out = -1j * (h @ rho - rho @ h)
    for rate, c in model.collapse_ops:
        L = c.entries
        Ld = L.conj().T
        out += rate * (L @ rho @ Ld - 0.5 * (Ld @ L @ rho + rho @ Ld @ L))
    return out
