"""Drive profiles and the three physical models.

Models are the two-cavity Jaynes-Cummings-Hubbard memristor (``build_jch``),
the single driven Jaynes-Cummings cavity (``build_driven_jc``) and the driven
Kerr resonator (``build_kerr``). Every model is reduced to the same form

    H(t) = H_static + s(t) H_coupling + sum_k c_k(t) H_k

where ``s`` is the scalar drive and ``c_k`` are cos/sin carriers, plus a list
of (rate, jump operator) pairs for the Lindblad dissipator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Union

import numba as nb
import numpy as np

from .errors import DomainError, InvalidArgument
from .ops import (HilbertLayout, OperatorMatrix, SiteSpec, photon_op, sigma_op,
                  total_excitations)

# drive kind codes shared with the compiled integrator
CONSTANT, GAUSSIAN, TRAIN, RAMP = 0, 1, 2, 3


@nb.njit(cache=True)
def drive_kernel(kind, p, t):
    """(value, d/dt value) of a drive encoded as (kind, params)."""
    if kind == CONSTANT:
        return p[0], 0.0
    if kind == GAUSSIAN:
        s = t - p[2]
        e = (p[1] - p[0]) * math.exp(-s * s / (2.0 * p[3] * p[3]))
        return p[0] + e, -e * s / (p[3] * p[3])
    if kind == TRAIN:
        val = p[0]
        rate = 0.0
        for k in range(int(p[5])):
            s = t - p[2] - k * p[4]
            e = (p[1] - p[0]) * math.exp(-s * s / (2.0 * p[3] * p[3]))
            val += e
            rate -= e * s / (p[3] * p[3])
        return val, rate
    # triangular ramp: up on [0, t_s), down on [t_s, 2 t_s]
    if t < p[2]:
        return p[0] + p[1] * t / p[2], p[1] / p[2]
    return p[0] - p[1] * (t - 2.0 * p[2]) / p[2], -p[1] / p[2]


@nb.njit(cache=True)
def drive_kernel_many(kind, p, ts):
    vals = np.empty(ts.shape[0])
    rates = np.empty(ts.shape[0])
    for i in range(ts.shape[0]):
        vals[i], rates[i] = drive_kernel(kind, p, ts[i])
    return vals, rates


def _require(cond, msg):
    if not cond:
        raise InvalidArgument(msg)


@dataclass(frozen=True)
class Gaussian:
    """Atomic modulation xi_i + (xi_f - xi_i) exp(-(t-T)^2 / 2 sigma_w^2)."""

    xi_i: float
    xi_f: float
    T: float
    sigma_w: float

    def __post_init__(self):
        _require(self.xi_f > self.xi_i > 0, "Gaussian drive needs xi_f > xi_i > 0")
        _require(self.sigma_w > 0, "sigma_w must be positive")
        _require(self.T ** 2 / (2 * self.sigma_w ** 2) > 1,
                 "Gaussian drive needs T^2/(2 sigma_w^2) > 1")

    @property
    def horizon(self):
        return 2.0 * self.T

    def kernel(self):
        return GAUSSIAN, np.array([self.xi_i, self.xi_f, self.T, self.sigma_w], float)


@dataclass(frozen=True)
class PulseTrain:
    pulse: Gaussian
    period: float | None = None
    count: int = 5

    def __post_init__(self):
        if self.period is None:
            object.__setattr__(self, "period", 2.0 * self.pulse.T)
        _require(self.period > 0, "pulse period must be positive")
        _require(int(self.count) == self.count and self.count >= 1, "pulse count must be >= 1")

    @property
    def horizon(self):
        return self.count * self.period

    def kernel(self):
        p = self.pulse
        return TRAIN, np.array([p.xi_i, p.xi_f, p.T, p.sigma_w, self.period, self.count], float)


@dataclass(frozen=True)
class Constant:
    xi: float

    def __post_init__(self):
        _require(self.xi >= 0, "constant detuning must be >= 0")

    @property
    def horizon(self):
        return math.inf

    def kernel(self):
        return CONSTANT, np.array([self.xi], float)


@dataclass(frozen=True)
class TriangularRamp:
    """Kerr pump amplitude rising F0 -> F0+dF over t_s and back over the next t_s."""

    F0: float
    dF: float
    t_s: float

    def __post_init__(self):
        _require(self.t_s > 0, "ramp sweep time t_s must be positive")

    @property
    def horizon(self):
        return 2.0 * self.t_s

    def kernel(self):
        return RAMP, np.array([self.F0, self.dF, self.t_s], float)


@dataclass(frozen=True)
class GaussianAmplitude:
    """Laser amplitude I0 exp(-(t-T)^2 / 2 sigma_w^2)."""

    I0: float
    T: float
    sigma_w: float

    def __post_init__(self):
        _require(self.sigma_w > 0, "sigma_w must be positive")
        _require(self.T ** 2 / (2 * self.sigma_w ** 2) > 1,
                 "Gaussian amplitude needs T^2/(2 sigma_w^2) > 1")

    @property
    def horizon(self):
        return 2.0 * self.T

    def kernel(self):
        return GAUSSIAN, np.array([0.0, self.I0, self.T, self.sigma_w], float)


DriveProfile = Union[Gaussian, PulseTrain, Constant, TriangularRamp, GaussianAmplitude]


class DriveValue(NamedTuple):
    value: float
    derivative: float


def drive_eval(profile: DriveProfile, t: float) -> DriveValue:
    horizon = profile.horizon
    if not (t >= 0 and t <= horizon * (1 + 1e-12)):
        raise DomainError(f"t = {t} outside drive domain [0, {horizon}]")
    kind, p = profile.kernel()
    v, r = drive_kernel(kind, p, float(t))
    return DriveValue(float(v), float(r))


def drive_series(profile: DriveProfile, ts) -> tuple[np.ndarray, np.ndarray]:
    kind, p = profile.kernel()
    return drive_kernel_many(kind, p, np.asarray(ts, dtype=float))


@dataclass(frozen=True)
class JCHParams:
    omega_c: float = 1e4
    omega_a: float | None = None
    g: float = 1.0
    J: float = 1e-2
    gamma_c: tuple[float, float] = (0.0, 0.0)
    gamma_a: tuple[float, float] = (0.0, 0.0)
    frame: str = "number_rotating"
    n_max: int = 2

    def __post_init__(self):
        if self.omega_a is None:
            object.__setattr__(self, "omega_a", self.omega_c)
        object.__setattr__(self, "gamma_c", tuple(float(x) for x in self.gamma_c))
        object.__setattr__(self, "gamma_a", tuple(float(x) for x in self.gamma_a))
        _require(self.g > 0, "g must be positive")
        _require(self.J >= 0, "J must be >= 0")
        _require(len(self.gamma_c) == 2 and len(self.gamma_a) == 2, "need two rates per loss channel")
        _require(min(self.gamma_c + self.gamma_a) >= 0, "decay rates must be >= 0")
        _require(self.frame in ("lab", "number_rotating"), f"unknown frame {self.frame!r}")


@dataclass(frozen=True)
class DrivenJCParams:
    drive: GaussianAmplitude
    delta_a: float = 0.0
    delta_c: float = 0.0
    delta_1: float = 0.0
    Omega: float = 1e-6
    g: float = 1.0
    gamma_c: float = 0.1
    gamma_a: float = 0.1
    n_max: int = 40

    def __post_init__(self):
        _require(self.g > 0, "g must be positive")
        _require(self.gamma_c >= 0 and self.gamma_a >= 0, "decay rates must be >= 0")


@dataclass(frozen=True)
class KerrParams:
    drive: TriangularRamp
    delta: float = 2.0
    U: float = 0.1
    gamma: float = 1.0
    n_max: int = 60

    def __post_init__(self):
        _require(self.gamma > 0, "Kerr model needs gamma > 0")


@dataclass(frozen=True, eq=False)
class ModelInstance:
    kind: str
    layout: HilbertLayout
    H_static: OperatorMatrix
    H_coupling: OperatorMatrix
    drive: DriveProfile
    collapse_ops: tuple = ()
    frame: str = "rotating"
    drive_enters: str = "as_detuning_on_H_coupling"
    harmonic_terms: tuple = ()  # (carrier 'cos'|'sin', angular frequency, OperatorMatrix)
    conserves_excitations: bool = False
    detuning_offset: float = 0.0
    g: float = 1.0
    params: object = None

    @property
    def dim(self) -> int:
        return self.layout.dim

    def hamiltonian(self, t: float, drive_value: float | None = None) -> np.ndarray:
        s = drive_eval(self.drive, t).value if drive_value is None else drive_value
        h = self.H_static.entries + s * self.H_coupling.entries
        for carrier, w, op in self.harmonic_terms:
            f = math.cos(w * t) if carrier == "cos" else math.sin(w * t)
            h = h + f * op.entries
        return h

    def local_detuning(self, drive_value: float) -> float:
        """Atom-cavity detuning defining the instantaneous polariton basis."""
        if self.kind == "jch":
            return drive_value + self.detuning_offset
        return self.detuning_offset

    def with_drive(self, drive: DriveProfile) -> "ModelInstance":
        return replace(self, drive=drive)


def build_jch(params: JCHParams, drive: DriveProfile) -> ModelInstance:
    layout = HilbertLayout.uniform(2, params.n_max, has_atom=True)
    a = [photon_op(i, layout).entries for i in range(2)]
    s = [sigma_op(i, layout).entries for i in range(2)]
    if params.frame == "lab":
        wc, wa = params.omega_c, params.omega_a
    else:
        # rotate at omega_c * N_tot; only the atom-cavity offset survives
        wc, wa = 0.0, params.omega_a - params.omega_c
    dim = layout.dim
    h0 = np.zeros((dim, dim), dtype=complex)
    hc = np.zeros((dim, dim), dtype=complex)
    for ai, si in zip(a, s):
        h0 += wc * ai.conj().T @ ai + wa * si.conj().T @ si
        h0 += params.g * (ai @ si.conj().T + ai.conj().T @ si)
        hc += si.conj().T @ si
    h0 -= params.J * (a[0].conj().T @ a[1] + a[1].conj().T @ a[0])
    collapse = []
    for i in range(2):
        if params.gamma_c[i] > 0:
            collapse.append((params.gamma_c[i], OperatorMatrix(a[i], f"a_{i}")))
        if params.gamma_a[i] > 0:
            collapse.append((params.gamma_a[i], OperatorMatrix(s[i], f"sigma_{i}")))
    return ModelInstance(
        kind="jch", layout=layout,
        H_static=OperatorMatrix(h0, "H0", hermitian=True),
        H_coupling=OperatorMatrix(hc, "sum sigma^+sigma", hermitian=True),
        drive=drive, collapse_ops=tuple(collapse), frame=params.frame,
        drive_enters="as_detuning_on_H_coupling", conserves_excitations=True,
        detuning_offset=params.omega_a - params.omega_c, g=params.g, params=params)


def build_driven_jc(params: DrivenJCParams) -> ModelInstance:
    layout = HilbertLayout((SiteSpec(params.n_max, True),))
    a = photon_op(0, layout).entries
    s = sigma_op(0, layout).entries
    ad, sd = a.conj().T, s.conj().T
    h0 = params.delta_a * sd @ s + params.delta_c * ad @ a + 1j * params.Omega * (sd - s)
    jc_sym = params.g * (ad @ s + a @ sd)
    jc_anti = 1j * params.g * (ad @ s - a @ sd)
    harmonics = ()
    if params.delta_1 == 0:
        h0 = h0 + jc_sym
    else:
        harmonics = (("cos", params.delta_1, OperatorMatrix(jc_sym, "g(a+s + as+)", hermitian=True)),
                     ("sin", params.delta_1, OperatorMatrix(jc_anti, "ig(a+s - as+)", hermitian=True)))
    collapse = []
    if params.gamma_c > 0:
        collapse.append((params.gamma_c, OperatorMatrix(a, "a")))
    if params.gamma_a > 0:
        collapse.append((params.gamma_a, OperatorMatrix(s, "sigma")))
    return ModelInstance(
        kind="driven_jc", layout=layout,
        H_static=OperatorMatrix(h0, "H_JC", hermitian=True),
        H_coupling=OperatorMatrix(1j * (ad - a), "i(a^+ - a)", hermitian=True),
        drive=params.drive, collapse_ops=tuple(collapse), frame="multi_rotating",
        drive_enters="as_amplitude_on_H_drive_pair", harmonic_terms=harmonics,
        detuning_offset=params.delta_a - params.delta_c, g=params.g, params=params)


def build_kerr(params: KerrParams) -> ModelInstance:
    layout = HilbertLayout((SiteSpec(params.n_max, False),))
    a = photon_op(0, layout).entries
    ad = a.conj().T
    h0 = -params.delta * ad @ a + 0.5 * params.U * ad @ ad @ a @ a
    return ModelInstance(
        kind="kerr", layout=layout,
        H_static=OperatorMatrix(h0, "H_Kerr", hermitian=True),
        H_coupling=OperatorMatrix(a + ad, "a + a^+", hermitian=True),
        drive=params.drive, collapse_ops=((params.gamma, OperatorMatrix(a, "a")),),
        frame="pump_rotating", drive_enters="as_amplitude_on_H_drive_pair",
        params=params)


def excitation_operator(model: ModelInstance) -> OperatorMatrix:
    return total_excitations(model.layout)
