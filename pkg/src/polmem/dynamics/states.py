"""Density matrices and initial-state specifications."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from ..errors import InvalidArgument
from ..model import ModelInstance, drive_eval
from ..ops import PolaritonLabel, hermiticity_error, polariton_state, product_state

TRACE_TOL = 1e-8
HERMITIAN_TOL = 1e-10
POSITIVITY_TOL = 1e-8
PURITY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidArgument(f"density matrix must be square, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    @property
    def purity(self) -> float:
        return float(np.real(np.sum(self.entries * self.entries.T)))

    @property
    def hermiticity_error(self) -> float:
        return hermiticity_error(self.entries)

    @property
    def min_eigenvalue(self) -> float:
        h = 0.5 * (self.entries + self.entries.conj().T)
        return float(np.linalg.eigvalsh(h)[0])

    def violations(self) -> list[str]:
        out = []
        if abs(self.trace - 1) >= TRACE_TOL:
            out.append(f"trace {self.trace:.3g}")
        if self.hermiticity_error >= HERMITIAN_TOL:
            out.append(f"hermiticity error {self.hermiticity_error:.3g}")
        if self.min_eigenvalue < -POSITIVITY_TOL:
            out.append(f"negative eigenvalue {self.min_eigenvalue:.3g}")
        p = self.purity
        if not (1.0 / self.dim - PURITY_TOL <= p <= 1 + PURITY_TOL):
            out.append(f"purity {p:.3g}")
        return out

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def as_matrix(rho) -> np.ndarray:
    return np.asarray(rho.entries if isinstance(rho, DensityMatrix) else rho, dtype=complex)


def trace_distance(rho1, rho2) -> float:
    diff = as_matrix(rho1) - as_matrix(rho2)
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def _labels(labels) -> tuple[PolaritonLabel, ...]:
    return tuple(PolaritonLabel.parse(x) for x in labels)


@dataclass(frozen=True)
class PolaritonProduct:
    """Product of per-site dressed states, evaluated at the drive's initial value."""

    labels: tuple

    def __post_init__(self):
        object.__setattr__(self, "labels", _labels(self.labels))


@dataclass(frozen=True)
class Superposition:
    terms: tuple  # ((coefficient, PolaritonProduct), ...)

    def __post_init__(self):
        terms = []
        for coef, prod in self.terms:
            if not isinstance(prod, PolaritonProduct):
                prod = PolaritonProduct(prod)
            terms.append((complex(coef), prod))
        if not terms:
            raise InvalidArgument("superposition needs at least one term")
        object.__setattr__(self, "terms", tuple(terms))


@dataclass(frozen=True)
class Fock:
    photons: tuple
    atoms: tuple | None = None  # 0 = ground, 1 = excited

    def __post_init__(self):
        object.__setattr__(self, "photons", tuple(int(n) for n in self.photons))
        if self.atoms is not None:
            atoms = tuple(1 if a in (1, "e", "excited") else 0 for a in self.atoms)
            object.__setattr__(self, "atoms", atoms)


@dataclass(frozen=True, eq=False)
class DensityInput:
    matrix: np.ndarray


InitialStateSpec = Union[PolaritonProduct, Superposition, Fock, DensityInput]

MOTT = PolaritonProduct(("1-", "1-"))
SUPERFLUID = Superposition(((2 ** -0.5, ("2-", "0g")), (2 ** -0.5, ("0g", "2-"))))
NAMED_STATES = {"mott": MOTT, "superfluid": SUPERFLUID}


def _polariton_vector(prod: PolaritonProduct, model: ModelInstance, xi0: float) -> np.ndarray:
    layout = model.layout
    if len(prod.labels) != len(layout):
        raise InvalidArgument(f"{len(prod.labels)} labels for a {len(layout)}-site layout")
    vecs = []
    for label, site in zip(prod.labels, layout.sites):
        if not site.has_atom:
            if label.branch != "g":
                raise InvalidArgument("polariton labels need a site with an atom")
            v = np.zeros(site.dim, dtype=complex)
            v[0] = 1.0
        else:
            v = polariton_state(label, xi0, model.g, site.n_max)
        vecs.append(v)
    return product_state(vecs)


def initial_density(spec: InitialStateSpec, model: ModelInstance) -> np.ndarray:
    """Normalised initial density matrix on the model's full layout."""
    if isinstance(spec, str):
        try:
            spec = NAMED_STATES[spec]
        except KeyError:
            raise InvalidArgument(f"unknown named state {spec!r}") from None
    xi0 = model.local_detuning(drive_eval(model.drive, 0.0).value)
    if isinstance(spec, PolaritonProduct):
        psi = _polariton_vector(spec, model, xi0)
    elif isinstance(spec, Superposition):
        psi = sum(c * _polariton_vector(p, model, xi0) for c, p in spec.terms)
    elif isinstance(spec, Fock):
        layout = model.layout
        if len(spec.photons) != len(layout):
            raise InvalidArgument("one photon number per site required")
        psi = np.zeros(layout.dim, dtype=complex)
        psi[layout.index(spec.photons, spec.atoms)] = 1.0
    elif isinstance(spec, DensityInput):
        rho = np.array(spec.matrix, dtype=complex)
        if rho.shape != (model.dim, model.dim):
            raise InvalidArgument(f"density input shape {rho.shape} does not match dim {model.dim}")
        if hermiticity_error(rho) > 1e-12 or abs(np.trace(rho) - 1) > 1e-12:
            raise InvalidArgument("density input must be Hermitian with unit trace")
        if np.linalg.eigvalsh(rho)[0] < -1e-12:
            raise InvalidArgument("density input must be positive semidefinite")
        return rho
    else:
        raise InvalidArgument(f"unsupported initial state {spec!r}")
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise InvalidArgument("initial state vector vanishes")
    psi = psi / norm
    return np.outer(psi, psi.conj())


def two_body_projector_vectors(labels: Sequence, model: ModelInstance,
                               detunings: np.ndarray) -> np.ndarray:
    """Instantaneous product polariton vectors, one row per detuning sample."""
    prod = PolaritonProduct(labels)
    out = np.empty((len(detunings), model.dim), dtype=complex)
    for k, xi in enumerate(detunings):
        out[k] = _polariton_vector(prod, model, float(xi))
    return out
