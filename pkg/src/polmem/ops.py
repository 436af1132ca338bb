"""Operator algebra on truncated Fock (x) two-level spaces.

Basis ordering is site-major: the composite space is ``site 0 (x) site 1 (x) ...``
and within a site the photon index is the slow index and the atom the fast one,
so the local index of ``|n, atom>`` is ``2*n + atom`` (atom 0 = ground,
1 = excited). Photon-only sites use the plain Fock index ``n``.

Sites are addressed with 0-based indices.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InvalidArgument

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class SiteSpec:
    n_max: int
    has_atom: bool = True

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise InvalidArgument(f"n_max must be an integer >= 1, got {self.n_max!r}")

    @property
    def dim(self) -> int:
        return (self.n_max + 1) * (2 if self.has_atom else 1)


@dataclass(frozen=True)
class HilbertLayout:
    sites: tuple[SiteSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(self.sites))
        if not self.sites:
            raise InvalidArgument("layout needs at least one site")

    @classmethod
    def uniform(cls, n_sites: int, n_max: int, has_atom: bool = True) -> "HilbertLayout":
        return cls(tuple(SiteSpec(n_max, has_atom) for _ in range(n_sites)))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s.dim for s in self.sites)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def __len__(self):
        return len(self.sites)

    def index(self, photons: Sequence[int], atoms: Sequence[int] | None = None) -> int:
        """Composite index of a bare product state."""
        if atoms is None:
            atoms = [0] * len(self.sites)
        idx = 0
        for site, n, m in zip(self.sites, photons, atoms):
            if not 0 <= n <= site.n_max:
                raise InvalidArgument(f"photon number {n} outside cutoff {site.n_max}")
            local = 2 * n + m if site.has_atom else n
            idx = idx * site.dim + local
        return idx


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense complex square matrix with an optional verified Hermiticity flag."""

    entries: np.ndarray
    label: str = ""
    hermitian: bool = False

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidArgument(f"operator must be square, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)
        if self.hermitian and hermiticity_error(m) > HERMITIAN_TOL:
            raise InvalidArgument(f"operator {self.label!r} flagged Hermitian but is not")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def dag(self) -> "OperatorMatrix":
        return OperatorMatrix(self.entries.conj().T, f"{self.label}^+", self.hermitian)

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            return OperatorMatrix(self.entries @ other.entries, f"{self.label}{other.label}")
        return self.entries @ other

    def __add__(self, other: "OperatorMatrix"):
        return OperatorMatrix(self.entries + other.entries, f"{self.label}+{other.label}",
                              self.hermitian and other.hermitian)

    def __sub__(self, other: "OperatorMatrix"):
        return OperatorMatrix(self.entries - other.entries, f"{self.label}-{other.label}",
                              self.hermitian and other.hermitian)

    def __mul__(self, scalar):
        herm = self.hermitian and np.isreal(scalar)
        return OperatorMatrix(scalar * self.entries, self.label, bool(herm))

    __rmul__ = __mul__

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def hermiticity_error(m: np.ndarray) -> float:
    m = np.asarray(m)
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def commutator(a, b) -> np.ndarray:
    a, b = np.asarray(a), np.asarray(b)
    return a @ b - b @ a


def annihilation(n_max: int) -> OperatorMatrix:
    """Truncated ladder operator with <m-1|a|m> = sqrt(m)."""
    if int(n_max) != n_max or n_max < 1:
        raise InvalidArgument(f"n_max must be an integer >= 1, got {n_max!r}")
    return OperatorMatrix(np.diag(np.sqrt(np.arange(1, n_max + 1)), 1), "a")


# sigma = |g><e| with the atom basis ordered (g, e)
SIGMA = np.array([[0.0, 1.0], [0.0, 0.0]])


def site_photon_op(site: SiteSpec) -> OperatorMatrix:
    a = annihilation(site.n_max).entries
    if site.has_atom:
        a = np.kron(a, np.eye(2))
    return OperatorMatrix(a, "a")


def site_sigma_op(site: SiteSpec) -> OperatorMatrix:
    if not site.has_atom:
        raise InvalidArgument("site has no atom")
    return OperatorMatrix(np.kron(np.eye(site.n_max + 1), SIGMA), "sigma")


def embed(site_index: int, local_op, layout: HilbertLayout) -> OperatorMatrix:
    """Lift a single-site operator to the composite space."""
    if not 0 <= site_index < len(layout):
        raise InvalidArgument(f"site index {site_index} out of range for {len(layout)} sites")
    m = np.asarray(local_op, dtype=complex)
    d = layout.dims[site_index]
    if m.shape != (d, d):
        raise InvalidArgument(f"local operator shape {m.shape} does not match site dimension {d}")
    factors = [np.eye(k) for k in layout.dims]
    factors[site_index] = m
    label = getattr(local_op, "label", "op")
    herm = bool(getattr(local_op, "hermitian", False))
    return OperatorMatrix(reduce(np.kron, factors), f"{label}_{site_index}", herm)


def photon_op(site_index: int, layout: HilbertLayout) -> OperatorMatrix:
    return embed(site_index, site_photon_op(layout.sites[site_index]), layout)


def sigma_op(site_index: int, layout: HilbertLayout) -> OperatorMatrix:
    return embed(site_index, site_sigma_op(layout.sites[site_index]), layout)


def number_operator(site_index: int, layout: HilbertLayout) -> OperatorMatrix:
    """Excitation number a^+a + sigma^+ sigma of one cavity."""
    site = layout.sites[site_index]
    if not site.has_atom:
        raise InvalidArgument("number_operator needs a site with an atom; use photon_number")
    local = np.kron(np.diag(np.arange(site.n_max + 1.0)), np.eye(2)) + np.kron(
        np.eye(site.n_max + 1), np.diag([0.0, 1.0]))
    return embed(site_index, OperatorMatrix(local, "N", hermitian=True), layout)


def photon_number(site_index: int, layout: HilbertLayout) -> OperatorMatrix:
    a = photon_op(site_index, layout).entries
    return OperatorMatrix(a.conj().T @ a, f"n_{site_index}", hermitian=True)


def total_excitations(layout: HilbertLayout) -> OperatorMatrix:
    total = np.zeros((layout.dim, layout.dim), dtype=complex)
    for i, site in enumerate(layout.sites):
        if site.has_atom:
            total += number_operator(i, layout).entries
        else:
            total += photon_number(i, layout).entries
    return OperatorMatrix(total, "N_tot", hermitian=True)


class JCEigen(NamedTuple):
    E_plus: float
    E_minus: float
    theta: float


def jc_eigen(n: int, xi: float, g: float = 1.0, omega_c: float = 0.0) -> JCEigen:
    """Dressed energies and mixing angle of the n-excitation JC doublet.

    ``xi`` is the atom-cavity detuning. The angle uses ``arctan2`` which equals
    the principal ``arctan(2 sqrt(n) g / xi)`` for xi > 0 and is pi/4 at xi = 0.
    """
    if int(n) != n or n < 1:
        raise InvalidArgument(f"n must be an integer >= 1 (|0g> has no doublet), got {n!r}")
    if g <= 0:
        raise InvalidArgument("g must be positive")
    root = 0.5 * np.sqrt(xi * xi + 4.0 * g * g * n)
    centre = omega_c * n + 0.5 * xi
    theta = 0.5 * np.arctan2(2.0 * np.sqrt(n) * g, xi)
    return JCEigen(centre + root, centre - root, float(theta))


@dataclass(frozen=True)
class PolaritonLabel:
    n: int
    branch: str = field(default="-")  # '+', '-' or 'g'

    def __post_init__(self):
        if self.branch not in ("+", "-", "g"):
            raise InvalidArgument(f"unknown polariton branch {self.branch!r}")
        if int(self.n) != self.n or self.n < 0:
            raise InvalidArgument(f"excitation number must be >= 0, got {self.n!r}")
        if (self.branch == "g") != (self.n == 0):
            raise InvalidArgument(f"ground branch is valid only with n = 0, got {self}")

    @classmethod
    def parse(cls, text) -> "PolaritonLabel":
        if isinstance(text, PolaritonLabel):
            return text
        s = str(text).strip()
        if s in ("0g", "g", "0"):
            return cls(0, "g")
        if len(s) < 2 or s[-1] not in "+-":
            raise InvalidArgument(f"cannot parse polariton label {text!r}")
        try:
            return cls(int(s[:-1]), s[-1])
        except ValueError as exc:
            raise InvalidArgument(f"cannot parse polariton label {text!r}") from exc

    def __str__(self):
        return "0g" if self.branch == "g" else f"{self.n}{self.branch}"


def polariton_state(label: PolaritonLabel, xi: float, g: float = 1.0,
                    n_max: int | None = None) -> np.ndarray:
    """Single-site dressed state |n+->, or |0g>, in the photon (x) atom basis."""
    label = PolaritonLabel.parse(label)
    if n_max is None:
        n_max = max(label.n, 1)
    if label.n > n_max:
        raise InvalidArgument(f"label {label} needs n_max >= {label.n}")
    v = np.zeros(2 * (n_max + 1), dtype=complex)
    if label.branch == "g":
        v[0] = 1.0
        return v
    theta = jc_eigen(label.n, xi, g).theta
    n = label.n
    if label.branch == "+":
        v[2 * n] = np.sin(theta)
        v[2 * (n - 1) + 1] = np.cos(theta)
    else:
        v[2 * n] = np.cos(theta)
        v[2 * (n - 1) + 1] = -np.sin(theta)
    return v


def jc_site_hamiltonian(n_max: int, xi: float, g: float = 1.0, omega_c: float = 0.0) -> np.ndarray:
    """omega_c (a^+a + sigma^+sigma) + xi sigma^+sigma + g (a sigma^+ + a^+ sigma) on one site."""
    site = SiteSpec(n_max, True)
    a = site_photon_op(site).entries
    s = site_sigma_op(site).entries
    n_op = a.conj().T @ a + s.conj().T @ s
    return omega_c * n_op + xi * s.conj().T @ s + g * (a @ s.conj().T + a.conj().T @ s)


def product_state(vectors: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, [np.asarray(v, dtype=complex) for v in vectors])
