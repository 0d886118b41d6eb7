"""Model definitions shared by the MPO builders, the evolution gates, and
the brute-force oracles.

Spin-1/2 conventions (Pauli matrices, not spin operators):

* ``transverse_field_ising``:  H = -J sum_i sz_i sz_{i+1} - h sum_i sx_i
* ``heisenberg_xxz``:          H = J sum_i (sx sx + sy sy + delta sz sz)
                                   - field sum_i sz_i
* ``custom_nn``:               H = sum_i two_site_{i,i+1} + sum_i one_site_i

All chains are open. The classical model is the zero-field 2D Ising model
E = -J sum_<ij> s_i s_j on the square lattice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SY = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
ID2 = np.eye(2, dtype=complex)

PAULI = {"sx": SX, "sy": SY, "sz": SZ, "id": ID2}

MODELS = ("transverse_field_ising", "heisenberg_xxz", "custom_nn")


def _hermiticity(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T)))


@dataclass(frozen=True)
class HamiltonianSpec:
    """A nearest-neighbour chain Hamiltonian; see the module docstring for
    the exact form of each model."""

    model: str
    n_sites: int
    J: float = 1.0
    h: float = 0.0
    delta: float = 1.0
    field: float = 0.0
    two_site: np.ndarray | None = None
    one_site: np.ndarray | None = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}, expected one of {MODELS}")
        if not isinstance(self.n_sites, (int, np.integer)) or self.n_sites < 2:
            raise ValueError(f"n_sites must be an integer >= 2, got {self.n_sites}")
        if self.model == "custom_nn":
            if self.two_site is None:
                raise ValueError("custom_nn needs a two_site matrix")
            ts = np.asarray(self.two_site, dtype=complex)
            d2 = ts.shape[0]
            d = int(round(np.sqrt(d2)))
            if ts.ndim != 2 or ts.shape != (d2, d2) or d * d != d2:
                raise ValueError(f"two_site must be square d^2 x d^2, got shape {ts.shape}")
            if _hermiticity(ts) > 1e-12:
                raise ValueError("two_site matrix is not Hermitian")
            object.__setattr__(self, "two_site", ts)
            if self.one_site is not None:
                os = np.asarray(self.one_site, dtype=complex)
                if os.shape != (d, d):
                    raise ValueError(f"one_site must be {d} x {d}, got shape {os.shape}")
                if _hermiticity(os) > 1e-12:
                    raise ValueError("one_site matrix is not Hermitian")
                object.__setattr__(self, "one_site", os)
        elif self.two_site is not None or self.one_site is not None:
            raise ValueError("two_site/one_site are only valid for custom_nn")

    @property
    def phys_dim(self) -> int:
        if self.model == "custom_nn":
            return int(round(np.sqrt(self.two_site.shape[0])))
        return 2


def transverse_field_ising(n_sites: int, J: float = 1.0, h: float = 1.0) -> HamiltonianSpec:
    return HamiltonianSpec(model="transverse_field_ising", n_sites=n_sites, J=J, h=h)


def heisenberg_xxz(
    n_sites: int, J: float = 1.0, delta: float = 1.0, field: float = 0.0
) -> HamiltonianSpec:
    return HamiltonianSpec(model="heisenberg_xxz", n_sites=n_sites, J=J, delta=delta, field=field)


def custom_nn(n_sites: int, two_site, one_site=None) -> HamiltonianSpec:
    return HamiltonianSpec(model="custom_nn", n_sites=n_sites, two_site=two_site, one_site=one_site)


def term_matrices(spec: HamiltonianSpec) -> tuple[np.ndarray, np.ndarray]:
    """The raw interaction pieces of a chain model: a d^2 x d^2 two-site
    matrix (acting on an ordered neighbour pair) and a d x d one-site
    matrix. ``H = sum_bonds two(i, i+1) + sum_sites one(i)``."""
    if spec.model == "transverse_field_ising":
        return -spec.J * np.kron(SZ, SZ), -spec.h * SX
    if spec.model == "heisenberg_xxz":
        two = spec.J * (np.kron(SX, SX) + np.kron(SY, SY) + spec.delta * np.kron(SZ, SZ))
        return two, -spec.field * SZ
    one = spec.one_site
    if one is None:
        one = np.zeros((spec.phys_dim, spec.phys_dim), dtype=complex)
    return np.array(spec.two_site, dtype=complex), np.array(one, dtype=complex)


def bond_terms(spec: HamiltonianSpec) -> list[np.ndarray]:
    """One Hermitian d^2 x d^2 matrix per bond whose sum reproduces H.

    The one-site part of each site is shared half-and-half between the two
    touching bonds; boundary sites put their full share on their only bond.
    """
    two, one = term_matrices(spec)
    d = spec.phys_dim
    eye = np.eye(d, dtype=complex)
    n = spec.n_sites
    out = []
    for b in range(n - 1):
        left_share = 1.0 if b == 0 else 0.5
        right_share = 1.0 if b + 1 == n - 1 else 0.5
        out.append(two + left_share * np.kron(one, eye) + right_share * np.kron(eye, one))
    return out


@dataclass(frozen=True)
class ClassicalModelSpec:
    """The 2D classical model for real-space coarse graining. Only the
    zero-field square-lattice Ising model is supported."""

    model: str = "ising_2d"
    beta: float = 1.0
    J: float = 1.0
    field: float = 0.0

    def __post_init__(self):
        if self.model != "ising_2d":
            raise ValueError(f"unknown classical model {self.model!r}")
        if not self.beta > 0.0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.field != 0.0:
            raise ValueError("nonzero field is not supported")
