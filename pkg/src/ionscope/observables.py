"""
Measurement bases and test states on the truncated Fock space H_{N+1}.

Bases store their eigenstates as the columns of an (N+1) x (N+1) matrix, in
ascending eigenvalue order; protocol step k uses column k.
"""
from __future__ import annotations

import dataclasses
import enum
import json
import math
from typing import Any, Dict

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import eigh_tridiagonal
from scipy.special import eval_hermite, gammaln

from .errors import ConfigError, DimensionError, TruncationError
from .utils import complex_pair

TRUNCATION_LOSS_MAX = 1e-6


class BasisKind(str, enum.Enum):
    PHASE = "phase"
    POSITION = "position"


@dataclasses.dataclass(frozen=True, eq=False)
class ObservableBasis:
    kind: BasisKind
    N: int
    eigenvalues: NDArray[np.float64]
    eigenstates: NDArray[np.complex128]

    def __post_init__(self):
        vals = np.array(self.eigenvalues, dtype=np.float64)
        vecs = np.array(self.eigenstates, dtype=np.complex128)
        if vals.shape != (self.N + 1,) or vecs.shape != (self.N + 1, self.N + 1):
            raise DimensionError(f"basis for N={self.N} needs {self.N + 1} eigenpairs")
        vals.setflags(write=False)
        vecs.setflags(write=False)
        object.__setattr__(self, "kind", BasisKind(self.kind))
        object.__setattr__(self, "eigenvalues", vals)
        object.__setattr__(self, "eigenstates", vecs)

    @property
    def dim(self) -> int:
        return self.N + 1

    def state(self, k: int) -> NDArray[np.complex128]:
        return self.eigenstates[:, k]

    def operator(self) -> NDArray[np.complex128]:
        """A = sum_k a_k |psi_k><psi_k|."""
        v = self.eigenstates
        return (v * self.eigenvalues) @ v.conj().T

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "N": self.N,
            "eigenvalues": self.eigenvalues.tolist(),
            "eigenstates": [[complex_pair(z) for z in self.state(k)] for k in range(self.dim)],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), allow_nan=False)


def phase_basis(N: int) -> ObservableBasis:
    """Pegg-Barnett phase states |phi_k> = sum_n e^{i phi_k n}|n>/sqrt(N+1), phi_k = 2 pi k/(N+1)."""
    if N < 0:
        raise ConfigError(f"N must be >= 0, got {N}")
    phis = 2.0 * math.pi * np.arange(N + 1) / (N + 1)
    n = np.arange(N + 1)
    vecs = np.exp(1j * np.outer(n, phis)) / math.sqrt(N + 1)
    return ObservableBasis(BasisKind.PHASE, N, phis, vecs)


def position_basis(N: int) -> ObservableBasis:
    """Eigenstates of the truncated quadrature a_N + a_N^dagger."""
    if N < 1:
        raise ConfigError(f"position basis needs N >= 1, got {N}")
    vals, vecs = eigh_tridiagonal(np.zeros(N + 1), np.sqrt(np.arange(1, N + 1, dtype=np.float64)))
    # fix signs: the vacuum component of every eigenvector is non-zero
    vecs = vecs * np.sign(vecs[0, :])
    return ObservableBasis(BasisKind.POSITION, N, vals, vecs.astype(np.complex128))


def make_basis(kind: BasisKind | str, N: int) -> ObservableBasis:
    return phase_basis(N) if BasisKind(kind) is BasisKind.PHASE else position_basis(N)


def hermite_functions(n_levels: int, x: ArrayLike) -> NDArray[np.float64]:
    """<x|n> for n < n_levels, with x the dimensionless coordinate (a + a^dagger)/sqrt(2)."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    n = np.arange(n_levels)[:, None]
    log_norm = -0.5 * (n * math.log(2.0) + gammaln(n + 1) + 0.5 * math.log(math.pi))
    return eval_hermite(n, x[None, :]) * np.exp(log_norm - 0.5 * x[None, :] ** 2)


def quadrature_wavefunctions(basis: ObservableBasis, a: ArrayLike) -> NDArray[np.complex128]:
    """Row k is <a|psi_k> over eigenvalues a of a + a^dagger, normalized in a."""
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    phi = hermite_functions(basis.dim, a / math.sqrt(2.0))
    return 2.0 ** -0.25 * (basis.eigenstates.T @ phi)


def hermite_crosscheck(N: int) -> Dict[str, Any]:
    """Compare the quadrature spectrum with sqrt(2) times the zeros of H_{N+1}.

    Also reports the central eigenvalue spacing next to the asymptotic 2 pi / sqrt(4N).
    """
    vals = position_basis(N).eigenvalues
    zeros, _ = np.polynomial.hermite.hermgauss(N + 1)
    mid = (N + 1) // 2
    spacing = float(vals[mid] - vals[mid - 1]) if N >= 1 else math.nan
    asymptotic = 2.0 * math.pi / math.sqrt(4.0 * N)
    return {
        "N": N,
        "eigenvalues": vals.tolist(),
        "hermite_zeros": zeros.tolist(),
        "max_abs_deviation": float(np.max(np.abs(vals - math.sqrt(2.0) * np.sort(zeros)))),
        "central_spacing": spacing,
        "asymptotic_spacing": asymptotic,
        "relative_spacing_error": abs(spacing - asymptotic) / asymptotic,
    }


def phase_state_coeffs(N: int, phi: float) -> NDArray[np.complex128]:
    n = np.arange(N + 1)
    return np.exp(1j * phi * n) / math.sqrt(N + 1)


def _coherent_raw(alpha: complex, N: int) -> NDArray[np.complex128]:
    n = np.arange(N + 1)
    r = abs(alpha)
    if r == 0:
        out = np.zeros(N + 1, dtype=np.complex128)
        out[0] = 1.0
        return out
    log_mag = n * math.log(r) - 0.5 * gammaln(n + 1) - 0.5 * r * r
    return np.exp(log_mag + 1j * n * np.angle(alpha))


def coherent_coeffs(alpha: complex, N: int) -> NDArray[np.complex128]:
    """|alpha> truncated to n <= N and renormalized."""
    if N < 0:
        raise ConfigError(f"N must be >= 0, got {N}")
    c = _coherent_raw(alpha, N)
    loss = 1.0 - float(np.sum(np.abs(c) ** 2))
    if loss > TRUNCATION_LOSS_MAX:
        raise TruncationError(
            f"coherent state alpha={alpha} loses {loss:.2e} above N={N}; increase N"
        )
    return c / np.linalg.norm(c)


def cat_coeffs(alpha: complex, N: int) -> NDArray[np.complex128]:
    """(|alpha> + |-alpha>) truncated to n <= N and renormalized."""
    if N < 0:
        raise ConfigError(f"N must be >= 0, got {N}")
    c = _coherent_raw(alpha, N)
    loss = 1.0 - float(np.sum(np.abs(c) ** 2))
    if loss > TRUNCATION_LOSS_MAX:
        raise TruncationError(f"cat state alpha={alpha} loses {loss:.2e} above N={N}; increase N")
    parity = (-1.0) ** np.arange(N + 1)
    cat = c * (1.0 + parity)
    return cat / np.linalg.norm(cat)


def born_distribution(state: ArrayLike, basis: ObservableBasis) -> NDArray[np.float64]:
    """P_k = |<psi_k|phi>|^2."""
    phi = np.asarray(state, dtype=np.complex128).reshape(-1)
    if phi.size != basis.dim:
        raise DimensionError(f"state dimension {phi.size} != basis dimension {basis.dim}")
    return np.abs(basis.eigenstates.conj().T @ phi) ** 2


class RecipeKind(str, enum.Enum):
    EXPLICIT = "explicit"
    PHASE_STATE = "phase_state"
    COHERENT = "coherent"
    CAT = "cat"


@dataclasses.dataclass(frozen=True)
class StateRecipe:
    """How to build a motional test state."""

    kind: RecipeKind
    N: int = 0
    phi: float = 0.0
    alpha: complex = 0j
    coefficients: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", RecipeKind(self.kind))
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "coefficients", tuple(complex(c) for c in self.coefficients))
        if self.kind is RecipeKind.EXPLICIT:
            if not self.coefficients:
                raise ConfigError("explicit recipe needs coefficients")
            object.__setattr__(self, "N", len(self.coefficients) - 1)
        elif self.N < 0:
            raise ConfigError(f"recipe N must be >= 0, got {self.N}")

    @classmethod
    def explicit(cls, coefficients: ArrayLike) -> "StateRecipe":
        return cls(RecipeKind.EXPLICIT, coefficients=tuple(np.asarray(coefficients).reshape(-1)))

    @classmethod
    def phase_state(cls, N: int, phi: float) -> "StateRecipe":
        return cls(RecipeKind.PHASE_STATE, N=N, phi=phi)

    @classmethod
    def coherent(cls, alpha: complex, N: int) -> "StateRecipe":
        return cls(RecipeKind.COHERENT, N=N, alpha=alpha)

    @classmethod
    def cat(cls, alpha: complex, N: int) -> "StateRecipe":
        return cls(RecipeKind.CAT, N=N, alpha=alpha)

    def with_N(self, N: int) -> "StateRecipe":
        if self.kind is RecipeKind.EXPLICIT:
            raise ConfigError("cannot change N of an explicit recipe")
        return dataclasses.replace(self, N=N)

    def coeffs(self) -> NDArray[np.complex128]:
        if self.kind is RecipeKind.PHASE_STATE:
            return phase_state_coeffs(self.N, self.phi)
        if self.kind is RecipeKind.COHERENT:
            return coherent_coeffs(self.alpha, self.N)
        if self.kind is RecipeKind.CAT:
            return cat_coeffs(self.alpha, self.N)
        c = np.array(self.coefficients, dtype=np.complex128)
        norm = float(np.linalg.norm(c))
        if abs(norm * norm - 1.0) > 1e-12:
            raise ConfigError(f"explicit coefficients are not normalized (norm^2={norm * norm:.15g})")
        return c

    def padded(self, dim: int) -> NDArray[np.complex128]:
        c = self.coeffs()
        if c.size > dim:
            raise DimensionError(f"recipe has dimension {c.size} > {dim}")
        out = np.zeros(dim, dtype=np.complex128)
        out[: c.size] = c
        return out

    def to_dict(self) -> Dict[str, Any]:
        d: Dict[str, Any] = {"kind": self.kind.value}
        if self.kind is RecipeKind.EXPLICIT:
            d["coefficients"] = [complex_pair(c) for c in self.coefficients]
        else:
            d["N"] = self.N
        if self.kind is RecipeKind.PHASE_STATE:
            d["phi"] = self.phi
        if self.kind in (RecipeKind.COHERENT, RecipeKind.CAT):
            d["alpha"] = complex_pair(self.alpha)
        return d

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "StateRecipe":
        try:
            kind = RecipeKind(d["kind"])
        except (KeyError, ValueError) as e:
            raise ConfigError(f"recipe kind must be one of {[k.value for k in RecipeKind]}") from e
        if kind is RecipeKind.EXPLICIT:
            return cls(kind, coefficients=tuple(_complex(c) for c in d.get("coefficients", ())))
        return cls(
            kind,
            N=int(d.get("N", 0)),
            phi=float(d.get("phi", 0.0)),
            alpha=_complex(d.get("alpha", 0.0)),
        )

    def label(self) -> str:
        if self.kind is RecipeKind.PHASE_STATE:
            return f"phase_state(N={self.N},phi={self.phi:g})"
        if self.kind in (RecipeKind.COHERENT, RecipeKind.CAT):
            return f"{self.kind.value}(alpha={self.alpha:g},N={self.N})"
        return f"explicit(N={self.N})"


def _complex(v: Any) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    return complex(v)
