"""Matrix Lie algebras: u(1), su(2), so(N).

Elements are stored as matrices in the fundamental representation.  The
ad-invariant pairing is ``<x, y> = -c_G Re tr(x y)``, which is positive on
anti-hermitian / antisymmetric matrices.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg


class AlgebraMismatchError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class AlgebraDescriptor:
    name: str
    matrix_dim: int
    basis: np.ndarray
    c_G: float
    _gram_inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        basis = np.asarray(self.basis)
        n = self.matrix_dim
        if basis.ndim != 3 or basis.shape[1:] != (n, n):
            raise ValueError("basis must have shape (dim, n, n)")
        object.__setattr__(self, "basis", basis)
        for X in basis:
            if not self._in_algebra(X):
                raise ValueError(f"basis matrix violates the defining condition of {self.name}")
        if np.min(np.linalg.eigvalsh(self.gram())) <= 0:
            raise ValueError("pairing is not positive definite on the basis")
        frob = np.real(np.einsum("aij,bij->ab", basis.conj(), basis))
        object.__setattr__(self, "_gram_inv", np.linalg.inv(frob))

    @property
    def key(self) -> tuple:
        return (self.name, self.matrix_dim, self.basis.shape[0])

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dtype(self):
        return self.basis.dtype

    @property
    def abelian(self) -> bool:
        b = self.basis
        return bool(np.allclose(np.einsum("aij,bjk->abik", b, b), np.einsum("bij,ajk->abik", b, b)))

    def _in_algebra(self, X: np.ndarray, tol: float = 1e-14) -> bool:
        if self.name == "u1":
            return abs(X[0, 0].real) <= tol
        if self.name.startswith("so"):
            return np.isrealobj(X) and np.max(np.abs(X + X.T)) <= tol
        return np.max(np.abs(X + X.conj().T)) <= tol and abs(np.trace(X)) <= tol

    def gram(self) -> np.ndarray:
        return self.pairing_matrices(self.basis[:, None], self.basis[None, :])

    # vectorised matrix operations; trailing two axes are the matrix indices
    def to_matrix(self, coeffs: np.ndarray) -> np.ndarray:
        return np.einsum("...a,aij->...ij", np.asarray(coeffs, dtype=float), self.basis)

    def coefficients(self, mat: np.ndarray, check: bool = True) -> np.ndarray:
        """Basis coefficients of matrices; rejects matrices outside the span."""
        proj = np.real(np.einsum("aij,...ij->...a", self.basis.conj(), mat)) @ self._gram_inv.T
        if check:
            resid = np.max(np.abs(self.to_matrix(proj) - mat), initial=0.0)
            if resid > 1e-10 * max(1.0, float(np.max(np.abs(mat), initial=0.0))):
                raise ValueError(f"matrix is not in {self.name} (residual {resid:.3e})")
        return proj

    def bracket_matrices(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        if self.matrix_dim == 1:
            return np.zeros(np.broadcast_shapes(x.shape, y.shape), dtype=self.dtype)
        return x @ y - y @ x

    def pairing_matrices(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        if self.matrix_dim == 1:
            return -self.c_G * np.real(x[..., 0, 0] * y[..., 0, 0])
        return -self.c_G * np.real(np.einsum("...ij,...ji->...", x, y))

    def exp_matrices(self, x: np.ndarray) -> np.ndarray:
        return scipy.linalg.expm(x)


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    descriptor: AlgebraDescriptor
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if c.shape != (self.descriptor.dim,):
            raise ValueError("coefficient vector length must equal the basis size")
        object.__setattr__(self, "coefficients", c)

    @property
    def matrix(self) -> np.ndarray:
        return self.descriptor.to_matrix(self.coefficients)

    @classmethod
    def from_matrix(cls, descriptor: AlgebraDescriptor, mat: np.ndarray) -> "AlgebraElement":
        return cls(descriptor, descriptor.coefficients(np.asarray(mat)))

    def __add__(self, other):
        _same(self, other)
        return AlgebraElement(self.descriptor, self.coefficients + other.coefficients)

    def __mul__(self, s: float):
        return AlgebraElement(self.descriptor, s * self.coefficients)

    __rmul__ = __mul__


def _same(x: AlgebraElement, y: AlgebraElement) -> None:
    if x.descriptor.key != y.descriptor.key:
        raise AlgebraMismatchError(f"{x.descriptor.name} vs {y.descriptor.name}")


def bracket(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    _same(x, y)
    d = x.descriptor
    return AlgebraElement(d, d.coefficients(d.bracket_matrices(x.matrix, y.matrix)))


def pairing(x: AlgebraElement, y: AlgebraElement) -> float:
    _same(x, y)
    return float(x.descriptor.pairing_matrices(x.matrix, y.matrix))


def exponential(x: AlgebraElement) -> np.ndarray:
    """Group element exp(x) in the fundamental representation."""
    return x.descriptor.exp_matrices(x.matrix)


# ------------------------------------------------------------------- factories


@lru_cache(maxsize=None)
def u1() -> AlgebraDescriptor:
    return AlgebraDescriptor("u1", 1, np.array([[[1j]]]), 1.0)


PAULI = np.array(
    [[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex
)


@lru_cache(maxsize=None)
def su2() -> AlgebraDescriptor:
    """Basis e_j = -i sigma_j, so [e_1, e_2] = 2 e_3 cyclically."""
    return AlgebraDescriptor("su2", 2, -1j * PAULI, 1.0)


def elementary_rotation(n: int, a: int, b: int) -> np.ndarray:
    E = np.zeros((n, n))
    E[a, b], E[b, a] = 1.0, -1.0
    return E


@lru_cache(maxsize=None)
def so(n: int) -> AlgebraDescriptor:
    """so(N) with the elementary rotations E_ab (a < b) and c_G = N - 2."""
    if n < 3:
        raise ValueError("so(N) needs N >= 3 for a nondegenerate c_G = N - 2")
    basis = np.array([elementary_rotation(n, a, b) for a in range(n) for b in range(a + 1, n)])
    return AlgebraDescriptor(f"so{n}", n, basis, float(n - 2))


def so4_su2_basis(sign: int = 1) -> np.ndarray:
    """One su(2) summand of so(4).

    Returns ``E_23 + s E_14``, ``E_31 + s E_24``, ``E_12 + s E_34``;
    ``s = +1`` and ``s = -1`` give the two commuting ideals.
    """
    E = lambda a, b: elementary_rotation(4, a, b)
    return np.array([E(1, 2) + sign * E(0, 3), E(2, 0) + sign * E(1, 3), E(0, 1) + sign * E(2, 3)])


def by_name(name: str) -> AlgebraDescriptor:
    if name == "u1":
        return u1()
    if name == "su2":
        return su2()
    if name.startswith("so"):
        return so(int(name[2:]))
    raise ValueError(f"unknown algebra {name!r}")
