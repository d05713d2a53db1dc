"""Finite-dimensional linear operators, model problems and the dense pseudoinverse oracle."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .rng import as_generator

#: Largest dimension for which operators are assembled densely.
DENSE_CAP = 2000
#: Singular values below ``RANK_RTOL * sigma_max`` are treated as zero.
RANK_RTOL = 1e-12


class DenseCapError(ValueError):
    pass


class LinearOperator:
    """Linear map R^N -> R^M given by a matrix, a diagonal, or a pair of callables.

    ``apply`` and ``adjoint_apply`` accept a vector or a 2-D array whose
    columns are vectors.
    """

    def __init__(
        self,
        shape: tuple[int, int],
        apply: Callable | None = None,
        adjoint_apply: Callable | None = None,
        *,
        matrix=None,
        diagonal=None,
        name: str = "",
    ):
        self.shape = (int(shape[0]), int(shape[1]))
        self.name = name
        self._matrix = None
        self._diagonal = None
        if matrix is not None:
            m = np.array(matrix, dtype=float)
            if m.shape != self.shape:
                raise ValueError(f"matrix of shape {m.shape} for operator shape {self.shape}")
            m.setflags(write=False)
            self._matrix = m
            self.representation = "dense"
            self._apply = lambda x: m @ x
            self._adjoint = lambda y: m.T @ y
        elif diagonal is not None:
            d = np.array(diagonal, dtype=float)
            if self.shape[0] != self.shape[1] or d.shape != (self.shape[0],):
                raise ValueError("diagonal operators are square with one entry per dimension")
            d.setflags(write=False)
            self._diagonal = d
            self.representation = "diagonal"
            self._apply = self._adjoint = lambda x: (d * x.T).T
        else:
            if apply is None or adjoint_apply is None:
                raise ValueError("a matrix-free operator needs apply and adjoint_apply")
            self.representation = "composed"
            self._apply = apply
            self._adjoint = adjoint_apply

    def __repr__(self):
        return f"LinearOperator({self.name or self.representation}, shape={self.shape})"

    @property
    def dim_domain(self) -> int:
        return self.shape[1]

    @property
    def dim_range(self) -> int:
        return self.shape[0]

    @property
    def diagonal(self) -> np.ndarray | None:
        return self._diagonal

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.shape[1]:
            raise ValueError(f"input of dimension {x.shape[0]}, operator domain is R^{self.shape[1]}")
        return self._apply(x)

    def adjoint_apply(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.shape[0] != self.shape[0]:
            raise ValueError(f"input of dimension {y.shape[0]}, operator range is R^{self.shape[0]}")
        return self._adjoint(y)

    __call__ = apply

    def adjoint(self) -> "LinearOperator":
        if self._matrix is not None:
            return LinearOperator(self.shape[::-1], matrix=self._matrix.T, name=f"{self.name}*")
        if self._diagonal is not None:
            return self
        return LinearOperator(self.shape[::-1], self._adjoint, self._apply, name=f"{self.name}*")

    def __matmul__(self, other: "LinearOperator") -> "LinearOperator":
        if not isinstance(other, LinearOperator):
            return NotImplemented
        if self.shape[1] != other.shape[0]:
            raise ValueError(f"cannot compose shapes {self.shape} and {other.shape}")
        return LinearOperator(
            (self.shape[0], other.shape[1]),
            lambda x: self.apply(other.apply(x)),
            lambda y: other.adjoint_apply(self.adjoint_apply(y)),
            name=f"{self.name}@{other.name}",
        )

    def to_dense(self, cap: int = DENSE_CAP) -> np.ndarray:
        if self._matrix is not None:
            return self._matrix
        if max(self.shape) > cap:
            raise DenseCapError(
                f"operator of shape {self.shape} exceeds the dense cap {cap}; "
                "matrix-free use is not supported here"
            )
        if self._diagonal is not None:
            return np.diag(self._diagonal)
        return self.apply(np.eye(self.shape[1]))

    @cached_property
    def _svd(self) -> "SvdTriple":
        return _dense_svd(self.to_dense())

    @cached_property
    def norm(self) -> float:
        if self._diagonal is not None:
            return float(np.abs(self._diagonal).max())
        return float(self._svd.sigmas[0]) if len(self._svd.sigmas) else 0.0


def identity_operator(n: int) -> LinearOperator:
    if n < 1:
        raise ValueError("dimension must be at least 1")
    return LinearOperator((n, n), diagonal=np.ones(n), name=f"identity({n})")


def make_hp_operator(N: int) -> LinearOperator:
    """Diagonal operator ``(x_i) -> (x_i / sqrt(i+1))`` on R^N; self-adjoint and compact."""
    if N < 1:
        raise ValueError("N must be at least 1")
    return LinearOperator((N, N), diagonal=1.0 / np.sqrt(np.arange(1, N + 1)), name=f"hp({N})")


def make_volterra_operator(N: int) -> LinearOperator:
    """Discrete integration ``(Kx)_i = (1/N) sum_{j<=i} x_j``."""
    if N < 1:
        raise ValueError("N must be at least 1")
    return LinearOperator((N, N), matrix=np.tril(np.ones((N, N))) / N, name=f"volterra({N})")


@dataclass(frozen=True)
class SvdTriple:
    """``K = sum_n sigma_n <., u_n> v_n``: rows of ``u`` lie in the domain, rows of ``v`` in the range."""

    u: np.ndarray
    v: np.ndarray
    sigmas: np.ndarray

    @property
    def rank(self) -> int:
        return len(self.sigmas)

    def reassemble(self) -> np.ndarray:
        return (self.v.T * self.sigmas) @ self.u


def _dense_svd(A: np.ndarray) -> SvdTriple:
    W, s, Vt = np.linalg.svd(A, full_matrices=False)
    keep = s > RANK_RTOL * s[0] if s.size and s[0] > 0 else np.zeros(s.shape, bool)
    u, v, s = Vt[keep], W[:, keep].T, s[keep]
    # Sign convention: largest-magnitude entry of each u_n is positive.
    if len(s):
        pivot = np.argmax(np.abs(u), axis=1)
        signs = np.sign(u[np.arange(len(s)), pivot])
        u = u * signs[:, None]
        v = v * signs[:, None]
    for arr in (u, v, s):
        arr.setflags(write=False)
    return SvdTriple(u, v, s)


def svd_decompose(op: LinearOperator, cap: int = DENSE_CAP) -> SvdTriple:
    """Dense SVD with zero singular values (below ``1e-12 * sigma_max``) dropped."""
    if max(op.shape) > cap:
        raise DenseCapError(
            f"operator of shape {op.shape} exceeds the dense cap {cap}; "
            "matrix-free SVD is not supported here"
        )
    return op._svd


def pseudo_inverse_direct(op: LinearOperator, y) -> np.ndarray:
    """Minimum-norm least-squares solution ``sum sigma_n^{-1} <y, v_n> u_n``."""
    t = svd_decompose(op)
    y = np.asarray(y, dtype=float)
    coeff = t.v @ y
    return t.u.T @ (coeff.T / t.sigmas).T


def range_basis(op: LinearOperator) -> np.ndarray:
    """Orthonormal basis (columns) of ``ran K``."""
    return svd_decompose(op).v.T


def coimage_basis(op: LinearOperator) -> np.ndarray:
    """Orthonormal basis (columns) of ``ker(K)^perp = ran K*``."""
    return svd_decompose(op).u.T


def check_adjoint(op: LinearOperator, trials: int = 100, rng=None) -> float:
    """Largest relative mismatch ``|<Kx,y> - <x,K*y>| / (|x||y|)`` over random pairs."""
    g = as_generator(rng)
    X = g.standard_normal((op.shape[1], trials))
    Y = g.standard_normal((op.shape[0], trials))
    lhs = np.sum(op.apply(X) * Y, axis=0)
    rhs = np.sum(X * op.adjoint_apply(Y), axis=0)
    scale = np.linalg.norm(X, axis=0) * np.linalg.norm(Y, axis=0)
    return float(np.max(np.abs(lhs - rhs) / scale))
