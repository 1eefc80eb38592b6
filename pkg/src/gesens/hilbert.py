"""Finite-dimensional real Hilbert spaces given by a Gram matrix.

Primal vectors (elements of Y) and dual vectors (elements of Y*) are both
plain float arrays of length ``dim``.  The duality pairing is the raw dot
product of coordinate arrays, so the Riesz map is multiplication by the Gram
matrix ``G`` and its inverse is a solve with ``G``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import ConfigError, DimensionError


@dataclass(frozen=True, eq=False)
class HilbertSpace:
    """R^n with inner product <x, y> = x^T G y.

    ``G`` must be exactly symmetric and positive definite; it is factored once
    at construction.
    """

    gram: np.ndarray
    dim: int = field(init=False)
    gram_is_diagonal: bool = field(init=False)

    def __post_init__(self):
        G = np.array(self.gram, dtype=float, copy=True)
        if G.ndim != 2 or G.shape[0] != G.shape[1] or G.shape[0] == 0:
            raise ConfigError(f"Gram matrix must be square and non-empty, got shape {G.shape}")
        if not np.all(np.isfinite(G)):
            raise ConfigError("Gram matrix has non-finite entries")
        if not np.array_equal(G, G.T):
            raise ConfigError("Gram matrix is not symmetric")
        diagonal = bool(np.count_nonzero(G - np.diag(np.diag(G))) == 0)
        if diagonal:
            d = np.diag(G).copy()
            if np.any(d <= 0):
                raise ConfigError("Gram matrix is not positive definite")
            factor = None
        else:
            try:
                factor = linalg.cho_factor(G, lower=True)
            except linalg.LinAlgError as exc:
                raise ConfigError("Gram matrix is not positive definite") from exc
            d = None
        G.setflags(write=False)
        object.__setattr__(self, "gram", G)
        object.__setattr__(self, "dim", G.shape[0])
        object.__setattr__(self, "gram_is_diagonal", diagonal)
        object.__setattr__(self, "_diag", d)
        object.__setattr__(self, "_cho", factor)

    # -- constructors -----------------------------------------------------
    @classmethod
    def identity(cls, dim: int) -> "HilbertSpace":
        if dim < 1:
            raise ConfigError("dimension must be positive")
        return cls(np.eye(dim))

    @classmethod
    def diagonal(cls, weights) -> "HilbertSpace":
        return cls(np.diag(np.asarray(weights, dtype=float)))

    @classmethod
    def from_config(cls, spec: dict) -> "HilbertSpace":
        """Build from ``{"dim": n, "gram": "identity" | {"diag": [...]} | {"dense": [[...]]}}``."""
        gram = spec.get("gram", "identity")
        dim = spec.get("dim")
        if gram == "identity":
            if dim is None:
                raise ConfigError("space.dim is required for an identity Gram")
            space = cls.identity(int(dim))
        elif isinstance(gram, dict) and "diag" in gram:
            space = cls.diagonal(gram["diag"])
        elif isinstance(gram, dict) and "dense" in gram:
            space = cls(np.asarray(gram["dense"], dtype=float))
        else:
            raise ConfigError(f"unknown Gram specification {gram!r}")
        if dim is not None and int(dim) != space.dim:
            raise ConfigError(f"space.dim={dim} does not match Gram size {space.dim}")
        return space

    # -- checks -----------------------------------------------------------
    def check(self, x, name: str = "vector") -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionError(f"{name} has shape {x.shape}, expected ({self.dim},)")
        return x

    def zeros(self) -> np.ndarray:
        return np.zeros(self.dim)

    # -- geometry ---------------------------------------------------------
    def inner(self, x, y) -> float:
        x = self.check(x, "x")
        y = self.check(y, "y")
        if self.gram_is_diagonal:
            return float(np.dot(x * self._diag, y))
        return float(x @ self.gram @ y)

    def norm(self, x) -> float:
        return float(np.sqrt(max(self.inner(x, x), 0.0)))

    def riesz(self, x) -> np.ndarray:
        """Primal -> dual coordinates: ``G x``."""
        x = self.check(x)
        if self.gram_is_diagonal:
            return self._diag * x
        return self.gram @ x

    def riesz_inv(self, mu) -> np.ndarray:
        """Dual -> primal coordinates: solves ``G x = mu``."""
        mu = self.check(mu)
        if self.gram_is_diagonal:
            return mu / self._diag
        return linalg.cho_solve(self._cho, mu)

    def pair(self, mu, v) -> float:
        """Duality pairing <mu, v> of a dual and a primal vector."""
        return float(np.dot(self.check(mu, "mu"), self.check(v, "v")))

    def dual_norm(self, mu) -> float:
        """sqrt(mu^T G^{-1} mu), the norm of ``mu`` in Y*."""
        return float(np.sqrt(max(self.pair(mu, self.riesz_inv(mu)), 0.0)))

    def dist(self, x, y) -> float:
        return self.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))

    def sqrt_gram(self) -> np.ndarray:
        """Symmetric square root of G (dense), used for spectral constants."""
        if self.gram_is_diagonal:
            return np.diag(np.sqrt(self._diag))
        w, V = np.linalg.eigh(self.gram)
        return (V * np.sqrt(w)) @ V.T

    def random_unit(self, rng: np.random.Generator) -> np.ndarray:
        v = rng.standard_normal(self.dim)
        return v / self.norm(v)

    def __repr__(self):
        kind = "diagonal" if self.gram_is_diagonal else "dense"
        return f"HilbertSpace(dim={self.dim}, {kind})"


def inner(space: HilbertSpace, x, y) -> float:
    return space.inner(x, y)


def riesz(space: HilbertSpace, x) -> np.ndarray:
    return space.riesz(x)


def riesz_inv(space: HilbertSpace, mu) -> np.ndarray:
    return space.riesz_inv(mu)


def dual_norm(space: HilbertSpace, mu) -> float:
    return space.dual_norm(mu)


def operator_constants(space: HilbertSpace, matrix) -> tuple[float, float]:
    """Exact (mu, L) of the linear map y -> M y from Y to Y*.

    mu is the best constant in <M y, y> >= mu ||y||^2 and L the operator norm
    ||M||_{Y -> Y*}.
    """
    M = np.asarray(matrix, dtype=float)
    S = space.sqrt_gram()
    Sinv = np.linalg.inv(S)
    T = Sinv @ M @ Sinv
    mu = float(np.linalg.eigvalsh(0.5 * (T + T.T))[0])
    lip = float(np.linalg.norm(T, 2))
    return mu, lip
