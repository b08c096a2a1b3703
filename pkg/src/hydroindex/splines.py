"""Cyclic cubic regression splines on the unit circle [0, 1).

The basis is cardinal: coefficient ``j`` is the function value at knot ``j``.
Second derivatives at the knots follow from the periodic C2 conditions
``B @ d2 = D @ beta`` (both matrices cyclic tridiagonal), so
``d2 = F @ beta`` with ``F = inv(B) @ D``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

__all__ = ["CyclicBasis", "build_cyclic_basis", "eval_basis", "roughness_penalty"]


def _cyclic_matrices(knots: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    k = len(knots)
    h = np.diff(np.append(knots, knots[0] + 1.0))  # h[i] = x[i+1] - x[i], wrapping
    B = np.zeros((k, k))
    D = np.zeros((k, k))
    for i in range(k):
        hm, hp = h[i - 1], h[i]
        B[i, (i - 1) % k] += hm / 6.0
        B[i, i] += (hm + hp) / 3.0
        B[i, (i + 1) % k] += hp / 6.0
        D[i, (i - 1) % k] += 1.0 / hm
        D[i, i] -= 1.0 / hm + 1.0 / hp
        D[i, (i + 1) % k] += 1.0 / hp
    return B, D


@dataclass(frozen=True)
class CyclicBasis:
    """Cyclic cubic spline basis with one function per knot."""

    knots: np.ndarray
    F: np.ndarray = field(repr=False)
    penalty: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.knots)

    @property
    def spacings(self) -> np.ndarray:
        return np.diff(np.append(self.knots, self.knots[0] + 1.0))

    def evaluate(self, positions, deriv: int = 0) -> np.ndarray:
        return eval_basis(self, positions, deriv=deriv)

    def __call__(self, positions, coefs) -> np.ndarray:
        return eval_basis(self, positions) @ np.asarray(coefs, dtype=float)


def build_cyclic_basis(dim: int = 10) -> CyclicBasis:
    """Cyclic cubic spline basis with ``dim`` equally spaced knots on [0, 1)."""
    if dim < 4:
        raise DataError(f"cyclic basis needs dim >= 4, got {dim}")
    knots = np.arange(dim) / dim
    B, D = _cyclic_matrices(knots)
    F = np.linalg.solve(B, D)
    S = D.T @ F
    S = 0.5 * (S + S.T)
    for a in (knots, F, S):
        a.setflags(write=False)
    return CyclicBasis(knots=knots, F=F, penalty=S)


def eval_basis(basis: CyclicBasis, positions, deriv: int = 0) -> np.ndarray:
    """Basis matrix (n x dim); ``deriv`` selects the 0th, 1st or 2nd derivative."""
    x = np.atleast_1d(np.asarray(positions, dtype=float))
    if x.ndim != 1:
        raise DataError("positions must be one-dimensional")
    if np.any(~(x >= 0.0) | ~(x < 1.0)):
        raise DataError("positions must lie in [0, 1)")
    k = basis.dim
    knots = basis.knots
    h = basis.spacings
    j = np.searchsorted(knots, x, side="right") - 1
    j = np.clip(j, 0, k - 1)
    jp = (j + 1) % k
    hj = h[j]
    left = x - knots[j]
    right = hj - left

    n = len(x)
    X = np.zeros((n, k))
    rows = np.arange(n)
    if deriv == 0:
        am, ap = right / hj, left / hj
        cm = (right**3 / hj - hj * right) / 6.0
        cp = (left**3 / hj - hj * left) / 6.0
    elif deriv == 1:
        am, ap = -1.0 / hj, 1.0 / hj
        cm = -(3.0 * right**2 / hj - hj) / 6.0
        cp = (3.0 * left**2 / hj - hj) / 6.0
    elif deriv == 2:
        am = ap = np.zeros(n)
        cm = right / hj
        cp = left / hj
    else:
        raise ValueError("deriv must be 0, 1 or 2")
    np.add.at(X, (rows, j), am)
    np.add.at(X, (rows, jp), ap)
    X += cm[:, None] * basis.F[j] + cp[:, None] * basis.F[jp]
    return X


def roughness_penalty(basis: CyclicBasis) -> np.ndarray:
    """Matrix S with ``beta @ S @ beta`` equal to the integral of f''(u)**2 over [0, 1)."""
    return np.array(basis.penalty)
