"""Discrete operators on image planes.

An image plane is a 2-D ``float64`` array of shape ``(m, n)``.  Its gradient is
a :class:`DualField` ``(p, q)`` made of backward-neighbour differences

    p[i, j] = r[i, j] - r[i + 1, j]     shape (m - 1, n)
    q[i, j] = r[i, j] - r[i, j + 1]     shape (m, n - 1)

and :func:`divergence` is the exact adjoint of :func:`grad` under the plain
(unweighted) inner products, so that ``<divergence(d), x> == <d, grad(x)>``.

The dual unit ball ``E`` couples ``p`` and ``q`` wherever both exist
(``i < m - 1`` and ``j < n - 1``); the last column of ``p`` and the last row of
``q`` are bounded componentwise.  Total variation is the support function of
that set, i.e. the isotropic discretisation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import ShapeError


def as_plane(r, name: str = "plane") -> np.ndarray:
    """Return ``r`` as a finite 2-D float64 array, raising on anything else."""
    a = np.asarray(r, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ShapeError(f"{name} must be a non-empty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    return a


def _check_same_shape(*named: tuple[str, np.ndarray]) -> None:
    shape = named[0][1].shape
    for name, arr in named[1:]:
        if arr.shape != shape:
            raise ShapeError(
                f"{name} has shape {arr.shape}, expected {shape} (from {named[0][0]})"
            )


class DualField(NamedTuple):
    """Dual variable pair: ``p`` is ``(m-1, n)``, ``q`` is ``(m, n-1)``."""

    p: np.ndarray
    q: np.ndarray

    @property
    def plane_shape(self) -> tuple[int, int]:
        """Shape of the image plane this field belongs to."""
        m = self.p.shape[0] + 1
        n = self.q.shape[1] + 1
        if self.p.shape[1] != n or self.q.shape[0] != m:
            raise ShapeError(
                f"inconsistent dual field: p {self.p.shape}, q {self.q.shape}"
            )
        return m, n

    @classmethod
    def zeros(cls, shape: tuple[int, int]) -> "DualField":
        m, n = shape
        return cls(np.zeros((m - 1, n)), np.zeros((m, n - 1)))

    def dot(self, other: "DualField") -> float:
        return float(np.sum(self.p * other.p) + np.sum(self.q * other.q))

    def norm(self) -> float:
        return float(np.sqrt(self.dot(self)))


@dataclass(frozen=True)
class BoxBound:
    """The feasible box ``[lower, 0]`` applied pixelwise."""

    lower: np.ndarray

    def __post_init__(self):
        lower = as_plane(self.lower, "lower")
        if np.any(lower > 0):
            raise ValueError("box lower bound must be <= 0 everywhere")
        object.__setattr__(self, "lower", lower)

    @property
    def shape(self) -> tuple[int, int]:
        return self.lower.shape


def grad(r) -> DualField:
    r = np.asarray(r, dtype=np.float64)
    return DualField(r[:-1, :] - r[1:, :], r[:, :-1] - r[:, 1:])


def divergence(d: DualField) -> np.ndarray:
    """Adjoint of :func:`grad`.

    ``out[i, j] = p[i, j] + q[i, j] - p[i-1, j] - q[i, j-1]`` with
    out-of-range terms taken as zero.
    """
    m, n = d.plane_shape
    out = np.zeros((m, n))
    out[:-1, :] += d.p
    out[1:, :] -= d.p
    out[:, :-1] += d.q
    out[:, 1:] -= d.q
    return out


def project_box(r, bound: BoxBound) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    _check_same_shape(("bound", bound.lower), ("r", r))
    return np.minimum(np.maximum(bound.lower, r), 0.0)


def project_ball(d: DualField) -> DualField:
    """Euclidean projection onto the dual unit ball ``E``.

    Coupled entries are scaled jointly by ``max(1, sqrt(p**2 + q**2))``;
    the last column of ``p`` and last row of ``q`` are clipped to ``[-1, 1]``.
    """
    p = np.array(d.p, dtype=np.float64)
    q = np.array(d.q, dtype=np.float64)
    _project_ball_inplace(p, q)
    return DualField(p, q)


def _project_ball_inplace(p: np.ndarray, q: np.ndarray) -> None:
    pi = p[:, :-1]
    qi = q[:-1, :]
    scale = np.sqrt(pi * pi + qi * qi)
    np.maximum(scale, 1.0, out=scale)
    pi /= scale
    qi /= scale
    np.clip(p[:, -1:], -1.0, 1.0, out=p[:, -1:])
    np.clip(q[-1:, :], -1.0, 1.0, out=q[-1:, :])


def tv(r) -> float:
    """Isotropic total variation, consistent with the dual ball ``E``."""
    p, q = grad(r)
    pi = p[:, :-1]
    qi = q[:-1, :]
    coupled = np.sum(np.sqrt(pi * pi + qi * qi))
    return float(coupled + np.sum(np.abs(p[:, -1:])) + np.sum(np.abs(q[-1:, :])))


def energy_total(eta, gamma, i, alpha: float, beta: float, lam: float = 0.0) -> float:
    """Dehazing energy ``alpha*TV(eta) + |eta + gamma - i|^2 + beta*TV(gamma) + lam*|gamma|^2``."""
    eta = np.asarray(eta, dtype=np.float64)
    gamma = np.asarray(gamma, dtype=np.float64)
    i = np.asarray(i, dtype=np.float64)
    _check_same_shape(("i", i), ("eta", eta), ("gamma", gamma))
    residual = eta + gamma - i
    e = alpha * tv(eta) + float(np.sum(residual * residual)) + beta * tv(gamma)
    if lam:
        e += lam * float(np.sum(gamma * gamma))
    return e
