"""Minkowski 4-vector algebra with signature (+, -, -, -).

Functions accept either the small value types defined here or plain numpy
arrays whose last axis has length 4, so the same code serves single points
and vectorized grid scans.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

METRIC = np.diag([1.0, -1.0, -1.0, -1.0])

# relative tolerance for lightlike checks, |v.v| <= ONSHELL_TOL * (v.t)**2
ONSHELL_TOL = 1e-9


def _levi_civita(sign: int = 1) -> np.ndarray:
    eps = np.zeros((4, 4, 4, 4))
    for perm in itertools.permutations(range(4)):
        # parity via cycle decomposition
        seen, parity = set(), 1
        for start in range(4):
            if start in seen:
                continue
            length, j = 0, start
            while j not in seen:
                seen.add(j)
                j = perm[j]
                length += 1
            if length % 2 == 0:
                parity = -parity
        eps[perm] = sign * parity
    return eps


# eps^{0123} = +1, all indices up
LEVI_CIVITA = _levi_civita()


@dataclass(frozen=True)
class FourVector:
    t: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(c) for c in (self.t, self.x, self.y, self.z)):
            raise ValueError(f"non-finite four-vector component: {self}")

    @classmethod
    def from_array(cls, a) -> FourVector:
        a = np.asarray(a, dtype=float)
        return cls(*(float(c) for c in a))

    def __array__(self, dtype=None, copy=None):
        return np.array([self.t, self.x, self.y, self.z], dtype=dtype or float)

    @property
    def spatial(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def __add__(self, other: FourVector) -> FourVector:
        return FourVector.from_array(np.asarray(self) + np.asarray(other))

    def __sub__(self, other: FourVector) -> FourVector:
        return FourVector.from_array(np.asarray(self) - np.asarray(other))

    def __neg__(self) -> FourVector:
        return FourVector(-self.t, -self.x, -self.y, -self.z)

    def __mul__(self, scale: float) -> FourVector:
        return FourVector(self.t * scale, self.x * scale, self.y * scale, self.z * scale)

    __rmul__ = __mul__

    def is_lightlike(self, tol: float = ONSHELL_TOL) -> bool:
        return abs(mink_dot(self, self)) <= tol * self.t**2


@dataclass(frozen=True)
class ComplexFourVector:
    t: complex
    x: complex
    y: complex
    z: complex

    def __post_init__(self):
        if not all(np.isfinite(c) for c in (self.t, self.x, self.y, self.z)):
            raise ValueError(f"non-finite four-vector component: {self}")

    @classmethod
    def from_array(cls, a) -> ComplexFourVector:
        a = np.asarray(a, dtype=complex)
        return cls(*(complex(c) for c in a))

    def __array__(self, dtype=None, copy=None):
        return np.array([self.t, self.x, self.y, self.z], dtype=dtype or complex)

    def conj(self) -> ComplexFourVector:
        return ComplexFourVector.from_array(np.conj(np.asarray(self)))


def as_array(v) -> np.ndarray:
    """Components of `v` as an ndarray; complex only if `v` is."""
    a = np.asarray(v)
    if a.shape[-1:] != (4,):
        raise ValueError(f"expected trailing axis of length 4, got shape {a.shape}")
    return a


def mink_dot(a, b):
    """Minkowski product a.t*b.t - a.x*b.x - a.y*b.y - a.z*b.z (no conjugation).

    Broadcasts over leading axes when given arrays.
    """
    a, b = as_array(a), as_array(b)
    out = a[..., 0] * b[..., 0] - a[..., 1] * b[..., 1] - a[..., 2] * b[..., 2] - a[..., 3] * b[..., 3]
    if out.ndim == 0:
        return out.item()
    return out


def lower_index(v):
    """Lower the index of a contravariant vector: (t, -x, -y, -z)."""
    if isinstance(v, FourVector):
        return FourVector(v.t, -v.x, -v.y, -v.z)
    if isinstance(v, ComplexFourVector):
        return ComplexFourVector(v.t, -v.x, -v.y, -v.z)
    a = as_array(v)
    return a * np.array([1.0, -1.0, -1.0, -1.0])


def levi_civita_contract(P, Pbar, sign: int = 1) -> np.ndarray:
    """M^{nu nubar} = eps^{nu alpha beta nubar} P_alpha Pbar_beta.

    Inputs are contravariant and lowered here. `sign` selects the
    eps^{0123} convention (+1 by default). Broadcasts over leading axes.
    """
    P_low = lower_index(as_array(P).astype(float))
    Pb_low = lower_index(as_array(Pbar).astype(float))
    return sign * np.einsum("nabm,...a,...b->...nm", LEVI_CIVITA, P_low, Pb_low)


def rotation_to_direction(theta: float, phi: float) -> np.ndarray:
    """Proper rotation R_z(phi) @ R_y(theta); maps z-hat to the (theta, phi) direction."""
    ct, st = math.cos(theta), math.sin(theta)
    cp, sp = math.cos(phi), math.sin(phi)
    ry = np.array([[ct, 0.0, st], [0.0, 1.0, 0.0], [-st, 0.0, ct]])
    rz = np.array([[cp, -sp, 0.0], [sp, cp, 0.0], [0.0, 0.0, 1.0]])
    return rz @ ry


def direction_angles(spatial) -> tuple[np.ndarray, np.ndarray]:
    """Polar and azimuthal angle of 3-vectors (last axis of length 3).

    On the z axis the azimuth is set to 0 so that the rotation convention
    stays deterministic.
    """
    v = np.asarray(spatial, dtype=float)
    rho = np.hypot(v[..., 0], v[..., 1])
    norm = np.hypot(rho, v[..., 2])
    theta = np.arctan2(rho, v[..., 2])
    on_axis = rho <= 1e-14 * norm
    phi = np.where(on_axis, 0.0, np.mod(np.arctan2(v[..., 1], v[..., 0]), 2 * np.pi))
    if theta.ndim == 0:
        return float(theta), float(phi)
    return theta, phi
