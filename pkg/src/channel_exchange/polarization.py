"""Circular polarization vectors for the outgoing photon.

Reference states are defined for propagation along +z and carried to the
photon direction by ``rotation_to_direction(theta, phi)``. They stay in
radiation gauge (zero time component).
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .tensor import ComplexFourVector, as_array, direction_angles, rotation_to_direction

_SQRT_HALF = 1.0 / np.sqrt(2.0)


class PhotonPolarization(Enum):
    R = "R"
    L = "L"


@dataclass(frozen=True)
class PolarizationVector:
    eps: ComplexFourVector
    direction: tuple[float, float, float]


def reference_vector(pol: PhotonPolarization, rcp_x_sign: int = -1) -> np.ndarray:
    """Spatial part of the +z circular state: (-+1, -i, 0)/sqrt(2) for (R, L)."""
    sx = rcp_x_sign if pol is PhotonPolarization.R else -rcp_x_sign
    return np.array([sx, -1j, 0.0]) * _SQRT_HALF


def circular_polarization(
    kbar, pol: PhotonPolarization, gauge_angle: float = 0.0, rcp_x_sign: int = -1
) -> PolarizationVector:
    """Rotate the +z reference state onto the direction of `kbar`.

    `gauge_angle` turns the transverse axes about the propagation direction
    before the rotation; it only changes the overall phase.
    """
    k = as_array(kbar).astype(float)
    spatial = k[1:]
    norm = np.linalg.norm(spatial)
    if norm == 0.0:
        raise ValueError("photon momentum has no spatial direction")
    if not k[0] > 0:
        raise ValueError("photon energy must be positive")
    theta, phi = direction_angles(spatial)
    ref = rotation_to_direction(0.0, gauge_angle) @ reference_vector(pol, rcp_x_sign)
    eps = rotation_to_direction(theta, phi) @ ref
    return PolarizationVector(
        eps=ComplexFourVector(0.0, *eps),
        direction=tuple(float(c) for c in spatial / norm),
    )


def circular_polarization_arrays(
    kbar, pol: PhotonPolarization, rcp_x_sign: int = -1
) -> np.ndarray:
    """Vectorized counterpart of :func:`circular_polarization` (zero gauge angle).

    `kbar` has shape (..., 4); returns complex (..., 4).
    """
    k = np.asarray(kbar, dtype=float)
    theta, phi = direction_angles(k[..., 1:])
    a, b, _ = reference_vector(pol, rcp_x_sign)
    ct, st, cp, sp = np.cos(theta), np.sin(theta), np.cos(phi), np.sin(phi)
    # R_y(theta) (a, b, 0) = (a ct, b, -a st); then R_z(phi)
    x1, y1, z1 = a * ct, b * np.ones_like(ct), -a * st
    eps = np.stack([np.zeros_like(x1), x1 * cp - y1 * sp, x1 * sp + y1 * cp, z1], axis=-1)
    return eps
