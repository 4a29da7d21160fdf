"""Dirac-Pauli gamma matrices, slash contraction and the massless helicity projector."""
from __future__ import annotations

from enum import Enum

import numpy as np

from .tensor import ONSHELL_TOL, as_array, mink_dot

_I2 = np.eye(2, dtype=complex)
_Z2 = np.zeros((2, 2), dtype=complex)
_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

GAMMA = np.stack(
    [np.block([[_I2, _Z2], [_Z2, -_I2]])]
    + [np.block([[_Z2, s], [-s, _Z2]]) for s in _PAULI]
)
GAMMA.setflags(write=False)

# gamma5 = i g0 g1 g2 g3, which ties Tr[g5 g^m g^n g^r g^s] = -4i eps^{mnrs}
GAMMA5 = 1j * GAMMA[0] @ GAMMA[1] @ GAMMA[2] @ GAMMA[3]
GAMMA5.setflags(write=False)

# gamma^mu g_{mu mu}, so that slash(v) = v^mu GAMMA_LOWER[mu]
GAMMA_LOWER = GAMMA * np.array([1.0, -1.0, -1.0, -1.0])[:, None, None]

IDENTITY = np.eye(4, dtype=complex)


class ElectronSpin(Enum):
    UP = 1
    DOWN = 2

    @property
    def sign(self) -> int:
        """+1 for up, -1 for down, the sign in (I +- gamma5)."""
        return 1 if self is ElectronSpin.UP else -1


def gamma(mu: int) -> np.ndarray:
    if mu not in (0, 1, 2, 3):
        raise IndexError(f"gamma index must be 0..3, got {mu!r}")
    return GAMMA[mu].copy()


def gamma5() -> np.ndarray:
    return GAMMA5.copy()


def slash(v) -> np.ndarray:
    """gamma^mu v_mu for contravariant v; batched over leading axes."""
    a = as_array(v)
    return np.einsum("...m,mij->...ij", a, GAMMA_LOWER)


def mat_trace(m) -> complex:
    t = np.trace(np.asarray(m), axis1=-2, axis2=-1)
    return complex(t) if np.ndim(t) == 0 else t


def helicity_projector(pbar, spin: ElectronSpin, tol: float = ONSHELL_TOL) -> np.ndarray:
    """u ubar for a massless electron of momentum `pbar`: (I +- gamma5) slash(pbar) / 2."""
    a = as_array(pbar).astype(float)
    if np.any(np.abs(mink_dot(a, a)) > tol * a[..., 0] ** 2):
        raise ValueError("helicity projector needs a lightlike momentum")
    return 0.5 * (IDENTITY + spin.sign * GAMMA5) @ slash(a)
