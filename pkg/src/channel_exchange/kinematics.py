"""On-shell momenta for the detector-axis geometry.

The outgoing electron runs along +z, the incoming electron lies in the ZX
plane at polar angle theta_e and the incoming photon arrives with direction
(theta_ph, phi_ph). The outgoing electron energy follows from
energy-momentum conservation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .tensor import FourVector, mink_dot

# propagator pole guard, relative to E_e * E_ph
PROPAGATOR_TOL = 1e-9
# forward-degeneracy guard on P0 - Pz, relative to P0
FORWARD_TOL = 1e-12


class KinematicsError(ValueError):
    code = "KinematicsError"


class DegenerateForward(KinematicsError):
    code = "DegenerateForward"


class NonPhysical(KinematicsError):
    code = "NonPhysical"


class CollinearSingularity(KinematicsError):
    code = "CollinearSingularity"


ERRORS = {cls.code: cls for cls in (DegenerateForward, NonPhysical, CollinearSingularity)}


@dataclass(frozen=True)
class ScatterConfig:
    E_e: float
    E_ph: float
    theta_e: float
    theta_ph: float
    phi_ph: float

    def __post_init__(self):
        if not (self.E_e > 0 and self.E_ph > 0):
            raise ValueError("energies must be positive")
        if not 0.0 <= self.theta_e <= math.pi:
            raise ValueError(f"theta_e={self.theta_e} outside [0, pi]")
        if not 0.0 <= self.theta_ph <= math.pi:
            raise ValueError(f"theta_ph={self.theta_ph} outside [0, pi]")
        if not 0.0 <= self.phi_ph < 2 * math.pi:
            raise ValueError(f"phi_ph={self.phi_ph} outside [0, 2pi)")

    def scaled(self, lam: float) -> ScatterConfig:
        return ScatterConfig(self.E_e * lam, self.E_ph * lam, self.theta_e, self.theta_ph, self.phi_ph)


@dataclass(frozen=True)
class MomentumSet:
    p: FourVector
    k: FourVector
    pbar: FourVector
    kbar: FourVector
    P: FourVector = field(init=False)
    Pbar: FourVector = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "P", self.p + self.k)
        # u-channel propagator p - kbar (= pbar - k)
        object.__setattr__(self, "Pbar", self.p - self.kbar)

    @property
    def invariants(self) -> dict[str, float]:
        return {
            "P2": mink_dot(self.P, self.P),
            "Pbar2": mink_dot(self.Pbar, self.Pbar),
            "p.k": mink_dot(self.p, self.k),
            "p.kbar": mink_dot(self.p, self.kbar),
            "p.pbar": mink_dot(self.p, self.pbar),
        }

    def arrays(self) -> tuple[np.ndarray, ...]:
        return tuple(np.asarray(v) for v in (self.p, self.k, self.pbar, self.kbar))


def incoming_momenta_arrays(E_e, E_ph, theta_e, theta_ph, phi_ph):
    """Vectorized incoming momenta, each of shape (..., 4)."""
    E_e, E_ph, theta_e, theta_ph, phi_ph = np.broadcast_arrays(
        *(np.asarray(a, dtype=float) for a in (E_e, E_ph, theta_e, theta_ph, phi_ph))
    )
    zero = np.zeros_like(E_e)
    p = E_e[..., None] * np.stack([np.ones_like(E_e), np.sin(theta_e), zero, np.cos(theta_e)], axis=-1)
    st = np.sin(theta_ph)
    k = E_ph[..., None] * np.stack(
        [np.ones_like(E_ph), st * np.cos(phi_ph), st * np.sin(phi_ph), np.cos(theta_ph)], axis=-1
    )
    return p, k


def solve_arrays(E_e, E_ph, theta_e, theta_ph, phi_ph):
    """Vectorized kinematics solve.

    Returns ``(p, k, pbar, kbar, codes)``; `codes` is an object array holding
    "" for solved points and an error code otherwise. Momenta at failed
    points are NaN.
    """
    p, k = incoming_momenta_arrays(E_e, E_ph, theta_e, theta_ph, phi_ph)
    scale = np.broadcast_to(np.asarray(E_e, float) * np.asarray(E_ph, float), p.shape[:-1])
    P = p + k
    P2 = mink_dot(P, P)
    light_cone = P[..., 0] - P[..., 3]
    codes = np.full(p.shape[:-1], "", dtype=object)

    forward = light_cone <= FORWARD_TOL * P[..., 0]
    codes[forward] = DegenerateForward.code
    s_pole = ~forward & (np.abs(P2) < PROPAGATOR_TOL * scale)
    codes[s_pole] = CollinearSingularity.code

    with np.errstate(divide="ignore", invalid="ignore"):
        E_out = np.where(forward, np.nan, P2 / (2.0 * light_cone))
    pbar = E_out[..., None] * np.array([1.0, 0.0, 0.0, 1.0])
    kbar = P - pbar

    ok = codes == ""
    bad = ok & ((E_out <= 0) | (kbar[..., 0] <= 0))
    codes[bad] = NonPhysical.code
    ok = codes == ""

    Pbar = p - kbar
    u_pole = ok & (np.abs(mink_dot(Pbar, Pbar)) < PROPAGATOR_TOL * scale)
    codes[u_pole] = CollinearSingularity.code

    failed = codes != ""
    pbar = np.where(failed[..., None], np.nan, pbar)
    kbar = np.where(failed[..., None], np.nan, kbar)
    return p, k, pbar, kbar, codes


def incoming_momenta(cfg: ScatterConfig) -> tuple[FourVector, FourVector]:
    p, k = incoming_momenta_arrays(cfg.E_e, cfg.E_ph, cfg.theta_e, cfg.theta_ph, cfg.phi_ph)
    return FourVector.from_array(p), FourVector.from_array(k)


def solve_kinematics(cfg: ScatterConfig) -> MomentumSet:
    p, k, pbar, kbar, codes = solve_arrays(cfg.E_e, cfg.E_ph, cfg.theta_e, cfg.theta_ph, cfg.phi_ph)
    code = codes.item()
    if code:
        raise ERRORS[code](f"{code} at {cfg}")
    return MomentumSet(*(FourVector.from_array(v) for v in (p, k, pbar, kbar)))


def propagators(ms: MomentumSet) -> tuple[FourVector, FourVector, float, float]:
    """s- and u-channel propagator momenta and their Minkowski squares."""
    P2 = mink_dot(ms.P, ms.P)
    Pbar2 = mink_dot(ms.Pbar, ms.Pbar)
    ref = ms.p.t * ms.k.t
    if abs(P2) < PROPAGATOR_TOL * ref or abs(Pbar2) < PROPAGATOR_TOL * ref:
        raise CollinearSingularity(f"propagator pole: P2={P2}, Pbar2={Pbar2}")
    return ms.P, ms.Pbar, P2, Pbar2
