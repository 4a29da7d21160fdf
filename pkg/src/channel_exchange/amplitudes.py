"""Channel-exchange (s/u interference) and direct terms per out-state.

Two independent evaluations of the interference are provided:

* the closed form, which contracts the outgoing polarization with the
  T1 + T2 tensor (T1 symmetric and real, T2 the Levi-Civita piece);
* the trace path, which multiplies explicit 4x4 Dirac matrices in the two
  operator orders of the interference and traces them numerically.

Incoming electron spins are summed with slash(p) and incoming photon
polarizations with -g. Everything is in units of e**4.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .conventions import CANONICAL, Conventions
from .dirac import GAMMA, GAMMA5, IDENTITY, ElectronSpin, slash
from .kinematics import PROPAGATOR_TOL, CollinearSingularity, MomentumSet, propagators
from .polarization import PhotonPolarization, circular_polarization, circular_polarization_arrays
from .tensor import LEVI_CIVITA, METRIC, levi_civita_contract, lower_index, mink_dot

IMAG_TOL = 1e-8


class Quantity(Enum):
    EXCHANGE = "exchange"
    TOTAL = "total"


@dataclass(frozen=True)
class OutChannelState:
    spin: ElectronSpin
    pol: PhotonPolarization

    @property
    def label(self) -> str:
        return ("up" if self.spin is ElectronSpin.UP else "down") + "_" + self.pol.value


# canonical order (up R, up L, down R, down L)
OUT_STATES = tuple(
    OutChannelState(s, q)
    for s in (ElectronSpin.UP, ElectronSpin.DOWN)
    for q in (PhotonPolarization.R, PhotonPolarization.L)
)


@dataclass(frozen=True)
class ExchangeQuad:
    values: tuple[float, float, float, float]
    quantity: Quantity = Quantity.EXCHANGE

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) != 4 or not np.all(np.isfinite(vals)):
            raise ValueError(f"quad needs four finite values, got {self.values!r}")
        object.__setattr__(self, "values", vals)

    def __array__(self, dtype=None, copy=None):
        return np.array(self.values, dtype=dtype or float)

    @property
    def set1(self) -> float:
        """Value of up-R (equal to down-L)."""
        return self.values[0]

    @property
    def set2(self) -> float:
        """Value of up-L (equal to down-R)."""
        return self.values[1]

    def symmetry_residual(self, floor: float = 0.0) -> float:
        """Relative violation of up-R = down-L and up-L = down-R.

        `floor` bounds the normalization from below so that a quad that
        vanishes identically (forward, t = 0) does not compare round-off.
        """
        v = np.asarray(self)
        scale = max(np.max(np.abs(v)), floor, np.finfo(float).tiny)
        return max(abs(v[0] - v[3]), abs(v[1] - v[2])) / scale


@dataclass(frozen=True)
class AmplitudePathReport:
    closed_form: ExchangeQuad
    trace_path: ExchangeQuad
    max_abs_discrepancy: float
    residual_imaginary: float


def _spin_t2_sign(spin: ElectronSpin, conventions: Conventions) -> int:
    return conventions.t2_up_sign if spin is ElectronSpin.UP else -conventions.t2_up_sign


# -- closed form -------------------------------------------------------------


def exchange_T1(ms: MomentumSet) -> np.ndarray:
    """8[(p.k)(q^n Pb^m + Pb^n q^m) + (p.kbar)(q^n P^m + P^n q^m)], q = p - pbar."""
    p, k, pbar, kbar = ms.arrays()
    P, Pbar, q = p + k, p - kbar, p - pbar
    return 8.0 * (
        mink_dot(p, k) * (np.outer(q, Pbar) + np.outer(Pbar, q))
        + mink_dot(p, kbar) * (np.outer(q, P) + np.outer(P, q))
    )


def exchange_T2(ms: MomentumSet, spin: ElectronSpin, conventions: Conventions = CANONICAL) -> np.ndarray:
    """-+8i (p.pbar) eps^{n a b m} P_a Pbar_b, with '-' for up-spin under the canonical binding."""
    sign = _spin_t2_sign(spin, conventions)
    M = levi_civita_contract(ms.P, ms.Pbar, sign=conventions.levi_civita_sign)
    return sign * 8j * mink_dot(ms.p, ms.pbar) * M


def natural_scale(p, k, kbar):
    """Typical size of a per-state term, (p.k)/|p.kbar| + |p.kbar|/(p.k); broadcasts."""
    pk, pkb = np.abs(mink_dot(p, k)), np.abs(mink_dot(p, kbar))
    return pk / pkb + pkb / pk


def _real_checked(value: complex, what: str, scale: float) -> float:
    value = complex(value)
    if abs(value.imag) > IMAG_TOL * max(abs(value.real), scale):
        raise ArithmeticError(f"{what} has imaginary residue {value.imag:.3e} (real part {value.real:.3e})")
    return value.real


def exchange_closed(ms: MomentumSet, out: OutChannelState, conventions: Conventions = CANONICAL) -> float:
    """-(1/(P2 Pbar2)) eps*_n eps_m (T1 + T2)^{nm} for the outgoing photon state."""
    _, _, P2, Pbar2 = propagators(ms)
    eps = np.asarray(circular_polarization(ms.kbar, out.pol, rcp_x_sign=conventions.rcp_x_sign).eps)
    e_low = lower_index(eps)
    T = exchange_T1(ms) + exchange_T2(ms, out.spin, conventions)
    value = -(np.conj(e_low) @ T @ e_low) / (P2 * Pbar2)
    return _real_checked(value, "closed-form exchange", _scale(ms))


def exchange_closed_quad(ms: MomentumSet, conventions: Conventions = CANONICAL) -> ExchangeQuad:
    return ExchangeQuad(tuple(exchange_closed(ms, o, conventions) for o in OUT_STATES))


def exchange_closed_arrays(p, k, pbar, kbar, out: OutChannelState, conventions: Conventions = CANONICAL):
    """Vectorized closed form on (..., 4) momenta; returns (real, imag) arrays.

    Expands the T1/T2 contraction into scalar products so that no 4x4
    tensor is built per point.
    """
    P, Pbar, q = p + k, p - kbar, p - pbar
    eps = circular_polarization_arrays(kbar, out.pol, conventions.rcp_x_sign)
    ec = np.conj(eps)
    t1 = 8.0 * (
        mink_dot(p, k) * (mink_dot(ec, q) * mink_dot(eps, Pbar) + mink_dot(ec, Pbar) * mink_dot(eps, q))
        + mink_dot(p, kbar) * (mink_dot(ec, q) * mink_dot(eps, P) + mink_dot(ec, P) * mink_dot(eps, q))
    )
    lc = np.einsum(
        "nabm,...n,...a,...b,...m->...",
        LEVI_CIVITA,
        lower_index(ec),
        lower_index(P),
        lower_index(Pbar),
        lower_index(eps),
    )
    t2 = _spin_t2_sign(out.spin, conventions) * conventions.levi_civita_sign * 8j * mink_dot(p, pbar) * lc
    value = -(t1 + t2) / (mink_dot(P, P) * mink_dot(Pbar, Pbar))
    return np.real(value), np.imag(value)


# -- trace path --------------------------------------------------------------


def _projector(pbar, spin: ElectronSpin | None):
    if spin is None:
        return slash(pbar)
    return 0.5 * (IDENTITY + spin.sign * GAMMA5) @ slash(pbar)


def _outgoing_photon_pairs(eps):
    """[(weight, left, right)] standing for eps*_n gamma^n ... eps_m gamma^m.

    With `eps` None the outgoing polarization is summed by completeness (-g).
    """
    if eps is None:
        return [(-METRIC[n, n], GAMMA[n], GAMMA[n]) for n in range(4)]
    return [(1.0, slash(np.conj(eps)), slash(eps))]


def trace_terms_arrays(p, k, pbar, kbar, spin: ElectronSpin | None, eps):
    """Trace-engine terms for a batch of momenta.

    Returns complex arrays ``(exchange, s_term, u_term)``. `spin` None sums
    the outgoing electron spin, `eps` None sums the outgoing photon
    polarization covariantly; otherwise `eps` is the (..., 4) polarization.
    """
    P, Pbar = p + k, p - kbar
    Ps, Pbs, ps = slash(P), slash(Pbar), slash(p)
    proj = _projector(pbar, spin)
    exch = s = u = 0.0
    for w_out, el, er in _outgoing_photon_pairs(eps):
        for mu in range(4):
            w = w_out * -METRIC[mu, mu]
            gm = GAMMA[mu]
            a = proj @ el @ Ps @ gm @ ps @ er @ Pbs @ gm
            b = proj @ gm @ Pbs @ el @ ps @ gm @ Ps @ er
            exch = exch + w * (np.trace(a, axis1=-2, axis2=-1) + np.trace(b, axis1=-2, axis2=-1))
            s = s + w * np.trace(proj @ el @ Ps @ gm @ ps @ gm @ Ps @ er, axis1=-2, axis2=-1)
            u = u + w * np.trace(proj @ gm @ Pbs @ el @ ps @ er @ Pbs @ gm, axis1=-2, axis2=-1)
    P2, Pbar2 = mink_dot(P, P), mink_dot(Pbar, Pbar)
    return exch / (P2 * Pbar2), s / P2**2, u / Pbar2**2


def _scale(ms: MomentumSet) -> float:
    return float(natural_scale(*(np.asarray(v) for v in (ms.p, ms.k, ms.kbar))))


def _trace_point(ms: MomentumSet, out: OutChannelState | None, conventions: Conventions):
    propagators(ms)
    p, k, pbar, kbar = ms.arrays()
    if out is None:
        return trace_terms_arrays(p, k, pbar, kbar, None, None)
    eps = np.asarray(circular_polarization(kbar, out.pol, rcp_x_sign=conventions.rcp_x_sign).eps)
    return trace_terms_arrays(p, k, pbar, kbar, out.spin, eps)


def exchange_trace(ms: MomentumSet, out: OutChannelState, conventions: Conventions = CANONICAL) -> float:
    exch, _, _ = _trace_point(ms, out, conventions)
    return _real_checked(exch, "trace-path exchange", _scale(ms))


def exchange_trace_quad(ms: MomentumSet, conventions: Conventions = CANONICAL) -> ExchangeQuad:
    return ExchangeQuad(tuple(exchange_trace(ms, o, conventions) for o in OUT_STATES))


def direct_terms(ms: MomentumSet, out: OutChannelState, conventions: Conventions = CANONICAL) -> tuple[float, float]:
    """(|s-channel|^2, |u-channel|^2) for one out-state, incoming states summed."""
    _, s, u = _trace_point(ms, out, conventions)
    scale = _scale(ms)
    return _real_checked(s, "s-channel term", scale), _real_checked(u, "u-channel term", scale)


def summed_direct_terms(ms: MomentumSet) -> tuple[float, float]:
    """Direct terms summed over outgoing spins (slash pbar) and polarizations (-g)."""
    _, s, u = _trace_point(ms, None, CANONICAL)
    scale = _scale(ms)
    return _real_checked(s, "s-channel term", scale), _real_checked(u, "u-channel term", scale)


def summed_exchange(ms: MomentumSet) -> float:
    """Interference summed covariantly over every external state; vanishes when massless."""
    exch, _, _ = _trace_point(ms, None, CANONICAL)
    return _real_checked(exch, "summed exchange", _scale(ms))


def klein_nishina_massless(ms: MomentumSet) -> float:
    """Spin-averaged massless Compton |M|^2: 2((p.k)/(p.kbar) + (p.kbar)/(p.k))."""
    pk, pkb = mink_dot(ms.p, ms.k), mink_dot(ms.p, ms.kbar)
    ref = ms.p.t * ms.k.t
    if abs(pkb) < PROPAGATOR_TOL * ref or abs(pk) < PROPAGATOR_TOL * ref:
        raise CollinearSingularity("p.k or p.kbar vanishes")
    return 2.0 * (pk / pkb + pkb / pk)


def total_per_state(ms: MomentumSet, out: OutChannelState, conventions: Conventions = CANONICAL) -> float:
    """|Pi_1 + Pi_2|^2 for one out-state: s + u + exchange."""
    exch, s, u = _trace_point(ms, out, conventions)
    scale = _scale(ms)
    return sum(_real_checked(v, "per-state term", scale) for v in (exch, s, u))


def total_quad(ms: MomentumSet, conventions: Conventions = CANONICAL) -> ExchangeQuad:
    return ExchangeQuad(tuple(total_per_state(ms, o, conventions) for o in OUT_STATES), Quantity.TOTAL)


def quad_arrays(p, k, pbar, kbar, quantity: Quantity = Quantity.EXCHANGE, conventions: Conventions = CANONICAL):
    """Vectorized per-state values, shape (..., 4), plus max relative imaginary residue.

    Exchange values come from the closed form; total values add the trace
    engine's direct terms.
    """
    cols, worst = [], 0.0
    for out in OUT_STATES:
        re, im = exchange_closed_arrays(p, k, pbar, kbar, out, conventions)
        if quantity is Quantity.TOTAL:
            eps = circular_polarization_arrays(kbar, out.pol, conventions.rcp_x_sign)
            _, s, u = trace_terms_arrays(p, k, pbar, kbar, out.spin, eps)
            re = re + np.real(s) + np.real(u)
        cols.append(re)
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = np.abs(im) / np.maximum(np.abs(re), natural_scale(p, k, kbar))
        if np.any(np.isfinite(rel)):
            worst = max(worst, float(np.nanmax(rel)))
    return np.stack(cols, axis=-1), worst


def compare_paths(ms: MomentumSet, conventions: Conventions = CANONICAL) -> AmplitudePathReport:
    closed = exchange_closed_quad(ms, conventions)
    traced = exchange_trace_quad(ms, conventions)
    p, k, pbar, kbar = ms.arrays()
    imag = 0.0
    for out in OUT_STATES:
        _, im = exchange_closed_arrays(p, k, pbar, kbar, out, conventions)
        eps = np.asarray(circular_polarization(kbar, out.pol, rcp_x_sign=conventions.rcp_x_sign).eps)
        exch, _, _ = trace_terms_arrays(p, k, pbar, kbar, out.spin, eps)
        imag = max(imag, abs(float(im)), abs(complex(exch).imag))
    diff = float(np.max(np.abs(np.asarray(closed) - np.asarray(traced))))
    return AmplitudePathReport(closed, traced, diff, imag)
