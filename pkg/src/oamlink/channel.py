"""Element-level and Bessel-form mode-level channel gains.

Two first-class channel paths exist and are kept comparable:

* the exact element channel (free-space gain over the exact element-to-element
  distance), ground truth for leakage studies;
* the mode channel, a closed form in which the gain from transmit ring ``n``
  to receive ring ``m`` on mode ``l`` is proportional to
  ``J_l(2*pi*r_n*R_m / (lambda*sqrt(d^2 + r_n^2 + R_m^2)))``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    LinkGeometry,
    element_distance,
    element_distance_approx,
    mode_set,
    rx_azimuth,
    tx_azimuth,
)

BESSEL_MAX_ORDER = 64
BESSEL_MAX_ARG = 1e3
_SERIES_CUTOFF = 10.0


def bessel_j(order: int, x: float) -> float:
    """First-kind Bessel function J_order(x) for integer orders.

    Ascending power series below x = 10, normalized downward (Miller)
    recurrence above; accurate to better than 1e-10 absolute on the supported
    envelope |order| <= 64, |x| <= 1e3.  Satisfies J_{-l}(x) = (-1)^l J_l(x).
    """
    l = int(order)
    if l != order:
        raise ValueError("order must be an integer")
    if abs(l) > BESSEL_MAX_ORDER:
        raise ValueError(f"order {l} outside supported envelope |l| <= {BESSEL_MAX_ORDER}")
    if abs(x) > BESSEL_MAX_ARG:
        raise ValueError(f"argument {x} outside supported envelope |x| <= {BESSEL_MAX_ARG}")
    sign = 1.0
    if l < 0:
        l = -l
        if l % 2:
            sign = -sign
    if x < 0:
        x = -x
        if l % 2:
            sign = -sign
    if x == 0.0:
        return 1.0 if l == 0 else 0.0
    if x <= _SERIES_CUTOFF:
        return sign * _bessel_series(l, x)
    return sign * _bessel_miller(l, x)


def _bessel_series(l: int, x: float) -> float:
    half = 0.5 * x
    term = 1.0
    for k in range(1, l + 1):  # (x/2)^l / l!
        term *= half / k
    total = term
    k = 1
    while k < 500:
        term *= -(half * half) / (k * (k + l))
        total += term
        if abs(term) < 1e-18 * (1.0 + abs(total)):
            break
        k += 1
    return total


def _bessel_miller(l: int, x: float) -> float:
    top = max(l, x)
    m = int(top + 20 + 12.0 * top ** (1.0 / 3.0))
    if m % 2:
        m += 1
    j_hi = 0.0  # J_{k+1}
    j_cur = 1e-30  # J_k, starting at k = m (even)
    even_sum = j_cur  # accumulates J_0 + 2*sum_{k>=1} J_{2k}, J_0 added last
    out = 0.0
    for k in range(m, 0, -1):
        j_lo = (2.0 * k / x) * j_cur - j_hi
        j_hi, j_cur = j_cur, j_lo
        kk = k - 1  # order now held in j_cur
        if abs(j_cur) > 1e250:  # renormalize to dodge overflow
            j_cur *= 1e-250
            j_hi *= 1e-250
            even_sum *= 1e-250
            out *= 1e-250
        if kk == l:
            out = j_cur
        if kk > 0 and kk % 2 == 0:
            even_sum += j_cur
    norm = 2.0 * even_sum + j_cur
    return out / norm


def chi_argument(geom: LinkGeometry, n: int, m: int) -> float:
    """Bessel argument 2*pi*r_n*R_m / (lambda * sqrt(d^2 + r_n^2 + R_m^2))."""
    geom._check_tx(n, 1)
    geom._check_rx(m, 1)
    r = geom.tx.radius(n)
    R = geom.rx.radius(m)
    d = geom.axial_distance
    return 2.0 * math.pi * r * R / (geom.wavelength * math.sqrt(d * d + r * r + R * R))


def element_gain_exact(geom: LinkGeometry, n: int, u: int, m: int, v: int) -> complex:
    """Free-space gain beta*lambda*e^{-j*2*pi*dist/lambda} / (4*pi*dist), exact distance."""
    dist = element_distance(geom, n, u, m, v)
    lam = geom.wavelength
    return geom.beta * lam * cmath.exp(-2j * math.pi * dist / lam) / (4.0 * math.pi * dist)


def element_gain_farfield(geom: LinkGeometry, n: int, u: int, m: int, v: int) -> complex:
    """Far-field gain: approximate distance in the phase, axial distance in the amplitude."""
    dist = element_distance_approx(geom, n, u, m, v)
    lam = geom.wavelength
    d = geom.axial_distance
    return geom.beta * lam * cmath.exp(-2j * math.pi * dist / lam) / (4.0 * math.pi * d)


@dataclass(frozen=True)
class ElementChannel:
    """Dense element-to-element gain matrix.

    Row index is (m-1)*V + (v-1), column index (n-1)*U + (u-1).
    ``kind`` records which distance model filled the entries.
    """

    gains: np.ndarray
    kind: str
    tx_rings: int
    tx_elements: int
    rx_rings: int
    rx_elements: int


def element_channel(geom: LinkGeometry, kind: str = "exact") -> ElementChannel:
    """Assemble the full (M*V) x (N*U) element gain matrix."""
    if kind not in ("exact", "farfield"):
        raise ValueError(f"unknown element-channel kind {kind!r}")
    N, U = geom.tx.ring_count, geom.tx.element_count
    M, V = geom.rx.ring_count, geom.rx.element_count
    lam = geom.wavelength
    d = geom.axial_distance

    tx_ang = np.array([[tx_azimuth(geom, n, u) for u in range(1, U + 1)] for n in range(1, N + 1)])
    rx_ang = np.array([[rx_azimuth(geom, m, v) for v in range(1, V + 1)] for m in range(1, M + 1)])

    # axes of the intermediate arrays: [m, v, n, u]
    delta = tx_ang[None, None, :, :] - rx_ang[:, :, None, None]
    rr = np.asarray(geom.tx.radii).reshape(1, 1, N, 1)
    RR = np.asarray(geom.rx.radii).reshape(M, 1, 1, 1)
    if kind == "exact":
        s_sq = rr**2 + RR**2 - 2.0 * rr * RR * np.cos(delta)
        dist = np.sqrt(d * d + np.maximum(s_sq, 0.0))
        gains = geom.beta * lam * np.exp(-2j * np.pi * dist / lam) / (4.0 * np.pi * dist)
    else:
        base = np.sqrt(d * d + rr**2 + RR**2)
        dist = base - rr * RR * np.cos(delta) / base
        gains = geom.beta * lam * np.exp(-2j * np.pi * dist / lam) / (4.0 * np.pi * d)
    return ElementChannel(
        gains=gains.reshape(M * V, N * U),
        kind=kind,
        tx_rings=N,
        tx_elements=U,
        rx_rings=M,
        rx_elements=V,
    )


def mode_gain(geom: LinkGeometry, n: int, m: int, l: int) -> complex:
    """Closed-form ring-to-ring gain on mode ``l`` (independent of u and v).

    beta*lambda*sqrt(U) * e^{-j*2*pi*sqrt(d^2+r^2+R^2)/lambda} * j^l * J_l(chi) / (4*pi*d).
    """
    U = geom.tx.element_count
    if l not in mode_set(U):
        raise ValueError(f"mode {l} outside mode set for U={U}")
    r = geom.tx.radius(n)
    R = geom.rx.radius(m)
    d = geom.axial_distance
    lam = geom.wavelength
    phase_dist = math.sqrt(d * d + r * r + R * R)
    pre = geom.beta * lam * math.sqrt(U) * cmath.exp(-2j * math.pi * phase_dist / lam)
    return pre * (1j) ** l * bessel_j(l, chi_argument(geom, n, m)) / (4.0 * math.pi * d)


def per_element_mode_gain(geom: LinkGeometry, n: int, m: int, v: int, l: int) -> complex:
    """Exact finite-sum gain of mode ``l`` from tx ring ``n`` at rx element (m, v).

    The U-term sum over transmit elements with far-field element phases; no
    Bessel approximation.  Differs from
    ``mode_gain(...) * e^{j*rx_azimuth*l}`` by exactly the discretization
    error returned by :func:`approximation_error`.
    """
    U = geom.tx.element_count
    if l not in mode_set(U):
        raise ValueError(f"mode {l} outside mode set for U={U}")
    geom._check_rx(m, v)
    r = geom.tx.radius(n)
    R = geom.rx.radius(m)
    d = geom.axial_distance
    lam = geom.wavelength
    phase_dist = math.sqrt(d * d + r * r + R * R)
    chi = chi_argument(geom, n, m)
    pre = geom.beta * lam * cmath.exp(-2j * math.pi * phase_dist / lam) / (4.0 * math.pi * d * math.sqrt(U))
    rx_ang = rx_azimuth(geom, m, v)
    total = 0.0 + 0.0j
    for u in range(1, U + 1):
        ang = tx_azimuth(geom, n, u)
        total += cmath.exp(1j * ang * l) * cmath.exp(1j * chi * math.cos(ang - rx_ang))
    return pre * total


def approximation_error(geom: LinkGeometry, n: int, m: int, v: int, l: int) -> complex:
    """Gap between J_l(chi) and its U-point discrete counterpart.

    The discrete sum replaces the full-turn phase integral with U uniform
    azimuth samples; the gap shrinks as U grows and is the sole error term of
    the closed-form mode gain relative to the exact per-element sum.
    """
    geom._check_tx(n, 1)
    geom._check_rx(m, v)
    if abs(l) > BESSEL_MAX_ORDER:
        raise ValueError("mode order outside Bessel envelope")
    U = geom.tx.element_count
    chi = chi_argument(geom, n, m)
    rx_ang = rx_azimuth(geom, m, v)
    total = 0.0 + 0.0j
    for u in range(1, U + 1):
        theta = tx_azimuth(geom, n, u) - rx_ang
        total += cmath.exp(1j * theta * l) * cmath.exp(1j * chi * math.cos(theta))
    discrete = (1j) ** (-l) * total / U
    return bessel_j(l, chi) - discrete


@dataclass(frozen=True)
class ModeChannelSet:
    """Per-mode ring-to-ring gains and the V-scaled channel matrices."""

    geom: LinkGeometry
    modes: tuple[int, ...]
    gains: np.ndarray  # (L, M, N), entry [i, m-1, n-1] = ring gain on modes[i]

    def index(self, l: int) -> int:
        try:
            return self.modes.index(l)
        except ValueError:
            raise ValueError(f"mode {l} not in mode set {self.modes}") from None

    def gain(self, n: int, m: int, l: int) -> complex:
        return complex(self.gains[self.index(l), m - 1, n - 1])

    def matrix(self, l: int) -> np.ndarray:
        """Channel matrix H_l = V * [ring gains], shape (M, N)."""
        return self.geom.rx.element_count * self.gains[self.index(l)].copy()

    def matrices(self) -> dict[int, np.ndarray]:
        return {l: self.matrix(l) for l in self.modes}


def mode_channel_matrix(geom: LinkGeometry, l: int) -> np.ndarray:
    """H_l with entries V * (ring gain m<-n on mode l), shape (M, N)."""
    M = geom.rx.ring_count
    N = geom.tx.ring_count
    V = geom.rx.element_count
    out = np.empty((M, N), dtype=complex)
    for m in range(1, M + 1):
        for n in range(1, N + 1):
            out[m - 1, n - 1] = V * mode_gain(geom, n, m, l)
    return out


def mode_channel_set(geom: LinkGeometry) -> ModeChannelSet:
    """All per-mode ring-to-ring gains for the tx mode set."""
    modes = tuple(mode_set(geom.tx.element_count))
    M = geom.rx.ring_count
    N = geom.tx.ring_count
    gains = np.empty((len(modes), M, N), dtype=complex)
    for i, l in enumerate(modes):
        for m in range(1, M + 1):
            for n in range(1, N + 1):
                gains[i, m - 1, n - 1] = mode_gain(geom, n, m, l)
    return ModeChannelSet(geom=geom, modes=modes, gains=gains)
