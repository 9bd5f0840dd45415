"""Concentric uniform-circular-array layouts and inter-element distances.

Conventions: ring indices ``n`` (transmit) and ``m`` (receive) and element
indices ``u``, ``v`` are 1-based.  Angles are plain radians, never wrapped.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field


class FarFieldWarning(UserWarning):
    """Link distance is short relative to the array radii."""


@dataclass(frozen=True)
class UcaRing:
    """One circle of equally spaced antenna elements."""

    radius: float
    element_count: int
    ring_index: int  # 1-based position within its concentric stack

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"ring radius must be positive, got {self.radius}")
        if self.element_count < 1:
            raise ValueError("element_count must be >= 1")
        if self.ring_index < 1:
            raise ValueError("ring_index is 1-based and must be >= 1")


@dataclass(frozen=True)
class ConcentricArray:
    """A stack of concentric rings sharing one element count.

    The whole array is rotated ring-by-ring: ring ``n`` is offset by
    ``n * rotation_step`` where ``rotation_step = 2*pi / (ring_count * element_count)``.
    """

    rings: tuple[UcaRing, ...]

    def __post_init__(self):
        if not self.rings:
            raise ValueError("array needs at least one ring")
        counts = {r.element_count for r in self.rings}
        if len(counts) != 1:
            raise ValueError("all rings must share one element count")
        radii = [r.radius for r in self.rings]
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise ValueError("ring radii must be strictly increasing")
        if [r.ring_index for r in self.rings] != list(range(1, len(self.rings) + 1)):
            raise ValueError("ring_index values must be 1..ring_count in order")

    @classmethod
    def from_radii(cls, radii, element_count: int) -> "ConcentricArray":
        return cls(
            tuple(
                UcaRing(radius=float(r), element_count=element_count, ring_index=i)
                for i, r in enumerate(radii, start=1)
            )
        )

    @property
    def ring_count(self) -> int:
        return len(self.rings)

    @property
    def element_count(self) -> int:
        return self.rings[0].element_count

    @property
    def radii(self) -> tuple[float, ...]:
        return tuple(r.radius for r in self.rings)

    @property
    def rotation_step(self) -> float:
        return 2.0 * math.pi / (self.ring_count * self.element_count)

    def radius(self, ring_index: int) -> float:
        if not 1 <= ring_index <= self.ring_count:
            raise IndexError(f"ring index {ring_index} out of range 1..{self.ring_count}")
        return self.rings[ring_index - 1].radius


@dataclass(frozen=True)
class LinkGeometry:
    """Aligned transmit/receive concentric arrays on a common axis.

    ``beta`` collects all element-level constants (antenna attenuation and
    phase rotation on both sides); it defaults to 1 and is user-settable.
    """

    tx: ConcentricArray
    rx: ConcentricArray
    axial_distance: float
    wavelength: float
    beta: complex = 1.0 + 0.0j
    far_field_ratio: float = field(default=10.0, compare=False)

    def __post_init__(self):
        if self.axial_distance <= 0:
            raise ValueError("axial_distance must be positive")
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")
        rmax = max(self.tx.radii[-1], self.rx.radii[-1])
        if self.axial_distance < self.far_field_ratio * rmax:
            warnings.warn(
                f"axial distance {self.axial_distance:g} m is below "
                f"{self.far_field_ratio:g} x max radius {rmax:g} m; "
                "far-field approximations may be inaccurate",
                FarFieldWarning,
                stacklevel=2,
            )

    def _check_tx(self, n: int, u: int):
        if not 1 <= n <= self.tx.ring_count:
            raise IndexError(f"tx ring index {n} out of range 1..{self.tx.ring_count}")
        if not 1 <= u <= self.tx.element_count:
            raise IndexError(f"tx element index {u} out of range 1..{self.tx.element_count}")

    def _check_rx(self, m: int, v: int):
        if not 1 <= m <= self.rx.ring_count:
            raise IndexError(f"rx ring index {m} out of range 1..{self.rx.ring_count}")
        if not 1 <= v <= self.rx.element_count:
            raise IndexError(f"rx element index {v} out of range 1..{self.rx.element_count}")


def tx_azimuth(geom: LinkGeometry, n: int, u: int) -> float:
    """Azimuth of transmit element ``u`` on ring ``n``: 2*pi*(u-1)/U + n*delta."""
    geom._check_tx(n, u)
    U = geom.tx.element_count
    return 2.0 * math.pi * (u - 1) / U + n * geom.tx.rotation_step


def rx_azimuth(geom: LinkGeometry, m: int, v: int) -> float:
    """Azimuth of receive element ``v`` on ring ``m``: 2*pi*(v-1)/V + m*alpha."""
    geom._check_rx(m, v)
    V = geom.rx.element_count
    return 2.0 * math.pi * (v - 1) / V + m * geom.rx.rotation_step


def projection_distance(geom: LinkGeometry, n: int, u: int, m: int, v: int) -> float:
    """In-plane distance between a tx element's projection and an rx element."""
    geom._check_tx(n, u)
    geom._check_rx(m, v)
    r = geom.tx.radius(n)
    R = geom.rx.radius(m)
    delta = tx_azimuth(geom, n, u) - rx_azimuth(geom, m, v)
    s_sq = r * r + R * R - 2.0 * r * R * math.cos(delta)
    return math.sqrt(max(s_sq, 0.0))


def element_distance(geom: LinkGeometry, n: int, u: int, m: int, v: int) -> float:
    """Exact element-to-element distance sqrt(d^2 + s^2)."""
    s = projection_distance(geom, n, u, m, v)
    d = geom.axial_distance
    return math.sqrt(d * d + s * s)


def element_distance_approx(geom: LinkGeometry, n: int, u: int, m: int, v: int) -> float:
    """First-order far-field expansion of the element-to-element distance.

    sqrt(d^2 + r^2 + R^2) - r*R*cos(angle difference)/sqrt(d^2 + r^2 + R^2);
    converges to :func:`element_distance` as d grows at fixed radii.
    """
    geom._check_tx(n, u)
    geom._check_rx(m, v)
    r = geom.tx.radius(n)
    R = geom.rx.radius(m)
    d = geom.axial_distance
    base = math.sqrt(d * d + r * r + R * R)
    delta = tx_azimuth(geom, n, u) - rx_azimuth(geom, m, v)
    return base - r * R * math.cos(delta) / base


def mode_set(element_count: int) -> list[int]:
    """Usable integer OAM mode numbers for a ring of ``element_count`` elements.

    Exactly ``element_count`` consecutive integers, from ceil((1-U)/2) up to
    floor(U/2); always contains mode 0.
    """
    U = element_count
    if U < 1:
        raise ValueError("element_count must be >= 1")
    return list(range(-((U - 1) // 2), U // 2 + 1))
