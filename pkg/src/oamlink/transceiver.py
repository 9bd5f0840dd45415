"""Transmit synthesis, propagation, mode decomposition, and ZF detection.

The receive chain treats the per-mode channel matrices H_l as known.  Noise
is i.i.d. circular complex Gaussian per receive element with variance
``sigma^2``; after decomposition each mode stream sees variance ``V * sigma^2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ElementChannel, ModeChannelSet
from .geometry import LinkGeometry, mode_set, rx_azimuth, tx_azimuth
from .linalg import SingularChannelError, checked_pinv

# Counter-based generator so noise is a pure function of the seed.
RNG_ALGORITHM = "philox4x64"


class ModeAliasingError(ValueError):
    """Receive sampling cannot separate the requested modes (V < U)."""


@dataclass(frozen=True)
class ModeSymbols:
    """Symbols s[n-1, i] on mode modes[i] of transmit ring n."""

    values: np.ndarray  # (N, L) complex
    modes: tuple[int, ...]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 2 or v.shape[1] != len(self.modes):
            raise ValueError(
                f"symbol array shape {v.shape} does not match {len(self.modes)} modes"
            )
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, ring_count: int, modes) -> "ModeSymbols":
        modes = tuple(modes)
        return cls(np.zeros((ring_count, len(modes)), dtype=complex), modes)

    @classmethod
    def single_mode(cls, ring_count: int, modes, l: int, symbols) -> "ModeSymbols":
        out = cls.zeros(ring_count, modes)
        out.values[:, out.modes.index(l)] = symbols
        return out


@dataclass(frozen=True)
class NoiseModel:
    """Per-element complex Gaussian noise, reproducible from the seed."""

    per_element_variance: float
    seed: int = 0

    def __post_init__(self):
        if self.per_element_variance < 0:
            raise ValueError("noise variance must be >= 0")

    def mode_variance(self, rx_elements: int) -> float:
        """Variance of the decomposed per-mode noise: V * sigma^2."""
        return rx_elements * self.per_element_variance

    def sample(self, shape) -> np.ndarray:
        """Element noise draw; identical for identical (seed, shape)."""
        if self.per_element_variance == 0.0:
            return np.zeros(shape, dtype=complex)
        rng = np.random.Generator(np.random.Philox(self.seed))
        scale = np.sqrt(self.per_element_variance / 2.0)
        return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


@dataclass(frozen=True)
class DecomposedSignal:
    """Per-mode receive-ring samples y[m-1, i] for mode modes[i]."""

    values: np.ndarray  # (M, L)
    modes: tuple[int, ...]

    def mode_vector(self, l: int) -> np.ndarray:
        return self.values[:, self.modes.index(l)].copy()


def synthesize_tx(symbols: ModeSymbols, geom: LinkGeometry) -> np.ndarray:
    """Element signals x[n-1, u-1] = sum_l s_{n,l} e^{j*azimuth*l} / sqrt(U)."""
    N, U = geom.tx.ring_count, geom.tx.element_count
    if symbols.values.shape[0] != N:
        raise ValueError(f"expected {N} transmit rings, got {symbols.values.shape[0]}")
    ls = np.asarray(symbols.modes)
    ang = np.array(
        [[tx_azimuth(geom, n, u) for u in range(1, U + 1)] for n in range(1, N + 1)]
    )
    # phases[n, u, l]
    phases = np.exp(1j * ang[:, :, None] * ls[None, None, :])
    return np.einsum("nul,nl->nu", phases, symbols.values) / np.sqrt(U)


def propagate_elements(
    x: np.ndarray, channel: ElementChannel, noise: NoiseModel
) -> np.ndarray:
    """Receive y[m-1, v-1] through the element-level channel plus noise."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (channel.tx_rings, channel.tx_elements):
        raise ValueError(
            f"element signal shape {x.shape} does not match channel "
            f"({channel.tx_rings}, {channel.tx_elements})"
        )
    y = channel.gains @ x.reshape(-1)
    y = y.reshape(channel.rx_rings, channel.rx_elements)
    return y + noise.sample(y.shape)


def propagate_modes(
    symbols: ModeSymbols, modes: ModeChannelSet, noise: NoiseModel
) -> np.ndarray:
    """Receive y[m-1, v-1] through the closed-form mode channel plus noise.

    y_{m,v} = sum_l sum_n h_{mn,l} s_{n,l} e^{j*(2*pi*(v-1)/V + m*alpha)*l} + w_{m,v}.
    """
    geom = modes.geom
    if symbols.modes != modes.modes:
        raise ValueError("symbol mode list does not match the channel mode list")
    if symbols.values.shape[0] != geom.tx.ring_count:
        raise ValueError("symbol ring count does not match the geometry")
    M, V = geom.rx.ring_count, geom.rx.element_count
    ls = np.asarray(modes.modes)
    rx_ang = np.array(
        [[rx_azimuth(geom, m, v) for v in range(1, V + 1)] for m in range(1, M + 1)]
    )
    # stream[m, l] = sum_n h_{mn,l} s_{n,l}
    stream = np.einsum("lmn,nl->ml", modes.gains, symbols.values)
    phases = np.exp(1j * rx_ang[:, :, None] * ls[None, None, :])  # [m, v, l]
    y = np.einsum("mvl,ml->mv", phases, stream)
    return y + noise.sample(y.shape)


def decompose(y: np.ndarray, geom: LinkGeometry) -> DecomposedSignal:
    """Phase-conjugate sum over receive elements, one output per mode.

    ytilde_{m,l} = sum_v y_{m,v} e^{-j*(2*pi*(v-1)/V + m*alpha)*l}.  Requires
    V >= U: modes congruent modulo V would otherwise fold onto each other.
    """
    y = np.asarray(y, dtype=complex)
    M, V = geom.rx.ring_count, geom.rx.element_count
    U = geom.tx.element_count
    if y.shape != (M, V):
        raise ValueError(f"received array shape {y.shape} does not match ({M}, {V})")
    if V < U:
        raise ModeAliasingError(
            f"V={V} receive elements cannot separate {U} modes: "
            "modes congruent mod V collide"
        )
    ls = np.asarray(mode_set(U))
    rx_ang = np.array(
        [[rx_azimuth(geom, m, v) for v in range(1, V + 1)] for m in range(1, M + 1)]
    )
    phases = np.exp(-1j * rx_ang[:, :, None] * ls[None, None, :])  # [m, v, l]
    return DecomposedSignal(np.einsum("mvl,mv->ml", phases, y), tuple(int(l) for l in ls))


def zf_detect(y_l: np.ndarray, h_l: np.ndarray) -> np.ndarray:
    """Zero-forcing estimate (H^H H)^-1 H^H y for one mode."""
    y_l = np.asarray(y_l, dtype=complex)
    h_l = np.asarray(h_l, dtype=complex)
    if y_l.shape != (h_l.shape[0],):
        raise ValueError(f"received vector length {y_l.shape} does not match H {h_l.shape}")
    return checked_pinv(h_l) @ y_l


def zf_snr(power_l: np.ndarray, h_l: np.ndarray, sigma_l2: float) -> np.ndarray:
    """Post-ZF SNR per stream: P_n / (sigma_l^2 * ||row n of pinv(H)||^2)."""
    power_l = np.asarray(power_l, dtype=float)
    w = checked_pinv(h_l)
    if power_l.shape != (w.shape[0],):
        raise ValueError("power vector length does not match the stream count")
    row_norms = np.sum(np.abs(w) ** 2, axis=1)
    return power_l / (sigma_l2 * row_norms)
