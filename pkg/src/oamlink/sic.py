"""Co-mode zero-forcing successive interference cancellation.

Within one mode, the co-mode streams radiated by the N transmit rings are
detected one at a time: null the undetected interferers with a pseudoinverse,
pick the stream whose nulling row has the smallest squared norm, slice it,
subtract its channel column, repeat on the shrunken system.  Detected columns
are removed outright (identical to zeroing for the rows that are read, and it
keeps the shrunken pseudoinverse well posed).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ModeChannelSet
from .linalg import checked_pinv

_QPSK = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2.0)
_16QAM = np.array(
    [a + 1j * b for a in (-3, -1, 1, 3) for b in (-3, -1, 1, 3)], dtype=complex
) / np.sqrt(10.0)


@dataclass(frozen=True)
class Constellation:
    """Unit-average-power symbol alphabet plus its nearest-point slicer."""

    kind: str = "qpsk"

    def __post_init__(self):
        if self.kind not in ("qpsk", "16qam", "passthrough"):
            raise ValueError(f"unknown constellation {self.kind!r}")

    @property
    def points(self) -> np.ndarray:
        if self.kind == "qpsk":
            return _QPSK.copy()
        if self.kind == "16qam":
            return _16QAM.copy()
        raise ValueError("passthrough constellation has no discrete points")

    def slice(self, values: np.ndarray):
        """Map each value to the nearest constellation point (identity for passthrough)."""
        if self.kind == "passthrough":
            return np.asarray(values, dtype=complex)
        values = np.asarray(values, dtype=complex)
        pts = self.points
        idx = np.argmin(np.abs(values[..., None] - pts), axis=-1)
        return pts[idx]

    def draw(self, rng: np.random.Generator, shape) -> np.ndarray:
        """Uniform random symbols; undefined for passthrough."""
        pts = self.points
        return pts[rng.integers(0, len(pts), size=shape)]


@dataclass(frozen=True)
class SicOrdering:
    """Detection order and all stage nulling norms for one mode.

    ``norm_table[i-1, ring-1]`` holds ||(w_i)_ring||^2, the squared norm of
    stage i's pseudoinverse row for ``ring``; defined only while ``ring`` is
    still undetected at stage i (NaN afterwards).
    """

    order: tuple[int, ...]
    norm_table: np.ndarray

    @property
    def stream_count(self) -> int:
        return len(self.order)

    def signal_norm(self, stage: int) -> float:
        """||(w_i)_{k_i}||^2 for stage i (1-based)."""
        return float(self.norm_table[stage - 1, self.order[stage - 1] - 1])

    def residual_norm(self, stage: int, ring: int) -> float:
        """||(w_i)_ring||^2 for a ring still undetected at stage i."""
        val = float(self.norm_table[stage - 1, ring - 1])
        if np.isnan(val):
            raise ValueError(f"ring {ring} is already detected before stage {stage}")
        return val


@dataclass(frozen=True)
class ChiMatrices:
    """Inverse squared nulling norms per mode, plus the orderings they came from."""

    modes: tuple[int, ...]
    matrices: dict[int, np.ndarray]
    orderings: dict[int, SicOrdering]

    def matrix(self, l: int) -> np.ndarray:
        return self.matrices[l]

    def ordering(self, l: int) -> SicOrdering:
        return self.orderings[l]


def sic_order(h_l: np.ndarray) -> SicOrdering:
    """Greedy min-row-norm detection order with all stage norms recorded.

    Ties are broken toward the smallest ring index.  Raises
    SingularChannelError if any stage's shrunken matrix is rank-deficient.
    """
    h = np.asarray(h_l, dtype=complex)
    if h.ndim != 2:
        raise ValueError("expected a 2-D channel matrix")
    n_streams = h.shape[1]
    remaining = list(range(n_streams))  # ascending, so argmin ties pick the smallest ring
    order = []
    norm_table = np.full((n_streams, n_streams), np.nan)
    for stage in range(n_streams):
        w = checked_pinv(h[:, remaining])
        norms = np.sum(np.abs(w) ** 2, axis=1)
        norm_table[stage, remaining] = norms
        pick = int(np.argmin(norms))
        order.append(remaining[pick] + 1)
        remaining.pop(pick)
    return SicOrdering(order=tuple(order), norm_table=norm_table)


def sic_detect(
    y_l: np.ndarray, h_l: np.ndarray, constellation: Constellation
) -> np.ndarray:
    """Nulling-slicing-cancellation loop; returns ring-indexed estimates.

    Accepts a single receive vector (M,) or a batch (M, K) sharing one
    channel; with the passthrough slicer and zero noise the output equals the
    transmitted symbols exactly.
    """
    h = np.asarray(h_l, dtype=complex)
    y = np.asarray(y_l, dtype=complex)
    single = y.ndim == 1
    if single:
        y = y[:, None]
    if y.shape[0] != h.shape[0]:
        raise ValueError(f"received shape {y.shape} does not match H {h.shape}")
    n_streams = h.shape[1]
    estimates = np.zeros((n_streams, y.shape[1]), dtype=complex)
    y = y.copy()
    remaining = list(range(n_streams))
    for _stage in range(n_streams):
        w = checked_pinv(h[:, remaining])
        norms = np.sum(np.abs(w) ** 2, axis=1)
        pick = int(np.argmin(norms))
        ring = remaining[pick]
        sliced = constellation.slice(w[pick] @ y)
        estimates[ring] = sliced
        y -= h[:, ring][:, None] * sliced[None, :]
        remaining.pop(pick)
    return estimates[:, 0] if single else estimates


def sic_sinr(powers, ordering: SicOrdering, sigma_l2: float) -> np.ndarray:
    """Per-stage SINR under the cancellation model.

    ``powers[i]`` is the transmit power of the stream detected at stage i+1.
    Stages before the last see residual interference from every not-yet-
    detected stream, weighted by the current stage's nulling row norms;
    interference already cancelled is ignored.
    """
    p = np.asarray(powers, dtype=float)
    n = ordering.stream_count
    if p.shape != (n,):
        raise ValueError(f"expected {n} stage powers, got shape {p.shape}")
    if np.any(p < 0):
        raise ValueError("powers must be >= 0")
    out = np.empty(n)
    for i in range(n):
        signal_norm = ordering.signal_norm(i + 1)
        if i == n - 1:
            out[i] = p[i] / (sigma_l2 * signal_norm)
        else:
            interference = sum(
                p[j] / ordering.residual_norm(i + 1, ordering.order[j])
                for j in range(i + 1, n)
            )
            out[i] = (p[i] / signal_norm) / (sigma_l2 + interference)
    return out


def chi_of(channels) -> ChiMatrices:
    """Assemble the per-mode inverse-squared-norm matrices from SIC orderings.

    ``channels`` is a ModeChannelSet or a mapping mode -> channel matrix.
    Entry (i, j) is 1/||(w_i)_{k_j}||^2; for streams already cancelled before
    stage i (j < i) the row no longer exists, and the entry is filled with the
    stage's own signal value 1/||(w_i)_{k_i}||^2 to keep the matrix finite.
    No downstream formula reads those filled entries.
    """
    if isinstance(channels, ModeChannelSet):
        mats = channels.matrices()
    else:
        mats = {l: np.asarray(h, dtype=complex) for l, h in dict(channels).items()}
    modes = tuple(mats.keys())
    matrices: dict[int, np.ndarray] = {}
    orderings: dict[int, SicOrdering] = {}
    for l, h in mats.items():
        ordering = sic_order(h)
        n = ordering.stream_count
        chi = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                if j >= i:
                    chi[i, j] = 1.0 / ordering.residual_norm(i + 1, ordering.order[j])
                else:
                    chi[i, j] = 1.0 / ordering.signal_norm(i + 1)
        matrices[l] = chi
        orderings[l] = ordering
    return ChiMatrices(modes=modes, matrices=matrices, orderings=orderings)
