"""Capacity and optimal power allocation for both interference models.

Interference-free model: each mode contributes rank(H_l) parallel
eigenchannels with gains gamma_{i,l} (squared singular values of H_l); the
budget-constrained capacity maximum is classic water-filling, solved here by
a sorted-breakpoint scan over b = sigma_l^2 / gamma_{i,l}.

Interference-contained model: detection is successive cancellation, and the
optimal stage powers have a closed form in the dual variable nu; the budget
equation in nu is strictly decreasing and is solved by bisection.

Logarithm convention: rates use log2; the "log 2" appearing in every KKT
denominator is the natural log of 2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ModeChannelSet
from .linalg import singular_values
from .sic import ChiMatrices, sic_sinr

LN2 = math.log(2.0)


@dataclass(frozen=True)
class GainMatrix:
    """Per-mode squared singular values, descending, one column per mode."""

    modes: tuple[int, ...]
    columns: dict[int, np.ndarray]

    def column(self, l: int) -> np.ndarray:
        return self.columns[l]

    def channel_count(self) -> int:
        return sum(len(c) for c in self.columns.values())


@dataclass(frozen=True)
class PowerPlan:
    """Power P[i] per stream/stage per mode under one total budget (watts)."""

    powers: dict[int, np.ndarray]
    budget: float
    bandwidth: float

    @property
    def total(self) -> float:
        return float(sum(np.sum(p) for p in self.powers.values()))

    def column(self, l: int) -> np.ndarray:
        return self.powers[l]


@dataclass(frozen=True)
class SolverState:
    """Water-filling scan internals (breakpoints ascending)."""

    multiplier: float
    breakpoints: np.ndarray
    running_sum: float
    active_count: int


@dataclass(frozen=True)
class CapacityReport:
    """Per-stream rate terms (bit/s) and their total for one model."""

    terms: dict[int, np.ndarray]
    total: float
    model: str

    def mode_totals(self) -> dict[int, float]:
        return {l: float(np.sum(t)) for l, t in self.terms.items()}


def _sigma_map(modes, sigma_l2) -> dict[int, float]:
    if np.isscalar(sigma_l2):
        return {l: float(sigma_l2) for l in modes}
    out = {l: float(sigma_l2[l]) for l in modes}
    if any(v <= 0 for v in out.values()):
        raise ValueError("per-mode noise variances must be positive")
    return out


def svd_gains(channels) -> GainMatrix:
    """Squared singular values of each per-mode channel matrix, descending.

    Streams below the numerical rank are dropped; an all-zero matrix yields
    an empty column for that mode.
    """
    if isinstance(channels, ModeChannelSet):
        mats = channels.matrices()
    else:
        mats = {l: np.asarray(h, dtype=complex) for l, h in dict(channels).items()}
    columns: dict[int, np.ndarray] = {}
    for l, h in mats.items():
        s = singular_values(h)
        if s.size == 0 or s[0] == 0.0:
            columns[l] = np.empty(0)
            continue
        cutoff = max(h.shape) * np.finfo(float).eps * s[0]
        columns[l] = (s[s > cutoff]) ** 2
    return GainMatrix(modes=tuple(mats.keys()), columns=columns)


def _scan_breakpoints(breakpoints: np.ndarray, budget: float, bandwidth: float) -> SolverState:
    """Sorted-breakpoint water-level scan.

    Walks the ascending breakpoints b_z, accumulating the power absorbed when
    the water level reaches each next breakpoint (z channels are submerged
    between b_z and b_{z+1}, hence the z-weighted increments).  Stops at the
    first level where the accumulated power exceeds the budget.
    """
    b = np.sort(breakpoints)
    q = len(b)
    running = 0.0
    for z in range(1, q):
        step = z * (b[z] - b[z - 1])
        if running + step > budget:
            mu = bandwidth * z / (LN2 * (z * b[z] - (running + step) + budget))
            return SolverState(
                multiplier=mu, breakpoints=b, running_sum=running + step, active_count=z
            )
        running += step
    mu = bandwidth * q / (LN2 * (q * b[q - 1] - running + budget))
    return SolverState(multiplier=mu, breakpoints=b, running_sum=running, active_count=q)


def waterfill_cif(
    gains: GainMatrix, sigma_l2, budget: float, bandwidth: float
) -> tuple[PowerPlan, float]:
    """Optimal interference-free power allocation (water-filling).

    Solves

        max  sum_{l,i} B*log2(1 + P_{i,l}*gamma_{i,l}/sigma_l^2)
        s.t. sum P_{i,l} <= budget,  P_{i,l} >= 0

    via the breakpoint scan; the active channels share the water level
    W = B/(mu*ln 2) and P_{i,l} = max(0, W - sigma_l^2/gamma_{i,l}).

    Returns the plan and the optimal multiplier mu.  The allocated total
    meets the budget exactly up to float rounding.
    """
    if budget <= 0:
        raise ValueError("power budget must be positive")
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    sigma = _sigma_map(gains.modes, sigma_l2)
    labels: list[tuple[int, int]] = []
    b_list: list[float] = []
    for l in gains.modes:
        col = gains.columns[l]
        for i, g in enumerate(col):
            labels.append((l, i))
            b_list.append(sigma[l] / float(g))
    if not b_list:
        raise ValueError("no channels with positive gain to allocate over")
    b = np.asarray(b_list)
    state = _scan_breakpoints(b, budget, bandwidth)
    k = state.active_count
    # Recompute the water level from the active set for exact budget closure.
    water = (budget + float(np.sum(state.breakpoints[:k]))) / k
    mu = bandwidth / (water * LN2)
    powers = {l: np.zeros(len(gains.columns[l])) for l in gains.modes}
    for (l, i), bi in zip(labels, b_list):
        powers[l][i] = max(0.0, water - bi)
    return PowerPlan(powers=powers, budget=budget, bandwidth=bandwidth), mu


def capacity_cif(plan: PowerPlan, gains: GainMatrix, sigma_l2) -> CapacityReport:
    """Sum-rate sum B*log2(1 + P*gamma/sigma^2) per stream and total."""
    sigma = _sigma_map(gains.modes, sigma_l2)
    terms: dict[int, np.ndarray] = {}
    for l in gains.modes:
        g = gains.columns[l]
        p = np.asarray(plan.powers[l], dtype=float)
        if p.shape != g.shape:
            raise ValueError(f"plan column for mode {l} does not match the gain column")
        terms[l] = plan.bandwidth * np.log2(1.0 + p * g / sigma[l])
    total = float(sum(np.sum(t) for t in terms.values()))
    return CapacityReport(terms=terms, total=total, model="CIF")


def kkt_residual_cif(plan: PowerPlan, gains: GainMatrix, sigma_l2, mu: float) -> float:
    """Largest stationarity/slackness violation of a plan against mu.

    Active streams must satisfy B*gamma/((sigma^2 + P*gamma)*ln 2) = mu;
    inactive streams must have marginal value B*gamma/(sigma^2*ln 2) <= mu.
    """
    sigma = _sigma_map(gains.modes, sigma_l2)
    B = plan.bandwidth
    worst = 0.0
    for l in gains.modes:
        g = gains.columns[l]
        p = np.asarray(plan.powers[l], dtype=float)
        for gi, pi in zip(g, p):
            marginal = B * gi / ((sigma[l] + pi * gi) * LN2)
            if pi > 0:
                worst = max(worst, abs(marginal - mu))
            else:
                worst = max(worst, max(0.0, marginal - mu))
    return worst


def _cic_coefficients(chi: ChiMatrices, sigma: dict[int, float]) -> dict[int, np.ndarray]:
    """Per mode: c_i = sigma_l^2 * ||(w_{i-1})_{k_i}||^2 for stages i >= 2."""
    out = {}
    for l in chi.modes:
        ordering = chi.orderings[l]
        n = ordering.stream_count
        c = np.empty(n)
        c[0] = np.nan  # stage 1 has no predecessor
        for i in range(2, n + 1):
            c[i - 1] = sigma[l] * ordering.residual_norm(i - 1, ordering.order[i - 1])
        out[l] = c
    return out


def _cic_powers(nu: float, coeffs: dict[int, np.ndarray], bandwidth: float) -> dict[int, np.ndarray]:
    w = bandwidth / (nu * LN2)
    out = {}
    for l, c in coeffs.items():
        p = np.empty_like(c)
        p[0] = w
        if len(c) > 1:
            ci = c[1:]
            p[1:] = 0.5 * (np.sqrt(ci * ci + 4.0 * w * ci) - ci)
        out[l] = p
    return out


def allocate_cic(
    chi: ChiMatrices, sigma_l2, budget: float, bandwidth: float
) -> tuple[PowerPlan, float]:
    """Optimal interference-contained stage powers via bisection on nu.

    Stage 1 of every mode gets B/(nu*ln 2); later stages solve the quadratic
    stationarity condition against the previous stage's nulling norm, giving

        P_i = ( sqrt(c_i^2 + 4*B*c_i/(nu*ln 2)) - c_i ) / 2,
        c_i = sigma_l^2 * ||(w_{i-1})_{k_i}||^2.

    Every stage power is strictly decreasing in nu, so the budget equation
    sum P(nu) = budget has a unique root; bisection runs until the budget is
    met to 1e-13 relative or the float interval is exhausted.
    """
    if budget <= 0:
        raise ValueError("power budget must be positive")
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    sigma = _sigma_map(chi.modes, sigma_l2)
    coeffs = _cic_coefficients(chi, sigma)
    n_streams = sum(len(c) for c in coeffs.values())

    def total(nu: float) -> float:
        return float(sum(np.sum(p) for p in _cic_powers(nu, coeffs, bandwidth).values()))

    lo = bandwidth / (budget * LN2)  # stage-1 power equal to the whole budget
    hi = lo * n_streams
    while total(lo) < budget:  # safety; lo already yields >= budget in theory
        lo *= 0.5
    while total(hi) > budget:
        hi *= 2.0
    nu = 0.5 * (lo + hi)
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        t = total(mid)
        if abs(t - budget) <= 1e-13 * budget:
            nu = mid
            break
        if t > budget:
            lo = mid
        else:
            hi = mid
        nu = mid
    powers = _cic_powers(nu, coeffs, bandwidth)
    return PowerPlan(powers=powers, budget=budget, bandwidth=bandwidth), nu


def capacity_cic(plan: PowerPlan, chi: ChiMatrices, sigma_l2) -> CapacityReport:
    """Exact cancellation-model sum rate: sum B*log2(1 + SINR_{i,l})."""
    sigma = _sigma_map(chi.modes, sigma_l2)
    terms = {}
    for l in chi.modes:
        sinr = sic_sinr(plan.powers[l], chi.orderings[l], sigma[l])
        terms[l] = plan.bandwidth * np.log2(1.0 + sinr)
    total = float(sum(np.sum(t) for t in terms.values()))
    return CapacityReport(terms=terms, total=total, model="CIC")


def capacity_cic_approx(plan: PowerPlan, chi: ChiMatrices, sigma_l2) -> CapacityReport:
    """High-SINR surrogate sum B*log2(SINR_{i,l}); always below the exact rate.

    Equals the exact rate minus sum B*log2(1 + 1/SINR_{i,l}), so the gap
    vanishes as every stage SINR grows.  Terms may be negative at low SINR.
    """
    sigma = _sigma_map(chi.modes, sigma_l2)
    terms = {}
    for l in chi.modes:
        sinr = sic_sinr(plan.powers[l], chi.orderings[l], sigma[l])
        if np.any(sinr <= 0):
            raise ValueError("approximate rate needs strictly positive SINR")
        terms[l] = plan.bandwidth * np.log2(sinr)
    total = float(sum(np.sum(t) for t in terms.values()))
    return CapacityReport(terms=terms, total=total, model="CIC-approx")
