"""Shared linear-algebra helpers with an explicit conditioning guard."""
from __future__ import annotations

import numpy as np

# Matrices with a larger 2-norm condition number are rejected as rank-deficient.
MAX_CONDITION = 1e12


class SingularChannelError(ValueError):
    """Channel matrix is rank-deficient (condition number above threshold)."""


def checked_pinv(matrix: np.ndarray) -> np.ndarray:
    """Left pseudoinverse (H^H H)^-1 H^H, rejecting ill-conditioned inputs."""
    h = np.asarray(matrix, dtype=complex)
    if h.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    m, n = h.shape
    if m < n:
        raise SingularChannelError(
            f"matrix is {m}x{n}: fewer rows than columns cannot be full column rank"
        )
    u, s, vh = np.linalg.svd(h, full_matrices=False)
    if s[-1] == 0.0 or s[0] / s[-1] > MAX_CONDITION:
        raise SingularChannelError(
            f"condition number {np.inf if s[-1] == 0 else s[0] / s[-1]:.3e} "
            f"exceeds {MAX_CONDITION:.0e}"
        )
    return (vh.conj().T / s) @ u.conj().T


def singular_values(matrix: np.ndarray) -> np.ndarray:
    """Singular values in descending order."""
    return np.linalg.svd(np.asarray(matrix, dtype=complex), compute_uv=False)
