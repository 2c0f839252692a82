"""Sign-based matrix splits and structural predicates.

All functions take array-likes and return new ``float`` arrays; inputs are
never modified. ``sgn(0)`` is taken as ``+1`` wherever a sign convention is
needed.
"""

from __future__ import annotations

import numpy as np


def as_matrix(M, name: str = "M") -> np.ndarray:
    """Return ``M`` as a finite 2-D float array or raise ``ValueError``."""
    M = np.array(M, dtype=float)
    if M.ndim == 1:
        M = M[None, :]
    if M.ndim != 2 or M.size == 0:
        raise ValueError(f"{name} must be a non-empty 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def _square(M, name: str = "M") -> np.ndarray:
    M = as_matrix(M, name)
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got shape {M.shape}")
    return M


def positive_part(M) -> np.ndarray:
    return np.maximum(as_matrix(M), 0.0)


def negative_part(M) -> np.ndarray:
    M = as_matrix(M)
    return np.maximum(M, 0.0) - M


def abs_matrix(M) -> np.ndarray:
    return positive_part(M) + negative_part(M)


def sgn(M) -> np.ndarray:
    """Entrywise sign with ``sgn(0) = +1``."""
    return np.where(as_matrix(M) >= 0.0, 1.0, -1.0)


def diag_split(M) -> tuple[np.ndarray, np.ndarray]:
    """Split a square matrix into its diagonal part and the off-diagonal rest."""
    M = _square(M)
    Md = np.diag(np.diag(M))
    return Md, M - Md


def metzler_part(M) -> np.ndarray:
    """Keep the diagonal, replace off-diagonal entries by their magnitudes."""
    Md, Mnd = diag_split(M)
    return Md + np.abs(Mnd)


def is_metzler(M, tol: float = 0.0) -> bool:
    M = _square(M)
    if tol < 0:
        raise ValueError("tol must be non-negative")
    off = ~np.eye(M.shape[0], dtype=bool)
    return bool(np.all(M[off] >= -tol))


def is_nonnegative(M, tol: float = 0.0) -> bool:
    return bool(np.all(as_matrix(M) >= -tol))


def interval_affine_bounds(A, xlow, xup) -> tuple[np.ndarray, np.ndarray]:
    """Bound ``A @ x`` over the box ``xlow <= x <= xup``.

    Returns ``(A+ xlow - A- xup, A+ xup - A- xlow)``, which is exact for each
    output row (attained at a vertex of the box).
    """
    A = as_matrix(A, "A")
    xlow = np.asarray(xlow, dtype=float)
    xup = np.asarray(xup, dtype=float)
    if xlow.shape != xup.shape or xlow.shape[-1] != A.shape[1]:
        raise ValueError(
            f"dimension mismatch: A is {A.shape}, bounds are {xlow.shape} and {xup.shape}"
        )
    if np.any(xlow > xup):
        raise ValueError("bounds are not ordered (xlow > xup somewhere)")
    Ap, Am = positive_part(A), negative_part(A)
    low = xlow @ Ap.T - xup @ Am.T
    up = xup @ Ap.T - xlow @ Am.T
    return low, up


def interval_matmul_bounds(Mlow, Mup, left=None, right=None) -> tuple[np.ndarray, np.ndarray]:
    """Entrywise bounds of ``left @ M @ right`` for ``M`` in ``[Mlow, Mup]``.

    Sound but generally not tight: uses the centre/radius form
    ``left Mc right +- |left| Mr |right|``.
    """
    Mlow = as_matrix(Mlow, "Mlow")
    Mup = as_matrix(Mup, "Mup")
    if Mlow.shape != Mup.shape or np.any(Mlow > Mup):
        raise ValueError("interval matrix bounds must share a shape and be ordered")
    left = np.eye(Mlow.shape[0]) if left is None else as_matrix(left, "left")
    right = np.eye(Mlow.shape[1]) if right is None else as_matrix(right, "right")
    Mc = 0.5 * (Mlow + Mup)
    Mr = 0.5 * (Mup - Mlow)
    centre = left @ Mc @ right
    radius = np.abs(left) @ Mr @ np.abs(right)
    return centre - radius, centre + radius
