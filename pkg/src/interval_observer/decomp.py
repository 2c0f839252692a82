"""Jacobian sign-stable (JSS) splits and their tight decomposition functions.

A map with Jacobian in ``[J_low, J_up]`` is written as ``H z + mu(z)`` where
every Jacobian entry of the remainder ``mu`` keeps one sign. Such a remainder
has a vertex-selecting decomposition function that is exact on boxes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .matops import as_matrix, negative_part, positive_part
from .model import SystemModel

SelectionRule = Union[str, np.ndarray]


def _upper_mask(rule: SelectionRule, shape) -> np.ndarray:
    if isinstance(rule, str):
        if rule == "lower":
            return np.zeros(shape, dtype=bool)
        if rule == "upper":
            return np.ones(shape, dtype=bool)
        raise ValueError(f"unknown selection rule {rule!r} (use 'lower', 'upper' or a mask)")
    mask = np.asarray(rule, dtype=bool)
    if mask.shape != tuple(shape):
        raise ValueError(f"selection mask has shape {mask.shape}, expected {tuple(shape)}")
    return mask


def jss_split(J_low, J_up, rule: SelectionRule = "lower"):
    """Pick ``H`` entrywise from the Jacobian endpoints.

    ``rule`` is ``"lower"``, ``"upper"`` or a boolean mask where ``True``
    selects the upper endpoint. Returns ``(H, Jmu_low, Jmu_up)`` with the
    remainder bounds ``J - H``, each entry of which is sign-stable.
    """
    J_low = as_matrix(J_low, "J_low")
    J_up = as_matrix(J_up, "J_up")
    if J_low.shape != J_up.shape:
        raise ValueError("Jacobian bounds must share a shape")
    if np.any(J_low > J_up):
        raise ValueError("Jacobian bounds are not ordered")
    H = np.where(_upper_mask(rule, J_low.shape), J_up, J_low)
    return H, J_low - H, J_up - H


def is_sign_stable(Jmu_low, Jmu_up) -> bool:
    return bool(np.all((np.asarray(Jmu_low) >= 0) | (np.asarray(Jmu_up) <= 0)))


def selectors(Jmu_low, Jmu_up) -> np.ndarray:
    """Binary vertex selectors, one row per output component.

    Entry ``(i, j)`` is 1 when ``mu_i`` is non-decreasing in ``z_j``. An
    entry with bounds ``[0, 0]`` counts as non-decreasing (``sgn(0) = +1``);
    an entry with bounds ``[-a, 0]``, ``a > 0``, is non-increasing and gets 0.
    """
    Jmu_low = np.asarray(Jmu_low, float)
    Jmu_up = np.asarray(Jmu_up, float)
    if not is_sign_stable(Jmu_low, Jmu_up):
        raise ValueError("remainder Jacobian bounds are not sign-stable")
    return (Jmu_low >= 0).astype(float)


def tight_decomposition(mu: Callable[[np.ndarray], np.ndarray], sel: np.ndarray,
                        z1, z2) -> np.ndarray:
    """Evaluate ``mu_d(z1, z2)``; row ``i`` is ``mu_i(D^i z1 + (I - D^i) z2)``.

    ``mu`` maps ``(..., n_z)`` to ``(..., p)`` and ``sel`` is the ``p x n_z``
    selector matrix. Leading axes of ``z1``/``z2`` are broadcast.
    """
    sel = np.asarray(sel, float)
    z1 = np.asarray(z1, float)[..., None, :]
    z2 = np.asarray(z2, float)[..., None, :]
    args = sel * z1 + (1.0 - sel) * z2
    vals = mu(args)
    if not np.all(np.isfinite(vals)):
        raise ValueError("remainder evaluator returned a non-finite value")
    return np.diagonal(vals, axis1=-2, axis2=-1)


def width_bounds(Jmu_low, Jmu_up) -> np.ndarray:
    """Non-negative ``F`` with ``mu_d(zu, zl) - mu_d(zl, zu) <= F (zu - zl)``."""
    Jmu_low = as_matrix(Jmu_low, "Jmu_low")
    Jmu_up = as_matrix(Jmu_up, "Jmu_up")
    if Jmu_low.shape != Jmu_up.shape:
        raise ValueError("dimension mismatch between remainder bounds")
    return positive_part(Jmu_up) + negative_part(Jmu_low)


@dataclass(frozen=True, eq=False)
class WidthBounds:
    Fphi_x: np.ndarray
    Fphi_w: np.ndarray
    Fpsi_x: np.ndarray
    Fpsi_v: np.ndarray


@dataclass(frozen=True, eq=False)
class JssDecomposition:
    """``f = A x + B w + phi(x, w)`` and ``h = C x + D v + psi(x, v)``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    Jphi_low: np.ndarray
    Jphi_up: np.ndarray
    Jpsi_low: np.ndarray
    Jpsi_up: np.ndarray
    sel_phi: np.ndarray
    sel_psi: np.ndarray
    phi: Callable[[np.ndarray], np.ndarray]
    psi: Callable[[np.ndarray], np.ndarray]

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def phi_d(self, x1, w1, x2, w2) -> np.ndarray:
        return tight_decomposition(self.phi, self.sel_phi, _stack(x1, w1), _stack(x2, w2))

    def psi_d(self, x1, v1, x2, v2) -> np.ndarray:
        return tight_decomposition(self.psi, self.sel_psi, _stack(x1, v1), _stack(x2, v2))


def _stack(x, s) -> np.ndarray:
    """Concatenate state and noise along the last axis, broadcasting the rest."""
    x = np.asarray(x, float)
    s = np.asarray(s, float)
    lead = np.broadcast_shapes(x.shape[:-1], s.shape[:-1])
    return np.concatenate([np.broadcast_to(x, lead + x.shape[-1:]),
                           np.broadcast_to(s, lead + s.shape[-1:])], axis=-1)


def decompose_model(model: SystemModel, rule: SelectionRule = "lower",
                    rule_h: SelectionRule | None = None):
    """Split ``f`` and ``h`` into affine parts plus JSS remainders.

    ``rule`` applies to ``f`` and ``rule_h`` (default: same string rule) to
    ``h``. Returns ``(JssDecomposition, WidthBounds)``.
    """
    n = model.n
    if rule_h is None:
        rule_h = rule if isinstance(rule, str) else "lower"
    Hf, phi_lo, phi_up = jss_split(model.Jf_low, model.Jf_up, rule)
    Hh, psi_lo, psi_up = jss_split(model.Jh_low, model.Jh_up, rule_h)
    A, B = Hf[:, :n], Hf[:, n:]
    C, D = Hh[:, :n], Hh[:, n:]
    f, h = model.f, model.h

    def phi(z):
        z = np.asarray(z, float)
        x, w = z[..., :n], z[..., n:]
        return f(x, w) - x @ A.T - w @ B.T

    def psi(z):
        z = np.asarray(z, float)
        x, v = z[..., :n], z[..., n:]
        return h(x, v) - x @ C.T - v @ D.T

    dec = JssDecomposition(
        A=A, B=B, C=C, D=D,
        Jphi_low=phi_lo, Jphi_up=phi_up, Jpsi_low=psi_lo, Jpsi_up=psi_up,
        sel_phi=selectors(phi_lo, phi_up), sel_psi=selectors(psi_lo, psi_up),
        phi=phi, psi=psi,
    )
    Fphi = width_bounds(phi_lo, phi_up)
    Fpsi = width_bounds(psi_lo, psi_up)
    wb = WidthBounds(Fphi_x=Fphi[:, :n], Fphi_w=Fphi[:, n:],
                     Fpsi_x=Fpsi[:, :n], Fpsi_v=Fpsi[:, n:])
    return dec, wb
