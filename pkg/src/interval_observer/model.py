"""Bounded-error nonlinear plants with a priori Jacobian bounds.

A plant is described by a state map ``f(x, w)`` (vector field for CT, update
map for DT), an observation map ``h(x, v)``, entrywise Jacobian bounds for
both, and boxes for the initial state and the two noise signals.

Evaluators are vectorised: they accept arrays whose last axis holds the
state / noise components and broadcast over any leading axes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .matops import as_matrix, interval_affine_bounds, interval_matmul_bounds

Evaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]


class TimeType(str, Enum):
    CT = "CT"
    DT = "DT"


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box ``[low, up]``."""

    low: np.ndarray
    up: np.ndarray

    def __post_init__(self):
        low = np.atleast_1d(np.asarray(self.low, dtype=float)).copy()
        up = np.atleast_1d(np.asarray(self.up, dtype=float)).copy()
        if low.shape != up.shape or low.ndim != 1:
            raise ValueError(f"box bounds must be 1-D of equal length, got {low.shape} and {up.shape}")
        if not (np.all(np.isfinite(low)) and np.all(np.isfinite(up))):
            raise ValueError("box bounds must be finite")
        if np.any(low > up):
            raise ValueError(f"box is not ordered: low={low}, up={up}")
        low.flags.writeable = False
        up.flags.writeable = False
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "up", up)

    @classmethod
    def point(cls, x) -> "Box":
        return cls(x, x)

    @property
    def dim(self) -> int:
        return self.low.shape[0]

    @property
    def width(self) -> np.ndarray:
        return self.up - self.low

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.low + self.up)

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.low - tol) and np.all(x <= self.up + tol))

    def contains_box(self, low, up, tol: float = 0.0) -> bool:
        return self.contains(low, tol) and self.contains(up, tol)

    def inflate(self, fraction: float) -> "Box":
        """Grow every side by ``fraction / 2`` of its width."""
        pad = 0.5 * fraction * self.width
        return Box(self.low - pad, self.up + pad)

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        shape = (self.dim,) if size is None else tuple(np.atleast_1d(size)) + (self.dim,)
        return rng.uniform(self.low, self.up, size=shape)

    def vertex(self, bits) -> np.ndarray:
        """Corner selected by a boolean mask (True picks ``up``)."""
        return np.where(np.asarray(bits, dtype=bool), self.up, self.low)

    def to_dict(self) -> dict:
        return {"low": self.low.tolist(), "up": self.up.tolist()}

    def __repr__(self) -> str:
        return f"Box(low={self.low.tolist()}, up={self.up.tolist()})"


@dataclass(frozen=True, eq=False)
class CoordinateTransform:
    """Linear change of coordinates ``z = T x``."""

    T: np.ndarray
    T_inv: np.ndarray = field(default=None)

    def __post_init__(self):
        T = as_matrix(self.T, "T")
        if T.shape[0] != T.shape[1]:
            raise ValueError("T must be square")
        cond = np.linalg.cond(T)
        if not np.isfinite(cond) or cond > 1e12:
            raise ValueError(f"T is singular or numerically singular (cond={cond:.3g})")
        T_inv = np.linalg.inv(T) if self.T_inv is None else as_matrix(self.T_inv, "T_inv")
        if np.max(np.abs(T @ T_inv - np.eye(T.shape[0]))) > 1e-9:
            raise ValueError("T_inv is not the inverse of T")
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "T_inv", T_inv)

    @property
    def n(self) -> int:
        return self.T.shape[0]

    def inverse(self) -> "CoordinateTransform":
        return CoordinateTransform(self.T_inv, self.T)

    def compose(self, inner: Optional["CoordinateTransform"]) -> "CoordinateTransform":
        """Transform applying ``inner`` first, then ``self``."""
        if inner is None:
            return self
        return CoordinateTransform(self.T @ inner.T, inner.T_inv @ self.T_inv)


@dataclass(frozen=True, eq=False)
class SystemModel:
    """A bounded-error plant ``x+ = f(x, w) + K y + u(t)``, ``y = h(x, v)``.

    ``K`` (``injection``) and ``u`` (``known_input``) are optional known-signal
    terms; they are absent for plain models. Jacobian bounds are with respect
    to the stacked arguments ``[x, w]`` and ``[x, v]``.

    ``domain`` is the set on which the Jacobian bounds hold, expressed in the
    *base* coordinates, i.e. before any ``transform`` was applied.
    ``X0_base`` likewise lives in base coordinates and is what true initial
    states are drawn from; ``X0`` is the (possibly over-approximated) box in
    model coordinates used to initialise framers.
    """

    time_type: TimeType
    f: Evaluator
    h: Evaluator
    Jf_low: np.ndarray
    Jf_up: np.ndarray
    Jh_low: np.ndarray
    Jh_up: np.ndarray
    W: Box
    V: Box
    X0: Box
    domain: Box
    name: str = "model"
    transform: Optional[CoordinateTransform] = None
    X0_base: Optional[Box] = None
    injection: Optional[np.ndarray] = None
    known_input: Optional[Callable[[float], np.ndarray]] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "time_type", TimeType(self.time_type))
        for name in ("Jf_low", "Jf_up", "Jh_low", "Jh_up"):
            object.__setattr__(self, name, as_matrix(getattr(self, name), name))
        n, nw, nv = self.X0.dim, self.W.dim, self.V.dim
        l = self.Jh_low.shape[0]
        if self.Jf_low.shape != (n, n + nw) or self.Jf_up.shape != (n, n + nw):
            raise ValueError(f"Jf bounds must be {n}x{n + nw}, got {self.Jf_low.shape}/{self.Jf_up.shape}")
        if self.Jh_low.shape != (l, n + nv) or self.Jh_up.shape != (l, n + nv):
            raise ValueError(f"Jh bounds must be {l}x{n + nv}, got {self.Jh_low.shape}/{self.Jh_up.shape}")
        if np.any(self.Jf_low > self.Jf_up) or np.any(self.Jh_low > self.Jh_up):
            raise ValueError("Jacobian bounds are not ordered")
        if self.domain.dim != n:
            raise ValueError("domain dimension must equal the state dimension")
        if self.transform is not None and self.transform.n != n:
            raise ValueError("transform dimension must equal the state dimension")
        if self.X0_base is None:
            object.__setattr__(self, "X0_base", self.X0)
        if self.injection is not None:
            K = as_matrix(self.injection, "injection")
            if K.shape != (n, l):
                raise ValueError(f"injection must be {n}x{l}")
            object.__setattr__(self, "injection", K)

    @property
    def n(self) -> int:
        return self.X0.dim

    @property
    def n_w(self) -> int:
        return self.W.dim

    @property
    def n_v(self) -> int:
        return self.V.dim

    @property
    def l(self) -> int:
        return self.Jh_low.shape[0]

    @property
    def is_ct(self) -> bool:
        return self.time_type is TimeType.CT

    def measure(self, x, v) -> np.ndarray:
        return self.h(np.asarray(x, float), np.asarray(v, float))

    def known_terms(self, t: float, y) -> np.ndarray:
        """Known-signal contribution ``K y + u(t)`` to the state equation."""
        y = np.asarray(y, dtype=float)
        out = np.zeros(y.shape[:-1] + (self.n,))
        if self.injection is not None:
            out = out + y @ self.injection.T
        if self.known_input is not None:
            out = out + np.asarray(self.known_input(t), dtype=float)
        return out

    def dynamics(self, x, w, v, t: float = 0.0) -> np.ndarray:
        """Right-hand side of the true plant (vector field or next state)."""
        x = np.asarray(x, float)
        out = self.f(x, np.asarray(w, float))
        if self.injection is not None or self.known_input is not None:
            out = out + self.known_terms(t, self.h(x, np.asarray(v, float)))
        return out

    def to_base(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        return x if self.transform is None else x @ self.transform.T_inv.T

    def from_base(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        return x if self.transform is None else x @ self.transform.T.T

    def sample_x0(self, rng: np.random.Generator, size=None) -> np.ndarray:
        return self.from_base(self.X0_base.sample(rng, size))

    def box_in_domain(self, low, up, tol: float = 0.0) -> bool:
        """Whether a model-coordinate box lies where the Jacobian bounds hold."""
        low = np.asarray(low, float)
        up = np.asarray(up, float)
        if self.transform is not None:
            low, up = interval_affine_bounds(self.transform.T_inv, low, up)
        return bool(np.all(low >= self.domain.low - tol) and np.all(up <= self.domain.up + tol))


# --------------------------------------------------------------------------
# Jacobian spot checks


@dataclass
class JacobianViolation:
    which: str
    row: int
    col: int
    value: float
    low: float
    up: float
    point: np.ndarray


@dataclass
class ValidationReport:
    samples: int
    tol: float
    violations: list = field(default_factory=list)
    max_excess: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.violations


def _fd_jacobian(fun, z: np.ndarray, step: float) -> np.ndarray:
    cols = []
    for j in range(z.shape[0]):
        hj = step * (1.0 + abs(z[j]))
        e = np.zeros_like(z)
        e[j] = hj
        cols.append((fun(z + e) - fun(z - e)) / (2.0 * hj))
    return np.stack(cols, axis=-1)


def validate(model: SystemModel, samples: int = 1000, seed: int = 0,
             tol: float = 1e-6, step: float = 1e-6) -> ValidationReport:
    """Spot-check the Jacobian bounds by central finite differences.

    States are drawn uniformly from ``model.domain`` (base coordinates,
    then mapped into model coordinates) and noises from ``W`` / ``V``. A
    finite-difference entry outside ``[low - tol*(1+|low|), up + tol*(1+|up|)]``
    is reported, after widening each row by the rounding floor of a central
    difference, ``8 eps (1 + |f_i|) / step``, which dominates for large ``|f|``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    n = model.n
    report = ValidationReport(samples=samples, tol=tol)
    checks = (
        ("f", model.f, model.W, model.Jf_low, model.Jf_up),
        ("h", model.h, model.V, model.Jh_low, model.Jh_up),
    )
    for _ in range(samples):
        x = model.from_base(model.domain.sample(rng))
        for which, fun, noise_box, lo, up in checks:
            s = noise_box.sample(rng)
            z = np.concatenate([x, s])
            val = fun(x, s)
            if not np.all(np.isfinite(val)):
                raise ValueError(f"{which} returned a non-finite value at {z}")
            J = _fd_jacobian(lambda zz: fun(zz[:n], zz[n:]), z, step)
            floor = (8 * np.finfo(float).eps * (1.0 + np.abs(val)) / step)[:, None]
            lo_t = lo - tol * (1.0 + np.abs(lo)) - floor
            up_t = up + tol * (1.0 + np.abs(up)) + floor
            excess = np.maximum(lo_t - J, J - up_t)
            report.max_excess = max(report.max_excess, float(np.max(excess)))
            for i, j in zip(*np.nonzero(excess > 0)):
                report.violations.append(
                    JacobianViolation(which, int(i), int(j), float(J[i, j]),
                                      float(lo[i, j]), float(up[i, j]), z.copy()))
    return report


# --------------------------------------------------------------------------
# Transforms


def apply_transform(model: SystemModel, tr: CoordinateTransform) -> SystemModel:
    """Rewrite the model in coordinates ``z = T x``.

    Jacobian bounds are propagated with the centre/radius interval product,
    which is sound but may over-approximate. ``X0`` becomes the bounding box
    of ``T X0``; true initial states are still drawn from the original box.
    """
    if tr.n != model.n:
        raise ValueError(f"transform is {tr.n}x{tr.n} but the model has n={model.n}")
    n = model.n
    T, Ti = tr.T, tr.T_inv
    f0, h0 = model.f, model.h

    def f(z, w):
        return f0(np.asarray(z) @ Ti.T, w) @ T.T

    def h(z, v):
        return h0(np.asarray(z) @ Ti.T, v)

    fx_lo, fx_up = interval_matmul_bounds(model.Jf_low[:, :n], model.Jf_up[:, :n], T, Ti)
    fw_lo, fw_up = interval_matmul_bounds(model.Jf_low[:, n:], model.Jf_up[:, n:], T, None)
    hx_lo, hx_up = interval_matmul_bounds(model.Jh_low[:, :n], model.Jh_up[:, :n], None, Ti)
    x0_lo, x0_up = interval_affine_bounds(T, model.X0.low, model.X0.up)
    u0 = model.known_input
    return replace(
        model,
        f=f,
        h=h,
        Jf_low=np.hstack([fx_lo, fw_lo]),
        Jf_up=np.hstack([fx_up, fw_up]),
        Jh_low=np.hstack([hx_lo, model.Jh_low[:, n:]]),
        Jh_up=np.hstack([hx_up, model.Jh_up[:, n:]]),
        X0=Box(x0_lo, x0_up),
        transform=tr.compose(model.transform),
        X0_base=model.X0_base,
        injection=None if model.injection is None else T @ model.injection,
        known_input=None if u0 is None else (lambda t: T @ np.asarray(u0(t), float)),
        name=f"{model.name}|T",
    )


def with_output_injection(model: SystemModel, K) -> SystemModel:
    """Move ``K y`` out of the dynamics into a known signal.

    The plant is unchanged: ``f(x, w) = [f(x, w) - K h(x, 0)] + K y``. The
    returned model's ``f`` is the bracketed part. Only valid when ``h`` does
    not depend on the measurement noise.
    """
    n = model.n
    K = as_matrix(K, "K")
    if K.shape != (model.n, model.l):
        raise ValueError(f"K must be {model.n}x{model.l}")
    if np.any(model.Jh_low[:, n:] != 0) or np.any(model.Jh_up[:, n:] != 0):
        raise ValueError("output injection requires h to be independent of v")
    f0, h0 = model.f, model.h
    zero_v = np.zeros(model.n_v)

    def f(x, w):
        x = np.asarray(x, float)
        return f0(x, w) - h0(x, np.broadcast_to(zero_v, x.shape[:-1] + zero_v.shape)) @ K.T

    kh_lo, kh_up = interval_matmul_bounds(model.Jh_low[:, :n], model.Jh_up[:, :n], -K, None)
    Jf_low = model.Jf_low.copy()
    Jf_up = model.Jf_up.copy()
    Jf_low[:, :n] += kh_lo
    Jf_up[:, :n] += kh_up
    total = K if model.injection is None else model.injection + K
    return replace(model, f=f, Jf_low=Jf_low, Jf_up=Jf_up, injection=total,
                   name=f"{model.name}|K")


# --------------------------------------------------------------------------
# Builtin plants


def _cos_range(a: float, b: float) -> tuple[float, float]:
    if b - a >= 2 * math.pi:
        return -1.0, 1.0
    lo = min(math.cos(a), math.cos(b))
    hi = max(math.cos(a), math.cos(b))
    k_max = math.floor(b / (2 * math.pi))
    if k_max * 2 * math.pi >= a:
        hi = 1.0
    k_min = math.floor((b - math.pi) / (2 * math.pi))
    if k_min * 2 * math.pi + math.pi >= a:
        lo = -1.0
    return lo, hi


def _sin_range(a: float, b: float) -> tuple[float, float]:
    return _cos_range(a - math.pi / 2, b - math.pi / 2)


def _imul(a: tuple, b: tuple) -> tuple[float, float]:
    p = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
    return min(p), max(p)


HENON_A = np.array([[0.0, 1.0], [0.3, 0.0]])
HENON_R = np.array([0.05, 0.0])


def henon_dt(domain: Optional[Box] = None) -> SystemModel:
    """Noisy Henon-type map ``x+ = A x + r (1 - x1^2) + w``, ``y = x1 + v``.

    Jacobian bounds are computed over ``domain`` (default: the initial box).
    """
    X0 = Box([-2.0, -1.0], [2.0, 1.0])
    domain = X0 if domain is None else domain
    A, r = HENON_A, HENON_R

    def f(x, w):
        x = np.asarray(x, float)
        return x @ A.T + r * (1.0 - x[..., :1] ** 2) + w

    def h(x, v):
        return np.asarray(x, float)[..., :1] + v

    # d/dx1 of 0.05 (1 - x1^2) is -0.1 x1
    lo = np.hstack([A, np.eye(2)])
    up = lo.copy()
    lo[0, 0] += -2 * r[0] * domain.up[0]
    up[0, 0] += -2 * r[0] * domain.low[0]
    Jh = np.array([[1.0, 0.0, 1.0]])
    return SystemModel(
        time_type=TimeType.DT, f=f, h=h,
        Jf_low=lo, Jf_up=up, Jh_low=Jh, Jh_up=Jh.copy(),
        W=Box([-0.01, -0.01], [0.01, 0.01]), V=Box([-0.1], [0.1]),
        X0=X0, domain=domain, name="henon-dt",
        params={"A": A.tolist(), "r": r.tolist()},
    )


PENDULUM_PARAMS = {"a1": 35.63, "b1": 15.0, "a2": 0.25, "a3": 36.0, "a4": 200.0}
PENDULUM_X0 = Box([9.0, 9.0, 0.5], [19.5, 11.0, 1.5])
PENDULUM_DOMAIN = Box([-20.0, -20.0, -20.0], [40.0, 20.0, 20.0])
REFERENCE_T = np.array([[20.0, 0.1, 0.1], [0.0, 0.01, 0.06], [0.0, -10.0, -0.4]])


def ct_pendulum(domain: Optional[Box] = None, params: Optional[dict] = None) -> SystemModel:
    """Three-state flexible-joint pendulum (CT), measured through ``x1``.

    ``domain`` is the operating box over which the Jacobian bounds are
    computed; only its ``x1`` and ``x2`` ranges matter.
    """
    p = dict(PENDULUM_PARAMS if params is None else params)
    a1, b1, a2, a3, a4 = (p[k] for k in ("a1", "b1", "a2", "a3", "a4"))
    domain = PENDULUM_DOMAIN if domain is None else domain

    def f(x, w):
        x = np.asarray(x, float)
        w = np.asarray(w, float)
        x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
        s, c = np.sin(x1), np.cos(x1)
        return np.stack([
            x2 + w[..., 0],
            b1 * x3 - a1 * s - a2 * x2 + w[..., 1],
            -a3 * (a2 * x1 + x2) + (a1 / b1) * (a4 * s + c * x2) - a4 * x3 + w[..., 2],
        ], axis=-1)

    def h(x, v):
        return np.asarray(x, float)[..., :1] + 0.0 * np.asarray(v, float)

    cr = _cos_range(domain.low[0], domain.up[0])
    sr = _sin_range(domain.low[0], domain.up[0])
    x2r = (domain.low[1], domain.up[1])
    x2s = _imul(x2r, sr)
    k = a1 / b1
    j21 = (-a1 * cr[1], -a1 * cr[0])
    # a4 cos(x1) - x2 sin(x1), bounded term by term
    t31 = (a4 * cr[0] - x2s[1], a4 * cr[1] - x2s[0])
    j31 = (-a3 * a2 + k * t31[0], -a3 * a2 + k * t31[1])
    j32 = (-a3 + k * cr[0], -a3 + k * cr[1])
    lo = np.array([
        [0.0, 1.0, 0.0, 1.0, 0.0, 0.0],
        [j21[0], -a2, b1, 0.0, 1.0, 0.0],
        [j31[0], j32[0], -a4, 0.0, 0.0, 1.0],
    ])
    up = lo.copy()
    up[1, 0], up[2, 0], up[2, 1] = j21[1], j31[1], j32[1]
    Jh = np.array([[1.0, 0.0, 0.0, 0.0]])
    return SystemModel(
        time_type=TimeType.CT, f=f, h=h,
        Jf_low=lo, Jf_up=up, Jh_low=Jh, Jh_up=Jh.copy(),
        W=Box([-0.1] * 3, [0.1] * 3), V=Box([0.0], [0.0]),
        X0=PENDULUM_X0, domain=domain, name="ct-pendulum", params=p,
    )


def ct_pendulum_transformed(injection_gain: float = 5.0, T=None,
                            domain: Optional[Box] = None) -> SystemModel:
    """Pendulum with ``g*(y - x1)`` folded into ``dx1/dt``, then ``z = T x``.

    ``dx1/dt = x2 + w1 - g x1 + g y``: the ``-g x1`` part stays in the
    dynamics and ``g y`` is carried as a known signal.
    """
    base = ct_pendulum(domain=domain)
    if injection_gain:
        base = with_output_injection(base, np.array([[injection_gain], [0.0], [0.0]]))
    return apply_transform(base, CoordinateTransform(REFERENCE_T if T is None else T))


# --------------------------------------------------------------------------
# JSON ingestion


def _affine_plus(nl_name: str, params: dict):
    if nl_name in (None, "none"):
        return None
    if nl_name == "henon":
        r = np.asarray(params.get("r", HENON_R), float)
        return lambda x: r * (1.0 - np.asarray(x, float)[..., :1] ** 2)
    raise ValueError(f"unknown builtin nonlinearity {nl_name!r}")


BUILTIN_MODELS = {
    "henon-dt": henon_dt,
    "ct-pendulum": ct_pendulum,
    "ct-pendulum-transformed": ct_pendulum_transformed,
}


def _box(d) -> Box:
    return Box(d["low"], d["up"])


def model_from_dict(doc: dict) -> SystemModel:
    """Build a model from a JSON-style document.

    Either ``{"builtin": name, ...}`` or an affine-plus-nonlinearity plant::

        {"time_type": "DT", "A": .., "B": .., "C": .., "D": ..,
         "nonlinearity": {"name": "henon", "r": [0.05, 0]} | null,
         "W": {"low": .., "up": ..}, "V": .., "X0": .., "domain": ..,
         "Jf_low": .., "Jf_up": .., "Jh_low": .., "Jh_up": ..}

    Jacobian bounds may be omitted only when there is no nonlinearity, in
    which case they are the exact matrices ``[A B]`` and ``[C D]``.
    """
    if "builtin" in doc:
        name = doc["builtin"]
        if name not in BUILTIN_MODELS:
            raise ValueError(f"unknown builtin model {name!r}; choose from {sorted(BUILTIN_MODELS)}")
        kwargs = {k: v for k, v in doc.items() if k != "builtin"}
        if "domain" in kwargs:
            kwargs["domain"] = _box(kwargs["domain"])
        return BUILTIN_MODELS[name](**kwargs)

    A = as_matrix(doc["A"], "A")
    B = as_matrix(doc["B"], "B")
    C = as_matrix(doc["C"], "C")
    D = as_matrix(doc["D"], "D")
    nl_doc = doc.get("nonlinearity") or {}
    nl = _affine_plus(nl_doc.get("name"), nl_doc)

    def f(x, w):
        out = np.asarray(x, float) @ A.T + np.asarray(w, float) @ B.T
        return out if nl is None else out + nl(x)

    def h(x, v):
        return np.asarray(x, float) @ C.T + np.asarray(v, float) @ D.T

    if "Jf_low" in doc:
        Jf_low, Jf_up = doc["Jf_low"], doc["Jf_up"]
    elif nl is None:
        Jf_low = Jf_up = np.hstack([A, B])
    else:
        raise ValueError("Jf_low/Jf_up are required when a nonlinearity is present")
    Jh_low = doc.get("Jh_low", np.hstack([C, D]))
    Jh_up = doc.get("Jh_up", np.hstack([C, D]))
    X0 = _box(doc["X0"])
    return SystemModel(
        time_type=TimeType(doc["time_type"]), f=f, h=h,
        Jf_low=Jf_low, Jf_up=Jf_up, Jh_low=Jh_low, Jh_up=Jh_up,
        W=_box(doc["W"]), V=_box(doc["V"]), X0=X0,
        domain=_box(doc["domain"]) if "domain" in doc else X0,
        name=doc.get("name", "json-model"),
    )


def load_model(source) -> SystemModel:
    """Load a builtin by name, a JSON file path, or an already-parsed dict."""
    if isinstance(source, dict):
        return model_from_dict(source)
    if isinstance(source, str) and source in BUILTIN_MODELS:
        return BUILTIN_MODELS[source]()
    return model_from_dict(json.loads(Path(source).read_text()))
