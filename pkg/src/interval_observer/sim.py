"""Plant and interval-observer co-simulation, containment checks and metrics.

Everything is vectorised over a leading "run" axis so that Monte-Carlo
suites run as a handful of array operations per time step.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import matops as mo
from .decomp import JssDecomposition
from .model import SystemModel
from .synthesis import ObserverGain

NOISE_POLICIES = ("uniform", "extreme-vertex", "zero")


class SimulationError(RuntimeError):
    """Divergence or a framer ordering violation, with the time it occurred."""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} at t = {t:g}")
        self.t = t


@dataclass
class FramerState:
    xlow: np.ndarray
    xup: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.xlow = np.asarray(self.xlow, float)
        self.xup = np.asarray(self.xup, float)
        if self.xlow.shape != self.xup.shape:
            raise ValueError("framer bounds must share a shape")

    @property
    def width(self) -> np.ndarray:
        return self.xup - self.xlow


# --------------------------------------------------------------------------
# plant


def _rk4(fun, t: float, x: np.ndarray, dt: float) -> np.ndarray:
    k1 = fun(t, x)
    k2 = fun(t + dt / 2, x + dt / 2 * k1)
    k3 = fun(t + dt / 2, x + dt / 2 * k2)
    k4 = fun(t + dt, x + dt * k3)
    return x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def step_plant(model: SystemModel, x, w, v, dt: Optional[float] = None, t: float = 0.0):
    """Advance the true plant one step and measure the new state.

    CT models take one RK4 step of size ``dt`` with ``w`` and ``v`` held.
    Returns ``(x_next, y)`` with ``y = h(x_next, v)``.
    """
    x = np.asarray(x, float)
    w = np.asarray(w, float)
    v = np.asarray(v, float)
    if model.is_ct:
        if dt is None or dt <= 0:
            raise ValueError("CT models need a positive dt")
        x_next = _rk4(lambda s, z: model.dynamics(z, w, v, s), t, x, dt)
    else:
        x_next = model.dynamics(x, w, v, t)
    if not np.all(np.isfinite(x_next)):
        raise SimulationError("plant state became non-finite", t)
    return x_next, model.measure(x_next, v)


# --------------------------------------------------------------------------
# observer


class IntervalObserver:
    """Embedding system of the observer with gain ``L``.

    The lower framer evolves by ``f_d(xi_low, xi_up)`` and the upper by
    ``f_d(xi_up, xi_low)`` where ``xi = (x, w, v)`` and::

        f_d(xi1, xi2) = Mup x1 - Mdn x2 + B+ w1 - B- w2 + (LD)- v1 - (LD)+ v2
                        + phi_d(x1, w1, x2, w2)
                        - L+ psi_d(x2, v2, x1, v1) + L- psi_d(x1, v1, x2, v2)
                        + L y + known terms

    with ``M = A - LC``; for CT ``Mup = M^d + (M^nd)+``, ``Mdn = (M^nd)-``
    and for DT ``Mup = M+``, ``Mdn = M-``.
    """

    def __init__(self, model: SystemModel, dec: JssDecomposition, gain: ObserverGain):
        L = np.asarray(gain.L, float)
        if L.shape != (model.n, model.l):
            raise ValueError(f"gain L has shape {L.shape}, model needs {(model.n, model.l)}")
        self.model, self.dec, self.L = model, dec, L
        M = dec.A - L @ dec.C
        if model.is_ct:
            Md, Mnd = mo.diag_split(M)
            self.Mup, self.Mdn = Md + mo.positive_part(Mnd), mo.negative_part(Mnd)
        else:
            self.Mup, self.Mdn = mo.positive_part(M), mo.negative_part(M)
        self.Bp, self.Bm = mo.positive_part(dec.B), mo.negative_part(dec.B)
        LD = L @ dec.D
        self.LDp, self.LDm = mo.positive_part(LD), mo.negative_part(LD)
        self.Lp, self.Lm = mo.positive_part(L), mo.negative_part(L)
        self.wl, self.wu = model.W.low, model.W.up
        self.vl, self.vu = model.V.low, model.V.up

    def _fd(self, x1, x2, w1, w2, v1, v2, y, t):
        d = self.dec
        out = x1 @ self.Mup.T - x2 @ self.Mdn.T
        out = out + w1 @ self.Bp.T - w2 @ self.Bm.T + v1 @ self.LDm.T - v2 @ self.LDp.T
        out = out + d.phi_d(x1, w1, x2, w2)
        out = out - d.psi_d(x2, v2, x1, v1) @ self.Lp.T + d.psi_d(x1, v1, x2, v2) @ self.Lm.T
        return out + y @ self.L.T + self.model.known_terms(t, y)

    def field(self, xlow, xup, y, t: float = 0.0):
        """Right-hand side (CT) or next value (DT) of both framers."""
        xlow = np.asarray(xlow, float)
        xup = np.asarray(xup, float)
        y = np.asarray(y, float)
        lo = self._fd(xlow, xup, self.wl, self.wu, self.vl, self.vu, y, t)
        up = self._fd(xup, xlow, self.wu, self.wl, self.vu, self.vl, y, t)
        return lo, up


def _order_tol(xlow, xup) -> float:
    return 1e-9 * (1.0 + float(np.max(np.abs(xlow), initial=0.0)) + float(np.max(np.abs(xup), initial=0.0)))


def step_observer(obs: IntervalObserver, fr: FramerState, y, dt: Optional[float] = None) -> FramerState:
    """Advance the framers one step using the measurement ``y`` (held for CT)."""
    y = np.asarray(y, float)
    if obs.model.is_ct:
        if dt is None or dt <= 0:
            raise ValueError("CT models need a positive dt")
        n = fr.xlow.shape[-1]

        def rhs(s, z):
            lo, up = obs.field(z[..., :n], z[..., n:], y, s)
            return np.concatenate([lo, up], axis=-1)

        z = _rk4(rhs, fr.t, np.concatenate([fr.xlow, fr.xup], axis=-1), dt)
        new = FramerState(z[..., :n], z[..., n:], fr.t + dt)
    else:
        lo, up = obs.field(fr.xlow, fr.xup, y, fr.t)
        new = FramerState(lo, up, fr.t + 1)
    _check_framers(new.xlow, new.xup, new.t)
    return new


def _check_framers(xlow, xup, t):
    if not (np.all(np.isfinite(xlow)) and np.all(np.isfinite(xup))):
        raise SimulationError("framer became non-finite", t)
    if np.any(xlow - xup > _order_tol(xlow, xup)):
        raise SimulationError("framer ordering violated (xlow > xup)", t)


# --------------------------------------------------------------------------
# co-simulation


@dataclass
class SimulationTrace:
    """Arrays carry a leading run axis when produced by :func:`run_batch`.

    ``measurements[k]`` is ``h(x_k, v_k)``; ``w[k]`` acts over step ``k``.
    """

    times: np.ndarray
    true_states: np.ndarray
    framer_lows: np.ndarray
    framer_ups: np.ndarray
    measurements: np.ndarray
    w: np.ndarray
    v: np.ndarray
    seed: Optional[int] = None
    is_ct: bool = False
    dt: float = 1.0
    domain_ok: Optional[np.ndarray] = None

    @property
    def error_norms(self) -> np.ndarray:
        return np.linalg.norm(self.framer_ups - self.framer_lows, axis=-1)

    @property
    def batched(self) -> bool:
        return self.true_states.ndim == 3

    @property
    def runs(self) -> int:
        return self.true_states.shape[0] if self.batched else 1

    def run(self, i: int) -> "SimulationTrace":
        if not self.batched:
            if i != 0:
                raise IndexError(i)
            return self
        dom = None if self.domain_ok is None else self.domain_ok[i]
        return SimulationTrace(self.times, self.true_states[i], self.framer_lows[i], self.framer_ups[i],
                               self.measurements[i], self.w[i], self.v[i], self.seed, self.is_ct,
                               self.dt, dom)

    def to_csv(self) -> str:
        """Columns ``t, x_i, xlow_i, xup_i, y_j, eps_norm`` for one run."""
        if self.batched:
            raise ValueError("select a run first with .run(i)")
        n, l = self.true_states.shape[1], self.measurements.shape[1]
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["t"] + [f"x{i + 1}" for i in range(n)] + [f"xlow{i + 1}" for i in range(n)]
                    + [f"xup{i + 1}" for i in range(n)] + [f"y{j + 1}" for j in range(l)] + ["eps_norm"])
        eps = self.error_norms
        for k in range(len(self.times)):
            row = [self.times[k], *self.true_states[k], *self.framer_lows[k], *self.framer_ups[k],
                   *self.measurements[k], eps[k]]
            wr.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def _noise(rng: np.random.Generator, box, policy: str, shape) -> np.ndarray:
    if policy == "uniform":
        return box.low + (box.up - box.low) * rng.random(shape + (box.dim,))
    if policy == "extreme-vertex":
        return np.where(rng.random(shape + (box.dim,)) < 0.5, box.low, box.up)
    if policy == "zero":
        mid = np.clip(0.0, box.low, box.up)
        return np.broadcast_to(mid, shape + (box.dim,)).copy()
    raise ValueError(f"unknown noise policy {policy!r}; expected one of {NOISE_POLICIES}")


def run_batch(model: SystemModel, dec: JssDecomposition, gain: ObserverGain, horizon: float,
              dt: Optional[float] = None, noise_policy: str = "uniform", seed: int = 0,
              runs: int = 1, x0=None, X0=None, measurement: str = "continuous") -> SimulationTrace:
    """Simulate ``runs`` independent plant/observer pairs.

    ``horizon`` is in seconds (CT) or steps (DT). ``x0`` overrides the
    sampled true initial states (model coordinates) and ``X0`` the framer
    initial box. For CT, ``measurement="continuous"`` integrates plant and
    observer jointly so that ``y`` is evaluated at every RK4 stage, while
    ``"zoh"`` holds the sampled ``y`` over each step. Noise is held either way.
    Holding ``y`` is only safe when ``L y`` and ``K y`` are small: a held
    measurement feeds the framers a signal the plant never saw.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if noise_policy not in NOISE_POLICIES:
        raise ValueError(f"unknown noise policy {noise_policy!r}; expected one of {NOISE_POLICIES}")
    if measurement not in ("zoh", "continuous"):
        raise ValueError("measurement must be 'zoh' or 'continuous'")
    obs = IntervalObserver(model, dec, gain)
    rng = np.random.default_rng(seed)
    n = model.n
    if model.is_ct:
        if dt is None or dt <= 0:
            raise ValueError("CT scenarios require a positive dt")
        steps = int(round(horizon / dt))
        times = dt * np.arange(steps + 1)
    else:
        dt = 1.0
        steps = int(horizon)
        times = np.arange(steps + 1, dtype=float)

    if x0 is None:
        if noise_policy == "extreme-vertex":
            base = _noise(rng, model.X0_base, "extreme-vertex", (runs,))
        else:
            base = model.X0_base.sample(rng, (runs,))
        x = model.from_base(base)
    else:
        x = np.broadcast_to(np.asarray(x0, float), (runs, n)).copy()
    X0 = model.X0 if X0 is None else X0
    xl = np.broadcast_to(X0.low, (runs, n)).copy()
    xu = np.broadcast_to(X0.up, (runs, n)).copy()

    W = _noise(rng, model.W, noise_policy, (runs, steps))
    V = _noise(rng, model.V, noise_policy, (runs, steps + 1))

    X = np.empty((runs, steps + 1, n))
    XL, XU = np.empty_like(X), np.empty_like(X)
    Y = np.empty((runs, steps + 1, model.l))
    dom = np.ones(runs, dtype=bool)
    X[:, 0], XL[:, 0], XU[:, 0] = x, xl, xu
    Y[:, 0] = model.measure(x, V[:, 0])

    def in_domain(lo, up):
        lo_b, up_b = (lo, up) if model.transform is None else mo.interval_affine_bounds(model.transform.T_inv, lo, up)
        return np.all(lo_b >= model.domain.low, axis=-1) & np.all(up_b <= model.domain.up, axis=-1)

    def advance(k, x, xl, xu):
        t = times[k]
        w, v = W[:, k], V[:, k]
        if model.is_ct and measurement == "continuous":
            def rhs(s, z):
                xs, ls, us = z[:, :n], z[:, n:2 * n], z[:, 2 * n:]
                lo, up = obs.field(ls, us, model.measure(xs, v), s)
                return np.concatenate([model.dynamics(xs, w, v, s), lo, up], axis=1)

            z = _rk4(rhs, t, np.concatenate([x, xl, xu], axis=1), dt)
            return z[:, :n], z[:, n:2 * n], z[:, 2 * n:]
        if model.is_ct:
            x_next = _rk4(lambda s, z: model.dynamics(z, w, v, s), t, x, dt)
            fr = step_observer(obs, FramerState(xl, xu, t), Y[:, k], dt)
            return x_next, fr.xlow, fr.xup
        return (model.dynamics(x, w, v, t), *obs.field(xl, xu, Y[:, k], t))

    dom &= in_domain(xl, xu)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps):
            try:
                x, xl, xu = advance(k, x, xl, xu)
            except ValueError as e:
                raise SimulationError(f"framer evaluation failed ({e})", times[k + 1]) from None
            if not np.all(np.isfinite(x)):
                raise SimulationError("plant state became non-finite", times[k + 1])
            _check_framers(xl, xu, times[k + 1])
            X[:, k + 1], XL[:, k + 1], XU[:, k + 1] = x, xl, xu
            Y[:, k + 1] = model.measure(x, V[:, k + 1])
            dom &= in_domain(xl, xu)
    return SimulationTrace(times, X, XL, XU, Y, W, V, seed, model.is_ct, dt, dom)


def run(model: SystemModel, dec: JssDecomposition, gain: ObserverGain, horizon: float,
        dt: Optional[float] = None, noise_policy: str = "uniform", seed: int = 0, **kw) -> SimulationTrace:
    """Single co-simulation; see :func:`run_batch`."""
    return run_batch(model, dec, gain, horizon, dt, noise_policy, seed, runs=1, **kw).run(0)


# --------------------------------------------------------------------------
# checks and metrics


@dataclass
class Violation:
    run: int
    step: int
    t: float
    coord: int
    excess: float


@dataclass
class ContainmentReport:
    violations: list = field(default_factory=list)
    checked_runs: int = 0
    checked_steps: int = 0
    domain_exits: int = 0

    @property
    def passed(self) -> bool:
        return not self.violations

    @property
    def pass_rate(self) -> float:
        if self.checked_runs == 0:
            return 1.0
        bad = len({v.run for v in self.violations})
        return 1.0 - bad / self.checked_runs


def containment_check(trace: SimulationTrace, slack: Optional[float] = None) -> ContainmentReport:
    """Check ``xlow <= x <= xup`` at every grid point and coordinate.

    The default slack per step is ``1e-6 (1 + |x|_inf)`` for CT traces (grid
    integration error) and ``1e-12 (1 + |x|_inf)`` for DT traces (rounding
    only, which matters when framers collapse onto the state).
    """
    X = np.asarray(trace.true_states, float)
    if X.size == 0:
        return ContainmentReport()
    XL, XU = np.asarray(trace.framer_lows, float), np.asarray(trace.framer_ups, float)
    if X.ndim == 2:
        X, XL, XU = X[None], XL[None], XU[None]
    if slack is None:
        rel = 1e-6 if trace.is_ct else 1e-12
        tol = rel * (1.0 + np.max(np.abs(X), axis=-1, keepdims=True))
    else:
        tol = slack
    excess = np.maximum(XL - X, X - XU) - tol
    rep = ContainmentReport(checked_runs=X.shape[0], checked_steps=X.shape[1])
    for r, k, i in zip(*np.nonzero(excess > 0)):
        rep.violations.append(Violation(int(r), int(k), float(trace.times[k]), int(i), float(excess[r, k, i])))
    if trace.domain_ok is not None:
        rep.domain_exits = int(np.sum(~np.atleast_1d(trace.domain_ok)))
    return rep


@dataclass
class GainMetrics:
    empirical_l2_gain: Optional[float]
    sup_error: float
    steady_state_error: float
    final_error: float

    @property
    def settled(self) -> bool:
        """Final-20% mean within 5% of the final value."""
        ref = max(abs(self.final_error), 1e-300)
        return abs(self.steady_state_error - self.final_error) <= 0.05 * ref or self.sup_error == 0.0


def gain_metrics(trace: SimulationTrace, noise_widths) -> GainMetrics:
    """Empirical ``|eps|_l2 / |Delta|_l2`` with constant noise widths.

    CT sums are weighted by ``dt``. The ratio is ``None`` when the widths
    are all zero.
    """
    if trace.batched:
        raise ValueError("select a run first with .run(i)")
    eps = trace.error_norms
    d = float(np.linalg.norm(np.asarray(noise_widths, float)))
    wt = trace.dt if trace.is_ct else 1.0
    e2 = float(np.sqrt(wt * np.sum(eps ** 2)))
    d2 = d * np.sqrt(wt * len(eps))
    ratio = e2 / d2 if d2 > 0 else None
    k = max(1, int(np.ceil(0.2 * len(eps))))
    tail = eps[-k:]
    return GainMetrics(ratio, float(np.max(eps, initial=0.0)), float(np.mean(tail)) if len(tail) else 0.0,
                       float(eps[-1]) if len(eps) else 0.0)


def noise_widths(model: SystemModel) -> np.ndarray:
    return np.concatenate([model.W.width, model.V.width])
