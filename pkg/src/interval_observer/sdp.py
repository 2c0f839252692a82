"""Small dense LMI feasibility kernel.

The canonical problem is

    find x  s.t.  F(x) = F0 + sum_k x_k F_k  <=  -delta I,
                  lb <= x <= ub,  A_ineq x <= b_ineq.

It is solved by maximising the margin ``t`` in ``F(x) <= -t I`` with a
primal log-barrier method. Polyhedral constraints are presolved with LPs so
that implicit equalities (rows that can never be strict) are eliminated
before the barrier needs a strictly interior point.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog

log = logging.getLogger(__name__)


class Status(str, Enum):
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"
    MAX_ITER = "MaxIter"


def eig_sym(M, rtol: float = 1e-10) -> np.ndarray:
    """Ascending eigenvalues of a symmetric matrix.

    Raises ``ValueError`` if ``M`` is asymmetric beyond ``rtol`` relative to
    its largest entry; otherwise the symmetric part is used.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    if np.max(np.abs(M - M.T), initial=0.0) > rtol * scale:
        raise ValueError("matrix is not symmetric")
    return np.linalg.eigvalsh(0.5 * (M + M.T))


def lambda_max(M) -> float:
    return float(eig_sym(M)[-1])


@dataclass(eq=False)
class AffineLmi:
    """``F0 + sum_k x_k F_k <= -delta I`` plus optional linear constraints."""

    F0: np.ndarray
    Fs: np.ndarray
    delta: float = 0.0
    lb: Optional[np.ndarray] = None
    ub: Optional[np.ndarray] = None
    A_ineq: Optional[np.ndarray] = None
    b_ineq: Optional[np.ndarray] = None

    def __post_init__(self):
        F0 = np.asarray(self.F0, float)
        Fs = np.asarray(self.Fs, float)
        if Fs.ndim == 2:
            Fs = Fs[None]
        if F0.ndim != 2 or F0.shape[0] != F0.shape[1] or Fs.shape[1:] != F0.shape:
            raise ValueError(f"inconsistent LMI blocks: F0 {F0.shape}, Fs {Fs.shape}")
        for M in (F0, *Fs):
            eig_sym(M)  # symmetry check
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        m = Fs.shape[0]
        self.F0 = 0.5 * (F0 + F0.T)
        self.Fs = 0.5 * (Fs + Fs.transpose(0, 2, 1))
        self.lb = np.full(m, -np.inf) if self.lb is None else np.asarray(self.lb, float)
        self.ub = np.full(m, np.inf) if self.ub is None else np.asarray(self.ub, float)
        if self.lb.shape != (m,) or self.ub.shape != (m,) or np.any(self.lb > self.ub):
            raise ValueError("variable bounds must have length m and be ordered")
        if self.A_ineq is None:
            self.A_ineq = np.zeros((0, m))
            self.b_ineq = np.zeros(0)
        else:
            self.A_ineq = np.atleast_2d(np.asarray(self.A_ineq, float))
            self.b_ineq = np.atleast_1d(np.asarray(self.b_ineq, float))
            if self.A_ineq.shape[1] != m or self.A_ineq.shape[0] != self.b_ineq.shape[0]:
                raise ValueError("linear constraint dimensions do not match")

    @property
    def m(self) -> int:
        return self.Fs.shape[0]

    @property
    def size(self) -> int:
        return self.F0.shape[0]

    def evaluate(self, x) -> np.ndarray:
        return self.F0 + np.tensordot(np.asarray(x, float), self.Fs, axes=1)

    def linear_rows(self) -> tuple[np.ndarray, np.ndarray]:
        """All polyhedral constraints as ``A x <= b`` (finite bounds included)."""
        m = self.m
        I = np.eye(m)
        fin_lb = np.isfinite(self.lb)
        fin_ub = np.isfinite(self.ub)
        A = np.vstack([-I[fin_lb], I[fin_ub], self.A_ineq])
        b = np.concatenate([-self.lb[fin_lb], self.ub[fin_ub], self.b_ineq])
        return A, b


@dataclass
class SolverOptions:
    max_iter: int = 400          # total Newton steps per feasibility solve
    barrier_growth: float = 8.0
    centering_tol: float = 1e-9
    tau_max: float = 1e14
    early_exit: bool = True      # stop as soon as the margin reaches delta
    x_init: Optional[np.ndarray] = None
    restarts: int = 0            # extra starts from jittered points, off by default
    seed: int = 0


@dataclass
class FeasibilityResult:
    status: Status
    x: Optional[np.ndarray]
    margin: float                # -lambda_max(F(x)) at the returned x
    upper_bound: float           # certified upper bound on the best margin
    iterations: int

    @property
    def min_eig_achieved(self) -> float:
        """Smallest eigenvalue of ``-F(x)``; equal to ``margin``."""
        return self.margin

    @property
    def feasible(self) -> bool:
        return self.status is Status.FEASIBLE


@dataclass
class _Reduction:
    """``x = x0 + N y`` with strict constraints ``Ar y < br``."""

    x0: np.ndarray
    N: np.ndarray
    Ar: np.ndarray
    br: np.ndarray
    y0: np.ndarray


_REDUCTION_CACHE: dict = {}


def _lp(c, A, b):
    res = linprog(c, A_ub=A if A.size else None, b_ub=b if A.size else None,
                  bounds=[(None, None)] * len(c), method="highs")
    return res


def _reduce(A: np.ndarray, b: np.ndarray, m: int, x_hint) -> Optional[_Reduction]:
    """Remove implicit equalities; ``None`` if the polyhedron is empty."""
    key = (A.tobytes(), b.tobytes(), m, None if x_hint is None else np.asarray(x_hint).tobytes())
    if key in _REDUCTION_CACHE:
        return _REDUCTION_CACHE[key]

    norms = np.linalg.norm(A, axis=1)
    zero_rows = norms == 0
    if np.any(b[zero_rows] < 0):
        _REDUCTION_CACHE[key] = None
        return None
    A, b, norms = A[~zero_rows], b[~zero_rows], norms[~zero_rows]
    if A.shape[0] and not _lp(np.zeros(m), A, b).success:
        _REDUCTION_CACHE[key] = None
        return None

    implicit = np.zeros(A.shape[0], dtype=bool)
    for i in range(A.shape[0]):
        res = _lp(A[i], A, b)  # minimise a_i x, i.e. maximise the slack of row i
        if res.status == 3:
            continue  # unbounded: row i can be made strict
        slack = b[i] - res.fun
        implicit[i] = slack <= 1e-9 * (1.0 + abs(b[i])) * max(1.0, norms[i])

    # single-variable equalities are fixed exactly, the rest via a null space
    fixed = np.full(m, np.nan)
    general = []
    for i in np.nonzero(implicit)[0]:
        nz = np.nonzero(A[i])[0]
        if nz.size == 1:
            fixed[nz[0]] = b[i] / A[i, nz[0]]
        else:
            general.append(i)
    free = np.isnan(fixed)
    x_fixed = np.where(free, 0.0, fixed)
    Af = A[:, free]
    bf = b - A[:, ~free] @ fixed[~free]
    if general:
        Ae, be = Af[general], bf[general]
        Nf = null_space(Ae)
        xf0 = np.linalg.lstsq(Ae, be, rcond=None)[0]
    else:
        Nf = np.eye(int(free.sum()))
        xf0 = np.zeros(int(free.sum()))
    N = np.zeros((m, Nf.shape[1]))
    N[free] = Nf
    x0 = x_fixed.copy()
    x0[free] = xf0

    strict = ~implicit
    Ar = A[strict] @ N
    br = b[strict] - A[strict] @ x0
    keep = np.linalg.norm(Ar, axis=1) > 1e-12
    if np.any(br[~keep] < -1e-9):
        _REDUCTION_CACHE[key] = None
        return None
    Ar, br = Ar[keep], br[keep]
    k = N.shape[1]

    # interior point: maximise a capped distance to the boundary
    if Ar.shape[0]:
        rn = np.linalg.norm(Ar, axis=1)
        c = np.zeros(k + 1)
        c[-1] = -1.0
        Aub = np.vstack([np.hstack([Ar, rn[:, None]]), np.eye(1, k + 1, k)])
        bub = np.concatenate([br, [1.0]])
        res = _lp(c, Aub, bub)
        if not res.success or res.x[-1] <= 0:
            _REDUCTION_CACHE[key] = None
            return None
        y0 = res.x[:k]
    else:
        y0 = np.zeros(k)

    if x_hint is not None and k:
        yh = np.linalg.lstsq(N, np.asarray(x_hint, float) - x0, rcond=None)[0]
        d = yh - y0
        if Ar.shape[0]:
            # largest step towards the hint that stays strictly inside
            rate = Ar @ d
            room = br - Ar @ y0
            with np.errstate(divide="ignore"):
                lim = np.where(rate > 0, room / rate, np.inf)
            theta = min(1.0, 0.99 * float(np.min(lim)))
        else:
            theta = 1.0
        y0 = y0 + theta * d

    red = _Reduction(x0=x0, N=N, Ar=Ar, br=br, y0=y0)
    if len(_REDUCTION_CACHE) > 256:
        _REDUCTION_CACHE.clear()
    _REDUCTION_CACHE[key] = red
    return red


def _inv_pd(S: np.ndarray) -> Optional[np.ndarray]:
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        return None
    Linv = np.linalg.inv(L)
    return Linv.T @ Linv


def _logdet_pd(S: np.ndarray) -> Optional[float]:
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        return None
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def solve_feasibility(lmi: AffineLmi, opts: Optional[SolverOptions] = None) -> FeasibilityResult:
    """Decide whether ``F(x) <= -delta I`` has a solution.

    ``Infeasible`` is returned only when the barrier duality bound proves the
    best achievable margin is below ``delta``; running out of Newton steps
    gives ``MaxIter`` instead.
    """
    opts = opts or SolverOptions()
    A, b = lmi.linear_rows()
    red = _reduce(A, b, lmi.m, opts.x_init)
    if red is None:
        return FeasibilityResult(Status.INFEASIBLE, None, -np.inf, -np.inf, 0)
    result = _barrier(lmi, red, red.y0, opts)
    rng = np.random.default_rng(opts.seed)
    for _ in range(opts.restarts):
        if result.status is not Status.MAX_ITER:
            break
        y = red.y0 + 0.1 * rng.standard_normal(red.y0.shape)
        if red.Ar.shape[0] and np.any(red.Ar @ y >= red.br):
            continue
        result = _barrier(lmi, red, y, opts)
    return result


def _barrier(lmi: AffineLmi, red: _Reduction, y0: np.ndarray, opts: SolverOptions) -> FeasibilityResult:
    N_, x0 = red.N, red.x0
    G0 = lmi.evaluate(x0)                                   # F at y = 0
    Gs = np.tensordot(N_.T, lmi.Fs, axes=1)                 # d F / d y_j
    k = Gs.shape[0]
    size = lmi.size
    Ar, br = red.Ar, red.br
    nu = size + Ar.shape[0]
    I = np.eye(size)
    delta = lmi.delta

    def F_of(y):
        return G0 + np.tensordot(y, Gs, axes=1) if k else G0

    def finish(status, y, bound, it):
        x = x0 + N_ @ y
        return FeasibilityResult(status, x, -lambda_max(lmi.evaluate(x)), bound, it)

    y = np.array(y0, float)
    t = -lambda_max(F_of(y)) - 1.0
    tau = nu / (1.0 + abs(t))
    it = 0

    def merit(y, t, tau):
        S = -F_of(y) - t * I
        ld = _logdet_pd(S)
        if ld is None:
            return None
        s = br - Ar @ y
        if np.any(s <= 0):
            return None
        return -tau * t - ld - float(np.sum(np.log(s)))

    while True:
        # centring for the current tau
        while True:
            if it >= opts.max_iter:
                return finish(Status.MAX_ITER, y, np.inf, it)
            it += 1
            S = -F_of(y) - t * I
            Sinv = _inv_pd(S)
            s = br - Ar @ y
            # gradient / Hessian in v = (y, t); dS/dy_j = -Gs_j, dS/dt = -I
            SG = np.einsum("ab,jbc->jac", Sinv, Gs) if k else np.zeros((0, size, size))
            g = np.empty(k + 1)
            g[:k] = np.einsum("jaa->j", SG)
            g[k] = np.trace(Sinv) - tau
            H = np.empty((k + 1, k + 1))
            H[:k, :k] = np.einsum("iab,jba->ij", SG, SG)
            H[:k, k] = H[k, :k] = np.einsum("jab,ba->j", SG, Sinv)
            H[k, k] = np.sum(Sinv * Sinv)
            if Ar.shape[0]:
                inv_s = 1.0 / s
                g[:k] += Ar.T @ inv_s
                H[:k, :k] += (Ar * inv_s[:, None] ** 2).T @ Ar
            step = -np.linalg.lstsq(H, g, rcond=None)[0]
            dec2 = float(-g @ step)
            if dec2 < 2 * opts.centering_tol:
                break
            phi0 = merit(y, t, tau)
            alpha = 1.0
            while alpha > 1e-14:
                phi1 = merit(y + alpha * step[:k], t + alpha * step[k], tau)
                if phi1 is not None and phi1 <= phi0 - 0.25 * alpha * dec2:
                    break
                alpha *= 0.5
            else:
                break  # no progress possible along the Newton direction
            y = y + alpha * step[:k]
            t = t + alpha * step[k]
            if opts.early_exit and t >= delta:
                res = finish(Status.FEASIBLE, y, np.inf, it)
                if res.margin >= delta:
                    return res
        bound = t + nu / tau
        if opts.early_exit and t >= delta:
            res = finish(Status.FEASIBLE, y, bound, it)
            if res.margin >= delta:
                return res
        if bound < delta:
            return finish(Status.INFEASIBLE, y, bound, it)
        if nu / tau < 1e-12 * (1.0 + abs(t)) or tau >= opts.tau_max:
            res = finish(Status.FEASIBLE if t >= delta else Status.MAX_ITER, y, bound, it)
            if res.status is Status.FEASIBLE and res.margin < delta:
                res.status = Status.MAX_ITER
            return res
        tau *= opts.barrier_growth


@dataclass
class BisectionResult:
    status: Status
    gamma: Optional[float]
    x: Optional[np.ndarray]
    bound_active: bool = False
    iterations: int = 0
    inconclusive_steps: int = 0
    history: list = field(default_factory=list)
    best_margin: float = -np.inf


def bisect_min(lmi_family: Callable[[float], AffineLmi], lo: float, hi: float,
               tol: float = 1e-4, opts: Optional[SolverOptions] = None) -> BisectionResult:
    """Smallest ``gamma`` in ``[lo, hi]`` for which ``lmi_family(gamma)`` is feasible.

    The family must be monotone: feasible at ``gamma`` implies feasible at
    every larger value. Bisection is geometric while ``hi/lo > 2`` and
    arithmetic afterwards; it stops once ``hi - lo <= tol * (1 + |hi|)``.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    opts = opts or SolverOptions()
    out = BisectionResult(status=Status.INFEASIBLE, gamma=None, x=None)

    def probe(g):
        res = solve_feasibility(lmi_family(g), opts)
        out.history.append((g, res.status.value, res.margin))
        out.iterations += 1
        out.best_margin = max(out.best_margin, res.margin)
        return res

    top = probe(hi)
    if not top.feasible:
        out.status = top.status
        return out
    bottom = probe(lo)
    if bottom.feasible:
        out.status, out.gamma, out.x, out.bound_active = Status.FEASIBLE, lo, bottom.x, True
        return out
    if bottom.status is Status.MAX_ITER:
        out.inconclusive_steps += 1
    witness = top.x
    while hi - lo > tol * (1.0 + abs(hi)):
        mid = np.sqrt(lo * hi) if lo > 0 and hi / lo > 2.0 else 0.5 * (lo + hi)
        res = probe(mid)
        if res.feasible:
            hi, witness = mid, res.x
        else:
            if res.status is Status.MAX_ITER:
                out.inconclusive_steps += 1
            lo = mid
    out.status, out.gamma, out.x = Status.FEASIBLE, hi, witness
    return out
