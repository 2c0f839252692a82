"""H-infinity gain synthesis for the interval observer.

The LMI ``Gamma(P, G, gamma) < 0`` is affine in ``(P, G)`` for fixed
``gamma``, so each bisection step is a pure feasibility problem for
:mod:`interval_observer.sdp`. The gain is recovered as ``L = P^{-1} G``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import matops as mo
from .decomp import JssDecomposition, WidthBounds
from .model import TimeType
from .sdp import AffineLmi, BisectionResult, SolverOptions, Status, bisect_min, eig_sym


@dataclass(frozen=True, eq=False)
class SynthesisProblem:
    """Data of the gain LMI.

    ``Abar`` holds the Metzler part of ``A`` for CT problems and ``|A|`` for
    DT problems.
    """

    time_type: TimeType
    Abar: np.ndarray
    C: np.ndarray
    absB: np.ndarray
    D: np.ndarray
    Fphi_x: np.ndarray
    Fphi_w: np.ndarray
    Fpsi_x: np.ndarray
    Fpsi_v: np.ndarray
    A: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "time_type", TimeType(self.time_type))
        n, l = self.n, self.l
        shapes = {
            "Abar": (n, n), "C": (l, n), "absB": (n, self.n_w), "D": (l, self.n_v),
            "Fphi_x": (n, n), "Fphi_w": (n, self.n_w), "Fpsi_x": (l, n), "Fpsi_v": (l, self.n_v),
        }
        for name, shape in shapes.items():
            M = np.asarray(getattr(self, name), float)
            if M.shape != shape:
                raise ValueError(f"{name} has shape {M.shape}, expected {shape}")
            object.__setattr__(self, name, M)
        for name in ("Fphi_x", "Fphi_w", "Fpsi_x", "Fpsi_v", "absB"):
            if np.any(getattr(self, name) < 0):
                raise ValueError(f"{name} must be entrywise non-negative")

    @property
    def n(self) -> int:
        return np.shape(self.Abar)[0]

    @property
    def l(self) -> int:
        return np.shape(self.C)[0]

    @property
    def n_w(self) -> int:
        return np.shape(self.absB)[1]

    @property
    def n_v(self) -> int:
        return np.shape(self.D)[1]

    @property
    def is_ct(self) -> bool:
        return self.time_type is TimeType.CT

    def data_norm(self) -> float:
        mats = (self.Abar, self.C, self.absB, self.D, self.Fphi_x, self.Fphi_w, self.Fpsi_x, self.Fpsi_v)
        return max(float(np.max(np.abs(M))) for M in mats)

    def default_margin(self) -> float:
        return 1e-6 * (1.0 + self.data_norm())

    def to_dict(self) -> dict:
        d = {"time_type": self.time_type.value}
        for name in ("Abar", "C", "absB", "D", "Fphi_x", "Fphi_w", "Fpsi_x", "Fpsi_v"):
            d[name] = np.asarray(getattr(self, name)).tolist()
        if self.A is not None:
            d["A"] = np.asarray(self.A).tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SynthesisProblem":
        kw = {k: (np.array(v, float) if k != "time_type" else v) for k, v in d.items()}
        return cls(**kw)


def build_problem(dec: JssDecomposition, wb: WidthBounds, time_type) -> SynthesisProblem:
    time_type = TimeType(time_type)
    Abar = mo.metzler_part(dec.A) if time_type is TimeType.CT else mo.abs_matrix(dec.A)
    return SynthesisProblem(
        time_type=time_type, Abar=Abar, C=dec.C, absB=mo.abs_matrix(dec.B), D=dec.D,
        Fphi_x=wb.Fphi_x, Fphi_w=wb.Fphi_w, Fpsi_x=wb.Fpsi_x, Fpsi_v=wb.Fpsi_v, A=dec.A,
    )


def _lambda_block(p: SynthesisProblem, P, G) -> np.ndarray:
    n = p.n
    left = P @ (p.Fphi_w + p.absB)
    right = G @ (p.Fpsi_v + p.D)
    return np.hstack([left, np.zeros((n, p.n_v))]) + np.hstack([np.zeros((n, p.n_w)), right])


def omega_block(p: SynthesisProblem, P, G) -> np.ndarray:
    P = np.asarray(P, float)
    G = np.asarray(G, float)
    if p.is_ct:
        M = p.Abar + p.Fphi_x
        K = -p.C + p.Fpsi_x
        return M.T @ P + P @ M + K.T @ G.T + G @ K
    return P @ (p.Abar + p.Fphi_x) + G @ (p.C + p.Fpsi_x)


def assemble_gamma_lmi(p: SynthesisProblem, P, G, gamma: float) -> np.ndarray:
    """The matrix that must be negative definite.

    CT::

        [[Omega,   Lambda,    I       ],
         [Lambda', -gamma I,  0       ],
         [I,       0,         -gamma I]]

    DT::

        -[[P,       Omega, Lambda,   0      ],
          [Omega',  P,     0,        I      ],
          [Lambda', 0,     gamma I,  0      ],
          [0,       I,     0,        gamma I]]
    """
    P = np.asarray(P, float)
    G = np.asarray(G, float)
    n, q = p.n, p.n_w + p.n_v
    if P.shape != (n, n) or G.shape != (n, p.l):
        raise ValueError(f"P must be {n}x{n} and G {n}x{p.l}")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    Om = omega_block(p, P, G)
    Lam = _lambda_block(p, P, G)
    I = np.eye(n)
    Zqn, Znq = np.zeros((q, n)), np.zeros((n, q))
    if p.is_ct:
        return np.block([
            [Om, Lam, I],
            [Lam.T, -gamma * np.eye(q), Zqn],
            [I, Znq, -gamma * I],
        ])
    Znn = np.zeros((n, n))
    return -np.block([
        [P, Om, Lam, Znn],
        [Om.T, P, Znq, I],
        [Lam.T, Zqn, gamma * np.eye(q), Zqn],
        [Znn, I, Znq, gamma * I],
    ])


# --------------------------------------------------------------------------
# decision-variable layout


def _n_vars(p: SynthesisProblem) -> tuple[int, int]:
    n = p.n
    np_ = n if p.is_ct else n * (n + 1) // 2
    return np_, n * p.l


def unpack(p: SynthesisProblem, x) -> tuple[np.ndarray, np.ndarray]:
    """Decision vector -> ``(P, G)``; CT uses a diagonal ``P``."""
    n, l = p.n, p.l
    x = np.asarray(x, float)
    k, _ = _n_vars(p)
    if p.is_ct:
        P = np.diag(x[:n])
    else:
        P = np.zeros((n, n))
        P[np.triu_indices(n)] = x[:k]
        P = P + np.triu(P, 1).T
    return P, x[k:].reshape(n, l)


def _pack(p: SynthesisProblem, P, G) -> np.ndarray:
    P = np.asarray(P, float)
    head = np.diag(P) if p.is_ct else P[np.triu_indices(p.n)]
    return np.concatenate([head, np.asarray(G, float).ravel()])


def _structural_rows(p: SynthesisProblem) -> tuple[np.ndarray, np.ndarray]:
    """Linear constraints on G as ``A x <= 0``."""
    n, l = p.n, p.l
    kP, kG = _n_vars(p)
    rows = []

    def g_row(coeffs_by_k, i):
        r = np.zeros(kP + kG)
        r[kP + i * l: kP + (i + 1) * l] = coeffs_by_k
        return r

    for i in range(n):
        for j in range(n):
            if p.is_ct:
                if i != j:
                    rows.append(g_row(p.C[:, j], i))      # (GC)_ij <= 0
            else:
                rows.append(g_row(-p.C[:, j], i))         # (GC)_ij >= 0
        for j in range(p.n_v):
            rows.append(g_row(-p.D[:, j], i))             # (GD)_ij >= 0
    A = np.array(rows) if rows else np.zeros((0, kP + kG))
    return A, np.zeros(A.shape[0])


def _bounds(p: SynthesisProblem, bound: float) -> tuple[np.ndarray, np.ndarray]:
    n = p.n
    kP, kG = _n_vars(p)
    lb = np.zeros(kP + kG)
    ub = np.full(kP + kG, bound)
    if not p.is_ct:
        iu = np.triu_indices(n)
        off = iu[0] != iu[1]
        lb[:kP][off] = -bound                             # -P Metzler
        ub[:kP][off] = 0.0
    return lb, ub


def stacked_lmi(p: SynthesisProblem, gamma: float, margin: float, bound: float = 1e4) -> AffineLmi:
    """``diag(Gamma, -P) <= -margin I`` in canonical affine form."""
    kP, kG = _n_vars(p)
    m = kP + kG

    def F(x):
        P, G = unpack(p, x)
        Gm = assemble_gamma_lmi(p, P, G, gamma)
        return np.block([[Gm, np.zeros((Gm.shape[0], p.n))],
                         [np.zeros((p.n, Gm.shape[0])), -P]])

    F0 = F(np.zeros(m))
    Fs = np.stack([F(np.eye(m)[k]) - F0 for k in range(m)])
    lb, ub = _bounds(p, bound)
    A, b = _structural_rows(p)
    return AffineLmi(F0=F0, Fs=Fs, delta=margin, lb=lb, ub=ub, A_ineq=A, b_ineq=b)


# --------------------------------------------------------------------------
# certificates


@dataclass
class CertificateReport:
    checks: dict = field(default_factory=dict)   # name -> (passed, value)

    def add(self, name: str, passed: bool, value: float):
        self.checks[name] = (bool(passed), float(value))

    @property
    def passed(self) -> bool:
        return all(ok for ok, _ in self.checks.values())

    def failures(self) -> list:
        return [k for k, (ok, _) in self.checks.items() if not ok]

    def lines(self) -> list:
        return [f"{'PASS' if ok else 'FAIL'} {name}: {val:.6g}" for name, (ok, val) in self.checks.items()]


def _min_offdiag(M) -> float:
    M = np.asarray(M, float)
    off = ~np.eye(M.shape[0], dtype=bool)
    return float(np.min(M[off])) if off.any() else 0.0


def verify_certificate(p: SynthesisProblem, P, G, gamma: float, L=None,
                       margin: float = 0.0) -> CertificateReport:
    """Re-check every synthesis condition from the raw matrices.

    Uses only dense eigenvalues and the entrywise predicates in
    :mod:`matops`; nothing is taken from the solver.
    """
    P = np.asarray(P, float)
    G = np.asarray(G, float)
    L = np.linalg.solve(P, G) if L is None else np.asarray(L, float)
    scale = 1.0 + float(np.max(np.abs(G), initial=0.0)) + float(np.max(np.abs(L), initial=0.0))
    tol = 1e-10 * scale
    rep = CertificateReport()
    lam = float(eig_sym(assemble_gamma_lmi(p, P, G, gamma))[-1])
    rep.add("lambda_max(Gamma) < -margin" if margin else "lambda_max(Gamma) < 0", lam < -margin, lam)
    rep.add("gamma > 0", gamma > 0, gamma)
    pmin = float(eig_sym(P)[0])
    rep.add("P > 0", pmin > 0, pmin)
    rep.add("G >= 0", mo.is_nonnegative(G, tol), float(np.min(G)))
    GD = G @ p.D
    rep.add("GD >= 0", mo.is_nonnegative(GD, tol), float(np.min(GD)))
    rep.add("L >= 0", mo.is_nonnegative(L, tol), float(np.min(L)))
    GC = G @ p.C
    if p.is_ct:
        offP = float(np.max(np.abs(P - np.diag(np.diag(P)))))
        rep.add("P diagonal", offP <= tol, offP)
        rep.add("-GC Metzler", mo.is_metzler(-GC, tol), _min_offdiag(-GC))
        comp = p.Abar - L @ p.C + p.Fphi_x + L @ p.Fpsi_x
        rep.add("comparison matrix Metzler", mo.is_metzler(comp, tol), _min_offdiag(comp))
    else:
        rep.add("-P Metzler", mo.is_metzler(-P, tol), _min_offdiag(-P))
        Pinv = np.linalg.inv(P)
        rep.add("P^-1 >= 0", mo.is_nonnegative(Pinv, tol), float(np.min(Pinv)))
        rep.add("GC >= 0", mo.is_nonnegative(GC, tol), float(np.min(GC)))
        LC = L @ p.C
        rep.add("LC >= 0", mo.is_nonnegative(LC, tol), float(np.min(LC)))
        LD = L @ p.D
        rep.add("LD >= 0", mo.is_nonnegative(LD, tol), float(np.min(LD)))
        comp = p.Abar + LC + p.Fphi_x + L @ p.Fpsi_x
        rep.add("comparison matrix >= 0", mo.is_nonnegative(comp, tol), float(np.min(comp)))
    return rep


# --------------------------------------------------------------------------
# synthesis


@dataclass
class SynthesisOptions:
    margin: Optional[float] = None       # default: 1e-6 * (1 + max |data|)
    gamma_lo: float = 1e-4
    gamma_hi: float = 1e6
    tol: float = 1e-4                    # relative bisection tolerance
    var_bound: float = 1e4               # box on every entry of P and G
    max_iter: int = 400
    restarts: int = 0

    def solver(self, x_init=None) -> SolverOptions:
        return SolverOptions(max_iter=self.max_iter, restarts=self.restarts, x_init=x_init)


@dataclass
class ObserverGain:
    L: np.ndarray
    P: np.ndarray
    G: np.ndarray
    gamma: float
    time_type: TimeType
    margin: float
    certificate: CertificateReport

    def to_dict(self) -> dict:
        return {
            "time_type": TimeType(self.time_type).value,
            "gamma": self.gamma,
            "margin": self.margin,
            "L": self.L.tolist(), "P": self.P.tolist(), "G": self.G.tolist(),
            "residuals": {k: v for k, (_, v) in self.certificate.checks.items()},
        }

    def to_json(self) -> str:
        # repr-based float formatting round-trips exactly
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "ObserverGain":
        rep = CertificateReport()
        for k, v in d.get("residuals", {}).items():
            rep.add(k, True, v)
        return cls(L=np.array(d["L"], float), P=np.array(d["P"], float), G=np.array(d["G"], float),
                   gamma=float(d["gamma"]), time_type=TimeType(d["time_type"]),
                   margin=float(d.get("margin", 0.0)), certificate=rep)

    @classmethod
    def zero(cls, n: int, l: int, time_type) -> "ObserverGain":
        """``L = 0`` with no certificate, for open-loop framers."""
        return cls(L=np.zeros((n, l)), P=np.eye(n), G=np.zeros((n, l)), gamma=np.inf,
                   time_type=TimeType(time_type), margin=0.0, certificate=CertificateReport())


@dataclass
class SynthesisResult:
    status: Status
    gain: Optional[ObserverGain]
    best_margin: float
    bisection: BisectionResult

    @property
    def feasible(self) -> bool:
        return self.status is Status.FEASIBLE

    @property
    def message(self) -> str:
        if self.feasible:
            return f"feasible, gamma* = {self.gain.gamma:.6g}"
        if self.status is Status.INFEASIBLE:
            return (f"LMIs infeasible (best margin {self.best_margin:.3g}); "
                    "try a coordinate transformation z = T x")
        return f"inconclusive: solver iteration limit reached (best margin {self.best_margin:.3g})"


def synthesize(p: SynthesisProblem, opts: Optional[SynthesisOptions] = None) -> SynthesisResult:
    """Minimise ``gamma`` subject to ``Gamma < 0`` and the structural constraints."""
    opts = opts or SynthesisOptions()
    margin = p.default_margin() if opts.margin is None else opts.margin
    x_init = _pack(p, np.eye(p.n), np.zeros((p.n, p.l)))
    sopts = opts.solver(x_init)
    bis = bisect_min(lambda g: stacked_lmi(p, g, margin, opts.var_bound),
                     opts.gamma_lo, opts.gamma_hi, opts.tol, sopts)
    if bis.status is not Status.FEASIBLE:
        return SynthesisResult(bis.status, None, bis.best_margin, bis)
    P, G = unpack(p, bis.x)
    L = np.linalg.solve(P, G)
    cert = verify_certificate(p, P, G, bis.gamma, L)
    gain = ObserverGain(L=L, P=P, G=G, gamma=float(bis.gamma), time_type=p.time_type,
                        margin=margin, certificate=cert)
    return SynthesisResult(Status.FEASIBLE, gain, bis.best_margin, bis)
