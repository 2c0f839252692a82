"""Independent reference solutions used only by the test suite."""

import numpy as np


def cvxpy_gamma(p, margin=None):
    """Minimise gamma with cvxpy, building the LMI from scratch.

    Returns ``(gamma, P, G)`` or ``None`` when the solver reports infeasible.
    """
    import cvxpy as cp

    n, l, q = p.n, p.l, p.n_w + p.n_v
    eps = p.default_margin() if margin is None else margin
    g = cp.Variable()
    G = cp.Variable((n, l), nonneg=True)
    if p.is_ct:
        pv = cp.Variable(n)
        P = cp.diag(pv)
    else:
        P = cp.Variable((n, n), symmetric=True)
    I = np.eye(n)
    Lam = cp.hstack([P @ (p.Fphi_w + p.absB), np.zeros((n, p.n_v))]) \
        + cp.hstack([np.zeros((n, p.n_w)), G @ (p.Fpsi_v + p.D)])
    cons = []
    if p.is_ct:
        M = p.Abar + p.Fphi_x
        K = -p.C + p.Fpsi_x
        Om = M.T @ P + P @ M + K.T @ G.T + G @ K
        Gam = cp.bmat([[Om, Lam, I],
                       [Lam.T, -g * np.eye(q), np.zeros((q, n))],
                       [I, np.zeros((n, q)), -g * I]])
        GC = G @ p.C
        cons += [GC[i, j] <= 0 for i in range(n) for j in range(n) if i != j]
    else:
        Om = P @ (p.Abar + p.Fphi_x) + G @ (p.C + p.Fpsi_x)
        Gam = -cp.bmat([[P, Om, Lam, np.zeros((n, n))],
                        [Om.T, P, np.zeros((n, q)), I],
                        [Lam.T, np.zeros((q, n)), g * np.eye(q), np.zeros((q, n))],
                        [np.zeros((n, n)), I, np.zeros((n, q)), g * I]])
        cons += [P[i, j] <= 0 for i in range(n) for j in range(n) if i != j]
        cons += [G @ p.C >= 0]
    cons += [G @ p.D >= 0]
    Gs = (Gam + Gam.T) / 2
    k = Gs.shape[0]
    cons += [Gs << -eps * np.eye(k), P >> eps * np.eye(n)]
    prob = cp.Problem(cp.Minimize(g), cons)
    prob.solve(solver=cp.CLARABEL)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        return None
    Pv = np.diag(pv.value) if p.is_ct else P.value
    return float(g.value), Pv, G.value


def random_boxes(model, k, rng, max_frac=0.1, noise_dim=None):
    """``k`` random boxes ``(z_low, z_up)`` in the stacked (state, noise) space.

    State parts stay inside the model's operating domain; noise parts are
    sub-boxes of ``noise_dim`` (``model.W`` by default).
    """
    noise = model.W if noise_dim is None else noise_dim
    lows, ups = [], []
    span = model.domain.width
    while len(lows) < k:
        c = model.domain.low + span * (0.1 + 0.8 * rng.random(model.n))
        zc = model.from_base(c)
        r = rng.random(model.n) * max_frac * np.abs(model.from_base(model.domain.center + span / 2)
                                                     - model.from_base(model.domain.center)).clip(1e-3)
        xl, xu = zc - r, zc + r
        if not model.box_in_domain(xl, xu):
            continue
        a, b = noise.sample(rng), noise.sample(rng)
        lows.append(np.concatenate([xl, np.minimum(a, b)]))
        ups.append(np.concatenate([xu, np.maximum(a, b)]))
    return np.array(lows), np.array(ups)


def grid_extrema(mu, row, zl, zu, support, points=21):
    """Min and max of ``mu_row`` over a dense grid on the ``support`` coordinates."""
    axes = [np.linspace(zl[j], zu[j], points) for j in support]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, len(support)) if support else np.zeros((1, 0))
    Z = np.broadcast_to(zl, (mesh.shape[0], zl.size)).copy()
    Z[:, support] = mesh
    vals = mu(Z)[:, row]
    return vals.min(), vals.max()


def tightness_errors(mu, sel, Jlo, Jup, zl, zu, points=21):
    """Largest relative gap between the decomposition and brute-force extrema."""
    from interval_observer.decomp import tight_decomposition

    hi = tight_decomposition(mu, sel, zu, zl)
    lo = tight_decomposition(mu, sel, zl, zu)
    worst = 0.0
    for i in range(sel.shape[0]):
        support = [j for j in range(sel.shape[1]) if Jlo[i, j] != 0 or Jup[i, j] != 0]
        if len(support) > 3:
            raise ValueError("residual support too large for grid brute force")
        gmin, gmax = grid_extrema(mu, i, zl, zu, support, points)
        scale = 1.0 + max(abs(gmin), abs(gmax))
        worst = max(worst, abs(hi[i] - gmax) / scale, abs(lo[i] - gmin) / scale)
    return worst


def width_bound_excess(mu, sel, F, zl, zu):
    """Max of ``mu_d(zu, zl) - mu_d(zl, zu) - F (zu - zl)``, relative to its scale."""
    from interval_observer.decomp import tight_decomposition

    d = tight_decomposition(mu, sel, zu, zl) - tight_decomposition(mu, sel, zl, zu)
    bound = (zu - zl) @ F.T
    return float(np.max((d - bound) / (1.0 + np.abs(bound))))
