"""Tight decomposition functions on boxes, checked by brute force.

For a residual whose Jacobian entries keep their sign, evaluating at the
right box vertex gives the exact max and min over the box. Compare with a
dense grid, and show the width bound used by the synthesis LMIs.

    python3 demos/decomposition_tightness.py
"""

# %%
import numpy as np

from interval_observer.decomp import decompose_model, tight_decomposition
from interval_observer.model import ct_pendulum

model = ct_pendulum()
dec, wb = decompose_model(model)
rng = np.random.default_rng(0)

# %% A random box in (x, w) space
x0 = model.domain.sample(rng)
zl = np.concatenate([x0 - 0.5, model.W.low])
zu = np.concatenate([x0 + 0.5, model.W.up])
hi = tight_decomposition(dec.phi, dec.sel_phi, zu, zl)
lo = tight_decomposition(dec.phi, dec.sel_phi, zl, zu)

# %% Brute force over x1, x2 (phi does not depend on the other coordinates)
g = np.linspace(0, 1, 41)
Z = np.tile(zl, (g.size ** 2, 1))
Z[:, 0] = np.repeat(zl[0] + g * (zu[0] - zl[0]), g.size)
Z[:, 1] = np.tile(zl[1] + g * (zu[1] - zl[1]), g.size)
vals = dec.phi(Z)
print("decomposition max:", hi, "\ngrid max:         ", vals.max(0))
print("decomposition min:", lo, "\ngrid min:         ", vals.min(0))

# %% Width bound: mu_d(up, low) - mu_d(low, up) <= F (up - low)
F = np.hstack([wb.Fphi_x, wb.Fphi_w])
print("observed width:", hi - lo)
print("bound F (zu - zl):", F @ (zu - zl))
