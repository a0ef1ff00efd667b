"""Central finite-difference gradient checking.

The checker only ever runs forward passes, so it stays independent of the
reverse-mode path it validates. Use double-precision tensors: with step 1e-5
the FD truncation error is far below the 1e-4 relative tolerance.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from .tensor import GradTape, Tensor


def finite_difference_grad(
    f: Callable[[], Tensor],
    param: Tensor,
    coords: Sequence[tuple],
    step: float = 1e-5,
) -> np.ndarray:
    """Central differences of the scalar ``f()`` w.r.t. selected coordinates."""
    grads = np.zeros(len(coords), dtype=np.float64)
    flat = param.data
    for n, idx in enumerate(coords):
        original = flat[idx]
        flat[idx] = original + step
        f_plus = f().item()
        flat[idx] = original - step
        f_minus = f().item()
        flat[idx] = original
        grads[n] = (f_plus - f_minus) / (2.0 * step)
    return grads


def check_gradients(
    f: Callable[[], Tensor],
    params: Sequence[Tensor],
    rtol: float = 1e-4,
    atol: float = 1e-7,
    step: float = 1e-5,
    max_coords_per_param: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Compare reverse-mode gradients of ``f()`` against central differences.

    ``f`` must rebuild its graph on every call (parameter data is perturbed
    in place between calls). When ``max_coords_per_param`` is set, a seeded
    random subset of coordinates is checked per parameter; otherwise all.
    Coordinates where both gradients are below ``atol`` pass outright (FD
    noise dominates there); everything else must meet ``rtol`` relative error.

    Returns the worst relative error seen. Raises AssertionError past rtol.
    """
    rng = rng or np.random.default_rng(0)
    for p in params:
        if p.dtype != np.float64:
            raise AssertionError("gradient checks must run in double precision")
        p.zero_grad()
    with GradTape() as tape:
        loss = f()
    tape.backward(loss)
    analytic = [np.array(p.grad, dtype=np.float64, copy=True) for p in params]
    for p in params:
        p.zero_grad()

    worst = 0.0
    for p, full in zip(params, analytic):
        n_elem = p.data.size
        all_coords = [np.unravel_index(i, p.shape) for i in range(n_elem)]
        if max_coords_per_param is not None and n_elem > max_coords_per_param:
            pick = rng.choice(n_elem, size=max_coords_per_param, replace=False)
            coords = [all_coords[i] for i in sorted(pick)]
        else:
            coords = all_coords
        numeric = finite_difference_grad(f, p, coords, step=step)
        for idx, num in zip(coords, numeric):
            ana = full[idx]
            if abs(ana - num) <= atol:
                continue
            rel = abs(ana - num) / max(abs(ana), abs(num))
            worst = max(worst, rel)
            if rel > rtol:
                raise AssertionError(
                    f"gradient mismatch at {tuple(int(i) for i in idx)} of {tuple(p.shape)}: "
                    f"analytic {ana:.8g} vs numeric {num:.8g} (rel {rel:.3g})"
                )
    return worst
