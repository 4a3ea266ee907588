from __future__ import annotations

import numpy as np


def contract(psi: np.ndarray, gate: np.ndarray, wires, dim: int, batched_gate: bool = False) -> np.ndarray:
    """Apply ``gate`` to the subsystems ``wires`` of a batched state tensor.

    ``psi`` has shape ``(B, dim, ..., dim)``. ``gate`` is ``(dim**k, dim**k)``
    or, when ``batched_gate``, ``(B, dim**k, dim**k)``.
    """
    k = len(wires)
    axes = [w + 1 for w in wires]
    dest = list(range(psi.ndim - k, psi.ndim))
    moved = np.moveaxis(psi, axes, dest)
    shape = moved.shape
    flat = moved.reshape(shape[0], -1, dim**k)
    if batched_gate:
        out = np.einsum("bij,brj->bri", gate, flat)
    else:
        out = flat @ gate.T
    return np.moveaxis(out.reshape(shape), dest, axes)
