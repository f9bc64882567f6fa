"""Maps between cell-centered controls and face-valued forces.

A control component lives at cell centers; the force it induces on an
interior face is the average of the two adjacent cells.  The transpose maps
face fields back to cells and, since cell and face weights agree, equals the
L2 adjoint.
"""

import numpy as np

from .grid import ForceSeries


def cells_to_faces(nx, ny, c):
    """c has shape (..., 2, nx, ny); returns packed face vectors (..., n_dof)."""
    fu = 0.5 * (c[..., 0, :-1, :] + c[..., 0, 1:, :])
    fv = 0.5 * (c[..., 1, :, :-1] + c[..., 1, :, 1:])
    lead = c.shape[:-3]
    return np.concatenate([fu.reshape(lead + (-1,)), fv.reshape(lead + (-1,))], axis=-1)


def faces_to_cells(nx, ny, vec):
    """Transpose of :func:`cells_to_faces`; vec has shape (..., n_dof)."""
    n_u = (nx - 1) * ny
    lead = vec.shape[:-1]
    fu = vec[..., :n_u].reshape(lead + (nx - 1, ny))
    fv = vec[..., n_u:].reshape(lead + (nx, ny - 1))
    out = np.zeros(lead + (2, nx, ny))
    out[..., 0, :-1, :] += 0.5 * fu
    out[..., 0, 1:, :] += 0.5 * fu
    out[..., 1, :, :-1] += 0.5 * fv
    out[..., 1, :, 1:] += 0.5 * fv
    return out


def as_force(grid, u):
    """Accept a ForceSeries, a Control, or a raw (nt, 2, nx, ny) array."""
    if isinstance(u, ForceSeries):
        return u
    if u is None:
        return ForceSeries.zeros(grid)
    values = getattr(u, "values", u)
    values = np.asarray(values, dtype=float)
    return ForceSeries(grid, cells_to_faces(grid.nx, grid.ny, values))
