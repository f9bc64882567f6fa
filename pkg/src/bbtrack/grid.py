"""MAC staggered grid on the unit square and the discrete field types.

Layout conventions (used everywhere in the package):

* cell (i, j) is the square [i*hx, (i+1)*hx] x [j*hy, (j+1)*hy];
* ``u_faces[i, j]`` is the x-velocity on the vertical face x = i*hx of row j,
  shape (nx+1, ny);
* ``v_faces[i, j]`` is the y-velocity on the horizontal face y = j*hy of
  column i, shape (nx, ny+1).

The wall-normal faces (i = 0, nx for u; j = 0, ny for v) are identically
zero.  Internally the solvers work on a flat vector that packs the interior
faces, u first then v, both in C order.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatch


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    T: float = 1.0
    nt: int = 1

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValueError("cell counts must be integers")
        if self.nx < 4 or self.ny < 4:
            raise ValueError(f"need nx, ny >= 4, got {self.nx}x{self.ny}")
        if self.nt < 1:
            raise ValueError(f"need nt >= 1, got {self.nt}")
        if not self.T > 0:
            raise ValueError(f"need T > 0, got {self.T}")

    @property
    def hx(self):
        return 1.0 / self.nx

    @property
    def hy(self):
        return 1.0 / self.ny

    @property
    def dt(self):
        return self.T / self.nt

    @property
    def cell_area(self):
        return self.hx * self.hy

    @property
    def n_u(self):
        """Number of interior u-faces."""
        return (self.nx - 1) * self.ny

    @property
    def n_v(self):
        return self.nx * (self.ny - 1)

    @property
    def n_dof(self):
        return self.n_u + self.n_v

    def times(self):
        return np.linspace(0.0, self.T, self.nt + 1)

    def trap_weights(self):
        """Trapezoid weights in time (without the factor dt)."""
        w = np.ones(self.nt + 1)
        w[0] = w[-1] = 0.5
        return w

    def cell_centers(self):
        x = (np.arange(self.nx) + 0.5) * self.hx
        y = (np.arange(self.ny) + 0.5) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    def u_face_coords(self):
        x = np.arange(self.nx + 1) * self.hx
        y = (np.arange(self.ny) + 0.5) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    def v_face_coords(self):
        x = (np.arange(self.nx) + 0.5) * self.hx
        y = np.arange(self.ny + 1) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    def corner_coords(self):
        x = np.arange(self.nx + 1) * self.hx
        y = np.arange(self.ny + 1) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    def same_space(self, other):
        return self.nx == other.nx and self.ny == other.ny

    def with_time(self, T=None, nt=None):
        return Grid(self.nx, self.ny, self.T if T is None else T, self.nt if nt is None else nt)


def check_same_grid(*objs):
    g0 = objs[0].grid
    for o in objs[1:]:
        if not g0.same_space(o.grid):
            raise GridMismatch(f"grid {g0.nx}x{g0.ny} vs {o.grid.nx}x{o.grid.ny}")


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != (self.grid.nx, self.grid.ny):
            raise GridMismatch(f"scalar field shape {v.shape} does not match grid")
        object.__setattr__(self, "values", v)

    def mean(self):
        return float(self.values.mean())


def pack(grid, u_faces, v_faces):
    """Interior faces of (u_faces, v_faces) as one flat vector."""
    return np.concatenate([u_faces[1:grid.nx, :].ravel(), v_faces[:, 1:grid.ny].ravel()])


def unpack(grid, vec):
    nx, ny = grid.nx, grid.ny
    u = np.zeros((nx + 1, ny))
    v = np.zeros((nx, ny + 1))
    u[1:nx, :] = vec[:grid.n_u].reshape(nx - 1, ny)
    v[:, 1:ny] = vec[grid.n_u:].reshape(nx, ny - 1)
    return u, v


@dataclass(frozen=True, eq=False)
class StaggeredField:
    grid: Grid
    u_faces: np.ndarray
    v_faces: np.ndarray

    # numpy scalars defer to __rmul__ instead of broadcasting
    __array_ufunc__ = None

    def __post_init__(self):
        g = self.grid
        u = _frozen(self.u_faces)
        v = _frozen(self.v_faces)
        if u.shape != (g.nx + 1, g.ny) or v.shape != (g.nx, g.ny + 1):
            raise GridMismatch(f"face arrays {u.shape}, {v.shape} do not match grid {g.nx}x{g.ny}")
        if np.any(u[0] != 0) or np.any(u[-1] != 0) or np.any(v[:, 0] != 0) or np.any(v[:, -1] != 0):
            raise ValueError("wall-normal face values must be exactly zero")
        object.__setattr__(self, "u_faces", u)
        object.__setattr__(self, "v_faces", v)

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros((grid.nx + 1, grid.ny)), np.zeros((grid.nx, grid.ny + 1)))

    @classmethod
    def from_vec(cls, grid, vec):
        u, v = unpack(grid, vec)
        return cls(grid, u, v)

    @classmethod
    def from_functions(cls, grid, fu, fv):
        """Sample fu(x, y), fv(x, y) on interior faces; wall-normal faces get 0."""
        xu, yu = grid.u_face_coords()
        xv, yv = grid.v_face_coords()
        u = np.asarray(fu(xu, yu), dtype=float) * np.ones_like(xu)
        v = np.asarray(fv(xv, yv), dtype=float) * np.ones_like(xv)
        u[0] = u[-1] = 0.0
        v[:, 0] = v[:, -1] = 0.0
        return cls(grid, u, v)

    def to_vec(self):
        return pack(self.grid, self.u_faces, self.v_faces)

    def _combine(self, other, op):
        check_same_grid(self, other)
        return StaggeredField(self.grid, op(self.u_faces, other.u_faces), op(self.v_faces, other.v_faces))

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, c):
        return StaggeredField(self.grid, c * self.u_faces, c * self.v_faces)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def cell_average(self):
        """Face values averaged to cell centers, shape (2, nx, ny)."""
        uc = 0.5 * (self.u_faces[:-1, :] + self.u_faces[1:, :])
        vc = 0.5 * (self.v_faces[:, :-1] + self.v_faces[:, 1:])
        return np.stack([uc, vc])

    def inner(self, other):
        """Discrete L2 inner product over faces (all face weights hx*hy)."""
        check_same_grid(self, other)
        return self.grid.cell_area * (np.vdot(self.u_faces, other.u_faces) + np.vdot(self.v_faces, other.v_faces))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """nt+1 snapshots at times k*T/nt, stored as packed interior-face vectors."""

    grid: Grid
    data: np.ndarray
    info: dict = field(default_factory=dict, compare=False)

    # numpy scalars defer to __rmul__ instead of broadcasting
    __array_ufunc__ = None

    def __post_init__(self):
        d = _frozen(self.data)
        g = self.grid
        if d.shape != (g.nt + 1, g.n_dof):
            raise GridMismatch(f"trajectory data shape {d.shape}, expected {(g.nt + 1, g.n_dof)}")
        object.__setattr__(self, "data", d)

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros((grid.nt + 1, grid.n_dof)))

    @classmethod
    def from_snapshots(cls, snapshots):
        snapshots = list(snapshots)
        g = snapshots[0].grid
        if len(snapshots) != g.nt + 1:
            raise GridMismatch(f"need {g.nt + 1} snapshots, got {len(snapshots)}")
        check_same_grid(*snapshots)
        return cls(g, np.stack([s.to_vec() for s in snapshots]))

    @classmethod
    def constant(cls, grid, f):
        return cls(grid, np.tile(f.to_vec(), (grid.nt + 1, 1)))

    def __len__(self):
        return self.data.shape[0]

    def __getitem__(self, k):
        return StaggeredField.from_vec(self.grid, self.data[k])

    @property
    def snapshots(self):
        return [self[k] for k in range(len(self))]

    def _check(self, other):
        check_same_grid(self, other)
        if self.data.shape != other.data.shape:
            raise GridMismatch("trajectories have different numbers of time levels")

    def __add__(self, other):
        self._check(other)
        return Trajectory(self.grid, self.data + other.data)

    def __sub__(self, other):
        self._check(other)
        return Trajectory(self.grid, self.data - other.data)

    def __mul__(self, c):
        return Trajectory(self.grid, c * self.data)

    __rmul__ = __mul__

    def inner(self, other):
        """Space-time L2 pairing with trapezoid weights in time."""
        self._check(other)
        g = self.grid
        per_level = np.einsum("kn,kn->k", self.data, other.data)
        return g.dt * g.cell_area * float(g.trap_weights() @ per_level)


@dataclass(frozen=True, eq=False)
class ForceSeries:
    """Face-valued forcing, one field per time interval (t_n, t_{n+1}], n = 0..nt-1."""

    grid: Grid
    data: np.ndarray

    # numpy scalars defer to __rmul__ instead of broadcasting
    __array_ufunc__ = None

    def __post_init__(self):
        d = _frozen(self.data)
        g = self.grid
        if d.shape != (g.nt, g.n_dof):
            raise GridMismatch(f"force data shape {d.shape}, expected {(g.nt, g.n_dof)}")
        object.__setattr__(self, "data", d)

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros((grid.nt, grid.n_dof)))

    def __add__(self, other):
        return ForceSeries(self.grid, self.data + other.data)

    def __sub__(self, other):
        return ForceSeries(self.grid, self.data - other.data)

    def __mul__(self, c):
        return ForceSeries(self.grid, c * self.data)

    __rmul__ = __mul__

    def inner(self, other):
        g = self.grid
        return g.dt * g.cell_area * float(np.vdot(self.data, other.data))
