"""Discrete operators on packed MAC vectors.

Everything here acts on the flat interior-face vectors described in
:mod:`bbtrack.grid`.  Because every face and every cell carries the same
weight hx*hy, Euclidean transposes of these operators coincide with their
discrete L2 adjoints, which is what makes the adjoint solver exact.

Poisson and Helmholtz problems are diagonalized by fast sine/cosine
transforms: the Neumann pressure problem by DCT-II in both directions, the
no-slip vector Laplacian (tangential ghosts by odd reflection) by DST-I
across the face-normal direction and DST-II along it.
"""

import functools

import numpy as np
import scipy.fft as sfft
import scipy.sparse as sp

from .errors import PoissonSolveFailure

POISSON_TOL = 1e-10


def _eig_1d(n, h, shift):
    # eigenvalues of the 1D second difference: -(4/h^2) sin^2(pi k / 2n)
    k = np.arange(n) + shift
    return -4.0 / h**2 * np.sin(np.pi * k / (2 * n)) ** 2


class MacOperators:
    def __init__(self, nx, ny):
        self.nx, self.ny = nx, ny
        self.hx, self.hy = 1.0 / nx, 1.0 / ny
        self.n_u = (nx - 1) * ny
        self.n_v = nx * (ny - 1)
        self.n = self.n_u + self.n_v
        # Neumann pressure eigenvalues (DCT-II, k = 0..n-1)
        lam = _eig_1d(nx, self.hx, 0)[:, None] + _eig_1d(ny, self.hy, 0)[None, :]
        lam[0, 0] = 1.0
        self._inv_lam_n = 1.0 / lam
        self._inv_lam_n[0, 0] = 0.0
        # vector Laplacian eigenvalues
        # u-faces: DST-I along x (length nx-1, k = 1..nx-1), DST-II along y (k = 1..ny)
        self._lam_u = _eig_1d(nx, self.hx, 1)[: nx - 1, None] + _eig_1d(ny, self.hy, 1)[None, :]
        # v-faces: DST-II along x (k = 1..nx), DST-I along y (k = 1..ny-1)
        self._lam_v = _eig_1d(nx, self.hx, 1)[:, None] + _eig_1d(ny, self.hy, 1)[None, : ny - 1]
        self._build_convection()

    # ---- packing helpers -------------------------------------------------
    def split(self, vec):
        return (vec[: self.n_u].reshape(self.nx - 1, self.ny),
                vec[self.n_u:].reshape(self.nx, self.ny - 1))

    def join(self, ub, vb):
        return np.concatenate([ub.ravel(), vb.ravel()])

    # ---- div / grad --------------------------------------------------------
    def div(self, vec):
        ub, vb = self.split(vec)
        d = np.zeros((self.nx, self.ny))
        d[:-1, :] += ub / self.hx
        d[1:, :] -= ub / self.hx
        d[:, :-1] += vb / self.hy
        d[:, 1:] -= vb / self.hy
        return d

    def grad(self, phi):
        gu = (phi[1:, :] - phi[:-1, :]) / self.hx
        gv = (phi[:, 1:] - phi[:, :-1]) / self.hy
        return self.join(gu, gv)

    def neumann_laplacian(self, phi):
        return self.div(self.grad(phi))

    # ---- pressure Poisson ---------------------------------------------------
    def poisson_fft(self, rhs):
        """Zero-mean solution of div(grad(phi)) = rhs - mean(rhs)."""
        r = sfft.dctn(rhs, type=2, norm="ortho")
        return sfft.idctn(r * self._inv_lam_n, type=2, norm="ortho")

    def poisson_cg(self, rhs, tol=POISSON_TOL, maxiter=None):
        """Conjugate gradients on -L_N phi = -rhs, mean removed every iteration."""
        if maxiter is None:
            maxiter = 20 * (self.nx + self.ny)
        b = -(rhs - rhs.mean())
        bnorm = np.linalg.norm(b)
        phi = np.zeros_like(b)
        if bnorm == 0.0:
            return phi
        r = b.copy()
        p = r.copy()
        rr = np.vdot(r, r)
        for _ in range(maxiter):
            ap = -self.neumann_laplacian(p)
            alpha = rr / np.vdot(p, ap)
            phi += alpha * p
            phi -= phi.mean()
            r -= alpha * ap
            r -= r.mean()
            rr_new = np.vdot(r, r)
            if np.sqrt(rr_new) <= tol * bnorm:
                return phi
            p = r + (rr_new / rr) * p
            rr = rr_new
        raise PoissonSolveFailure(
            f"CG residual {np.sqrt(rr) / bnorm:.3e} above {tol:g} after {maxiter} iterations")

    def project(self, vec, method="fft"):
        """Leray projection: returns (P vec, phi) with vec = P vec + grad(phi)."""
        d = self.div(vec)
        phi = self.poisson_fft(d) if method == "fft" else self.poisson_cg(d)
        return vec - self.grad(phi), phi

    def P(self, vec):
        d = self.div(vec)
        return vec - self.grad(self.poisson_fft(d))

    # ---- vector Laplacian (no-slip, odd ghost reflection) -------------------
    def laplacian(self, vec):
        ub, vb = self.split(vec)
        hx2, hy2 = self.hx**2, self.hy**2
        # u block: walls in x are the zero normal faces, ghosts in y
        up = np.pad(ub, ((1, 1), (0, 0)))
        uy = np.concatenate([-ub[:, :1], ub, -ub[:, -1:]], axis=1)
        lu = (up[2:] - 2 * ub + up[:-2]) / hx2 + (uy[:, 2:] - 2 * ub + uy[:, :-2]) / hy2
        vp = np.pad(vb, ((0, 0), (1, 1)))
        vx = np.concatenate([-vb[:1], vb, -vb[-1:]], axis=0)
        lv = (vx[2:] - 2 * vb + vx[:-2]) / hx2 + (vp[:, 2:] - 2 * vb + vp[:, :-2]) / hy2
        return self.join(lu, lv)

    def helmholtz_solve(self, rhs, alpha, beta):
        """Solve (alpha I - beta L) x = rhs exactly (alpha >= 0, beta > 0)."""
        ub, vb = self.split(rhs)
        uh = sfft.dst(sfft.dst(ub, type=1, axis=0, norm="ortho"), type=2, axis=1, norm="ortho")
        uh /= alpha - beta * self._lam_u
        ux = sfft.idst(sfft.idst(uh, type=2, axis=1, norm="ortho"), type=1, axis=0, norm="ortho")
        vh = sfft.dst(sfft.dst(vb, type=2, axis=0, norm="ortho"), type=1, axis=1, norm="ortho")
        vh /= alpha - beta * self._lam_v
        vx = sfft.idst(sfft.idst(vh, type=1, axis=1, norm="ortho"), type=2, axis=0, norm="ortho")
        return self.join(ux, vx)

    # ---- convection -----------------------------------------------------------
    def _build_convection(self):
        """Sparse structure of the central advection operator A_a b = (a.grad) b.

        A_a has one entry per term t at (rows[t], cols[t]) with value (W a)[t],
        W a fixed sparse matrix of averaging/difference weights.
        """
        nx, ny, hx, hy = self.nx, self.ny, self.hx, self.hy
        n_u = self.n_u

        def uid(i, j):
            return (i - 1) * ny + j

        def vid(i, j):
            return n_u + i * (ny - 1) + (j - 1)

        rows, cols = [], []
        w_r, w_c, w_v = [], [], []

        def add(row, col, weights, scale):
            t = len(rows)
            rows.append(row)
            cols.append(col)
            for k, c in weights:
                w_r.append(t)
                w_c.append(k)
                w_v.append(c * scale)

        for i in range(1, nx):
            for j in range(ny):
                r = uid(i, j)
                a1 = [(r, 1.0)]
                a2 = [(vid(ii, jj), 0.25) for ii in (i - 1, i) for jj in (j, j + 1) if 1 <= jj <= ny - 1]
                sx = 1.0 / (2 * hx)
                sy = 1.0 / (2 * hy)
                if i + 1 <= nx - 1:
                    add(r, uid(i + 1, j), a1, sx)
                if i - 1 >= 1:
                    add(r, uid(i - 1, j), a1, -sx)
                if a2:
                    # tangential neighbours, odd reflection across the walls
                    self_coef = 0.0
                    if j + 1 <= ny - 1:
                        add(r, uid(i, j + 1), a2, sy)
                    else:
                        self_coef -= sy
                    if j - 1 >= 0:
                        add(r, uid(i, j - 1), a2, -sy)
                    else:
                        self_coef += sy
                    if self_coef != 0.0:
                        add(r, r, a2, self_coef)

        for i in range(nx):
            for j in range(1, ny):
                r = vid(i, j)
                a2 = [(r, 1.0)]
                a1 = [(uid(ii, jj), 0.25) for ii in (i, i + 1) for jj in (j - 1, j) if 1 <= ii <= nx - 1]
                sx = 1.0 / (2 * hx)
                sy = 1.0 / (2 * hy)
                if j + 1 <= ny - 1:
                    add(r, vid(i, j + 1), a2, sy)
                if j - 1 >= 1:
                    add(r, vid(i, j - 1), a2, -sy)
                if a1:
                    self_coef = 0.0
                    if i + 1 <= nx - 1:
                        add(r, vid(i + 1, j), a1, sx)
                    else:
                        self_coef -= sx
                    if i - 1 >= 0:
                        add(r, vid(i - 1, j), a1, -sx)
                    else:
                        self_coef += sx
                    if self_coef != 0.0:
                        add(r, r, a1, self_coef)

        n_t = len(rows)
        self.rows = np.asarray(rows)
        self.cols = np.asarray(cols)
        self.W = sp.csr_matrix((w_v, (w_r, w_c)), shape=(n_t, self.n))
        self.WT = self.W.T.tocsr()
        ones = np.ones(n_t)
        self.Er = sp.csr_matrix((ones, (self.rows, np.arange(n_t))), shape=(self.n, n_t))
        self.Ec = sp.csr_matrix((ones, (self.cols, np.arange(n_t))), shape=(self.n, n_t))

    def advect(self, a, b):
        """Plain central advection (a.grad) b."""
        return self.Er @ ((self.W @ a) * b[self.cols])

    def advect_T(self, a, b):
        """Transpose of b -> (a.grad) b applied to b."""
        return self.Ec @ ((self.W @ a) * b[self.rows])

    def conv(self, a, b):
        """Skew-symmetric convection C_a b = (A_a b - A_a^T b) / 2."""
        wa = self.W @ a
        return 0.5 * (self.Er @ (wa * b[self.cols]) - self.Ec @ (wa * b[self.rows]))

    def conv_matrix(self, a):
        wa = self.W @ a
        A = sp.csr_matrix((wa, (self.rows, self.cols)), shape=(self.n, self.n))
        return 0.5 * (A - A.T)

    def lin(self, y, z):
        """Linearized convection K_y z = C_y z + C_z y."""
        return self.conv(y, z) + self.conv(z, y)

    def lin_T(self, y, w):
        """Transpose K_y^T w = -C_y w + (d/dz C_z y)^T w."""
        q = 0.5 * (y[self.cols] * w[self.rows] - y[self.rows] * w[self.cols])
        return -self.conv(y, w) + self.WT @ q


@functools.lru_cache(maxsize=16)
def _ops(nx, ny):
    return MacOperators(nx, ny)


def ops_for(grid):
    """Cached operator bundle for a grid (time data ignored)."""
    return _ops(grid.nx, grid.ny)
