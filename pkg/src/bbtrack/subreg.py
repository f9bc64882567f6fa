"""Finite-dimensional box problems: optimality residuals, perturbed VIs, growth and subregularity.

A point u solves the rho-perturbed inclusion when rho - J'(u) lies in the
normal cone of the box [a, b] at u, i.e. componentwise

    a_i < u_i < b_i : g_i = rho_i
    u_i = a_i       : rho_i <= g_i
    u_i = b_i       : rho_i >= g_i
"""

import hashlib
import itertools
import json
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import EkelandSearchFailure, Infeasible, UnsupportedObjective

log = logging.getLogger(__name__)

MAX_DIM = 12
FAMILIES = ("quadratic", "quartic", "linear")
_DUAL = {"l1": np.inf, "l2": 2}


def _norm(x, kind):
    if kind == "l1":
        return float(np.abs(x).sum())
    if kind == "l2":
        return float(np.sqrt(np.dot(x, x)))
    if kind == "linf":
        return float(np.abs(x).max()) if x.size else 0.0
    raise ValueError(f"unknown norm {kind!r}")


def _dual(kind):
    return {"l1": "linf", "l2": "l2"}[kind]


class BoxProblem:
    """Smooth objective on a box with exact gradient and Hessian callbacks.

    Use the constructors ``quadratic``, ``quartic`` and ``linear`` for the
    families the VI solver can enumerate exhaustively.  A bare instance with
    ``family="custom"`` works with the growth and residual tools only.
    """

    def __init__(self, lower, upper, f, grad, hess, family="custom", params=None, check=True, seed=0):
        a = np.atleast_1d(np.asarray(lower, dtype=float))
        b = np.atleast_1d(np.asarray(upper, dtype=float))
        if a.shape != b.shape or a.ndim != 1:
            raise ValueError("bounds must be 1-d arrays of equal length")
        if a.size > MAX_DIM:
            raise ValueError(f"dimension {a.size} exceeds {MAX_DIM}")
        if np.any(a > b):
            raise ValueError("lower bound exceeds upper bound")
        self.lower, self.upper = a, b
        self.n = a.size
        self._f, self._g, self._h = f, grad, hess
        self.family = family
        self.params = params or {}
        if check:
            self._validate(seed)

    # families
    @classmethod
    def quadratic(cls, Q, c, lower, upper):
        """J(u) = 1/2 u'Qu + c'u."""
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        Q = 0.5 * (Q + Q.T)
        c = np.atleast_1d(np.asarray(c, dtype=float))
        return cls(lower, upper, lambda u: 0.5 * u @ Q @ u + c @ u, lambda u: Q @ u + c, lambda u: Q,
                   "quadratic", {"Q": Q, "c": c})

    @classmethod
    def quartic(cls, a4, q, c, lower, upper):
        """Separable J(u) = sum a4_i u_i^4 / 4 + q_i u_i^2 / 2 + c_i u_i."""
        a4, q, c = (np.atleast_1d(np.asarray(x, dtype=float)) for x in (a4, q, c))
        return cls(lower, upper,
                   lambda u: float(np.sum(a4 * u**4 / 4 + q * u**2 / 2 + c * u)),
                   lambda u: a4 * u**3 + q * u + c,
                   lambda u: np.diag(3 * a4 * u**2 + q),
                   "quartic", {"a4": a4, "q": q, "c": c})

    @classmethod
    def linear(cls, c, lower, upper):
        """J(u) = c'u."""
        c = np.atleast_1d(np.asarray(c, dtype=float))
        n = c.size
        return cls(lower, upper, lambda u: float(c @ u), lambda u: c.copy(), lambda u: np.zeros((n, n)),
                   "linear", {"c": c})

    @classmethod
    def random_psd_quadratic(cls, n, rng, rank=None, box=1.0):
        rank = n if rank is None else rank
        A = rng.standard_normal((rank, n))
        return cls.quadratic(A.T @ A, rng.standard_normal(n), -box * np.ones(n), box * np.ones(n))

    def f(self, u):
        return float(self._f(np.asarray(u, float)))

    def grad(self, u):
        return np.asarray(self._g(np.asarray(u, float)), dtype=float)

    def hess(self, u):
        return np.asarray(self._h(np.asarray(u, float)), dtype=float)

    def feasible(self, u, tol=0.0):
        u = np.asarray(u, float)
        return bool(np.all(u >= self.lower - tol) and np.all(u <= self.upper + tol))

    def project(self, u):
        return np.clip(u, self.lower, self.upper)

    def diameter(self, kind="l1"):
        return _norm(self.upper - self.lower, kind)

    def hash(self):
        h = hashlib.sha256(self.family.encode())
        for arr in (self.lower, self.upper, *(self.params[k] for k in sorted(self.params))):
            h.update(np.ascontiguousarray(arr, dtype=float).tobytes())
        return h.hexdigest()[:16]

    def _validate(self, seed):
        rng = np.random.default_rng(seed)
        lo = np.where(np.isfinite(self.lower), self.lower, -1.0)
        hi = np.where(np.isfinite(self.upper), self.upper, 1.0)
        for _ in range(3):
            u = rng.uniform(lo, hi)
            g, H = self.grad(u), self.hess(u)
            if g.shape != (self.n,) or H.shape != (self.n, self.n):
                raise ValueError("gradient or Hessian callback has the wrong shape")
            step = 1e-6 * max(1.0, float(np.abs(u).max()))
            E = np.eye(self.n) * step
            fd_g = np.array([(self.f(u + e) - self.f(u - e)) / (2 * step) for e in E])
            fd_H = np.array([(self.grad(u + e) - self.grad(u - e)) / (2 * step) for e in E])
            scale_g = max(1.0, float(np.abs(g).max()))
            scale_H = max(1.0, float(np.abs(H).max()))
            if np.abs(fd_g - g).max() > 1e-6 * scale_g or np.abs(fd_H - H).max() > 1e-6 * scale_H:
                raise ValueError("gradient or Hessian callback disagrees with finite differences")


@dataclass
class OptimalityResidual:
    u: np.ndarray
    rho: np.ndarray
    rho_norm: float
    norm: str = "l1"


def _check_feasible(p, u):
    if not p.feasible(u):
        raise Infeasible("point lies outside the box")


def minimal_rho(g, u, lower, upper):
    """Smallest element of g + N(u), componentwise (the same for every monotone norm)."""
    at_lo = u <= lower
    at_hi = u >= upper
    rho = np.where(at_lo, np.minimum(g, 0.0), g)
    rho = np.where(at_hi, np.maximum(g, 0.0), rho)
    return np.where(at_lo & at_hi, 0.0, rho)


def normal_cone_residual(p, u, norm="l1"):
    """Minimal-dual-norm rho in J'(u) + N(u); ``norm`` is the primal norm (l1 or l2)."""
    u = np.asarray(u, dtype=float)
    _check_feasible(p, u)
    rho = minimal_rho(p.grad(u), u, p.lower, p.upper)
    return OptimalityResidual(u, rho, _norm(rho, _dual(norm)), norm)


def inclusion_error(p, u, rho):
    """Largest componentwise violation of rho in J'(u) + N(u)."""
    u = np.asarray(u, float)
    d = np.asarray(rho, float) - p.grad(u)
    at_lo = u <= p.lower
    at_hi = u >= p.upper
    err = np.abs(d)
    err = np.where(at_lo & ~at_hi, np.maximum(d, 0.0), err)
    err = np.where(at_hi & ~at_lo, np.maximum(-d, 0.0), err)
    err = np.where(at_lo & at_hi, 0.0, err)
    return float(err.max()) if err.size else 0.0


# ---- perturbed variational inequality ----------------------------------------

@dataclass
class ViSolutions:
    points: list
    patterns: list
    continuum: bool = False

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, k):
        return self.points[k]


def _sign_ok(state, d, tol):
    # d = rho - g at one coordinate
    if state == 0:
        return d <= tol
    if state == 2:
        return d >= -tol
    return abs(d) <= tol


def _tol(p, rho):
    scale = 1.0 + float(np.abs(rho).max(initial=0.0))
    for k in ("Q", "c", "a4", "q"):
        if k in p.params:
            scale += float(np.abs(p.params[k]).max())
    return 1e-10 * scale


def _pattern_table(p):
    """Per active-set pattern: free indices, pseudo-inverse of the free block and its null space."""
    cached = getattr(p, "_patterns", None)
    if cached is not None:
        return cached
    Q = p.params["Q"]
    table = []
    for pattern in itertools.product((0, 1, 2), repeat=p.n):
        st = np.array(pattern)
        free = st == 1
        base = np.where(st == 0, p.lower, p.upper).astype(float)
        if np.any(~np.isfinite(base[~free])):
            continue
        base[free] = 0.0
        F = np.flatnonzero(free)
        if F.size:
            A = Q[np.ix_(F, F)]
            U, s, Vt = np.linalg.svd(A)
            cut = 1e-10 * max(1.0, s.max())
            inv = (Vt[s > cut].T / s[s > cut]) @ U[:, s > cut].T
            null = Vt[s <= cut]
        else:
            A = inv = null = np.zeros((0, 0))
        table.append((pattern, st, F, A, inv, null, base))
    p._patterns = table
    return table


def _quadratic_solutions(p, R, tol):
    """Enumerate patterns once for a batch of perturbations R (m, n)."""
    Q, c = p.params["Q"], p.params["c"]
    m, n = R.shape
    pts = [[] for _ in range(m)]
    pats = [[] for _ in range(m)]
    continuum = False
    for pattern, st, F, A, inv, null, base in _pattern_table(p):
        U = np.repeat(base[None, :], m, axis=0)
        ok = np.ones(m, dtype=bool)
        if F.size:
            rhs = R[:, F] - c[F] - base @ Q[:, F]
            sol = rhs @ inv.T
            ok &= np.abs(sol @ A.T - rhs).max(axis=1) <= 10 * tol
            U[:, F] = sol
        cands = [U]
        if null.shape[0] and ok.any():
            continuum = True
            for vec in null:
                d = np.zeros(n)
                d[F] = vec
                for sgn in (1.0, -1.0):
                    Uc = U.copy()
                    for k in np.flatnonzero(ok):
                        t = _max_step(p, U[k], sgn * d)
                        if np.isfinite(t) and t > 0:
                            Uc[k] = U[k] + sgn * t * d
                    cands.append(Uc)
        for C in cands:
            feas = ok & np.all(C >= p.lower - tol, axis=1) & np.all(C <= p.upper + tol, axis=1)
            if not feas.any():
                continue
            C = np.clip(C, p.lower, p.upper)
            D = R - (C @ Q + c)
            good = feas.copy()
            good &= np.all(np.where(st == 0, D <= tol, True), axis=1)
            good &= np.all(np.where(st == 2, D >= -tol, True), axis=1)
            good &= np.all(np.where(st == 1, np.abs(D) <= tol, True), axis=1)
            for k in np.flatnonzero(good):
                pts[k].append(C[k])
                pats[k].append(pattern)
    return pts, pats, continuum


def _max_step(p, u, d):
    t = np.inf
    for ui, di, lo, hi in zip(u, d, p.lower, p.upper):
        if di > 0:
            t = min(t, (hi - ui) / di)
        elif di < 0:
            t = min(t, (lo - ui) / di)
    return t


def _separable_coordinate(p, i, r, tol):
    """All (value, state) pairs solving coordinate i; flag a continuum if one exists."""
    lo, hi = p.lower[i], p.upper[i]
    out, cont = [], False
    if p.family == "quartic":
        a4, q, c = p.params["a4"][i], p.params["q"][i], p.params["c"][i]
        gi = lambda x: a4 * x**3 + q * x + c
        coeffs = [a4, 0.0, q, c - r]
        if a4 == 0 and q == 0:
            if abs(c - r) <= tol:
                cont = True
                out.append((0.5 * (lo + hi) if np.isfinite(lo + hi) else 0.0, 1))
        else:
            for root in np.roots(np.trim_zeros(coeffs, "f")):
                if abs(root.imag) > 1e-7 * max(1.0, abs(root)):
                    continue
                x = float(root.real)
                # one Newton polish step keeps the residual at rounding level
                dg = 3 * a4 * x * x + q
                if dg != 0:
                    x -= (gi(x) - r) / dg
                if lo < x < hi:
                    out.append((x, 1))
    else:
        ci = p.params["c"][i]
        gi = lambda x: ci
        if abs(ci - r) <= tol:
            cont = True
            mid = 0.5 * (lo + hi) if np.isfinite(lo + hi) else 0.0
            out.append((mid, 1))
    for x, state in ((lo, 0), (hi, 2)):
        if np.isfinite(x) and _sign_ok(state, r - gi(x), tol):
            out.append((x, state))
    vals = []
    for x, s in out:
        if not any(abs(x - y) <= tol for y, _ in vals):
            vals.append((x, s))
    return vals, cont


def solve_perturbed_vi(p, rho):
    """Every u in the box with rho in J'(u) + N(u), by active-set enumeration.

    Each coordinate is lower, free or upper (3^n patterns).  Quadratics solve
    the free block in closed form; separable families solve per coordinate
    (the product of the per-coordinate sets is the full pattern enumeration).
    When a pattern admits an affine family of solutions, its extreme
    feasible points are returned and ``continuum`` is set.
    """
    return solve_perturbed_vi_batch(p, np.atleast_2d(np.asarray(rho, dtype=float)) * np.ones(p.n))[0]


def solve_perturbed_vi_batch(p, R):
    """solve_perturbed_vi for every row of R; the pattern loop runs once."""
    if p.family not in FAMILIES:
        raise UnsupportedObjective(f"family {p.family!r} cannot be enumerated exhaustively")
    R = np.asarray(R, dtype=float).reshape(-1, p.n)
    tol = _tol(p, R)
    if p.family == "quadratic":
        all_pts, all_pats, cont = _quadratic_solutions(p, R, tol)
    else:
        all_pts, all_pats, cont = [], [], False
        for rho in R:
            per = []
            for i in range(p.n):
                vals, c_i = _separable_coordinate(p, i, rho[i], tol)
                cont = cont or c_i
                per.append(vals)
            all_pts.append([np.array([x for x, _ in combo]) for combo in itertools.product(*per)])
            all_pats.append([tuple(s for _, s in combo) for combo in itertools.product(*per)])
    out = []
    for pts, pats in zip(all_pts, all_pats):
        keep_pts, keep_pats = [], []
        for u, pat in zip(pts, pats):
            if not any(np.abs(u - v).max() <= 1e-9 * (1 + np.abs(v).max()) for v in keep_pts):
                keep_pts.append(u)
                keep_pats.append(pat)
        out.append(ViSolutions(keep_pts, keep_pats, cont))
    return out


# ---- subregularity and growth -------------------------------------------------

def rho_levels(top=1e-1, bottom=1e-6, per_decade=5):
    decades = np.log10(top) - np.log10(bottom)
    return np.logspace(np.log10(top), np.log10(bottom), int(round(decades * per_decade)) + 1)


def _rho_directions(n, count, rng, dual):
    dirs = [np.eye(n)[i] * s for i in range(min(n, count)) for s in (1.0,)]
    while len(dirs) < count:
        dirs.append(rng.uniform(-1, 1, n))
    return [d / _norm(d, dual) for d in dirs[:count]]


def _require_stationary(p, u_bar, norm, tol=1e-8):
    res = normal_cone_residual(p, u_bar, norm)
    if res.rho_norm > tol * (1 + float(np.abs(p.grad(u_bar)).max())):
        raise ValueError(f"u_bar is not stationary (residual {res.rho_norm:.3e})")


def check_subregularity(p, u_bar, mu, alpha=np.inf, rho_samples=4, norm="l1", seed=0, levels=None,
                        growth_factor=3.0):
    """Ratios ||u - u_bar|| / ||rho||^(1/mu) over a log sweep of perturbations.

    ``rho_samples`` random directions (the first ones coordinate-aligned) are
    scaled to every level of the sweep.  A violation is recorded when rho = 0
    has a second solution within alpha, or when the largest ratio in the
    smallest decade exceeds ``growth_factor`` times the largest ratio in the
    first decade.  Returns (kappa_hat, violations).
    """
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    u_bar = np.asarray(u_bar, dtype=float)
    _require_stationary(p, u_bar, norm)
    dual = _dual(norm)
    rng = np.random.default_rng(seed)
    levels = rho_levels() if levels is None else np.asarray(levels, float)
    dirs = _rho_directions(p.n, rho_samples, rng, dual)
    violations = []
    for u in solve_perturbed_vi(p, np.zeros(p.n)):
        dist = _norm(u - u_bar, norm)
        if 1e-9 * (1 + np.abs(u_bar).max()) < dist <= alpha:
            violations.append({"kind": "unperturbed_solution", "rho_norm": 0.0, "distance": dist, "u": u.tolist()})
    R = np.array([lev * d for lev in levels for d in dirs])
    sols = solve_perturbed_vi_batch(p, R)
    per_level = []
    for i, lev in enumerate(levels):
        worst = 0.0
        for j in range(len(dirs)):
            rho = R[i * len(dirs) + j]
            rn = _norm(rho, dual)
            for u in sols[i * len(dirs) + j]:
                dist = _norm(u - u_bar, norm)
                if dist <= alpha:
                    worst = max(worst, dist / rn ** (1.0 / mu) if mu > 0 else dist)
        per_level.append(worst)
    per_level = np.array(per_level)
    kappa = float(per_level.max(initial=0.0))
    first = per_level[levels >= levels.max() / 10.0].max(initial=0.0)
    last = per_level[levels <= levels.min() * 10.0].max(initial=0.0)
    if last > growth_factor * first and last > 0:
        violations.append({"kind": "ratio_growth", "first_decade": float(first), "last_decade": float(last),
                           "levels": levels.tolist(), "ratios": per_level.tolist()})
    return kappa, violations


@dataclass
class GrowthReport:
    c_hat: dict
    worst: dict
    n_samples: int
    norm: str = "l1"

    def __iter__(self):
        # unpacks as (c_hat, worst)
        return iter((self.c_hat, self.worst))


def _sample_points(p, u_bar, radius, n_samples, rng, norm):
    lo = np.where(np.isfinite(p.lower), p.lower, u_bar - radius)
    hi = np.where(np.isfinite(p.upper), p.upper, u_bar + radius)
    pts = []
    H = p.hess(u_bar)
    evecs = np.linalg.eigh(0.5 * (H + H.T))[1].T if p.n else []
    probes = [s * e for e in list(np.eye(p.n)) + list(evecs) for s in (1.0, -1.0)]
    for k in range(n_samples):
        if k < len(probes):
            d = probes[k]
        else:
            d = rng.uniform(lo, hi) - u_bar
            if rng.random() < 0.3:
                d = d * (rng.random(p.n) < 0.5)
        t = _max_step(p, u_bar, d)
        if not np.isfinite(t):
            t = radius / max(_norm(d, norm), 1e-300)
        if t <= 0 or _norm(d, norm) == 0:
            continue
        d = d * min(t, 1.0)
        size = _norm(d, norm)
        r = radius * 10 ** rng.uniform(-3, 0)
        d = d * min(1.0, r / size)
        u = p.project(u_bar + d)
        if _norm(u - u_bar, norm) > 0:
            pts.append(u)
    return pts


def check_growth(p, u_bar, mu, radius, n_samples=200, norm="l1", seed=0):
    """Minimum sampled growth ratios at u_bar for the four equivalent forms.

    derivative: J'(u)(u - u_bar) / ||u - u_bar||^(mu+1)
    function:   (J(u) - J(u_bar)) / ||.||^(mu+1)
    model:      (J'(u_bar)d + J''(u_bar)d^2) / ||d||^(mu+1)
    half_model: (J'(u_bar)d + J''(u_bar)d^2 / 2) / ||d||^(mu+1)
    Returns a GrowthReport that also unpacks as (c_hat, worst).
    """
    u_bar = np.asarray(u_bar, dtype=float)
    _check_feasible(p, u_bar)
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    rng = np.random.default_rng(seed)
    f0, g0, H0 = p.f(u_bar), p.grad(u_bar), p.hess(u_bar)
    forms = ("derivative", "function", "model", "half_model")
    c_hat = {k: np.inf for k in forms}
    worst = {k: None for k in forms}
    pts = _sample_points(p, u_bar, radius, n_samples, rng, norm)
    for u in pts:
        d = u - u_bar
        den = _norm(d, norm) ** (mu + 1.0)
        lin, quad = float(g0 @ d), float(d @ H0 @ d)
        vals = {"derivative": float(p.grad(u) @ d) / den, "function": (p.f(u) - f0) / den,
                "model": (lin + quad) / den, "half_model": (lin + 0.5 * quad) / den}
        for k in forms:
            if vals[k] < c_hat[k]:
                c_hat[k], worst[k] = vals[k], u
    return GrowthReport({k: float(v) for k, v in c_hat.items()}, worst, len(pts), norm)


# ---- Ekeland-type point -------------------------------------------------------

def ekeland_point(p, u, epsilon, lam, norm="l1", radius=None, max_iter=200000, armijo=0.99):
    """Follow a discretized steepest-descent path from u until the residual drops below eps/lam.

    Along the path J decreases by at least ``armijo`` * ||rho|| per unit
    length, so when J(u) <= inf J + eps the path is shorter than lam.
    Returns (u_hat, rho_hat) with ||u - u_hat|| <= lam, ||rho_hat||_* <=
    eps/lam and rho_hat in J'(u_hat) + N(u_hat), all re-verified.
    """
    u = np.asarray(u, dtype=float)
    _check_feasible(p, u)
    if not epsilon > 0 or not lam > 0:
        raise ValueError("epsilon and lambda must be positive")
    radius = p.diameter(norm) if radius is None else radius
    if lam >= radius:
        raise ValueError(f"lambda {lam:g} must be below the radius bound {radius:g}")
    target = epsilon / lam
    dual = _dual(norm)
    s = u.copy()
    J = p.f(s)
    best = (s.copy(), minimal_rho(p.grad(s), s, p.lower, p.upper))
    for _ in range(max_iter):
        g = p.grad(s)
        rho = minimal_rho(g, s, p.lower, p.upper)
        best = (s.copy(), rho)
        if _norm(rho, dual) <= target:
            break
        if norm == "l2":
            d = -rho
        else:
            k = int(np.argmax(np.abs(rho)))
            d = np.zeros(p.n)
            d[k] = -np.sign(rho[k])
        slope = float(g @ d)
        t = _max_step(p, s, d)
        curv = float(d @ p.hess(s) @ d)
        if curv > 0:
            t = min(t, 2.0 * (1.0 - armijo) * -slope / curv)
        elif not np.isfinite(t):
            t = 1.0
        while True:
            cand = p.project(s + t * d)
            J_new = p.f(cand)
            if J_new <= J + armijo * t * slope:
                break
            t *= 0.5
            if t < 1e-300:
                raise EkelandSearchFailure("descent step underflow", best)
        s, J = cand, J_new
    else:
        raise EkelandSearchFailure("iteration cap reached", best)
    u_hat, rho_hat = best
    if _norm(u - u_hat, norm) > lam * (1 + 1e-12):
        raise EkelandSearchFailure(f"path length {_norm(u - u_hat, norm):.3e} exceeds lambda", best)
    if _norm(rho_hat, dual) > target * (1 + 1e-12) or inclusion_error(p, u_hat, rho_hat) > 1e-8:
        raise EkelandSearchFailure("residual conditions not met", best)
    return u_hat, rho_hat


def verify_ekeland(p, u, u_hat, rho_hat, epsilon, lam, norm="l1", tol=1e-8):
    """Independent re-check of the three Ekeland conditions; returns a dict of booleans."""
    return {
        "distance": _norm(np.asarray(u) - u_hat, norm) <= lam * (1 + 1e-12),
        "residual": _norm(rho_hat, _dual(norm)) <= epsilon / lam * (1 + 1e-12),
        "inclusion": inclusion_error(p, u_hat, rho_hat) <= tol,
    }


# ---- implication table --------------------------------------------------------

@dataclass
class RoundtripReport:
    problem_hash: str
    mu: float
    kappa_hat: float
    c_hat_derivative: float
    c_hat_function: float
    violations: list
    growth_holds: bool
    subregularity_holds: bool
    local_minimizer: bool
    function_growth_holds: bool
    falsifications: list = field(default_factory=list)
    runtime: float = 0.0

    def to_json(self):
        return json.dumps(self.__dict__, indent=2, default=float)


def theorem_roundtrip(p, u_bar, mu, radius=None, alpha=None, norm="l1", n_samples=300, seed=0,
                      growth_tol=1e-6):
    """Growth => subregularity and subregularity at a minimizer => function growth, checked numerically."""
    t0 = time.perf_counter()
    u_bar = np.asarray(u_bar, dtype=float)
    radius = 0.5 * p.diameter(norm) if radius is None else radius
    alpha = radius if alpha is None else alpha
    rep = check_growth(p, u_bar, mu, radius, n_samples, norm, seed)
    kappa, viol = check_subregularity(p, u_bar, mu, alpha, norm=norm, seed=seed)
    scale = 1.0 + float(np.abs(p.grad(u_bar)).max()) + float(np.abs(p.hess(u_bar)).max())
    growth = rep.c_hat["derivative"] >= growth_tol * scale
    subreg = not viol
    local_min = rep.c_hat["function"] >= -1e-12 * scale
    fgrowth = rep.c_hat["function"] > 0
    fals = []
    if growth and not subreg:
        fals.append("derivative growth holds but subregularity fails")
    if subreg and local_min and not fgrowth:
        fals.append("subregular at a minimizer but function growth fails")
    for msg in fals:
        log.error("falsification on problem %s: %s", p.hash(), msg)
    return RoundtripReport(p.hash(), float(mu), kappa, rep.c_hat["derivative"], rep.c_hat["function"], viol,
                           bool(growth), bool(subreg), bool(local_min), bool(fgrowth), fals,
                           time.perf_counter() - t0)


def minimizer(p):
    """Global minimizer of a convex family member via the rho = 0 enumeration."""
    sols = solve_perturbed_vi(p, np.zeros(p.n))
    if not len(sols):
        raise Infeasible("no stationary point found")
    return min(sols.points, key=p.f)
