"""Homogeneous-space machinery for ``X = G/H`` represented by sampled points.

A point ``x = g_x H`` is only ever used through its stabilizer algebra
``g_x = Ad(g_x) h``; the quotient ``g / g_x`` is modelled by the Frobenius
orthogonal complement.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize

from .algebra import (
    AlgebraElement,
    AlgebraError,
    Covector,
    GroupElement,
    INJECTIVITY_RADIUS,
    InjectivityRadiusError,
    LieAlgebraSpec,
    complement,
    orthonormalize,
    sample_group_batch,
)
from .realizations import HomogeneousSpaceSpec

__all__ = [
    "StabilizerPoint",
    "ZeroProjection",
    "ChartRadiusError",
    "stabilizer_point",
    "sample_points",
    "has_invariant_density",
    "DensityReport",
    "quotient_determinant",
    "half_density_character",
    "y_x_field",
    "phase_derivative",
    "product_chart_jacobian",
    "chart_map",
    "c_omega",
    "COmegaReport",
    "sigma_uniform_bound",
]


class ZeroProjection(ValueError):
    """``eta0`` is orthogonal to ``g_x``: it lies in ``i(g/g_x)*``."""


class ChartRadiusError(ValueError):
    pass


@dataclass(eq=False)
class StabilizerPoint:
    space: HomogeneousSpaceSpec = field(repr=False)
    g_x: GroupElement = field(repr=False)
    gx_basis: np.ndarray  # (k, d), Frobenius-orthonormal
    perp_basis: np.ndarray  # (d - k, d)
    y_x: AlgebraElement | None = None

    @property
    def algebra(self) -> LieAlgebraSpec:
        return self.space.algebra

    @property
    def k(self) -> int:
        return self.gx_basis.shape[0]

    def frame(self) -> np.ndarray:
        """Rows ``[gx_basis; perp_basis]``: an orthonormal basis of ``g``."""
        return np.vstack([self.gx_basis, self.perp_basis])

    def local(self, a) -> np.ndarray:
        """Coordinates in ``g`` of ``sum_j a_j e_j`` for the ``g_x`` basis."""
        return np.asarray(a, float) @ self.gx_basis

    def restrict(self, xi_coords) -> np.ndarray:
        """``q_x(xi)``: values ``<xi, e_j>`` on the orthonormal ``g_x`` basis."""
        T = self.algebra.trace_gram
        return np.asarray(xi_coords, float) @ T @ self.gx_basis.T

    def lift(self, q, w=None) -> np.ndarray:
        """Ambient covector coordinates with ``restrict = q``; ``w`` adds the
        given values on the complement frame (which ``restrict`` ignores)."""
        alg = self.algebra
        v = np.asarray(q, float) @ self.gx_basis
        if w is not None:
            v = v + np.asarray(w, float) @ self.perp_basis
        return np.linalg.solve(alg.trace_gram, alg.gram @ v)


def stabilizer_point(space: HomogeneousSpaceSpec, g: GroupElement | np.ndarray) -> StabilizerPoint:
    alg = space.algebra
    gm = g.matrix if isinstance(g, GroupElement) else np.asarray(g, float)
    ge = GroupElement(gm, alg)
    F = alg.gram
    if space.dim_h == 0:
        return StabilizerPoint(space, ge, np.zeros((0, alg.dim)), orthonormalize(np.eye(alg.dim), F))
    Ad = alg.Ad_matrix(gm)
    conj = space.sub @ Ad.T
    # re-expression residual check in matrix form
    M = gm @ alg.matrix(space.sub) @ np.linalg.inv(gm)
    alg.coords(M, tol=1e-9)
    gx = orthonormalize(conj, F)
    if gx.shape[0] != space.dim_h:
        raise AlgebraError("conjugated subalgebra lost dimension")
    perp = complement(gx, F)
    back = gx @ np.linalg.inv(Ad).T
    hs = orthonormalize(space.sub, F)
    resid = back - (back @ F @ hs.T) @ hs
    if np.abs(resid).max() > 1e-9 * max(1.0, np.abs(back).max()):
        raise AlgebraError("Ad(g_x^-1) does not map g_x into h")
    return StabilizerPoint(space, ge, gx, perp)


def sample_points(space: HomogeneousSpaceSpec, n: int, seed: int, r_range=(0.0, 1.5), k_max: int = 3, workers: int = 1):
    gs = sample_group_batch(space.algebra, n, seed, k_max=k_max, r_range=r_range, workers=workers)
    return [stabilizer_point(space, g) for g in gs]


# ---------------------------------------------------------------------------
# densities
# ---------------------------------------------------------------------------


def quotient_determinant(alg: LieAlgebraSpec, sub: np.ndarray, comp: np.ndarray, g: np.ndarray) -> float:
    """``det`` of the map induced by ``Ad(g)`` on ``g / sub`` (``sub`` must be invariant),
    modelled on the complement rows ``comp``."""
    k = sub.shape[0]
    frame = np.vstack([sub, comp])
    A = alg.Ad_matrix(g)
    img = (comp @ A.T)  # images of complement vectors
    sol = np.linalg.solve(frame.T, img.T)  # coordinates in the frame
    block = sol[k:, :]
    return float(np.linalg.det(block)) if block.size else 1.0


@dataclass
class DensityReport:
    invariant: bool
    max_log_defect: float
    modular_exponents: list  # log|det| / t along each h basis vector

    def __bool__(self):
        return self.invariant


def has_invariant_density(space: HomogeneousSpaceSpec, t_grid=(-1.0, -0.5, 0.5, 1.0), tol: float = 1e-10) -> DensityReport:
    """Unimodularity test: ``|det Ad(exp tW)|`` on ``g/h`` for each ``h`` basis vector ``W``."""
    alg = space.algebra
    if space.dim_h == 0 or space.dim_h == alg.dim:
        return DensityReport(True, 0.0, [0.0] * space.dim_h)
    sub = orthonormalize(space.sub, alg.gram)
    comp = complement(sub, alg.gram)
    worst, exps = 0.0, []
    for w in space.sub:
        vals = []
        for t in t_grid:
            g = sla.expm(t * alg.matrix(w))
            ld = np.log(abs(quotient_determinant(alg, sub, comp, g)))
            worst = max(worst, abs(ld))
            vals.append(ld / t)
        exps.append(float(np.mean(vals)))
    return DensityReport(bool(worst < tol), float(worst), exps)


def half_density_character(space: HomogeneousSpaceSpec, pt: StabilizerPoint, y, alpha: float = 0.5) -> float:
    """``|det(Ad(exp y)) on g/g_x|^(-alpha)`` for ``y`` in ``g_x``."""
    alg = space.algebra
    c = y.coords if isinstance(y, AlgebraElement) else np.asarray(y, float)
    if pt.k:
        proj = (c @ alg.gram @ pt.gx_basis.T) @ pt.gx_basis
    else:
        proj = np.zeros_like(c)
    if alg.norm(c - proj) > 1e-9 * max(1.0, alg.norm(c)):
        raise AlgebraError("y is not in the stabilizer algebra g_x")
    if pt.perp_basis.shape[0] == 0:
        return 1.0
    g = sla.expm(alg.matrix(c))
    det = quotient_determinant(alg, pt.gx_basis, pt.perp_basis, g)
    return float(abs(det) ** (-alpha))


def sigma_uniform_bound(space: HomogeneousSpaceSpec, points, radius: float, n_dir: int, seed: int, alpha: float = 0.5) -> float:
    """Largest ``half_density_character`` over points and ``y`` on the sphere of ``radius`` in ``g_x``."""
    rng = np.random.default_rng(seed)
    best = 0.0
    for pt in points:
        a = rng.standard_normal((n_dir, pt.k))
        a *= radius / np.linalg.norm(a, axis=1, keepdims=True)
        for ai in a:
            best = max(best, half_density_character(space, pt, pt.local(ai), alpha))
    return best


# ---------------------------------------------------------------------------
# Y_x, phase derivative, product chart
# ---------------------------------------------------------------------------


def y_x_field(pt: StabilizerPoint, eta0: Covector, tol: float = 1e-12):
    """Normalized projection of the Riesz representative of ``eta0`` onto ``g_x``.

    Returns ``(Y_x, |pr|)``.
    """
    alg = pt.algebra
    r = eta0.riesz().coords
    if pt.k == 0:
        raise ZeroProjection("g_x = 0")
    coef = r @ alg.gram @ pt.gx_basis.T
    proj = coef @ pt.gx_basis
    pn = float(np.linalg.norm(coef))
    if pn <= tol * max(alg.norm(r), 1e-300):
        raise ZeroProjection("zero projection: eta0 annihilates g_x")
    y = AlgebraElement(alg, proj / pn)
    pt.y_x = y
    return y, pn


def _log_coords(alg: LieAlgebraSpec, M: np.ndarray, radius: float = INJECTIVITY_RADIUS) -> np.ndarray:
    if np.linalg.norm(M - np.eye(M.shape[0]), 2) >= radius:
        raise InjectivityRadiusError("outside the logarithm's injectivity radius")
    L = sla.logm(M)
    if np.iscomplexobj(L):
        L = L.real
    return alg.coords(L, check=False)


def phase_derivative(xi: Covector, y: AlgebraElement, g: GroupElement, step: float = 1e-5):
    """``d/ds <xi, log(e^{sY} g)>`` at ``s = 0``: central differences plus one
    Richardson level.  Returns ``(value, error_estimate)``."""
    alg = xi.algebra
    Y = y.matrix
    G = g.matrix
    h = step / max(y.norm(), 1e-300)
    T = alg.trace_gram

    def f(s):
        return float(xi.coords @ T @ _log_coords(alg, sla.expm(s * Y) @ G))

    d1 = (f(h) - f(-h)) / (2 * h)
    d2 = (f(h / 2) - f(-h / 2)) / h
    val = (4 * d2 - d1) / 3
    return val, abs(d2 - d1) / 3 + 1e-15 * max(1.0, abs(val))


def chart_map(pt: StabilizerPoint, u: np.ndarray) -> np.ndarray:
    """``kappa(u) = log(e^Y e^Z)`` in the orthonormal frame coordinates, ``u = (a, b)``."""
    alg = pt.algebra
    frame = pt.frame()
    k = pt.k
    Y = alg.matrix(u[:k] @ frame[:k])
    Z = alg.matrix(u[k:] @ frame[k:])
    M = sla.expm(Y) @ sla.expm(Z)
    c = _log_coords(alg, M)
    return frame @ alg.gram @ c


def product_chart_jacobian(pt: StabilizerPoint, y, z, step: float = 1e-6, chart_radius: float = 0.5) -> float:
    """``|det D kappa|`` at ``(y, z)`` by central differences in frame coordinates."""
    alg = pt.algebra
    yc = y.coords if isinstance(y, AlgebraElement) else np.asarray(y, float)
    zc = z.coords if isinstance(z, AlgebraElement) else np.asarray(z, float)
    if alg.norm(yc) + alg.norm(zc) > chart_radius:
        raise ChartRadiusError("(y, z) outside the chart radius")
    frame = pt.frame()
    u0 = frame @ alg.gram @ (yc + zc)
    k = pt.k
    # split check: y in g_x, z in its complement
    if k and alg.norm(yc - (yc @ alg.gram @ frame[:k].T) @ frame[:k]) > 1e-9 * max(1, alg.norm(yc)):
        raise AlgebraError("y is not in g_x")
    if alg.norm(zc - (zc @ alg.gram @ frame[k:].T) @ frame[k:]) > 1e-9 * max(1, alg.norm(zc)):
        raise AlgebraError("z is not in the complement of g_x")
    d = len(u0)
    J = np.empty((d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = step
        J[:, j] = (chart_map(pt, u0 + e) - chart_map(pt, u0 - e)) / (2 * step)
    return float(abs(np.linalg.det(J)))


# ---------------------------------------------------------------------------
# C_Omega
# ---------------------------------------------------------------------------


@dataclass
class COmegaReport:
    c_omega: float
    eta0: list
    omega_radius: float
    inner_product: str
    samples: int
    worst_x: list  # matrix of g_x attaining the minimum
    worst_projection: float
    grid_check: float  # sampled-direction sup at the worst x (<= analytic sup)

    def to_dict(self) -> dict:
        return {
            "schema": "schema/v1/c_omega_report",
            "spec": None,
            "eta0": self.eta0,
            "omega_radius": self.omega_radius,
            "inner_product": self.inner_product,
            "c_omega": self.c_omega,
            "samples": self.samples,
            "worst_x": self.worst_x,
            "worst_projection": self.worst_projection,
            "grid_check": self.grid_check,
        }


def _projection_norm(alg, space_sub, g, r):
    """``|pr_{Ad(g)h}(r)|``: the sup of ``|<eta0, Y>|`` over unit ``Y`` in ``Ad(g) h``."""
    conj = space_sub @ alg.Ad_matrix(g).T
    q = orthonormalize(conj, alg.gram)
    return float(np.linalg.norm(r @ alg.gram @ q.T))


def c_omega(
    space: HomogeneousSpaceSpec,
    eta0: Covector,
    omega_radius: float,
    n_x: int = 512,
    n_dir: int = 64,
    seed: int = 0,
    r_range=(0.0, 2.5),
    refine: bool = True,
    workers: int = 1,
) -> COmegaReport:
    """``inf_x sup_{|Y|=1, Y in g_x} inf_{xi in B_r(eta0)} |<xi, Y>|``.

    The inner infimum over the ball is ``max(|<eta0, Y>| - r, 0)`` and the
    supremum over unit ``Y`` is attained at ``Y_x`` with value ``|pr_{g_x}(eta0)|``.
    The outer infimum is a minimum over sampled ``x`` followed by a local
    Nelder-Mead refinement around the best sample.
    """
    alg = space.algebra
    if eta0.norm() == 0:
        raise ValueError("eta0 must be nonzero")
    r = eta0.riesz().coords
    if space.dim_h == alg.dim:
        p = float(alg.norm(r))
        return COmegaReport(max(p - omega_radius, 0.0), eta0.coords.tolist(), omega_radius, alg.inner_product, 1, np.eye(alg.ambient_dim).tolist(), p, p)
    if space.dim_h == 0:
        return COmegaReport(0.0, eta0.coords.tolist(), omega_radius, alg.inner_product, 0, np.eye(alg.ambient_dim).tolist(), 0.0, 0.0)
    gs = sample_group_batch(alg, n_x, seed, r_range=r_range, workers=workers)
    gs = np.concatenate([np.eye(alg.ambient_dim)[None], gs], axis=0)
    vals = np.array([_projection_norm(alg, space.sub, g, r) for g in gs])
    i = int(np.argmin(vals))
    best_g, best = gs[i], float(vals[i])
    if refine and best > 0:
        def obj(w):
            return _projection_norm(alg, space.sub, sla.expm(alg.matrix(w)) @ gs[i], r)

        res = minimize(obj, np.zeros(alg.dim), method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
        if res.fun < best:
            best = float(res.fun)
            best_g = sla.expm(alg.matrix(res.x)) @ gs[i]
    # sampled-direction grid check at the worst point
    pt = stabilizer_point(space, best_g)
    rng = np.random.default_rng(seed + 1)
    a = rng.standard_normal((n_dir, pt.k))
    a /= np.linalg.norm(a, axis=1, keepdims=True)
    Y = a @ pt.gx_basis
    grid = float(np.max(np.abs(Y @ alg.trace_gram @ eta0.coords))) if n_dir else 0.0
    return COmegaReport(
        max(best - omega_radius, 0.0),
        eta0.coords.tolist(),
        omega_radius,
        alg.inner_product,
        int(len(gs)),
        best_g.tolist(),
        best,
        grid,
    )
