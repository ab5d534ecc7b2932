"""Oscillatory integrals over stabilizer subalgebras.

Bump functions of finite order, finite-dimensional unitary representations,
windowed Fourier quadrature with a Nyquist guard, log-log decay fits and the
two decay experiments (condition U and uniform non-stationary phase).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from math import comb, factorial
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla
from numpy.polynomial import chebyshev as C

from .algebra import AlgebraElement, Covector, LieAlgebraSpec
from .homspace import StabilizerPoint, _log_coords

__all__ = [
    "BumpError",
    "NyquistError",
    "BumpFunction",
    "build_bump",
    "irwin_hall_cdf",
    "fd_derivative_sup",
    "fit_bump_constant",
    "GridFunction",
    "oscillatory_integral",
    "oscillatory_integrals",
    "UnitaryRepFD",
    "torus_character",
    "b_character",
    "n_character",
    "trivial_rep",
    "su2_spin",
    "DecayProbe",
    "DecayRecord",
    "DecayReport",
    "rms_envelope",
    "envelope_span",
    "ladder_resolution",
    "fit_slope",
    "condition_u_probe",
    "nonstationary_phase_check",
    "xi_scaling_exponent",
    "ss_constant_sweep",
    "experiment_bump",
    "compact_condition_u",
    "nsp_experiment",
    "DEFAULT_T_GRID",
    "FIT_RESIDUAL_TOL",
]

FIT_RESIDUAL_TOL = 0.1
DEFAULT_T_GRID = np.logspace(2, 4, 9)


class BumpError(ValueError):
    pass


class NyquistError(ValueError):
    """Phase oscillates faster than the quadrature grid resolves."""


# ---------------------------------------------------------------------------
# bump functions
# ---------------------------------------------------------------------------


def irwin_hall_cdf(u: np.ndarray, n: int) -> np.ndarray:
    """CDF of the sum of ``n`` independent U(0, 1) variables, exact 0 / 1 outside ``[0, n]``.

    The alternating sum is evaluated on the lower half only (``F(u) = 1 - F(n - u)``
    above ``n / 2``), where its terms do not cancel.
    """
    u = np.asarray(u, float)
    out = np.zeros_like(u)
    inside = (u > 0) & (u < n)
    ui = u[inside]
    upper = ui > n / 2
    vi = np.where(upper, n - ui, ui)
    acc = np.zeros_like(vi)
    for k in range(n + 1):
        term = np.where(vi > k, (vi - k) ** n, 0.0)
        acc += (-1) ** k * comb(n, k) * term
    low = np.clip(acc / factorial(n), 0.0, 1.0)
    out[inside] = np.where(upper, 1.0 - low, low)
    out[u >= n] = 1.0
    return out


def _region(spec) -> tuple[str, float]:
    if isinstance(spec, (int, float)):
        return "box", float(spec)
    kind = spec.get("type", "box")
    if kind not in ("box", "ball"):
        raise BumpError(f"unknown region type {kind!r}")
    r = float(spec.get("half_width", spec.get("radius")))
    return kind, r


@dataclass(eq=False)
class BumpFunction:
    """``phi`` of order ``N``: indicator of the middle set convolved with ``N + 1``
    box mollifiers of width ``w = d / (2(N + 1))`` per axis."""

    N: int
    dim: int
    U1: dict
    U2: dict
    h: float
    construction: dict
    axes: list = field(repr=False)
    values: np.ndarray = field(repr=False)

    @property
    def inner(self) -> float:
        return _region(self.U1)[1]

    @property
    def outer(self) -> float:
        return _region(self.U2)[1]

    @property
    def width(self) -> float:
        return self.construction["mollifier_width"]

    @property
    def gap(self) -> float:
        return self.construction["gap"]

    @property
    def c_hat(self) -> float:
        """Analytic constant with ``sup|d^k phi| <= c_hat^(k+1) (N+1)^k``."""
        return self.construction["c_hat"]

    def profile(self, x: np.ndarray) -> np.ndarray:
        """The one-dimensional profile evaluated at ``x``."""
        c = self.construction["middle_half_width"]
        w = self.width
        n = self.N + 1
        x = np.asarray(x, float)
        # phi(x) = P(x - c <= S <= x + c), S = sum of n boxes on [-w/2, w/2]
        lo = (x - c) / w + n / 2
        hi = (x + c) / w + n / 2
        return irwin_hall_cdf(hi, n) - irwin_hall_cdf(lo, n)

    def __call__(self, Y: np.ndarray) -> np.ndarray:
        Y = np.atleast_2d(np.asarray(Y, float))
        kind = _region(self.U1)[0]
        if kind == "ball":
            return self.profile(np.linalg.norm(Y, axis=1))
        return np.prod(self.profile(Y), axis=1)

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def grid_function(self) -> "GridFunction":
        return GridFunction(self.axes, self.values.astype(complex), self.h)

    def to_dict(self) -> dict:
        return {"N": self.N, "dim": self.dim, "U1": self.U1, "U2": self.U2, "h": self.h, "construction": self.construction}


def build_bump(N: int, U1, U2, grid_resolution: float, dim: int = 1) -> BumpFunction:
    """Bump ``phi_{N, U1, U2}`` on a uniform grid of spacing ``grid_resolution``.

    ``U1``/``U2`` are ``{"type": "box"|"ball", "half_width"|"radius": r}`` (or a
    bare float for a box).  ``phi = 1`` on ``U1`` and ``phi = 0`` off ``U2``
    hold exactly, not just on the grid.
    """
    if N < 0:
        raise BumpError("order N must be >= 0")
    k1, a = _region(U1)
    k2, b = _region(U2)
    if k1 != k2:
        raise BumpError("U1 and U2 must have the same shape")
    if not (0 < a < b):
        raise BumpError("closure(U1) must lie inside U2")
    d = b - a
    n = N + 1
    w = d / (2 * n)
    h = float(grid_resolution)
    if not (0 < h <= w / 4):
        raise BumpError(f"grid spacing {h} too coarse for mollifier width {w}")
    c = a + d / 2
    M = int(np.ceil(b / h))
    M += M % 2  # even, so that the 2h sub-grid keeps the symmetric end points
    axis = h * np.arange(-M, M + 1)
    construction = {
        "gap": d,
        "mollifier_width": w,
        "mollifier_count": n,
        "middle_half_width": c,
        "support_half_width": c + n * w / 2,
        "c_hat": max(1.0, 4.0 / d, 2.0 * c),
    }
    bump = BumpFunction(
        N, dim, {"type": k1, "half_width": a}, {"type": k2, "half_width": b}, h, construction, [axis] * dim, np.empty(0)
    )
    if dim == 1:
        bump.values = bump.profile(axis)
    elif k1 == "box":
        prof = bump.profile(axis)
        vals = prof
        for _ in range(dim - 1):
            vals = np.multiply.outer(vals, prof)
        bump.values = vals
    else:
        bump.values = bump(bump.points()).reshape((len(axis),) * dim)
    return bump


def fd_derivative_sup(bump: BumpFunction, k: int, axis: int = 0) -> float:
    """``max |Delta_h^k phi| / h^k`` along one axis of the grid."""
    v = np.moveaxis(bump.values, axis, 0)
    return float(np.max(np.abs(np.diff(v, n=k, axis=0)))) / bump.h**k


def fit_bump_constant(bumps: Sequence[BumpFunction], orders: Sequence[int] = (1, 2, 3, 4)) -> tuple[float, dict]:
    """Single constant ``C`` with ``sup|d^k phi_N| <= C^(k+1) (N+1)^k`` over all
    given bumps and admissible orders ``k <= N + 1``.

    Returns ``(C_fit, {(N, k): sup})``.
    """
    sups = {}
    best = 1.0
    for b in bumps:
        for k in orders:
            if k > b.N + 1:
                continue
            s = max(fd_derivative_sup(b, k, ax) for ax in range(b.dim))
            sups[(b.N, k)] = s
            best = max(best, (s / (b.N + 1) ** k) ** (1.0 / (k + 1)))
    return best, sups


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class GridFunction:
    """Values on a uniform tensor grid (``axes`` all of spacing ``h``)."""

    axes: list
    values: np.ndarray
    h: float

    @property
    def dim(self) -> int:
        return len(self.axes)

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def shifted(self, a) -> "GridFunction":
        """``f(. - a)`` for a shift ``a`` by whole grid steps."""
        a = np.atleast_1d(np.asarray(a, float))
        steps = np.rint(a / self.h).astype(int)
        if np.abs(steps * self.h - a).max() > 1e-12 * max(1.0, np.abs(a).max()):
            raise ValueError("shift must be a multiple of the grid spacing")
        axes = [ax + s * self.h for ax, s in zip(self.axes, steps)]
        return GridFunction(axes, self.values, self.h)

    def _edges_zero(self) -> bool:
        v = self.values
        for ax in range(v.ndim):
            w = np.moveaxis(v, ax, 0)
            if np.abs(w[0]).max() > 1e-14 or np.abs(w[-1]).max() > 1e-14:
                return False
        return True


def oscillatory_integrals(f: GridFunction, xi, ts, nyquist: float = np.pi / 4, chunk: int = 64):
    """``I(t) = int f(Y) e^{i t <xi, Y>} dY`` for each ``t`` in ``ts``.

    Trapezoid rule on the full grid with the half-resolution (``2h``) grid as
    refinement partner; returns ``(values, errors)`` with
    ``errors = |I_h - I_2h|``.  Refuses when ``h |t xi|_inf > nyquist``.
    """
    xi = np.atleast_1d(np.asarray(xi, float))
    if xi.shape != (f.dim,):
        raise ValueError("xi has the wrong dimension")
    ts = np.atleast_1d(np.asarray(ts, float))
    if not f._edges_zero():
        raise ValueError("f must vanish on the grid boundary (compact support)")
    if len(ts) and f.h * np.abs(ts).max() * np.abs(xi).max() > nyquist:
        raise NyquistError(
            f"phase oscillation t|xi| = {np.abs(ts).max() * np.abs(xi).max():.3g} too fast for grid step {f.h:.3g}"
        )
    vals = f.values.ravel()
    nz = np.abs(vals) > 0
    # parity of grid indices for the 2h sub-grid
    idx = np.meshgrid(*[np.arange(len(ax)) for ax in f.axes], indexing="ij")
    even = np.all([(i.ravel() % 2 == 0) for i in idx], axis=0)
    P = f.points()[nz]
    v = vals[nz]
    ev = even[nz]
    phase = P @ xi
    hd = f.h**f.dim
    out = np.empty(len(ts), complex)
    err = np.empty(len(ts))
    for s in range(0, len(ts), chunk):
        tt = ts[s : s + chunk]
        E = np.exp(1j * np.outer(tt, phase))
        Ih = (E @ v) * hd
        I2 = (E[:, ev] @ v[ev]) * hd * 2**f.dim
        out[s : s + chunk] = Ih
        err[s : s + chunk] = np.abs(Ih - I2)
    return out, err


def oscillatory_integral(f: GridFunction, xi, t: float, **kw):
    """Single-``t`` version of :func:`oscillatory_integrals`; returns ``(value, error)``."""
    v, e = oscillatory_integrals(f, xi, [t], **kw)
    return complex(v[0]), float(e[0])


# ---------------------------------------------------------------------------
# decay fits
# ---------------------------------------------------------------------------


ENVELOPE_TAU = 0.2
ENVELOPE_CUT = 3.0


def envelope_span(tau: float = ENVELOPE_TAU, cut: float = ENVELOPE_CUT) -> float:
    """Largest ratio ``s / t`` sampled by :func:`rms_envelope`."""
    return float(np.exp(cut * tau))


def rms_envelope(
    ladder,
    evaluate: Callable[[np.ndarray], np.ndarray],
    n_window: int = 48,
    tau: float = ENVELOPE_TAU,
    cut: float = ENVELOPE_CUT,
    compensate: float = 0.0,
    carrier: float | None = None,
) -> np.ndarray:
    """Scale-invariant local L2 envelope of ``|evaluate|`` at each rung ``t``.

    ``E(t)^2 = sum_s w(u) e^{2 m u} |I(s)|^2 / sum_s w(u)`` over ``s = t e^u``,
    ``u`` log-spaced in ``[-cut tau, cut tau]``, ``w`` Gaussian of width ``tau``.
    For ``|I| = K s^-b`` this gives ``E = K' t^-b`` exactly, for any
    compensation exponent ``m``; choosing ``m`` near ``b`` keeps the weight
    centred so that periodic ripple of ``|I|`` (mollifier side lobes) averages
    out instead of being cut at the window edge.

    ``carrier``: angular frequency ``k`` (in the ladder variable) of a fast
    ``sin^2(k s)`` factor in ``|I|^2``, e.g. from the jumps at the edges of the
    support; each sample is paired with ``s + pi / (2k)`` so that the factor
    averages to exactly 1/2 instead of being aliased.
    """
    ladder = np.asarray(ladder, float)
    u = np.linspace(-cut * tau, cut * tau, n_window)
    w = np.exp(-0.5 * (u / tau) ** 2) * np.exp(2 * compensate * u)
    pts = np.concatenate([t * np.exp(u) for t in ladder])
    if carrier:
        both = np.abs(evaluate(np.concatenate([pts, pts + np.pi / (2 * carrier)]))) ** 2
        sq = 0.5 * (both[: len(pts)] + both[len(pts) :])
    else:
        sq = np.abs(evaluate(pts)) ** 2
    sq = sq.reshape(len(ladder), n_window)
    return np.sqrt((sq @ w) / np.exp(-0.5 * (u / tau) ** 2).sum())


def ladder_resolution(N: int, gap: float, t_max: float, freq_max: float, nyquist: float = np.pi / 4) -> float:
    """Grid spacing for a bump of order ``N`` that passes the Nyquist guard on
    every envelope sample up to ``t_max`` at local frequency ``freq_max``."""
    w = gap / (2 * (N + 1))
    return float(min(w / 8, 0.99 * nyquist / (freq_max * t_max * envelope_span())))


def fit_slope(x, y, upper_half: bool = True):
    """Least squares of ``log y`` on ``log x``; returns ``(slope, intercept, rms_residual)``."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if upper_half:
        s = len(x) // 2
        x, y = x[s:], y[s:]
    if np.any(y <= 0):
        return float("nan"), float("nan"), float("inf")
    lx, ly = np.log(x), np.log(y)
    A = np.stack([lx, np.ones_like(lx)], axis=1)
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    res = ly - A @ coef
    return float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(res**2)))


# ---------------------------------------------------------------------------
# finite-dimensional unitary representations
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class UnitaryRepFD:
    """Finite-dimensional unitary representation of a subgroup ``H``.

    ``differential`` takes coordinates of ``Y`` in the ambient algebra (``Y`` in
    ``h``) and returns a skew-Hermitian matrix; ``evaluator`` takes an ambient
    group matrix in ``H``.
    """

    subgroup: str
    dim: int
    evaluator: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    differential: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    algebra: LieAlgebraSpec | None = field(default=None, repr=False)

    def exp_coefficient(self, Y_coords: np.ndarray, v1, v2) -> complex:
        """``<tau(e^Y) v1, v2>`` computed through the differential."""
        U = sla.expm(self.differential(np.asarray(Y_coords, float)))
        return complex(np.vdot(v2, U @ v1))

    def at_point(self, pt: StabilizerPoint) -> "UnitaryRepFD":
        """``tau_x(h) = tau(g_x^{-1} h g_x)`` on ``G_x = g_x H g_x^{-1}``."""
        alg = pt.algebra
        g = pt.g_x.matrix
        gi = np.linalg.inv(g)
        Adi = alg.Ad_matrix(gi)
        return UnitaryRepFD(
            f"{self.subgroup}@x",
            self.dim,
            lambda m: self.evaluator(gi @ m @ g),
            lambda y: self.differential(Adi @ np.asarray(y, float)),
            alg,
        )


def trivial_rep(subgroup: str = "H") -> UnitaryRepFD:
    return UnitaryRepFD(subgroup, 1, lambda m: np.eye(1, dtype=complex), lambda y: np.zeros((1, 1), complex))


def torus_character(n: int, alg: LieAlgebraSpec | None = None) -> UnitaryRepFD:
    """Character ``exp(theta u1) -> e^{i n theta}`` of the diagonal circle of the
    realified ``su(2)``."""
    from .realizations import su2

    alg = alg or su2()

    def ev(m):
        # realified diag(e^{i th}, e^{-i th}): upper-left 2x2 block is a rotation by th
        th = np.arctan2(m[1, 0], m[0, 0])
        return np.array([[np.exp(1j * n * th)]])

    def diff(y):
        return np.array([[1j * n * np.asarray(y, float)[0]]])

    return UnitaryRepFD(f"T[n={n}]", 1, ev, diff, alg)


def b_character(lam: float, alg: LieAlgebraSpec | None = None) -> UnitaryRepFD:
    """Unitary character ``[[a, *], [0, 1/a]] -> a^{i lam}`` (``a > 0``) of the Borel subgroup."""
    from .realizations import sl2

    alg = alg or sl2()

    def ev(m):
        a = m[0, 0]
        if a <= 0:
            raise ValueError("only the identity component is supported")
        return np.array([[np.exp(1j * lam * np.log(a))]])

    def diff(y):
        return np.array([[1j * lam * np.asarray(y, float)[0]]])

    return UnitaryRepFD(f"B[lam={lam}]", 1, ev, diff, alg)


def n_character(lam: float, alg: LieAlgebraSpec | None = None) -> UnitaryRepFD:
    """Unitary character ``[[1, u], [0, 1]] -> e^{i lam u}`` of the upper unipotent subgroup."""
    from .realizations import sl2

    alg = alg or sl2()

    def ev(m):
        return np.array([[np.exp(1j * lam * m[0, 1])]])

    def diff(y):
        M = alg.matrix(np.asarray(y, float))
        return np.array([[1j * lam * M[0, 1]]])

    return UnitaryRepFD(f"N[lam={lam}]", 1, ev, diff, alg)


def _complexify(m: np.ndarray) -> np.ndarray:
    """Inverse of the realification ``a + ib -> [[a, -b], [b, a]]`` blockwise."""
    n = m.shape[0] // 2
    out = np.empty((n, n), complex)
    for i in range(n):
        for j in range(n):
            blk = m[2 * i : 2 * i + 2, 2 * j : 2 * j + 2]
            out[i, j] = blk[0, 0] + 1j * blk[1, 0]
    return out


def su2_spin(j: float, alg: LieAlgebraSpec | None = None) -> UnitaryRepFD:
    """Spin-``j`` representation of ``SU(2)`` on homogeneous polynomials of degree ``2j``
    (orthonormal monomial basis ``sqrt(C(n, k)) x^{n-k} y^k``)."""
    from .realizations import su2

    alg = alg or su2()
    n = int(round(2 * j))
    if abs(n - 2 * j) > 1e-12 or n < 0:
        raise ValueError("j must be a non-negative half-integer")
    s = np.sqrt([comb(n, k) for k in range(n + 1)])

    def ev(m):
        U = _complexify(m)
        a, b, c, d = U[0, 0], U[0, 1], U[1, 0], U[1, 1]
        D = np.zeros((n + 1, n + 1), complex)
        for k in range(n + 1):
            # (a x + c y)^{n-k} (b x + d y)^k, coefficients in powers of y
            p = np.array([1.0 + 0j])
            for _ in range(n - k):
                p = np.convolve(p, [a, c])
            for _ in range(k):
                p = np.convolve(p, [b, d])
            D[:, k] = p
        return (D * s[None, :]) / s[:, None]

    def diff(y):
        X = _complexify(alg.matrix(np.asarray(y, float)))
        D = np.zeros((n + 1, n + 1), complex)
        for k in range(n + 1):
            D[k, k] += (n - k) * X[0, 0] + k * X[1, 1]
            if k + 1 <= n:
                D[k + 1, k] += (n - k) * X[1, 0]
            if k - 1 >= 0:
                D[k - 1, k] += k * X[0, 1]
        return (D * s[None, :]) / s[:, None]

    return UnitaryRepFD(f"SU2[j={j}]", n + 1, ev, diff, alg)


# ---------------------------------------------------------------------------
# decay experiments
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class DecayProbe:
    point: StabilizerPoint
    rep: UnitaryRepFD
    bump: BumpFunction
    v1: np.ndarray
    v2: np.ndarray
    z1: complex
    z2: complex
    xi_grid: np.ndarray  # (m, d) ambient covector coordinates
    t_grid: np.ndarray = field(default_factory=lambda: DEFAULT_T_GRID.copy())
    alpha: float = 0.0
    x_id: int = 0

    def __post_init__(self):
        self.t_grid = np.asarray(self.t_grid, float)
        self.v1 = np.atleast_1d(np.asarray(self.v1, complex))
        self.v2 = np.atleast_1d(np.asarray(self.v2, complex))
        self.xi_grid = np.atleast_2d(np.asarray(self.xi_grid, float))
        if np.any(np.diff(self.t_grid) <= 0):
            raise ValueError("t_grid must be strictly increasing")
        if np.linalg.norm(self.v1) == 0 or np.linalg.norm(self.v2) == 0:
            raise ValueError("v1, v2 must be nonzero")
        if self.bump.dim != self.point.k:
            raise ValueError("bump dimension must equal dim g_x")


@dataclass
class DecayRecord:
    x_id: int
    xi: list
    t: list
    abs_integral: list
    error: list
    envelope: list  # on the fitted (upper) half of the ladder
    slope: float
    intercept: float
    residual: float
    reliable: bool
    passed: bool | None


@dataclass
class DecayReport:
    records: list
    target: float | None
    label: str = ""

    @property
    def reliable(self) -> list:
        return [r for r in self.records if r.reliable]

    @property
    def min_slope(self) -> float:
        s = [r.slope for r in self.reliable]
        return float(min(s)) if s else float("nan")

    @property
    def max_slope(self) -> float:
        s = [r.slope for r in self.reliable]
        return float(max(s)) if s else float("nan")

    @property
    def passed(self) -> bool:
        if not self.records or len(self.reliable) != len(self.records):
            return False
        return all(r.passed for r in self.records)

    def to_dict(self) -> dict:
        return {
            "schema": "schema/v1/decay_report",
            "label": self.label,
            "target": self.target,
            "min_slope": self.min_slope,
            "max_slope": self.max_slope,
            "passed": self.passed,
            "records": [
                {
                    "x_id": r.x_id,
                    "xi": r.xi,
                    "slope": r.slope,
                    "intercept": r.intercept,
                    "residual": r.residual,
                    "reliable": r.reliable,
                    "passed": r.passed,
                }
                for r in self.records
            ],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x_id", "xi_coords", "t", "abs_integral", "slope", "residual", "pass"])
        for r in self.records:
            xi = ";".join(f"{v:.12g}" for v in r.xi)
            for t, a in zip(r.t, r.abs_integral):
                w.writerow([r.x_id, xi, f"{t:.12g}", f"{a:.12g}", f"{r.slope:.12g}", f"{r.residual:.12g}", r.passed])
        return buf.getvalue()


def _decay_record(x_id, xi, ladder, evaluate, target, compare, n_window, compensate, carrier=None) -> DecayRecord:
    """Evaluate a ladder, build the envelope on its upper half and fit the slope.

    ``evaluate(ts) -> (values, errors)``.
    """
    ladder = np.asarray(ladder, float)
    vals, err = evaluate(ladder)
    upper = ladder[len(ladder) // 2 :]
    env = rms_envelope(upper, lambda ts: evaluate(ts)[0], n_window, compensate=compensate, carrier=carrier)
    slope, icpt, res = fit_slope(upper, env, upper_half=False)
    reliable = bool(np.isfinite(slope) and res < FIT_RESIDUAL_TOL)
    if target is None:
        passed = None
    elif compare == "<=":
        passed = bool(reliable and slope <= target)
    else:
        passed = bool(reliable and slope >= target)
    return DecayRecord(
        int(x_id),
        [float(v) for v in np.atleast_1d(xi)],
        ladder.tolist(),
        np.abs(vals).tolist(),
        np.asarray(err).tolist(),
        env.tolist(),
        slope,
        icpt,
        res,
        reliable,
        passed,
    )


def _carrier(bump: BumpFunction, freq: float):
    """Edge-jump carrier ``c |q|`` of a bump transform at local frequency ``|q|``."""
    k = bump.construction["middle_half_width"] * float(freq)
    return k if k > 0 else None


def _integrand(probe: DecayProbe) -> GridFunction:
    """``<tau_x(e^Y) v1, v2> sigma_x(e^Y)^alpha-power phi(Y) z1 conj(z2)`` on the bump grid."""
    pt = probe.point
    alg = pt.algebra
    b = probe.bump
    P = b.points()
    taux = probe.rep.at_point(pt)
    gens = [taux.differential(e) for e in pt.gx_basis]
    if pt.k == 1:
        w, V = np.linalg.eigh(1j * gens[0])  # gens = -i V diag(w) V^H
        left = np.conj(probe.v2) @ V
        right = np.conj(V).T @ probe.v1
        coef = (np.exp(-1j * np.outer(P[:, 0], w)) * (left * right)).sum(axis=1)
    else:
        coef = np.array([np.vdot(probe.v2, sla.expm(sum(a * g for a, g in zip(p, gens))) @ probe.v1) for p in P])
    # sigma_x(e^Y)^{-alpha}: the quotient determinant of Ad(e^Y) is exp(tr of ad Y on g/g_x)
    frame = pt.frame()
    traces = []
    for e in pt.gx_basis:
        A = alg.ad_matrix(e)
        sol = np.linalg.solve(frame.T, A @ frame[pt.k :].T)
        traces.append(np.trace(sol[pt.k :, :]))
    sigma = np.exp(-probe.alpha * (P @ np.asarray(traces)))
    vals = coef * sigma * b.values.ravel() * probe.z1 * np.conj(probe.z2)
    return GridFunction(b.axes, vals.reshape(b.values.shape), b.h)


def condition_u_probe(
    probe: DecayProbe,
    target: float | None = None,
    compare: str = "<=",
    n_window: int = 48,
    compensate: float | None = None,
) -> DecayReport:
    """Decay of ``int_{g_x} <tau_x(e^Y)v1, v2> sigma_x phi(Y) e^{i t <xi, Y>} dY``.

    Each ambient ``xi`` of the grid is restricted to ``g_x`` in the orthonormal
    frame; slopes are fitted to the envelope over the upper half of the
    ladder.  ``target``/``compare``: the pass rule ``slope <= target`` (decay)
    or ``slope >= target`` (negative control).
    """
    f = _integrand(probe)
    m = probe.bump.N + 2 if compensate is None else compensate
    records = []
    for xi in probe.xi_grid:
        q = probe.point.restrict(xi)
        rec = _decay_record(
            probe.x_id,
            xi,
            probe.t_grid,
            lambda ts, q=q: oscillatory_integrals(f, q, ts),
            target,
            compare,
            n_window,
            m,
            _carrier(probe.bump, np.linalg.norm(q)),
        )
        records.append(rec)
    return DecayReport(records, target, "condition_u")


def _phase_interpolant(pt: StabilizerPoint, eta: Covector, z: np.ndarray, half_width: float, deg: int = 48):
    """Chebyshev interpolant of ``psi(a) = <eta, log(e^{a e_1} e^Z)>`` on ``[-hw, hw]`` (``dim g_x = 1``)."""
    alg = pt.algebra
    T = alg.trace_gram
    e1 = pt.gx_basis[0]
    EZ = sla.expm(alg.matrix(z))

    def psi(a):
        a = np.atleast_1d(a)
        out = np.empty(len(a))
        for i, ai in enumerate(a):
            M = sla.expm(alg.matrix(ai * e1)) @ EZ
            out[i] = eta.coords @ T @ _log_coords(alg, M)
        return out

    cheb = C.Chebyshev.interpolate(psi, deg, domain=[-half_width, half_width])
    # interpolation self-check at off-node points
    test = np.linspace(-half_width, half_width, 37)
    drift = float(np.max(np.abs(cheb(test) - psi(test))))
    return cheb, drift


def _nsp_grid(pt, eta, z, bump, chart_radius):
    if pt.k != 1:
        raise NotImplementedError("non-stationary phase check is implemented for dim g_x = 1")
    alg = pt.algebra
    zc = z.coords if isinstance(z, AlgebraElement) else np.asarray(z, float)
    if alg.norm(zc) > chart_radius:
        from .homspace import ChartRadiusError

        raise ChartRadiusError("z outside the chart radius")
    if pt.k:
        leak = zc @ alg.gram @ pt.gx_basis.T
        if np.abs(leak).max() > 1e-9 * max(1.0, alg.norm(zc)):
            raise ValueError("z must lie in the complement of g_x")
    sup = bump.construction["support_half_width"]
    if eta.norm() == 0 and alg.norm(zc) == 0:
        psi = lambda a: np.zeros_like(a)  # noqa: E731
        drift = 0.0
    else:
        psi, drift = _phase_interpolant(pt, eta, zc, sup)
    if drift > 1e-11:
        raise ArithmeticError(f"phase interpolation drift {drift:.2e}")
    a = bump.axes[0]
    return a, psi(a), bump.values


def _nsp_integrals(a, psi_vals, phi, h, q, ts, nyquist=np.pi / 4, chunk=64):
    ts = np.atleast_1d(np.asarray(ts, float))
    nz = phi > 0
    a, ps, ph = a[nz], psi_vals[nz], phi[nz]
    even = (np.flatnonzero(nz) % 2) == 0
    grad = np.max(np.abs(q - np.gradient(ps, a))) if len(a) > 1 else abs(q)
    if h * ts.max() * max(grad, abs(q)) > nyquist:
        raise NyquistError("phase oscillation too fast for grid step")
    phase = q * a - ps
    out = np.empty(len(ts), complex)
    err = np.empty(len(ts))
    for s in range(0, len(ts), chunk):
        E = np.exp(1j * np.outer(ts[s : s + chunk], phase))
        Ih = (E @ ph) * h
        I2 = (E[:, even] @ ph[even]) * 2 * h
        out[s : s + chunk] = Ih
        err[s : s + chunk] = np.abs(Ih - I2)
    return out, err


def nonstationary_phase_check(
    pt: StabilizerPoint,
    eta: Covector,
    z,
    bump: BumpFunction,
    xi_sphere_grid,
    t_grid=DEFAULT_T_GRID,
    eps: float = 0.1,
    chart_radius: float = 0.5,
    target: float | None = None,
    n_window: int = 48,
    compensate: float | None = None,
) -> DecayReport:
    """Decay in ``t`` of ``int_{g_x} e^{i t (<xi, Y> - <eta, log(e^Y e^Z)>)} phi(Y) dY``.

    ``xi_sphere_grid`` holds local covectors on ``g_x`` (values on the
    orthonormal frame); points inside ``B_{2 eps}(q_x(eta))`` are rejected.
    """
    a, psi_vals, phi = _nsp_grid(pt, eta, z, bump, chart_radius)
    qeta = pt.restrict(eta.coords)
    m = bump.N + 2 if compensate is None else compensate
    records = []
    for xi in np.atleast_2d(np.asarray(xi_sphere_grid, float)):
        if np.linalg.norm(xi - qeta) < 2 * eps:
            raise ValueError("xi inside the excluded ball B_{2 eps}(q_x(eta))")
        q = float(xi[0])
        ev = lambda ts, q=q: _nsp_integrals(a, psi_vals, phi, bump.h, q, ts)  # noqa: E731
        carrier = _carrier(bump, np.linalg.norm(xi - qeta))
        records.append(_decay_record(0, xi, t_grid, ev, target, "<=", n_window, m, carrier))
    return DecayReport(records, target, "nonstationary_phase")


def xi_scaling_exponent(
    pt: StabilizerPoint,
    eta: Covector,
    z,
    bump: BumpFunction,
    direction: float,
    t: float,
    s_grid=np.logspace(2, 4, 9),
    chart_radius: float = 0.5,
    n_window: int = 48,
    compensate: float | None = None,
):
    """Fitted exponent of ``|I|`` in ``<xi> = sqrt(1 + |xi|^2)`` for ``xi = s * direction``
    at fixed ``t`` (local frame, ``dim g_x = 1``).  Returns ``(exponent, residual)``.
    """
    a, psi_vals, phi = _nsp_grid(pt, eta, z, bump, chart_radius)
    u = float(np.sign(direction)) or 1.0
    m = bump.N + 2 if compensate is None else compensate

    def ev(ss):
        # I(t, s u) with a t-independent eta term requires evaluating each s separately
        ss = np.atleast_1d(ss)
        out = np.empty(len(ss), complex)
        err = np.empty(len(ss))
        # phase t (s u a - psi(a)) = (t s) (u a - psi(a) / s)
        for i, s in enumerate(ss):
            v, e = _nsp_integrals(a, psi_vals / s, phi, bump.h, u, [t * s])
            out[i], err[i] = v[0], e[0]
        return out, err

    s_grid = np.asarray(s_grid, float)
    upper = s_grid[len(s_grid) // 2 :]
    env = rms_envelope(upper, lambda ss: ev(ss)[0], n_window, compensate=m, carrier=_carrier(bump, t))
    slope, _, res = fit_slope(np.sqrt(1 + upper**2), env, upper_half=False)
    return slope, res


def ss_constant_sweep(
    orders=range(1, 9),
    inner: float = 0.5,
    gap: float = 0.1,
    t_grid=np.logspace(1, 3, 9),
    xi: float = 1.0,
):
    """Empirical ``C_N = max_t t^N |I_N(t)|`` for bumps of matched order ``N``,
    compared against ``c_hat^(N+1) (N+1)^N``.  Returns a list of dicts."""
    rows = []
    t_grid = np.asarray(t_grid, float)
    for N in orders:
        w = gap / (2 * (N + 1))
        h = min(w / 8, np.pi / (4 * t_grid.max() * abs(xi)))
        b = build_bump(N, inner, inner + gap, h)
        vals, _ = oscillatory_integrals(b.grid_function(), [xi], t_grid)
        CN = float(np.max(t_grid**N * np.abs(vals)))
        bound = b.c_hat ** (N + 1) * (N + 1) ** N
        rows.append({"N": N, "C_N": CN, "bound": bound, "ok": bool(CN <= bound)})
    return rows


# ---------------------------------------------------------------------------
# packaged experiments
# ---------------------------------------------------------------------------

DEFAULT_BUMP = {"N": 4, "inner": 0.5, "gap": 0.15}


def experiment_bump(N: int = 4, inner: float = 0.5, gap: float = 0.15, t_max: float = 1e4, freq_max: float = 1.0) -> BumpFunction:
    """Order-``N`` bump on ``[-inner, inner] / [-inner-gap, inner+gap]`` resolved for the ladder."""
    h = ladder_resolution(N, gap, t_max, freq_max)
    return build_bump(N, inner, inner + gap, h)


def compact_condition_u(
    N: int = 4,
    characters=(1, 2, 3),
    n_points: int = 16,
    seed: int = 0,
    q_range=(0.75, 1.0),
    t_grid=DEFAULT_T_GRID,
    n_window: int = 48,
) -> dict:
    """Condition U on ``SU(2)/T`` for the characters ``e^{i n theta}``.

    For each sampled ``x`` and character, one ambient ``xi`` restricting to a
    local frequency ``|q|`` in ``q_range`` (with a random component normal to
    ``g_x``) must decay with slope ``<= -N + 1/2``; the aligned frequency
    ``xi in g_x^perp`` (``q = 0``) is the negative control, slope ``>= -1/2``.
    Returns ``{"decay": DecayReport, "control": DecayReport}``.
    """
    from .homspace import sample_points
    from .realizations import builtin_space

    space = builtin_space("SU2/T")
    t_grid = np.asarray(t_grid, float)
    bump = experiment_bump(N, DEFAULT_BUMP["inner"], DEFAULT_BUMP["gap"], float(t_grid.max()), float(q_range[1]))
    pts = sample_points(space, n_points, seed)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(21,)))
    decay, control = [], []
    for i, pt in enumerate(pts):
        for n in characters:
            rep = torus_character(int(n), space.algebra)
            q = rng.uniform(*q_range) * rng.choice([-1.0, 1.0])
            w = rng.standard_normal(space.algebra.dim - pt.k)
            xi = pt.lift([q], w)
            probe = DecayProbe(pt, rep, bump, [1.0], [1.0], 1.0, 1.0, xi[None], t_grid, 0.5, i)
            decay.extend(condition_u_probe(probe, target=-N + 0.5, n_window=n_window).records)
            if n == characters[0]:
                xc = pt.lift([0.0], w)
                ctrl = DecayProbe(pt, rep, bump, [1.0], [1.0], 1.0, 1.0, xc[None], t_grid, 0.5, i)
                control.extend(condition_u_probe(ctrl, target=-0.5, compare=">=", n_window=n_window).records)
    return {"decay": DecayReport(decay, -N + 0.5, "condition_u"), "control": DecayReport(control, -0.5, "condition_u_control")}


def nsp_experiment(
    N: int = 4,
    z_norm: float = 0.05,
    seed: int = 0,
    offsets=(0.8, -0.9),
    t_grid=DEFAULT_T_GRID,
    n_window: int = 48,
) -> dict:
    """Uniform non-stationary phase on ``SU(2)/T``: decay slopes at ``z = 0`` and
    at a perturbation ``|z| = z_norm`` normal to ``g_x``, and the ``<xi>``-exponent.

    Local frequencies are ``q_x(eta) + offset``, outside ``B_{2 eps}(q_x(eta))``.
    """
    from .homspace import sample_points
    from .realizations import builtin_space

    space = builtin_space("SU2/T")
    alg = space.algebra
    t_grid = np.asarray(t_grid, float)
    pt = sample_points(space, 1, seed)[0]
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(22,)))
    eta_c = rng.standard_normal(alg.dim)
    eta = Covector(alg, 0.3 * eta_c / alg.covector_norm(eta_c))
    qeta = pt.restrict(eta.coords)
    freq_max = float(np.max(np.abs(qeta[0] + np.asarray(offsets)))) + 0.3
    bump = experiment_bump(N, DEFAULT_BUMP["inner"], DEFAULT_BUMP["gap"], float(t_grid.max()), freq_max)
    dirn = rng.standard_normal(alg.dim - pt.k)
    dirn /= np.linalg.norm(dirn)
    z = z_norm * (dirn @ pt.perp_basis) / float(alg.norm(dirn @ pt.perp_basis))
    grid = (qeta[0] + np.asarray(offsets, float))[:, None]
    base = nonstationary_phase_check(pt, eta, np.zeros(alg.dim), bump, grid, t_grid, target=-N + 0.5, n_window=n_window)
    pert = nonstationary_phase_check(pt, eta, z, bump, grid, t_grid, target=-N + 0.5, n_window=n_window)
    exps = [xi_scaling_exponent(pt, eta, z, bump, float(np.sign(o)), 1.0, n_window=n_window) for o in offsets]
    return {
        "unperturbed": base,
        "perturbed": pert,
        "slope_change": float(max(abs(a.slope - b.slope) for a, b in zip(base.records, pert.records))),
        "xi_exponents": [float(e[0]) for e in exps],
        "xi_residuals": [float(e[1]) for e in exps],
        "z": z.tolist(),
        "eta": eta.coords.tolist(),
    }
