"""Matrix Lie algebra and group arithmetic.

A :class:`LieAlgebraSpec` is an ordered basis of real ``n x n`` matrices.
Algebra elements and covectors are coordinate vectors in that basis.  A
covector ``xi`` stands for the functional ``Y -> Tr(X_xi Y)`` where ``X_xi`` is
the matrix with the same coordinates (the trace-form identification).

Norms: algebra elements use the Frobenius norm of the matrix realization.
Covectors use the dual norm of the Frobenius product, i.e. the norm of
the Riesz representative ``Y*`` with ``<Y*, Y>_F = Tr(X_xi Y)``.  For every
realization in :mod:`wfcones.realizations` (all closed under transposition)
the dual norm of ``xi`` coincides with ``||X_xi||_F``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg as sla

__all__ = [
    "LieAlgebraSpec",
    "AlgebraElement",
    "Covector",
    "GroupElement",
    "ElementClass",
    "AlgebraError",
    "Unclassifiable",
    "InjectivityRadiusError",
    "bracket",
    "trace_pairing",
    "group_exp",
    "group_log",
    "adjoint",
    "coadjoint",
    "classify",
    "conjugate_to_cartan",
    "semisimple_density",
    "sample_unit_coords",
    "sample_group",
    "sample_group_batch",
    "orthonormalize",
    "complement",
]

CLOSURE_TOL = 1e-10
REEXPRESS_TOL = 1e-10
INJECTIVITY_RADIUS = 1.0


class AlgebraError(ValueError):
    """Raised on malformed specs, mismatched algebras or failed re-expression."""


class Unclassifiable(ArithmeticError):
    """The eigenproblem is too ill-conditioned for a trustworthy verdict."""


class InjectivityRadiusError(ValueError):
    """``group_log`` was asked for a logarithm outside the configured radius."""


# ---------------------------------------------------------------------------
# spec
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class LieAlgebraSpec:
    """Matrix realization of a real Lie algebra.

    ``cartan_reps`` maps a name to a ``(rank, dim)`` array of coordinate rows
    spanning a standard Cartan subalgebra.  ``factors`` records a direct-sum
    structure as ``(row offset, coordinate offset, factor spec)`` triples and is
    used by :func:`conjugate_to_cartan` to work block by block.
    """

    name: str
    basis: np.ndarray = field(repr=False)
    rank: int
    cartan_reps: dict[str, np.ndarray] = field(default_factory=dict, repr=False)
    constraint: dict | None = field(default=None, repr=False)
    factors: tuple = field(default=(), repr=False)
    inner_product: str = "frobenius"
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        self.basis = np.asarray(self.basis, dtype=float)
        if self.basis.ndim != 3 or self.basis.shape[1] != self.basis.shape[2]:
            raise AlgebraError("basis must have shape (dim, n, n)")
        self.cartan_reps = {
            k: np.atleast_2d(np.asarray(v, dtype=float)) for k, v in self.cartan_reps.items()
        }
        if self.constraint is not None:
            self.constraint = {
                "type": self.constraint["type"],
                "form": np.asarray(self.constraint["form"], dtype=float),
            }
        if self.check:
            self.validate()

    # -- derived linear algebra -------------------------------------------
    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[1]

    @cached_property
    def flat(self) -> np.ndarray:
        return self.basis.reshape(self.dim, -1)

    @cached_property
    def gram(self) -> np.ndarray:
        """Frobenius Gram matrix of the basis."""
        return self.flat @ self.flat.T

    @cached_property
    def trace_gram(self) -> np.ndarray:
        """``T[i, j] = Tr(b_i b_j)``."""
        return np.einsum("iab,jba->ij", self.basis, self.basis)

    @cached_property
    def _coord_map(self) -> np.ndarray:
        # coords = vec(M) @ C  solves the least-squares re-expression
        return np.linalg.solve(self.gram, self.flat).T

    @cached_property
    def riesz_map(self) -> np.ndarray:
        """Coordinates of the Frobenius-Riesz representative, ``F^-1 T``."""
        return np.linalg.solve(self.gram, self.trace_gram)

    @cached_property
    def covector_metric(self) -> np.ndarray:
        """Dual Frobenius metric on covector coordinates, ``T F^-1 T``.

        Falls back to the Frobenius Gram matrix when the trace form is
        degenerate on this algebra (non-reductive algebras).
        """
        m = self.trace_gram @ self.riesz_map
        m = 0.5 * (m + m.T)
        if np.linalg.matrix_rank(self.trace_gram, tol=1e-10 * np.abs(self.trace_gram).max(initial=1.0)) < self.dim:
            return self.gram
        return m

    @cached_property
    def _chol_el(self) -> np.ndarray:
        return np.linalg.cholesky(self.gram)

    @cached_property
    def _chol_cov(self) -> np.ndarray:
        return np.linalg.cholesky(self.covector_metric)

    # -- conversions --------------------------------------------------------
    def matrix(self, coords) -> np.ndarray:
        """Matrices for coordinate arrays of shape ``(..., dim)``."""
        return np.tensordot(np.asarray(coords, dtype=float), self.basis, axes=(-1, 0))

    def coords(self, mats, check: bool = True, tol: float = REEXPRESS_TOL) -> np.ndarray:
        """Re-express matrices ``(..., n, n)`` in the basis.

        Raises :class:`AlgebraError` when a matrix is not in the span within
        ``tol`` relative to its norm.
        """
        mats = np.asarray(mats, dtype=float)
        n = self.ambient_dim
        v = mats.reshape(mats.shape[:-2] + (n * n,))
        c = v @ self._coord_map
        if check:
            resid = np.linalg.norm(v - c @ self.flat, axis=-1)
            scale = np.maximum(np.linalg.norm(v, axis=-1), 1.0)
            if np.any(resid > tol * scale):
                raise AlgebraError(
                    f"re-expression residual {resid.max():.3e} exceeds tolerance in {self.name}"
                )
        return c

    def norm(self, coords) -> np.ndarray:
        """Frobenius norm of algebra elements."""
        c = np.asarray(coords, dtype=float)
        return np.sqrt(np.maximum(np.einsum("...i,ij,...j->...", c, self.gram, c), 0.0))

    def covector_norm(self, coords) -> np.ndarray:
        c = np.asarray(coords, dtype=float)
        return np.sqrt(np.maximum(np.einsum("...i,ij,...j->...", c, self.covector_metric, c), 0.0))

    def whiten_covector(self, coords) -> np.ndarray:
        """Map covector coordinates to Euclidean coordinates of the dual metric."""
        return np.asarray(coords, dtype=float) @ self._chol_cov

    def unwhiten_covector(self, w) -> np.ndarray:
        return np.linalg.solve(self._chol_cov.T, np.asarray(w, dtype=float).T).T

    def whiten(self, coords) -> np.ndarray:
        """Euclidean coordinates of algebra elements under the Frobenius product."""
        return np.asarray(coords, dtype=float) @ self._chol_el

    def unwhiten(self, w) -> np.ndarray:
        return np.linalg.solve(self._chol_el.T, np.asarray(w, dtype=float).T).T

    def inner(self, a, b) -> np.ndarray:
        return np.einsum("...i,ij,...j->...", np.asarray(a, float), self.gram, np.asarray(b, float))

    def ad_matrix(self, coords) -> np.ndarray:
        """Matrix of ``ad_y`` acting on coordinates; batched over leading axes."""
        y = self.matrix(coords)
        br = y[..., None, :, :] @ self.basis - self.basis @ y[..., None, :, :]
        return np.swapaxes(self.coords(br, check=False), -1, -2)

    def Ad_matrix(self, g: np.ndarray) -> np.ndarray:
        """Matrix of ``Ad(g)`` acting on coordinates."""
        g = np.asarray(g, dtype=float)
        gi = np.linalg.inv(g)
        conj = g[..., None, :, :] @ self.basis @ gi[..., None, :, :]
        return np.swapaxes(self.coords(conj, check=False), -1, -2)

    def element(self, coords) -> "AlgebraElement":
        return AlgebraElement(self, np.asarray(coords, dtype=float))

    def covector(self, coords) -> "Covector":
        return Covector(self, np.asarray(coords, dtype=float))

    def identity(self) -> "GroupElement":
        return GroupElement(np.eye(self.ambient_dim), self)

    # -- validation -----------------------------------------------------------
    def validate(self, tol: float = CLOSURE_TOL) -> None:
        F = self.gram
        s = np.linalg.svd(F, compute_uv=False)
        if s.min() <= 1e-12 * s.max():
            raise AlgebraError(f"{self.name}: basis matrices are linearly dependent")
        scale = max(np.abs(self.basis).max(), 1.0) ** 2
        br = self.basis[:, None] @ self.basis[None, :] - self.basis[None, :] @ self.basis[:, None]
        self.coords(br.reshape((-1,) + br.shape[2:]), tol=tol * scale)
        for name, rows in self.cartan_reps.items():
            if rows.shape != (self.rank, self.dim):
                raise AlgebraError(f"{self.name}: cartan rep {name!r} must have {self.rank} rows")
            if np.linalg.matrix_rank(rows, tol=1e-10) != self.rank:
                raise AlgebraError(f"{self.name}: cartan rep {name!r} is not {self.rank}-dimensional")
            m = self.matrix(rows)
            comm = m[:, None] @ m[None, :] - m[None, :] @ m[:, None]
            if np.abs(comm).max(initial=0.0) > tol * scale:
                raise AlgebraError(f"{self.name}: cartan rep {name!r} is not abelian")
        if self.constraint is not None:
            M = self.constraint["form"]
            lin = np.swapaxes(self.basis, -1, -2) @ M + M @ self.basis
            if np.abs(lin).max() > tol * scale:
                raise AlgebraError(f"{self.name}: basis violates the {self.constraint['type']} constraint")

    # -- JSON -----------------------------------------------------------------
    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "ambient_dim": self.ambient_dim,
            "basis": [b.reshape(-1).tolist() for b in self.basis],
            "rank": self.rank,
            "cartan_reps": {
                k: [self.matrix(r).reshape(-1).tolist() for r in rows]
                for k, rows in sorted(self.cartan_reps.items())
            },
            "inner_product": self.inner_product,
        }
        if self.constraint is not None:
            d["constraint"] = {
                "type": self.constraint["type"],
                "form": self.constraint["form"].tolist(),
            }
        if self.factors:
            d["factors"] = [
                {"row_offset": r, "coord_offset": c, "spec": f.to_dict()} for r, c, f in self.factors
            ]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LieAlgebraSpec":
        n = int(d["ambient_dim"])
        basis = np.asarray(d["basis"], dtype=float).reshape(-1, n, n)
        probe = cls(d["name"], basis, int(d["rank"]), check=False)
        reps = {}
        for k, mats in d.get("cartan_reps", {}).items():
            mats = np.asarray(mats, dtype=float).reshape(-1, n, n)
            reps[k] = probe.coords(mats)
        factors = tuple(
            (int(f["row_offset"]), int(f["coord_offset"]), cls.from_dict(f["spec"]))
            for f in d.get("factors", [])
        )
        return cls(
            d["name"],
            basis,
            int(d["rank"]),
            cartan_reps=reps,
            constraint=d.get("constraint"),
            factors=factors,
            inner_product=d.get("inner_product", "frobenius"),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def load(cls, path: str | Path) -> "LieAlgebraSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True))


# ---------------------------------------------------------------------------
# elements
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class AlgebraElement:
    algebra: LieAlgebraSpec = field(repr=False)
    coords: np.ndarray

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=float).reshape(-1)
        if self.coords.shape[0] != self.algebra.dim:
            raise AlgebraError(
                f"expected {self.algebra.dim} coordinates for {self.algebra.name}, got {self.coords.shape[0]}"
            )

    @property
    def matrix(self) -> np.ndarray:
        return self.algebra.matrix(self.coords)

    def norm(self) -> float:
        return float(self.algebra.norm(self.coords))

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        _same(self.algebra, other.algebra)
        return AlgebraElement(self.algebra, self.coords + other.coords)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        _same(self.algebra, other.algebra)
        return AlgebraElement(self.algebra, self.coords - other.coords)

    def __mul__(self, s: float) -> "AlgebraElement":
        return AlgebraElement(self.algebra, float(s) * self.coords)

    __rmul__ = __mul__

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement(self.algebra, -self.coords)


@dataclass(eq=False)
class Covector:
    """Element of ``i g*``, stored by trace-form coordinates."""

    algebra: LieAlgebraSpec = field(repr=False)
    coords: np.ndarray

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=float).reshape(-1)
        if self.coords.shape[0] != self.algebra.dim:
            raise AlgebraError("covector coordinate length does not match the algebra")

    @property
    def matrix(self) -> np.ndarray:
        return self.algebra.matrix(self.coords)

    def norm(self) -> float:
        return float(self.algebra.covector_norm(self.coords))

    def riesz(self) -> AlgebraElement:
        """Frobenius-Riesz representative: ``<riesz, Y>_F = <xi, Y>``."""
        return AlgebraElement(self.algebra, self.algebra.riesz_map @ self.coords)

    def normalized(self) -> "Covector":
        n = self.norm()
        if n == 0.0:
            raise AlgebraError("cannot normalize the zero covector")
        return Covector(self.algebra, self.coords / n)

    def __mul__(self, s: float) -> "Covector":
        return Covector(self.algebra, float(s) * self.coords)

    __rmul__ = __mul__

    def __add__(self, other: "Covector") -> "Covector":
        _same(self.algebra, other.algebra)
        return Covector(self.algebra, self.coords + other.coords)


@dataclass(eq=False)
class GroupElement:
    matrix: np.ndarray
    algebra: LieAlgebraSpec = field(repr=False)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        n = self.algebra.ambient_dim
        if self.matrix.shape != (n, n):
            raise AlgebraError(f"group element must be {n}x{n}")
        if abs(np.linalg.det(self.matrix)) == 0.0:
            raise AlgebraError("group element is singular")

    def constraint_defect(self) -> float:
        c = self.algebra.constraint
        if c is None:
            return 0.0
        M = c["form"]
        return float(np.abs(self.matrix.T @ M @ self.matrix - M).max() / max(1.0, np.abs(M).max()))

    def inv(self) -> "GroupElement":
        return GroupElement(np.linalg.inv(self.matrix), self.algebra)

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        _same(self.algebra, other.algebra)
        return GroupElement(self.matrix @ other.matrix, self.algebra)

    def op_norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))


def _same(a: LieAlgebraSpec, b: LieAlgebraSpec) -> None:
    if a is not b and a.name != b.name:
        raise AlgebraError(f"mismatched algebras: {a.name} vs {b.name}")


# ---------------------------------------------------------------------------
# basic operations
# ---------------------------------------------------------------------------


def bracket(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    _same(a.algebra, b.algebra)
    A, B = a.matrix, b.matrix
    M = A @ B - B @ A
    c = a.algebra.coords(M, check=False)
    resid = float(np.linalg.norm(M - a.algebra.matrix(c)))
    if resid > REEXPRESS_TOL * max(a.norm() * b.norm(), np.finfo(float).tiny):
        raise AlgebraError(f"bracket re-expression residual {resid:.3e} too large")
    return AlgebraElement(a.algebra, c)


def trace_pairing(x: Covector, y: AlgebraElement) -> float:
    _same(x.algebra, y.algebra)
    return float(x.coords @ x.algebra.trace_gram @ y.coords)


def group_exp(y: AlgebraElement) -> GroupElement:
    return GroupElement(sla.expm(y.matrix), y.algebra)


def group_log(g: GroupElement, radius: float = INJECTIVITY_RADIUS) -> AlgebraElement:
    """Principal logarithm for ``||g - I||_2 < radius``."""
    dist = np.linalg.norm(g.matrix - np.eye(g.matrix.shape[0]), 2)
    if dist >= radius:
        raise InjectivityRadiusError(f"||g - I|| = {dist:.3g} is outside the injectivity radius {radius}")
    L = sla.logm(g.matrix)
    if np.iscomplexobj(L):
        L = L.real
    return AlgebraElement(g.algebra, g.algebra.coords(L, tol=1e-8))


def adjoint(g: GroupElement, y: AlgebraElement) -> AlgebraElement:
    _same(g.algebra, y.algebra)
    M = g.matrix @ y.matrix @ np.linalg.inv(g.matrix)
    return AlgebraElement(y.algebra, y.algebra.coords(M, tol=1e-9))


def coadjoint(g: GroupElement, xi: Covector) -> Covector:
    """``Ad*(g)``, characterized by ``<Ad*(g) xi, Y> = <xi, Ad(g^-1) Y>``."""
    _same(g.algebra, xi.algebra)
    M = g.matrix @ xi.matrix @ np.linalg.inv(g.matrix)
    return Covector(xi.algebra, xi.algebra.coords(M, tol=1e-9))


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

KINDS = (
    "zero",
    "semisimple-hyperbolic",
    "semisimple-elliptic",
    "semisimple-mixed",
    "nilpotent",
    "mixed",
)


@dataclass
class ElementClass:
    kind: str
    regular: bool
    eigen_profile: list
    centralizer_dim: int
    semisimple: bool

    def describe(self) -> str:
        if self.kind == "zero":
            return "zero element"
        return f"{self.kind}, {'regular' if self.regular else 'not regular'}"

    @property
    def is_elliptic(self) -> bool:
        return self.kind == "semisimple-elliptic"

    @property
    def is_hyperbolic(self) -> bool:
        return self.kind == "semisimple-hyperbolic"


def _cluster(eigs: np.ndarray, tol: float) -> list[np.ndarray]:
    """Group eigenvalues into classes of mutually close values (single linkage)."""
    n = len(eigs)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(eigs[i] - eigs[j]) <= tol:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [np.array(v) for v in groups.values()]


def classify(
    y: AlgebraElement,
    eig_tol: float = 1e-7,
    rank_tol: float = 1e-8,
    gray: float = 10.0,
) -> ElementClass:
    """Numerical Jordan-type classification of ``y``.

    ``eig_tol`` clusters eigenvalues (relative to ``||Y||_F``); ``rank_tol`` is
    the singular-value threshold of the rank tests ``rank(Y - lambda I)``.  A
    singular value inside the band ``(rank_tol, gray * rank_tol]`` makes the
    rank ambiguous and raises :class:`Unclassifiable`.
    """
    M = y.matrix
    n = M.shape[0]
    nrm = float(np.linalg.norm(M))
    if nrm == 0.0 or not np.isfinite(nrm):
        if not np.isfinite(nrm):
            raise Unclassifiable("non-finite element")
        return ElementClass("zero", False, [0.0] * n, y.algebra.dim, True)
    eigs = np.linalg.eigvals(M)
    order = np.lexsort((eigs.imag, eigs.real))
    eigs = eigs[order]
    groups = _cluster(eigs, eig_tol * nrm)
    semisimple = True
    for idx in groups:
        lam = eigs[idx].mean()
        m = len(idx)
        s = np.linalg.svd(M - lam * np.eye(n), compute_uv=False)  # descending
        small = s[n - m :]
        thr = rank_tol * nrm
        worst = small.max()
        if thr < worst <= gray * thr:
            raise Unclassifiable(f"rank test ambiguous near eigenvalue {lam:.3g}")
        if worst > gray * thr:
            semisimple = False
        if m < n and thr < s[n - m - 1] <= gray * thr:
            raise Unclassifiable(f"eigenvalue cluster near {lam:.3g} is ill-separated")
    tol_abs = eig_tol * nrm
    reals = np.all(np.abs(eigs.imag) <= tol_abs)
    imags = np.all(np.abs(eigs.real) <= tol_abs)
    if semisimple:
        kind = "semisimple-hyperbolic" if reals else "semisimple-elliptic" if imags else "semisimple-mixed"
    else:
        kind = "nilpotent" if np.all(np.abs(eigs) <= tol_abs) else "mixed"
    ad = y.algebra.ad_matrix(y.coords)
    sa = np.linalg.svd(ad, compute_uv=False)
    cdim = int(np.sum(sa <= rank_tol * max(sa.max(), nrm)))
    regular = semisimple and cdim == y.algebra.rank
    profile = [complex(round(e.real, 12), round(e.imag, 12)) for e in eigs]
    return ElementClass(kind, bool(regular), profile, cdim, bool(semisimple))


# ---------------------------------------------------------------------------
# conjugation to a standard Cartan subalgebra
# ---------------------------------------------------------------------------


def _in_cartan(alg: LieAlgebraSpec, c: np.ndarray, tol: float = 1e-10):
    for name, rows in alg.cartan_reps.items():
        G = rows @ alg.gram @ rows.T
        a = np.linalg.solve(G, rows @ alg.gram @ c)
        if alg.norm(c - a @ rows) <= tol * max(alg.norm(c), 1e-300):
            return name
    return None


def _conj_2x2(alg: LieAlgebraSpec, c: np.ndarray):
    """Eigenvector construction of ``P`` with ``det P = 1`` and ``P^-1 Y P`` standard."""
    Y = alg.matrix(c)
    w, V = np.linalg.eig(Y)
    if np.all(np.abs(w.imag) <= 1e-12 * np.linalg.norm(Y)):
        i = int(np.argmax(w.real))
        P = np.column_stack([V[:, i].real, V[:, 1 - i].real])
    else:
        i = int(np.argmax(w.imag))
        v = V[:, i]
        P = np.column_stack([v.real, v.imag])
    d = np.linalg.det(P)
    if d < 0:
        P[:, 1] *= -1.0
        d = -d
    P = P / np.sqrt(d)
    y0 = alg.coords(np.linalg.solve(P, Y @ P), tol=1e-8)
    return P, y0


def _conj_optimize(alg: LieAlgebraSpec, c: np.ndarray, rng: np.random.Generator, restarts: int = 8):
    from scipy.optimize import least_squares

    scale = float(np.sqrt(c @ alg.gram @ c))
    best = None
    for name, rows in alg.cartan_reps.items():
        G = rows @ alg.gram @ rows.T
        proj = rows.T @ np.linalg.solve(G, rows @ alg.gram)

        def off(wc):
            g = sla.expm(alg.matrix(wc))
            z = alg.Ad_matrix(np.linalg.inv(g)) @ c
            return alg.whiten(z - proj @ z) / scale

        for k in range(restarts):
            w0 = np.zeros(alg.dim) if k == 0 else 0.5 * rng.standard_normal(alg.dim)
            res = least_squares(off, w0, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=4000)
            val = float(np.linalg.norm(res.fun))
            if best is None or val < best[0]:
                best = (val, res.x, name)
            if best[0] < 1e-11:
                break
        if best[0] < 1e-11:
            break
    val, wc, name = best
    if val > 1e-8:
        raise AlgebraError(f"conjugation to a Cartan subalgebra did not converge (defect {val:.2e})")
    g = sla.expm(alg.matrix(wc))
    rows = alg.cartan_reps[name]
    z = alg.Ad_matrix(np.linalg.inv(g)) @ c
    G = rows @ alg.gram @ rows.T
    y0 = np.linalg.solve(G, rows @ alg.gram @ z) @ rows
    return g, y0


def conjugate_to_cartan(y: AlgebraElement, seed: int = 0):
    """Return ``(g, y0, C)`` with ``Ad(g) y0 = y``, ``y0`` in a standard Cartan
    subalgebra, and ``C = ||y0|| / ||y||``.

    Two-by-two realizations (and direct sums of them) use the eigenvector
    construction; other realizations fall back to minimizing the off-Cartan
    part of ``Ad(g^-1) y`` in exponential coordinates.
    """
    alg = y.algebra
    cls = classify(y)
    if not cls.semisimple:
        raise AlgebraError(f"conjugate_to_cartan needs a semisimple element, got {cls.kind}")
    c = y.coords
    nrm = y.norm()
    if cls.kind == "zero" or _in_cartan(alg, c) is not None:
        return alg.identity(), AlgebraElement(alg, c.copy()), 1.0
    if alg.factors:
        P = np.zeros((alg.ambient_dim, alg.ambient_dim))
        y0 = np.zeros(alg.dim)
        for roff, coff, fac in alg.factors:
            cf = c[coff : coff + fac.dim]
            sub = AlgebraElement(fac, cf)
            if fac.norm(cf) == 0.0:
                gf, y0f = np.eye(fac.ambient_dim), cf
            else:
                gfe, y0e, _ = conjugate_to_cartan(sub, seed=seed)
                gf, y0f = gfe.matrix, y0e.coords
            n = fac.ambient_dim
            P[roff : roff + n, roff : roff + n] = gf
            y0[coff : coff + fac.dim] = y0f
        g = GroupElement(P, alg)
    elif alg.ambient_dim == 2:
        P, y0 = _conj_2x2(alg, c)
        g = GroupElement(P, alg)
    else:
        gm, y0 = _conj_optimize(alg, c, np.random.default_rng(seed))
        g = GroupElement(gm, alg)
    back = adjoint(g, AlgebraElement(alg, y0))
    if alg.norm(back.coords - c) > 1e-7 * max(nrm, 1.0):
        raise AlgebraError("conjugation check Ad(g) y0 = y failed")
    return g, AlgebraElement(alg, y0), float(alg.norm(y0) / nrm)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def sample_unit_coords(alg: LieAlgebraSpec, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
    """Uniform unit elements (Frobenius sphere) as coordinates."""
    shape = (alg.dim,) if n is None else (n, alg.dim)
    u = rng.standard_normal(shape)
    u /= np.linalg.norm(u, axis=-1, keepdims=True)
    return alg.unwhiten(u)


def sample_group(
    alg: LieAlgebraSpec,
    rng: np.random.Generator,
    k_max: int = 3,
    r_range: tuple[float, float] = (0.0, 1.5),
) -> GroupElement:
    """Product of at most ``k_max`` exponentials ``exp(r U)`` with unit ``U``."""
    k = int(rng.integers(1, k_max + 1))
    g = np.eye(alg.ambient_dim)
    for _ in range(k):
        u = sample_unit_coords(alg, rng)
        r = rng.uniform(*r_range)
        g = g @ sla.expm(r * alg.matrix(u))
    return GroupElement(g, alg)


CHUNK = 512


def _chunk_groups(alg, seed, index, count, k_max, r_range):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))
    n = alg.ambient_dim
    ks = rng.integers(1, k_max + 1, size=count)
    out = np.broadcast_to(np.eye(n), (count, n, n)).copy()
    for j in range(k_max):
        u = sample_unit_coords(alg, rng, count)
        r = rng.uniform(r_range[0], r_range[1], size=count)
        w = np.where(j < ks, r, 0.0)
        out = out @ sla.expm(w[:, None, None] * alg.matrix(u))
    return out


def sample_group_batch(
    alg: LieAlgebraSpec,
    n: int,
    seed: int,
    k_max: int = 3,
    r_range: tuple[float, float] = (0.0, 1.5),
    workers: int = 1,
) -> np.ndarray:
    """``n`` sampled group matrices, shape ``(n, N, N)``.

    Chunks of :data:`CHUNK` samples draw from independent child seed sequences
    indexed by chunk number, so the result does not depend on ``workers``.
    """
    nchunks = (n + CHUNK - 1) // CHUNK
    sizes = [min(CHUNK, n - i * CHUNK) for i in range(nchunks)]
    args = [(alg, seed, i, sizes[i], k_max, r_range) for i in range(nchunks)]
    if workers > 1 and nchunks > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(lambda a: _chunk_groups(*a), args))
    else:
        parts = [_chunk_groups(*a) for a in args]
    if not parts:
        return np.zeros((0, alg.ambient_dim, alg.ambient_dim))
    return np.concatenate(parts, axis=0)


def semisimple_density(alg: LieAlgebraSpec, n_samples: int, seed: int) -> float:
    """Fraction of uniformly sampled unit elements that classify semisimple."""
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    rng = np.random.default_rng(seed)
    cs = sample_unit_coords(alg, rng, n_samples)
    hits = 0
    for c in cs:
        try:
            k = classify(AlgebraElement(alg, c))
        except Unclassifiable:
            continue
        hits += k.semisimple and k.kind != "zero"
    return hits / n_samples


# ---------------------------------------------------------------------------
# subspace helpers
# ---------------------------------------------------------------------------


def orthonormalize(rows: np.ndarray, metric: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Gram-Schmidt (twice) of coordinate rows under ``metric``; drops dependent rows."""
    out: list[np.ndarray] = []
    for v in np.atleast_2d(np.asarray(rows, dtype=float)):
        w = v.copy()
        for _ in range(2):
            for q in out:
                w = w - (q @ metric @ w) * q
        nv = np.sqrt(max(w @ metric @ w, 0.0))
        if nv > tol * max(np.sqrt(abs(v @ metric @ v)), 1e-300):
            out.append(w / nv)
    return np.array(out).reshape(len(out), metric.shape[0])


def complement(rows: np.ndarray, metric: np.ndarray) -> np.ndarray:
    """Orthonormal basis (under ``metric``) of the orthogonal complement of ``rows``."""
    d = metric.shape[0]
    rows = np.atleast_2d(rows).reshape(-1, d)
    if rows.shape[0] == 0:
        return orthonormalize(np.eye(d), metric)
    # null space of rows @ metric
    A = rows @ metric
    _, s, vt = np.linalg.svd(A)
    r = int(np.sum(s > 1e-12 * max(s.max(initial=0.0), 1e-300)))
    null = vt[r:]
    return orthonormalize(null, metric)


def as_elements(alg: LieAlgebraSpec, rows: Sequence) -> list[AlgebraElement]:
    return [AlgebraElement(alg, r) for r in np.atleast_2d(rows)]
