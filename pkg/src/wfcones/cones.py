"""Closed Ad*-invariant cones: annihilators, induced cones, asymptotic cones.

Cones live in ``i g*`` and are handled through their unit spheres in the
whitened covector coordinates (Euclidean coordinates of the dual Frobenius
metric).  Distances are chord distances ``|u - s|`` between unit vectors,
which is what every threshold in this module refers to.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .algebra import (
    Covector,
    LieAlgebraSpec,
    Unclassifiable,
    classify,
    orthonormalize,
    sample_group_batch,
)
from .realizations import HomogeneousSpaceSpec

__all__ = [
    "ConeError",
    "ConePredicate",
    "ConeSampleSet",
    "InducedConeSpec",
    "annihilator",
    "restriction_matrix",
    "sample_induced_cone",
    "distance_to_cone",
    "ParamFamily",
    "ExplicitFamily",
    "RayFamily",
    "LatticeFamily",
    "ACVerdict",
    "ac_membership",
    "ComparisonReport",
    "compare_cones",
    "sl2_region",
    "THETA_TOL",
]

THETA_TOL = 1e-2


class ConeError(ValueError):
    pass


def _unit_whitened(alg: LieAlgebraSpec, coords) -> np.ndarray:
    w = alg.whiten_covector(np.atleast_2d(np.asarray(coords, dtype=float)))
    n = np.linalg.norm(w, axis=1, keepdims=True)
    if np.any(n == 0.0):
        raise ConeError("distance to a cone is undefined for the zero covector")
    return w / n


def _chord(angle):
    return 2.0 * np.sin(0.5 * np.asarray(angle))


# ---------------------------------------------------------------------------
# predicates
# ---------------------------------------------------------------------------

# polar-angle bands (degrees from the +z axis) of the sl2 regions, in the
# coordinates X_{x,y,z}; the dual metric is 2 I so angles are those of (x, y, z)
_SL2_BANDS = {
    "hyp": (45.0, 135.0),  # closure of the hyperbolic set
    "ell+": (0.0, 45.0),  # closure of the upper elliptic sheet
    "ell-": (135.0, 180.0),
    "nilp+": (45.0, 45.0),
    "nilp-": (135.0, 135.0),
    "all": (0.0, 180.0),
}


def sl2_region(alg: LieAlgebraSpec, *pieces: str) -> "ConePredicate":
    """Union of closed sl2 regions: ``hyp``, ``ell+``, ``ell-``, ``nilp+``, ``nilp-``,
    ``nilp`` (both nilpotent sheets) or ``all``."""
    out = []
    for p in pieces:
        out.extend(["nilp+", "nilp-"] if p == "nilp" else [p])
    for p in out:
        if p not in _SL2_BANDS:
            raise ConeError(f"unknown sl2 region {p!r}")
    return ConePredicate(alg, "sl2_region", {"pieces": sorted(set(out))})


@dataclass(eq=False)
class ConePredicate:
    """Analytically (or procedurally) specified closed cone.

    Rules: ``sl2_region`` (exact polar bands), ``ray`` (closed half-line through
    ``direction``), ``subspace`` (span of ``basis``), ``zero``, ``union``
    (``parts``: list of predicates) and ``kinds`` (classification kinds of the
    trace-form representative, with an approximate geodesic distance).
    """

    algebra: LieAlgebraSpec = field(repr=False)
    rule: str
    params: dict = field(default_factory=dict)

    # -- helpers ----------------------------------------------------------------
    def _bands(self):
        return [_SL2_BANDS[p] for p in self.params["pieces"]]

    def _polar(self, u):
        return np.degrees(np.arccos(np.clip(u[:, 2], -1.0, 1.0)))

    @property
    def is_zero(self) -> bool:
        return self.rule == "zero"

    # -- distance -----------------------------------------------------------------
    def distance(self, coords) -> np.ndarray:
        """Chord distance of unit representatives to the cone (vectorized)."""
        u = _unit_whitened(self.algebra, coords)
        rule = self.rule
        if rule == "zero":
            return np.full(len(u), np.inf)
        if rule == "sl2_region":
            phi = self._polar(u)
            best = np.full(len(u), np.inf)
            for lo, hi in self._bands():
                gap = np.where(phi < lo, lo - phi, np.where(phi > hi, phi - hi, 0.0))
                best = np.minimum(best, _chord(np.radians(gap)))
            return best
        if rule == "ray":
            d = _unit_whitened(self.algebra, self.params["direction"])[0]
            return np.linalg.norm(u - d, axis=1)
        if rule == "subspace":
            B = self.algebra.whiten_covector(np.atleast_2d(self.params["basis"]))
            Q, _ = np.linalg.qr(B.T)
            p = np.linalg.norm(u @ Q, axis=1)
            return np.sqrt(np.maximum(2.0 - 2.0 * p, 0.0))
        if rule == "union":
            return np.min([p.distance(coords) for p in self.params["parts"]], axis=0)
        if rule == "kinds":
            return self._kinds_distance(u)
        raise ConeError(f"unknown predicate rule {rule!r}")

    def contains(self, coords, tol: float = THETA_TOL) -> np.ndarray:
        return self.distance(coords) <= tol

    def _kind_member(self, u: np.ndarray) -> np.ndarray:
        alg = self.algebra
        kinds = set(self.params["kinds"])
        c = alg.unwhiten_covector(u)
        out = np.zeros(len(c), bool)
        for i, ci in enumerate(c):
            try:
                out[i] = classify(alg.element(ci)).kind in kinds
            except Unclassifiable:
                out[i] = False
        return out

    def _kinds_distance(self, u: np.ndarray, n_ref: int = 256, steps: int = 30) -> np.ndarray:
        # geodesic bisection towards sampled members; an upper bound on the truth
        rng = np.random.default_rng(12345)
        ref = self.algebra.whiten_covector(self.sample(n_ref, rng))
        inside = self._kind_member(u)
        out = np.zeros(len(u))
        for i in np.where(~inside)[0]:
            best = np.inf
            for m in ref:
                lo, hi = 0.0, 1.0
                ang = math.acos(float(np.clip(u[i] @ m, -1, 1)))
                if ang < 1e-12:
                    best = 0.0
                    break
                perp = m - (u[i] @ m) * u[i]
                perp /= np.linalg.norm(perp)
                for _ in range(steps):
                    mid = 0.5 * (lo + hi)
                    p = math.cos(mid * ang) * u[i] + math.sin(mid * ang) * perp
                    if self._kind_member(p[None])[0]:
                        hi = mid
                    else:
                        lo = mid
                best = min(best, float(_chord(hi * ang)))
            out[i] = best
        return out

    # -- sampling -------------------------------------------------------------
    def sample(self, n: int, rng: np.random.Generator, max_tries: int = 200) -> np.ndarray:
        """``n`` unit covectors (coordinates) of the cone."""
        alg = self.algebra
        d = alg.dim
        if self.rule == "zero":
            return np.zeros((0, d))
        if self.rule == "ray":
            u = _unit_whitened(alg, self.params["direction"])
            return alg.unwhiten_covector(np.repeat(u, n, axis=0))
        if self.rule == "subspace":
            B = alg.whiten_covector(np.atleast_2d(self.params["basis"]))
            Q, _ = np.linalg.qr(B.T)
            g = rng.standard_normal((n, Q.shape[1])) @ Q.T
            g /= np.linalg.norm(g, axis=1, keepdims=True)
            return alg.unwhiten_covector(g)
        if self.rule == "union":
            parts = self.params["parts"]
            sizes = [n // len(parts) + (i < n % len(parts)) for i in range(len(parts))]
            return np.concatenate([p.sample(k, rng) for p, k in zip(parts, sizes)], axis=0)
        got: list[np.ndarray] = []
        total = 0
        for _ in range(max_tries):
            w = rng.standard_normal((max(4 * n, 64), d))
            w /= np.linalg.norm(w, axis=1, keepdims=True)
            c = alg.unwhiten_covector(w)
            if self.rule == "kinds":
                keep = self._kind_member(w)
            else:
                keep = self.distance(c) == 0.0
            got.append(c[keep])
            total += int(keep.sum())
            if total >= n:
                break
        pts = np.concatenate(got, axis=0) if got else np.zeros((0, d))
        if len(pts) < n:
            if self.rule == "sl2_region" and len(pts) == 0:
                # measure-zero bands (nilpotent sheets): sample the boundary circles
                return self._sample_circles(n, rng)
            raise ConeError(f"rejection sampling found only {len(pts)} of {n} members")
        return pts[:n]

    def _sample_circles(self, n, rng):
        phi = np.radians([self._bands()[i % len(self._bands())][0] for i in range(n)])
        th = rng.uniform(0, 2 * np.pi, n)
        w = np.column_stack([np.sin(phi) * np.cos(th), np.sin(phi) * np.sin(th), np.cos(phi)])
        return self.algebra.unwhiten_covector(w)

    def to_dict(self) -> dict:
        params = {}
        for k, v in self.params.items():
            if k == "parts":
                params[k] = [p.to_dict() for p in v]
            elif isinstance(v, np.ndarray):
                params[k] = v.tolist()
            else:
                params[k] = v
        return {"algebra": self.algebra.name, "rule": self.rule, "params": params}


# ---------------------------------------------------------------------------
# sample sets
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class ConeSampleSet:
    algebra: LieAlgebraSpec = field(repr=False)
    samples: np.ndarray = field(repr=False)
    generator: dict = field(default_factory=dict)
    tags: tuple = ()
    # unit-scaled preimages in q^-1(S) with samples[i] = Ad*(g_i) preimages[i]; not serialized
    preimages: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float).reshape(-1, self.algebra.dim)

    @property
    def is_zero(self) -> bool:
        return len(self.samples) == 0

    def whitened(self) -> np.ndarray:
        return self.algebra.whiten_covector(self.samples)

    def distance(self, coords, chunk: int = 1024) -> np.ndarray:
        u = _unit_whitened(self.algebra, coords)
        if self.is_zero:
            return np.full(len(u), np.inf)
        S = self.whitened()
        out = np.empty(len(u))
        for i in range(0, len(u), chunk):
            dots = u[i : i + chunk] @ S.T
            out[i : i + chunk] = np.sqrt(np.maximum(2.0 - 2.0 * dots.max(axis=1), 0.0))
        return out

    def contains(self, coords, tol: float = THETA_TOL) -> np.ndarray:
        return self.distance(coords) <= tol

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.is_zero:
            return np.zeros((0, self.algebra.dim))
        idx = rng.choice(len(self.samples), size=min(n, len(self.samples)), replace=False)
        return self.samples[np.sort(idx)]

    def covering_estimate(self, q: float = 0.99, n_probe: int = 400, seed: int = 0) -> float:
        """Quantile of nearest-neighbour chord distances inside the cloud.

        Used as the data-driven part of the fattening tolerance: a cloud of
        this density cannot resolve features finer than a few multiples of it.
        """
        if len(self.samples) < 2:
            return 0.0
        rng = np.random.default_rng(seed)
        S = self.whitened()
        idx = rng.choice(len(S), size=min(n_probe, len(S)), replace=False)
        dots = S[idx] @ S.T
        dots[np.arange(len(idx)), idx] = -np.inf
        nn = np.sqrt(np.maximum(2.0 - 2.0 * dots.max(axis=1), 0.0))
        return float(np.quantile(nn, q))

    def to_dict(self) -> dict:
        return {
            "schema": "schema/v1/cone_sample_set",
            "algebra": self.algebra.name,
            "seed": self.generator.get("seed"),
            "n": int(len(self.samples)),
            "generator": self.generator,
            "tags": list(self.tags),
            "samples": self.samples.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict, algebra: LieAlgebraSpec) -> "ConeSampleSet":
        if d["algebra"] != algebra.name:
            raise ConeError("sample set belongs to another algebra")
        return cls(algebra, np.asarray(d["samples"], float).reshape(-1, algebra.dim), d.get("generator", {}), tuple(d.get("tags", ())))


def distance_to_cone(xi, cone: ConeSampleSet | ConePredicate) -> float:
    """Chord distance from the unit representative of ``xi`` to ``cone``."""
    coords = xi.coords if isinstance(xi, Covector) else np.asarray(xi, dtype=float)
    if np.linalg.norm(coords) == 0.0:
        raise ConeError("xi must be nonzero")
    return float(cone.distance(coords[None])[0])


# ---------------------------------------------------------------------------
# annihilators and induced cones
# ---------------------------------------------------------------------------


def restriction_matrix(space: HomogeneousSpaceSpec) -> np.ndarray:
    """``R`` with ``(R xi)_j = Tr(X_xi h_j)`` for the subalgebra basis ``h_j``."""
    return space.sub @ space.algebra.trace_gram


@dataclass(eq=False)
class InducedConeSpec:
    """``Ind_H^G S``: ambient space plus a base cone in ``i h*``.

    ``base`` is ``"zero"``, ``"all"``, or ``("ray", direction)`` with the
    direction given by its restriction values ``(<s, h_j>)_j``.
    """

    space: HomogeneousSpaceSpec
    base: object = "zero"

    @property
    def algebra(self) -> LieAlgebraSpec:
        return self.space.algebra


def annihilator(spec: InducedConeSpec | HomogeneousSpaceSpec) -> np.ndarray:
    """Covector rows spanning ``{xi : Tr(X_xi Y) = 0 for Y in h}``, orthonormal in
    the dual Frobenius metric."""
    space = spec.space if isinstance(spec, InducedConeSpec) else spec
    alg = space.algebra
    if space.dim_h == 0:
        return orthonormalize(np.eye(alg.dim), alg.covector_metric)
    R = restriction_matrix(space)
    _, s, vt = np.linalg.svd(R)
    r = int(np.sum(s > 1e-12 * s.max()))
    null = vt[r:]
    if len(null) == 0:
        return np.zeros((0, alg.dim))
    return orthonormalize(null, alg.covector_metric)


def _lift(space: HomogeneousSpaceSpec, values: np.ndarray) -> np.ndarray:
    R = restriction_matrix(space)
    return np.linalg.lstsq(R, np.asarray(values, float).T, rcond=None)[0].T


def sample_induced_cone(
    spec: InducedConeSpec,
    n: int,
    seed: int,
    k_max: int = 3,
    r_range: tuple[float, float] = (0.0, 1.5),
    workers: int = 1,
) -> ConeSampleSet:
    """``n`` unit samples ``Ad*(g) xi`` with ``xi`` in ``q^-1(base)``."""
    if n < 1:
        raise ConeError("n must be positive")
    space = spec.space
    alg = space.algebra
    ann = annihilator(space)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2**31,)))
    base = spec.base
    coef = rng.standard_normal((n, ann.shape[0])) if ann.shape[0] else np.zeros((n, 0))
    xi = coef @ ann if ann.shape[0] else np.zeros((n, alg.dim))
    if isinstance(base, tuple) and base[0] == "ray":
        s = np.abs(rng.standard_normal(n))[:, None] * np.asarray(base[1], float)[None, :]
        xi = xi + _lift(space, s)
    elif base == "all":
        xi = xi + _lift(space, rng.standard_normal((n, space.dim_h)))
    elif base != "zero":
        raise ConeError(f"unsupported base cone {base!r}")
    gen = {
        "space": space.name,
        "base": base if isinstance(base, str) else [base[0], list(map(float, base[1]))],
        "seed": int(seed),
        "n": int(n),
        "k_max": int(k_max),
        "r_range": [float(r) for r in r_range],
    }
    nz = alg.covector_norm(xi) > 1e-14
    if not np.any(nz):
        if base == "zero":
            return ConeSampleSet(alg, np.zeros((0, alg.dim)), gen, ("zero",))
        raise ConeError("base cone lift is empty")
    gs = sample_group_batch(alg, n, seed, k_max=k_max, r_range=r_range, workers=workers)
    X = alg.matrix(xi)
    conj = gs @ X @ np.linalg.inv(gs)
    c = alg.coords(conj, check=False)
    c = c[nz]
    scale = alg.covector_norm(c)[:, None]
    c /= scale
    tags = ("antipodal",) if base in ("zero", "all") else ()
    return ConeSampleSet(alg, c, gen, tags, preimages=xi[nz] / scale)


# ---------------------------------------------------------------------------
# asymptotic cones
# ---------------------------------------------------------------------------


class ParamFamily:
    """Unbounded (or finite) point set in a parameter space ``R^k``.

    Subclasses yield batches of points in nondecreasing norm order.
    """

    dim: int
    description: str = ""
    finite: bool = False

    def batches(self) -> Iterator[np.ndarray]:  # pragma: no cover - interface
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"kind": type(self).__name__, "dim": self.dim, "description": self.description}


class ExplicitFamily(ParamFamily):
    finite = True

    def __init__(self, points, description: str = "explicit"):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        self.points = pts[np.argsort(np.linalg.norm(pts, axis=1), kind="stable")]
        self.dim = pts.shape[1]
        self.description = description

    def batches(self):
        yield self.points


class RayFamily(ParamFamily):
    """``{n * e : n = start, start + step, ...}``."""

    def __init__(self, direction, start: float = 1.0, step: float = 1.0, batch: int = 4096, description: str = ""):
        self.direction = np.asarray(direction, dtype=float)
        self.dim = len(self.direction)
        self.start, self.step, self.batch = start, step, batch
        self.description = description or f"ray {self.direction.tolist()}"

    def batches(self):
        k = 0
        while True:
            n = self.start + self.step * np.arange(k, k + self.batch)
            yield n[:, None] * self.direction[None, :]
            k += self.batch


class LatticeFamily(ParamFamily):
    """Points of ``{start, start+1, ...}^dim`` passing ``rule``, by unit-width norm shells."""

    def __init__(self, dim: int, rule: Callable[[np.ndarray], np.ndarray], start: int = 1, description: str = ""):
        self.dim = dim
        self.rule = rule
        self.start = start
        self.description = description or "lattice"

    def _shell(self, s: int) -> np.ndarray:
        lo, hi = s, s + 1  # norms in [lo, hi)
        if self.dim == 1:
            m = np.arange(max(self.start, lo), hi, dtype=float)[:, None]
        else:
            axes = [np.arange(self.start, hi + 1, dtype=float)] * (self.dim - 1)
            head = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim - 1)
            r2 = (head**2).sum(axis=1)
            head = head[r2 < hi * hi]
            r2 = (head**2).sum(axis=1)
            a = np.ceil(np.sqrt(np.maximum(lo * lo - r2, 0.0)))
            a = np.where(a**2 + r2 < lo * lo, a + 1, a)
            a = np.where((a > 0) & ((a - 1) ** 2 + r2 >= lo * lo), a - 1, a)
            a = np.maximum(a, self.start)
            b = np.floor(np.sqrt(hi * hi - r2))
            b = np.where(b**2 + r2 >= hi * hi, b - 1, b)
            b = np.where((b + 1) ** 2 + r2 < hi * hi, b + 1, b)
            cnt = np.maximum(b - a + 1, 0).astype(int)
            rep = np.repeat(np.arange(len(head)), cnt)
            offs = np.arange(cnt.sum()) - np.repeat(np.cumsum(cnt) - cnt, cnt)
            m = np.column_stack([head[rep], a[rep] + offs])
        if len(m) == 0:
            return m.reshape(0, self.dim)
        m = m[self.rule(m)]
        return m[np.argsort(np.linalg.norm(m, axis=1), kind="stable")]

    def batches(self):
        s = 0
        while True:
            yield self._shell(s)
            s += 1


@dataclass
class ACVerdict:
    verdict: str  # in | out | undecided
    shells: list  # per ladder shell: [lo, hi, hit]
    scanned_norm: float
    points_seen: int

    def __str__(self):
        return self.verdict


def ac_membership(
    family: ParamFamily,
    xi,
    cone_width: float = 0.1,
    norm_horizon: float = 10.0,
    ratio: float = 10.0,
    levels: int = 2,
    budget: int = 5_000_000,
) -> ACVerdict:
    """Asymptotic-cone membership of the direction ``xi`` in ``AC(S)``.

    The ladder shells are ``(R_j, R_{j+1}]`` with ``R_j = norm_horizon * ratio**j``
    for ``j < levels``.  ``in``: every shell contains a family point inside the
    open circular cone of half-angle ``cone_width`` around ``xi``.  ``out``: the
    last shell was scanned completely (or the family ended) without such a
    point.  Otherwise ``undecided`` (budget exhausted first).
    """
    if cone_width <= 0:
        raise ConeError("cone_width must be positive")
    u = np.asarray(xi.coords if isinstance(xi, Covector) else xi, dtype=float)
    nu = np.linalg.norm(u)
    if nu == 0:
        raise ConeError("xi must be nonzero")
    u = u / nu
    edges = [norm_horizon * ratio**j for j in range(levels + 1)]
    hits = [False] * levels
    cos_w = math.cos(cone_width)
    seen = 0
    top = 0.0
    complete = False
    for batch in family.batches():
        if len(batch):
            nr = np.linalg.norm(batch, axis=1)
            top = max(top, float(nr.max()))
            ok = nr > edges[0]
            if np.any(ok):
                cosang = (batch[ok] @ u) / nr[ok]
                inside = cosang > cos_w
                for j in range(levels):
                    if not hits[j]:
                        sel = (nr[ok] > edges[j]) & (nr[ok] <= edges[j + 1])
                        hits[j] = bool(np.any(inside & sel))
            seen += len(batch)
        if all(hits):
            break
        if top > edges[-1]:
            complete = True
            break
        if seen >= budget:
            break
    else:
        complete = True  # finite family exhausted
    shells = [[edges[j], edges[j + 1], hits[j]] for j in range(levels)]
    if all(hits):
        verdict = "in"
    elif complete and not hits[-1]:
        verdict = "out"
    else:
        verdict = "undecided"
    return ACVerdict(verdict, shells, top, seen)


# ---------------------------------------------------------------------------
# comparison
# ---------------------------------------------------------------------------


@dataclass
class ComparisonReport:
    verdict: str  # equal | strict_subset | strict_superset | incomparable | undetermined
    d_ab: float  # sup over a of distance to b
    d_ba: float
    tol_ab: float
    tol_ba: float
    threshold: float
    witness_b: list | None = None  # point of b far from a
    witness_a: list | None = None  # point of a far from b
    note: str = ""

    def to_dict(self) -> dict:
        def f(x):
            return None if x is None else (float(x) if np.isfinite(x) else "inf")

        return {
            "schema": "schema/v1/comparison_report",
            "verdict": self.verdict,
            "d_ab": f(self.d_ab),
            "d_ba": f(self.d_ba),
            "tol_ab": f(self.tol_ab),
            "tol_ba": f(self.tol_ba),
            "threshold": self.threshold,
            "witness_b": self.witness_b,
            "witness_a": self.witness_a,
            "note": self.note,
        }


def _tolerance(cone, theta_tol: float) -> float:
    if isinstance(cone, ConeSampleSet):
        return max(theta_tol, 3.0 * cone.covering_estimate())
    return theta_tol


def compare_cones(
    a: ConeSampleSet | ConePredicate,
    b: ConeSampleSet | ConePredicate,
    threshold: float = 0.5,
    theta_tol: float = THETA_TOL,
    n_samples: int = 2000,
    seed: int = 0,
) -> ComparisonReport:
    """Two-sided sampled Hausdorff comparison of closed cones ``a`` and ``b``.

    ``d_ab`` is the largest distance from a sample of ``a`` to ``b``.  A side is
    contained when its distance is within the tolerance of the target (``theta_tol``
    for predicates, ``theta_tol`` or three times the cloud's nearest-neighbour
    spacing for sample clouds), and separated beyond ``threshold``.  Distances in
    between give ``undetermined``.
    """
    if a.algebra.name != b.algebra.name:
        raise ConeError("cones over different algebras")
    rng = np.random.default_rng(seed)
    pa = a.samples if isinstance(a, ConeSampleSet) else a.sample(n_samples, rng)
    pb = b.samples if isinstance(b, ConeSampleSet) else b.sample(n_samples, rng)
    da = b.distance(pa) if len(pa) else np.zeros(0)
    db = a.distance(pb) if len(pb) else np.zeros(0)
    d_ab = float(da.max()) if len(da) else 0.0
    d_ba = float(db.max()) if len(db) else 0.0
    tol_ab, tol_ba = _tolerance(b, theta_tol), _tolerance(a, theta_tol)
    wa = pa[int(np.argmax(da))].tolist() if len(da) else None
    wb = pb[int(np.argmax(db))].tolist() if len(db) else None
    a_in, b_in = d_ab <= tol_ab, d_ba <= tol_ba
    a_out, b_out = d_ab > threshold, d_ba > threshold
    note = ""
    if a_in and b_in:
        verdict, wa, wb = "equal", None, None
    elif a_in and b_out:
        verdict, wa = "strict_subset", None
    elif b_in and a_out:
        verdict, wb = "strict_superset", None
    elif a_out and b_out:
        verdict = "incomparable"
    else:
        verdict = "undetermined"
        note = "distances fall between the containment tolerance and the witness threshold; more samples needed"
    return ComparisonReport(verdict, d_ab, d_ba, tol_ab, tol_ba, threshold, wb, wa, note)
