"""Worked examples as runnable, machine-checked catalog cases.

Literature spectral data (multiplicity and support statements for Whittaker
models of SL(2, R)) enters only as catalog input from ``data/spectral.json``;
nothing here recomputes it.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
import scipy.linalg as sla
from scipy.optimize import least_squares

from .algebra import (
    AlgebraElement,
    LieAlgebraSpec,
    Covector,
    Unclassifiable,
    classify,
    complement,
    orthonormalize,
    sample_group_batch,
)
from .reporting import canonical, config_hash
from .cones import (
    ConePredicate,
    ConeSampleSet,
    InducedConeSpec,
    LatticeFamily,
    ParamFamily,
    RayFamily,
    ac_membership,
    compare_cones,
    sample_induced_cone,
    sl2_region,
)
from .realizations import (
    SL2_J,
    HomogeneousSpaceSpec,
    builtin_space,
    nilradical_sl2,
    sl2,
    sp_block,
    u_rs_in_so_pq,
)

__all__ = [
    "SearchResult",
    "regular_elliptic_search",
    "sp_regular_elliptic_search",
    "nonregular_fraction",
    "OrbitSumResult",
    "orbit_sum_residual",
    "elliptic_sl2",
    "tuple_feasible_rule",
    "tuple_space_support_table",
    "whittaker_counterexample_check",
    "OrbitFamily",
    "ac_of_orbit_family",
    "CatalogCase",
    "load_catalog",
    "run_case",
    "spectral_data",
]


# ---------------------------------------------------------------------------
# regular elliptic search
# ---------------------------------------------------------------------------


@dataclass
class SearchResult:
    status: str  # found | exhausted
    witness: list | None
    best_score: float
    samples: int
    classification: str | None = None
    nonregular_fraction: float | None = None
    nonregular_samples: int = 0

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "witness": self.witness,
            "best_score": self.best_score,
            "samples": self.samples,
            "classification": self.classification,
            "nonregular_fraction": self.nonregular_fraction,
            "nonregular_samples": self.nonregular_samples,
        }


def _ellipticity_scores(alg: LieAlgebraSpec, X: np.ndarray) -> np.ndarray:
    """Negative relative max real part plus relative eigenvalue separation."""
    M = alg.matrix(X)
    nrm = np.linalg.norm(M, axis=(-2, -1))
    ev = np.linalg.eigvals(M)
    re = np.abs(ev.real).max(axis=-1) / nrm
    diff = np.abs(ev[..., :, None] - ev[..., None, :])
    n = ev.shape[-1]
    diff[..., np.arange(n), np.arange(n)] = np.inf
    sep = diff.min(axis=(-2, -1)) / nrm
    return np.minimum(sep, 0.1) - 10.0 * re


def _is_regular_elliptic(alg: LieAlgebraSpec, c: np.ndarray, tight: bool = False) -> tuple[bool, str]:
    kw = {"eig_tol": 1e-10, "rank_tol": 1e-10} if tight else {}
    try:
        k = classify(AlgebraElement(alg, c), **kw)
    except Unclassifiable:
        return False, "unclassifiable"
    return (k.kind == "semisimple-elliptic" and k.regular), k.describe()


def regular_elliptic_search(
    alg: LieAlgebraSpec,
    rows: np.ndarray,
    budget: int = 4000,
    seed: int = 0,
    ascent_steps: int = 300,
    candidates: int = 16,
) -> SearchResult:
    """Search ``span(rows)`` for a regular elliptic element.

    Random restarts (Gaussian coefficients in an orthonormal basis), then a
    random-perturbation ascent on the ellipticity score from the best
    candidates.  Witnesses are re-verified by ``classify`` at tightened
    tolerance ``1e-10``.
    """
    Q = orthonormalize(rows, alg.gram)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(11,)))
    A = rng.standard_normal((budget, Q.shape[0]))
    X = A @ Q
    sc = _ellipticity_scores(alg, X)
    order = np.argsort(-sc, kind="stable")
    best = float(sc[order[0]])
    for i in order[:candidates]:
        ok, desc = _is_regular_elliptic(alg, X[i])
        if ok and _is_regular_elliptic(alg, X[i], tight=True)[0]:
            return SearchResult("found", X[i].tolist(), float(sc[i]), int(i) + 1, desc)
    # local ascent from the best candidates
    for i in order[: max(1, candidates // 4)]:
        a = A[i].copy()
        s = float(sc[i])
        step = 0.3
        for _ in range(ascent_steps):
            trial = a + step * rng.standard_normal(a.shape)
            st = float(_ellipticity_scores(alg, (trial @ Q)[None])[0])
            if st > s:
                a, s = trial, st
                ok, desc = _is_regular_elliptic(alg, a @ Q)
                if ok and _is_regular_elliptic(alg, a @ Q, tight=True)[0]:
                    return SearchResult("found", (a @ Q).tolist(), s, budget, desc)
            else:
                step *= 0.98
        best = max(best, s)
    return SearchResult("exhausted", None, best, budget)


def nonregular_fraction(alg: LieAlgebraSpec, rows: np.ndarray, n: int, seed: int, rank_tol: float = 1e-8, chunk: int = 1000) -> float:
    """Fraction of random elements of ``span(rows)`` with centralizer dimension > rank."""
    Q = orthonormalize(rows, alg.gram)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(12,)))
    bad = 0
    for s in range(0, n, chunk):
        X = rng.standard_normal((min(chunk, n - s), Q.shape[0])) @ Q
        sv = np.linalg.svd(alg.ad_matrix(X), compute_uv=False)
        nrm = alg.norm(X)
        cd = np.sum(sv <= rank_tol * np.maximum(sv[:, :1], nrm[:, None]), axis=1)
        bad += int(np.sum(cd > alg.rank))
    return bad / n


def sp_regular_elliptic_search(n: int, m: int, budget: int = 4000, seed: int = 0, nonregular_samples: int = 10_000) -> SearchResult:
    """Regular elliptic elements in ``q = h^perp`` for ``h = sp(2m) + 0`` inside ``sp(2n)``.

    For ``2m > n`` the random ``q`` samples are additionally classified and the
    fraction with centralizer dimension exceeding the rank is reported.
    """
    space = sp_block(n, m)
    alg = space.algebra
    q = complement(orthonormalize(space.sub, alg.gram), alg.gram) if space.dim_h else orthonormalize(np.eye(alg.dim), alg.gram)
    res = regular_elliptic_search(alg, q, budget=budget, seed=seed)
    if 2 * m > n:
        res.nonregular_fraction = nonregular_fraction(alg, q, nonregular_samples, seed)
        res.nonregular_samples = nonregular_samples
    return res


# ---------------------------------------------------------------------------
# sums of orbits
# ---------------------------------------------------------------------------


def _expm_batch(M: np.ndarray) -> np.ndarray:
    """Matrix exponential of a stack; closed form for traceless 2x2 blocks."""
    if M.shape[-1] == 2 and np.allclose(M[..., 0, 0] + M[..., 1, 1], 0.0, atol=1e-14):
        d = -(M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0])  # X^2 = d I
        r = np.sqrt(d.astype(complex))
        small = np.abs(r) < 1e-8
        rs = np.where(small, 1.0, r)
        ch = np.where(small, 1 + d / 2, np.cosh(rs)).real
        sh = np.where(small, 1 + d / 6, np.sinh(rs) / rs).real
        return ch[..., None, None] * np.eye(2) + sh[..., None, None] * M
    return sla.expm(M)


@dataclass
class OrbitSumResult:
    residual: float
    converged: bool  # residual <= tol
    budget_exhausted: bool
    at_bound: bool  # the best configuration touches the group-norm bound
    tol: float
    budget: dict
    witness: list = field(default_factory=list, repr=False)  # group matrices of the best restart

    def __float__(self):
        return self.residual

    def to_dict(self) -> dict:
        return {
            "residual": self.residual,
            "converged": self.converged,
            "budget_exhausted": self.budget_exhausted,
            "at_bound": self.at_bound,
            "tol": self.tol,
            "budget": self.budget,
        }


DEFAULT_ORBIT_BUDGET = {"restarts": 32, "iterations": 300, "max_group_norm": 4.0, "init_radius": 1.0, "polish_evaluations": 100}


def orbit_sum_residual(elements, budget: dict | None = None, seed: int = 0, tol: float = 1e-6) -> OrbitSumResult:
    """``min ||sum_i Ad(g_i) X_i||_F`` over restarts, with ``||g_i||_op <= max_group_norm``.

    Exponential-coordinate gradient descent: along ``Ad(e^{tW} g) X`` the
    derivative of ``||S||^2`` is ``2 <S, [W, Ad(g) X]>``, giving the steepest
    direction ``pr_g(S A^T - A^T S)`` per element.  Steps are per restart with
    backtracking (halve on failure, grow by 1.5 on success); steps leaving the
    norm bound are rejected.  The best restart is polished by least squares.
    Inputs are put in a canonical order first, so the result is exactly
    symmetric in its arguments.
    """
    b = dict(DEFAULT_ORBIT_BUDGET)
    b.update(budget or {})
    els = list(elements)
    if len(els) < 2:
        raise ValueError("need at least two elements")
    alg = els[0].algebra
    if any(e.algebra is not alg and e.algebra.name != alg.name for e in els):
        raise ValueError("elements of different algebras")
    coords = np.array([e.coords for e in els], float)
    coords = coords[np.lexsort(np.round(coords, 12).T[::-1])]
    k, n = len(coords), alg.ambient_dim
    X = alg.matrix(coords)  # (k, n, n)
    R = int(b["restarts"])
    bound = float(b["max_group_norm"])
    # initial configurations: all-identity restart plus random group samples
    g0 = sample_group_batch(alg, R * k, seed, k_max=2, r_range=(0.0, float(b["init_radius"]))).reshape(R, k, n, n)
    g0[0] = np.eye(n)
    g = g0
    basis = alg.basis
    Fi = np.linalg.inv(alg.gram)

    def project(G):
        # F-orthogonal projection of matrices onto g, as matrices
        c = np.einsum("...ij,dij->...d", G, basis) @ Fi
        return np.einsum("...d,dij->...ij", c, basis)

    def evaluate(g):
        A = g @ X @ np.linalg.inv(g)
        S = A.sum(axis=1)
        return A, S, np.einsum("rij,rij->r", S, S)

    A, S, f = evaluate(g)
    eta = np.full(R, 0.1)
    for _ in range(int(b["iterations"])):
        if f.min() < tol**2 * 1e-6:
            break
        At = np.swapaxes(A, -1, -2)
        G = S[:, None] @ At - At @ S[:, None]
        D = 2.0 * project(G)
        ok_any = False
        dn = np.sqrt(np.einsum("rkij,rkij->r", D, D))
        for _bt in range(8):
            # step length in exponential coordinates is capped at 0.5
            eta = np.minimum(eta, 0.5 / np.maximum(dn, 1e-300))
            gn = _expm_batch(-eta[:, None, None, None] * D) @ g
            norms = np.linalg.norm(gn, 2, axis=(-2, -1)).max(axis=1)
            ok = np.isfinite(norms) & (norms <= bound)
            gn = np.where(ok[:, None, None, None], gn, g)
            An, Sn, fn = evaluate(gn)
            acc = (fn < f) & ok
            if np.any(acc):
                ok_any = True
            g = np.where(acc[:, None, None, None], gn, g)
            A = np.where(acc[:, None, None, None], An, A)
            S = np.where(acc[:, None, None], Sn, S)
            f = np.where(acc, fn, f)
            eta = np.where(acc, eta * 1.5, eta * 0.5)
            if np.all(acc | (eta < 1e-12)):
                break
        if not ok_any and np.all(eta < 1e-12):
            break
    best = int(np.argmin(f))
    gb = g[best]
    res = float(np.sqrt(f[best]))
    # least-squares polish in exponential coordinates around the best restart
    if res > 0:
        d = alg.dim

        def resid(w):
            W = alg.matrix(w.reshape(k, d))
            gg = _expm_batch(W) @ gb
            S_ = (gg @ X @ np.linalg.inv(gg)).sum(axis=0)
            return alg.whiten(alg.coords(S_, check=False))

        sol = least_squares(resid, np.zeros(k * alg.dim), xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=int(b.get("polish_evaluations", 100)))
        gg = _expm_batch(alg.matrix(sol.x.reshape(k, alg.dim))) @ gb
        if np.linalg.norm(gg, 2, axis=(-2, -1)).max() <= bound:
            S_ = (gg @ X @ np.linalg.inv(gg)).sum(axis=0)
            r2 = float(np.linalg.norm(S_))
            if r2 < res:
                res, gb = r2, gg
    at_bound = bool(np.linalg.norm(gb, 2, axis=(-2, -1)).max() > 0.98 * bound)
    conv = res <= tol
    return OrbitSumResult(res, conv, not conv, at_bound, tol, b, gb.tolist())


def elliptic_sl2(theta: float, alg: LieAlgebraSpec | None = None) -> AlgebraElement:
    """``theta * J`` with ``J = [[0, -1], [1, 0]]``: the elliptic element on the
    sheet of sign ``sign(theta)`` (z-coordinate ``theta``)."""
    alg = alg or sl2()
    return AlgebraElement(alg, float(theta) * SL2_J)


def tuple_feasible_rule(thetas) -> bool:
    """Closed-form feasibility of ``0 in sum_i Ad(G) (theta_i J)``.

    Elements of one sheet add like future-timelike vectors: a sum of ``k >= 2``
    of them reaches every Lorentz norm ``>= sum |theta|``, a single one only its
    own.  Feasible iff both signs occur and some side's attainable set meets
    the other's: equality for two singletons, otherwise the singleton is at
    least the other side's sum; two or more on each side always work.
    """
    th = [float(t) for t in thetas]
    if any(t == 0 for t in th):
        raise ValueError("zero parameters are not elliptic")
    pos = [t for t in th if t > 0]
    neg = [-t for t in th if t < 0]
    if not pos or not neg:
        return False
    if len(pos) == 1 and len(neg) == 1:
        return abs(pos[0] - neg[0]) <= 1e-12 * max(pos[0], neg[0])
    if len(pos) == 1:
        return pos[0] >= sum(neg) - 1e-12
    if len(neg) == 1:
        return neg[0] >= sum(pos) - 1e-12
    return True


DEFAULT_TUPLE_GRID = (-3.0, -1.0, 1.0, 2.0, 4.0)


def tuple_space_support_table(n: int, grid=DEFAULT_TUPLE_GRID, budget: dict | None = None, seed: int = 0, tol: float = 1e-6) -> dict:
    """Optimizer verdicts against the closed-form rule on ``grid^n``.

    Tuples are grouped by sign pattern (octants for ``n = 3``).  Each distinct
    multiset is optimized once; the residual is symmetric in its arguments.
    """
    if n not in (2, 3):
        raise ValueError("n must be 2 or 3")
    alg = sl2()
    cache: dict = {}
    rows = []
    patterns: dict = {}
    for th in itertools.product(grid, repeat=n):
        key = tuple(sorted(th))
        if key not in cache:
            r = orbit_sum_residual([elliptic_sl2(t, alg) for t in key], budget, seed=seed, tol=tol)
            cache[key] = r.residual
        res = cache[key]
        numeric = res <= tol
        rule = tuple_feasible_rule(th)
        agree = numeric == rule
        pat = "".join("+" if t > 0 else "-" for t in th)
        pc = patterns.setdefault(pat, {"total": 0, "agree": 0, "feasible_rule": 0, "feasible_numeric": 0})
        pc["total"] += 1
        pc["agree"] += int(agree)
        pc["feasible_rule"] += int(rule)
        pc["feasible_numeric"] += int(numeric)
        rows.append({"theta": list(th), "residual": res, "feasible_numeric": bool(numeric), "feasible_rule": bool(rule), "agree": bool(agree)})
    agreement = sum(r["agree"] for r in rows) / len(rows)
    return {"n": n, "grid": list(grid), "rows": rows, "patterns": patterns, "agreement": agreement, "distinct_optimizations": len(cache)}


# ---------------------------------------------------------------------------
# spectral data and the Whittaker comparison
# ---------------------------------------------------------------------------


def spectral_data() -> dict:
    with resources.files("wfcones").joinpath("data/spectral.json").open() as fh:
        return json.load(fh)


@dataclass(eq=False)
class OrbitFamily:
    """Parameter points ``lambda`` in ``i b*`` for a Cartan subalgebra ``b``.

    ``basis`` rows are covector coordinates spanning ``i b*``; ``params`` is a
    :class:`ParamFamily` over ``R^{dim b}``.
    """

    name: str
    cartan: str
    basis: np.ndarray
    params: ParamFamily
    series: str = ""

    def __post_init__(self):
        self.basis = np.atleast_2d(np.asarray(self.basis, float))

    def covector_family(self) -> ParamFamily:
        fam = self

        class _Mapped(ParamFamily):
            dim = fam.basis.shape[1]
            description = f"{fam.name} in i{fam.cartan}*"

            def batches(self):
                for b in fam.params.batches():
                    yield np.asarray(b, float) @ fam.basis

        return _Mapped()


def _family_from_entry(alg: LieAlgebraSpec, entry: dict) -> OrbitFamily:
    basis = np.array([entry["direction"]], float)
    if entry["param"] == "ray":
        fam = RayFamily([1.0], start=1.0, step=1.0, description=entry["series"])
        if entry.get("both_signs"):
            pos = fam

            class _Both(ParamFamily):
                dim = 1
                description = entry["series"] + " (both signs)"

                def batches(self):
                    for b in pos.batches():
                        yield np.concatenate([b, -b])

            fam = _Both()
    elif entry["param"] == "lattice":
        fam = LatticeFamily(1, lambda p: p[:, 0] >= 1, start=1, description=entry["series"])
    else:
        raise ValueError(f"unknown parameter family {entry['param']!r}")
    return OrbitFamily(entry["series"], entry["cartan"], basis, fam, entry["series"])


def _sweep_pieces(alg: LieAlgebraSpec, direction: np.ndarray) -> list[str]:
    """sl2 regions making up the closure of ``Ad*(G) R_+ direction``."""
    k = classify(AlgebraElement(alg, alg.riesz_map @ direction))
    if k.kind == "semisimple-hyperbolic":
        return ["hyp", "nilp"]
    if k.kind == "semisimple-elliptic":
        return ["ell+", "nilp+"] if direction[2] > 0 else ["ell-", "nilp-"]
    if k.kind == "nilpotent":
        return ["nilp+"] if direction[2] > 0 else ["nilp-"]
    raise ValueError(f"cannot sweep {k.describe()}")


def spectral_cone(sign: str, alg: LieAlgebraSpec | None = None, ac_kwargs: dict | None = None):
    """Cone ``closure Ad*(G) AC(union of lambda_sigma)`` from the spectral list.

    Asymptotic directions are certified by :func:`ac_membership` against the
    candidate Cartan directions ``+-basis``; returns ``(predicate, table)``.
    """
    alg = alg or sl2()
    data = spectral_data()["whittaker_sl2"]
    entries = data["spectra"][sign]
    kw = {"cone_width": 0.1, "norm_horizon": 10.0, "ratio": 10.0, "levels": 2}
    kw.update(ac_kwargs or {})
    pieces: list[str] = []
    table = []
    for e in entries:
        fam = _family_from_entry(alg, e)
        cf = fam.covector_family()
        for s in (+1, -1):
            u = s * fam.basis[0]
            v = ac_membership(cf, u, **kw)
            table.append({"series": fam.name, "direction": u.tolist(), "ac": v.verdict})
            if v.verdict == "in":
                pieces.extend(_sweep_pieces(alg, u))
    return sl2_region(alg, *sorted(set(pieces))), table


def whittaker_counterexample_check(
    lambda_sign: str,
    n_samples: int = 10_000,
    seed: int = 0,
    theta_tol: float = 1e-2,
    threshold: float = 0.5,
    base: str = "zero",
) -> dict:
    """``Ind_N^G WF(chi_lambda)`` (sampled) against the spectral-list cone.

    ``lambda_sign`` is ``"+"``, ``"-"`` or ``"0"`` (trivial character).  The
    matrix coefficient of a one-dimensional unitary character is smooth, so
    its wave front set is ``{0}`` and cone (a) is induced from the zero base
    cone (``base="zero"``).  ``base="dchi"`` instead induces from the ray
    through ``d chi_lambda`` (restriction value ``sign(lambda)`` on ``E``),
    which is informative only: it sweeps in a full elliptic sheet.
    """
    if lambda_sign not in ("+", "-", "0"):
        raise ValueError("lambda_sign must be '+', '-' or '0'")
    if base not in ("zero", "dchi"):
        raise ValueError("base must be 'zero' or 'dchi'")
    space = nilradical_sl2()
    alg = space.algebra
    if base == "dchi" and lambda_sign != "0":
        spec = InducedConeSpec(space, ("ray", [1.0 if lambda_sign == "+" else -1.0]))
    else:
        spec = InducedConeSpec(space, "zero")
    a = sample_induced_cone(spec, n_samples, seed)
    b, table = spectral_cone(lambda_sign, alg)
    rep = compare_cones(a, b, threshold=threshold, theta_tol=theta_tol, seed=seed)
    out = {
        "lambda_sign": lambda_sign,
        "cone_a": {"kind": "induced", "space": space.name, "base": base, "samples": int(len(a.samples)), "histogram": kind_histogram(a)},
        "cone_b": b.to_dict(),
        "ac_table": table,
        "comparison": rep.to_dict(),
        "witness_class": None,
        "witness_sign": None,
        "witness_distance": None,
    }
    if rep.witness_b is not None:
        w = np.asarray(rep.witness_b)
        k = classify(AlgebraElement(alg, alg.riesz_map @ w))
        out["witness_class"] = k.kind
        out["witness_sign"] = "+" if w[2] > 0 else "-"
        out["witness_distance"] = float(a.distance(w[None])[0])
    return out


# ---------------------------------------------------------------------------
# asymptotic cones of orbit families vs annihilator side
# ---------------------------------------------------------------------------


def annihilator_side(space: HomogeneousSpaceSpec, directions, n_x: int = 512, seed: int = 0, tol: float = 1e-6) -> list[dict]:
    """For each covector direction ``u``: ``min_x |pr_{g_x} u|`` over sampled
    stabilizers (with local refinement); ``u`` annihilates some ``g_x`` iff
    the minimum vanishes."""
    from .homspace import c_omega

    out = []
    for u in np.atleast_2d(np.asarray(directions, float)):
        u = u / np.linalg.norm(u)
        rep = c_omega(space, Covector(space.algebra, u), 0.0, n_x=n_x, seed=seed)
        out.append({"direction": u.tolist(), "min_projection": rep.worst_projection, "annihilates": bool(rep.worst_projection <= tol)})
    return out


def ac_of_orbit_family(family: OrbitFamily, cone, directions=None, ac_kwargs: dict | None = None, **side_kwargs) -> dict:
    """AC verdicts of candidate directions against the family, next to the cone
    (``ConePredicate``/``ConeSampleSet``, or a ``HomogeneousSpaceSpec`` whose
    annihilator side is computed from sampled stabilizers)."""
    kw = {"cone_width": 0.1, "norm_horizon": 10.0, "ratio": 10.0, "levels": 2}
    kw.update(ac_kwargs or {})
    if directions is None:
        directions = np.vstack([family.basis, -family.basis])
    directions = np.atleast_2d(np.asarray(directions, float))
    cf = family.covector_family()
    if isinstance(cone, HomogeneousSpaceSpec):
        side = annihilator_side(cone, directions, **side_kwargs)
        right = [s["annihilates"] for s in side]
    else:
        side = None
        right = [bool(v) for v in cone.contains(directions)]
    rows = []
    for u, r in zip(directions, right):
        v = ac_membership(cf, u, **kw)
        rows.append({"direction": u.tolist(), "ac": v.verdict, "cone": r, "agree": (v.verdict == "in") == r if v.verdict != "undecided" else None})
    undecided = sum(r["ac"] == "undecided" for r in rows)
    return {"family": family.name, "rows": rows, "undecided": undecided, "annihilator_side": side}


# ---------------------------------------------------------------------------
# the catalog
# ---------------------------------------------------------------------------


@dataclass
class CatalogCase:
    name: str
    kind: str
    params: dict
    expected: list  # [{"check": ..., ..., "citation": str}]
    budget: dict = field(default_factory=dict)
    description: str = ""

    def __post_init__(self):
        for e in self.expected:
            if not e.get("citation"):
                raise ValueError(f"case {self.name}: every expected assertion needs a citation")


def load_catalog(path=None) -> dict[str, CatalogCase]:
    if path is None:
        text = resources.files("wfcones").joinpath("data/catalog.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    raw = json.loads(text)
    return {c["name"]: CatalogCase(**c) for c in raw["cases"]}


def _check(assertion: dict, result: dict) -> tuple[bool, object]:
    chk = assertion["check"]
    key = assertion.get("key")
    obs = result
    if key:
        for part in key.split("."):
            obs = obs[part] if isinstance(obs, dict) else getattr(obs, part)
    if chk == "equals":
        return obs == assertion["value"], obs
    if chk == "le":
        return obs is not None and obs <= assertion["value"], obs
    if chk == "ge":
        return obs is not None and obs >= assertion["value"], obs
    if chk == "in":
        return obs in assertion["value"], obs
    raise ValueError(f"unknown check {chk!r}")


def _run_kind(kind: str, p: dict, seed: int, budget: dict) -> dict:
    if kind == "sp_search":
        r = sp_regular_elliptic_search(int(p["n"]), int(p["m"]), budget=int(budget.get("samples", 4000)), seed=seed, nonregular_samples=int(budget.get("nonregular_samples", 10_000)))
        return r.to_dict()
    if kind == "orbit_sum":
        els = [elliptic_sl2(t) for t in p["theta"]]
        return orbit_sum_residual(els, budget.get("orbit"), seed=seed).to_dict()
    if kind == "tuple_table":
        t = tuple_space_support_table(int(p["n"]), tuple(p.get("grid", DEFAULT_TUPLE_GRID)), budget.get("orbit"), seed=seed)
        t.pop("rows")
        return t
    if kind == "whittaker":
        return whittaker_counterexample_check(p["sign"], n_samples=int(budget.get("samples", 10_000)), seed=seed)
    if kind == "induced_histogram":
        space = builtin_space(p["space"])
        cone = sample_induced_cone(InducedConeSpec(space, p.get("base", "zero")), int(budget.get("samples", 10_000)), seed)
        h = kind_histogram(cone)
        return {
            "histogram": h,
            "elliptic": h.get("semisimple-elliptic", 0),
            "hyperbolic": h.get("semisimple-hyperbolic", 0),
            "nilpotent": h.get("nilpotent", 0),
        }
    if kind == "ac_family":
        alg = sl2()
        fam = OrbitFamily(p["family"], p["cartan"], [p["direction"]], LatticeFamily(1, lambda q: q[:, 0] >= 1) if p["param"] == "lattice" else RayFamily([1.0]))
        cone = ConePredicate(alg, "ray", {"direction": p["direction"]})
        t = ac_of_orbit_family(fam, cone)
        return {"in_directions": [r["direction"] for r in t["rows"] if r["ac"] == "in"], "agree": all(r["agree"] for r in t["rows"]), "undecided": t["undecided"]}
    if kind == "annihilator_elliptic":
        space = nilradical_sl2()
        side = annihilator_side(space, [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]], seed=seed)
        return {"elliptic_annihilates": any(s["annihilates"] for s in side[:2]), "hyperbolic_annihilates": side[2]["annihilates"], "side": side}
    if kind == "so_pq_search":
        space = u_rs_in_so_pq(*[int(v) for v in p["pqrs"]])
        alg = space.algebra
        q = complement(orthonormalize(space.sub, alg.gram), alg.gram)
        return regular_elliptic_search(alg, q, budget=int(budget.get("samples", 4000)), seed=seed).to_dict()
    raise ValueError(f"unknown case kind {kind!r}")


def kind_histogram(cone: ConeSampleSet) -> dict:
    """Classification counts of the trace-form representatives of a cloud."""
    alg = cone.algebra
    hist: dict = {}
    if cone.is_zero:
        return {"zero": 1}
    for c in cone.samples:
        try:
            k = classify(AlgebraElement(alg, alg.riesz_map @ c)).kind
        except Unclassifiable:
            k = "unclassifiable"
        hist[k] = hist.get(k, 0) + 1
    return dict(sorted(hist.items()))


def run_case(name: str, seed: int, overrides: dict | None = None, catalog: dict | None = None) -> dict:
    """Run one catalog case; returns the report with per-assertion verdicts."""
    cat = catalog or load_catalog()
    if name not in cat:
        raise KeyError(f"unknown case {name!r}; known: {sorted(cat)}")
    case = cat[name]
    params = dict(case.params)
    params.update(overrides or {})
    result = _run_kind(case.kind, params, seed, case.budget)
    expected = _expected_for(case, params) if "expected_by_params" in case.budget else case.expected
    checks = []
    for a in expected:
        ok, obs = _check(a, result)
        checks.append({"check": a["check"], "key": a.get("key"), "expected": a.get("value"), "observed": canonical(obs), "passed": bool(ok), "citation": a["citation"]})
    return {
        "schema": "schema/v1/case_report",
        "case": name,
        "kind": case.kind,
        "params": params,
        "seed": int(seed),
        "result": canonical(result),
        "assertions": checks,
        "passed": all(c["passed"] for c in checks),
        "config_hash": config_hash({"case": name, "kind": case.kind, "params": params, "seed": int(seed), "budget": case.budget}),
    }


def _expected_for(case: CatalogCase, params: dict) -> list:
    """Expected assertions recomputed from a parameter-dependent rule."""
    rule = case.budget["expected_by_params"]
    if rule == "sp_criterion":
        n, m = int(params["n"]), int(params["m"])
        cit = case.expected[0]["citation"]
        if 2 * m <= n:
            return [{"check": "equals", "key": "status", "value": "found", "citation": cit}]
        return [
            {"check": "equals", "key": "status", "value": "exhausted", "citation": cit},
            {"check": "ge", "key": "nonregular_fraction", "value": 1.0, "citation": cit},
        ]
    if rule == "tuple_rule":
        th = params["theta"]
        cit = case.expected[0]["citation"]
        if tuple_feasible_rule(th):
            return [{"check": "le", "key": "residual", "value": 1e-6, "citation": cit}]
        return [{"check": "ge", "key": "residual", "value": 1e-6, "citation": cit}]
    if rule == "whittaker_sign":
        s = params["sign"]
        cit = case.expected[0]["citation"]
        if s == "0":
            return [{"check": "equals", "key": "comparison.verdict", "value": "equal", "citation": cit}]
        return [
            {"check": "equals", "key": "comparison.verdict", "value": "strict_subset", "citation": cit},
            {"check": "equals", "key": "witness_sign", "value": s, "citation": cit},
            {"check": "ge", "key": "witness_distance", "value": 0.5, "citation": cit},
        ]
    raise ValueError(f"unknown expectation rule {rule!r}")
