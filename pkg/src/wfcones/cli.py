"""Batch command-line front end.

Every command takes the global flags ``--spec``, ``--seed``, ``--out``,
``--workers`` and the ``--tol-*`` overrides.  Reports are canonical JSON
(byte-identical for identical configurations) embedding the configuration
hash; wall-clock data goes to a ``.meta.json`` sidecar.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import oscillatory
from .algebra import AlgebraElement, Covector, LieAlgebraSpec, Unclassifiable, classify
from .realizations import HomogeneousSpaceSpec, builtin_algebra, builtin_space
from .reporting import canonical, canonical_json, config_hash, write_meta, write_report

__all__ = ["main", "build_parser", "load_algebra", "load_space"]

DEFAULT_TOLS = {
    "eig": 1e-7,  # classify: eigenvalue clustering, relative to ||Y||
    "rank": 1e-8,  # classify: singular-value rank threshold
    "gray": 10.0,  # classify: ambiguity band factor
    "theta": 1e-2,  # compare_cones: containment tolerance
    "threshold": 0.5,  # compare_cones: witness separation
    "fit": oscillatory.FIT_RESIDUAL_TOL,  # decay fits: max RMS log residual
    "cone_width": 0.1,  # ac_membership: half-angle of the test cone
}


class CLIError(Exception):
    pass


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------


def _read_json(spec: str):
    p = Path(spec)
    if p.is_file():
        return json.loads(p.read_text())
    return None


def load_algebra(spec: str | None) -> LieAlgebraSpec:
    if not spec:
        raise CLIError("--spec is required")
    d = _read_json(spec)
    if d is None:
        try:
            return builtin_algebra(spec)
        except ValueError:
            return builtin_space(spec).algebra
    if "subalgebra" in d:
        return HomogeneousSpaceSpec.from_dict(d).algebra
    return LieAlgebraSpec.from_dict(d)


def load_space(spec: str | None) -> HomogeneousSpaceSpec:
    if not spec:
        raise CLIError("--spec is required")
    d = _read_json(spec)
    if d is None:
        return builtin_space(spec)
    if "subalgebra" not in d:
        raise CLIError(f"{spec}: expected a homogeneous-space spec (with 'subalgebra')")
    return HomogeneousSpaceSpec.from_dict(d)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise CLIError(f"cannot parse coordinates {text!r}") from exc


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip() != ""]


# ---------------------------------------------------------------------------
# configuration and output
# ---------------------------------------------------------------------------


def _tols(args) -> dict:
    t = dict(DEFAULT_TOLS)
    for k in t:
        v = getattr(args, f"tol_{k}", None)
        if v is not None:
            t[k] = v
    return t


def run_config(args) -> dict:
    """The reproducibility-relevant part of the arguments (no paths, no workers)."""
    skip = {"out", "workers", "func"}
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in skip and not k.startswith("tol_")}
    cfg["tolerances"] = _tols(args)
    return canonical(cfg)


def _emit(args, name: str, report: dict, extra: dict | None = None) -> dict:
    cfg = run_config(args)
    full = {"config": cfg, "config_hash": config_hash(cfg), "citations": [], **report}
    if args.out:
        out = Path(args.out)
        write_report(out / f"{name}.json", full)
        write_meta(out / f"{name}.meta.json", cfg, sys.argv)
        for fname, text in (extra or {}).items():
            (out / fname).write_text(text)
    return full


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_classify(args) -> int:
    alg = load_algebra(args.spec)
    c = np.array(_floats(args.coords))
    if len(c) != alg.dim:
        raise CLIError(f"{alg.name} has dimension {alg.dim}, got {len(c)} coordinates")
    t = _tols(args)
    try:
        k = classify(AlgebraElement(alg, c), eig_tol=t["eig"], rank_tol=t["rank"], gray=t["gray"])
    except Unclassifiable as exc:
        print(f"unclassifiable: {exc}")
        _emit(args, "classify", {"schema": "schema/v1/classification", "algebra": alg.name, "coords": c.tolist(), "unclassifiable": str(exc)})
        return 2
    print(k.describe())
    _emit(
        args,
        "classify",
        {
            "schema": "schema/v1/classification",
            "algebra": alg.name,
            "coords": c.tolist(),
            "kind": k.kind,
            "regular": k.regular,
            "semisimple": k.semisimple,
            "centralizer_dim": k.centralizer_dim,
            "description": k.describe(),
        },
    )
    return 0


def cmd_ind_cone(args) -> int:
    from .catalog import kind_histogram
    from .cones import InducedConeSpec, sample_induced_cone

    space = load_space(args.spec)
    if args.base == "zero" or args.base == "all":
        base = args.base
    else:
        base = ("ray", _floats(args.base))
    cone = sample_induced_cone(InducedConeSpec(space, base), args.n, args.seed, workers=args.workers)
    hist = kind_histogram(cone)
    report = {"schema": "schema/v1/induced_cone_report", "space": space.name, "n": args.n, "histogram": hist}
    if args.check_invariants:
        report["invariant_pass_rate"] = _diagonal_invariant_rate(space, cone)
    for k, v in hist.items():
        print(f"{k}: {v}")
    if "invariant_pass_rate" in report:
        print(f"invariant-equality pass rate: {report['invariant_pass_rate']:.6f}")
    _emit(args, "ind_cone", report, {"cone.json": canonical_json(cone.to_dict())} if args.out else None)
    return 0


def _diagonal_invariant_rate(space: HomogeneousSpaceSpec, cone, rtol: float = 1e-9) -> float:
    """Per-sample check for ``G_1^k / diag``: each block's trace invariant
    ``Tr(xi_i^2)`` equals that of its preimage, and the preimage blocks sum to 0."""
    alg = space.algebra
    if not alg.factors or cone.preimages is None:
        raise CLIError("--check-invariants needs a direct-sum algebra")
    ok = 0
    for c, pre in zip(cone.samples, cone.preimages):
        good = True
        total = np.zeros(alg.factors[0][2].dim)
        for _, co, f in alg.factors:
            a, b = f.matrix(c[co : co + f.dim]), f.matrix(pre[co : co + f.dim])
            qa, qb = np.trace(a @ a), np.trace(b @ b)
            good &= abs(qa - qb) <= rtol * max(1.0, abs(qb))
            total = total + pre[co : co + f.dim]
        good &= np.linalg.norm(total) <= rtol
        ok += bool(good)
    return ok / max(1, len(cone.samples))


def cmd_ac(args) -> int:
    from .catalog import OrbitFamily
    from .cones import ExplicitFamily, LatticeFamily, RayFamily, ac_membership

    d = _floats(args.direction)
    if args.family == "ray":
        fam = RayFamily(d)
    elif args.family == "lattice":
        fam = OrbitFamily("lattice", "", [d], LatticeFamily(1, lambda p: p[:, 0] >= 1)).covector_family()
    else:
        fam = ExplicitFamily(np.array(json.loads(Path(args.family).read_text())), args.family)
    xi = _floats(args.xi)
    t = _tols(args)
    v = ac_membership(fam, xi, cone_width=t["cone_width"], norm_horizon=args.horizon, ratio=args.ratio, levels=args.levels)
    print(v.verdict)
    _emit(args, "ac", {"schema": "schema/v1/ac_verdict", "verdict": v.verdict, "shells": v.shells, "points_seen": v.points_seen, "xi": xi})
    return 0


def cmd_c_omega(args) -> int:
    from .homspace import c_omega

    space = load_space(args.spec)
    eta = Covector(space.algebra, np.array(_floats(args.eta)))
    rep = c_omega(space, eta, args.radius, n_x=args.n, seed=args.seed, workers=args.workers)
    print(f"C_Omega = {rep.c_omega:.12g}")
    d = rep.to_dict()
    d["spec"] = space.name
    _emit(args, "c_omega", d)
    return 0


def _apply_fit_tol(args):
    oscillatory.FIT_RESIDUAL_TOL = _tols(args)["fit"]


def cmd_probe(args) -> int:
    if args.experiment != "su2-t-character":
        raise CLIError(f"unknown probe {args.experiment!r}; available: su2-t-character")
    _apply_fit_tol(args)
    res = oscillatory.compact_condition_u(N=args.N, characters=tuple(_ints(args.characters)), n_points=args.points, seed=args.seed)
    dec, ctl = res["decay"], res["control"]
    print(f"min slope {dec.min_slope:.4f}  max slope {dec.max_slope:.4f}  target <= {dec.target}  {'PASS' if dec.passed else 'FAIL'}")
    print(f"control slopes in [{ctl.min_slope:.4f}, {ctl.max_slope:.4f}]  target >= {ctl.target}  {'PASS' if ctl.passed else 'FAIL'}")
    rep = {"schema": "schema/v1/probe_report", "experiment": args.experiment, "decay": dec.to_dict(), "control": ctl.to_dict(), "passed": dec.passed and ctl.passed}
    _emit(args, "probe", rep, {"decay.csv": dec.to_csv(), "control.csv": ctl.to_csv()} if args.out else None)
    return 0 if rep["passed"] else 1


def cmd_nsp(args) -> int:
    _apply_fit_tol(args)
    res = oscillatory.nsp_experiment(N=args.N, z_norm=args.z_norm, seed=args.seed)
    b, p = res["unperturbed"], res["perturbed"]
    print(f"slopes z=0: {[round(r.slope, 4) for r in b.records]}")
    print(f"slopes |z|={args.z_norm}: {[round(r.slope, 4) for r in p.records]}  change {res['slope_change']:.4f}")
    print(f"<xi>-exponents: {[round(e, 4) for e in res['xi_exponents']]}")
    ok = b.passed and p.passed and res["slope_change"] < 0.5 and max(res["xi_exponents"]) <= -args.N + 0.5
    rep = {
        "schema": "schema/v1/nsp_report",
        "unperturbed": b.to_dict(),
        "perturbed": p.to_dict(),
        "slope_change": res["slope_change"],
        "xi_exponents": res["xi_exponents"],
        "xi_residuals": res["xi_residuals"],
        "passed": bool(ok),
    }
    _emit(args, "nsp", rep, {"nsp.csv": p.to_csv()} if args.out else None)
    return 0 if ok else 1


def _case_overrides(args) -> dict:
    o = {}
    if args.n is not None:
        o["n"] = args.n
    if args.m is not None:
        o["m"] = args.m
    if args.sign is not None:
        o["sign"] = args.sign
    if args.theta is not None:
        o["theta"] = _floats(args.theta)
    return o


def _summary_table(rows: list[tuple]) -> str:
    w = [max(len(str(r[i])) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(str(c).ljust(w[i]) for i, c in enumerate(r)) for r in rows)


def cmd_case(args) -> int:
    from .catalog import load_catalog, run_case

    cat = load_catalog(args.catalog)
    if args.name == "list":
        for name, c in cat.items():
            print(f"{name}: {c.description}")
        return 0
    names = list(cat) if args.name == "all" else [args.name]
    if args.name not in cat and args.name != "all":
        raise CLIError(f"unknown case {args.name!r}; try 'case list'")
    overrides = _case_overrides(args)
    reports = [run_case(n, args.seed, overrides if args.name != "all" else None, cat) for n in names]
    rows = [("case", "check", "key", "expected", "observed", "verdict")]
    for r in reports:
        for a in r["assertions"]:
            obs = a["observed"]
            obs = json.dumps(obs) if not isinstance(obs, str) else obs
            rows.append((r["case"], a["check"], a["key"], json.dumps(a["expected"]), obs[:60], "PASS" if a["passed"] else "FAIL"))
    print(_summary_table(rows))
    for r in reports:
        if r["kind"] in ("sp_search", "so_pq_search") and r["result"].get("witness") is not None:
            print(f"{r['case']}: found witness {r['result']['witness']}")
        if r["kind"] == "sp_search" and r["result"].get("nonregular_fraction") is not None:
            print(f"{r['case']}: non-regular fraction {r['result']['nonregular_fraction']} (conjecture-support evidence)")
    cites = sorted({a["citation"] for r in reports for a in r["assertions"]})
    name = "case_" + args.name.replace("/", "_")
    _emit(args, name, {"schema": "schema/v1/case_run", "cases": reports, "citations": cites, "passed": all(r["passed"] for r in reports)})
    return 0 if all(r["passed"] for r in reports) else 1


def cmd_report(args) -> int:
    d = Path(args.directory)
    if not d.is_dir():
        raise CLIError(f"{d} is not a directory")
    rows = [("file", "schema", "passed", "config_hash")]
    entries = []
    for p in sorted(d.glob("*.json")):
        if p.name.endswith(".meta.json") or p.name in ("summary.json", "cone.json"):
            continue
        try:
            data = json.loads(p.read_text())
        except json.JSONDecodeError:
            continue
        if not isinstance(data, dict) or "config_hash" not in data:
            continue
        passed = data.get("passed")
        entries.append({"file": p.name, "schema": data.get("schema"), "passed": passed, "config_hash": data["config_hash"]})
        rows.append((p.name, data.get("schema"), passed, data["config_hash"][:12]))
    if not entries:
        print("no reports")
    else:
        print(_summary_table(rows))
    failed = [e for e in entries if e["passed"] is False]
    summary = {"schema": "schema/v1/summary", "reports": entries, "n_reports": len(entries), "n_failed": len(failed)}
    out = Path(args.out) if args.out else d
    write_report(out / "summary.json", summary)
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global")
    g.add_argument("--spec", help="algebra / homogeneous-space JSON file or built-in name (e.g. sl2, SL2/N)")
    g.add_argument("--seed", type=int, default=0, help="64-bit seed (default 0; always recorded in the report)")
    g.add_argument("--out", help="output directory for JSON/CSV reports")
    g.add_argument("--workers", type=int, default=1, help="worker threads (results do not depend on it)")
    for k, v in DEFAULT_TOLS.items():
        g.add_argument(f"--tol-{k.replace('_', '-')}", dest=f"tol_{k}", type=float, default=None, help=f"default {v:g}")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    p = argparse.ArgumentParser(prog="wfcones", description="Wave-front-set cone calculus for small matrix Lie groups.", parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("classify", parents=[common], help="classify an algebra element")
    s.add_argument("--coords", required=True, help="comma-separated coordinates")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("ind-cone", parents=[common], help="sample an induced cone and print its classification histogram")
    s.add_argument("--n", type=int, default=10_000)
    s.add_argument("--base", default="zero", help="zero | all | comma-separated restriction values of a ray")
    s.add_argument("--check-invariants", action="store_true", help="for SL2^k/diag: check that block sums vanish")
    s.set_defaults(func=cmd_ind_cone)

    s = sub.add_parser("ac", parents=[common], help="asymptotic-cone membership of a direction")
    s.add_argument("--family", default="lattice", help="lattice | ray | JSON file of points")
    s.add_argument("--direction", default="0,0,1", help="generator of the lattice / ray")
    s.add_argument("--xi", required=True)
    s.add_argument("--horizon", type=float, default=10.0)
    s.add_argument("--ratio", type=float, default=10.0)
    s.add_argument("--levels", type=int, default=2)
    s.set_defaults(func=cmd_ac)

    s = sub.add_parser("c-omega", parents=[common], help="the lower bound C_Omega")
    s.add_argument("--eta", required=True)
    s.add_argument("--radius", type=float, default=0.1)
    s.add_argument("--n", type=int, default=512, help="sampled points x")
    s.set_defaults(func=cmd_c_omega)

    s = sub.add_parser("probe", parents=[common], help="condition-U decay probe")
    s.add_argument("experiment", help="su2-t-character")
    s.add_argument("--N", type=int, default=4, help="bump order")
    s.add_argument("--characters", default="1,2,3")
    s.add_argument("--points", type=int, default=16)
    s.set_defaults(func=cmd_probe)

    s = sub.add_parser("nsp", parents=[common], help="uniform non-stationary phase check")
    s.add_argument("--N", type=int, default=4)
    s.add_argument("--z-norm", type=float, default=0.05)
    s.set_defaults(func=cmd_nsp)

    s = sub.add_parser("case", parents=[common], help="run a catalog case (or 'list' / 'all')")
    s.add_argument("name")
    s.add_argument("--catalog", help="catalog JSON (default: the built-in catalog)")
    s.add_argument("--n", type=int)
    s.add_argument("--m", type=int)
    s.add_argument("--sign", choices=["+", "-", "0"])
    s.add_argument("--theta", help="comma-separated elliptic parameters")
    s.set_defaults(func=cmd_case)

    s = sub.add_parser("report", parents=[common], help="merge the reports in a directory")
    s.add_argument("directory")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.workers < 1:
        parser.error("--workers must be positive")
    try:
        return int(args.func(args))
    except (CLIError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
