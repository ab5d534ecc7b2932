"""Concrete matrix realizations of the algebras used throughout the toolkit.

``sl2`` uses the coordinates ``X_{x,y,z} = [[x, y - z], [y + z, -x]]``, so the
basis is ``H = diag(1, -1)``, ``S = [[0, 1], [1, 0]]``, ``J = [[0, -1], [1, 0]]``
and ``x^2 + y^2 - z^2`` is half the trace form ``Tr(X^2)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .algebra import AlgebraError, LieAlgebraSpec, complement, orthonormalize

__all__ = [
    "sl2",
    "su2",
    "so3",
    "sp",
    "so_pq",
    "direct_sum",
    "HomogeneousSpaceSpec",
    "sl2_coords",
    "SL2_E",
    "SL2_F",
    "SL2_H",
    "SL2_J",
    "nilradical_sl2",
    "borel_sl2",
    "torus_sl2",
    "split_torus_sl2",
    "diagonal",
    "sp_block",
    "u_rs_in_so_pq",
    "whole",
    "builtin_algebra",
    "builtin_space",
]

SL2_H = np.array([1.0, 0.0, 0.0])
SL2_J = np.array([0.0, 0.0, 1.0])
SL2_E = np.array([0.0, 0.5, -0.5])  # [[0, 1], [0, 0]]
SL2_F = np.array([0.0, 0.5, 0.5])  # [[0, 0], [1, 0]]


def _e(n, i, j):
    m = np.zeros((n, n))
    m[i, j] = 1.0
    return m


def sl2() -> LieAlgebraSpec:
    H = np.diag([1.0, -1.0])
    S = np.array([[0.0, 1.0], [1.0, 0.0]])
    J = np.array([[0.0, -1.0], [1.0, 0.0]])
    return LieAlgebraSpec(
        "sl2",
        np.stack([H, S, J]),
        rank=1,
        cartan_reps={"a": [SL2_H], "t": [SL2_J]},
        constraint={"type": "symplectic", "form": np.array([[0.0, 1.0], [-1.0, 0.0]])},
    )


def sl2_coords(M) -> np.ndarray:
    """``(x, y, z)`` of a traceless 2x2 matrix."""
    M = np.asarray(M, dtype=float)
    return np.array([M[0, 0], 0.5 * (M[0, 1] + M[1, 0]), 0.5 * (M[1, 0] - M[0, 1])])


def _realify(Z: np.ndarray) -> np.ndarray:
    n = Z.shape[0]
    R = np.zeros((2 * n, 2 * n))
    R[0::2, 0::2] = Z.real
    R[0::2, 1::2] = -Z.imag
    R[1::2, 0::2] = Z.imag
    R[1::2, 1::2] = Z.real
    return R


def su2() -> LieAlgebraSpec:
    """``su(2)`` realified as 4x4 real matrices (complex entry ``a+ib`` -> ``[[a,-b],[b,a]]``).

    Basis ``u1 = diag(i, -i)``, ``u2 = [[0, 1], [-1, 0]]``, ``u3 = [[0, i], [i, 0]]``;
    ``exp(theta u1)`` is the maximal torus ``T``, periodic with period ``2 pi``.
    """
    u1 = np.array([[1j, 0], [0, -1j]])
    u2 = np.array([[0, 1], [-1, 0]], dtype=complex)
    u3 = np.array([[0, 1j], [1j, 0]])
    basis = np.stack([_realify(u) for u in (u1, u2, u3)])
    return LieAlgebraSpec(
        "su2",
        basis,
        rank=1,
        cartan_reps={"t": [[1.0, 0.0, 0.0]]},
        constraint={"type": "signature", "form": np.eye(4)},
    )


def so3() -> LieAlgebraSpec:
    Lx = _e(3, 2, 1) - _e(3, 1, 2)
    Ly = _e(3, 0, 2) - _e(3, 2, 0)
    Lz = _e(3, 1, 0) - _e(3, 0, 1)
    return LieAlgebraSpec(
        "so3",
        np.stack([Lx, Ly, Lz]),
        rank=1,
        cartan_reps={"t": [[0.0, 0.0, 1.0]]},
        constraint={"type": "signature", "form": np.eye(3)},
    )


def sp(n: int) -> LieAlgebraSpec:
    """``sp(2n, R)`` preserving ``J = [[0, I], [-I, 0]]``.

    Basis order: ``A``-block units ``[[E_ij, 0], [0, -E_ji]]`` (row-major), then
    symmetric ``B`` units ``[[0, S_ij], [0, 0]]`` and ``C`` units ``[[0, 0], [S_ij, 0]]``
    for ``i <= j``.
    """
    N = 2 * n
    basis = []
    for i in range(n):
        for j in range(n):
            m = np.zeros((N, N))
            m[i, j] = 1.0
            m[n + j, n + i] = -1.0
            basis.append(m)
    for blk in ("B", "C"):
        for i in range(n):
            for j in range(i, n):
                m = np.zeros((N, N))
                if blk == "B":
                    m[i, n + j] = m[j, n + i] = 1.0
                else:
                    m[n + i, j] = m[n + j, i] = 1.0
                basis.append(m)
    basis = np.stack(basis)
    J = np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])
    probe = LieAlgebraSpec(f"sp{N}", basis, rank=n, check=False)
    t_rows, a_rows = [], []
    for i in range(n):
        t = _e(N, i, n + i) - _e(N, n + i, i)
        a = _e(N, i, i) - _e(N, n + i, n + i)
        t_rows.append(probe.coords(t))
        a_rows.append(probe.coords(a))
    return LieAlgebraSpec(
        f"sp{N}",
        basis,
        rank=n,
        cartan_reps={"t": np.array(t_rows), "a": np.array(a_rows)},
        constraint={"type": "symplectic", "form": J},
    )


def so_pq(p: int, q: int) -> LieAlgebraSpec:
    """``so(p, q)`` preserving ``eta = diag(1_p, -1_q)``.

    Rotations ``E_ij - E_ji`` inside each signature block and boosts
    ``E_ij + E_ji`` across blocks.  The compact Cartan ``t`` (rotations on
    disjoint coordinate pairs inside the blocks) is recorded when its dimension
    equals the rank.
    """
    N = p + q
    eta = np.diag([1.0] * p + [-1.0] * q)
    basis = []
    for i in range(N):
        for j in range(i + 1, N):
            same = (i < p) == (j < p)
            basis.append(_e(N, i, j) - _e(N, j, i) if same else _e(N, i, j) + _e(N, j, i))
    basis = np.stack(basis)
    rank = N // 2
    probe = LieAlgebraSpec(f"so{p}{q}", basis, rank=rank, check=False)
    pairs = [(i, i + 1) for i in range(0, p - 1, 2)] + [(i, i + 1) for i in range(p, N - 1, 2)]
    reps = {}
    if len(pairs) == rank:
        reps["t"] = np.array([probe.coords(_e(N, j, i) - _e(N, i, j)) for i, j in pairs])
    return LieAlgebraSpec(
        f"so{p}{q}", basis, rank=rank, cartan_reps=reps, constraint={"type": "signature", "form": eta}
    )


def direct_sum(*specs: LieAlgebraSpec, name: str | None = None) -> LieAlgebraSpec:
    """Block-diagonal direct sum; coordinates concatenate factor coordinates."""
    N = sum(s.ambient_dim for s in specs)
    basis, factors = [], []
    roff = coff = 0
    for s in specs:
        for b in s.basis:
            m = np.zeros((N, N))
            m[roff : roff + s.ambient_dim, roff : roff + s.ambient_dim] = b
            basis.append(m)
        factors.append((roff, coff, s))
        roff += s.ambient_dim
        coff += s.dim
    d = coff
    rank = sum(s.rank for s in specs)
    reps = {}
    names = [sorted(s.cartan_reps) for s in specs]
    if all(names) and np.prod([len(x) for x in names]) <= 64:
        for combo in itertools.product(*names):
            rows = []
            for (ro, co, s), nm in zip(factors, combo):
                for r in s.cartan_reps[nm]:
                    v = np.zeros(d)
                    v[co : co + s.dim] = r
                    rows.append(v)
            reps["+".join(combo)] = np.array(rows)
    constraint = None
    if all(s.constraint is not None for s in specs) and len({s.constraint["type"] for s in specs}) == 1:
        form = np.zeros((N, N))
        for ro, co, s in factors:
            n = s.ambient_dim
            form[ro : ro + n, ro : ro + n] = s.constraint["form"]
        constraint = {"type": specs[0].constraint["type"], "form": form}
    return LieAlgebraSpec(
        name or "+".join(s.name for s in specs),
        np.stack(basis),
        rank=rank,
        cartan_reps=reps,
        constraint=constraint,
        factors=tuple(factors),
    )


# ---------------------------------------------------------------------------
# homogeneous spaces
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class HomogeneousSpaceSpec:
    """``G/H`` recorded as an ambient algebra plus coordinate rows spanning ``h``."""

    algebra: LieAlgebraSpec
    sub: np.ndarray
    name: str = ""
    sub_rank: int | None = None
    sub_cartan: dict = field(default_factory=dict)

    def __post_init__(self):
        self.sub = np.asarray(self.sub, dtype=float).reshape(-1, self.algebra.dim)
        if self.sub.shape[0] and np.linalg.matrix_rank(self.sub, tol=1e-10) != self.sub.shape[0]:
            raise AlgebraError("subalgebra basis is not independent")
        if self.sub.shape[0]:
            m = self.algebra.matrix(self.sub)
            br = m[:, None] @ m[None, :] - m[None, :] @ m[:, None]
            c = self.algebra.coords(br.reshape((-1,) + br.shape[2:]))
            ortho = complement(self.sub, self.algebra.gram)
            if ortho.shape[0] and np.abs(c @ self.algebra.gram @ ortho.T).max() > 1e-9 * max(1.0, np.abs(c).max()):
                raise AlgebraError(f"{self.name}: subalgebra is not bracket-closed")
        if not self.name:
            self.name = f"{self.algebra.name}/h{self.sub.shape[0]}"

    @property
    def dim_h(self) -> int:
        return self.sub.shape[0]

    def orthonormal_sub(self) -> np.ndarray:
        return orthonormalize(self.sub, self.algebra.gram) if self.dim_h else np.zeros((0, self.algebra.dim))

    def sub_algebra(self) -> LieAlgebraSpec:
        """``h`` as a stand-alone spec (used for classification inside ``h``)."""
        rank = self.sub_rank if self.sub_rank is not None else self.dim_h
        return LieAlgebraSpec(
            f"{self.name}:h",
            self.algebra.matrix(self.sub),
            rank=rank,
            cartan_reps=self.sub_cartan,
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "algebra": self.algebra.to_dict(),
            "subalgebra": self.sub.tolist(),
            "sub_rank": self.sub_rank,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HomogeneousSpaceSpec":
        alg = d["algebra"]
        alg = builtin_algebra(alg) if isinstance(alg, str) else LieAlgebraSpec.from_dict(alg)
        return cls(alg, np.asarray(d["subalgebra"], float), d.get("name", ""), d.get("sub_rank"))


def nilradical_sl2(alg: LieAlgebraSpec | None = None) -> HomogeneousSpaceSpec:
    alg = alg or sl2()
    return HomogeneousSpaceSpec(alg, [SL2_E], "SL2/N", sub_rank=1, sub_cartan={"n": [[1.0]]})


def borel_sl2(alg: LieAlgebraSpec | None = None) -> HomogeneousSpaceSpec:
    alg = alg or sl2()
    return HomogeneousSpaceSpec(alg, [SL2_H, SL2_E], "SL2/B", sub_rank=1, sub_cartan={"a": [[1.0, 0.0]]})


def torus_sl2(alg: LieAlgebraSpec | None = None) -> HomogeneousSpaceSpec:
    alg = alg or sl2()
    return HomogeneousSpaceSpec(alg, [SL2_J], "SL2/T", sub_rank=1, sub_cartan={"t": [[1.0]]})


def split_torus_sl2(alg: LieAlgebraSpec | None = None) -> HomogeneousSpaceSpec:
    alg = alg or sl2()
    return HomogeneousSpaceSpec(alg, [SL2_H], "SL2/A", sub_rank=1, sub_cartan={"a": [[1.0]]})


def whole(alg: LieAlgebraSpec) -> HomogeneousSpaceSpec:
    return HomogeneousSpaceSpec(alg, np.eye(alg.dim), f"{alg.name}/{alg.name}", sub_rank=alg.rank)


def diagonal(factor: LieAlgebraSpec, k: int) -> HomogeneousSpaceSpec:
    """``G_1^k / Delta(G_1)``."""
    alg = direct_sum(*([factor] * k), name=f"{factor.name}^{k}")
    rows = np.concatenate([np.eye(factor.dim)] * k, axis=1)
    return HomogeneousSpaceSpec(alg, rows, f"{alg.name}/diag", sub_rank=factor.rank)


def sp_block(n: int, m: int) -> HomogeneousSpaceSpec:
    """``Sp(2n, R) / Sp(2m, R)`` with ``sp(2m)`` on the first ``m`` q- and p-coordinates."""
    if not (0 <= m <= n - 1):
        raise AlgebraError(f"invalid (n, m) = ({n}, {m}); need 0 <= m <= n - 1")
    alg = sp(n)
    S = list(range(m)) + [n + i for i in range(m)]
    mask = np.zeros((2 * n, 2 * n), bool)
    mask[np.ix_(S, S)] = True
    rows = [c for c, b in zip(np.eye(alg.dim), alg.basis) if np.any(b[mask]) and not np.any(b[~mask])]
    return HomogeneousSpaceSpec(
        alg, np.array(rows).reshape(-1, alg.dim), f"Sp{2*n}/Sp{2*m}", sub_rank=m
    )


def u_rs_in_so_pq(p: int, q: int, r: int, s: int) -> HomogeneousSpaceSpec:
    """``U(r, s)`` inside ``SO(p, q)`` as the commutant of a complex structure on
    the first ``2r`` positive and first ``2s`` negative coordinates."""
    if 2 * r > p or 2 * s > q:
        raise AlgebraError("need 2r <= p and 2s <= q")
    alg = so_pq(p, q)
    N = p + q
    Jc = np.zeros((N, N))
    for base, cnt in ((0, r), (p, s)):
        for k in range(cnt):
            i, j = base + 2 * k, base + 2 * k + 1
            Jc[j, i], Jc[i, j] = 1.0, -1.0
    used = [base + k for base, cnt in ((0, 2 * r), (p, 2 * s)) for k in range(cnt)]
    unused = [i for i in range(N) if i not in used]
    # linear conditions: [X, Jc] = 0 and X vanishes on unused coordinates
    rows = []
    for b in alg.basis:
        comm = b @ Jc - Jc @ b
        rows.append(np.concatenate([comm.ravel(), b[unused, :].ravel(), b[:, unused].ravel()]))
    A = np.array(rows).T
    _, sv, vt = np.linalg.svd(A)
    rk = int(np.sum(sv > 1e-10))
    null = vt[rk:]
    return HomogeneousSpaceSpec(alg, null, f"SO({p},{q})/U({r},{s})", sub_rank=r + s)


_ALGEBRAS = {
    "sl2": sl2,
    "su2": su2,
    "so3": so3,
    "sl2^2": lambda: direct_sum(sl2(), sl2(), name="sl2^2"),
    "sl2^3": lambda: direct_sum(sl2(), sl2(), sl2(), name="sl2^3"),
}


def builtin_algebra(name: str) -> LieAlgebraSpec:
    """Resolve names such as ``sl2``, ``su2``, ``sp4``, ``so23``, ``sl2^3``."""
    if name in _ALGEBRAS:
        return _ALGEBRAS[name]()
    if name.startswith("sp") and name[2:].isdigit() and int(name[2:]) % 2 == 0:
        return sp(int(name[2:]) // 2)
    if name.startswith("so") and len(name) == 4 and name[2:].isdigit():
        return so_pq(int(name[2]), int(name[3]))
    raise AlgebraError(f"unknown built-in algebra {name!r}")


def builtin_space(name: str) -> HomogeneousSpaceSpec:
    """Resolve ``SL2/N``, ``SL2/B``, ``SL2/T``, ``SL2/A``, ``SL2/SL2``, ``SU2/T``,
    ``SL2^k/diag``, ``Sp2n/Sp2m``, ``SO(p,q)/U(r,s)``."""
    key = name.replace(" ", "")
    table = {
        "SL2/N": nilradical_sl2,
        "SL2/B": borel_sl2,
        "SL2/T": torus_sl2,
        "SL2/A": split_torus_sl2,
        "SL2/SL2": lambda: whole(sl2()),
        "SU2/T": lambda: HomogeneousSpaceSpec(su2(), [[1.0, 0.0, 0.0]], "SU2/T", sub_rank=1),
    }
    if key in table:
        return table[key]()
    if key.startswith("SL2^") and key.endswith("/diag"):
        return diagonal(sl2(), int(key[4:-5]))
    if key.startswith("Sp") and "/Sp" in key:
        a, b = key.split("/")
        return sp_block(int(a[2:]) // 2, int(b[2:]) // 2)
    if key.startswith("SO(") and "/U(" in key:
        a, b = key.split("/")
        p, q = (int(v) for v in a[3:-1].split(","))
        r, s = (int(v) for v in b[2:-1].split(","))
        return u_rs_in_so_pq(p, q, r, s)
    raise AlgebraError(f"unknown built-in homogeneous space {name!r}")
