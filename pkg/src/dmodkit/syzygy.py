"""Compatibility conditions, module membership and rank queries.

The generating relations of an operator's rows come out of the involutive
basis: every nonmultiplicative prolongation of a generator reduces to zero,
and the recorded cofactors turn that reduction into a syzygy of the basis
rows; the tracked transformation matrices translate those back to syzygies of
the user's original rows.  A correction block covers inputs whose rows were
themselves interdependent.  The brute-force linear-algebra oracle at the end
exists for tests only; nothing in the engine calls it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from dmodkit.exact import MPoly, RatFunc
from dmodkit.janet import (
    Generator,
    JanetBasis,
    _reduce_full,
    delta_regularize,
    involutive_completion,
    monomials_upto,
    normal_form,
    tabular,
)
from dmodkit.ore import OpMatrix, OpRow, OrePoly, mi_key, term_key

__all__ = [
    "CCResult",
    "ContainmentReport",
    "compatibility_conditions",
    "module_contains",
    "modules_equal",
    "is_zero_module",
    "differential_rank",
    "differential_sequence",
    "syzygy_oracle",
    "autoreduce_rows",
    "OracleCapExceeded",
]


class OracleCapExceeded(RuntimeError):
    """The brute-force syzygy search would exceed its dimension cap."""


def _full_mult(gen_row: OpRow, n: int) -> Generator:
    return Generator(gen_row, OpRow.zero(gen_row.ctx, 1), frozenset(range(1, n + 1)))


def autoreduce_rows(rows: Sequence[OpRow], record_pivot=None) -> list[OpRow]:
    """Mutually reduce a generating set (ordinary division), monic and sorted."""
    work: list[OpRow] = []
    for r in rows:
        if not r.is_zero():
            lc = r.leading_coeff()
            if not lc.is_one():
                if record_pivot is not None:
                    record_pivot(lc)
                r = r.scale(lc.inverse())
            work.append(r)
    n = work[0].ctx.n if work else 0
    for _ in range(len(work) * len(work) + 8):
        changed = False
        for idx in range(len(work)):
            r = work[idx]
            if r is None:
                continue
            others = [_full_mult(w, n) for j, w in enumerate(work) if j != idx and w is not None]
            nf, _ = _reduce_full(r, others, False)
            if nf.is_zero():
                work[idx] = None
                changed = True
                continue
            lc = nf.leading_coeff()
            if not lc.is_one():
                if record_pivot is not None:
                    record_pivot(lc)
                nf = nf.scale(lc.inverse())
            if nf != r:
                work[idx] = nf
                changed = True
        if not changed:
            break
    out = [r for r in work if r is not None]
    out.sort(key=lambda r: term_key(*r.leader()), reverse=True)
    return out


@dataclass
class CCResult:
    """Generating compatibility conditions of an operator's rows."""

    cc: OpMatrix
    basis: JanetBasis
    assumptions: list[MPoly]

    def verify(self, matrix: OpMatrix) -> bool:
        """Exact check that cc o matrix is the zero matrix."""
        if self.cc.p == 0:
            return True
        prod = self.cc.compose(matrix)
        return not prod.entries


def compatibility_conditions(matrix: OpMatrix, budget: int | None = None) -> CCResult:
    """Generating relations cc with cc o matrix = 0, over the original row labels."""
    ctx = matrix.ctx
    p = matrix.p
    basis = involutive_completion(matrix, budget)
    gens = basis.gens
    one = RatFunc.const(ctx, 1)
    u_rows = [g.expr for g in gens]

    syzygies: list[OpRow] = []
    for j, g in enumerate(gens):
        for i in range(1, ctx.n + 1):
            if i in g.mult:
                continue
            sigma = tuple(1 if t == i - 1 else 0 for t in range(ctx.n))
            nf, cof = _reduce_full(g.row.mul_monomial(sigma, one), gens, True)
            if not nf.is_zero():
                raise AssertionError("basis is not involutive")  # pragma: no cover
            # d_i e_j - sum_l Q_l e_l, then through U to the original labels
            row = u_rows[j].mul_monomial(sigma, one)
            for l, d in enumerate(cof):
                if d:
                    row = row - u_rows[l].mul_op(OrePoly(ctx, d))
            if not row.is_zero():
                syzygies.append(row)

    # rows of (1 - V U): relations hidden in the presentation itself
    for i, vrow in enumerate(basis.v_rows()):
        row = OpRow.unit(ctx, p, i)
        for (mu, j), c in vrow.terms.items():
            row = row - u_rows[j].mul_monomial(mu, c)
        if not row.is_zero():
            syzygies.append(row)

    assumptions = list(basis.assumptions)
    seen = {frozenset(a.terms.items()) for a in assumptions}

    def record(c: RatFunc) -> None:
        from dmodkit.exact import assumption_factors

        for f in assumption_factors(c.num):
            key = frozenset(f.terms.items())
            if key not in seen:
                seen.add(key)
                assumptions.append(f)

    reduced = autoreduce_rows(syzygies, record)
    cc = OpMatrix.from_op_rows(
        ctx,
        matrix.row_labels,
        reduced,
        row_labels=[f"cc{i + 1}" for i in range(len(reduced))],
    )
    return CCResult(cc=cc, basis=basis, assumptions=assumptions)


@dataclass
class ContainmentReport:
    ok: bool
    residues: list[OpRow]            # nonzero normal forms of the offending rows
    cofactors: list[list[OrePoly]]   # reduction witnesses per input row


def module_contains(basis: JanetBasis, rows: OpMatrix | Sequence[OpRow]) -> ContainmentReport:
    """Whether every row lies in the module presented by the basis."""
    row_list = rows.rows() if isinstance(rows, OpMatrix) else list(rows)
    residues: list[OpRow] = []
    cofs: list[list[OrePoly]] = []
    ok = True
    for r in row_list:
        nf, cof = normal_form(r, basis)
        cofs.append(cof)
        if not nf.is_zero():
            ok = False
            residues.append(nf)
    return ContainmentReport(ok=ok, residues=residues, cofactors=cofs)


def modules_equal(m1: OpMatrix, m2: OpMatrix, budget: int | None = None) -> bool:
    """Row-module equality via mutual containment of completions."""
    if m1.ctx != m2.ctx or m1.m != m2.m:
        raise ValueError("modules live in different free modules")
    b1 = involutive_completion(m1, budget)
    b2 = involutive_completion(m2, budget)
    return module_contains(b1, m2).ok and module_contains(b2, m1).ok


def is_zero_module(matrix: OpMatrix, budget: int | None = None) -> tuple[bool, list[MPoly]]:
    """Whether the rows generate all of D^m, i.e. the presented module is zero
    (only the zero solution); also returns the pivot assumptions used."""
    basis = involutive_completion(matrix, budget)
    units = [OpRow.unit(matrix.ctx, matrix.m, k) for k in range(matrix.m)]
    return module_contains(basis, units).ok, list(basis.assumptions)


def differential_rank(matrix: OpMatrix, budget: int | None = None, seed: int = 0) -> int:
    """Rank of the largest free submodule of the presented cokernel: the
    top character of a class-ordered involutive presentation."""
    if matrix.p == 0 or all(matrix.row(i).is_zero() for i in range(matrix.p)):
        return matrix.m
    basis = involutive_completion(matrix, budget)
    if not basis.is_class_ordered():
        basis, _frame = delta_regularize(matrix, budget, seed)
    t = tabular(basis)
    return t.alpha[matrix.ctx.n]


def differential_sequence(
    matrix: OpMatrix, max_steps: int = 8, budget: int | None = None
) -> list[OpMatrix]:
    """Iterate compatibility conditions until they are exhausted."""
    out = [matrix]
    cur = matrix
    for _ in range(max_steps):
        cc = compatibility_conditions(cur, budget).cc
        if cc.p == 0:
            break
        out.append(cc)
        cur = cc
    return out


def syzygy_oracle(
    matrix: OpMatrix, order_bound: int, cap: int = 4000
) -> list[OpRow]:
    """Brute-force K-basis of the syzygies of order <= order_bound.

    Sets up the K-linear map sending candidate coefficient vectors to the
    expanded combination sum_i S_i o row_i and extracts its kernel by exact
    elimination.  Exponential in the bound; for tests only.
    """
    ctx = matrix.ctx
    p = matrix.p
    monos = sorted(monomials_upto(order_bound, ctx.n), key=mi_key)
    candidates = [(i, sigma) for i in range(p) for sigma in monos]
    if len(candidates) > cap:
        raise OracleCapExceeded(f"{len(candidates)} candidate terms exceed cap {cap}")
    one = RatFunc.const(ctx, 1)
    expanded: list[OpRow] = []
    for i, sigma in candidates:
        expanded.append(matrix.row(i).mul_monomial(sigma, one))
    keys = sorted(
        {key for r in expanded for key in r.terms}, key=lambda t: term_key(*t), reverse=True
    )
    pos = {key: idx for idx, key in enumerate(keys)}
    ncand = len(candidates)

    # eliminate [vector | tracking]; rows that vanish give kernel elements
    pivots: dict[int, tuple[dict, dict]] = {}
    kernel: list[dict] = []
    for idx, r in enumerate(expanded):
        vec = {pos[key]: c for key, c in r.terms.items()}
        track = {idx: RatFunc.const(ctx, 1)}
        while vec:
            col = min(vec)
            hit = pivots.get(col)
            if hit is None:
                inv = vec[col].inverse()
                pivots[col] = (
                    {c: v * inv for c, v in vec.items()},
                    {c: v * inv for c, v in track.items()},
                )
                break
            pvec, ptrack = hit
            f = vec[col]
            for c, v in pvec.items():
                cur = vec.get(c)
                s = (cur - f * v) if cur is not None else -(f * v)
                if s.is_zero():
                    vec.pop(c, None)
                else:
                    vec[c] = s
            for c, v in ptrack.items():
                cur = track.get(c)
                s = (cur - f * v) if cur is not None else -(f * v)
                if s.is_zero():
                    track.pop(c, None)
                else:
                    track[c] = s
        if not vec:
            kernel.append(track)

    out: list[OpRow] = []
    for track in kernel:
        terms = {}
        for cand_idx, c in track.items():
            i, sigma = candidates[cand_idx]
            key = (sigma, i)
            terms[key] = terms[key] + c if key in terms else c
        row = OpRow(ctx, p, terms)
        if not row.is_zero():
            out.append(row)
    out.sort(key=lambda r: term_key(*r.leader()), reverse=True)
    return out
