"""Janet involutive bases for row modules in D^m.

The completion works with the class-respecting term order of ``ore.term_key``:
degree first, then reverse lexicographic comparison of multi-indices so that
leaders of higher class dominate, then column position.  Multiplicative
variables follow Janet's degree-partition scheme computed per column from the
current leader set, which always terminates on a fixed leader set; when the
computed cones agree with the class cones (checked combinatorially), the basis
is class-ordered and the tabular / character counts of an involutive system of
its order apply.

Every generator carries an exact expression in terms of the input rows, so a
finished basis certifies both directions of module equality: basis = U * input
and input = V * basis hold as operator identities.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from math import comb
from typing import Iterable, Sequence

from dmodkit.exact import Context, MPoly, RatFunc, assumption_factors
from dmodkit.ore import (
    MultiIndex,
    OpMatrix,
    OpRow,
    OrePoly,
    mi_class,
    mi_key,
    mi_len,
    mi_sub,
    mi_zero,
    term_key,
)

__all__ = [
    "JanetBasis",
    "JanetTabular",
    "Generator",
    "CompletionBudgetExceeded",
    "DeltaRegularityError",
    "involutive_completion",
    "normal_form",
    "tabular",
    "parametric_jets",
    "delta_regularize",
    "first_order_form",
    "janet_multiplicative",
    "rank_over_k",
    "prolongation_dims",
    "pp_chain",
    "monomials_upto",
]

DEFAULT_BUDGET_MARGIN = 8


class CompletionBudgetExceeded(RuntimeError):
    """Completion needed prolongations beyond the total-order budget."""

    def __init__(self, budget: int, partial: "JanetBasis | None" = None):
        super().__init__(f"completion budget exceeded (max total order {budget})")
        self.budget = budget
        self.partial = partial


class DeltaRegularityError(RuntimeError):
    """No attempted coordinate frame produced a class-ordered basis."""

    def __init__(self, attempted: list):
        super().__init__(f"no delta-regular frame found among {len(attempted)} attempts")
        self.attempted = attempted


@dataclass
class Generator:
    row: OpRow                # monic: leading coefficient 1
    expr: OpRow               # row = expr * (input rows), exact identity
    mult: frozenset = frozenset()

    @property
    def leader(self) -> tuple[MultiIndex, int]:
        return self.row.leader()


@dataclass
class JanetBasis:
    ctx: Context
    m: int
    gens: list[Generator]
    matrix: OpMatrix                      # the presented input
    assumptions: list[MPoly]              # pivot polynomials inverted during elimination
    budget: int
    coord_change: list | None = None      # unimodular frame, None = identity
    _v_rows: list[OpRow] | None = None

    @property
    def p(self) -> int:
        return self.matrix.p

    @property
    def order(self) -> int:
        return max((g.row.order() for g in self.gens), default=0)

    def leaders(self) -> list[tuple[MultiIndex, int]]:
        return [g.leader for g in self.gens]

    def u_matrix(self) -> OpMatrix:
        """Basis rows expressed in the input rows: basis = U * input."""
        return OpMatrix.from_op_rows(
            self.ctx,
            self.matrix.row_labels,
            [g.expr for g in self.gens],
            row_labels=[f"g{i + 1}" for i in range(len(self.gens))],
        )

    def v_rows(self) -> list[OpRow]:
        """Input rows expressed in the basis: input = V * basis."""
        if self._v_rows is None:
            rows = []
            for i in range(self.matrix.p):
                nf, cof = normal_form(self.matrix.row(i), self)
                if not nf.is_zero():
                    raise AssertionError("input row does not reduce to zero against its own basis")
                terms = {
                    (mu, j): c
                    for j, cop in enumerate(cof)
                    for mu, c in cop.terms.items()
                }
                rows.append(OpRow(self.ctx, len(self.gens), terms))
            self._v_rows = rows
        return self._v_rows

    def is_class_ordered(self) -> bool:
        """Combinatorial check that the leader set is also complete for the
        class cones; order-zero leaders are skipped."""
        leaders = self.leaders()
        by_col: dict[int, list[MultiIndex]] = {}
        for mu, k in leaders:
            by_col.setdefault(k, []).append(mu)
        for mu, k in leaders:
            if mi_len(mu) == 0:
                continue
            cls = mi_class(mu)
            for i in range(cls + 1, self.ctx.n + 1):
                target = mu[: i - 1] + (mu[i - 1] + 1,) + mu[i:]
                if not any(_class_cone_divides(nu, target) for nu in by_col.get(k, ())):
                    return False
        return True

    def reducible(self, mu: MultiIndex, k: int) -> bool:
        """Whether the jet (mu, k) lies in the monomial module of the leaders."""
        for lmu, lk in self.leaders():
            if lk == k and mi_sub(mu, lmu) is not None:
                return True
        return False


def _class_cone_divides(nu: MultiIndex, mu: MultiIndex) -> bool:
    sigma = mi_sub(mu, nu)
    if sigma is None:
        return False
    cls = mi_class(nu)
    if cls is None:
        return mi_len(sigma) == 0
    return all(sigma[i] == 0 for i in range(cls, len(sigma)))


def janet_multiplicative(mus: Sequence[MultiIndex], n: int) -> list[frozenset]:
    """Janet multiplicative variables (1-based) for a set of multi-indices."""
    mult: list[set] = [set() for _ in mus]

    def assign(group: list[int], i: int) -> None:
        if i < 0 or not group:
            return
        mx = max(mus[g][i] for g in group)
        buckets: dict[int, list[int]] = {}
        for g in group:
            if mus[g][i] == mx:
                mult[g].add(i + 1)
            buckets.setdefault(mus[g][i], []).append(g)
        for sub in buckets.values():
            assign(sub, i - 1)

    assign(list(range(len(mus))), n - 1)
    return [frozenset(s) for s in mult]


def _recompute_mult(gens: list[Generator], n: int) -> None:
    by_col: dict[int, list[int]] = {}
    for idx, g in enumerate(gens):
        by_col.setdefault(g.leader[1], []).append(idx)
    for col_gens in by_col.values():
        mus = [gens[i].leader[0] for i in col_gens]
        for i, ms in zip(col_gens, janet_multiplicative(mus, n)):
            gens[i].mult = ms


def _find_reducer(gens: list[Generator], mu: MultiIndex, k: int) -> tuple[int, MultiIndex] | None:
    for idx, g in enumerate(gens):
        lmu, lk = g.leader
        if lk != k:
            continue
        sigma = mi_sub(mu, lmu)
        if sigma is None:
            continue
        if all(sigma[i] == 0 or (i + 1) in g.mult for i in range(len(sigma))):
            return idx, sigma
    return None


def _reduce_full(
    row: OpRow, gens: list[Generator], want_cofactors: bool
) -> tuple[OpRow, list[dict] | None]:
    """Involutive normal form; optionally returns cofactor term dicts per generator."""
    work = dict(row.terms)
    tail: dict[tuple, RatFunc] = {}
    cof: list[dict] | None = [dict() for _ in gens] if want_cofactors else None
    while work:
        key = max(work, key=lambda t: term_key(*t))
        mu, k = key
        c = work[key]
        hit = _find_reducer(gens, mu, k)
        if hit is None:
            tail[key] = c
            del work[key]
            continue
        idx, sigma = hit
        sub = gens[idx].row.mul_monomial(sigma, c)
        for tkey, tc in sub.terms.items():
            cur = work.get(tkey)
            s = -tc if cur is None else cur - tc
            if s.is_zero():
                work.pop(tkey, None)
            else:
                work[tkey] = s
        if cof is not None:
            d = cof[idx]
            d[sigma] = d[sigma] + c if sigma in d else c
    return OpRow(row.ctx, row.m, tail), cof


def normal_form(row: OpRow, basis: JanetBasis) -> tuple[OpRow, list[OrePoly]]:
    """Reduce a row; returns (reduced, cofactors) with
    row = sum_j cofactor_j * generator_j + reduced as an exact identity."""
    nf, cof = _reduce_full(row, basis.gens, True)
    ops = [OrePoly(row.ctx, {mu: c for mu, c in d.items()}) for d in cof]
    return nf, ops


def involutive_completion(matrix: OpMatrix, budget: int | None = None) -> JanetBasis:
    """Complete the row module of ``matrix`` to a Janet basis.

    Raises :class:`CompletionBudgetExceeded` when a needed prolongation climbs
    past the total-order budget (default: input order + 8).
    """
    ctx, m, p = matrix.ctx, matrix.m, matrix.p
    base_order = max(matrix.max_order(), 0)
    if budget is None:
        budget = base_order + DEFAULT_BUDGET_MARGIN
    gens: list[Generator] = []
    assumptions: list[MPoly] = []
    seen_assum: set = set()
    basis = JanetBasis(ctx, m, gens, matrix, assumptions, budget)

    def record_pivot(c: RatFunc) -> None:
        for f in assumption_factors(c.num):
            key = frozenset(f.terms.items())
            if key not in seen_assum:
                seen_assum.add(key)
                assumptions.append(f)

    def insert(row: OpRow, expr: OpRow) -> bool:
        nf, cof = _reduce_full(row, gens, True)
        if nf.is_zero():
            return False
        for idx, d in enumerate(cof):
            if d:
                expr = expr - gens[idx].expr.mul_op(OrePoly(ctx, d))
        lc = nf.leading_coeff()
        if not lc.is_one():
            record_pivot(lc)
            inv = lc.inverse()
            nf = nf.scale(inv)
            expr = expr.scale(inv)
        gens.append(Generator(nf, expr))
        gens.sort(key=lambda g: term_key(*g.leader))
        _recompute_mult(gens, ctx.n)
        return True

    queue = sorted(
        (
            (matrix.row(i), OpRow.unit(ctx, p, i))
            for i in range(p)
            if not matrix.row(i).is_zero()
        ),
        key=lambda t: term_key(*t[0].leader()),
    )
    for row, expr in queue:
        insert(row, expr)

    # saturate nonmultiplicative prolongations until a clean pass
    while True:
        changed = False
        for g in list(gens):
            nonmult = [i for i in range(1, ctx.n + 1) if i not in g.mult]
            for i in sorted(nonmult):
                lead_order = mi_len(g.leader[0])
                if lead_order + 1 > budget:
                    raise CompletionBudgetExceeded(budget, basis)
                one = RatFunc.const(ctx, 1)
                sigma = tuple(1 if j == i - 1 else 0 for j in range(ctx.n))
                prol = g.row.mul_monomial(sigma, one)
                expr = g.expr.mul_monomial(sigma, one)
                if insert(prol, expr):
                    changed = True
                    break
            if changed:
                break
        if not changed:
            break

    _autoreduce_tails(gens, ctx)
    basis.v_rows()        # also certifies module preservation
    return basis


def _autoreduce_tails(gens: list[Generator], ctx: Context) -> None:
    """Fully reduce every generator's tail against the others (leaders fixed)."""
    for _ in range(len(gens) + 1):
        dirty = False
        for idx, g in enumerate(gens):
            lead_key = g.leader
            lead_coeff = g.row.terms[lead_key]
            tail = OpRow(ctx, g.row.m, {k: c for k, c in g.row.terms.items() if k != lead_key})
            nf, cof = _reduce_full(tail, gens, True)
            if any(d for d in cof):
                expr = g.expr
                for jdx, d in enumerate(cof):
                    if d:
                        expr = expr - gens[jdx].expr.mul_op(OrePoly(ctx, d))
                row = OpRow(ctx, g.row.m, {**nf.terms, lead_key: lead_coeff})
                gens[idx] = Generator(row, expr, g.mult)
                dirty = True
        if not dirty:
            return


# -- tabular and characters ------------------------------------------------------


@dataclass
class JanetTabular:
    n: int
    m: int
    q: int
    beta: dict[int, int]                  # class -> solved order-q equations
    alpha: dict[int, int]                 # class -> characters
    lower: dict[tuple[int, int], int]     # (order, class) -> generator count
    dim_symbol: int                       # dim g_q = sum(alpha)
    class_ordered: bool

    def render(self, basis: JanetBasis | None = None, unknowns: Sequence[str] | None = None) -> str:
        lines = [f"order q = {self.q}, {self.m} unknown(s), {self.n} variable(s)"]
        if basis is not None:
            names = list(unknowns or basis.matrix.unknowns)
            for g in sorted(basis.gens, key=lambda g: term_key(*g.leader), reverse=True):
                marks = " ".join(
                    str(i) if i in g.mult else "." for i in range(1, self.n + 1)
                )
                lines.append(f"  {g.row.format(names)}   | {marks}")
        for i in range(self.n, 0, -1):
            lines.append(
                f"class {i}: beta = {self.beta.get(i, 0)}, alpha = {self.alpha.get(i, 0)}"
            )
        if self.lower:
            low = ", ".join(
                f"{cnt} of order {o} (class {c})" for (o, c), cnt in sorted(self.lower.items())
            )
            lines.append(f"lower order: {low}")
        lines.append(f"dim g_q = {self.dim_symbol}")
        lines.append(f"class-ordered: {'yes' if self.class_ordered else 'no'}")
        return "\n".join(lines)


def _count_class_monomials(q: int, n: int, i: int) -> int:
    """Number of order-q multi-indices of class i in n variables."""
    return comb(q - 1 + n - i, n - i)


def tabular(basis: JanetBasis) -> JanetTabular:
    n, m = basis.ctx.n, basis.m
    q = max(basis.order, 1)
    beta: dict[int, int] = {i: 0 for i in range(1, n + 1)}
    for mu in _monomials_of_degree(q, n):
        cls = mi_class(mu)
        for k in range(m):
            if basis.reducible(mu, k):
                beta[cls] += 1
    alpha = {
        i: m * _count_class_monomials(q, n, i) - beta[i] for i in range(1, n + 1)
    }
    lower: dict[tuple[int, int], int] = {}
    for g in basis.gens:
        mu, _k = g.leader
        o = mi_len(mu)
        if o < q:
            cls = mi_class(mu) or 0
            lower[(o, cls)] = lower.get((o, cls), 0) + 1
    return JanetTabular(
        n=n,
        m=m,
        q=q,
        beta=beta,
        alpha=alpha,
        lower=lower,
        dim_symbol=sum(alpha.values()),
        class_ordered=basis.is_class_ordered(),
    )


def _monomials_of_degree(q: int, n: int) -> Iterable[MultiIndex]:
    if n == 1:
        yield (q,)
        return
    for first in range(q, -1, -1):
        for rest in _monomials_of_degree(q - first, n - 1):
            yield (first,) + rest


def monomials_upto(r: int, n: int) -> list[MultiIndex]:
    out = []
    for q in range(r + 1):
        out.extend(_monomials_of_degree(q, n))
    return out


def parametric_jets(basis: JanetBasis, r: int) -> tuple[int, list[tuple[MultiIndex, int]]]:
    """Jets d_mu y^k with |mu| <= r not lying under any leader."""
    out = []
    for mu in monomials_upto(r, basis.ctx.n):
        for k in range(basis.m):
            if not basis.reducible(mu, k):
                out.append((mu, k))
    out.sort(key=lambda t: term_key(*t))
    return len(out), out


# -- delta-regularization ----------------------------------------------------------


def _candidate_frames(n: int, seed: int, random_tries: int = 24) -> Iterable[list[list[int]]]:
    ident = [[int(i == j) for j in range(n)] for i in range(n)]
    yield ident
    if n == 1:
        return
    positions = [(i, j) for i in range(n) for j in range(n) if i != j]
    subsets = sorted(range(1, 1 << len(positions)), key=lambda s: (bin(s).count("1"), s))
    seen = set()
    for s in subsets:
        mat = [row[:] for row in ident]
        ok = True
        lower = upper = False
        for bit, (i, j) in enumerate(positions):
            if s >> bit & 1:
                mat[i][j] = 1
                if i > j:
                    lower = True
                else:
                    upper = True
        ok = not (lower and upper)  # keep the frame triangular, hence unimodular
        if ok:
            key = tuple(tuple(r) for r in mat)
            if key not in seen:
                seen.add(key)
                yield mat
    rng = random.Random(seed)
    for _ in range(random_tries):
        low = [[int(i == j) for j in range(n)] for i in range(n)]
        up = [[int(i == j) for j in range(n)] for i in range(n)]
        for i in range(n):
            for j in range(n):
                if i > j:
                    low[i][j] = rng.randint(-2, 2)
                elif i < j:
                    up[i][j] = rng.randint(-2, 2)
        mat = [
            [sum(low[i][k] * up[k][j] for k in range(n)) for j in range(n)] for i in range(n)
        ]
        key = tuple(tuple(r) for r in mat)
        if key not in seen:
            seen.add(key)
            yield mat


def delta_regularize(
    matrix: OpMatrix, budget: int | None = None, seed: int = 0
) -> tuple[JanetBasis, list[list[int]]]:
    """Find a coordinate frame whose completion is class-ordered.

    Tries the identity first, then deterministic 0/1 triangular frames, then
    seeded random unimodular ones; the first class-ordered completion wins.
    """
    attempted = []
    for frame in _candidate_frames(matrix.ctx.n, seed):
        attempted.append(frame)
        ident = all(frame[i][j] == int(i == j) for i in range(len(frame)) for j in range(len(frame)))
        try:
            mb = matrix if ident else matrix.change_coordinates(frame)
            basis = involutive_completion(mb, budget)
        except CompletionBudgetExceeded:
            continue
        if basis.is_class_ordered():
            basis.coord_change = None if ident else frame
            return basis, frame
    raise DeltaRegularityError(attempted)


# -- first-order (Spencer style) form ---------------------------------------------


def _state_label(name: str, mu: MultiIndex) -> str:
    if mi_len(mu) == 0:
        return name
    digits = "".join(str(i + 1) * mu[i] for i in range(len(mu)))
    return f"{name}_{digits}"


def first_order_form(matrix: OpMatrix, budget: int | None = None) -> OpMatrix:
    return first_order_form_with_map(matrix, budget)[0]


def first_order_form_with_map(
    matrix: OpMatrix, budget: int | None = None
) -> tuple[OpMatrix, OpMatrix]:
    """Equivalent first-order system with no order-zero equations.

    New unknowns are the parametric jets of order < q of the completed system;
    also returns the substitution matrix expressing each state as d_mu y^k, so
    the equivalence can be certified by reduction against the input module.
    """
    basis = involutive_completion(matrix, budget)
    q = basis.order
    if q <= 1 and all(matrix.row(i).order() >= 1 for i in range(matrix.p)):
        subst = OpMatrix(
            matrix.ctx,
            matrix.unknowns,
            [
                [OrePoly.const(matrix.ctx, 1) if j == k else OrePoly.zero(matrix.ctx) for j in range(matrix.m)]
                for k in range(matrix.m)
            ],
            row_labels=matrix.unknowns,
        )
        return matrix, subst
    if q < 1:
        raise ValueError("cannot build a first-order form of an order-0 system")
    ctx = matrix.ctx
    n = ctx.n
    _, jets = parametric_jets(basis, q)
    states = [(mu, k) for mu, k in jets if mi_len(mu) <= q - 1]
    states.sort(key=lambda t: (t[1], mi_key(t[0])))
    index = {s: i for i, s in enumerate(states)}
    top = {(mu, k) for mu, k in jets if mi_len(mu) == q}

    def top_rep(mu: MultiIndex, k: int) -> tuple[int, tuple[MultiIndex, int]]:
        j = mi_class(mu)
        parent = mu[: j - 1] + (mu[j - 1] - 1,) + mu[j:]
        return j, (parent, k)

    def convert(row: OpRow) -> dict[tuple, RatFunc]:
        """Rewrite a fully reduced row over jets into state-row terms."""
        out: dict[tuple, RatFunc] = {}
        for (mu, k), c in row.terms.items():
            if (mu, k) in top:
                j, parent = top_rep(mu, k)
                key = (tuple(1 if t == j - 1 else 0 for t in range(n)), index[parent])
            else:
                key = (mi_zero(n), index[(mu, k)])
            out[key] = out[key] + c if key in out else c
        return out

    rows: list[OpRow] = []
    labels: list[str] = []
    nstates = len(states)
    for mu, k in states:
        for i in range(1, n + 1):
            target = mu[: i - 1] + (mu[i - 1] + 1,) + mu[i:]
            di = tuple(1 if t == i - 1 else 0 for t in range(n))
            lhs = {(di, index[(mu, k)]): RatFunc.const(ctx, 1)}
            if (target, k) in index:
                rhs = {(mi_zero(n), index[(target, k)]): RatFunc.const(ctx, 1)}
            elif (target, k) in top:
                j, parent = top_rep(target, k)
                if j == i and parent == (mu, k):
                    continue  # the defining identity, not an equation
                dj = tuple(1 if t == j - 1 else 0 for t in range(n))
                rhs = {(dj, index[parent]): RatFunc.const(ctx, 1)}
            else:
                jet_row = OpRow(ctx, basis.m, {(target, k): RatFunc.const(ctx, 1)})
                nf, _ = _reduce_full(jet_row, basis.gens, False)
                rhs = convert(nf)
            terms = dict(lhs)
            for key, c in rhs.items():
                s = terms[key] - c if key in terms else -c
                if s.is_zero():
                    terms.pop(key, None)
                else:
                    terms[key] = s
            row = OpRow(ctx, nstates, terms)
            if not row.is_zero():
                rows.append(row)
                labels.append(f"{_state_label(matrix.unknowns[k], mu)}_d{i}")
    state_names = [_state_label(matrix.unknowns[k], mu) for mu, k in states]
    out = OpMatrix.from_op_rows(ctx, state_names, rows, row_labels=labels)
    subst_rows = [
        OpRow(ctx, matrix.m, {(mu, k): RatFunc.const(ctx, 1)}) for mu, k in states
    ]
    subst = OpMatrix.from_op_rows(ctx, matrix.unknowns, subst_rows, row_labels=state_names)
    return out, subst


# -- exact linear algebra over K ----------------------------------------------------


def _echelon(rows: list[dict[int, RatFunc]]) -> list[dict[int, RatFunc]]:
    """Gaussian elimination over K on sparse rows keyed by column index
    (smaller column index = earlier pivot)."""
    pivots: dict[int, dict[int, RatFunc]] = {}
    for row in rows:
        row = dict(row)
        while row:
            col = min(row)
            piv = pivots.get(col)
            if piv is None:
                inv = row[col].inverse()
                pivots[col] = {c: v * inv for c, v in row.items()}
                break
            f = row[col]
            for c, v in piv.items():
                cur = row.get(c)
                s = (cur - f * v) if cur is not None else -(f * v)
                if s.is_zero():
                    row.pop(c, None)
                else:
                    row[c] = s
        # empty row: dependent, dropped
    return [pivots[c] for c in sorted(pivots)]


def _rows_to_vectors(rows: Sequence[OpRow]) -> tuple[list[dict[int, RatFunc]], list[tuple]]:
    keys = sorted({key for r in rows for key in r.terms}, key=lambda t: term_key(*t), reverse=True)
    pos = {key: i for i, key in enumerate(keys)}
    vecs = [{pos[key]: c for key, c in r.terms.items()} for r in rows]
    return vecs, keys


def rank_over_k(rows: Sequence[OpRow]) -> int:
    """Rank of the rows as K-linear forms in the jet coordinates."""
    vecs, _ = _rows_to_vectors([r for r in rows if not r.is_zero()])
    return len(_echelon(vecs))


def _prolonged_rows(matrix: OpMatrix, steps: int) -> list[OpRow]:
    one = RatFunc.const(matrix.ctx, 1)
    out = []
    for i in range(matrix.p):
        base = matrix.row(i)
        if base.is_zero():
            continue
        for sigma in monomials_upto(steps, matrix.ctx.n):
            out.append(base.mul_monomial(sigma, one))
    return out


def prolongation_dims(matrix: OpMatrix, steps: int) -> list[int]:
    """Solution-space dimensions of the s-fold prolongations, s = 0..steps.

    Entry s is dim of the space cut out in the jets of order <= q + s by all
    derivatives of total order <= s of the equations (q = input order).
    """
    q = max(matrix.max_order(), 0)
    dims = []
    for s in range(steps + 1):
        rows = _prolonged_rows(matrix, s)
        total = matrix.m * len(monomials_upto(q + s, matrix.ctx.n))
        dims.append(total - rank_over_k(rows))
    return dims


def pp_chain(matrix: OpMatrix, max_steps: int = 6) -> list[int]:
    """Dimensions [dim J_q, dim pi_q(rho_0), dim pi_q(rho_1), ...] of the
    order-q projections under successive prolongation/projection steps,
    stopping once they stabilize."""
    q = max(matrix.max_order(), 0)
    nmon_q = len(monomials_upto(q, matrix.ctx.n))
    chain = [matrix.m * nmon_q]
    prev = None
    for s in range(max_steps + 1):
        rows = _prolonged_rows(matrix, s)
        vecs, keys = _rows_to_vectors(rows)
        high = {i for i, (mu, _k) in enumerate(keys) if mi_len(mu) > q}
        total_rank = len(_echelon(vecs))
        high_rank = len(_echelon([{c: v for c, v in vec.items() if c in high} for vec in vecs]))
        low_dim = total_rank - high_rank   # dim of the span's order-<=q part
        chain.append(matrix.m * nmon_q - low_dim)
        if prev is not None and chain[-1] == prev:
            chain.pop()
            break
        prev = chain[-1]
    return chain
