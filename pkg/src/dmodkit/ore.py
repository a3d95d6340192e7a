"""Noncommutative operators D = K[d1..dn] over K = Q(params)(x), and operator matrices.

Operators are kept in normal form sum_mu a_mu(x) * d_mu with all derivations to
the right of the coefficients; multiplication extends d_i a = a d_i + da/dx_i
by K-bilinearity.  ``OpMatrix`` is the p x m matrix type used for systems
D xi = eta, and ``OpRow`` is an element of the free row module D^(1 x m), the
working representation for Janet bases and syzygies.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb
from typing import Iterable, Mapping, Sequence

from dmodkit.exact import Context, RatFunc, parse_coeff, specialize

__all__ = [
    "MultiIndex",
    "mi_zero",
    "mi_add",
    "mi_sub",
    "mi_len",
    "mi_class",
    "term_key",
    "OrePoly",
    "OpRow",
    "OpMatrix",
    "ore_mul",
    "adjoint",
    "apply",
    "specialize_params",
    "change_coordinates",
    "ContextMismatch",
    "NonUnimodular",
]


class ContextMismatch(ValueError):
    """Raised when operands live over different variable contexts."""


class NonUnimodular(ValueError):
    """Raised for coordinate changes whose matrix is not integer unimodular."""


MultiIndex = tuple  # tuple[int, ...] of length n


def mi_zero(n: int) -> MultiIndex:
    return (0,) * n


def mi_add(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return tuple(x + y for x, y in zip(a, b))


def mi_sub(a: MultiIndex, b: MultiIndex) -> MultiIndex | None:
    """a - b componentwise, or None if any component would go negative."""
    out = []
    for x, y in zip(a, b):
        if x < y:
            return None
        out.append(x - y)
    return tuple(out)


def mi_len(a: MultiIndex) -> int:
    return sum(a)


def mi_class(a: MultiIndex) -> int | None:
    """Smallest 1-based i with a_i != 0; None for the zero multi-index."""
    for i, v in enumerate(a):
        if v:
            return i + 1
    return None


def term_key(mu: MultiIndex, k: int) -> tuple:
    """Sort key of the term order: degree first, then reverse-lex so higher
    class wins, then column (smaller column index ranks higher)."""
    return (sum(mu), tuple(reversed(mu)), -k)


def mi_key(mu: MultiIndex) -> tuple:
    return (sum(mu), tuple(reversed(mu)))


def _binom(mu: MultiIndex, sigma: MultiIndex) -> int:
    out = 1
    for m, s in zip(mu, sigma):
        out *= comb(m, s)
    return out


def _derivatives_upto(b: RatFunc, mu: MultiIndex) -> dict[MultiIndex, RatFunc]:
    """All nonzero partials d^sigma(b) for sigma <= mu (componentwise)."""
    n = len(mu)
    out = {mi_zero(n): b}
    for i in range(n):
        if mu[i] == 0:
            continue
        extended = dict(out)
        for sigma, val in out.items():
            cur = val
            for k in range(1, mu[i] + 1):
                cur = cur.derive(i)
                if cur.is_zero():
                    break
                s2 = sigma[:i] + (sigma[i] + k,) + sigma[i + 1 :]
                extended[s2] = cur
        out = extended
    return out


class OrePoly:
    """A differential operator sum_mu a_mu d_mu in normal form."""

    __slots__ = ("ctx", "terms")

    def __init__(self, ctx: Context, terms: Mapping[MultiIndex, RatFunc] | None = None):
        self.ctx = ctx
        t: dict[MultiIndex, RatFunc] = {}
        if terms:
            for mu, c in terms.items():
                if len(mu) != ctx.n:
                    raise ValueError(f"multi-index {mu} has wrong length for {ctx.x_vars}")
                if not c.is_zero():
                    t[mu] = c
        self.terms = t

    @staticmethod
    def zero(ctx: Context) -> "OrePoly":
        return OrePoly(ctx)

    @staticmethod
    def one(ctx: Context) -> "OrePoly":
        return OrePoly(ctx, {mi_zero(ctx.n): RatFunc.const(ctx, 1)})

    @staticmethod
    def const(ctx: Context, c) -> "OrePoly":
        if isinstance(c, RatFunc):
            return OrePoly(ctx, {mi_zero(ctx.n): c})
        return OrePoly(ctx, {mi_zero(ctx.n): RatFunc.const(ctx, c)})

    @staticmethod
    def d(ctx: Context, i: int, power: int = 1) -> "OrePoly":
        """The operator d_i^power (i is 1-based)."""
        if not 1 <= i <= ctx.n:
            raise IndexError(f"derivation index {i} out of range 1..{ctx.n}")
        mu = [0] * ctx.n
        mu[i - 1] = power
        return OrePoly(ctx, {tuple(mu): RatFunc.const(ctx, 1)})

    @staticmethod
    def monomial(ctx: Context, mu: MultiIndex, coeff: RatFunc) -> "OrePoly":
        return OrePoly(ctx, {tuple(mu): coeff})

    def is_zero(self) -> bool:
        return not self.terms

    def order(self) -> int:
        if self.is_zero():
            return -1
        return max(mi_len(mu) for mu in self.terms)

    def _check(self, other: "OrePoly") -> None:
        if self.ctx != other.ctx:
            raise ContextMismatch(f"operator contexts differ: {self.ctx} vs {other.ctx}")

    def __add__(self, other: "OrePoly") -> "OrePoly":
        self._check(other)
        t = dict(self.terms)
        for mu, c in other.terms.items():
            s = t[mu] + c if mu in t else c
            if s.is_zero():
                t.pop(mu, None)
            else:
                t[mu] = s
        out = OrePoly.__new__(OrePoly)
        out.ctx, out.terms = self.ctx, t
        return out

    def __neg__(self) -> "OrePoly":
        out = OrePoly.__new__(OrePoly)
        out.ctx = self.ctx
        out.terms = {mu: -c for mu, c in self.terms.items()}
        return out

    def __sub__(self, other: "OrePoly") -> "OrePoly":
        return self + (-other)

    def scale(self, c: RatFunc) -> "OrePoly":
        if c.is_zero():
            return OrePoly(self.ctx)
        out = OrePoly.__new__(OrePoly)
        out.ctx = self.ctx
        out.terms = {mu: v * c for mu, v in self.terms.items()}
        return out

    def __mul__(self, other: "OrePoly") -> "OrePoly":
        """Operator composition self o other (Leibniz expansion)."""
        self._check(other)
        t: dict[MultiIndex, RatFunc] = {}
        for mu, a in self.terms.items():
            for nu, b in other.terms.items():
                for sigma, db in _derivatives_upto(b, mu).items():
                    c = a * db
                    bin_ = _binom(mu, sigma)
                    if bin_ != 1:
                        c = c.scale(Fraction(bin_))
                    rest = mi_sub(mu, sigma)
                    key = mi_add(rest, nu)
                    s = t[key] + c if key in t else c
                    if s.is_zero():
                        t.pop(key, None)
                    else:
                        t[key] = s
        out = OrePoly.__new__(OrePoly)
        out.ctx, out.terms = self.ctx, t
        return out

    def adjoint(self) -> "OrePoly":
        """Formal adjoint: sum (-1)^|mu| d_mu o a_mu, expanded to normal form."""
        out = OrePoly.zero(self.ctx)
        for mu, a in self.terms.items():
            dmu = OrePoly.monomial(self.ctx, mu, RatFunc.const(self.ctx, 1))
            expanded = dmu * OrePoly.const(self.ctx, a)
            if mi_len(mu) % 2:
                expanded = -expanded
            out = out + expanded
        return out

    def apply(self, f: RatFunc) -> RatFunc:
        """Act on a rational-function section: sum a_mu * d^mu(f)."""
        out = RatFunc.const(self.ctx, 0)
        for mu, a in self.terms.items():
            g = f
            for i, k in enumerate(mu):
                for _ in range(k):
                    g = g.derive(i)
                    if g.is_zero():
                        break
            if not g.is_zero():
                out = out + a * g
        return out

    def leading(self) -> tuple[MultiIndex, RatFunc]:
        if self.is_zero():
            raise ValueError("zero operator has no leading term")
        mu = max(self.terms, key=mi_key)
        return mu, self.terms[mu]

    def __eq__(self, other) -> bool:
        return isinstance(other, OrePoly) and self.ctx == other.ctx and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.ctx, frozenset((mu, c) for mu, c in self.terms.items())))

    def __str__(self) -> str:
        return format_op(self)

    def __repr__(self) -> str:
        return f"OrePoly({self})"


def _format_dpart(ctx: Context, mu: MultiIndex) -> str:
    parts = []
    for i, k in enumerate(mu):
        if k == 1:
            parts.append(f"d{i + 1}")
        elif k > 1:
            parts.append(f"d{i + 1}^{k}")
    return "*".join(parts)


def _coeff_str(c: RatFunc) -> tuple[str, bool]:
    """Printable coefficient and whether it needs parentheses before '*d'."""
    s = str(c)
    needs = (" " in s) or ("/" in s)
    return s, needs


def format_op_term(ctx: Context, mu: MultiIndex, c: RatFunc, unknown: str | None = None) -> str:
    dpart = _format_dpart(ctx, mu)
    cs, needs = _coeff_str(c)
    pieces = []
    if cs == "1" and (dpart or unknown):
        pass
    elif cs == "-1" and (dpart or unknown):
        pieces.append("-")
    else:
        pieces.append(f"({cs})" if needs else cs)
    if dpart:
        pieces.append(dpart)
    if unknown:
        pieces.append(unknown)
    if not pieces:
        return cs
    if pieces and pieces[0] == "-":
        return "-" + "*".join(pieces[1:])
    return "*".join(pieces)


def format_op(p: OrePoly) -> str:
    if p.is_zero():
        return "0"
    chunks = []
    for mu in sorted(p.terms, key=mi_key, reverse=True):
        s = format_op_term(p.ctx, mu, p.terms[mu])
        if chunks:
            if s.startswith("-"):
                chunks.append("- " + s[1:])
            else:
                chunks.append("+ " + s)
        else:
            chunks.append(s)
    return " ".join(chunks)


class OpRow:
    """An element of the free row module D^(1 x m): terms keyed by (mu, column)."""

    __slots__ = ("ctx", "m", "terms")

    def __init__(self, ctx: Context, m: int, terms: Mapping[tuple, RatFunc] | None = None):
        self.ctx = ctx
        self.m = m
        t: dict[tuple, RatFunc] = {}
        if terms:
            for (mu, k), c in terms.items():
                if not 0 <= k < m:
                    raise ValueError(f"column {k} out of range for m={m}")
                if not c.is_zero():
                    t[(tuple(mu), k)] = c
        self.terms = t

    @staticmethod
    def zero(ctx: Context, m: int) -> "OpRow":
        return OpRow(ctx, m)

    @staticmethod
    def unit(ctx: Context, m: int, k: int) -> "OpRow":
        return OpRow(ctx, m, {(mi_zero(ctx.n), k): RatFunc.const(ctx, 1)})

    @staticmethod
    def from_ops(ops: Sequence[OrePoly]) -> "OpRow":
        ctx = ops[0].ctx
        t = {}
        for k, p in enumerate(ops):
            for mu, c in p.terms.items():
                t[(mu, k)] = c
        return OpRow(ctx, len(ops), t)

    def to_ops(self) -> list[OrePoly]:
        cols: list[dict] = [{} for _ in range(self.m)]
        for (mu, k), c in self.terms.items():
            cols[k][mu] = c
        return [OrePoly(self.ctx, d) for d in cols]

    def is_zero(self) -> bool:
        return not self.terms

    def order(self) -> int:
        if self.is_zero():
            return -1
        return max(mi_len(mu) for mu, _ in self.terms)

    def leader(self) -> tuple[MultiIndex, int]:
        if self.is_zero():
            raise ValueError("zero row has no leader")
        return max(self.terms, key=lambda t: term_key(*t))

    def leading_coeff(self) -> RatFunc:
        return self.terms[self.leader()]

    def __add__(self, other: "OpRow") -> "OpRow":
        t = dict(self.terms)
        for key, c in other.terms.items():
            s = t[key] + c if key in t else c
            if s.is_zero():
                t.pop(key, None)
            else:
                t[key] = s
        out = OpRow.__new__(OpRow)
        out.ctx, out.m, out.terms = self.ctx, self.m, t
        return out

    def __neg__(self) -> "OpRow":
        out = OpRow.__new__(OpRow)
        out.ctx, out.m = self.ctx, self.m
        out.terms = {key: -c for key, c in self.terms.items()}
        return out

    def __sub__(self, other: "OpRow") -> "OpRow":
        return self + (-other)

    def scale(self, c: RatFunc) -> "OpRow":
        if c.is_zero():
            return OpRow(self.ctx, self.m)
        out = OpRow.__new__(OpRow)
        out.ctx, out.m = self.ctx, self.m
        out.terms = {key: v * c for key, v in self.terms.items()}
        return out

    def mul_monomial(self, sigma: MultiIndex, c: RatFunc) -> "OpRow":
        """Left-multiply by the operator c * d_sigma."""
        t: dict[tuple, RatFunc] = {}
        for (nu, k), b in self.terms.items():
            for tau, db in _derivatives_upto(b, sigma).items():
                coef = c * db
                bin_ = _binom(sigma, tau)
                if bin_ != 1:
                    coef = coef.scale(Fraction(bin_))
                key = (mi_add(mi_sub(sigma, tau), nu), k)
                s = t[key] + coef if key in t else coef
                if s.is_zero():
                    t.pop(key, None)
                else:
                    t[key] = s
        out = OpRow.__new__(OpRow)
        out.ctx, out.m, out.terms = self.ctx, self.m, t
        return out

    def mul_op(self, p: OrePoly) -> "OpRow":
        """Left-multiply by a full operator."""
        out = OpRow.zero(self.ctx, self.m)
        for sigma, c in p.terms.items():
            out = out + self.mul_monomial(sigma, c)
        return out

    def sorted_terms(self) -> list[tuple[tuple, RatFunc]]:
        return sorted(self.terms.items(), key=lambda t: term_key(*t[0]), reverse=True)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, OpRow)
            and self.ctx == other.ctx
            and self.m == other.m
            and self.terms == other.terms
        )

    def __hash__(self) -> int:
        return hash((self.ctx, self.m, frozenset(self.terms.items())))

    def __str__(self) -> str:
        return self.format()

    def format(self, unknowns: Sequence[str] | None = None) -> str:
        if self.is_zero():
            return "0"
        names = unknowns or [f"u{k + 1}" for k in range(self.m)]
        chunks = []
        for (mu, k), c in self.sorted_terms():
            s = format_op_term(self.ctx, mu, c, names[k])
            if chunks:
                chunks.append("- " + s[1:] if s.startswith("-") else "+ " + s)
            else:
                chunks.append(s)
        return " ".join(chunks)

    def __repr__(self) -> str:
        return f"OpRow({self})"


class OpMatrix:
    """A p x m matrix of operators with named variables, parameters and unknowns."""

    __slots__ = ("ctx", "unknowns", "row_labels", "entries", "p", "m")

    def __init__(
        self,
        ctx: Context,
        unknowns: Sequence[str],
        rows: Sequence[Sequence[OrePoly]] | None = None,
        row_labels: Sequence[str] | None = None,
        p: int | None = None,
        entries: Mapping[tuple, OrePoly] | None = None,
    ):
        self.ctx = ctx
        self.unknowns = tuple(unknowns)
        self.m = len(self.unknowns)
        if rows is not None:
            self.p = len(rows)
            self.entries = {}
            for i, row in enumerate(rows):
                if len(row) != self.m:
                    raise ValueError(f"row {i} has {len(row)} entries, expected {self.m}")
                for j, op in enumerate(row):
                    if op is not None and not op.is_zero():
                        if op.ctx != ctx:
                            raise ContextMismatch("entry context differs from matrix context")
                        self.entries[(i, j)] = op
        else:
            self.p = int(p or 0)
            self.entries = {}
            if entries:
                for (i, j), op in entries.items():
                    if not op.is_zero():
                        self.entries[(i, j)] = op
        if row_labels is not None:
            if len(row_labels) != self.p:
                raise ValueError("row label count mismatch")
            self.row_labels = tuple(row_labels)
        else:
            self.row_labels = tuple(f"eq{i + 1}" for i in range(self.p))
        # m = 0 is tolerated for degenerate results (empty kernels); most
        # inputs come through SystemDoc, which enforces m >= 1

    def entry(self, i: int, j: int) -> OrePoly:
        return self.entries.get((i, j), OrePoly.zero(self.ctx))

    def row(self, i: int) -> OpRow:
        t = {}
        for j in range(self.m):
            op = self.entries.get((i, j))
            if op:
                for mu, c in op.terms.items():
                    t[(mu, j)] = c
        return OpRow(self.ctx, self.m, t)

    def rows(self) -> list[OpRow]:
        return [self.row(i) for i in range(self.p)]

    @staticmethod
    def from_op_rows(
        ctx: Context,
        unknowns: Sequence[str],
        rows: Sequence[OpRow],
        row_labels: Sequence[str] | None = None,
    ) -> "OpMatrix":
        mat_rows = [r.to_ops() for r in rows]
        return OpMatrix(ctx, unknowns, mat_rows, row_labels=row_labels)

    def max_order(self) -> int:
        return max((op.order() for op in self.entries.values()), default=-1)

    def adjoint(self) -> "OpMatrix":
        entries = {}
        for (i, j), op in self.entries.items():
            entries[(j, i)] = op.adjoint()
        return OpMatrix(
            self.ctx,
            unknowns=self.row_labels,
            p=self.m,
            entries=entries,
            row_labels=self.unknowns,
        )

    def compose(self, other: "OpMatrix") -> "OpMatrix":
        """Matrix product self o other (self applied after other)."""
        if self.ctx != other.ctx:
            raise ContextMismatch("matrix contexts differ")
        if self.m != other.p:
            raise ValueError(f"shape mismatch: ({self.p}x{self.m}) o ({other.p}x{other.m})")
        entries: dict[tuple, OrePoly] = {}
        for (i, k), a in self.entries.items():
            for j in range(other.m):
                b = other.entries.get((k, j))
                if b is None:
                    continue
                prod = a * b
                if prod.is_zero():
                    continue
                cur = entries.get((i, j))
                s = prod if cur is None else cur + prod
                if s.is_zero():
                    entries.pop((i, j), None)
                else:
                    entries[(i, j)] = s
        return OpMatrix(
            self.ctx,
            unknowns=other.unknowns,
            p=self.p,
            entries=entries,
            row_labels=self.row_labels,
        )

    def apply(self, section: Sequence[RatFunc]) -> list[RatFunc]:
        if len(section) != self.m:
            raise ValueError(f"section length {len(section)} != {self.m} unknowns")
        out = []
        for i in range(self.p):
            acc = RatFunc.const(self.ctx, 0)
            for j in range(self.m):
                op = self.entries.get((i, j))
                if op:
                    acc = acc + op.apply(section[j])
            out.append(acc)
        return out

    def specialize_params(self, bindings: Mapping[str, object]) -> "OpMatrix":
        if not bindings:
            return self
        new_ctx = self.ctx.drop_params(bindings)
        entries = {}
        for (i, j), op in self.entries.items():
            t = {}
            for mu, c in op.terms.items():
                c2 = specialize(c, bindings)
                if not c2.is_zero():
                    t[mu] = c2
            if t:
                entries[(i, j)] = OrePoly(new_ctx, t)
        return OpMatrix(
            new_ctx,
            unknowns=self.unknowns,
            p=self.p,
            entries=entries,
            row_labels=self.row_labels,
        )

    def change_coordinates(self, a: Sequence[Sequence[int]]) -> "OpMatrix":
        """Rewrite in coordinates xbar = A x for an integer unimodular A."""
        n = self.ctx.n
        if len(a) != n or any(len(r) != n for r in a):
            raise NonUnimodular(f"matrix must be {n}x{n}")
        inv = _unimodular_inverse(a)
        ctx = self.ctx
        # x_k -> sum_l inv[k][l] * xbar_l  (parameters untouched)
        images = {}
        for k, name in enumerate(ctx.x_vars):
            img = RatFunc.const(ctx, 0)
            for l in range(n):
                if inv[k][l]:
                    img = img + RatFunc.var(ctx, ctx.x_vars[l]).scale(Fraction(inv[k][l]))
            images[name] = img
        for pname in ctx.params:
            images[pname] = RatFunc.var(ctx, pname)
        # d_i -> sum_j A[j][i] dbar_j
        dimgs = []
        for i in range(n):
            op = OrePoly.zero(ctx)
            for j in range(n):
                if a[j][i]:
                    op = op + OrePoly.d(ctx, j + 1).scale(RatFunc.const(ctx, a[j][i]))
            dimgs.append(op)
        entries = {}
        for (i, j), op in self.entries.items():
            acc = OrePoly.zero(ctx)
            for mu, c in op.terms.items():
                new_op = OrePoly.one(ctx)
                for vi, k in enumerate(mu):
                    for _ in range(k):
                        new_op = new_op * dimgs[vi]
                acc = acc + new_op.scale(c.subst(ctx, images))
            if not acc.is_zero():
                entries[(i, j)] = acc
        return OpMatrix(
            ctx, unknowns=self.unknowns, p=self.p, entries=entries, row_labels=self.row_labels
        )

    def select_columns(self, cols: Sequence[int]) -> "OpMatrix":
        entries = {}
        for new_j, j in enumerate(cols):
            for i in range(self.p):
                op = self.entries.get((i, j))
                if op:
                    entries[(i, new_j)] = op
        return OpMatrix(
            self.ctx,
            unknowns=[self.unknowns[j] for j in cols],
            p=self.p,
            entries=entries,
            row_labels=self.row_labels,
        )

    def __eq__(self, other) -> bool:
        # positional semantics; row/column labels are metadata
        return (
            isinstance(other, OpMatrix)
            and self.ctx == other.ctx
            and self.m == other.m
            and self.p == other.p
            and self.entries == other.entries
        )

    def __str__(self) -> str:
        lines = [f"OpMatrix {self.p}x{self.m} over {self.ctx.x_vars} params={self.ctx.params}"]
        for i in range(self.p):
            lines.append(f"  {self.row_labels[i]}: {self.row(i).format(self.unknowns)} = 0")
        return "\n".join(lines)

    def __repr__(self) -> str:
        return f"<OpMatrix {self.p}x{self.m}>"


def _unimodular_inverse(a: Sequence[Sequence[int]]) -> list[list[int]]:
    n = len(a)
    m = [[Fraction(a[i][j]) for j in range(n)] + [Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise NonUnimodular("matrix is singular")
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        det *= m[col][col]
        inv_p = 1 / m[col][col]
        m[col] = [x * inv_p for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    if abs(det) != 1:
        raise NonUnimodular(f"determinant {det} is not +-1")
    return [[int(m[i][n + j]) for j in range(n)] for i in range(n)]


# -- functional aliases for the matrix operations ---------------------------------


def ore_mul(p: OrePoly, q: OrePoly) -> OrePoly:
    return p * q


def adjoint(m: OpMatrix) -> OpMatrix:
    return m.adjoint()


def apply(m: OpMatrix, section: Sequence[RatFunc]) -> list[RatFunc]:
    return m.apply(section)


def specialize_params(m: OpMatrix, bindings: Mapping[str, object]) -> OpMatrix:
    return m.specialize_params(bindings)


def change_coordinates(m: OpMatrix, a: Sequence[Sequence[int]]) -> OpMatrix:
    return m.change_coordinates(a)


def op_from_terms(ctx: Context, terms: Iterable[tuple[str, Sequence[int]]]) -> OrePoly:
    """Build an operator from (coefficient string, multi-index) pairs."""
    t: dict[MultiIndex, RatFunc] = {}
    for coeff, mu in terms:
        c = parse_coeff(coeff, ctx)
        key = tuple(mu)
        t[key] = t[key] + c if key in t else c
    return OrePoly(ctx, t)
