"""Built-in operators and named fixtures.

Metric builders work over constant diagonal metrics only; the stress rows of
the symmetrized derivative carry the factor two of the symmetrization, and the
trace-corrected curvature rows are scaled by the multiplicity of their index
pair (off-diagonal rows doubled) so that the matrix is self-adjoint on the
nose.  Fixture builders return the exact displayed systems with labeled rows
and columns.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from dmodkit.exact import Context, RatFunc
from dmodkit.ore import OpMatrix, OpRow, OrePoly, op_from_terms
from dmodkit import systemdoc

__all__ = [
    "MetricSpec",
    "euclid",
    "minkowski",
    "killing",
    "cauchy",
    "ricci_linearized",
    "einstein_linearized",
    "ricci_trace_row",
    "fixture",
    "fixture_matrix",
    "fixture_names",
]


@dataclass(frozen=True)
class MetricSpec:
    """Constant diagonal metric: signature entries +1 or -1."""

    n: int
    signature: tuple

    def __post_init__(self):
        if len(self.signature) != self.n or any(s not in (1, -1) for s in self.signature):
            raise ValueError("signature must be n entries of +1 or -1")


def euclid(n: int) -> MetricSpec:
    return MetricSpec(n, (1,) * n)


def minkowski(n: int) -> MetricSpec:
    return MetricSpec(n, (1,) + (-1,) * (n - 1))


def _xctx(n: int) -> Context:
    return Context(tuple(f"x{i + 1}" for i in range(n)))


def _pairs(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i, n)]


def _pair_label(i: int, j: int) -> str:
    return f"O{i + 1}{j + 1}"


def killing(omega: MetricSpec) -> OpMatrix:
    """Symmetrized derivative of a vector field against the metric:
    row (i, j) is w_jj d_i xi^j + w_ii d_j xi^i."""
    n = omega.n
    ctx = _xctx(n)
    unknowns = [f"xi{k + 1}" for k in range(n)]
    rows = []
    labels = []
    for i, j in _pairs(n):
        terms: dict = {}

        def add(var: int, col: int, coeff: int):
            mu = tuple(1 if t == var else 0 for t in range(n))
            key = (mu, col)
            c = RatFunc.const(ctx, coeff)
            terms[key] = terms[key] + c if key in terms else c

        add(i, j, omega.signature[j])
        add(j, i, omega.signature[i])
        rows.append(OpRow(ctx, n, {k: v for k, v in terms.items() if not v.is_zero()}))
        labels.append(_pair_label(i, j))
    return OpMatrix.from_op_rows(ctx, unknowns, rows, row_labels=labels)


def cauchy(omega: MetricSpec) -> OpMatrix:
    """Divergence-type operator on the stress unknowns: the formal adjoint of
    the symmetrized derivative (signs as the adjoint produces them)."""
    return killing(omega).adjoint()


def _curvature_rows(omega: MetricSpec) -> list[OpRow]:
    """Rows 2*R_ij of the second-order linearized curvature contraction over
    the merged symmetric unknowns O_kl (k <= j)."""
    n = omega.n
    ctx = _xctx(n)
    pairs = _pairs(n)
    col = {p: idx for idx, p in enumerate(pairs)}

    def sym(a: int, b: int) -> int:
        return col[(a, b) if a <= b else (b, a)]

    rows = []
    for i, j in pairs:
        terms: dict = {}

        def add(da: int, db: int, a: int, b: int, coeff: Fraction):
            mu = [0] * n
            mu[da] += 1
            mu[db] += 1
            key = (tuple(mu), sym(a, b))
            c = RatFunc.const(ctx, coeff)
            cur = terms.get(key)
            s = c if cur is None else cur + c
            if s.is_zero():
                terms.pop(key, None)
            else:
                terms[key] = s

        for r in range(n):
            w = Fraction(omega.signature[r])  # w^rr = w_rr for +-1 entries
            add(r, r, i, j, w)
            add(i, j, r, r, w)
            add(r, i, r, j, -w)
            add(r, j, r, i, -w)
        rows.append(OpRow(ctx, len(pairs), terms))
    return rows


def ricci_linearized(omega: MetricSpec) -> OpMatrix:
    """Second-order trace-contracted curvature rows (2*R_ij, one per pair)."""
    n = omega.n
    ctx = _xctx(n)
    pairs = _pairs(n)
    unknowns = [_pair_label(i, j) for i, j in pairs]
    return OpMatrix.from_op_rows(
        ctx,
        unknowns,
        _curvature_rows(omega),
        row_labels=[f"R{i + 1}{j + 1}" for i, j in pairs],
    )


def ricci_trace_row(omega: MetricSpec) -> OpRow:
    """The full trace w^ij R_ij as a single row over the merged unknowns."""
    n = omega.n
    rows = _curvature_rows(omega)
    pairs = _pairs(n)
    acc = OpRow.zero(rows[0].ctx, len(pairs))
    for idx, (i, j) in enumerate(pairs):
        if i == j:
            acc = acc + rows[idx].scale(RatFunc.const(rows[idx].ctx, Fraction(omega.signature[i], 2)))
    return acc


def einstein_linearized(omega: MetricSpec) -> OpMatrix:
    """Trace-corrected curvature rows in raised-index presentation:
    row (i, j) is m_ij * w^ii * w^jj * (R_ij - (1/2) w_ij tr R) with m the
    index-pair multiplicity (off-diagonal rows doubled).  With that weighting
    the matrix equals its own formal adjoint entry for entry."""
    n = omega.n
    ctx = _xctx(n)
    pairs = _pairs(n)
    unknowns = [_pair_label(i, j) for i, j in pairs]
    r_rows = _curvature_rows(omega)       # these are 2*R_ij
    trace = ricci_trace_row(omega)        # tr(R)
    rows = []
    for idx, (i, j) in enumerate(pairs):
        half = RatFunc.const(ctx, Fraction(1, 2))
        e_row = r_rows[idx].scale(half)   # R_ij
        if i == j:
            e_row = e_row - trace.scale(RatFunc.const(ctx, Fraction(omega.signature[i], 2)))
        weight = (1 if i == j else 2) * omega.signature[i] * omega.signature[j]
        rows.append(e_row.scale(RatFunc.const(ctx, weight)))
    return OpMatrix.from_op_rows(
        ctx, unknowns, rows, row_labels=[f"E{i + 1}{j + 1}" for i, j in pairs]
    )


# -- named fixtures ---------------------------------------------------------------


def _ex2_1() -> OpMatrix:
    ctx = Context(("t",), ("a",))
    op = lambda *terms: op_from_terms(ctx, terms)
    return OpMatrix(
        ctx,
        ["y1", "y2", "y3"],
        [
            [op(("1", (1,))), op(("-a", (0,))), op(("-1", (1,)))],
            [op(("1", (0,))), op(("-1", (1,))), op(("1", (1,)))],
        ],
        row_labels=["Phi1", "Phi2"],
    )


def _ex2_9() -> OpMatrix:
    ctx = _xctx(3)
    op = lambda *terms: op_from_terms(ctx, terms)
    return OpMatrix(
        ctx,
        ["y"],
        [[op(("1", (2, 0, 0)))], [op(("1", (1, 0, 1)), ("-1", (0, 1, 0)))]],
        row_labels=["eq1", "eq2"],
    )


def _macaulay() -> OpMatrix:
    ctx = _xctx(3)
    op = lambda *terms: op_from_terms(ctx, terms)
    return OpMatrix(
        ctx,
        ["y"],
        [
            [op(("1", (0, 0, 2)))],
            [op(("1", (0, 1, 1)), ("-1", (2, 0, 0)))],
            [op(("1", (0, 2, 0)))],
        ],
    )


def _bose() -> OpMatrix:
    ctx = _xctx(3)
    op = lambda *terms: op_from_terms(ctx, terms)
    z = OrePoly.zero(ctx)
    return OpMatrix(
        ctx,
        ["y1", "y2", "y3"],
        [
            [z, op(("-1", (0, 0, 1))), op(("1", (1, 1, 0)), ("-1", (0, 0, 0)))],
            [op(("-1", (0, 0, 1))), z, op(("1", (0, 2, 0)))],
        ],
        row_labels=["Phi1", "Phi2"],
    )


def _rlc() -> OpMatrix:
    ctx = Context(("t",), ("R1", "R2", "L", "C"))
    op = lambda *terms: op_from_terms(ctx, terms)
    z = OrePoly.zero(ctx)
    return OpMatrix(
        ctx,
        ["v1", "i2", "u", "y"],
        [
            [op(("R1*C", (1,)), ("1", (0,))), z, op(("-1", (0,))), z],
            [z, op(("L", (1,)), ("R2", (0,))), op(("-1", (0,))), z],
            [op(("C", (1,))), op(("1", (0,))), z, op(("-1", (0,)))],
        ],
        row_labels=["branch1", "branch2", "output"],
    )


def _ex7_4() -> OpMatrix:
    ctx = Context(("x1", "x2"), ("a",))
    op = lambda *terms: op_from_terms(ctx, terms)
    return OpMatrix(
        ctx,
        ["xi"],
        [[op(("1", (0, 2)))], [op(("1", (1, 1)), ("a", (1, 0)))]],
        row_labels=["eta2", "eta1"],
    )


def _ex7_5() -> OpMatrix:
    ctx = _xctx(2)
    op = lambda *terms: op_from_terms(ctx, terms)
    return OpMatrix(
        ctx,
        ["eta1", "eta2"],
        [[op(("1", (0, 1))), op(("-1", (1, 0)), ("x2", (0, 0)))]],
        row_labels=["zeta"],
    )


def _contact() -> OpMatrix:
    ctx = _xctx(3)
    op = lambda *terms: op_from_terms(ctx, terms)
    z = OrePoly.zero(ctx)
    return OpMatrix(
        ctx,
        ["xi1", "xi2", "xi3"],
        [
            [op(("-1", (1, 0, 0))), op(("2*x3", (1, 0, 0)), ("1", (0, 1, 0))), op(("1", (0, 0, 1)))],
            [op(("1", (0, 0, 1))), op(("-x3", (0, 0, 1))), z],
            [
                op(("1", (0, 1, 0)), ("x3", (1, 0, 0))),
                op(("-x3", (0, 1, 0)), ("-x3^2", (1, 0, 0))),
                op(("-1", (0, 0, 0))),
            ],
        ],
        row_labels=["eta3", "eta2", "eta1"],
    )


def _contact_flat() -> OpMatrix:
    ctx = _xctx(3)
    op = lambda *terms: op_from_terms(ctx, terms)
    z = OrePoly.zero(ctx)
    return OpMatrix(
        ctx,
        ["xi1", "xi2", "xi3"],
        [
            [op(("-1", (1, 0, 0))), op(("1", (0, 1, 0))), op(("1", (0, 0, 1)))],
            [op(("1", (0, 1, 0))), z, z],
            [op(("1", (0, 0, 1))), z, z],
        ],
        row_labels=["Om1", "Om2", "Om3"],
    )


def _double_pendulum() -> OpMatrix:
    ctx = Context(("t",), ("l1", "l2", "g"))
    op = lambda *terms: op_from_terms(ctx, terms)
    z = OrePoly.zero(ctx)
    return OpMatrix(
        ctx,
        ["x", "theta1", "theta2"],
        [
            [op(("1", (2,))), op(("l1", (2,)), ("g", (0,))), z],
            [op(("1", (2,))), z, op(("l2", (2,)), ("g", (0,)))],
        ],
        row_labels=["pend1", "pend2"],
    )


def _einstein4() -> OpMatrix:
    return einstein_linearized(minkowski(4))


def _maxwell_em() -> OpMatrix:
    # exterior derivative on 1-forms in dimension 4: A -> F
    ctx = _xctx(4)
    unknowns = [f"A{i + 1}" for i in range(4)]
    rows = []
    labels = []
    for i in range(4):
        for j in range(i + 1, 4):
            mu_i = tuple(1 if t == i else 0 for t in range(4))
            mu_j = tuple(1 if t == j else 0 for t in range(4))
            rows.append(
                OpRow(
                    ctx,
                    4,
                    {
                        (mu_i, j): RatFunc.const(ctx, 1),
                        (mu_j, i): RatFunc.const(ctx, -1),
                    },
                )
            )
            labels.append(f"F{i + 1}{j + 1}")
    return OpMatrix.from_op_rows(ctx, unknowns, rows, row_labels=labels)


def _cosserat2d_d1() -> OpMatrix:
    ctx = _xctx(2)
    op = lambda *terms: op_from_terms(ctx, terms)
    z = OrePoly.zero(ctx)
    return OpMatrix(
        ctx,
        ["s11", "s12", "s21", "s22", "m1", "m2"],
        [
            [op(("1", (1, 0))), op(("1", (0, 1))), z, z, z, z],
            [z, z, op(("1", (1, 0))), op(("1", (0, 1))), z, z],
            [z, op(("1", (0, 0))), op(("-1", (0, 0))), z, op(("1", (1, 0))), op(("1", (0, 1)))],
        ],
        row_labels=["f1", "f2", "m12"],
    )


def _cosserat2d_d2() -> OpMatrix:
    ctx = _xctx(2)
    op = lambda *terms: op_from_terms(ctx, terms)
    z = OrePoly.zero(ctx)
    return OpMatrix(
        ctx,
        ["phi1", "phi2", "phi3"],
        [
            [op(("1", (0, 1))), z, z],
            [op(("-1", (1, 0))), z, z],
            [z, op(("1", (0, 1))), z],
            [z, op(("-1", (1, 0))), z],
            [op(("1", (0, 0))), z, op(("1", (0, 1)))],
            [z, op(("1", (0, 0))), op(("-1", (1, 0)))],
        ],
        row_labels=["s11", "s12", "s21", "s22", "m1", "m2"],
    )


def _counterexample4_5() -> OpMatrix:
    ctx = _xctx(2)
    op = lambda *terms: op_from_terms(ctx, terms)
    return OpMatrix(
        ctx,
        ["u1", "u2"],
        [[op(("-1", (0, 1))), op(("1", (1, 0)))]],
        row_labels=["curl"],
    )


def _counterexample4_5_d() -> OpMatrix:
    ctx = _xctx(2)
    op = lambda *terms: op_from_terms(ctx, terms)
    return OpMatrix(
        ctx,
        ["y"],
        [[op(("1", (1, 1)))], [op(("1", (0, 2)))]],
        row_labels=["u1", "u2"],
    )


def _conformal_killing3() -> OpMatrix:
    # trace-free symmetrized derivative in dimension 3 (euclidean); the
    # (3,3) component equals minus the sum of the first two and is omitted
    ctx = _xctx(3)
    unknowns = ["xi1", "xi2", "xi3"]
    third = Fraction(2, 3)
    rows = []
    labels = []
    for i, j in [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2)]:
        terms: dict = {}

        def add(var, col, coeff):
            mu = tuple(1 if t == var else 0 for t in range(3))
            key = (mu, col)
            c = RatFunc.const(ctx, coeff)
            cur = terms.get(key)
            s = c if cur is None else cur + c
            if s.is_zero():
                terms.pop(key, None)
            else:
                terms[key] = s

        add(i, j, 1)
        add(j, i, 1)
        if i == j:
            for r in range(3):
                add(r, r, -third)
        rows.append(OpRow(ctx, 3, terms))
        labels.append(f"Oh{i + 1}{j + 1}")
    return OpMatrix.from_op_rows(ctx, unknowns, rows, row_labels=labels)


_FIXTURES: dict[str, tuple[Callable[[], OpMatrix], str]] = {
    "ex2_1": (_ex2_1, "first-order OD pair with parameter a; degenerates at a = 0 and a = 1"),
    "ex2_9": (_ex2_9, "two second-order scalar equations needing a coordinate change (n = 3)"),
    "macaulay": (_macaulay, "scalar system with 8 parametric jets (n = 3)"),
    "killing2": (lambda: killing(euclid(2)), "symmetrized derivative, euclidean plane"),
    "bose": (_bose, "two third-unknown PD equations hiding a torsion element (n = 3)"),
    "rlc": (_rlc, "RLC circuit equations with parameters R1, R2, L, C"),
    "ex7_4": (_ex7_4, "scalar pair with parameter a whose relations jump order at a = 0"),
    "ex7_5": (_ex7_5, "single first-order row with variable coefficient x2"),
    "contact": (_contact, "contact-structure system, 3 equations in 3 unknowns"),
    "contact_flat": (
        _contact_flat,
        "flat variant of the contact system; xi1 becomes a torsion element",
    ),
    "double_pendulum": (_double_pendulum, "double pendulum control system (l1, l2, g)"),
    "einstein4": (_einstein4, "trace-corrected curvature operator, minkowski signature n = 4"),
    "maxwell_em": (_maxwell_em, "exterior derivative on 1-forms, n = 4"),
    "cosserat2d_D1": (_cosserat2d_d1, "planar couple-stress equilibrium equations"),
    "cosserat2d_D2": (_cosserat2d_d2, "first-order 3-potential map for the planar couple-stress rows"),
    "counterexample4_5": (
        _counterexample4_5,
        "curl row whose adjoint relations outgrow the second-order pair",
    ),
    "counterexample4_5_D": (_counterexample4_5_d, "the second-order pair (d12 y, d22 y)"),
    "conformal_killing3": (
        _conformal_killing3,
        "trace-free symmetrized derivative, n = 3 (optional long-running fixture)",
    ),
}


def fixture_matrix(name: str) -> OpMatrix:
    try:
        builder, _ = _FIXTURES[name]
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; known: {sorted(_FIXTURES)}") from None
    return builder()


def fixture(name: str) -> dict:
    """The named fixture as a SystemDoc document."""
    return systemdoc.matrix_to_doc(fixture_matrix(name))


def fixture_names() -> list[tuple[str, str]]:
    return [(name, desc) for name, (_b, desc) in sorted(_FIXTURES.items())]
