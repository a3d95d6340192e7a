import pytest

from dmodkit.corpus import cauchy, euclid, fixture_matrix
from dmodkit.exact import Context, RatFunc
from dmodkit.duality import (
    HAS_TORSION,
    TORSION_FREE,
    AnnihilatorBoundExceeded,
    annihilator,
    adjoint_injective,
    localize_parametrize,
    minimal_parametrize,
    normalize_operator,
    parametrize,
    torsion_test,
)
from dmodkit.janet import involutive_completion
from dmodkit.ore import OpMatrix, OpRow, OrePoly, op_from_terms
from dmodkit.syzygy import compatibility_conditions, is_zero_module, module_contains, modules_equal


def proportional_columns(m1: OpMatrix, m2: OpMatrix) -> bool:
    """Whether two single-column operators agree up to one scalar unit of K."""
    assert m1.m == m2.m == 1 and m1.p == m2.p
    factor = None
    for i in range(m1.p):
        a, b = m1.entry(i, 0), m2.entry(i, 0)
        if a.is_zero() != b.is_zero():
            return False
        if a.is_zero():
            continue
        mu, ca = a.leading()
        cb = b.terms.get(mu)
        if cb is None:
            return False
        f = ca / cb
        if factor is None:
            factor = f
        elif factor != f:
            return False
        if a != OpMatrix(b.ctx, ["z"], [[b]]).entry(0, 0).scale(factor):
            return False
    return True


class TestFirstOrderFamily:
    def test_generic_parameter_torsion_free(self):
        d1 = fixture_matrix("ex2_1")
        rep = torsion_test(d1)
        assert rep.verdict == TORSION_FREE
        assert rep.verify()
        names = {str(a) for a in rep.assumptions}
        assert "a" in names and "a - 1" in names
        # the recovered second-order column, up to one unit of K
        ctx = d1.ctx
        op = lambda *terms: op_from_terms(ctx, terms)
        displayed = OpMatrix(
            ctx,
            ["z"],
            [
                [op(("1", (2,)), ("a", (1,)))],
                [op(("1", (2,)), ("1", (1,)))],
                [op(("1", (2,)), ("-a", (0,)))],
            ],
            row_labels=["y1", "y2", "y3"],
        )
        assert proportional_columns(parametrize(rep), displayed)
        assert modules_equal(compatibility_conditions(parametrize(rep)).cc, d1)

    def test_a0_torsion(self):
        d1 = fixture_matrix("ex2_1").specialize_params({"a": 0})
        rep = torsion_test(d1)
        assert rep.verdict == HAS_TORSION
        assert rep.verify()
        ctx = d1.ctx
        assert len(rep.witnesses) == 1
        w = rep.witnesses[0]
        assert w.row == OpRow(
            ctx, 3, {((0,), 0): RatFunc.const(ctx, 1), ((0,), 2): RatFunc.const(ctx, -1)}
        )
        assert w.annihilator == OrePoly.d(ctx, 1)

    def test_a1_torsion(self):
        d1 = fixture_matrix("ex2_1").specialize_params({"a": 1})
        rep = torsion_test(d1)
        assert rep.verdict == HAS_TORSION
        ctx = d1.ctx
        rows = [w.row for w in rep.witnesses]
        target = OpRow(
            ctx, 3, {((0,), 0): RatFunc.const(ctx, 1), ((0,), 1): RatFunc.const(ctx, -1)}
        )
        assert target in rows
        w = rep.witnesses[rows.index(target)]
        # (d + 1)(y1 - y2) = Phi1 + Phi2 exactly at a = 1
        assert w.annihilator == op_from_terms(ctx, [("1", (1,)), ("1", (0,))])

    def test_localization_agrees(self):
        d1 = fixture_matrix("ex2_1")
        loc = localize_parametrize(d1)
        assert loc.m == 1
        rep = torsion_test(d1)
        assert proportional_columns(loc, parametrize(rep))
        assert modules_equal(compatibility_conditions(loc).cc, d1)


class TestLocalization:
    def test_cauchy2_airy_column(self):
        c = cauchy(euclid(2))
        loc = localize_parametrize(c)
        ctx = c.ctx
        op = lambda *terms: op_from_terms(ctx, terms)
        assert loc.m == 1 and loc.p == 3
        assert loc.entry(0, 0) == op(("1", (0, 2)))
        assert loc.entry(1, 0) == op(("-2", (1, 1)))
        assert loc.entry(2, 0) == op(("1", (2, 0)))

    def test_full_rank_square_empty_kernel(self):
        ctx = Context(("x1", "x2"))
        op = lambda *terms: op_from_terms(ctx, terms)
        m = OpMatrix(ctx, ["u1", "u2"], [
            [op(("1", (1, 0))), OrePoly.zero(ctx)],
            [OrePoly.zero(ctx), op(("1", (0, 1)))],
        ])
        assert localize_parametrize(m).m == 0

    def test_variable_coefficients_rejected(self):
        with pytest.raises(ValueError):
            localize_parametrize(fixture_matrix("ex7_5"))


class TestCounterexample:
    def test_adjoint_relations_outgrow_pair(self):
        d1 = fixture_matrix("counterexample4_5")
        d = fixture_matrix("counterexample4_5_D")
        # relations of the adjoint column: the divergence
        cc = compatibility_conditions(d1.adjoint()).cc
        ctx = d1.ctx
        assert cc.p == 1
        assert cc.row(0) == OpRow(
            ctx, 2, {((1, 0), 0): RatFunc.const(ctx, 1), ((0, 1), 1): RatFunc.const(ctx, 1)}
        )
        # ... and it is not a consequence of ad(D)
        add = d.adjoint()
        b = involutive_completion(add)
        assert not module_contains(b, cc).ok

    def test_pair_has_curl_relation(self):
        d = fixture_matrix("counterexample4_5_D")
        cc = compatibility_conditions(d).cc
        assert cc.p == 1
        assert modules_equal(cc, fixture_matrix("counterexample4_5"))


class TestVariableCoefficientRow:
    def test_torsion_free_and_parametrizations(self):
        d1 = fixture_matrix("ex7_5")
        rep = torsion_test(d1)
        assert rep.verdict == TORSION_FREE
        assert rep.verify()
        d = parametrize(rep)
        assert d.m == 2
        assert modules_equal(compatibility_conditions(d).cc, d1)
        # each single potential gives a minimal parametrization
        for col in (0, 1):
            ds = minimal_parametrize(rep, columns=[d.unknowns[col]])
            assert ds.m == 1
            assert modules_equal(compatibility_conditions(ds).cc, d1)

    def test_displayed_minimal_forms(self):
        ctx = fixture_matrix("ex7_5").ctx
        op = lambda *terms: op_from_terms(ctx, terms)
        d1 = fixture_matrix("ex7_5")
        first = OpMatrix(
            ctx,
            ["xi"],
            [
                [op(("1", (1, 1)), ("-x2", (0, 1)), ("1", (0, 0)))],
                [op(("1", (0, 2)))],
            ],
            row_labels=["eta1", "eta2"],
        )
        second = OpMatrix(
            ctx,
            ["xip"],
            [
                [op(("1", (2, 0)), ("-2*x2", (1, 0)), ("x2^2", (0, 0)))],
                [op(("1", (1, 1)), ("-x2", (0, 1)), ("-2", (0, 0)))],
            ],
            row_labels=["eta1", "eta2"],
        )
        for mat in (first, second):
            assert modules_equal(compatibility_conditions(mat).cc, d1)

    def test_substituted_third_variant(self):
        d1 = fixture_matrix("ex7_5")
        rep = torsion_test(d1)
        d = parametrize(rep)
        ctx = d1.ctx
        op = lambda *terms: op_from_terms(ctx, terms)
        sub = OpMatrix(ctx, ["phi"], [[op(("1", (1, 0)))], [op(("-1", (0, 1)))]],
                       row_labels=list(d.unknowns))
        third = d.compose(sub)
        assert modules_equal(compatibility_conditions(third).cc, d1)

    def test_reflexive_pattern(self):
        d1 = fixture_matrix("ex7_5")
        rep = torsion_test(d1)
        d = parametrize(rep)
        rep2 = torsion_test(d)
        assert rep2.verdict == TORSION_FREE
        p = parametrize(rep2)
        assert p.m == 1 and p.max_order() == 1
        assert modules_equal(compatibility_conditions(p).cc, d)
        # injectivity of the left-most operator
        ok, _ = is_zero_module(OpMatrix.from_op_rows(d1.ctx, ["theta"], p.rows()))
        assert ok


class TestPendulum:
    def test_adjoint_injective_generic(self):
        d1 = fixture_matrix("double_pendulum")
        ok, pivots = adjoint_injective(d1)
        assert ok
        assert any(str(a) == "l1 - l2" for a in pivots)

    def test_parametrization_order_four(self):
        d1 = fixture_matrix("double_pendulum")
        rep = torsion_test(d1)
        assert rep.verdict == TORSION_FREE
        ctx = d1.ctx
        op = lambda *terms: op_from_terms(ctx, terms)
        displayed = OpMatrix(
            ctx,
            ["phi"],
            [
                [op(("-l1*l2", (4,)), ("-g*l1 - g*l2", (2,)), ("-g^2", (0,)))],
                [op(("l2", (4,)), ("g", (2,)))],
                [op(("l1", (4,)), ("g", (2,)))],
            ],
            row_labels=["x", "theta1", "theta2"],
        )
        assert proportional_columns(parametrize(rep), displayed)

    def test_equal_lengths_torsion(self):
        d1 = fixture_matrix("double_pendulum").specialize_params({"l1": "l2"})
        rep = torsion_test(d1)
        assert rep.verdict == HAS_TORSION
        ctx = d1.ctx
        rows = [w.row for w in rep.witnesses]
        target = OpRow(
            ctx, 3, {((0,), 1): RatFunc.const(ctx, 1), ((0,), 2): RatFunc.const(ctx, -1)}
        )
        assert target in rows
        w = rep.witnesses[rows.index(target)]
        assert w.annihilator == op_from_terms(ctx, [("l2", (2,)), ("g", (0,))])


class TestRLC:
    def test_generic_torsion_free_with_pivot(self):
        d1 = fixture_matrix("rlc")
        rep = torsion_test(d1)
        assert rep.verdict == TORSION_FREE
        assert any(str(a) == "R1*R2*C - L" for a in rep.pivots)

    def test_specialized_torsion(self):
        d1 = fixture_matrix("rlc").specialize_params({"R1": 1, "R2": 1, "L": 1, "C": 1})
        rep = torsion_test(d1)
        assert rep.verdict == HAS_TORSION
        ctx = d1.ctx
        # z = y - u (up to sign) with annihilator d + 1
        target = OpRow(
            ctx, 4, {((0,), 2): RatFunc.const(ctx, 1), ((0,), 3): RatFunc.const(ctx, -1)}
        )
        rows = [w.row for w in rep.witnesses]
        assert target in rows
        w = rep.witnesses[rows.index(target)]
        assert w.annihilator == op_from_terms(ctx, [("1", (1,)), ("1", (0,))])


class TestBose:
    def test_torsion_witness_and_closure(self):
        d1 = fixture_matrix("bose")
        rep = torsion_test(d1)
        assert rep.verdict == HAS_TORSION
        ctx = d1.ctx
        target = OpRow(
            ctx,
            3,
            {
                ((0, 2, 0), 1): RatFunc.const(ctx, 1),
                ((1, 1, 0), 0): RatFunc.const(ctx, -1),
                ((0, 0, 0), 0): RatFunc.const(ctx, 1),
            },
        )
        rows = [w.row for w in rep.witnesses]
        assert target in rows
        w = rep.witnesses[rows.index(target)]
        assert w.annihilator == OrePoly.d(ctx, 3)
        # the two displayed relations generate the full closure
        op = lambda *terms: op_from_terms(ctx, terms)
        z = OrePoly.zero(ctx)
        displayed = OpMatrix(
            ctx,
            ["y1", "y2", "y3"],
            [
                [op(("-1", (1, 1, 0)), ("1", (0, 0, 0))), op(("1", (0, 2, 0))), z],
                [op(("-1", (2, 0, 1))), op(("1", (1, 1, 1)), ("1", (0, 0, 1))), op(("1", (0, 0, 0)))],
            ],
        )
        assert modules_equal(rep.step5, displayed)

    def test_annihilator_bound_never_claims_freeness(self):
        d1 = fixture_matrix("bose")
        rep = torsion_test(d1)
        b = rep.closure1
        w = rep.witnesses[0]
        with pytest.raises(AnnihilatorBoundExceeded):
            annihilator(w.row, b, 0)

    def test_displayed_combination_is_member(self):
        # d2 applied to the second relation minus d1 d3 applied to the torsion
        # row lands back on the crossed-derivative consequence of the input
        d1 = fixture_matrix("bose")
        rep = torsion_test(d1)
        ctx = d1.ctx
        one = RatFunc.const(ctx, 1)
        z_row = OpRow(
            ctx,
            3,
            {
                ((0, 2, 0), 1): one,
                ((1, 1, 0), 0): RatFunc.const(ctx, -1),
                ((0, 0, 0), 0): one,
            },
        )
        second = OpRow(
            ctx,
            3,
            {
                ((1, 1, 1), 1): one,
                ((2, 0, 1), 0): RatFunc.const(ctx, -1),
                ((0, 0, 1), 1): one,
                ((0, 0, 0), 2): one,
            },
        )
        combo = second.mul_monomial((0, 1, 0), one) - z_row.mul_monomial((1, 0, 1), one)
        assert module_contains(rep.closure1, [combo]).ok


class TestReportPlumbing:
    def test_json_round_trip_shape(self):
        rep = torsion_test(fixture_matrix("ex2_1"))
        doc = rep.to_json_dict()
        assert doc["verdict"] == "torsion_free"
        assert set(doc["steps"]) == {"step1", "step2", "step3", "step4", "step5"}
        assert "a - 1" in doc["assumptions"]

    def test_text_render(self):
        rep = torsion_test(fixture_matrix("ex2_1").specialize_params({"a": 0}))
        text = rep.render_text()
        assert "torsion" in text
        assert "annihilator" in text

    def test_normalize_operator(self):
        ctx = Context(("t",), ("l",))
        p = op_from_terms(ctx, [("1", (2,)), ("1/l", (0,))])
        assert normalize_operator(p) == op_from_terms(ctx, [("l", (2,)), ("1", (0,))])

    def test_identity_system_trivial_module(self):
        ctx = Context(("t",))
        m = OpMatrix(ctx, ["y"], [[OrePoly.one(ctx)]])
        rep = torsion_test(m)
        assert rep.verdict == TORSION_FREE

    def test_gradient_module_is_all_torsion(self):
        # rows d1 y, d2 y: the class of y is autonomous, no parametrization
        ctx = Context(("x1", "x2"))
        m = OpMatrix(ctx, ["y"], [[OrePoly.d(ctx, 1)], [OrePoly.d(ctx, 2)]])
        rep = torsion_test(m)
        assert rep.verdict == HAS_TORSION
        assert rep.verify()
        assert len(rep.witnesses) == 1
        w = rep.witnesses[0]
        assert w.row == OpRow(ctx, 1, {((0, 0), 0): RatFunc.const(ctx, 1)})
        assert w.annihilator == OrePoly.d(ctx, 1)

    def test_budget_gives_unknown_verdict(self):
        d1 = fixture_matrix("bose")
        rep = torsion_test(d1, budget=2)
        assert rep.verdict == "unknown"
        assert rep.notes
        with pytest.raises(ValueError):
            parametrize(rep)
