import pytest

from dmodkit.exact import Context, RatFunc
from dmodkit.janet import (
    CompletionBudgetExceeded,
    delta_regularize,
    first_order_form,
    first_order_form_with_map,
    involutive_completion,
    janet_multiplicative,
    monomials_upto,
    normal_form,
    parametric_jets,
    pp_chain,
    prolongation_dims,
    rank_over_k,
    tabular,
)
from dmodkit.ore import OpMatrix, OpRow, OrePoly, mi_len, op_from_terms

C3 = Context(("x1", "x2", "x3"))
C2 = Context(("x1", "x2"))
C2A = Context(("x1", "x2"), ("a",))
C1 = Context(("t",))
CP = Context(("t",), ("l1", "l2", "g"))


def op(ctx, *terms):
    return op_from_terms(ctx, terms)


def system_2_9_permuted():
    # single unknown, n = 3: leaders y33 and y13 - y2 in solvable frame
    return OpMatrix(
        C3,
        ["y"],
        [
            [op(C3, ("1", (0, 0, 2)))],
            [op(C3, ("1", (1, 0, 1)), ("-1", (0, 1, 0)))],
        ],
    )


def system_2_9_original():
    return OpMatrix(
        C3,
        ["y"],
        [
            [op(C3, ("1", (2, 0, 0)))],
            [op(C3, ("1", (1, 0, 1)), ("-1", (0, 1, 0)))],
        ],
    )


def macaulay_system():
    return OpMatrix(
        C3,
        ["y"],
        [
            [op(C3, ("1", (0, 0, 2)))],
            [op(C3, ("1", (0, 1, 1)), ("-1", (2, 0, 0)))],
            [op(C3, ("1", (0, 2, 0)))],
        ],
    )


def killing2():
    return OpMatrix(
        C2,
        ["xi1", "xi2"],
        [
            [op(C2, ("2", (1, 0))), OrePoly.zero(C2)],
            [op(C2, ("1", (0, 1))), op(C2, ("1", (1, 0)))],
            [OrePoly.zero(C2), op(C2, ("2", (0, 1)))],
        ],
        row_labels=["O11", "O12", "O22"],
    )


def pendulum():
    return OpMatrix(
        CP,
        ["x", "theta1", "theta2"],
        [
            [op(CP, ("1", (2,))), op(CP, ("l1", (2,)), ("g", (0,))), OrePoly.zero(CP)],
            [op(CP, ("1", (2,))), OrePoly.zero(CP), op(CP, ("l2", (2,)), ("g", (0,)))],
        ],
    )


def system_7_4(a_val=None):
    m = OpMatrix(
        C2A,
        ["xi"],
        [
            [op(C2A, ("1", (0, 2)))],
            [op(C2A, ("1", (1, 1)), ("a", (1, 0)))],
        ],
    )
    if a_val is not None:
        m = m.specialize_params({"a": a_val})
    return m


class TestJanetDivision:
    def test_mixed_order_cones(self):
        mus = [(0, 2), (1, 1), (2, 0), (1, 0)]
        mult = janet_multiplicative(mus, 2)
        assert mult == [frozenset({1, 2}), frozenset({1}), frozenset({1}), frozenset()]

    def test_class_cones_on_involutive_set(self):
        mus = [(0, 0, 2), (0, 1, 1), (0, 2, 0), (1, 0, 1)]
        mult = janet_multiplicative(mus, 3)
        assert mult == [
            frozenset({1, 2, 3}),
            frozenset({1, 2}),
            frozenset({1, 2}),
            frozenset({1}),
        ]


class TestCompletion:
    def test_2_9_leaders(self):
        b = involutive_completion(system_2_9_permuted())
        leaders = sorted(b.leaders())
        assert leaders == [((0, 0, 2), 0), ((0, 1, 1), 0), ((0, 2, 0), 0), ((1, 0, 1), 0)]
        assert b.is_class_ordered()

    def test_idempotence(self):
        b = involutive_completion(system_2_9_permuted())
        m2 = OpMatrix.from_op_rows(C3, ["y"], [g.row for g in b.gens])
        b2 = involutive_completion(m2)
        assert sorted(b2.leaders()) == sorted(b.leaders())

    def test_7_4_acquires_first_order_rows(self):
        b = involutive_completion(system_7_4())
        leaders = sorted(mu for mu, _ in b.leaders())
        # the order-1 equation d1 xi appears; d11 xi is then in its cone
        assert (1, 0) in leaders
        assert b.reducible((2, 0), 0) and b.reducible((1, 0), 0)
        # the pivot a^2 (hence a) was inverted on the way
        assert any(str(f) == "a" for f in b.assumptions)

    def test_module_preservation_certificates(self):
        m = system_2_9_permuted()
        b = involutive_completion(m)
        u = b.u_matrix()
        # basis = U * input, exactly
        for i, g in enumerate(b.gens):
            acc = OpRow.zero(C3, 1)
            for j in range(m.p):
                opj = u.entry(i, j)
                if not opj.is_zero():
                    acc = acc + m.row(j).mul_op(opj)
            assert acc == g.row
        # input rows reduce to zero with recorded cofactors
        for i in range(m.p):
            nf, cof = normal_form(m.row(i), b)
            assert nf.is_zero()
            acc = OpRow.zero(C3, 1)
            for c, g in zip(cof, b.gens):
                if not c.is_zero():
                    acc = acc + g.row.mul_op(c)
            assert acc == m.row(i)

    def test_involution_certificate(self):
        b = involutive_completion(system_2_9_permuted())
        one = RatFunc.const(C3, 1)
        for g in b.gens:
            for i in range(1, 4):
                if i in g.mult:
                    continue
                sigma = tuple(1 if j == i - 1 else 0 for j in range(3))
                nf, _ = normal_form(g.row.mul_monomial(sigma, one), b)
                assert nf.is_zero()

    def test_determinism(self):
        b1 = involutive_completion(killing2())
        b2 = involutive_completion(killing2())
        assert [g.row for g in b1.gens] == [g.row for g in b2.gens]

    def test_budget_error(self):
        with pytest.raises(CompletionBudgetExceeded):
            involutive_completion(system_2_9_original(), budget=2)


class TestNormalForm:
    def test_generator_reduces_to_zero(self):
        b = involutive_completion(system_2_9_permuted())
        for g in b.gens:
            nf, _ = normal_form(g.row, b)
            assert nf.is_zero()

    def test_nonmultiplicative_prolongation_golden(self):
        b = involutive_completion(system_2_9_permuted())
        row = OpRow(C3, 1, {((1, 1, 1), 0): RatFunc.const(C3, 1), ((0, 2, 0), 0): RatFunc.const(C3, -1)})
        # d2 * (y13 - y2) = y123 - y22, a member with explicit cofactors
        nf, cof = normal_form(row, b)
        assert nf.is_zero()
        acc = OpRow.zero(C3, 1)
        for c, g in zip(cof, b.gens):
            acc = acc + g.row.mul_op(c)
        assert acc == row

    def test_row_outside_module(self):
        b = involutive_completion(system_2_9_permuted())
        y1 = OpRow(C3, 1, {((1, 0, 0), 0): RatFunc.const(C3, 1)})
        nf, cof = normal_form(y1, b)
        assert nf == y1
        assert all(c.is_zero() for c in cof)


class TestTabular:
    def test_2_9_classes(self):
        b = involutive_completion(system_2_9_permuted())
        t = tabular(b)
        assert t.q == 2
        assert t.beta == {1: 1, 2: 2, 3: 1}
        assert t.class_ordered

    def test_macaulay_parametric_count(self):
        b = involutive_completion(macaulay_system())
        count, jets = parametric_jets(b, 8)
        assert count == 8
        names = {mu for mu, _ in jets}
        assert (1, 1, 1) not in names
        assert (3, 0, 0) in names  # y111 survives

    def test_zero_system_characters_maximal(self):
        m = OpMatrix(C2, ["u"], [[OrePoly.zero(C2)]])
        b = involutive_completion(m)
        t = tabular(b)
        assert all(v == 0 for v in t.beta.values())
        assert t.dim_symbol == sum(t.alpha.values())

    def test_character_identities(self):
        # dim g_q and dim g_{q+1} from characters match independent counting
        for m in (system_2_9_permuted(), macaulay_system(), killing2()):
            b = involutive_completion(m)
            t = tabular(b)
            q = t.q
            cnt_q = sum(1 for mu, _ in parametric_jets(b, q)[1] if mi_len(mu) == q)
            cnt_q1 = sum(1 for mu, _ in parametric_jets(b, q + 1)[1] if mi_len(mu) == q + 1)
            assert cnt_q == sum(t.alpha.values())
            assert cnt_q1 == sum(i * a for i, a in t.alpha.items())
            if t.class_ordered:
                seq = [t.alpha[i] for i in range(1, b.ctx.n + 1)]
                assert all(a >= b_ for a, b_ in zip(seq, seq[1:]))
                assert seq[-1] >= 0

    def test_killing2_involutive_at_order_two(self):
        b = involutive_completion(killing2())
        assert b.order == 2
        t = tabular(b)
        assert t.dim_symbol == 0  # second-order symbol vanishes


class TestDeltaRegularize:
    def test_involutive_input_identity_frame(self):
        b, frame = delta_regularize(system_2_9_permuted())
        assert frame == [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
        assert b.coord_change is None

    def test_original_frame_needs_change(self):
        b0 = involutive_completion(system_2_9_original())
        assert not b0.is_class_ordered()
        b, frame = delta_regularize(system_2_9_original())
        assert frame != [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
        assert b.is_class_ordered()

    def test_permutation_frame_succeeds_manually(self):
        perm = [[0, 0, 1], [0, 1, 0], [1, 0, 0]]
        moved = system_2_9_original().change_coordinates(perm)
        b = involutive_completion(moved)
        assert b.is_class_ordered()


class TestFirstOrderForm:
    def test_second_order_ode(self):
        m = OpMatrix(C1, ["y"], [[op(C1, ("1", (2,)))]])
        fo, subst = first_order_form_with_map(m, None)
        assert fo.m == 2  # states y, y_1
        assert fo.max_order() == 1
        assert all(fo.row(i).order() >= 1 for i in range(fo.p))
        # solutions of y'' = 0 correspond to (c0 + c1 t, c1)
        sec = [RatFunc.var(C1, "t"), RatFunc.const(C1, 1)]
        assert all(v.is_zero() for v in fo.apply(sec))

    def test_already_first_order(self):
        m = OpMatrix(C2, ["u"], [[op(C2, ("1", (1, 0)), ("x2", (0, 0)))]])
        fo = first_order_form(m)
        assert fo is m

    def test_pendulum_states(self):
        fo = first_order_form(pendulum())
        assert fo.m == 6
        assert fo.max_order() == 1
        assert all(fo.row(i).order() >= 1 for i in range(fo.p))
        # rank agreement with the order-2 form: one free function either way
        b = involutive_completion(pendulum())
        t = tabular(b)
        bfo = involutive_completion(fo)
        tfo = tabular(bfo)
        assert t.alpha[1] == tfo.alpha[1] == 1

    def test_substitution_certificate(self):
        m = pendulum()
        fo, subst = first_order_form_with_map(m)
        b = involutive_completion(m)
        # every first-order equation, substituted back, lies in the input module
        for i in range(fo.p):
            row = fo.row(i)
            acc = OpRow.zero(CP, m.m)
            for (mu, k), c in row.terms.items():
                acc = acc + subst.row(k).mul_monomial(mu, c)
            nf, _ = normal_form(acc, b)
            assert nf.is_zero()


class TestDimensionTools:
    def test_prolonged_dims_7_4(self):
        m = system_7_4()
        assert prolongation_dims(m, 3) == [4, 4, 4, 4]

    def test_pp_chain_7_4(self):
        assert pp_chain(system_7_4()) == [6, 4, 3, 2]

    def test_pp_chain_a0(self):
        assert pp_chain(system_7_4(0)) == [6, 4]

    def test_rank_over_k(self):
        rows = [
            OpRow(C2, 1, {((1, 0), 0): RatFunc.const(C2, 1)}),
            OpRow(C2, 1, {((1, 0), 0): RatFunc.const(C2, 2)}),
            OpRow(C2, 1, {((0, 1), 0): RatFunc.const(C2, 1)}),
        ]
        assert rank_over_k(rows) == 2

    def test_monomials_upto(self):
        assert len(monomials_upto(2, 2)) == 6
        assert len(monomials_upto(2, 3)) == 10
