import random

import pytest

from dmodkit.exact import Context, RatFunc
from dmodkit.janet import involutive_completion
from dmodkit.ore import OpMatrix, OpRow, OrePoly, op_from_terms
from dmodkit.syzygy import (
    OracleCapExceeded,
    compatibility_conditions,
    differential_rank,
    differential_sequence,
    is_zero_module,
    module_contains,
    modules_equal,
    syzygy_oracle,
)

C1 = Context(("t",))
C2 = Context(("x1", "x2"))
C3 = Context(("x1", "x2", "x3"))
CP = Context(("t",), ("l1", "l2", "g"))
CR = Context(("t",), ("R1", "R2", "L", "C"))


def op(ctx, *terms):
    return op_from_terms(ctx, terms)


def killing2():
    return OpMatrix(
        C2,
        ["O11", "O12", "O22"][:0] or ["xi1", "xi2"],
        [
            [op(C2, ("2", (1, 0))), OrePoly.zero(C2)],
            [op(C2, ("1", (0, 1))), op(C2, ("1", (1, 0)))],
            [OrePoly.zero(C2), op(C2, ("2", (0, 1)))],
        ],
        row_labels=["O11", "O12", "O22"],
    )


def pendulum_adjoint():
    # 3 x 2 system for the test functions of the two pendulum equations
    return OpMatrix(
        CP,
        ["lam1", "lam2"],
        [
            [op(CP, ("1", (2,))), op(CP, ("1", (2,)))],
            [op(CP, ("l1", (2,)), ("g", (0,))), OrePoly.zero(CP)],
            [OrePoly.zero(CP), op(CP, ("l2", (2,)), ("g", (0,)))],
        ],
    )


class TestCompatibilityConditions:
    def test_killing2_gives_second_order_scalar(self):
        cc = compatibility_conditions(killing2())
        assert cc.cc.p == 1
        row = cc.cc.row(0)
        # d22 O11 - 2 d12 O12 + d11 O22, up to the monic normalization
        expect = OpRow(
            C2,
            3,
            {
                ((0, 2), 0): RatFunc.const(C2, 1),
                ((1, 1), 1): RatFunc.const(C2, -2),
                ((2, 0), 2): RatFunc.const(C2, 1),
            },
        )
        assert row == expect
        assert cc.verify(killing2())

    def test_curl_of_gradient_pair(self):
        m = OpMatrix(C2, ["y"], [[op(C2, ("1", (1, 1)))], [op(C2, ("1", (0, 2)))]])
        cc = compatibility_conditions(m)
        assert cc.cc.p == 1
        assert cc.cc.row(0) == OpRow(
            C2, 2, {((0, 1), 0): RatFunc.const(C2, 1), ((1, 0), 1): RatFunc.const(C2, -1)}
        )

    def test_injective_symbol_no_relations(self):
        m = OpMatrix(C1, ["xi"], [[op(C1, ("1", (1,)))]])
        cc = compatibility_conditions(m)
        assert cc.cc.p == 0

    def test_dependent_rows_detected(self):
        m = OpMatrix(C1, ["y"], [[op(C1, ("1", (1,)))], [op(C1, ("1", (1,)))]])
        cc = compatibility_conditions(m)
        assert cc.cc.p == 1
        assert cc.cc.row(0) == OpRow(
            C1, 2, {((0,), 0): RatFunc.const(C1, 1), ((0,), 1): RatFunc.const(C1, -1)}
        )

    def test_prolonged_row_relation(self):
        m = OpMatrix(C1, ["y"], [[op(C1, ("1", (1,)))], [op(C1, ("1", (2,)))]])
        cc = compatibility_conditions(m)
        assert cc.cc.p == 1
        assert cc.verify(m)

    def test_exactness_on_random_systems(self):
        rng = random.Random(11)
        for _ in range(25):
            rows = []
            for _i in range(rng.randint(1, 3)):
                t = {}
                for _t in range(rng.randint(1, 3)):
                    mu = [0, 0]
                    for _d in range(rng.randint(0, 2)):
                        mu[rng.randrange(2)] += 1
                    c = rng.randint(-3, 3)
                    if c:
                        t[(tuple(mu), rng.randrange(2))] = RatFunc.const(C2, c)
                if t:
                    rows.append(OpRow(C2, 2, t))
            if not rows:
                continue
            m = OpMatrix.from_op_rows(C2, ["u1", "u2"], rows)
            cc = compatibility_conditions(m)
            assert cc.verify(m)


class TestModuleQueries:
    def test_generators_contained(self):
        m = killing2()
        b = involutive_completion(m)
        assert module_contains(b, m).ok

    def test_containment_fails_outside(self):
        m = OpMatrix(C2, ["y"], [[op(C2, ("1", (0, 2)))]])
        b = involutive_completion(m)
        probe = OpMatrix(C2, ["y"], [[op(C2, ("1", (1, 0)))]])
        rep = module_contains(b, probe)
        assert not rep.ok and len(rep.residues) == 1

    def test_modules_equal_reflexive(self):
        m = killing2()
        assert modules_equal(m, m)

    def test_modules_equal_scaled_generators(self):
        m1 = OpMatrix(C2, ["y"], [[op(C2, ("1", (1, 0)))]])
        m2 = OpMatrix(C2, ["y"], [[op(C2, ("7", (1, 0)))]])
        assert modules_equal(m1, m2)

    def test_identity_is_zero_module(self):
        m = OpMatrix(C2, ["u1", "u2"], [
            [OrePoly.one(C2), OrePoly.zero(C2)],
            [OrePoly.zero(C2), OrePoly.one(C2)],
        ])
        ok, assumptions = is_zero_module(m)
        assert ok and assumptions == []

    def test_pendulum_adjoint_zero_module_generic(self):
        ok, assumptions = is_zero_module(pendulum_adjoint())
        assert ok
        assert any(str(a) == "l1 - l2" for a in assumptions)

    def test_pendulum_adjoint_equal_lengths_not_zero(self):
        m = pendulum_adjoint().specialize_params({"l1": "l2"})
        ok, _ = is_zero_module(m)
        assert not ok

    def test_rlc_two_equation_adjoint(self):
        d1 = OpMatrix(
            CR,
            ["x1", "x2", "u"],
            [
                [op(CR, ("R1*C", (1,)), ("1", (0,))), OrePoly.zero(CR), op(CR, ("-1", (0,)))],
                [OrePoly.zero(CR), op(CR, ("L", (1,)), ("R2", (0,))), op(CR, ("-1", (0,)))],
            ],
        )
        ok, assumptions = is_zero_module(d1.adjoint())
        assert ok
        assert any(str(a) == "R1*R2*C - L" for a in assumptions)
        spec = d1.specialize_params({"R2": 1, "L": 1, "C": 1}).specialize_params({"R1": 1})
        ok2, _ = is_zero_module(spec.adjoint())
        assert not ok2


class TestRankAndSequences:
    def test_zero_system_rank(self):
        m = OpMatrix(C2, ["u1", "u2"], [[OrePoly.zero(C2), OrePoly.zero(C2)]])
        assert differential_rank(m) == 2

    def test_cauchy2_rank_one(self):
        cauchy = killing2().adjoint()
        assert differential_rank(cauchy) == 1

    def test_gradient_sequence(self):
        grad = OpMatrix(C2, ["y"], [[op(C2, ("1", (1, 0)))], [op(C2, ("1", (0, 1)))]])
        seq = differential_sequence(grad)
        assert len(seq) == 2
        assert seq[1].p == 1
        assert compatibility_conditions(seq[1]).cc.p == 0

    def test_killing2_sequence(self):
        seq = differential_sequence(killing2())
        assert [mat.p for mat in seq] == [3, 1]

    def test_rank_additive_on_direct_sums(self):
        def block_sum(a, b):
            ctx = a.ctx
            rows = []
            for i in range(a.p):
                rows.append(OpRow(ctx, a.m + b.m, dict(a.row(i).terms)))
            for i in range(b.p):
                rows.append(
                    OpRow(ctx, a.m + b.m, {(mu, k + a.m): c for (mu, k), c in b.row(i).terms.items()})
                )
            names = [f"u{j + 1}" for j in range(a.m + b.m)]
            return OpMatrix.from_op_rows(ctx, names, rows)

        grad = OpMatrix(C2, ["y"], [[op(C2, ("1", (1, 0)))], [op(C2, ("1", (0, 1)))]])
        single = OpMatrix(C2, ["z"], [[op(C2, ("1", (0, 1)))]])
        cauchy2 = killing2().adjoint()
        for a, b in [(grad, single), (single, cauchy2), (grad, cauchy2)]:
            assert differential_rank(block_sum(a, b)) == differential_rank(a) + differential_rank(b)


class TestSyzygyOracle:
    def test_curl_syzygy_dimension(self):
        m = OpMatrix(C2, ["y"], [[op(C2, ("1", (1, 1)))], [op(C2, ("1", (0, 2)))]])
        syz = syzygy_oracle(m, 1)
        assert len(syz) == 1
        s = syz[0]
        acc = OpRow.zero(C2, 1)
        for (mu, i), c in s.terms.items():
            acc = acc + m.row(i).mul_monomial(mu, c)
        assert acc.is_zero()

    def test_injective_symbol_empty(self):
        m = OpMatrix(C1, ["y"], [[op(C1, ("1", (1,)))]])
        assert syzygy_oracle(m, 3) == []

    def test_cap(self):
        m = OpMatrix(C3, ["y"], [[op(C3, ("1", (1, 0, 0)))]])
        with pytest.raises(OracleCapExceeded):
            syzygy_oracle(m, 10, cap=5)

    def test_oracle_agrees_with_engine_on_random_systems(self):
        rng = random.Random(13)
        checked = 0
        for _ in range(60):
            rows = []
            for _i in range(rng.randint(1, 3)):
                t = {}
                for _t in range(rng.randint(1, 3)):
                    mu = [0, 0]
                    for _d in range(rng.randint(0, 2)):
                        mu[rng.randrange(2)] += 1
                    c = rng.randint(-2, 2)
                    if c:
                        t[(tuple(mu), rng.randrange(2))] = RatFunc.const(C2, c)
                if t:
                    rows.append(OpRow(C2, 2, t))
            if not rows:
                continue
            m = OpMatrix.from_op_rows(C2, ["u1", "u2"], rows)
            cc = compatibility_conditions(m)
            ccb = involutive_completion(cc.cc) if cc.cc.p else None
            for s in syzygy_oracle(m, 3):
                if ccb is None:
                    assert s.is_zero()
                else:
                    assert module_contains(ccb, [s]).ok
            checked += 1
        assert checked >= 50
