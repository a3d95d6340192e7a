"""Exact coefficient arithmetic: multivariate polynomials and rational functions over Q.

The coefficient field used everywhere else in the package is
K = Q(params)(x1, ..., xn): rational functions in the independent variables
and in symbolic constant parameters, with exact rational coefficients.

Canonical forms are strict so that equality of values is equality of
representations:

* an ``MPoly`` stores no zero coefficients;
* a ``RatFunc`` is reduced (gcd(num, den) = 1) and its denominator is monic
  under the graded-lex term order on the combined variable list.

Only the x-variables are differentiable; parameters behave as constants.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd as _int_gcd
from typing import Iterable, Iterator, Mapping

__all__ = [
    "Context",
    "MPoly",
    "RatFunc",
    "normalize",
    "derive",
    "specialize",
    "parse_coeff",
    "ZeroDenominator",
    "SpecializeError",
    "CoeffParseError",
]


class ZeroDenominator(ZeroDivisionError):
    """Raised when a rational function would be built over a zero denominator."""


class SpecializeError(ValueError):
    """Raised when a parameter substitution makes a stored denominator vanish."""


class CoeffParseError(ValueError):
    """Raised on malformed coefficient strings."""


@dataclass(frozen=True)
class Context:
    """Variable context: differentiable x-variables followed by constant parameters."""

    x_vars: tuple[str, ...]
    params: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        names = self.x_vars + self.params
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate variable names in context: {names}")

    @property
    def nvars(self) -> int:
        return len(self.x_vars) + len(self.params)

    @property
    def n(self) -> int:
        return len(self.x_vars)

    @property
    def all_vars(self) -> tuple[str, ...]:
        return self.x_vars + self.params

    def index(self, name: str) -> int:
        try:
            return self.all_vars.index(name)
        except ValueError:
            raise KeyError(f"unknown variable {name!r} in context {self.all_vars}") from None

    def is_param_index(self, i: int) -> bool:
        return i >= len(self.x_vars)

    def drop_params(self, names: Iterable[str]) -> "Context":
        gone = set(names)
        return Context(self.x_vars, tuple(p for p in self.params if p not in gone))


def _frac_gcd(a: Fraction, b: Fraction) -> Fraction:
    if a == 0:
        return abs(b)
    if b == 0:
        return abs(a)
    num = _int_gcd(a.numerator * b.denominator, b.numerator * a.denominator)
    return Fraction(num, a.denominator * b.denominator)


_ZERO = Fraction(0)
_ONE = Fraction(1)

Exps = tuple  # exponent vector, length = ctx.nvars


def _grlex_key(e: Exps) -> tuple:
    return (sum(e), e)


class MPoly:
    """Sparse multivariate polynomial over Q, keyed by exponent vectors."""

    __slots__ = ("ctx", "terms")

    def __init__(self, ctx: Context, terms: Mapping[Exps, Fraction] | None = None):
        self.ctx = ctx
        t: dict[Exps, Fraction] = {}
        if terms:
            for e, c in terms.items():
                if len(e) != ctx.nvars:
                    raise ValueError(f"exponent vector {e} has wrong length for {ctx.all_vars}")
                if c != 0:
                    t[e] = Fraction(c)
        self.terms = t

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(ctx: Context) -> "MPoly":
        return MPoly(ctx)

    @staticmethod
    def const(ctx: Context, c) -> "MPoly":
        c = Fraction(c)
        if c == 0:
            return MPoly(ctx)
        return MPoly(ctx, {(0,) * ctx.nvars: c})

    @staticmethod
    def one(ctx: Context) -> "MPoly":
        return MPoly.const(ctx, 1)

    @staticmethod
    def var(ctx: Context, name: str) -> "MPoly":
        i = ctx.index(name)
        e = [0] * ctx.nvars
        e[i] = 1
        return MPoly(ctx, {tuple(e): _ONE})

    # -- predicates --------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_const(self) -> bool:
        return all(sum(e) == 0 for e in self.terms)

    def is_one(self) -> bool:
        return self.terms == {(0,) * self.ctx.nvars: _ONE}

    def const_value(self) -> Fraction:
        if self.is_zero():
            return _ZERO
        if not self.is_const():
            raise ValueError(f"not a constant polynomial: {self}")
        return next(iter(self.terms.values()))

    def total_degree(self) -> int:
        if self.is_zero():
            return 0
        return max(sum(e) for e in self.terms)

    def degree_in(self, i: int) -> int:
        if self.is_zero():
            return -1
        return max(e[i] for e in self.terms)

    def uses_index(self, i: int) -> bool:
        return any(e[i] > 0 for e in self.terms)

    # -- ring operations ---------------------------------------------------

    def _check(self, other: "MPoly") -> None:
        if self.ctx != other.ctx:
            raise ValueError("mixed polynomial contexts")

    def __add__(self, other: "MPoly") -> "MPoly":
        self._check(other)
        t = dict(self.terms)
        for e, c in other.terms.items():
            s = t.get(e, _ZERO) + c
            if s == 0:
                t.pop(e, None)
            else:
                t[e] = s
        out = MPoly.__new__(MPoly)
        out.ctx, out.terms = self.ctx, t
        return out

    def __neg__(self) -> "MPoly":
        out = MPoly.__new__(MPoly)
        out.ctx = self.ctx
        out.terms = {e: -c for e, c in self.terms.items()}
        return out

    def __sub__(self, other: "MPoly") -> "MPoly":
        return self + (-other)

    def __mul__(self, other: "MPoly") -> "MPoly":
        self._check(other)
        t: dict[Exps, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                s = t.get(e, _ZERO) + c1 * c2
                if s == 0:
                    t.pop(e, None)
                else:
                    t[e] = s
        out = MPoly.__new__(MPoly)
        out.ctx, out.terms = self.ctx, t
        return out

    def scale(self, c: Fraction) -> "MPoly":
        if c == 0:
            return MPoly(self.ctx)
        out = MPoly.__new__(MPoly)
        out.ctx = self.ctx
        out.terms = {e: v * c for e, v in self.terms.items()}
        return out

    def __pow__(self, k: int) -> "MPoly":
        if k < 0:
            raise ValueError("negative polynomial power")
        out = MPoly.one(self.ctx)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # -- leading data (graded lex on the combined variable list) -----------

    def leading_exps(self) -> Exps:
        if self.is_zero():
            raise ValueError("zero polynomial has no leading term")
        return max(self.terms, key=_grlex_key)

    def leading_coeff(self) -> Fraction:
        return self.terms[self.leading_exps()]

    def monic(self) -> "MPoly":
        if self.is_zero():
            return self
        return self.scale(1 / self.leading_coeff())

    # -- exact division and gcd --------------------------------------------

    def divexact(self, g: "MPoly") -> "MPoly":
        """Exact division; raises ValueError when ``g`` does not divide ``self``."""
        self._check(g)
        if g.is_zero():
            raise ZeroDivisionError("division by zero polynomial")
        if self.is_zero():
            return self
        if g.is_const():
            return self.scale(1 / g.const_value())
        q: dict[Exps, Fraction] = {}
        r = self
        ge = g.leading_exps()
        gc = g.terms[ge]
        while not r.is_zero():
            re = r.leading_exps()
            e = tuple(a - b for a, b in zip(re, ge))
            if any(x < 0 for x in e):
                raise ValueError("inexact polynomial division")
            c = r.terms[re] / gc
            q[e] = c
            r = r - MPoly(self.ctx, {e: c}) * g
        return MPoly(self.ctx, q)

    def _as_univariate(self, i: int) -> dict[int, "MPoly"]:
        """View as a univariate polynomial in variable ``i`` with MPoly coefficients."""
        coeffs: dict[int, dict[Exps, Fraction]] = {}
        for e, c in self.terms.items():
            d = e[i]
            e0 = e[:i] + (0,) + e[i + 1 :]
            coeffs.setdefault(d, {})[e0] = c
        return {d: MPoly(self.ctx, t) for d, t in coeffs.items()}

    @staticmethod
    def _from_univariate(ctx: Context, i: int, coeffs: Mapping[int, "MPoly"]) -> "MPoly":
        t: dict[Exps, Fraction] = {}
        for d, p in coeffs.items():
            for e, c in p.terms.items():
                e2 = e[:i] + (d,) + e[i + 1 :]
                t[e2] = t.get(e2, _ZERO) + c
        return MPoly(ctx, t)

    def content_wrt(self, i: int) -> "MPoly":
        u = self._as_univariate(i)
        c = MPoly.zero(self.ctx)
        for p in u.values():
            c = mpoly_gcd(c, p)
        return c

    def derive(self, i: int) -> "MPoly":
        t: dict[Exps, Fraction] = {}
        for e, c in self.terms.items():
            if e[i] == 0:
                continue
            e2 = e[:i] + (e[i] - 1,) + e[i + 1 :]
            t[e2] = t.get(e2, _ZERO) + c * e[i]
        return MPoly(self.ctx, t)

    def map_into(self, ctx: Context, images: Mapping[str, "RatFunc"]) -> "RatFunc":
        """Substitute every variable through ``images`` (values over ``ctx``)."""
        out = RatFunc.const(ctx, 0)
        names = self.ctx.all_vars
        for e, c in sorted(self.terms.items()):
            term = RatFunc.const(ctx, c)
            for i, k in enumerate(e):
                if k:
                    term = term * (images[names[i]] ** k)
            out = out + term
        return out

    # -- misc ---------------------------------------------------------------

    def __eq__(self, other) -> bool:
        return isinstance(other, MPoly) and self.ctx == other.ctx and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.ctx, frozenset(self.terms.items())))

    def __iter__(self) -> Iterator[tuple[Exps, Fraction]]:
        return iter(sorted(self.terms.items(), key=lambda t: _grlex_key(t[0]), reverse=True))

    def __str__(self) -> str:
        return format_poly(self)

    def __repr__(self) -> str:
        return f"MPoly({self})"


def mpoly_gcd(f: MPoly, g: MPoly) -> MPoly:
    """Monic gcd of multivariate polynomials over Q.

    Dispatch: plain Euclid for univariate input, then an evaluation-based
    heuristic verified by exact trial division, falling back to the primitive
    PRS with content / primitive-part recursion when the heuristic gives up.
    """
    if f.is_zero():
        return g.monic()
    if g.is_zero():
        return f.monic()
    if f.is_const() or g.is_const():
        return MPoly.one(f.ctx)
    used = [i for i in range(f.ctx.nvars) if f.uses_index(i) or g.uses_index(i)]
    if len(used) == 1:
        return _gcd_univariate_q(f, g, used[0])
    fi = _integer_normal(f)
    gi = _integer_normal(g)
    h = _gcd_heuristic(fi, gi, used)
    if h is None:
        h = _gcd_prs(fi, gi, used[-1])
    return h.monic()


def _int_content(p: MPoly) -> int:
    """Positive integer content; input must have integer coefficients."""
    c = 0
    for v in p.terms.values():
        c = _int_gcd(c, int(v))
        if c == 1:
            break
    return c


def _gcd_heuristic(f: MPoly, g: MPoly, used: list[int]) -> MPoly | None:
    """Evaluation/reconstruction gcd over Z for integer-coefficient input.

    Evaluates the top variable at a large integer, takes the exact integer gcd
    below (content included, so factors of evaluated variables survive), lifts
    back by balanced base-xi digits, and accepts only candidates that divide
    both inputs.  Returns None when no attempt verifies.
    """
    ic = _int_gcd(_int_content(f), _int_content(g))
    f = f.scale(Fraction(1, _int_content(f)))
    g = g.scale(Fraction(1, _int_content(g)))
    v = used[-1]
    maxf = max(abs(c) for c in f.terms.values())
    maxg = max(abs(c) for c in g.terms.values())
    xi = 2 * int(min(maxf, maxg)) + 29
    xi <<= min(f.degree_in(v), g.degree_in(v)) + 2
    for _ in range(6):
        fe, ge = _eval_var(f, v, xi), _eval_var(g, v, xi)
        if fe.is_zero() or ge.is_zero():
            xi = xi * 73 // 32 + 1
            continue
        gamma = _gcd_z(fe, ge, [i for i in used[:-1] if fe.uses_index(i) or ge.uses_index(i)])
        if gamma is None:
            xi = xi * 73 // 32 + 1
            continue
        h = _lift_digits(gamma, v, xi)
        if h.is_zero():
            xi = xi * 73 // 32 + 1
            continue
        h = h.scale(Fraction(1, _int_content(h)))
        try:
            f.divexact(h)
            g.divexact(h)
            return h.scale(Fraction(ic))
        except ValueError:
            xi = xi * 73 // 32 + 1
    return None


def _gcd_z(f: MPoly, g: MPoly, used: list[int]) -> MPoly | None:
    """Exact gcd over Z (content included) for integer-coefficient input."""
    if not used:
        return MPoly.const(f.ctx, Fraction(_int_gcd(int(f.const_value()), int(g.const_value()))))
    if f.is_const() or g.is_const():
        cf = int(f.const_value()) if f.is_const() else _int_content(f)
        cg = int(g.const_value()) if g.is_const() else _int_content(g)
        return MPoly.const(f.ctx, Fraction(_int_gcd(cf, cg)))
    if len(used) == 1:
        ic = _int_gcd(_int_content(f), _int_content(g))
        pp = _integer_normal(_gcd_univariate_q(f, g, used[0]))
        return pp.scale(Fraction(ic))
    return _gcd_heuristic(f, g, used)


def _eval_var(p: MPoly, v: int, xi: int) -> MPoly:
    t: dict[Exps, Fraction] = {}
    for e, c in p.terms.items():
        e2 = e[:v] + (0,) + e[v + 1 :]
        t[e2] = t.get(e2, _ZERO) + c * xi ** e[v]
    return MPoly(p.ctx, t)


def _lift_digits(gamma: MPoly, v: int, xi: int) -> MPoly:
    """Balanced base-xi expansion of every coefficient, digits become v-powers."""
    out: dict[Exps, Fraction] = {}
    half = xi // 2
    for e, c in gamma.terms.items():
        n = int(c)
        d = 0
        while n:
            digit = n % xi
            if digit > half:
                digit -= xi
            if digit:
                e2 = e[:v] + (d,) + e[v + 1 :]
                out[e2] = out.get(e2, _ZERO) + digit
            n = (n - digit) // xi
            d += 1
    return MPoly(gamma.ctx, out)


def _gcd_prs(f: MPoly, g: MPoly, v: int) -> MPoly:
    """Primitive pseudo-remainder sequence, the deterministic fallback."""
    if not f.uses_index(v):
        return mpoly_gcd(f, g.content_wrt(v))
    if not g.uses_index(v):
        return mpoly_gcd(f.content_wrt(v), g)
    cf, cg = f.content_wrt(v), g.content_wrt(v)
    c = mpoly_gcd(cf, cg)
    a = _integer_normal(f.divexact(cf))
    b = _integer_normal(g.divexact(cg))
    while True:
        if b.degree_in(v) > a.degree_in(v):
            a, b = b, a
        r = _prem(a, b, v)
        if r.is_zero():
            break
        r = _integer_normal(r)
        cr = r.content_wrt(v)
        if not cr.is_one():
            r = r.divexact(cr)
        a, b = b, _integer_normal(r)
    cb = b.content_wrt(v)
    if not cb.is_one():
        b = b.divexact(cb)
    return (c * b).monic()


def _gcd_univariate_q(f: MPoly, g: MPoly, v: int) -> MPoly:
    a = {e[v]: c for e, c in f.terms.items()}
    b = {e[v]: c for e, c in g.terms.items()}
    while b:
        db = max(b)
        lb = b[db]
        b = {d: c / lb for d, c in b.items()}
        r = dict(a)
        while r and max(r) >= db:
            da = max(r)
            la = r[da]
            for d, c in b.items():
                key = d + da - db
                val = r.get(key, _ZERO) - la * c
                if val == 0:
                    r.pop(key, None)
                else:
                    r[key] = val
        a, b = b, r
    e0 = [0] * f.ctx.nvars
    terms = {}
    for d, c in a.items():
        e0[v] = d
        terms[tuple(e0)] = c
    return MPoly(f.ctx, terms).monic()


def _prem(f: MPoly, g: MPoly, v: int) -> MPoly:
    """Pseudo-remainder of f by g with respect to variable v."""
    uf, ug = f._as_univariate(v), g._as_univariate(v)
    df, dg = max(uf), max(ug)
    lg = ug[dg]
    r = dict(uf)
    for d in range(df, dg - 1, -1):
        lead = r.pop(d, None)
        if lead is None or lead.is_zero():
            continue
        for dd in list(r):
            r[dd] = r[dd] * lg
        for dd, cc in ug.items():
            if dd == dg:
                continue
            key = dd + d - dg
            val = r.get(key, MPoly.zero(f.ctx)) - lead * cc
            if val.is_zero():
                r.pop(key, None)
            else:
                r[key] = val
    r = {d: p for d, p in r.items() if d < dg and not p.is_zero()}
    return MPoly._from_univariate(f.ctx, v, r)


class RatFunc:
    """Canonical rational function num/den over a :class:`Context`."""

    __slots__ = ("num", "den")

    def __init__(self, num: MPoly, den: MPoly, _canonical: bool = False):
        if den.is_zero():
            raise ZeroDenominator("zero denominator")
        if not _canonical:
            num, den = _reduce(num, den)
        self.num = num
        self.den = den

    # -- constructors ------------------------------------------------------

    @staticmethod
    def const(ctx: Context, c) -> "RatFunc":
        return RatFunc(MPoly.const(ctx, c), MPoly.one(ctx), _canonical=True)

    @staticmethod
    def var(ctx: Context, name: str) -> "RatFunc":
        return RatFunc(MPoly.var(ctx, name), MPoly.one(ctx), _canonical=True)

    @staticmethod
    def from_poly(p: MPoly) -> "RatFunc":
        return RatFunc(p, MPoly.one(p.ctx), _canonical=True)

    # -- predicates ---------------------------------------------------------

    @property
    def ctx(self) -> Context:
        return self.num.ctx

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_one(self) -> bool:
        return self.num.is_one() and self.den.is_one()

    def is_const(self) -> bool:
        return self.num.is_const() and self.den.is_one()

    def const_value(self) -> Fraction:
        if not self.is_const():
            raise ValueError(f"not constant: {self}")
        return self.num.const_value()

    # -- field operations ----------------------------------------------------

    def __add__(self, other: "RatFunc") -> "RatFunc":
        if self.den.is_one() and other.den.is_one():
            return RatFunc(self.num + other.num, self.den, _canonical=True)
        return RatFunc(self.num * other.den + other.num * self.den, self.den * other.den)

    def __sub__(self, other: "RatFunc") -> "RatFunc":
        if self.den.is_one() and other.den.is_one():
            return RatFunc(self.num - other.num, self.den, _canonical=True)
        return RatFunc(self.num * other.den - other.num * self.den, self.den * other.den)

    def __neg__(self) -> "RatFunc":
        out = RatFunc.__new__(RatFunc)
        out.num, out.den = -self.num, self.den
        return out

    def __mul__(self, other: "RatFunc") -> "RatFunc":
        if self.den.is_one() and other.den.is_one():
            return RatFunc(self.num * other.num, self.den, _canonical=True)
        return RatFunc(self.num * other.num, self.den * other.den)

    def __truediv__(self, other: "RatFunc") -> "RatFunc":
        if other.is_zero():
            raise ZeroDenominator("division by zero rational function")
        return RatFunc(self.num * other.den, self.den * other.num)

    def inverse(self) -> "RatFunc":
        if self.is_zero():
            raise ZeroDenominator("inverse of zero")
        return RatFunc(self.den, self.num)

    def __pow__(self, k: int) -> "RatFunc":
        if k < 0:
            return self.inverse() ** (-k)
        return RatFunc(self.num**k, self.den**k)

    def scale(self, c: Fraction) -> "RatFunc":
        if c == 0:
            return RatFunc.const(self.ctx, 0)
        out = RatFunc.__new__(RatFunc)
        out.num, out.den = self.num.scale(c), self.den
        return out

    # -- calculus ------------------------------------------------------------

    def derive(self, i: int) -> "RatFunc":
        """Partial derivative with respect to x-variable index i (0-based)."""
        if i < 0 or i >= self.ctx.n:
            raise IndexError(f"derivation index {i} out of range for {self.ctx.x_vars}")
        if self.den.is_one():
            return RatFunc(self.num.derive(i), self.den, _canonical=True)
        n, d = self.num, self.den
        return RatFunc(n.derive(i) * d - n * d.derive(i), d * d)

    def subst(self, ctx: Context, images: Mapping[str, "RatFunc"]) -> "RatFunc":
        num = self.num.map_into(ctx, images)
        den = self.den.map_into(ctx, images)
        if den.is_zero():
            raise SpecializeError(f"substitution sends denominator {self.den} to zero")
        return num / den

    # -- misc -----------------------------------------------------------------

    def __eq__(self, other) -> bool:
        return isinstance(other, RatFunc) and self.num == other.num and self.den == other.den

    def __hash__(self) -> int:
        return hash((self.num, self.den))

    def __str__(self) -> str:
        return format_ratfunc(self)

    def __repr__(self) -> str:
        return f"RatFunc({self})"


def _reduce(num: MPoly, den: MPoly) -> tuple[MPoly, MPoly]:
    if num.is_zero():
        return num, MPoly.one(num.ctx)
    g = mpoly_gcd(num, den)
    if not g.is_one():
        num, den = num.divexact(g), den.divexact(g)
    lc = den.leading_coeff()
    if lc != 1:
        num, den = num.scale(1 / lc), den.scale(1 / lc)
    return num, den


# -- functional aliases for the field operations --------------------------------


def normalize(num: MPoly, den: MPoly) -> RatFunc:
    """Canonical reduced rational function num/den."""
    return RatFunc(num, den)


def derive(f: RatFunc, i: int) -> RatFunc:
    """Partial derivative of ``f`` along the i-th x-variable (1-based, as printed)."""
    return f.derive(i - 1)


def specialize(f: RatFunc, bindings: Mapping[str, object]) -> RatFunc:
    """Substitute parameters by rationals (or by expressions in remaining parameters).

    Unbound variables stay symbolic; the result lives in the context with the
    bound parameters removed.  A substitution that zeroes a stored denominator
    raises :class:`SpecializeError` naming the offending denominator.
    """
    ctx = f.ctx
    for name in bindings:
        if name not in ctx.params:
            raise SpecializeError(f"{name!r} is not a parameter of {ctx.params}")
    new_ctx = ctx.drop_params(bindings)
    images: dict[str, RatFunc] = {}
    for name in ctx.all_vars:
        if name in bindings:
            v = bindings[name]
            if isinstance(v, RatFunc):
                img = v
            elif isinstance(v, str):
                img = parse_coeff(v, new_ctx)
            else:
                img = RatFunc.const(new_ctx, Fraction(v))
            if img.ctx != new_ctx:
                raise SpecializeError(f"binding for {name!r} uses variables outside {new_ctx.all_vars}")
            images[name] = img
        else:
            images[name] = RatFunc.var(new_ctx, name)
    den_img = f.den.map_into(new_ctx, images)
    if den_img.is_zero():
        raise SpecializeError(f"substitution makes denominator {format_poly(f.den)} vanish")
    return f.num.map_into(new_ctx, images) / den_img


def assumption_factors(p: MPoly) -> list[MPoly]:
    """Split a pivot polynomial into normalized content factors and primitive part.

    Used to record nonzero-pivot assumptions: a pivot like g*l1 - g*l2 yields
    the factors {g, l1 - l2}.  No factorization beyond gcd/content is done.
    """
    if p.is_zero() or p.is_const():
        return []
    factors: list[MPoly] = []
    mins = [min(e[i] for e in p.terms) for i in range(p.ctx.nvars)]
    if any(m > 0 for m in mins):
        strip = tuple(mins)
        p = MPoly(p.ctx, {tuple(a - b for a, b in zip(e, strip)): c for e, c in p.terms.items()})
        for i, m in enumerate(mins):
            if m > 0:
                factors.append(MPoly.var(p.ctx, p.ctx.all_vars[i]))
    changed = True
    while changed:
        changed = False
        for i in range(p.ctx.nvars):
            if not p.uses_index(i):
                continue
            c = p.content_wrt(i)
            if not c.is_const():
                factors.extend(assumption_factors(c))
                p = p.divexact(c)
                changed = True
    if not p.is_const():
        factors.append(_integer_normal(p))
    seen, out = set(), []
    for f in factors:
        key = frozenset(f.terms.items())
        if key not in seen:
            seen.add(key)
            out.append(f)
    return out


def _integer_normal(p: MPoly) -> MPoly:
    """Scale to integer coefficients with content 1 and positive leading coefficient."""
    c = _ZERO
    for v in p.terms.values():
        c = _frac_gcd(c, v)
    p = p.scale(1 / c)
    if p.leading_coeff() < 0:
        p = p.scale(Fraction(-1))
    return p


# -- printing -------------------------------------------------------------------


def _monomial_str(ctx: Context, e: Exps) -> str:
    parts = []
    for name, k in zip(ctx.all_vars, e):
        if k == 1:
            parts.append(name)
        elif k > 1:
            parts.append(f"{name}^{k}")
    return "*".join(parts)


def format_poly(p: MPoly) -> str:
    if p.is_zero():
        return "0"
    chunks: list[str] = []
    for e, c in p:
        mono = _monomial_str(p.ctx, e)
        if not mono:
            body = str(abs(c))
        elif abs(c) == 1:
            body = mono
        else:
            body = f"{abs(c)}*{mono}"
        if not chunks:
            chunks.append(body if c > 0 else f"-{body}")
        else:
            chunks.append(f"+ {body}" if c > 0 else f"- {body}")
    return " ".join(chunks)


def format_ratfunc(f: RatFunc) -> str:
    if f.den.is_one():
        return format_poly(f.num)
    num = format_poly(f.num)
    den = format_poly(f.den)
    if len(f.num.terms) > 1:
        num = f"({num})"
    if len(f.den.terms) > 1 or True:
        den = f"({den})"
    return f"{num}/{den}"


# -- parsing ----------------------------------------------------------------------


class _Tok:
    __slots__ = ("kind", "val", "pos")

    def __init__(self, kind: str, val: str, pos: int):
        self.kind, self.val, self.pos = kind, val, pos


def _tokenize(s: str) -> list[_Tok]:
    toks: list[_Tok] = []
    i, n = 0, len(s)
    while i < n:
        c = s[i]
        if c.isspace():
            i += 1
        elif c.isdigit():
            j = i
            while j < n and s[j].isdigit():
                j += 1
            toks.append(_Tok("int", s[i:j], i))
            i = j
        elif c.isalpha() or c == "_":
            j = i
            while j < n and (s[j].isalnum() or s[j] == "_"):
                j += 1
            toks.append(_Tok("name", s[i:j], i))
            i = j
        elif c in "+-*/^()":
            toks.append(_Tok(c, c, i))
            i += 1
        else:
            raise CoeffParseError(f"unexpected character {c!r} at position {i}")
    toks.append(_Tok("end", "", n))
    return toks


class _Parser:
    def __init__(self, toks: list[_Tok], ctx: Context):
        self.toks = toks
        self.i = 0
        self.ctx = ctx

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expr(self) -> RatFunc:
        t = self.term()
        while self.peek().kind in "+-":
            op = self.next().kind
            rhs = self.term()
            t = t + rhs if op == "+" else t - rhs
        return t

    def term(self) -> RatFunc:
        t = self.factor()
        while self.peek().kind in "*/":
            op = self.next().kind
            rhs = self.factor()
            if op == "*":
                t = t * rhs
            else:
                if rhs.is_zero():
                    raise CoeffParseError("division by zero in coefficient")
                t = t / rhs
        return t

    def factor(self) -> RatFunc:
        sign = 1
        while self.peek().kind in "+-":
            if self.next().kind == "-":
                sign = -sign
        base = self.atom()
        if self.peek().kind == "^":
            self.next()
            neg = False
            if self.peek().kind == "-":
                self.next()
                neg = True
            t = self.next()
            if t.kind != "int":
                raise CoeffParseError(f"expected integer exponent at position {t.pos}")
            k = int(t.val)
            base = base ** (-k if neg else k)
        return base.scale(Fraction(sign)) if sign < 0 else base

    def atom(self) -> RatFunc:
        t = self.next()
        if t.kind == "int":
            return RatFunc.const(self.ctx, int(t.val))
        if t.kind == "name":
            if t.val not in self.ctx.all_vars:
                raise CoeffParseError(f"unknown symbol {t.val!r} (declared: {self.ctx.all_vars})")
            return RatFunc.var(self.ctx, t.val)
        if t.kind == "(":
            e = self.expr()
            close = self.next()
            if close.kind != ")":
                raise CoeffParseError(f"expected ')' at position {close.pos}")
            return e
        raise CoeffParseError(f"unexpected token {t.val!r} at position {t.pos}")


def parse_coeff(s: str, ctx: Context) -> RatFunc:
    """Parse a coefficient string over the given context into a canonical RatFunc."""
    p = _Parser(_tokenize(s), ctx)
    out = p.expr()
    if p.peek().kind != "end":
        t = p.peek()
        raise CoeffParseError(f"trailing input {t.val!r} at position {t.pos}")
    return out
