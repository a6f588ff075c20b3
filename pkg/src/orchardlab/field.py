"""Exact arithmetic in finite fields F_p and small extensions F_{p^n}.

Elements are coefficient vectors over F_p reduced modulo a monic
irreducible polynomial (absent for prime fields).  Everything is kept
at desk scale: n <= 4 and p^n <= 10**6, which lets irreducibility,
square roots and generator searches be settled by direct enumeration.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterator, Optional, Tuple

DESK_ORDER_CAP = 10**6
SQRT_TABLE_CAP = 10**4


class FieldError(Exception):
    pass


class ZeroInverse(FieldError):
    """Inversion of the zero element."""


class NonResidue(FieldError):
    """Square root requested for a non-square."""


class CompositeModulus(FieldError):
    """A modulus failed its irreducibility re-check."""


def is_prime(m: int) -> bool:
    if m < 2:
        return False
    d = 2
    while d * d <= m:
        if m % d == 0:
            return False
        d += 1
    return True


def _poly_trim(c):
    c = list(c)
    while c and c[-1] == 0:
        c.pop()
    return c


def _poly_mod(a, m, p):
    """Remainder of a by monic m, coefficients low-degree first."""
    a = list(a)
    dm = len(m) - 1
    while len(a) > dm:
        lead = a[-1] % p
        if lead:
            shift = len(a) - 1 - dm
            for i in range(dm + 1):
                a[shift + i] = (a[shift + i] - lead * m[i]) % p
        a.pop()
    while len(a) < dm:
        a.append(0)
    return [x % p for x in a]


def _poly_mulmod(a, b, m, p):
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] = (out[i + j] + ai * bj) % p
    return _poly_mod(out, m, p)


def _poly_eval(c, x, p):
    acc = 0
    for coef in reversed(c):
        acc = (acc * x + coef) % p
    return acc


def _monic_polys(degree: int, p: int) -> Iterator[list]:
    """All monic polynomials of exact degree, ordered lexicographically
    on coefficients read from the leading term down."""
    total = p**degree
    for code in range(total):
        coeffs = []
        c = code
        for _ in range(degree):
            coeffs.append(c % p)
            c //= p
        yield coeffs + [1]


def _is_irreducible(m, p) -> bool:
    """Trial division by all monic factors of degree <= deg/2."""
    deg = len(m) - 1
    if deg <= 0:
        return False
    if deg == 1:
        return True
    for x in range(p):
        if _poly_eval(m, x, p) == 0:
            return False
    if deg <= 3:
        return True
    for d in range(2, deg // 2 + 1):
        for f in _monic_polys(d, p):
            if not _poly_trim(_poly_mod(m, f, p)):
                return False
    return True


@lru_cache(maxsize=None)
def _least_irreducible(p: int, degree: int) -> Tuple[int, ...]:
    for m in _monic_polys(degree, p):
        if _is_irreducible(m, p):
            return tuple(m)
    raise CompositeModulus(f"no irreducible of degree {degree} over F_{p}")


class FieldCtx:
    """A finite field F_{p^n}, the shared context of its elements.

    For n > 1 the modulus is a monic irreducible polynomial over F_p,
    given as a low-degree-first coefficient tuple of length n + 1.
    """

    def __init__(self, p: int, n: int = 1, modulus=None):
        if not is_prime(p):
            raise FieldError(f"{p} is not prime")
        if n < 1 or n > 4:
            raise FieldError("extension degree must be in 1..4")
        if p**n > DESK_ORDER_CAP:
            raise FieldError(f"field order {p}^{n} exceeds desk cap")
        self.p = p
        self.n = n
        if n == 1:
            if modulus is not None:
                raise FieldError("prime fields carry no modulus")
            self.modulus = None
        else:
            if modulus is None:
                modulus = _least_irreducible(p, n)
            modulus = tuple(c % p for c in modulus)
            if len(modulus) != n + 1 or modulus[-1] != 1:
                raise FieldError("modulus must be monic of degree n")
            if not _is_irreducible(list(modulus), p):
                raise CompositeModulus(f"{modulus} is reducible over F_{p}")
            self.modulus = modulus
        self.order = p**n
        self._sqrt_table: Optional[dict] = None

    def __eq__(self, other):
        return (
            isinstance(other, FieldCtx)
            and self.p == other.p
            and self.n == other.n
            and self.modulus == other.modulus
        )

    def __hash__(self):
        return hash((self.p, self.n, self.modulus))

    def __repr__(self):
        if self.n == 1:
            return f"F({self.p})"
        return f"F({self.p}^{self.n})"

    # -- element construction ------------------------------------------

    def elem(self, value) -> "FieldElem":
        """Build an element from an int, a coefficient list, or an elem."""
        if isinstance(value, FieldElem):
            if value.ctx != self:
                raise FieldError("element from a different field")
            return value
        if isinstance(value, int):
            coeffs = [value] + [0] * (self.n - 1)
        else:
            coeffs = list(value)
            if len(coeffs) > self.n:
                raise FieldError("too many coefficients")
            coeffs += [0] * (self.n - len(coeffs))
        return FieldElem(self, tuple(c % self.p for c in coeffs))

    def zero(self) -> "FieldElem":
        return self.elem(0)

    def one(self) -> "FieldElem":
        return self.elem(1)

    def elements(self) -> Iterator["FieldElem"]:
        """All field elements, ascending lexicographic coefficient order."""
        for code in range(self.order):
            coeffs = []
            c = code
            for _ in range(self.n):
                coeffs.append(c % self.p)
                c //= self.p
            # lexicographic on the tuple itself, not on the mixed-radix code
            yield FieldElem(self, tuple(coeffs))

    def elements_sorted(self):
        return sorted(self.elements(), key=lambda e: e.coeffs)

    # -- square roots ---------------------------------------------------

    def _build_sqrt_table(self):
        table = {}
        for e in self.elements():
            sq = (e * e).coeffs
            old = table.get(sq)
            if old is None or e.coeffs < old:
                table[sq] = e.coeffs
        self._sqrt_table = table

    def sqrt(self, a: "FieldElem") -> "FieldElem":
        """Canonical square root: the lexicographically least of {r, -r}.

        Exhaustive table lookup up to order 10**4, generic
        Tonelli-Shanks above that; raises NonResidue when no root exists.
        """
        if a.ctx != self:
            raise FieldError("element from a different field")
        if self.p == 2:
            # Frobenius is bijective in characteristic 2
            return a ** (2 ** (self.n - 1))
        if self.order <= SQRT_TABLE_CAP:
            if self._sqrt_table is None:
                self._build_sqrt_table()
            hit = self._sqrt_table.get(a.coeffs)
            if hit is None:
                raise NonResidue(f"{a} is not a square in {self}")
            return FieldElem(self, hit)
        r = _tonelli_shanks(self, a)
        return min(r, -r, key=lambda e: e.coeffs)

    def try_sqrt(self, a: "FieldElem") -> Optional["FieldElem"]:
        try:
            return self.sqrt(a)
        except NonResidue:
            return None

    def is_square(self, a: "FieldElem") -> bool:
        if a.is_zero() or self.p == 2:
            return True
        return (a ** ((self.order - 1) // 2)).is_one()

    # -- text form -------------------------------------------------------

    def descriptor(self) -> str:
        if self.n == 1:
            return str(self.p)
        return f"{self.p}^{self.n}/" + ",".join(str(c) for c in self.modulus)

    @staticmethod
    def from_descriptor(text: str) -> "FieldCtx":
        text = text.strip()
        if "^" not in text:
            return FieldCtx(int(text))
        head, _, tail = text.partition("/")
        p_s, _, n_s = head.partition("^")
        if not tail:
            return FieldCtx(int(p_s), int(n_s))
        modulus = tuple(int(c) for c in tail.split(","))
        return FieldCtx(int(p_s), int(n_s), modulus)


class FieldElem:
    """Immutable field element: a reduced coefficient tuple over F_p."""

    __slots__ = ("ctx", "coeffs")

    def __init__(self, ctx: FieldCtx, coeffs: Tuple[int, ...]):
        self.ctx = ctx
        self.coeffs = coeffs

    def _lift(self, other) -> "FieldElem":
        if isinstance(other, FieldElem):
            if other.ctx != self.ctx:
                raise FieldError("mixed field contexts")
            return other
        if isinstance(other, int):
            return self.ctx.elem(other)
        return NotImplemented

    def __add__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        p = self.ctx.p
        return FieldElem(
            self.ctx, tuple((a + b) % p for a, b in zip(self.coeffs, o.coeffs))
        )

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        p = self.ctx.p
        return FieldElem(
            self.ctx, tuple((a - b) % p for a, b in zip(self.coeffs, o.coeffs))
        )

    def __rsub__(self, other):
        return self.ctx.elem(other) - self

    def __neg__(self):
        p = self.ctx.p
        return FieldElem(self.ctx, tuple((-a) % p for a in self.coeffs))

    def __mul__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        ctx = self.ctx
        if ctx.n == 1:
            return FieldElem(ctx, ((self.coeffs[0] * o.coeffs[0]) % ctx.p,))
        prod = _poly_mulmod(list(self.coeffs), list(o.coeffs), list(ctx.modulus), ctx.p)
        return FieldElem(ctx, tuple(prod))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return self * inv(o)

    def __rtruediv__(self, other):
        return self.ctx.elem(other) / self

    def __pow__(self, e: int):
        if e < 0:
            return inv(self) ** (-e)
        result = self.ctx.one()
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, int):
            other = self.ctx.elem(other)
        return (
            isinstance(other, FieldElem)
            and self.ctx == other.ctx
            and self.coeffs == other.coeffs
        )

    def __hash__(self):
        return hash(self.coeffs)

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def is_one(self) -> bool:
        return self.coeffs[0] == 1 and all(c == 0 for c in self.coeffs[1:])

    def __repr__(self):
        return self.text()

    def text(self) -> str:
        if self.ctx.n == 1:
            return str(self.coeffs[0])
        return ",".join(str(c) for c in self.coeffs)

    @staticmethod
    def parse(ctx: FieldCtx, text: str) -> "FieldElem":
        return ctx.elem([int(c) for c in text.split(",")])


def inv(a: FieldElem) -> FieldElem:
    """Multiplicative inverse; raises ZeroInverse on 0."""
    if a.is_zero():
        raise ZeroInverse("inverse of zero")
    ctx = a.ctx
    if ctx.n == 1:
        return FieldElem(ctx, (pow(a.coeffs[0], ctx.p - 2, ctx.p),))
    # Fermat in F_{p^n}: a^(q-2) = a^-1
    return a ** (ctx.order - 2)


def sqrt(a: FieldElem) -> FieldElem:
    return a.ctx.sqrt(a)


def _tonelli_shanks(ctx: FieldCtx, a: FieldElem) -> FieldElem:
    """Square root in a finite field of odd order, via a nonresidue."""
    if a.is_zero():
        return a
    q = ctx.order
    if not ctx.is_square(a):
        raise NonResidue(f"{a} is not a square in {ctx}")
    s, m = q - 1, 0
    while s % 2 == 0:
        s //= 2
        m += 1
    z = next(e for e in ctx.elements() if not e.is_zero() and not ctx.is_square(e))
    c = z**s
    t = a**s
    r = a ** ((s + 1) // 2)
    while not t.is_one():
        i = 0
        t2 = t
        while not t2.is_one():
            t2 = t2 * t2
            i += 1
        b = c ** (2 ** (m - i - 1))
        m = i
        c = b * b
        t = t * c
        r = r * b
    return r


def adjoin_sqrt(ctx: FieldCtx, d: FieldElem):
    """Extend ctx so that d has a square root.

    Returns (new_ctx, embed, root) with embed a ring embedding of ctx
    into new_ctx and root * root == embed(d).  When d is already a
    square the context is returned unchanged with the canonical root.
    """
    if d.ctx != ctx:
        raise FieldError("element from a different field")
    existing = ctx.try_sqrt(d)
    if existing is not None:
        return ctx, (lambda e: e), existing
    if ctx.n not in (1, 2):
        raise FieldError("extensions supported from degree 1 or 2 only")
    big = FieldCtx(ctx.p, 2 * ctx.n)
    if ctx.n == 1:
        def embed(e, _big=big):
            return _big.elem([e.coeffs[0]])
    else:
        # send the old generator to a root of the old modulus upstairs
        gen_image = _root_of_quadratic(big, ctx.modulus)
        def embed(e, _big=big, _g=gen_image):
            return _big.elem(e.coeffs[0]) + _big.elem(e.coeffs[1]) * _g
    root = big.try_sqrt(embed(d))
    if root is None:
        # cannot happen: every base-field element is a square upstairs
        raise CompositeModulus("extension failed to contain the required root")
    return big, embed, root


def _root_of_quadratic(big: FieldCtx, modulus) -> FieldElem:
    """Canonical root in `big` of a monic quadratic over the prime field."""
    c0, c1, _ = modulus
    b = big.elem(c1)
    c = big.elem(c0)
    disc = b * b - 4 * c
    s = big.sqrt(disc)
    half = inv(big.elem(2))
    r1 = (-b + s) * half
    r2 = (-b - s) * half
    return min(r1, r2, key=lambda e: e.coeffs)


def least_primitive_root(p: int) -> int:
    """Smallest generator of the multiplicative group of F_p."""
    if p == 2:
        return 1
    factors = set()
    m = p - 1
    d = 2
    while d * d <= m:
        while m % d == 0:
            factors.add(d)
            m //= d
        d += 1
    if m > 1:
        factors.add(m)
    for g in range(2, p):
        if all(pow(g, (p - 1) // f, p) != 1 for f in factors):
            return g
    raise FieldError(f"no primitive root found mod {p}")
