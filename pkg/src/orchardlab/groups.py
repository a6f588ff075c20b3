"""The two group-action encodings of collinear triples.

For three planes: central projection through an off-plane point gives a
bijection between two planes, and composing two such projections acts on
the first plane as an element (a, b, c) of the group G_a^2 x| G_m, with

    (a, b, c) * [0 : u1 : u2 : u3] = [0 : c*u1 : u2 + a*u1 : u3 + b*u1].

For a smooth quadric: a point x off the quadric induces the involution
sending y to the second intersection of the line x--y with the quadric;
its linear lift is the reflection fixing the hyperplane orthogonal to x.
"""

from __future__ import annotations

from typing import List, Optional, Tuple

from .field import FieldCtx, FieldElem, inv
from .projgeom import (
    NotOnSegreQuadric,
    ProjPlane,
    ProjPoint,
    QuadricForm,
    _det4,
    enumerate_space,
    line_through,
    meet_line_plane,
    on_quadric,
)


class GroupError(Exception):
    pass


class BadCenter(GroupError):
    pass


class PointOffPlane(GroupError):
    pass


class OnExcludedPlane(GroupError):
    pass


class NotApplicable(GroupError):
    pass


class PointOnQuadric(GroupError):
    pass


class PointOffQuadric(GroupError):
    pass


class CharTwo(GroupError):
    pass


class Singular(GroupError):
    pass


class IdentityElement(GroupError):
    pass


class NotOnQuadricGroup(GroupError):
    pass


# -- the affine group G_a^2 x| G_m ---------------------------------------

class AffElem:
    """Element (a, b, c) with c != 0 of G_a^2 x| G_m."""

    __slots__ = ("ctx", "a", "b", "c", "key")

    def __init__(self, ctx: FieldCtx, a, b, c):
        a, b, c = ctx.elem(a), ctx.elem(b), ctx.elem(c)
        if c.is_zero():
            raise GroupError("third component must be invertible")
        self.ctx = ctx
        self.a, self.b, self.c = a, b, c
        self.key = (a.coeffs, b.coeffs, c.coeffs)

    def __eq__(self, other):
        return (
            isinstance(other, AffElem)
            and self.ctx == other.ctx
            and self.key == other.key
        )

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"({self.a},{self.b},{self.c})"

    def is_identity(self) -> bool:
        return self.a.is_zero() and self.b.is_zero() and self.c.is_one()

    def text(self) -> str:
        return ";".join(e.text() for e in (self.a, self.b, self.c))

    @staticmethod
    def parse(ctx: FieldCtx, text: str) -> "AffElem":
        parts = text.split(";")
        if len(parts) != 3:
            raise GroupError(f"bad affine element text {text!r}")
        return AffElem(ctx, *(FieldElem.parse(ctx, s) for s in parts))

    @staticmethod
    def identity(ctx: FieldCtx) -> "AffElem":
        return AffElem(ctx, 0, 0, 1)


def aff_compose(g: AffElem, h: AffElem) -> AffElem:
    """Composition acting as g after h: (a'+a*c', b'+b*c', c*c').

    The law is fixed by requiring aff_act(aff_compose(g, h), p) ==
    aff_act(g, aff_act(h, p)) for all p; a test pins exactly that.
    """
    if g.ctx != h.ctx:
        raise GroupError("mixed contexts")
    return AffElem(
        g.ctx, h.a + g.a * h.c, h.b + g.b * h.c, g.c * h.c
    )


def aff_inverse(g: AffElem) -> AffElem:
    ci = inv(g.c)
    return AffElem(g.ctx, -g.a * ci, -g.b * ci, ci)


def aff_commutator(g: AffElem, h: AffElem) -> AffElem:
    """[g, h] = g^-1 h^-1 g h."""
    return aff_compose(
        aff_inverse(g), aff_compose(aff_inverse(h), aff_compose(g, h))
    )


def aff_act(g: AffElem, p: ProjPoint) -> ProjPoint:
    """The star action on the plane {x0 = 0}."""
    if p.ctx != g.ctx:
        raise GroupError("mixed contexts")
    if not p.coords[0].is_zero():
        raise PointOffPlane(f"{p} is not on x0 = 0")
    _, u1, u2, u3 = p.coords
    return ProjPoint(
        g.ctx, [g.ctx.zero(), g.c * u1, u2 + g.a * u1, u3 + g.b * u1]
    )


def aff_centralizer_member(h: AffElem, g: AffElem) -> bool:
    """Whether h = (x, y, z) centralizes g = (a, b, m), m != 1, via the
    closed form x = a(z-1)/(m-1), y = b(z-1)/(m-1)."""
    if h.ctx != g.ctx:
        raise GroupError("mixed contexts")
    if g.c.is_one():
        raise NotApplicable("closed form needs third component != 1")
    ratio = (h.c - 1) / (g.c - 1)
    return h.a == g.a * ratio and h.b == g.b * ratio


def commutator_formula_check(g: AffElem, h: AffElem) -> AffElem:
    """[g, h] for g = (a, b, 1); equals (a(c-1), b(c-1), 1) with c = h.c."""
    if not g.c.is_one():
        raise GroupError("first argument must lie in G_a^2")
    got = aff_commutator(g, h)
    want = AffElem(g.ctx, g.a * (h.c - 1), g.b * (h.c - 1), 1)
    if got != want:
        raise GroupError(f"commutator mismatch: {got} vs {want}")
    return got


class StdThreePlaneFrame:
    """The fixed frame P1 = {x0 = 0}, P2 = {x1 = 0}."""

    def __init__(self, ctx: FieldCtx):
        self.ctx = ctx
        self.P1 = ProjPlane(ctx, [1, 0, 0, 0])
        self.P2 = ProjPlane(ctx, [0, 1, 0, 0])

    def off_both(self, x: ProjPoint) -> bool:
        return not (self.P1.contains(x) or self.P2.contains(x))


def eta(x: ProjPoint, p_from: ProjPlane, p_to: ProjPlane, a: ProjPoint) -> ProjPoint:
    """Central projection through x from one plane to another."""
    if p_from.contains(x) or p_to.contains(x):
        raise BadCenter(f"center {x} lies on a plane")
    if not p_from.contains(a):
        raise PointOffPlane(f"{a} is not on the source plane")
    if p_to.contains(a):
        return a
    return meet_line_plane(line_through(a, x), p_to)


def gamma_xy(x: ProjPoint, y: ProjPoint) -> AffElem:
    """The element of G_a^2 x| G_m acting as eta_y^-1 o eta_x in the
    standard frame: (c'a - c, d'a - d, b'a) after writing x = [a:1:c:d]
    and y = [1:b':c':d']."""
    ctx = x.ctx
    frame = StdThreePlaneFrame(ctx)
    if not frame.off_both(x):
        raise OnExcludedPlane(f"{x} lies on an excluded plane")
    if not frame.off_both(y):
        raise OnExcludedPlane(f"{y} lies on an excluded plane")
    sx = inv(x.coords[1])
    a, c, d = x.coords[0] * sx, x.coords[2] * sx, x.coords[3] * sx
    sy = inv(y.coords[0])
    bp, cp, dp = y.coords[1] * sy, y.coords[2] * sy, y.coords[3] * sy
    return AffElem(ctx, cp * a - c, dp * a - d, bp * a)


def eta_composed(x: ProjPoint, y: ProjPoint, a: ProjPoint) -> ProjPoint:
    """Geometric oracle for gamma_xy: eta_y^-1(eta_x(a)) on P1."""
    frame = StdThreePlaneFrame(x.ctx)
    b = eta(x, frame.P1, frame.P2, a)
    return eta(y, frame.P2, frame.P1, b)


# -- projective linear elements ------------------------------------------

class PGLElem:
    """Invertible 4x4 matrix mod scalars; first nonzero entry scaled to 1."""

    __slots__ = ("ctx", "rows", "key")

    def __init__(self, ctx: FieldCtx, rows):
        rows = tuple(tuple(ctx.elem(x) for x in row) for row in rows)
        if len(rows) != 4 or any(len(r) != 4 for r in rows):
            raise GroupError("matrix must be 4x4")
        if _det4(ctx, rows).is_zero():
            raise Singular("matrix is singular")
        pivot = next(
            (x for row in rows for x in row if not x.is_zero()), None
        )
        if not pivot.is_one():
            s = inv(pivot)
            rows = tuple(tuple(x * s for x in row) for row in rows)
        self.ctx = ctx
        self.rows = rows
        self.key = tuple(tuple(x.coeffs for x in row) for row in rows)

    def __eq__(self, other):
        return (
            isinstance(other, PGLElem)
            and self.ctx == other.ctx
            and self.key == other.key
        )

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"PGL{self.rows}"

    def is_identity(self) -> bool:
        return all(
            self.rows[i][j].is_one() if i == j else self.rows[i][j].is_zero()
            for i in range(4)
            for j in range(4)
        )

    def __mul__(self, other: "PGLElem") -> "PGLElem":
        if self.ctx != other.ctx:
            raise GroupError("mixed contexts")
        zero = self.ctx.zero()
        rows = [
            [
                sum((self.rows[i][k] * other.rows[k][j] for k in range(4)), zero)
                for j in range(4)
            ]
            for i in range(4)
        ]
        return PGLElem(self.ctx, rows)

    def inverse(self) -> "PGLElem":
        ctx = self.ctx
        aug = [
            list(self.rows[i]) + [ctx.one() if i == j else ctx.zero() for j in range(4)]
            for i in range(4)
        ]
        for col in range(4):
            piv = next(r for r in range(col, 4) if not aug[r][col].is_zero())
            aug[col], aug[piv] = aug[piv], aug[col]
            s = inv(aug[col][col])
            aug[col] = [x * s for x in aug[col]]
            for r in range(4):
                if r != col and not aug[r][col].is_zero():
                    f = aug[r][col]
                    aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
        return PGLElem(ctx, [row[4:] for row in aug])

    def act(self, p: ProjPoint) -> ProjPoint:
        return p.apply_matrix(self.rows)

    def det(self) -> FieldElem:
        return _det4(self.ctx, self.rows)

    def text(self) -> str:
        return ";".join(x.text() for row in self.rows for x in row)

    @staticmethod
    def parse(ctx: FieldCtx, text: str) -> "PGLElem":
        parts = text.split(";")
        if len(parts) != 16:
            raise GroupError(f"bad matrix text {text!r}")
        vals = [FieldElem.parse(ctx, s) for s in parts]
        return PGLElem(ctx, [vals[i * 4:(i + 1) * 4] for i in range(4)])

    @staticmethod
    def identity(ctx: FieldCtx) -> "PGLElem":
        one, zero = ctx.one(), ctx.zero()
        return PGLElem(
            ctx, [[one if i == j else zero for j in range(4)] for i in range(4)]
        )


def pgl_canonical(ctx: FieldCtx, rows) -> PGLElem:
    return PGLElem(ctx, rows)


def is_orthogonal_mod_scalar(
    M: PGLElem, Q: QuadricForm
) -> Tuple[bool, Optional[FieldElem]]:
    """Test M^T B M = lambda * B; returns the witness lambda when true."""
    if M.ctx != Q.ctx:
        raise GroupError("mixed contexts")
    ctx = M.ctx
    zero = ctx.zero()
    B = Q.B
    prod = [
        [
            sum(
                (M.rows[k][i] * B[k][l] * M.rows[l][j] for k in range(4) for l in range(4)),
                zero,
            )
            for j in range(4)
        ]
        for i in range(4)
    ]
    lam = None
    for i in range(4):
        for j in range(4):
            if not B[i][j].is_zero():
                cand = prod[i][j] / B[i][j]
                if lam is None:
                    lam = cand
                elif cand != lam:
                    return False, None
            elif not prod[i][j].is_zero():
                return False, None
    if lam is None or lam.is_zero():
        return False, None
    return True, lam


def reflection_matrix(x: ProjPoint, Q: QuadricForm):
    """Rows of the exact linear involution v -> v - 2 <v, x>/<x, x> x in
    the bilinear form of Q; it negates the lift of x and fixes its
    orthogonal hyperplane, and satisfies M^T B M = B on the nose."""
    ctx = x.ctx
    if ctx.p == 2:
        raise CharTwo("reflections need characteristic != 2")
    if Q.ctx != ctx:
        raise GroupError("mixed contexts")
    vx = x.coords
    qx = Q.bilinear(vx, vx)
    if qx.is_zero():
        raise PointOnQuadric(f"{x} lies on the quadric")
    two_over = ctx.elem(2) / qx
    images = []
    for i in range(4):
        basis = [ctx.one() if j == i else ctx.zero() for j in range(4)]
        coeff = two_over * Q.bilinear(basis, vx)
        images.append([basis[j] - coeff * vx[j] for j in range(4)])
    # images are of basis vectors, hence the columns; transpose to rows
    return [[images[j][i] for j in range(4)] for i in range(4)]


def reflection_lift(x: ProjPoint, Q: QuadricForm) -> PGLElem:
    """reflection_matrix as a canonical projective element."""
    return PGLElem(x.ctx, reflection_matrix(x, Q))


def gamma_x(x: ProjPoint, y: ProjPoint, Q: QuadricForm) -> ProjPoint:
    """Second intersection of the line x--y with the quadric.

    Along v_y + s*v_x the form evaluates to s*(2<x,y> + s<x,x>), so the
    two roots are s = 0 (y itself) and s = -2<x,y>/<x,x>; a vanishing
    cross term means the tangent case and y is returned.
    """
    ctx = x.ctx
    if ctx.p == 2:
        raise CharTwo("quadric involutions need characteristic != 2")
    qx = Q.bilinear(x.coords, x.coords)
    if qx.is_zero():
        raise PointOnQuadric(f"{x} lies on the quadric")
    if not on_quadric(y, Q):
        raise PointOffQuadric(f"{y} is not on the quadric")
    cross = Q.bilinear(x.coords, y.coords)
    if cross.is_zero():
        return y
    s = -(ctx.elem(2) * cross) / qx
    return ProjPoint(ctx, [a + s * b for a, b in zip(y.coords, x.coords)])


# -- the Segre map --------------------------------------------------------

def segre(u: ProjPoint, w: ProjPoint) -> ProjPoint:
    """([x:y], [w:z]) -> [xw : xz : yw : yz], landing on x1*x4 = x2*x3."""
    if u.ctx != w.ctx:
        raise GroupError("mixed contexts")
    if u.dim != 1 or w.dim != 1:
        raise GroupError("both factors must be points of P^1")
    x, y = u.coords
    a, b = w.coords
    return ProjPoint(u.ctx, [x * a, x * b, y * a, y * b])


def segre_inverse(p: ProjPoint) -> Tuple[ProjPoint, ProjPoint]:
    """Factor a point of the quadric x1*x4 = x2*x3 through P^1 x P^1."""
    ctx = p.ctx
    c1, c2, c3, c4 = p.coords
    if c1 * c4 != c2 * c3:
        raise NotOnSegreQuadric(f"{p} does not satisfy x1*x4 = x2*x3")
    if not (c1.is_zero() and c3.is_zero()):
        first = ProjPoint(ctx, [c1, c3])
    else:
        first = ProjPoint(ctx, [c2, c4])
    if not (c1.is_zero() and c2.is_zero()):
        second = ProjPoint(ctx, [c1, c2])
    else:
        second = ProjPoint(ctx, [c3, c4])
    return first, second


def segre_quadric_points(ctx: FieldCtx) -> List[ProjPoint]:
    """All (q+1)^2 points of the Segre quadric, via the parametrization."""
    line = enumerate_space(ctx, 1)
    return [segre(u, w) for u in line for w in line]


# -- closure of generating sets -------------------------------------------

class ClosureCapExceeded(GroupError):
    def __init__(self, partial):
        super().__init__(f"closure truncated at {len(partial)} elements")
        self.partial = partial


def mulclose(gens, compose, identity, cap: int = 10**6, strict: bool = False):
    """Close a generating set under the given composition.

    Returns (elements, truncated); with strict=True a truncation raises
    ClosureCapExceeded instead.
    """
    els = {identity}
    els.update(gens)
    frontier = list(els)
    while frontier:
        new = []
        for g in gens:
            for h in frontier:
                c = compose(g, h)
                if c not in els:
                    els.add(c)
                    new.append(c)
                    if len(els) > cap:
                        if strict:
                            raise ClosureCapExceeded(els)
                        return els, True
        frontier = new
    return els, False
