"""Finitely supported exact-rational measures on group elements.

Masses are fractions.Fraction, so every norm, convolution value and
inequality in this module (and in the decomposition built on top of it)
is decided exactly; floats appear only in human-readable report columns.
L^2 quantities are always handled squared to stay rational.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional

from .field import FieldCtx
from .groups import AffElem, PGLElem, aff_compose, aff_inverse

SUPPORT_CAP = 10**6


class MeasureError(Exception):
    pass


class EmptySupport(MeasureError):
    pass


class DuplicateElements(MeasureError):
    pass


class MixedGroups(MeasureError):
    pass


class SupportBlowup(MeasureError):
    pass


class NotASubgroup(MeasureError):
    pass


class GroupOps:
    """Multiplication structure for measure supports.

    Elements must be hashable canonical values; sort_key gives the
    deterministic iteration order used in reports.
    """

    name = "opaque"

    def identity(self):
        raise NotImplementedError

    def multiply(self, g, h):
        raise NotImplementedError

    def inverse(self, g):
        raise NotImplementedError

    def sort_key(self, g):
        return repr(g)

    def element_text(self, g) -> str:
        return repr(g)

    def parse_element(self, text: str):
        raise NotImplementedError(f"{self.name} group cannot parse elements")

    def __eq__(self, other):
        return type(self) is type(other) and self.__dict__ == other.__dict__

    def __hash__(self):
        return hash((type(self).__name__, tuple(sorted(self.__dict__))))


class AffineGroupOps(GroupOps):
    """G_a^2 x| G_m over a fixed field."""

    name = "affine"

    def __init__(self, ctx: FieldCtx):
        self.ctx = ctx

    def identity(self):
        return AffElem.identity(self.ctx)

    def multiply(self, g, h):
        return aff_compose(g, h)

    def inverse(self, g):
        return aff_inverse(g)

    def sort_key(self, g):
        return g.key

    def element_text(self, g):
        return g.text()

    def parse_element(self, text):
        return AffElem.parse(self.ctx, text)


class PGLGroupOps(GroupOps):
    """PGL_4 over a fixed field, elements canonicalized mod scalars."""

    name = "pgl4"

    def __init__(self, ctx: FieldCtx):
        self.ctx = ctx

    def identity(self):
        return PGLElem.identity(self.ctx)

    def multiply(self, g, h):
        return g * h

    def inverse(self, g):
        return g.inverse()

    def sort_key(self, g):
        return g.key

    def element_text(self, g):
        return g.text()

    def parse_element(self, text):
        return PGLElem.parse(self.ctx, text)


class GroupMeasure:
    """A finitely supported measure with positive rational masses."""

    __slots__ = ("group", "masses", "is_probability")

    def __init__(self, group: GroupOps, masses: Dict, is_probability=None):
        cleaned = {}
        for g, m in masses.items():
            m = Fraction(m)
            if m < 0:
                raise MeasureError("masses must be positive")
            if m:
                cleaned[g] = m
        self.group = group
        self.masses = cleaned
        total = sum(cleaned.values(), Fraction(0))
        if is_probability is None:
            is_probability = total == 1
        elif is_probability and total != 1:
            raise MeasureError(f"total mass {total} != 1")
        self.is_probability = is_probability

    def __eq__(self, other):
        return (
            isinstance(other, GroupMeasure)
            and self.group == other.group
            and self.masses == other.masses
        )

    def __call__(self, g) -> Fraction:
        return self.masses.get(g, Fraction(0))

    def support(self):
        return set(self.masses)

    def support_sorted(self):
        return sorted(self.masses, key=self.group.sort_key)

    def total_mass(self) -> Fraction:
        return sum(self.masses.values(), Fraction(0))

    def __len__(self):
        return len(self.masses)

    def __repr__(self):
        return f"GroupMeasure({len(self.masses)} atoms, mass {self.total_mass()})"


def uniform(group: GroupOps, S: Iterable) -> GroupMeasure:
    """The probability measure with mass 1/|S| on each element of S."""
    elements = list(S)
    if not elements:
        raise EmptySupport("uniform measure needs a nonempty set")
    if len(set(elements)) != len(elements):
        raise DuplicateElements("set contains duplicate canonical elements")
    w = Fraction(1, len(elements))
    return GroupMeasure(group, {g: w for g in elements})


def delta(group: GroupOps, g) -> GroupMeasure:
    return GroupMeasure(group, {g: Fraction(1)})


def convolve(f: GroupMeasure, h: GroupMeasure) -> GroupMeasure:
    """(f*h)(x) = sum_y f(y) h(y^-1 x), computed exactly."""
    if f.group != h.group:
        raise MixedGroups("convolution across different groups")
    group = f.group
    out: Dict = {}
    for y, fy in f.masses.items():
        for z, hz in h.masses.items():
            x = group.multiply(y, z)
            out[x] = out.get(x, Fraction(0)) + fy * hz
            if len(out) > SUPPORT_CAP:
                raise SupportBlowup("convolution support exceeds the cap")
    return GroupMeasure(
        group, out, is_probability=f.is_probability and h.is_probability
    )


def reverse(mu: GroupMeasure) -> GroupMeasure:
    """mu~(g) = mu(g^-1)."""
    group = mu.group
    return GroupMeasure(
        group,
        {group.inverse(g): m for g, m in mu.masses.items()},
        is_probability=mu.is_probability,
    )


def l1_norm(mu: GroupMeasure) -> Fraction:
    return mu.total_mass()


def l2_norm_sq(mu: GroupMeasure) -> Fraction:
    return sum((m * m for m in mu.masses.values()), Fraction(0))


def linf_norm(mu: GroupMeasure) -> Fraction:
    return max(mu.masses.values(), default=Fraction(0))


def lp_norm_sq(mu: GroupMeasure, p) -> Fraction:
    """L^1 and L^inf as themselves, L^2 as the squared norm."""
    if p == 1:
        return l1_norm(mu)
    if p == 2:
        return l2_norm_sq(mu)
    if p in ("inf", float("inf")):
        return linf_norm(mu)
    raise ValueError("only p in {1, 2, inf} are supported")


def symmetrize(mu: GroupMeasure) -> GroupMeasure:
    """sigma = mu~ * mu; symmetric whenever mu is a measure."""
    return convolve(reverse(mu), mu)


def sym_power(mu: GroupMeasure, m: int) -> GroupMeasure:
    """sigma^(*m) for sigma = mu~ * mu."""
    if m < 1:
        raise ValueError("power must be >= 1")
    if not mu.is_probability:
        raise MeasureError("symmetric powers are defined for probability measures")
    sigma = symmetrize(mu)
    acc = sigma
    for _ in range(m - 1):
        acc = convolve(acc, sigma)
    return acc


def sym_power_2exp(mu: GroupMeasure, m: int) -> GroupMeasure:
    """sigma^(*2^m) by repeated squaring; sigma symmetric makes the
    doubling recursion agree with plain convolution powers."""
    if m < 0:
        raise ValueError("exponent must be >= 0")
    acc = symmetrize(mu)
    for _ in range(m):
        acc = convolve(acc, acc)
    return acc


def is_symmetric(mu: GroupMeasure) -> bool:
    group = mu.group
    return all(mu(group.inverse(g)) == m for g, m in mu.masses.items())


def verify_subgroup(group: GroupOps, H: Iterable) -> List:
    """Check closure under product and inverse plus the identity."""
    elements = list(H)
    hs = set(elements)
    if len(hs) != len(elements):
        raise DuplicateElements("subgroup given with duplicates")
    if group.identity() not in hs:
        raise NotASubgroup("identity missing")
    for g in elements:
        if group.inverse(g) not in hs:
            raise NotASubgroup(f"inverse of {g} missing")
        for h in elements:
            if group.multiply(g, h) not in hs:
                raise NotASubgroup(f"product {g}*{h} missing")
    return elements


def coset_mass(mu: GroupMeasure, g, H: Iterable) -> Fraction:
    """mu(gH) for an explicitly verified finite subgroup H."""
    elements = verify_subgroup(mu.group, H)
    group = mu.group
    return sum((mu(group.multiply(g, h)) for h in elements), Fraction(0))


@dataclass
class FlatteningRow:
    m: int                      # power index: the measure is sigma^(*2^m)
    support: int
    l2_sq: Fraction
    linf: Fraction
    ratio_sq: Optional[Fraction]   # l2_sq of the next row over this row


def flattening_report(mu: GroupMeasure, m_max: int) -> List[FlatteningRow]:
    """Exact row per m <= m_max for sigma^(*2^m).

    Each step checks the convolution-square bound
    ||sigma^(*2^(m+1))||_inf <= ||sigma^(*2^m)||_2^2, Young's bound
    ||f*f||_2^2 <= ||f||_1^2 ||f||_2^2, and monotone non-increase of the
    squared L^2 norm; violations raise because they cannot happen.
    """
    if m_max < 0:
        raise ValueError("m_max must be >= 0")
    rows: List[FlatteningRow] = []
    current = symmetrize(mu)
    powers = [current]
    for _ in range(m_max + 1):
        powers.append(convolve(powers[-1], powers[-1]))
    for m in range(m_max + 1):
        cur, nxt = powers[m], powers[m + 1]
        l2_cur = l2_norm_sq(cur)
        l2_nxt = l2_norm_sq(nxt)
        row = FlatteningRow(
            m=m,
            support=len(cur),
            l2_sq=l2_cur,
            linf=linf_norm(cur),
            ratio_sq=l2_nxt / l2_cur,
        )
        if linf_norm(nxt) > l2_cur:
            raise MeasureError("convolution-square bound violated")
        if l2_nxt > l1_norm(cur) ** 2 * l2_cur:
            raise MeasureError("Young bound violated")
        if l2_nxt > l2_cur:
            raise MeasureError("squared L2 norm increased under convolution")
        rows.append(row)
    return rows


# -- measure files ----------------------------------------------------------

def save_measure(path, mu: GroupMeasure) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for g in mu.support_sorted():
            m = mu.masses[g]
            fh.write(f"{mu.group.element_text(g)} {m.numerator}/{m.denominator}\n")


def load_measure(path, group: GroupOps) -> GroupMeasure:
    masses: Dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                elem_text, mass_text = line.rsplit(" ", 1)
                g = group.parse_element(elem_text.strip())
                m = Fraction(mass_text)
            except (ValueError, MeasureError) as exc:
                raise MeasureError(f"{path}:{lineno}: {exc}") from exc
            if g in masses:
                raise DuplicateElements(f"{path}:{lineno}: repeated atom")
            masses[g] = m
    return GroupMeasure(group, masses)
