"""Constructive measure decomposition with explicit constants, plus
greedy covering numbers and approximate-group checks.

A probability measure nu splits against the thresholds M ||nu||_2^2 and
delta ||nu||_2^2, where M = 2^4 K and delta = 1/M^2:

    nu_1 = nu restricted to {nu >= M ||nu||_2^2}      (heavy atoms)
    nu_2 = nu restricted to {nu <= delta ||nu||_2^2}  (diffuse part)
    nu_str = nu - nu_1 - nu_2                         (structured part)

All inequality checks are exact rational comparisons; conditional ones
are gated on the linear-form hypothesis ||nu*nu||_2 >= K^-1 ||nu||_2.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Optional, Set

from .measures import (
    GroupMeasure,
    GroupOps,
    MeasureError,
    convolve,
    l1_norm,
    l2_norm_sq,
)


@dataclass
class InequalityCheck:
    name: str
    lhs: Fraction
    relation: str                  # "<=" or ">="
    rhs: Fraction
    passed: bool
    hypothesis_met: Optional[bool]  # None for unconditional checks

    @staticmethod
    def compare(name, lhs, relation, rhs, hypothesis_met=None) -> "InequalityCheck":
        lhs, rhs = Fraction(lhs), Fraction(rhs)
        ok = lhs <= rhs if relation == "<=" else lhs >= rhs
        return InequalityCheck(name, lhs, relation, rhs, ok, hypothesis_met)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": f"{self.lhs.numerator}/{self.lhs.denominator}",
            "lhs_float": float(self.lhs),
            "relation": self.relation,
            "rhs": f"{self.rhs.numerator}/{self.rhs.denominator}",
            "rhs_float": float(self.rhs),
            "pass": self.passed,
            "hypothesis_met": self.hypothesis_met,
        }


@dataclass
class BsgDecomposition:
    K: Fraction
    M: Fraction
    delta: Fraction
    nu: GroupMeasure
    nu1: GroupMeasure
    nu2: GroupMeasure
    nu_str: GroupMeasure
    structured_support: Set     # A = supp(nu_str)
    boundary_atoms: Set         # atoms sitting exactly on a threshold
    l2_sq: Fraction             # ||nu||_2^2

    def reconstruction_exact(self) -> bool:
        for g in self.nu.support():
            total = self.nu1(g) + self.nu2(g) + self.nu_str(g)
            if total != self.nu(g):
                return False
        return True


def decompose(nu: GroupMeasure, K) -> BsgDecomposition:
    """Split nu at the two thresholds; K >= 1 may be any rational."""
    K = Fraction(K)
    if K < 1:
        raise ValueError("K must be at least 1")
    if not nu.is_probability:
        raise MeasureError("decomposition expects a probability measure")
    M = 16 * K
    delta = 1 / (M * M)
    l2 = l2_norm_sq(nu)
    hi = M * l2
    lo = delta * l2
    heavy, diffuse, structured = {}, {}, {}
    boundary = set()
    for g, m in nu.masses.items():
        if m >= hi:
            heavy[g] = m
            if m == hi:
                boundary.add(g)
        elif m <= lo:
            diffuse[g] = m
            if m == lo:
                boundary.add(g)
        else:
            structured[g] = m
    group = nu.group
    return BsgDecomposition(
        K=K,
        M=M,
        delta=delta,
        nu=nu,
        nu1=GroupMeasure(group, heavy, is_probability=False),
        nu2=GroupMeasure(group, diffuse, is_probability=False),
        nu_str=GroupMeasure(group, structured, is_probability=False),
        structured_support=set(structured),
        boundary_atoms=boundary,
        l2_sq=l2,
    )


def restrict_open_band(nu: GroupMeasure, K) -> GroupMeasure:
    """nu restricted to the strict band
    (1/(2^8 K^2)) ||nu||_2^2 < nu < 2^4 K ||nu||_2^2; this coincides with
    the structured part because the heavy cut is non-strict at the top
    and the diffuse cut non-strict at the bottom."""
    K = Fraction(K)
    l2 = l2_norm_sq(nu)
    lo = l2 / (256 * K * K)
    hi = 16 * K * l2
    kept = {g: m for g, m in nu.masses.items() if lo < m < hi}
    return GroupMeasure(nu.group, kept, is_probability=False)


def verify_decomposition(nu: GroupMeasure, K) -> List[InequalityCheck]:
    """Exact evaluation of the decomposition inequalities.

    Unconditional: the heavy part is light in L^1, the diffuse part light
    in squared L^2, pointwise reconstruction, the strict-band measure
    equals the structured part, the upper bound |A| ||nu||_2^2 <= 2^16 K^4
    and the pointwise lower bound against the uniform measure on A.

    Conditional on ||nu*nu||_2 >= K^-1 ||nu||_2 (key `hyp_lin`; the
    squared-norm variant is also reported as `hyp_sq`): the structured
    self-convolution lower bound, the lower half of the |A| sandwich and
    the pointwise upper bound.
    """
    dec = decompose(nu, K)
    K = dec.K
    checks: List[InequalityCheck] = []

    conv = convolve(nu, nu)
    conv_l2 = l2_norm_sq(conv)
    l2 = dec.l2_sq
    # hypothesis forms, both reported; the linear one gates the rest
    hyp_lin = conv_l2 >= l2 / (K * K)
    hyp_sq = conv_l2 >= (l2 * l2) / (K * K)
    checks.append(
        InequalityCheck("hyp_lin", conv_l2, ">=", l2 / (K * K), hyp_lin, None)
    )
    checks.append(
        InequalityCheck("hyp_sq", conv_l2, ">=", (l2 * l2) / (K * K), hyp_sq, None)
    )

    checks.append(
        InequalityCheck.compare("nu1_l1", l1_norm(dec.nu1), "<=", Fraction(1) / dec.M)
    )
    checks.append(
        InequalityCheck.compare(
            "nu2_l2_sq", l2_norm_sq(dec.nu2), "<=", dec.delta * l2
        )
    )
    recon = dec.reconstruction_exact()
    checks.append(
        InequalityCheck("reconstruction", Fraction(recon), "==", Fraction(1), recon, None)
    )
    band_equal = restrict_open_band(nu, K) == dec.nu_str
    checks.append(
        InequalityCheck(
            "strict_band_eq_structured",
            Fraction(band_equal),
            "==",
            Fraction(1),
            band_equal,
            None,
        )
    )

    A = dec.structured_support
    size_stat = len(A) * l2
    checks.append(
        InequalityCheck.compare("support_stat_upper", size_stat, "<=", (2**16) * K**4)
    )
    checks.append(
        InequalityCheck.compare(
            "support_stat_lower",
            size_stat,
            ">=",
            Fraction(1, 2**10) / K**4,
            hypothesis_met=hyp_lin,
        )
    )

    if A:
        inv_a = Fraction(1, len(A))
        worst_lower = min(inv_a / nu(g) for g in A)   # min over A of mu_A/nu
        worst_upper = max(inv_a / nu(g) for g in A)
        checks.append(
            InequalityCheck.compare(
                "pointwise_lower", Fraction(1, 2**20) / K**5, "<=", worst_lower
            )
        )
        checks.append(
            InequalityCheck.compare(
                "pointwise_upper",
                worst_upper,
                "<=",
                (2**18) * K**6,
                hypothesis_met=hyp_lin,
            )
        )
    str_conv = convolve(dec.nu_str, dec.nu_str)
    checks.append(
        InequalityCheck.compare(
            "str_conv_lower",
            l2_norm_sq(str_conv),
            ">=",
            l2 / (4 * K * K),
            hypothesis_met=hyp_lin,
        )
    )
    return checks


def all_pass(checks: Iterable[InequalityCheck]) -> bool:
    """True when every applicable check passes; rows whose hypothesis is
    not met are informational only, as are the hypothesis rows themselves."""
    return all(
        c.passed
        for c in checks
        if not c.name.startswith("hyp_") and c.hypothesis_met is not False
    )


# -- greedy covering and approximate groups --------------------------------

def covering_number(group: GroupOps, A: Iterable, B: Iterable) -> int:
    """Greedy upper bound for the number of left translates of B needed
    to cover A; candidate centers range over A B^-1 and ties break on the
    least sort key.  Always at least ceil(|A|/|B|)."""
    A = set(A)
    B = list(set(B))
    if not B:
        raise ValueError("covering set must be nonempty")
    if not A:
        return 0
    b_inv = [group.inverse(b) for b in B]
    centers = sorted(
        {group.multiply(a, bi) for a in A for bi in b_inv}, key=group.sort_key
    )
    translates = {
        x: frozenset(group.multiply(x, b) for b in B) for x in centers
    }
    uncovered = set(A)
    used = 0
    while uncovered:
        best_x = None
        best_gain = -1
        for x in centers:
            gain = len(uncovered & translates[x])
            if gain > best_gain:
                best_gain = gain
                best_x = x
        if best_gain <= 0:
            raise MeasureError("greedy covering stalled")  # cannot happen
        uncovered -= translates[best_x]
        used += 1
    return used


@dataclass
class ApproxGroupReport:
    is_approximate: bool
    reason: str
    witness: Optional[object]
    covering: Optional[int]


def is_approximate_group(group: GroupOps, H: Iterable, K: int) -> ApproxGroupReport:
    """Whether H is a K-approximate group: symmetric, contains the
    identity, and H*H is covered by at most K left translates of H.

    The covering test is the greedy upper bound, so a positive answer is
    sound while a negative one may be spurious (flagged greedy-fail).
    """
    H = list(set(H))
    hs = set(H)
    if group.identity() not in hs:
        return ApproxGroupReport(False, "identity-missing", group.identity(), None)
    for h in H:
        if group.inverse(h) not in hs:
            return ApproxGroupReport(False, "not-symmetric", h, None)
    HH = {group.multiply(g, h) for g in H for h in H}
    cover = covering_number(group, HH, H)
    if cover <= K:
        return ApproxGroupReport(True, "covered", None, cover)
    return ApproxGroupReport(False, "greedy-fail", None, cover)
