import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orchardlab.field import FieldCtx
from orchardlab.groups import AffElem, aff_compose, aff_inverse
from orchardlab.incidence import affine_group_elements
from orchardlab.measures import (
    AffineGroupOps,
    DuplicateElements,
    EmptySupport,
    GroupMeasure,
    MeasureError,
    MixedGroups,
    NotASubgroup,
    PGLGroupOps,
    SupportBlowup,
    convolve,
    coset_mass,
    delta,
    flattening_report,
    is_symmetric,
    l1_norm,
    l2_norm_sq,
    linf_norm,
    load_measure,
    lp_norm_sq,
    reverse,
    save_measure,
    sym_power,
    sym_power_2exp,
    symmetrize,
    uniform,
)

F5 = FieldCtx(5)
F7 = FieldCtx(7)
G5 = AffineGroupOps(F5)
G7 = AffineGroupOps(F7)
ELS5 = sorted(affine_group_elements(F5), key=lambda g: g.key)
ELS7 = sorted(affine_group_elements(F7), key=lambda g: g.key)


def random_measure(group, elements, rng, max_support=8):
    support = rng.sample(elements, rng.randint(1, max_support))
    weights = [rng.randint(1, 20) for _ in support]
    total = sum(weights)
    return GroupMeasure(
        group, {g: Fraction(w, total) for g, w in zip(support, weights)}
    )


def test_uniform_examples():
    mu = uniform(G5, ELS5[:4])
    assert mu.total_mass() == 1
    assert l2_norm_sq(mu) == Fraction(1, 4)
    assert uniform(G5, [G5.identity()]) == delta(G5, G5.identity())
    with pytest.raises(EmptySupport):
        uniform(G5, [])
    with pytest.raises(DuplicateElements):
        uniform(G5, [G5.identity(), AffElem(F5, 0, 0, 1)])


def test_convolution_examples():
    mu = uniform(G5, ELS5[:6])
    assert convolve(delta(G5, G5.identity()), mu) == mu
    g = AffElem(F5, 1, 0, 1)  # order 5, so g^2 != g^-2
    mu_s = uniform(G5, [g, aff_inverse(g)])
    sigma = symmetrize(mu_s)
    g2 = aff_compose(g, g)
    assert sigma(G5.identity()) == Fraction(1, 2)
    assert sigma(g2) == Fraction(1, 4)
    assert sigma(aff_inverse(g2)) == Fraction(1, 4)
    with pytest.raises(MixedGroups):
        convolve(mu, uniform(G7, ELS7[:3]))


def test_reverse_and_norms():
    rng = random.Random(0)
    mu = random_measure(G5, ELS5, rng)
    assert reverse(reverse(mu)) == mu
    assert l2_norm_sq(reverse(mu)) == l2_norm_sq(mu)
    assert lp_norm_sq(mu, 1) == 1
    assert lp_norm_sq(delta(G5, G5.identity()), "inf") == 1
    assert linf_norm(uniform(G5, ELS5[:4])) == Fraction(1, 4)


@given(st.lists(st.integers(1, 50), min_size=1, max_size=6))
@settings(max_examples=60, deadline=None)
def test_convolution_mass_is_product(weights):
    total = sum(weights)
    masses = {
        g: Fraction(w, total) for g, w in zip(ELS5[: len(weights)], weights)
    }
    mu = GroupMeasure(G5, masses)
    conv = convolve(mu, mu)
    assert conv.total_mass() == 1
    assert l2_norm_sq(conv) <= l1_norm(mu) ** 2 * l2_norm_sq(mu)


def test_associativity_random():
    rng = random.Random(1)
    for _ in range(40):
        f = random_measure(G5, ELS5, rng)
        g = random_measure(G5, ELS5, rng)
        h = random_measure(G5, ELS5, rng)
        assert convolve(convolve(f, g), h) == convolve(f, convolve(g, h))


def test_sym_power_examples():
    assert sym_power(delta(G5, G5.identity()), 1) == delta(G5, G5.identity())
    g = AffElem(F5, 1, 0, 2)
    mu = uniform(G5, [g, aff_inverse(g)])
    sigma = symmetrize(mu)
    assert is_symmetric(sigma)
    assert sym_power(mu, 2) == convolve(sigma, sigma)
    assert sym_power_2exp(mu, 2) == sym_power(mu, 4)
    s2 = sym_power(mu, 2)
    assert is_symmetric(s2)
    support_product = {
        G5.multiply(a, b) for a in sigma.support() for b in sigma.support()
    }
    assert s2.support() <= support_product
    # a delta measure of any order symmetrizes to the identity atom
    d = delta(G5, AffElem(F5, 1, 1, 3))
    assert symmetrize(d) == delta(G5, G5.identity())


def test_support_blowup_guard():
    import orchardlab.measures as measures

    old_cap = measures.SUPPORT_CAP
    measures.SUPPORT_CAP = 10
    try:
        mu = uniform(G5, ELS5[:20])
        with pytest.raises(SupportBlowup):
            convolve(mu, mu)
    finally:
        measures.SUPPORT_CAP = old_cap


def test_coset_mass():
    H = [AffElem(F5, 0, 0, c) for c in (1, 2, 3, 4)]
    muH = uniform(G5, H)
    assert coset_mass(muH, G5.identity(), H) == 1
    assert coset_mass(muH, AffElem(F5, 1, 1, 1), H) == 0
    S = H[:2] + [AffElem(F5, 1, 0, 1), AffElem(F5, 2, 0, 1)]
    mu = uniform(G5, S)
    assert coset_mass(mu, G5.identity(), H) == Fraction(2, 4)
    with pytest.raises(NotASubgroup):
        coset_mass(mu, G5.identity(), H[:3])
    with pytest.raises(NotASubgroup):
        coset_mass(mu, G5.identity(), [AffElem(F5, 1, 0, 1)])


def test_flattening_uniform_subgroup_fixed_point():
    H = [AffElem(F5, 0, 0, c) for c in (1, 2, 3, 4)]
    muH = uniform(G5, H)
    rows = flattening_report(muH, 3)
    assert len(rows) == 4
    for row in rows:
        assert row.ratio_sq == 1
        assert row.l2_sq == Fraction(1, 4)
    # sigma^(*m) stays the uniform measure itself
    assert sym_power(muH, 5) == muH


def test_flattening_delta_of_finite_order():
    g = AffElem(F5, 1, 1, 2)
    rows = flattening_report(delta(G5, g), 2)
    for row in rows:
        assert row.l2_sq == 1 and row.linf == 1 and row.support == 1


def test_flattening_generic_generators_decay():
    rng = random.Random(7)
    mu = uniform(G7, [ELS7[13], ELS7[101]])
    rows = flattening_report(mu, 3)
    group_order = len(ELS7)
    for row in rows:
        assert row.ratio_sq <= 1
        assert row.l2_sq >= Fraction(1, group_order)
    assert rows[-1].l2_sq <= rows[0].l2_sq


def test_flattening_bounds_random_measures():
    rng = random.Random(3)
    for _ in range(30):
        mu = random_measure(G5, ELS5, rng, max_support=6)
        rows = flattening_report(mu, 1)
        for a, b in zip(rows, rows[1:]):
            assert b.l2_sq <= a.l2_sq
            # convolution-square bound, re-stated across rows
            assert b.linf <= a.l2_sq


def test_measure_file_roundtrip(tmp_path):
    rng = random.Random(9)
    mu = random_measure(G5, ELS5, rng)
    path = tmp_path / "m.measure"
    save_measure(path, mu)
    assert load_measure(path, G5) == mu


def test_pgl_group_ops_roundtrip(tmp_path):
    from orchardlab.groups import PGLElem

    ops = PGLGroupOps(F5)
    mu = GroupMeasure(
        ops,
        {
            ops.identity(): Fraction(1, 2),
            PGLElem(F5, [[1, 1, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]):
                Fraction(1, 2),
        },
    )
    conv = convolve(mu, mu)
    assert conv.total_mass() == 1
    path = tmp_path / "pgl.measure"
    save_measure(path, mu)
    assert load_measure(path, ops) == mu


def test_probability_validation():
    with pytest.raises(MeasureError):
        GroupMeasure(G5, {G5.identity(): Fraction(1, 2)}, is_probability=True)
    nonprob = GroupMeasure(G5, {G5.identity(): Fraction(1, 2)})
    assert not nonprob.is_probability
    with pytest.raises(MeasureError):
        sym_power(nonprob, 1)
