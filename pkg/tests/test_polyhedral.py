import itertools
import random
from fractions import Fraction

import pytest

from divfan.errors import MathError
from divfan.lattice import SplitSequence, dot
from divfan.polyhedral import (
    EMPTY,
    MINUS_INF,
    Cone,
    Fan,
    Polyhedron,
    chambers,
    common_refinement,
    covers,
    fiber_slice,
    image_fan,
    is_empty,
    is_face,
    min_eval,
    minkowski_sum,
    preimage_fan,
    tail_cone,
)

# ---------------------------------------------------------------- cones


def grid(d, lo=-3, hi=3):
    return itertools.product(range(lo, hi + 1), repeat=d)


def test_dual_description_quarter_plane():
    c = Cone.from_generators([(1, 0), (1, 1)])
    # facets y >= 0 and x - y >= 0
    assert set(c.ineqs) == {(0, 1), (1, -1)}
    assert c.eqs == ()
    # both descriptions agree on a grid of points
    for pt in grid(2):
        in_v = any(
            all(
                Fraction(pt[k]) == a * 1 + b * 1 if False else True
                for k in range(2)
            )
            for a in range(1)
            for b in range(1)
        )
        # oracle: x >= y >= 0 describes cone((1,0),(1,1))
        oracle = pt[0] >= pt[1] >= 0
        assert c.contains(pt) == oracle


def test_full_line_rank1():
    c = Cone.from_generators([(1,), (-1,)])
    assert c.ineqs == ()
    assert not c.is_pointed()
    assert c.lineality == ((1,),)
    assert c.rays == ()


def test_gl2_valuation_cone_halfplane():
    # {w1 E1 + w2 E2 : w1 >= w2}: from the facet functional (1,-1)
    v = Cone.from_inequalities([(1, -1)], 2)
    expect = Cone.from_generators([(1, 1), (-1, -1), (1, -1)])
    assert v == expect
    assert not v.is_pointed()
    for pt in grid(2):
        assert v.contains(pt) == (pt[0] >= pt[1])


def test_cone_roundtrip_random_membership():
    rng = random.Random(11)
    for _ in range(40):
        d = rng.choice([1, 2, 3])
        gens = [
            tuple(rng.randrange(-3, 4) for _ in range(d))
            for _ in range(rng.randrange(1, 4))
        ]
        gens = [g for g in gens if any(g)]
        if not gens:
            continue
        c = Cone.from_generators(gens, d=d)
        back = Cone.from_generators(list(c.rays), d=d, lineality=list(c.lineality))
        assert back == c
        # H-rep agrees with the obvious V-side membership on small combos
        for coeffs in itertools.product(range(0, 3), repeat=len(gens)):
            pt = tuple(sum(c0 * g[k] for c0, g in zip(coeffs, gens)) for k in range(d))
            assert c.contains(pt)


def test_zero_cone_and_rank0():
    z = Cone.from_generators([], d=2)
    assert z.dim() == 0
    assert z.contains((0, 0))
    assert not z.contains((1, 0))
    r0 = Cone.from_generators([], d=0)
    assert r0.contains(())
    assert r0.dim() == 0


def test_cone_faces_and_face_of():
    c = Cone.from_generators([(1, 0), (0, 1)])
    faces = c.faces()
    keys = {f.key() for f in faces}
    assert len(keys) == 4  # cone, two rays, origin
    ray = Cone.from_generators([(1, 0)], d=2)
    assert ray.face_of(c)
    inner = Cone.from_generators([(1, 1)], d=2)
    assert inner.is_subset(c) and not inner.face_of(c)


# ------------------------------------------------------------ polyhedra


def interval(a, b):
    return Polyhedron.from_generators([(Fraction(a),), (Fraction(b),)])


def ray_from(a):
    return Polyhedron.from_generators([(Fraction(a),)], rays=[(1,)])


def ray_to(a):
    return Polyhedron.from_generators([(Fraction(a),)], rays=[(-1,)])


def test_tail_cone_examples():
    assert tail_cone(interval(0, 1)) == Cone.from_generators([], d=1)
    assert tail_cone(ray_from(1)) == Cone.from_generators([(1,)])
    assert tail_cone(Polyhedron.point((5,))) == Cone.from_generators([], d=1)
    with pytest.raises(MathError):
        tail_cone(EMPTY)


def test_minkowski_examples():
    assert minkowski_sum(interval(0, 1), ray_from(0)) == ray_from(0)
    assert minkowski_sum(Polyhedron.point((-1,)), ray_from(1)) == ray_from(0)
    assert minkowski_sum(EMPTY, interval(0, 1)) is EMPTY


def test_minkowski_tail_semigroup():
    rng = random.Random(5)
    for _ in range(30):
        verts1 = [(Fraction(rng.randrange(-4, 5)), Fraction(rng.randrange(-4, 5)))
                  for _ in range(rng.randrange(1, 3))]
        verts2 = [(Fraction(rng.randrange(-4, 5)), Fraction(rng.randrange(-4, 5)))
                  for _ in range(rng.randrange(1, 3))]
        rays = [(1, 0), (1, 1)]
        p = Polyhedron.from_generators(verts1, rays=rays)
        q = Polyhedron.from_generators(verts2, rays=rays)
        s = minkowski_sum(p, q)
        assert tail_cone(s) == tail_cone(p)


def brute_faces_1d(p):
    """Faces of a 1-dimensional polyhedron by direct enumeration."""
    faces = [EMPTY, p]
    for v in p.vertices:
        faces.append(Polyhedron.point(v))
    return faces


def test_is_face_examples():
    assert is_face(Polyhedron.point((0,)), interval(0, 1))
    # oracle: the faces of [0, oo) are {0} and itself (plus EMPTY)
    faces = brute_faces_1d(ray_from(0))
    assert not any(f != EMPTY and not is_empty(f) and f == interval(0, 1) for f in faces)
    assert not is_face(interval(0, 1), ray_from(0))
    assert is_face(interval(0, 1), interval(0, 1))
    # tail-cone face relation {0} < [0, oo)
    assert is_face(Polyhedron.point((0,)), ray_from(0))


def test_is_face_2d():
    square = Polyhedron.from_generators(
        [(0, 0), (1, 0), (0, 1), (1, 1)])
    edge = Polyhedron.from_generators([(0, 0), (1, 0)])
    mid = Polyhedron.from_generators([(Fraction(1, 2), 0), (1, 0)])
    inner = Polyhedron.from_generators([(Fraction(1, 2), Fraction(1, 2))])
    assert is_face(edge, square)
    assert not is_face(mid, square)
    assert not is_face(inner, square)


def test_min_eval_examples():
    assert min_eval(ray_from(1), (1,)) == 1
    assert min_eval(interval(0, 1), (-1,)) == -1
    assert min_eval(interval(0, 1), (0,)) == 0
    assert min_eval(ray_from(1), (-1,)) is MINUS_INF
    with pytest.raises(MathError):
        min_eval(EMPTY, (1,))


def test_min_eval_superadditive():
    rng = random.Random(17)
    for _ in range(200):
        d = rng.choice([1, 2])
        verts = [tuple(Fraction(rng.randrange(-5, 6), rng.choice([1, 2])) for _ in range(d))
                 for _ in range(rng.randrange(1, 4))]
        nrays = rng.randrange(0, 3)
        rays = [tuple(rng.randrange(-2, 3) for _ in range(d)) for _ in range(nrays)]
        rays = [r for r in rays if any(r)]
        p = Polyhedron.from_generators(verts, rays=rays, d=d)
        u = tuple(rng.randrange(-3, 4) for _ in range(d))
        v = tuple(rng.randrange(-3, 4) for _ in range(d))
        mu, mv = p.min_eval(u), p.min_eval(v)
        muv = p.min_eval(tuple(a + b for a, b in zip(u, v)))
        if mu is MINUS_INF or mv is MINUS_INF:
            continue
        assert muv is not MINUS_INF or True
        if muv is not MINUS_INF:
            assert mu + mv <= muv


# ------------------------------------------------------------ fiber slices

GL2_SPLIT = SplitSequence(p=[[1, -1]], q=[[0, -1]])


def test_fiber_slice_gl2_special_fiber():
    c = Cone.from_generators([(1, 0), (1, 1)])
    f0 = fiber_slice(c, GL2_SPLIT, (0,))
    # q(C ∩ ker p) = (-oo, 0]
    assert f0 == ray_to(0)


def test_fiber_slice_gl2_generic_fiber():
    c = Cone.from_generators([(1, 0), (1, 1)])
    f1 = fiber_slice(c, GL2_SPLIT, (1,))
    # oracle by direct parametrization: x = (1+t, t), t >= 0, q = -t
    assert f1 == ray_to(0)
    c2 = Cone.from_generators([(-1, -1), (1, 0)])
    f2 = fiber_slice(c2, GL2_SPLIT, (1,))
    # x = (1 - l, -l), l >= 0, q = l  ->  [0, oo)
    assert f2 == ray_from(0)


def test_fiber_slice_empty_fiber():
    c = Cone.from_generators([(1, 0), (1, 1)])
    # p(C) = [0, oo) does not contain -1
    assert fiber_slice(c, GL2_SPLIT, (-1,)) is EMPTY


def test_fiber_slice_matches_brute_force_on_lattice_points():
    """Check the fiber identification y <-> s(a) + i(y) pointwise."""
    c = Cone.from_generators([(1, 0), (1, 1)])
    for a in (-2, -1, 0, 1, 2):
        f = fiber_slice(c, GL2_SPLIT, (a,))
        for y in range(-6, 7):
            # s(a) = (a, 0) for the fixed splitting; i(y) = (-y, -y)
            x = (a - y, -y)
            inside = c.contains(x)
            if is_empty(f):
                assert not inside
            else:
                assert f.contains((y,)) == inside


# ------------------------------------------------------------ fans


def test_fan_from_maximal_and_validation():
    c1 = Cone.from_generators([(1, 0), (1, 1)])
    c2 = Cone.from_generators([(1, 1), (0, 1)])
    fan = Fan.from_maximal([c1, c2])
    assert len(fan.maximal) == 2
    assert fan.rays() == ((0, 1), (1, 0), (1, 1))
    bad1 = Cone.from_generators([(1, 0), (0, 1)])
    bad2 = Cone.from_generators([(1, 1), (1, -1)])
    with pytest.raises(MathError):
        Fan.from_maximal([bad1, bad2])


def test_common_refinement_examples():
    half = Fan.from_maximal([Cone.from_generators([(1,)])], d=1)
    split = Fan.from_maximal(
        [Cone.from_generators([(1,)]), Cone.from_generators([(-1,)])], d=1)
    assert common_refinement(half, split).maximal == half.maximal
    fx = Fan.from_maximal([Cone.from_generators([(-1, -1), (1, 0)]),
                           Cone.from_generators([(1, 0), (1, 1)])])
    # the preimage of the one-ray image fan adds no cones
    py = Fan.from_maximal([Cone.from_generators([(1,)]),
                           Cone.from_generators([], d=1)], d=1)
    pre = preimage_fan(py, ((1, -1),), 2)
    ref = common_refinement(fx, pre)
    assert {c.key() for c in ref.maximal} == {c.key() for c in fx.maximal}
    # two transverse splittings of Q^2 refine to the four quadrants
    fx1 = Fan.from_maximal([Cone.from_inequalities([(1, 0)], 2),
                            Cone.from_inequalities([(-1, 0)], 2)])
    fx2 = Fan.from_maximal([Cone.from_inequalities([(0, 1)], 2),
                            Cone.from_inequalities([(0, -1)], 2)])
    quad = common_refinement(fx1, fx2)
    assert len(quad.maximal) == 4
    assert Cone.from_generators([(1, 0), (0, 1)]) in quad.maximal


# ------------------------------------------------------------ image fan


def test_image_fan_gl2():
    fx = Fan.from_maximal([Cone.from_generators([(-1, -1), (1, 0)]),
                           Cone.from_generators([(1, 0), (1, 1)])])
    support = Cone.from_generators([(1,)])
    out = image_fan(fx, ((1, -1),), support)
    assert [c.rays for c in out.maximal] == [((1,),)]


def test_image_fan_rank0():
    fx = Fan.from_maximal([Cone.from_generators([(1,)])], d=1)
    out = image_fan(fx, (), support=None)
    assert out.d == 0
    assert len(out.maximal) == 1


def test_image_fan_isomorphic_single_cone():
    fx = Fan.from_maximal([Cone.from_generators([(1, 0), (0, 1)])])
    out = image_fan(fx, ((1, 0), (0, 1)), Cone.from_generators([(1, 0), (0, 1)]))
    assert out.maximal == (Cone.from_generators([(1, 0), (0, 1)]),)


def test_image_fan_nonpointed_support_rejected():
    fx = Fan.from_maximal([Cone.from_generators([(1, 0)], d=2)])
    with pytest.raises(MathError):
        image_fan(fx, ((1, 0), (0, 1)), Cone.from_inequalities([(1, 0)], 2))


def random_fan_3d(rng):
    """One or two simplicial 3D cones glued along a shared facet."""
    while True:
        a, b, c = (tuple(rng.randrange(-3, 4) for _ in range(3)) for _ in range(3))
        try:
            c1 = Cone.from_generators([a, b, c])
        except MathError:
            continue
        if c1.dim() != 3 or not c1.is_pointed():
            continue
        if rng.random() < 0.4:
            return Fan.from_maximal([c1])
        shared = Cone.from_generators([a, b], d=3)
        if shared.dim() != 2:
            continue
        for _ in range(20):
            d = tuple(rng.randrange(-3, 4) for _ in range(3))
            # need d strictly on the other side of span(a, b) than c
            h = next((n for n in c1.ineqs if dot(n, a) == 0 and dot(n, b) == 0), None)
            if h is None:
                break
            if dot(h, d) < 0:
                try:
                    c2 = Cone.from_generators([a, b, d])
                except MathError:
                    continue
                if c2.dim() == 3 and c2.is_pointed():
                    try:
                        return Fan.from_maximal([c1, c2])
                    except MathError:
                        continue
        return Fan.from_maximal([c1])


def test_image_fan_against_chamber_oracle():
    """Coarsest-refinement contract on random 3D -> 2D instances."""
    rng = random.Random(2024)
    for trial in range(100):
        fan = random_fan_3d(rng)
        p = tuple(tuple(rng.randrange(-2, 3) for _ in range(3)) for _ in range(2))
        out, incidence = image_fan(fan, p, support=None, with_incidence=True)
        images = []
        seen = set()
        for c in fan.cones:
            im = c.linear_image(p)
            if im.key() not in seen:
                seen.add(im.key())
                images.append(im)
        # (1) maximal cones have pairwise disjoint interiors
        for i, a in enumerate(out.maximal):
            for b in out.maximal[i + 1:]:
                assert a.interior_overlaps(b) is None
        # (2) every image equals a union of output cones
        for im in images:
            parts = [c for c in out.cones if c.is_subset(im) and c.dim() == im.dim()]
            ok, witness = covers(parts, im)
            assert ok, (trial, im, witness)
        # (3) coarseness: merging two adjacent maximal cones breaks (2)
        for i, a in enumerate(out.maximal):
            for b in out.maximal[i + 1:]:
                f = a.intersect(b)
                if f.dim() != a.dim() - 1 or a.dim() != b.dim():
                    continue
                hull = Cone.from_generators(
                    list(a._generators()) + list(b._generators()), d=2)
                merged_max = [c for c in out.maximal if c != a and c != b]
                merged_max.append(hull)
                broken = False
                # the merged complex must still be a fan ...
                try:
                    merged_fan = Fan.from_maximal(merged_max, d=2)
                except MathError:
                    broken = True
                if not broken:
                    for x in merged_max:
                        for y in merged_max:
                            if x.key() < y.key() and x.interior_overlaps(y) is not None:
                                broken = True
                if not broken:
                    # ... and every image must stay a union of its cells
                    for im in images:
                        parts = [g for g in merged_fan.cones
                                 if g.dim() == im.dim() and g.is_subset(im)]
                        ok, _ = covers(parts, im)
                        if not ok:
                            broken = True
                            break
                assert broken, (trial, a.rays, b.rays)


def test_chambers_cover_base():
    base = Cone.from_inequalities([(1, 0)], 2)
    cells = chambers(base, [(0, 1)])
    assert len(cells) == 2
    ok, _ = covers(cells, base)
    assert ok
