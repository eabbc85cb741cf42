"""Exact rational cones, polyhedra, fans, and the fan operations the
divisorial-fan construction needs: tail cones, Minkowski sums, face tests,
fiber slices under split projections, image fans, and common refinements.

Conventions
-----------
* Cones are given in dual description.  V-side: ``lineality`` (canonical
  Hermite basis of the largest linear subspace) and ``rays`` (extreme rays,
  primitive, reduced modulo the lineality, sorted).  H-side: ``eqs``
  (canonical basis of the span's annihilator) and ``ineqs`` (facet normals,
  primitive, reduced modulo the equation lattice, sorted).  Both sides are
  cross-verified at construction, so cone equality is key equality.
* Polyhedra additionally carry vertices (exact rationals); the distinguished
  EMPTY value is a first-class citizen absorbed by Minkowski sums.
* Everything is immutable and hashable.
"""

from fractions import Fraction

from .errors import InternalError, MathError
from .lattice import (
    dot,
    is_zero,
    mat_shape,
    mat_vec_frac,
    primitive,
    row_hnf,
    scale_to_int,
    smul,
    vadd,
    vsub,
)

MINUS_INF = object()  # sentinel returned by min_eval on unbounded directions


# ----------------------------------------------------------------------------
# rational linear algebra helpers
# ----------------------------------------------------------------------------

def _reduce_mod_span(v, hnf_rows):
    """Canonical representative of v modulo the Q-span of the HNF rows:
    the pivot coordinates are zeroed out."""
    w = [Fraction(c) for c in v]
    for row in hnf_rows:
        pc = next(j for j, c in enumerate(row) if c != 0)
        if w[pc] != 0:
            coef = w[pc] / row[pc]
            for j in range(len(w)):
                w[j] -= coef * row[j]
    return tuple(w)


def _q_rank(rows):
    work = [[Fraction(c) for c in r] for r in rows]
    rank = 0
    cols = len(work[0]) if work else 0
    for col in range(cols):
        piv = None
        for i in range(rank, len(work)):
            if work[i][col] != 0:
                piv = i
                break
        if piv is None:
            continue
        work[rank], work[piv] = work[piv], work[rank]
        prow = work[rank]
        for i in range(len(work)):
            if i != rank and work[i][col] != 0:
                c = work[i][col] / prow[col]
                work[i] = [a - c * b for a, b in zip(work[i], prow)]
        rank += 1
        if rank == len(work):
            break
    return rank


# ----------------------------------------------------------------------------
# double description: H-representation -> V-representation
# ----------------------------------------------------------------------------

def dd_vrep(d, ineqs, eqs=()):
    """V-representation of ``{x in Q^d : eqs . x = 0, ineqs . x >= 0}``.

    Returns ``(lineality, rays)``: integer vectors, rays primitive.  The
    rays are extreme modulo the lineality (standard double description with
    the combinatorial adjacency test)."""
    lin = [tuple(1 if j == i else 0 for j in range(d)) for i in range(d)]
    rays = []
    processed = []  # inequalities seen so far, for active-set recomputation

    def active(r):
        return frozenset(i for i, a in enumerate(processed) if dot(a, r) == 0)

    cons = [(scale_to_int(e), True) for e in eqs if not is_zero(e)]
    cons += [(scale_to_int(a), False) for a in ineqs if not is_zero(a)]
    def _project_off(v, a, pivot, pa):
        vf = tuple(Fraction(c) for c in v)
        return vsub(vf, smul(Fraction(dot(a, v)) / pa, tuple(Fraction(c) for c in pivot)))

    for a, is_eq in cons:
        pivot = next((l for l in lin if dot(a, l) != 0), None)
        if pivot is not None:
            if dot(a, pivot) < 0:
                pivot = tuple(-c for c in pivot)
            pa = Fraction(dot(a, pivot))
            newlin = []
            for l in lin:
                proj = _project_off(l, a, pivot, pa)
                if not is_zero(proj):
                    newlin.append(primitive(proj))
            lin = newlin
            projected = []
            for r in rays:
                proj = _project_off(r, a, pivot, pa)
                if not is_zero(proj):
                    proj = primitive(proj)
                    if proj not in projected:
                        projected.append(proj)
            rays = projected
            if not is_eq:
                rays.append(primitive(pivot))
                processed.append(a)
            continue
        if not is_eq:
            processed.append(a)
        acts = {r: active(r) for r in rays}
        plus = [r for r in rays if dot(a, r) > 0]
        zero = [r for r in rays if dot(a, r) == 0]
        minus = [r for r in rays if dot(a, r) < 0]
        kept = zero + ([] if is_eq else plus)
        combos = []
        others = plus + zero + minus
        for rp in plus:
            for rm in minus:
                z = acts[rp] & acts[rm]
                if any(r is not rp and r is not rm and z <= acts[r] for r in others):
                    continue
                w = vsub(smul(dot(a, rp), rm), smul(dot(a, rm), rp))
                if not is_zero(w):
                    combos.append(primitive(w))
        seen = set(kept)
        for w in combos:
            if w not in seen:
                seen.add(w)
                kept.append(w)
        rays = kept
    return tuple(lin), tuple(rays)


def _canonical_vrep(d, lin, rays):
    lin_hnf = row_hnf([scale_to_int(l) for l in lin])
    out = set()
    for r in rays:
        red = _reduce_mod_span(r, lin_hnf)
        if not is_zero(red):
            out.add(primitive(red))
    return lin_hnf, tuple(sorted(out))


def _canonical_hrep(d, eq_rows, ineq_rows):
    eq_hnf = row_hnf([scale_to_int(e) for e in eq_rows])
    out = set()
    for a in ineq_rows:
        red = _reduce_mod_span(a, eq_hnf)
        if not is_zero(red):
            out.add(primitive(red))
    return eq_hnf, tuple(sorted(out))


class Cone:
    """Rational polyhedral cone with verified dual description."""

    __slots__ = ("d", "rays", "lineality", "ineqs", "eqs", "_key")

    def __init__(self, d, rays, lineality, ineqs, eqs, _skip_check=False):
        self.d = d
        self.rays = rays
        self.lineality = lineality
        self.ineqs = ineqs
        self.eqs = eqs
        self._key = ("cone", d, lineality, rays)
        if not _skip_check:
            self._cross_verify()

    # -- constructors --------------------------------------------------------

    @staticmethod
    def from_generators(gens, d=None, lineality=()):
        if d is None:
            if not gens and not lineality:
                raise MathError("cannot infer ambient rank of a cone without generators")
            d = len(gens[0]) if gens else len(lineality[0])
        gens = [scale_to_int(g) for g in gens]
        gens = [g for g in gens if not is_zero(g)]
        lins = [scale_to_int(l) for l in lineality]
        lins = [l for l in lins if not is_zero(l)]
        # dualize: C^v = {a : a.l = 0, a.g >= 0}
        dlin, drays = dd_vrep(d, gens, lins)
        eqs, ineqs = _canonical_hrep(d, dlin, drays)
        vlin, vrays = dd_vrep(d, ineqs, eqs)
        lin_hnf, rays = _canonical_vrep(d, vlin, vrays)
        cone = Cone(d, rays, lin_hnf, ineqs, eqs, _skip_check=True)
        for g in gens + lins + [tuple(-c for c in l) for l in lins]:
            if not cone.contains(g):
                raise InternalError("cone generator lost during conversion")
        cone._cross_verify()
        return cone

    @staticmethod
    def from_inequalities(ineqs, d, eqs=()):
        vlin, vrays = dd_vrep(d, ineqs, eqs)
        lin_hnf, rays = _canonical_vrep(d, vlin, vrays)
        # re-derive a canonical, irredundant H-description
        dlin, drays = dd_vrep(d, rays, lin_hnf)
        ceqs, cineqs = _canonical_hrep(d, dlin, drays)
        cone = Cone(d, rays, lin_hnf, cineqs, ceqs, _skip_check=True)
        for a in ineqs:
            for g in cone._generators():
                if dot(a, g) < 0:
                    raise InternalError("cone H->V conversion produced a stray generator")
        for e in eqs:
            for g in cone._generators():
                if dot(e, g) != 0:
                    raise InternalError("cone H->V conversion violated an equation")
        cone._cross_verify()
        return cone

    @staticmethod
    def full_space(d):
        return Cone.from_inequalities((), d)

    @staticmethod
    def zero(d):
        return Cone.from_generators([], d=d) if d >= 0 else None

    # -- internal consistency -------------------------------------------------

    def _generators(self):
        gens = list(self.rays)
        for l in self.lineality:
            gens.append(l)
            gens.append(tuple(-c for c in l))
        return gens

    def _cross_verify(self):
        for g in self._generators():
            for e in self.eqs:
                if dot(e, g) != 0:
                    raise InternalError("cone generator violates an equation")
            for a in self.ineqs:
                if dot(a, g) < 0:
                    raise InternalError("cone generator violates an inequality")
        span_rank = _q_rank(list(self.rays) + list(self.lineality)) if (
            self.rays or self.lineality) else 0
        if span_rank != self.d - len(self.eqs):
            raise InternalError(
                "cone span rank %d disagrees with %d equations in rank %d"
                % (span_rank, len(self.eqs), self.d))

    # -- basic queries --------------------------------------------------------

    def key(self):
        return self._key

    def __eq__(self, other):
        return isinstance(other, Cone) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return "Cone(rays=%r, lineality=%r)" % (list(self.rays), list(self.lineality))

    def contains(self, x):
        return all(dot(e, x) == 0 for e in self.eqs) and all(
            dot(a, x) >= 0 for a in self.ineqs)

    def is_subset(self, other):
        return all(other.contains(g) for g in self._generators())

    def dim(self):
        return self.d - len(self.eqs)

    def is_pointed(self):
        return not self.lineality

    def relint_point(self):
        """An exact point in the relative interior (0 for linear subspaces)."""
        if not self.rays:
            return (0,) * self.d
        p = self.rays[0]
        for r in self.rays[1:]:
            p = vadd(p, r)
        return p

    def relint_contains(self, x):
        """Is x in the relative interior (strict on every facet)?"""
        return all(dot(e, x) == 0 for e in self.eqs) and all(
            dot(a, x) > 0 for a in self.ineqs)

    # -- derived cones ---------------------------------------------------------

    def dual(self):
        return Cone.from_inequalities(self.rays, self.d, eqs=self.lineality)

    def intersect(self, other):
        if self.d != other.d:
            raise MathError("cone intersection across different ambient ranks")
        return Cone.from_inequalities(self.ineqs + other.ineqs, self.d,
                                      eqs=self.eqs + other.eqs)

    def linear_image(self, m):
        rows, cols = mat_shape(m)
        if cols != self.d:
            raise MathError("cone image under a map with wrong domain rank")
        gens = [mat_vec_frac(m, r) for r in self.rays]
        lins = [mat_vec_frac(m, l) for l in self.lineality]
        return Cone.from_generators([g for g in gens if not is_zero(g)], d=rows,
                                    lineality=[l for l in lins if not is_zero(l)])

    def preimage(self, m):
        """Preimage under m: source -> this cone's ambient space."""
        rows, cols = mat_shape(m)
        if rows != self.d:
            raise MathError("cone preimage under a map with wrong codomain rank")
        pulled_ineqs = [tuple(dot(a, col) for col in _columns(m)) for a in self.ineqs]
        pulled_eqs = [tuple(dot(e, col) for col in _columns(m)) for e in self.eqs]
        return Cone.from_inequalities(pulled_ineqs, cols, eqs=pulled_eqs)

    def facet_cones(self):
        return [
            Cone.from_inequalities(self.ineqs, self.d, eqs=self.eqs + (a,))
            for a in self.ineqs
        ]

    def faces(self):
        """All faces, self included, deduplicated."""
        seen = {self.key(): self}
        frontier = [self]
        while frontier:
            nxt = []
            for c in frontier:
                for f in c.facet_cones():
                    if f.key() not in seen:
                        seen[f.key()] = f
                        nxt.append(f)
            frontier = nxt
        return list(seen.values())

    def face_of(self, other):
        """Is self a face of other (the minimum locus of some functional)?"""
        if self.d != other.d:
            return False
        if not self.is_subset(other):
            return False
        x = self.relint_point()
        tight = tuple(a for a in other.ineqs if dot(a, x) == 0)
        g = Cone.from_inequalities(other.ineqs, other.d, eqs=other.eqs + tight)
        return g == self

    def interior_overlaps(self, other, within=None):
        """Do relint(self) and relint(other) share a point (optionally inside
        the cone ``within``)?  Returns a witness integer vector or None."""
        j = self.intersect(other)
        if within is not None:
            j = j.intersect(within)
        if j.dim() == 0 and not j.rays and not j.lineality:
            return None
        if _pokes_relint(j, self) and _pokes_relint(j, other):
            w = j.relint_point()
            if not j.rays and j.lineality:
                # j is a linear subspace; 0 sits in every relint, use a lineality vector
                w = j.lineality[0]
            return w
        return None


def _pokes_relint(sub, cone):
    """Does the convex subcone ``sub`` of ``cone`` meet relint(cone)?"""
    gens = sub._generators()
    if not gens:
        gens = [(0,) * sub.d]
    for a in cone.ineqs:
        if all(dot(a, g) == 0 for g in gens):
            return False
    return True


def _columns(m):
    rows, cols = mat_shape(m)
    return [tuple(m[i][j] for i in range(rows)) for j in range(cols)]


# ----------------------------------------------------------------------------
# polyhedra
# ----------------------------------------------------------------------------

class _EmptyPolyhedron:
    """The distinguished empty coefficient; absorbed by Minkowski sums."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def key(self):
        return "EMPTY"

    def is_empty(self):
        return True

    def __repr__(self):
        return "EMPTY"


EMPTY = _EmptyPolyhedron()


def is_empty(p):
    return p is EMPTY or isinstance(p, _EmptyPolyhedron)


class Polyhedron:
    """Nonempty rational polyhedron ``conv(vertices) + cone(rays) + span(lineality)``."""

    __slots__ = ("d", "vertices", "rays", "lineality", "ineqs", "eqs", "_key")

    def __init__(self, d, vertices, rays, lineality, ineqs, eqs):
        self.d = d
        self.vertices = vertices
        self.rays = rays
        self.lineality = lineality
        self.ineqs = ineqs  # pairs (normal, bound) meaning <normal, x> >= bound
        self.eqs = eqs
        self._key = ("poly", d, lineality, vertices, rays)

    def is_empty(self):
        return False

    # -- constructors ----------------------------------------------------------

    @staticmethod
    def from_generators(vertices, rays=(), lineality=(), d=None):
        if not vertices:
            if rays or lineality:
                raise MathError("a nonempty polyhedron needs at least one vertex point")
            return EMPTY
        if d is None:
            d = len(vertices[0])
        hom_gens = [(1,) + tuple(Fraction(c) for c in v) for v in vertices]
        hom_gens += [(0,) + tuple(Fraction(c) for c in r) for r in rays]
        hom_lin = [(0,) + tuple(Fraction(c) for c in l) for l in lineality]
        cone = Cone.from_generators(hom_gens, d=d + 1, lineality=hom_lin)
        return _poly_from_hom_cone(d, cone)

    @staticmethod
    def from_inequalities(ineqs, d, eqs=()):
        """ineqs: iterable of (normal, bound); eqs likewise."""
        rows = [scale_to_int((-Fraction(b),) + tuple(Fraction(c) for c in a))
                for a, b in ineqs]
        rows.append((1,) + (0,) * d)
        eq_rows = [scale_to_int((-Fraction(b),) + tuple(Fraction(c) for c in a))
                   for a, b in eqs]
        cone = Cone.from_inequalities(rows, d + 1, eqs=eq_rows)
        if all(r[0] == 0 for r in cone.rays):
            return EMPTY
        return _poly_from_hom_cone(d, cone)

    @staticmethod
    def point(v):
        return Polyhedron.from_generators([v])

    @staticmethod
    def cone_at_origin(cone):
        return Polyhedron.from_generators([(0,) * cone.d], rays=cone.rays,
                                          lineality=cone.lineality, d=cone.d)

    # -- queries ---------------------------------------------------------------

    def key(self):
        return self._key

    def __eq__(self, other):
        return isinstance(other, Polyhedron) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return "Polyhedron(vertices=%r, rays=%r, lineality=%r)" % (
            [list(v) for v in self.vertices], [list(r) for r in self.rays],
            [list(l) for l in self.lineality])

    def contains(self, x):
        return all(dot(e, x) == b for e, b in self.eqs) and all(
            dot(a, x) >= b for a, b in self.ineqs)

    def is_subset(self, other):
        if self.d != other.d:
            return False
        if not all(other.contains(v) for v in self.vertices):
            return False
        dirs = list(self.rays) + list(self.lineality) + [
            tuple(-c for c in l) for l in self.lineality]
        for r in dirs:
            for a, _ in other.ineqs:
                if dot(a, r) < 0:
                    return False
            for e, _ in other.eqs:
                if dot(e, r) != 0:
                    return False
        return True

    def dim(self):
        return self.d - len(self.eqs)

    def relint_point(self):
        n = len(self.vertices)
        acc = (Fraction(0),) * self.d
        for v in self.vertices:
            acc = vadd(acc, v)
        acc = smul(Fraction(1, n), acc)
        for r in self.rays:
            acc = vadd(acc, r)
        return acc

    def tail_cone(self):
        return Cone.from_generators(self.rays, d=self.d, lineality=self.lineality)

    # -- operations --------------------------------------------------------------

    def translate(self, t):
        return Polyhedron.from_generators(
            [vadd(tuple(Fraction(c) for c in v), tuple(Fraction(c) for c in t))
             for v in self.vertices],
            rays=self.rays, lineality=self.lineality, d=self.d)

    def intersect(self, other):
        if is_empty(other):
            return EMPTY
        if self.d != other.d:
            raise MathError("polyhedron intersection across different ambient ranks")
        return Polyhedron.from_inequalities(
            self.ineqs + other.ineqs, self.d, eqs=self.eqs + other.eqs)

    def linear_image(self, m):
        rows, cols = mat_shape(m)
        if cols != self.d:
            raise MathError("polyhedron image under a map with wrong domain rank")
        verts = [mat_vec_frac(m, v) for v in self.vertices]
        rays = [w for w in (mat_vec_frac(m, r) for r in self.rays) if not is_zero(w)]
        lins = [w for w in (mat_vec_frac(m, l) for l in self.lineality) if not is_zero(w)]
        return Polyhedron.from_generators(verts, rays=rays, lineality=lins, d=rows)

    def min_eval(self, u):
        """min <x, u> over the polyhedron; MINUS_INF if unbounded below."""
        for r in self.rays:
            if dot(u, r) < 0:
                return MINUS_INF
        for l in self.lineality:
            if dot(u, l) != 0:
                return MINUS_INF
        return min(Fraction(dot(u, v)) for v in self.vertices)


def _poly_from_hom_cone(d, cone):
    """Split a homogenization cone (first coordinate = level) back into a
    polyhedron, re-canonicalizing vertices modulo the lineality."""
    lin = tuple(l[1:] for l in cone.lineality)
    lin_hnf = row_hnf([scale_to_int(l) for l in lin])
    verts = set()
    rays = set()
    for r in cone.rays:
        if r[0] == 0:
            red = _reduce_mod_span(r[1:], lin_hnf)
            if not is_zero(red):
                rays.add(primitive(red))
        else:
            v = tuple(Fraction(c, r[0]) for c in r[1:])
            verts.add(_reduce_mod_span(v, lin_hnf))
    if not verts:
        return EMPTY
    ineqs = []
    eqs = []
    for row in cone.ineqs:
        a, b = row[1:], -Fraction(row[0])
        if is_zero(a):
            continue  # the level-positivity constraint
        g = primitive(a)
        scale = Fraction(next(c for c in a if c != 0), next(c for c in g if c != 0))
        ineqs.append((g, b / scale))
    for row in cone.eqs:
        a, b = row[1:], -Fraction(row[0])
        if is_zero(a):
            if b != 0:
                raise InternalError("inconsistent homogenization equation")
            continue
        g = primitive(a)
        scale = Fraction(next(c for c in a if c != 0), next(c for c in g if c != 0))
        eqs.append((g, b / scale))
    poly = Polyhedron(d, tuple(sorted(verts)), tuple(sorted(rays)), lin_hnf,
                      tuple(sorted(ineqs)), tuple(sorted(eqs)))
    for v in poly.vertices:
        if not poly.contains(v):
            raise InternalError("polyhedron vertex violates its own H-description")
    return poly


# ----------------------------------------------------------------------------
# polyhedron-level operations from the divisorial calculus
# ----------------------------------------------------------------------------

def tail_cone(p):
    if is_empty(p):
        raise MathError("tail cone of the EMPTY polyhedron is undefined")
    return p.tail_cone()


def minkowski_sum(p, q):
    """Minkowski sum; EMPTY absorbs everything."""
    if is_empty(p) or is_empty(q):
        return EMPTY
    if p.d != q.d:
        raise MathError("Minkowski sum across different ambient ranks")
    verts = [vadd(v, w) for v in p.vertices for w in q.vertices]
    return Polyhedron.from_generators(
        verts, rays=p.rays + q.rays, lineality=p.lineality + q.lineality, d=p.d)


def is_face(f, p):
    """Is f a face of p?  EMPTY and p itself count as faces."""
    if is_empty(f):
        return True
    if is_empty(p):
        return False
    if f.d != p.d:
        return False
    if not f.is_subset(p):
        return False
    x = f.relint_point()
    tight = tuple((a, b) for a, b in p.ineqs if dot(a, x) == b)
    g = Polyhedron.from_inequalities(p.ineqs, p.d, eqs=p.eqs + tight)
    return g == f


def min_eval(p, u):
    if is_empty(p):
        raise MathError("evaluation of the EMPTY polyhedron is undefined")
    return p.min_eval(u)


def fiber_slice(cone, split, a):
    """``(cone ∩ p^{-1}(a))`` carried into N via the splitting.

    ``split`` is a lattice.SplitSequence for 0 -> N -> X -> X' -> 0 and the
    cone lives in X.  The fiber over a is identified with N_Q by
    ``y  <->  s(a) + i(y)``; the result is a polyhedron in N_Q (EMPTY when
    the fiber misses the cone)."""
    if cone.d != split.mid_rank:
        raise MathError("cone and split sequence live in different lattices")
    base = split.section(a)
    icols = _columns(split.i)
    ineqs = []
    eqs = []
    for alpha in cone.ineqs:
        normal = tuple(dot(alpha, col) for col in icols)
        bound = -Fraction(dot(alpha, base))
        if is_zero(normal):
            if bound > 0:
                return EMPTY
            continue
        ineqs.append((normal, bound))
    for e in cone.eqs:
        normal = tuple(dot(e, col) for col in icols)
        bound = -Fraction(dot(e, base))
        if is_zero(normal):
            if bound != 0:
                return EMPTY
            continue
        eqs.append((normal, bound))
    return Polyhedron.from_inequalities(ineqs, split.n_rank, eqs=eqs)


# ----------------------------------------------------------------------------
# fans
# ----------------------------------------------------------------------------

class Fan:
    """Finite collection of cones closed under faces, with the usual fan
    condition (pairwise intersections are common faces)."""

    def __init__(self, d, cones, maximal):
        self.d = d
        self.cones = cones
        self.maximal = maximal

    @staticmethod
    def from_maximal(cones, d=None, validate=True):
        cones = list(cones)
        if d is None:
            if not cones:
                raise MathError("cannot infer ambient rank of an empty fan")
            d = cones[0].d
        if not cones:
            cones = [Cone.from_generators([], d=d)]
        by_key = {}
        for c in cones:
            if c.d != d:
                raise MathError("fan cones live in different ambient ranks")
            for f in c.faces():
                by_key[f.key()] = f
        allc = tuple(sorted(by_key.values(), key=lambda c: c.key()))
        maximal = tuple(
            c for c in allc
            if not any(o is not c and c.is_subset(o) and c != o for o in allc)
        )
        fan = Fan(d, allc, maximal)
        if validate:
            fan.validate()
        return fan

    def validate(self):
        for i, c in enumerate(self.maximal):
            for cc in self.maximal[i + 1:]:
                inter = c.intersect(cc)
                if not (inter.face_of(c) and inter.face_of(cc)):
                    raise MathError(
                        "fan condition violated: intersection is not a common face",
                        pair=[_cone_json(c), _cone_json(cc)],
                        intersection=_cone_json(inter))

    def key(self):
        return tuple(c.key() for c in self.maximal)

    def __eq__(self, other):
        return isinstance(other, Fan) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return "Fan(%d maximal cones in rank %d)" % (len(self.maximal), self.d)

    def rays(self):
        out = set()
        for c in self.cones:
            if c.dim() == 1 and not c.lineality:
                out.add(c.rays[0])
        return tuple(sorted(out))

    def has_cone(self, cone):
        return any(cone == c for c in self.cones)


def _cone_json(c):
    return {"rays": [list(r) for r in c.rays], "lineality": [list(l) for l in c.lineality]}


def common_refinement(f, g):
    """The fan {C ∩ C' : C in f, C' in g}."""
    if f.d != g.d:
        raise MathError("common refinement across different ambient ranks")
    inters = []
    for c in f.maximal:
        for cc in g.maximal:
            inters.append(c.intersect(cc))
    return Fan.from_maximal(inters, d=f.d)


def preimage_fan(g, m, source_rank):
    """The fan {m^{-1}(C') : C' in g} in the source lattice."""
    return Fan.from_maximal([c.preimage(m) for c in g.maximal], d=source_rank)


# ----------------------------------------------------------------------------
# chamber machinery and the image fan
# ----------------------------------------------------------------------------

def _sign_canonical(v):
    p = primitive(v)
    for c in p:
        if c != 0:
            return p if c > 0 else tuple(-x for x in p)
    return p


def chambers(base, hyperplanes):
    """Full-dimensional (relative to ``base``) cells of the central
    hyperplane arrangement restricted to the cone ``base``."""
    target = base.dim()
    cells = [base]
    for h in hyperplanes:
        nxt = []
        for c in cells:
            vals = [dot(h, g) for g in c._generators()]
            if all(v >= 0 for v in vals) or all(v <= 0 for v in vals):
                nxt.append(c)
                continue
            cp = Cone.from_inequalities(c.ineqs + (h,), c.d, eqs=c.eqs)
            cm = Cone.from_inequalities(c.ineqs + (tuple(-x for x in h),), c.d, eqs=c.eqs)
            if cp.dim() == target and cm.dim() == target:
                nxt.extend([cp, cm])
            else:
                nxt.append(c)
        cells = nxt
    return cells


def covers(pieces, base, extra_hyperplanes=()):
    """Is ``base`` covered by the union of the cones in ``pieces``?

    Exact: chambers of base under all facet hyperplanes of the pieces must
    each lie inside some piece."""
    hyps = set(extra_hyperplanes)
    for p in pieces:
        for a in p.ineqs:
            hyps.add(_sign_canonical(a))
        for e in p.eqs:
            hyps.add(_sign_canonical(e))
    for cell in chambers(base, sorted(hyps)):
        if not any(cell.is_subset(p) for p in pieces):
            return False, cell
    return True, None


def image_fan(fan, p, support=None, with_incidence=False):
    """Coarsest subdivision of ``support`` (or of the image region) that
    refines every image p(C), C in the fan.

    Implemented as chamber enumeration over the facet hyperplanes of the
    images followed by greedy merging of adjacent chambers lying in exactly
    the same set of images."""
    dprime = mat_shape(p)[0]
    if dprime == 0:
        trivial = Fan.from_maximal([Cone.from_generators([], d=0)], d=0)
        return (trivial, {}) if with_incidence else trivial
    if support is not None and not support.is_pointed():
        raise MathError("image fan support must be a pointed cone")

    images = []
    seen = set()
    for c in fan.cones:
        im = c.linear_image(p)
        if im.key() not in seen:
            seen.add(im.key())
            images.append(im)
    if support is not None:
        for im in images:
            if not im.is_subset(support):
                raise MathError("an image cone leaves the declared support",
                                image=_cone_json(im))
    base = support if support is not None else Cone.full_space(dprime)
    target = base.dim()

    full_dim = [im for im in images if im.dim() == target]
    lower = [im for im in images if im.dim() < target]
    hyps = set()
    for im in full_dim:
        for a in im.ineqs:
            hyps.add(_sign_canonical(a))
        for e in im.eqs:
            hyps.add(_sign_canonical(e))
    for im in lower:
        if any(im.face_of(big) for big in full_dim):
            continue  # carved out by the facet hyperplanes of the big image
        for a in im.ineqs:
            hyps.add(_sign_canonical(a))
        for e in im.eqs:
            hyps.add(_sign_canonical(e))
    hyps = sorted(hyps)

    cells = chambers(base, hyps)

    def pattern(c):
        return frozenset(i for i, im in enumerate(images) if c.is_subset(im))

    def faces_survive(u):
        """Merging is only allowed when every image still meets u in a face;
        this is exactly the condition for the image to remain a union of
        cones of the final fan."""
        for im in images:
            r = im.intersect(u)
            if r.dim() == 0 and not r.lineality and not u.lineality:
                continue  # the origin, a face of any pointed cone
            if not r.face_of(u):
                return False
        return True

    groups = {}
    for c in cells:
        groups.setdefault(pattern(c), []).append(c)

    def union_is_exact(u, covered_keys):
        """u must add nothing beyond the original chambers it absorbs."""
        for c in cells:
            if c.key() in covered_keys:
                continue
            if u.intersect(c).dim() == target:
                return False
        return True

    new_cells = []
    for pat in sorted(groups, key=sorted):
        # working items: (cone, keys of the original chambers it covers)
        members = sorted(groups[pat], key=lambda c: c.key())
        items = [(c, frozenset([c.key()])) for c in members]
        if len(items) > 1:
            gens = []
            covered = frozenset()
            for c, keys in items:
                gens.extend(c._generators())
                covered |= keys
            hull = Cone.from_generators(gens, d=dprime)
            if union_is_exact(hull, covered) and faces_survive(hull):
                new_cells.append(hull)
                continue
        # greedy pairwise merging within the pattern class
        merged = True
        while merged and len(items) > 1:
            merged = False
            for i in range(len(items)):
                for j in range(i + 1, len(items)):
                    a, akeys = items[i]
                    b, bkeys = items[j]
                    if a.intersect(b).dim() != target - 1:
                        continue
                    u = Cone.from_generators(a._generators() + b._generators(), d=dprime)
                    if not union_is_exact(u, akeys | bkeys):
                        continue
                    if not faces_survive(u):
                        continue
                    items = [it for k, it in enumerate(items) if k not in (i, j)]
                    items.append((u, akeys | bkeys))
                    items.sort(key=lambda it: it[0].key())
                    merged = True
                    break
                if merged:
                    break
        new_cells.extend(c for c, _ in items)
    cells = new_cells

    out = Fan.from_maximal(cells, d=dprime)

    # every lower-dimensional image must survive as a union of fan cones
    for im in lower:
        sub = [c for c in out.cones if c.dim() == im.dim() and c.is_subset(im)]
        ok, witness = covers(sub, im, extra_hyperplanes=hyps)
        if not ok:
            raise InternalError(
                "image fan failed to refine a low-dimensional image",
                image=_cone_json(im), uncovered=_cone_json(witness))

    if with_incidence:
        incidence = {}
        for i, im in enumerate(images):
            incidence[i] = [c.key() for c in out.maximal if c.is_subset(im)]
        return out, incidence
    return out
