"""P-divisors and divisorial fans over a symbolic base.

The base variety enters only through names of its prime divisors; a
coefficient map assigns to finitely many of them a polyhedron in N_Q with a
common tail cone (or EMPTY, which removes the divisor from the locus).
Coefficients equal to the tail cone are suppressed in normalized form, and
looked up transparently.
"""

from fractions import Fraction

from .errors import MathError
from .lattice import dot, vadd
from .polyhedral import (
    EMPTY,
    MINUS_INF,
    Cone,
    Fan,
    Polyhedron,
    is_empty,
    is_face,
    minkowski_sum,
)


# ----------------------------------------------------------------------------
# divisor labels
# ----------------------------------------------------------------------------

class Label:
    """Symbolic name of a prime divisor on the base.

    kind is one of 'invariant' (ray of the base fan), 'color',
    'translate' (Weyl translate of a color), 'orbit' (toric orbit closure)
    or 'named' (free string, used when an identification table collapses
    translates to concrete divisors)."""

    __slots__ = ("kind", "data")

    def __init__(self, kind, data):
        self.kind = kind
        self.data = data

    # translate with the identity word is the color itself
    @staticmethod
    def invariant(ray):
        return Label("invariant", tuple(int(c) for c in ray))

    @staticmethod
    def color(name):
        return Label("color", str(name))

    @staticmethod
    def translate(word, name):
        if word == "":
            return Label.color(name)
        return Label("translate", (str(word), str(name)))

    @staticmethod
    def orbit(ray):
        return Label("orbit", tuple(int(c) for c in ray))

    @staticmethod
    def named(name):
        return Label("named", str(name))

    def key(self):
        return (self.kind, self.data)

    def __eq__(self, other):
        return isinstance(other, Label) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __lt__(self, other):
        return str(self) < str(other)

    def __str__(self):
        if self.kind in ("invariant", "orbit"):
            return "%s(%s)" % (self.kind, ",".join(str(c) for c in self.data))
        if self.kind == "translate":
            return "translate:%s:%s" % self.data
        return "%s:%s" % (self.kind, self.data)

    __repr__ = __str__

    @staticmethod
    def parse(text):
        if text.startswith("invariant(") or text.startswith("orbit("):
            kind, rest = text.split("(", 1)
            coords = tuple(int(c) for c in rest.rstrip(")").split(","))
            return Label(kind, coords)
        kind, _, rest = text.partition(":")
        if kind == "color":
            return Label.color(rest)
        if kind == "translate":
            word, _, name = rest.partition(":")
            return Label.translate(word, name)
        if kind == "named":
            return Label.named(rest)
        raise MathError("unparseable divisor label", text=text)


# ----------------------------------------------------------------------------
# p-divisors
# ----------------------------------------------------------------------------

class PDivisor:
    """Finite formal sum of polyhedral coefficients over divisor labels.

    Coefficients not stored default to the tail cone; explicitly stored
    coefficients are either EMPTY or share the tail cone.  ``chart`` is an
    optional (cone key, weyl words) pair naming the chart this p-divisor
    describes."""

    def __init__(self, tail, coefficients, chart=None):
        if not isinstance(tail, Cone):
            raise MathError("p-divisor tail must be a cone")
        if not tail.is_pointed():
            raise MathError("p-divisor tail cone must be pointed")
        self.tail = tail
        self.n = tail.d
        tail_poly = Polyhedron.cone_at_origin(tail)
        coeffs = {}
        for label, poly in coefficients.items():
            if not isinstance(label, Label):
                raise MathError("coefficient keys must be Labels")
            if is_empty(poly):
                coeffs[label] = EMPTY
                continue
            if poly.tail_cone() != tail:
                raise MathError(
                    "coefficient tail cone differs from the declared tail",
                    label=str(label))
            if poly == tail_poly:
                continue  # trivial summand, suppressed
            coeffs[label] = poly
        self.coefficients = dict(sorted(coeffs.items(), key=lambda kv: str(kv[0])))
        self.chart = chart

    def tail_polyhedron(self):
        return Polyhedron.cone_at_origin(self.tail)

    def coefficient(self, label):
        return self.coefficients.get(label, self.tail_polyhedron())

    def labels(self):
        return list(self.coefficients.keys())

    def locus_excludes(self):
        """Labels with EMPTY coefficient: the locus omits these divisors."""
        return [l for l, p in self.coefficients.items() if is_empty(p)]

    def key(self):
        return (self.tail.key(),
                tuple((str(l), p.key()) for l, p in self.coefficients.items()))

    def __eq__(self, other):
        return isinstance(other, PDivisor) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        parts = []
        for l, p in self.coefficients.items():
            parts.append("%s (x) %s" % ("EMPTY" if is_empty(p) else repr(p), l))
        return "PDivisor(%s; tail=%r)" % (" + ".join(parts) or "0", self.tail)

    def evaluate(self, u):
        """The rational divisor sum min<coeff, u> . D for u in tail^v."""
        if len(u) != self.n:
            raise MathError("evaluation functional has the wrong rank")
        for r in self.tail.rays:
            if dot(u, r) < 0:
                raise MathError("unbounded evaluation: functional leaves the dual tail",
                                functional=[int(c) for c in u])
        out = {}
        for label, poly in self.coefficients.items():
            if is_empty(poly):
                continue
            val = poly.min_eval(u)
            if val is MINUS_INF:
                raise MathError("unbounded evaluation on a coefficient",
                                label=str(label))
            out[label] = val
        return out

    def intersect(self, other):
        """Coefficient-wise intersection, the candidate common face."""
        tail = self.tail.intersect(other.tail)
        coeffs = {}
        for label in set(self.coefficients) | set(other.coefficients):
            a = self.coefficient(label)
            b = other.coefficient(label)
            if is_empty(a) or is_empty(b):
                coeffs[label] = EMPTY
            else:
                coeffs[label] = a.intersect(b)
        return PDivisor(tail, coeffs)

    def relabel(self, mapping, lattice_map=None):
        """Apply a label bijection and optionally a unimodular change of N."""
        tail = self.tail if lattice_map is None else self.tail.linear_image(lattice_map)
        coeffs = {}
        for label, poly in self.coefficients.items():
            new = mapping.get(label, label) if mapping else label
            if new in coeffs:
                raise MathError("relabeling collapses two divisor labels",
                                label=str(new))
            if lattice_map is not None and not is_empty(poly):
                poly = poly.linear_image(lattice_map)
            coeffs[new] = poly
        return PDivisor(tail, coeffs, chart=self.chart)


def face_check(dprime, d, incidence=None):
    """Is dprime coefficient-wise a face of d?

    For every incidence set S (labels of base divisors with a common point),
    the Minkowski sum of the dprime-coefficients over S must be a face of the
    corresponding sum for d; default incidence is all singletons.  The tail
    cones must be in face relation as well.  Returns (ok, report)."""
    report = []
    if not dprime.tail.face_of(d.tail):
        report.append({"reason": "tail not a face",
                       "tails": [repr(dprime.tail), repr(d.tail)]})
    labels = sorted(set(dprime.coefficients) | set(d.coefficients), key=str)
    if incidence is None:
        sets = [[l] for l in labels]
    else:
        sets = [list(s) for s in incidence]
    for s in sets:
        a = Polyhedron.point((0,) * dprime.n)
        b = Polyhedron.point((0,) * d.n)
        for label in s:
            a = minkowski_sum(a, dprime.coefficient(label))
            b = minkowski_sum(b, d.coefficient(label))
        if not is_face(a, b):
            report.append({"reason": "coefficient sum not a face",
                           "labels": [str(l) for l in s]})
    return (not report), report


# ----------------------------------------------------------------------------
# divisorial fans
# ----------------------------------------------------------------------------

class SliceCell:
    """One cell of a slice: a polyhedron plus the charts whose coefficient
    equals it."""

    def __init__(self, polyhedron, charts):
        self.polyhedron = polyhedron
        self.charts = tuple(charts)

    def __repr__(self):
        return "SliceCell(%r, charts=%r)" % (self.polyhedron, list(self.charts))


class DivisorialFan:
    """A compatible family of p-divisors: pairwise coefficient-wise
    intersections are faces of both members."""

    def __init__(self, maximal, incidence=None, validate=True):
        maximal = list(maximal)
        if not maximal:
            raise MathError("a divisorial fan needs at least one p-divisor")
        self.n = maximal[0].n
        if any(d.n != self.n for d in maximal):
            raise MathError("p-divisors live in different lattices")
        self.maximal = maximal
        self.incidence = incidence
        if validate:
            self.validate()

    def validate(self):
        for i, a in enumerate(self.maximal):
            for b in self.maximal[i + 1:]:
                inter = a.intersect(b)
                for x, y in ((a, "first"), (b, "second")):
                    ok, report = face_check(inter, x, incidence=self.incidence)
                    if not ok:
                        raise MathError(
                            "divisorial fan face condition violated",
                            pair=[_chart_name(a), _chart_name(b)],
                            side=y, detail=report)

    def labels(self):
        out = set()
        for d in self.maximal:
            out.update(d.coefficients.keys())
        return sorted(out, key=str)

    def tail_fan(self):
        return Fan.from_maximal([d.tail for d in self.maximal], d=self.n)

    def slices(self):
        """For each label, the subdivision cells with their chart sets."""
        out = {}
        for label in self.labels():
            cells = {}
            for idx, d in enumerate(self.maximal):
                poly = d.coefficient(label)
                if is_empty(poly):
                    continue
                cells.setdefault(poly.key(), (poly, []))[1].append(idx)
            out[label] = [SliceCell(p, charts) for p, charts in
                          (cells[k] for k in sorted(cells))]
        return out

    def key(self):
        return tuple(sorted(d.key() for d in self.maximal))

    def __eq__(self, other):
        return isinstance(other, DivisorialFan) and self.key() == other.key()

    def __repr__(self):
        return "DivisorialFan(%d maximal elements over %d labels)" % (
            len(self.maximal), len(self.labels()))


def _chart_name(d):
    if d.chart is None:
        return repr(d)
    return {"cone": list(map(list, d.chart[0])), "weyl": list(d.chart[1])}


def build_divisorial_fan(maximal, incidence=None):
    return DivisorialFan(maximal, incidence=incidence)


def equal_canonical(f1, f2, relabel=None, lattice_map=None):
    """Set equality of normalized maximal elements, after applying the label
    bijection and optional unimodular lattice identification to f2.

    Returns (equal, diff) where diff lists one-sided elements."""
    left = {d.key(): d for d in f1.maximal}
    right = {}
    for d in f2.maximal:
        dd = d.relabel(relabel or {}, lattice_map=lattice_map)
        right[dd.key()] = dd
    only_left = [repr(left[k]) for k in sorted(set(left) - set(right))]
    only_right = [repr(right[k]) for k in sorted(set(right) - set(left))]
    diff = {"only_first": only_left, "only_second": only_right}
    return (not only_left and not only_right), diff
