"""Exact lattice arithmetic: vectors over Q, integer matrices, Smith normal
form, and split exact sequences  0 -> N -> X --p--> X' -> 0.

All values are immutable (tuples, Fractions); every function is pure.
Vectors are tuples of Fraction (or int where integrality is required),
matrices are tuples of row tuples of ints acting on column vectors.
"""

from fractions import Fraction
from math import gcd

from .errors import MathError, SchemaError

Vec = tuple
Mat = tuple


def vec(*coords):
    return tuple(Fraction(c) for c in coords)


def vadd(u, v):
    return tuple(a + b for a, b in zip(u, v, strict=True))


def vsub(u, v):
    return tuple(a - b for a, b in zip(u, v, strict=True))


def vneg(u):
    return tuple(-a for a in u)


def smul(c, u):
    return tuple(c * a for a in u)


def dot(u, v):
    return sum(a * b for a, b in zip(u, v, strict=True))


def is_zero(u):
    return all(a == 0 for a in u)


def zero_vec(d):
    return (Fraction(0),) * d


def scale_to_int(v):
    """Clear denominators: smallest positive multiple of v in Z^d."""
    m = 1
    for a in v:
        a = Fraction(a)
        m = m * a.denominator // gcd(m, a.denominator)
    return tuple(int(a * m) for a in v)


def primitive(v):
    """v / gcd of its coordinates, for a nonzero integral vector.

    Output has coprime coordinates and the same orientation as v.
    """
    w = scale_to_int(v)
    if is_zero(w):
        raise MathError("primitive() of the zero vector is undefined")
    g = 0
    for a in w:
        g = gcd(g, abs(a))
    return tuple(a // g for a in w)


# --- integer matrices --------------------------------------------------------

def mat(rows):
    return tuple(tuple(int(x) for x in row) for row in rows)


def identity(n):
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


def zero_mat(rows, cols):
    return tuple((0,) * cols for _ in range(rows))


def mat_shape(m):
    return (len(m), len(m[0]) if m else 0)


def mat_mul(a, b):
    ra, ca = mat_shape(a)
    rb, cb = mat_shape(b)
    if ca != rb:
        raise MathError("matrix shapes %sx%s and %sx%s do not compose" % (ra, ca, rb, cb))
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(ca)) for j in range(cb))
        for i in range(ra)
    )


def mat_vec(m, v):
    rows, cols = mat_shape(m)
    if len(v) != cols:
        raise MathError("matrix with %d columns applied to vector of length %d" % (cols, len(v)))
    return tuple(dot(row, v) for row in m)


def transpose(m):
    rows, cols = mat_shape(m)
    return tuple(tuple(m[i][j] for i in range(rows)) for j in range(cols))


def det(m):
    """Determinant of a square integer matrix (fraction-free Bareiss)."""
    n, c = mat_shape(m)
    if n != c:
        raise MathError("determinant of a non-square matrix")
    if n == 0:
        return 1
    a = [list(row) for row in m]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            a[i][k] = 0
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def smith_normal_form(m):
    """Smith normal form: returns (d, l, r) with l*m*r = d.

    l and r are unimodular; d is diagonal with nonnegative entries and
    d[i][i] divides d[i+1][i+1].
    """
    rows, cols = mat_shape(m)
    a = [list(row) for row in m]
    l = [list(row) for row in identity(rows)]
    r = [list(row) for row in identity(cols)]

    def swap_rows(i, j):
        a[i], a[j] = a[j], a[i]
        l[i], l[j] = l[j], l[i]

    def swap_cols(i, j):
        for row in a:
            row[i], row[j] = row[j], row[i]
        for row in r:
            row[i], row[j] = row[j], row[i]

    def add_row(src, dst, c):
        a[dst] = [a[dst][k] + c * a[src][k] for k in range(cols)]
        l[dst] = [l[dst][k] + c * l[src][k] for k in range(rows)]

    def add_col(src, dst, c):
        for row in a:
            row[dst] += c * row[src]
        for row in r:
            row[dst] += c * row[src]

    t = 0
    while t < min(rows, cols):
        # find a pivot in the remaining block
        pivot = None
        for i in range(t, rows):
            for j in range(t, cols):
                if a[i][j] != 0:
                    if pivot is None or abs(a[i][j]) < abs(a[pivot[0]][pivot[1]]):
                        pivot = (i, j)
        if pivot is None:
            break
        swap_rows(t, pivot[0])
        swap_cols(t, pivot[1])
        # clear row and column t, restarting whenever a remainder shrinks
        while True:
            done = True
            for i in range(t + 1, rows):
                if a[i][t] != 0:
                    add_row(t, i, -(a[i][t] // a[t][t]))
                    if a[i][t] != 0:
                        swap_rows(t, i)
                        done = False
            for j in range(t + 1, cols):
                if a[t][j] != 0:
                    add_col(t, j, -(a[t][j] // a[t][t]))
                    if a[t][j] != 0:
                        swap_cols(t, j)
                        done = False
            if done:
                break
        # pivot must divide the rest of the block
        violated = False
        for i in range(t + 1, rows):
            for j in range(t + 1, cols):
                if a[i][j] % a[t][t] != 0:
                    add_row(i, t, 1)
                    violated = True
                    break
            if violated:
                break
        if violated:
            continue  # redo this pivot with the mixed-in row
        if a[t][t] < 0:
            a[t] = [-x for x in a[t]]
            l[t] = [-x for x in l[t]]
        t += 1

    d = mat(a)
    lm = mat(l)
    rm = mat(r)
    if mat_mul(mat_mul(lm, m), rm) != d:
        raise MathError("smith normal form verification failed")
    return d, lm, rm


def kernel_basis(m):
    """Basis of the integer kernel lattice of m, as a tuple of columns."""
    rows, cols = mat_shape(m)
    d, _, r = smith_normal_form(m)
    rank = sum(1 for i in range(min(rows, cols)) if d[i][i] != 0)
    rt = transpose(r)
    return tuple(rt[j] for j in range(rank, cols))


def solve_integral(m, b):
    """Some integral solution x of m x = b, or None if none exists."""
    rows, cols = mat_shape(m)
    d, l, r = smith_normal_form(m)
    c = mat_vec(l, b)
    y = [0] * cols
    for i in range(rows):
        di = d[i][i] if i < min(rows, cols) else 0
        if di == 0:
            if c[i] != 0:
                return None
        else:
            if c[i] % di != 0:
                return None
            y[i] = c[i] // di
    return mat_vec(r, tuple(y))


def row_hnf(rows):
    """Canonical basis (row-style Hermite normal form) of the lattice
    spanned by the given integer row vectors.  Zero rows are dropped."""
    if not rows:
        return ()
    work = [list(r) for r in rows if not is_zero(r)]
    if not work:
        return ()
    cols = len(work[0])
    basis = []
    col = 0
    while col < cols and work:
        nz = [r for r in work if r[col] != 0]
        rest = [r for r in work if r[col] == 0]
        if not nz:
            col += 1
            continue
        # reduce all rows with a nonzero entry in this column against each other
        while len(nz) > 1:
            nz.sort(key=lambda r: abs(r[col]))
            p = nz[0]
            out = [p]
            for r in nz[1:]:
                q = r[col] // p[col]
                red = [x - q * y for x, y in zip(r, p)]
                if red[col] != 0:
                    out.append(red)
                elif any(red):
                    rest.append(red)
            if len(out) == 1:
                break
            nz = out
        p = nz[0]
        if p[col] < 0:
            p = [-x for x in p]
        basis.append(p)
        work = rest
        col += 1
    # reduce entries above each pivot for canonicity
    for i in reversed(range(len(basis))):
        pcol = next(j for j in range(cols) if basis[i][j] != 0)
        for k in range(i):
            q = basis[k][pcol] // basis[i][pcol]
            if q:
                basis[k] = [x - q * y for x, y in zip(basis[k], basis[i])]
    return tuple(tuple(r) for r in basis)


def rank_of(rows):
    return len(row_hnf([scale_to_int(r) for r in rows]))


class SplitSequence:
    """A chosen splitting of  0 -> N --i--> X --p--> X' -> 0.

    Stores i (kernel embedding), p (projection) and q (cosection with
    q o i = id).  The induced section s: X' -> X satisfies p o s = id and
    q o s = 0; fibers of p are identified with N via q.
    """

    def __init__(self, p, q, i=None, mid_rank=None):
        self.p = mat(p)
        self.q = mat(q)
        self.quot_rank = len(self.p)
        self.n_rank = len(self.q)
        if mid_rank is None:
            if self.p:
                mid_rank = len(self.p[0])
            elif self.q:
                mid_rank = len(self.q[0])
            else:
                raise SchemaError("cannot infer the middle rank from empty p and q")
        self.mid_rank = mid_rank
        if self.p and len(self.p[0]) != mid_rank:
            raise SchemaError("p and q must share their domain rank")
        if self.q and len(self.q[0]) != mid_rank:
            raise SchemaError("p and q must share their domain rank")
        if i is None:
            i = self._derive_kernel_embedding()
        self.i = mat(i)
        if len(self.i) != self.mid_rank or any(len(r) != self.n_rank for r in self.i):
            raise MathError(
                "kernel embedding has shape %s, expected %s"
                % (mat_shape(self.i), (self.mid_rank, self.n_rank))
            )

    def _derive_kernel_embedding(self):
        if self.quot_rank == 0:
            ker = tuple(identity(self.mid_rank))
        else:
            ker = kernel_basis(self.p)
        if len(ker) != self.n_rank:
            raise MathError(
                "kernel of p has rank %d, but q maps onto rank %d" % (len(ker), self.n_rank)
            )
        if self.n_rank == 0:
            return zero_mat(self.mid_rank, 0)
        k = transpose(ker)  # mid x n, columns = kernel basis
        qk = mat_mul(self.q, k)  # n x n, must be unimodular for q to cosect
        dqk = det(qk)
        if abs(dqk) != 1:
            raise MathError("q is not a cosection for ker(p)", qk=[list(r) for r in qk])
        inv = _unimodular_inverse(qk)
        return mat_mul(k, inv)

    def verify(self):
        """Check the three splitting axioms; returns (ok, report)."""
        report = []
        for irow in range(self.quot_rank):
            for jcol in range(self.n_rank):
                if dot(self.p[irow], tuple(self.i[k][jcol] for k in range(self.mid_rank))) != 0:
                    report.append({"axiom": "p_i_zero", "row": irow, "col": jcol})
        qi = tuple(
            tuple(dot(self.q[irow], tuple(self.i[k][jcol] for k in range(self.mid_rank)))
                  for jcol in range(self.n_rank))
            for irow in range(self.n_rank)
        )
        if qi != identity(self.n_rank):
            report.append({"axiom": "q_i_identity", "got": [list(r) for r in qi]})
        stacked = self.p + self.q
        if len(stacked) != self.mid_rank:
            report.append({"axiom": "pq_iso", "reason": "rank mismatch",
                           "got_rows": len(stacked), "expected": self.mid_rank})
        elif abs(det(stacked)) != 1:
            report.append({"axiom": "pq_iso", "det": det(stacked)})
        return (not report), report

    def require_valid(self):
        ok, report = self.verify()
        if not ok:
            raise MathError("split sequence axioms violated", violations=report)

    def section(self, a):
        """s(a): the unique preimage of a under p killed by q."""
        if len(a) != self.quot_rank:
            raise MathError("section argument has wrong rank")
        if self.quot_rank == 0:
            return (Fraction(0),) * self.mid_rank
        af = tuple(Fraction(c) for c in a)
        m = 1
        for c in af:
            m = m * c.denominator // gcd(m, c.denominator)
        ai = tuple(int(c * m) for c in af)
        x0 = solve_integral(self.p, ai)
        if x0 is None:
            raise MathError("no lattice preimage under p", target=list(ai))
        x = tuple(Fraction(c, m) for c in x0)
        return vsub(x, mat_vec_frac(self.i, mat_vec_frac(self.q, x)))


def mat_vec_frac(m, v):
    rows, cols = mat_shape(m)
    if len(v) != cols:
        raise MathError("matrix with %d columns applied to vector of length %d" % (cols, len(v)))
    return tuple(sum(Fraction(m[i][j]) * Fraction(v[j]) for j in range(cols)) for i in range(rows))


def _unimodular_inverse(m):
    """Inverse of a unimodular integer matrix, again integral."""
    n, c = mat_shape(m)
    if n != c:
        raise MathError("inverse of non-square matrix")
    d, l, r = smith_normal_form(m)
    for i in range(n):
        if d[i][i] != 1:
            raise MathError("matrix is not unimodular")
    return mat_mul(r, l)
