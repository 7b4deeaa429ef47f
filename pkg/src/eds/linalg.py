"""Linear algebra over the expression field with sampled pivoting.

Symbolic Gaussian elimination picks pivots by largest evaluated magnitude at
a generic sample point and mirrors every row operation on the evaluated
matrix, so the numeric shadow always agrees with the symbolic state.  Rank
decisions are certified numerically at 3 points for each of 3 derived seeds,
majority rules; disagreement raises RankInstabilityError.
"""

from __future__ import annotations

from collections import Counter

import numpy as np

from . import expr as ex
from .expr import Expr, SingularPointError

RANK_TOL = 1e-9


class RankInstabilityError(Exception):
    def __init__(self, message, witnesses=None):
        super().__init__(message)
        self.witnesses = witnesses or []


def eval_rows(rows, point):
    return np.array([[ex.evaluate(c, point) for c in row] for row in rows],
                    dtype=complex)


def numeric_rank(a, tol=RANK_TOL):
    if a.size == 0:
        return 0
    # equilibrate: rank is invariant under nonzero row/column scaling, and
    # generator rows of wildly different magnitudes otherwise swamp the SVD
    a = np.asarray(a, dtype=complex)
    rs = np.abs(a).max(axis=1)
    a = a / np.where(rs > 0, rs, 1.0)[:, None]
    cs = np.abs(a).max(axis=0)
    a = a / np.where(cs > 0, cs, 1.0)[None, :]
    s = np.linalg.svd(a, compute_uv=False)
    if len(s) == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def _valid_points(chart, sampler, guards, rows, want):
    """Sample points where every entry of rows evaluates cleanly."""
    pts = chart.points(sampler, guards, k=want + 8)
    out = []
    for p in pts:
        try:
            eval_rows(rows, p)
        except SingularPointError:
            continue
        out.append(p)
        if len(out) >= want:
            break
    if not out:
        raise RankInstabilityError("no valid sample points for rank decision")
    return out


def certified_rank(rows, chart, sampler, guards=(), tol=RANK_TOL):
    """Majority rank over 3 seeds x 3 points; disagreement is an error."""
    rows = [[chart.resolve(c) for c in row] for row in rows]
    if not rows:
        return 0
    ranks = []
    for i in range(3):
        for p in _valid_points(chart, sampler.fork(i), guards, rows, 3):
            ranks.append(numeric_rank(eval_rows(rows, p), tol))
    counts = Counter(ranks)
    value, n = counts.most_common(1)[0]
    if n <= len(ranks) // 2:
        raise RankInstabilityError(
            "rank decision unstable: observed %s" % dict(counts), witnesses=ranks)
    return value


def stacked_rank(blocks, chart, sampler, guards=(), tol=RANK_TOL):
    rows = [row for b in blocks for row in b]
    return certified_rank(rows, chart, sampler, guards, tol)


def membership(vectors, span_rows, chart, sampler, guards=(), tol=RANK_TOL):
    """True iff every vector lies in the row span at sample points."""
    base = certified_rank(span_rows, chart, sampler, guards, tol)
    joint = certified_rank(list(span_rows) + list(vectors), chart, sampler, guards, tol)
    return joint == base


def span_equal(a_rows, b_rows, chart, sampler, guards=(), tol=RANK_TOL):
    ra = certified_rank(a_rows, chart, sampler, guards, tol)
    rb = certified_rank(b_rows, chart, sampler, guards, tol)
    rj = certified_rank(list(a_rows) + list(b_rows), chart, sampler, guards, tol)
    return ra == rb == rj


# ------------------------------------------------------------- symbolic passes

def _shadow_point(chart, sampler, guards, rows):
    return _valid_points(chart, sampler, guards, rows, 1)[0]


def _scaled_is_zero(e, points, tol=RANK_TOL):
    """Cancellation-robust zero test: compare |value| against the largest
    intermediate magnitude seen while evaluating, at several points."""
    for p in points:
        sc = [0.0]
        try:
            v = ex.evaluate(e, p, sc)
        except SingularPointError:
            continue
        if abs(v) > tol * max(1.0, sc[0]):
            return False
    return True


def symbolic_eliminate(rows, chart, sampler, guards=(), tol=RANK_TOL):
    """Forward elimination with full pivoting by evaluated magnitude.

    Returns (exprs, pivots) where pivots is a list of (row, col) in
    elimination order and exprs is the eliminated matrix.
    """
    E = [[chart.resolve(c) for c in row] for row in rows]
    if not E:
        return [], []
    pts = _valid_points(chart, sampler, guards, E, 3)
    p = pts[0]
    N = eval_rows(E, p)
    nr, nc = N.shape
    used_rows, used_cols = set(), set()
    pivots = []
    while True:
        best, bm = None, 0.0
        for r in range(nr):
            if r in used_rows:
                continue
            for c in range(nc):
                if c in used_cols:
                    continue
                m = abs(N[r, c])
                if m > bm + 0.0:
                    best, bm = (r, c), m
        if best is None or bm < tol * max(1.0, max(abs(N[r, c])
                                                   for r in range(nr) for c in range(nc))):
            break
        # among numerically acceptable candidates prefer the syntactically
        # smallest entry: dividing by simple pivots curbs expression swell
        r0, c0 = best
        bs = ex.size(E[r0][c0])
        for r in range(nr):
            if r in used_rows:
                continue
            for c in range(nc):
                if c in used_cols or abs(N[r, c]) < 0.05 * bm:
                    continue
                sz = ex.size(E[r][c])
                if sz < bs:
                    (r0, c0), bs = (r, c), sz
        # guard against pivoting on a zero function whose shadow value is
        # cancellation noise: re-evaluate against intermediate magnitudes
        if _scaled_is_zero(E[r0][c0], pts, tol):
            E[r0][c0] = ex.ZERO
            N[r0, c0] = 0.0
            continue
        pivots.append((r0, c0))
        used_rows.add(r0)
        used_cols.add(c0)
        # Gauss-Jordan: eliminate the pivot column in every other row so that
        # each pivot column ends up supported on its pivot row only
        for r in range(nr):
            if r == r0 or ex._is_zero_const(E[r][c0]):
                continue
            factor = ex.div(E[r][c0], E[r0][c0])
            nfac = N[r, c0] / N[r0, c0]
            for c in range(nc):
                if c in used_cols and c != c0:
                    continue
                E[r][c] = ex.add(E[r][c], ex.neg(ex.mul(factor, E[r0][c])))
                N[r, c] = N[r, c] - nfac * N[r0, c]
            E[r][c0] = ex.ZERO
            N[r, c0] = 0.0
    return E, pivots


def symbolic_nullspace(rows, chart, sampler, guards=(), tol=RANK_TOL):
    """Right-nullspace basis (list of Expr coordinate vectors)."""
    if not rows:
        return []
    nc = len(rows[0])
    E, pivots = symbolic_eliminate(rows, chart, sampler, guards, tol)
    pivot_cols = {c: r for r, c in pivots}
    free = [c for c in range(nc) if c not in pivot_cols]
    if free and pivot_cols:
        pts = _valid_points(chart, sampler, guards, rows, 3)
    basis = []
    for f in free:
        vec = [ex.ZERO] * nc
        vec[f] = ex.ONE
        for c, r in pivot_cols.items():
            if _scaled_is_zero(E[r][f], pts, tol):
                continue
            vec[c] = ex.neg(ex.div(E[r][f], E[r][c]))
        basis.append(simplify_vector(vec))
    return basis


def left_nullspace(rows, chart, sampler, guards=(), tol=RANK_TOL):
    t = [list(col) for col in zip(*rows)]
    return symbolic_nullspace(t, chart, sampler, guards, tol)


def symbolic_inverse(mat, chart, sampler, guards=(), tol=RANK_TOL):
    """Inverse of a square Expr matrix (partial row pivoting)."""
    n = len(mat)
    E = [[chart.resolve(c) for c in row] + [ex.ONE if i == j else ex.ZERO
                                            for j in range(n)]
         for i, row in enumerate(mat)]
    p = _shadow_point(chart, sampler, guards, [row[:n] for row in E])
    N = eval_rows(E, p)
    row_of_col = {}
    used = set()
    for c in range(n):
        r0, bm = None, 0.0
        for r in range(n):
            if r in used:
                continue
            if abs(N[r, c]) > bm:
                r0, bm = r, abs(N[r, c])
        if r0 is None or bm < tol * max(1.0, abs(N).max()):
            raise RankInstabilityError("matrix numerically singular at sample point")
        used.add(r0)
        row_of_col[c] = r0
        for r in range(n):
            if r == r0 or ex._is_zero_const(E[r][c]):
                continue
            factor = ex.div(E[r][c], E[r0][c])
            nfac = N[r, c] / N[r0, c]
            for cc in range(2 * n):
                E[r][cc] = ex.add(E[r][cc], ex.neg(ex.mul(factor, E[r0][cc])))
                N[r, cc] = N[r, cc] - nfac * N[r0, cc]
            E[r][c] = ex.ZERO
            N[r, c] = 0.0
    inv = []
    for c in range(n):
        r = row_of_col[c]
        piv = E[r][c]
        inv.append([ex.div(E[r][n + j], piv) for j in range(n)])
    return inv


def solve_left(T, M, chart, sampler, guards=(), tol=RANK_TOL):
    """X with X M = T (M has full row rank); raises if inconsistent.

    Picks a square invertible column submatrix of M numerically, inverts it
    symbolically, and returns T_J (M_J)^{-1}.  The caller should verify the
    full residual with is_zero.
    """
    k = len(M)
    p = _shadow_point(chart, sampler, guards, M)
    N = eval_rows(M, p)
    # greedy column selection by QR-style pivoting
    cols = []
    work = N.copy()
    for _ in range(k):
        norms = np.linalg.norm(work, axis=0)
        for c in cols:
            norms[c] = -1
        c = int(np.argmax(norms))
        if norms[c] < tol * max(1.0, abs(N).max()):
            raise RankInstabilityError("column selection failed: M row-rank deficient")
        cols.append(c)
        v = work[:, c] / np.linalg.norm(work[:, c])
        work = work - np.outer(v, v.conj() @ work)
    cols.sort()
    MJ = [[M[r][c] for c in cols] for r in range(k)]
    MJ_inv = symbolic_inverse(MJ, chart, sampler, guards, tol)
    X = []
    for trow in T:
        tj = [trow[c] for c in cols]
        X.append([ex.add(*[ex.mul(tj[a], MJ_inv[a][j]) for a in range(k)])
                  for j in range(k)])
    return X


def matmul(A, B):
    n, k, m = len(A), len(B), len(B[0])
    return [[ex.add(*[ex.mul(A[i][a], B[a][j]) for a in range(k)])
             for j in range(m)] for i in range(n)]


def mat_conj(A, chart):
    return [[chart.conj(c) for c in row] for row in A]


def identity_matrix(n):
    return [[ex.ONE if i == j else ex.ZERO for j in range(n)] for i in range(n)]


def simplify_vector(vec):
    """Clear common denominator factors and divide out common numerator
    factors (syntactic only)."""
    nums, dens = [], []
    for e in vec:
        if e.kind == "div":
            nums.append(e.data[0])
            dens.append(e.data[1])
        else:
            nums.append(e)
            dens.append(ex.ONE)
    # least common multiple of denominators, syntactically
    lcm_fac = {}
    for d in dens:
        if d is ex.ONE:
            continue
        _, fac = ex._factor_map(d)
        for k, (b, n) in fac.items():
            if k not in lcm_fac or lcm_fac[k][1] < n:
                lcm_fac[k] = (b, n)
    if lcm_fac:
        L = ex._rebuild((ex.Fraction(1), ex.Fraction(0)), lcm_fac)
        vec = [ex.mul(L, e) for e in vec]
    # common numerator factors
    common = None
    for e in vec:
        if ex._is_zero_const(e):
            continue
        if e.kind == "div":
            return [ex.normalize(v) for v in vec]
        _, fac = ex._factor_map(e)
        if common is None:
            common = dict(fac)
        else:
            for k in list(common):
                if k in fac:
                    b, n = common[k]
                    common[k] = (b, min(n, fac[k][1]))
                    if common[k][1] <= 0:
                        del common[k]
                else:
                    del common[k]
        if not common:
            break
    if common:
        G = ex._rebuild((ex.Fraction(1), ex.Fraction(0)), common)
        vec = [ex.div(e, G) for e in vec]
    return [ex.normalize(v) for v in vec]
