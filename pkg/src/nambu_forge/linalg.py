"""Exact linear algebra over Q and over polynomial rings.

Rational matrices are plain lists of Fraction rows.  The polynomial-side
solver decides membership of a polynomial vector in the span of polynomial
columns: a fraction-free elimination pass handles the common case of constant
pivots, and a degree-bounded coefficient-matching system covers the rest (the
bound is explicit and reported by callers).
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Optional, Sequence

from .kernel import ONE, ZERO, SparsePoly

Row = list[Fraction]
Matrix = list[Row]


def mat_copy(m: Sequence[Sequence[Fraction]]) -> Matrix:
    return [list(row) for row in m]


def rref(m: Sequence[Sequence[Fraction]]) -> tuple[Matrix, list[int]]:
    """Reduced row-echelon form and pivot column indices."""
    a = mat_copy(m)
    rows = len(a)
    cols = len(a[0]) if rows else 0
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        pivot_row = next((i for i in range(r, rows) if a[i][c] != 0), None)
        if pivot_row is None:
            continue
        a[r], a[pivot_row] = a[pivot_row], a[r]
        inv = 1 / a[r][c]
        a[r] = [v * inv for v in a[r]]
        for i in range(rows):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [vi - f * vr for vi, vr in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return a[:r] + [[ZERO] * cols for _ in range(rows - r)], pivots


def rank(m: Sequence[Sequence[Fraction]]) -> int:
    if not m:
        return 0
    return len(rref(m)[1])


def solve(m: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> Optional[Row]:
    """One exact solution of m x = b (free variables set to 0), or None."""
    if not m:
        return []
    rows = len(m)
    aug = [list(row) + [b[i]] for i, row in enumerate(m)]
    red, pivots = rref(aug)
    cols = len(m[0])
    if cols in pivots:
        return None  # pivot in the constant column: inconsistent
    x = [ZERO] * cols
    for r, c in enumerate(pivots):
        x[c] = red[r][cols]
    return x


def nullspace(m: Sequence[Sequence[Fraction]]) -> list[Row]:
    """Basis of the right null space (deterministic free-variable sweep)."""
    if not m:
        return []
    cols = len(m[0])
    red, pivots = rref(m)
    free = [c for c in range(cols) if c not in pivots]
    basis: list[Row] = []
    for f in free:
        v = [ZERO] * cols
        v[f] = ONE
        for r, c in enumerate(pivots):
            v[c] = -red[r][f]
        basis.append(v)
    return basis


def row_space_equal(a: Sequence[Sequence[Fraction]],
                    b: Sequence[Sequence[Fraction]]) -> bool:
    """Whether two row sets span the same subspace."""
    if not a and not b:
        return True
    cols = len(a[0]) if a else len(b[0])
    ra = [row for row in rref(a)[0] if any(v != 0 for v in row)] if a else []
    rb = [row for row in rref(b)[0] if any(v != 0 for v in row)] if b else []
    return ra == rb and (not ra or len(ra[0]) == cols)


def poly_det(rows: Sequence[Sequence[SparsePoly]]) -> SparsePoly:
    """Determinant of a small square polynomial matrix (permutation expansion)."""
    k = len(rows)
    if k == 0:
        raise ValueError("empty matrix")
    num_vars = rows[0][0].num_vars
    result = SparsePoly.zero(num_vars)
    for perm in itertools.permutations(range(k)):
        sign = ONE
        seen = list(perm)
        for i in range(k):  # parity by counting inversions
            for j in range(i + 1, k):
                if seen[i] > seen[j]:
                    sign = -sign
        term = SparsePoly.const(num_vars, sign)
        for i in range(k):
            entry = rows[i][perm[i]]
            if entry.is_zero():
                term = SparsePoly.zero(num_vars)
                break
            term = term * entry
        result = result + term
    return result


def _monomials_up_to(num_vars: int, degree: int):
    """All exponent tuples of total degree <= degree, lexicographically."""
    if num_vars == 0:
        yield ()
        return
    for total in range(degree + 1):
        for bars in itertools.combinations(range(total + num_vars - 1), num_vars - 1):
            exp = []
            prev = -1
            for b in bars:
                exp.append(b - prev - 1)
                prev = b
            exp.append(total + num_vars - 2 - prev)
            yield tuple(exp)


def solve_in_span(columns: Sequence[Sequence[SparsePoly]],
                  target: Sequence[SparsePoly],
                  degree_bound: int = 4) -> Optional[list[SparsePoly]]:
    """Polynomial coefficients c with sum_k c_k * columns[k] = target, or None.

    First tries Gauss-Jordan elimination using constant pivots only (exact,
    no division by polynomials); any subsystem left over is decided by
    matching coefficients of unknown polynomials of degree <= degree_bound.
    A None verdict is definitive when constant pivots sufficed, and is
    "no solution of degree <= bound" otherwise.
    """
    ncols = len(columns)
    nrows = len(target)
    if ncols == 0:
        return [] if all(t.is_zero() for t in target) else None
    num_vars = target[0].num_vars
    a = [[columns[k][r] for k in range(ncols)] for r in range(nrows)]
    t = list(target)

    pivot_of_col: dict[int, int] = {}
    used_rows: set[int] = set()
    while True:
        found = None
        for r in range(nrows):
            if r in used_rows:
                continue
            for c in range(ncols):
                if c in pivot_of_col:
                    continue
                entry = a[r][c]
                if not entry.is_zero() and entry.is_constant():
                    found = (r, c)
                    break
            if found:
                break
        if not found:
            break
        r, c = found
        used_rows.add(r)
        pivot_of_col[c] = r
        inv = 1 / a[r][c].constant_value()
        a[r] = [e.scale(inv) for e in a[r]]
        t[r] = t[r].scale(inv)
        for i in range(nrows):
            if i == r or a[i][c].is_zero():
                continue
            f = a[i][c]
            a[i] = [ei - f * er for ei, er in zip(a[i], a[r])]
            t[i] = t[i] - f * t[r]

    open_cols = [c for c in range(ncols) if c not in pivot_of_col]
    open_rows = [r for r in range(nrows) if r not in used_rows]
    if not any(not a[r][c].is_zero() for r in open_rows for c in open_cols):
        # Open columns are zero on every open row, so setting them to zero is
        # consistent; leftover rows then read 0 = t[r] and must vanish.
        for r in open_rows:
            if not t[r].is_zero():
                return None
        coeffs = [SparsePoly.zero(num_vars) for _ in range(ncols)]
        for c, r in pivot_of_col.items():
            coeffs[c] = t[r]
        return coeffs

    # degree-bounded coefficient matching on the remaining system
    return _solve_by_matching(a, t, pivot_of_col, open_rows, open_cols, ncols,
                              num_vars, degree_bound)


def _solve_by_matching(a, t, pivot_of_col, open_rows, open_cols, ncols, num_vars,
                       degree_bound) -> Optional[list[SparsePoly]]:
    monos = list(_monomials_up_to(num_vars, degree_bound))
    unknowns = [(c, e) for c in open_cols for e in monos]
    index = {ue: i for i, ue in enumerate(unknowns)}
    equations: dict[tuple[int, tuple], Row] = {}
    rhs: dict[tuple[int, tuple], Fraction] = {}

    def eq_row(key):
        if key not in equations:
            equations[key] = [ZERO] * len(unknowns)
            rhs[key] = ZERO
        return equations[key]

    for r in open_rows:
        for c in open_cols:
            entry = a[r][c]
            for e_entry, coeff in entry.terms.items():
                for e_unknown in monos:
                    e_total = tuple(x + y for x, y in zip(e_entry, e_unknown))
                    eq_row((r, e_total))[index[(c, e_unknown)]] += coeff
        for e, coeff in t[r].terms.items():
            eq_row((r, e))
            rhs[(r, e)] += coeff

    keys = sorted(equations.keys())
    system = [equations[k] for k in keys]
    vector = [rhs[k] for k in keys]
    if system:
        sol = solve(system, vector)
        if sol is None:
            return None
    else:
        sol = [ZERO] * len(unknowns)
    coeffs = [SparsePoly.zero(num_vars) for _ in range(ncols)]
    for (c, e), i in index.items():
        if sol[i] != 0:
            coeffs[c] = coeffs[c] + SparsePoly.monomial(num_vars, e, sol[i])
    # back-substitute into the constant-pivot rows
    for c, r in pivot_of_col.items():
        residual = t[r]
        for oc in open_cols:
            if not a[r][oc].is_zero() and not coeffs[oc].is_zero():
                residual = residual - a[r][oc] * coeffs[oc]
        coeffs[c] = residual
    # verify exactly (guards the degree bound)
    for r in range(len(t)):
        total = SparsePoly.zero(num_vars)
        for c in range(ncols):
            if not coeffs[c].is_zero() and not a[r][c].is_zero():
                total = total + a[r][c] * coeffs[c]
        if not (total == t[r]):
            return None
    return coeffs
