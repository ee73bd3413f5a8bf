"""Finite-dimensional n-Lie algebras over Q given by structure constants.

The n-ary bracket is stored only on strictly increasing basis tuples; skew
symmetry is applied at evaluation time through multi-index canonicalization
and is never stored redundantly.  All checkers enumerate basis tuples in
lexicographic order and report the first violation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .kernel import (MultiIndex, ONE, ZERO, canonical_multiindex,
                     increasing_tuples, rat, wedge_insert)
from .report import CheckResult, Witness, failed, first_witness, passed

Vector = tuple[Fraction, ...]
Matrix = tuple[Vector, ...]
FundamentalElement = dict[MultiIndex, Fraction]


@dataclass(frozen=True)
class NLieAlgebra:
    """n-ary skew bracket on Q^dim, tabulated on increasing basis tuples."""

    arity: int
    dim: int
    table: Mapping[MultiIndex, Vector]

    def __post_init__(self):
        if self.arity < 2:
            raise ValueError("arity must be >= 2")
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")
        for key, value in self.table.items():
            if len(key) != self.arity or list(key) != sorted(set(key)):
                raise ValueError(f"table key {key} is not an increasing {self.arity}-tuple")
            if key[0] < 1 or key[-1] > self.dim:
                raise ValueError(f"table key {key} out of range 1..{self.dim}")
            if len(value) != self.dim:
                raise ValueError(f"table value for {key} has length {len(value)}")

    def unit(self, k: int) -> Vector:
        return tuple(ONE if i == k else ZERO for i in range(1, self.dim + 1))

    def basis_value(self, indices: Sequence[int]) -> Vector:
        """Bracket of basis vectors e_{i_1},...,e_{i_n} via the skew extension."""
        key, sign = canonical_multiindex(indices)
        if sign == 0:
            return (ZERO,) * self.dim
        value = self.table.get(key)
        if value is None:
            return (ZERO,) * self.dim
        if sign == 1:
            return value
        return tuple(-c for c in value)


def zero_vector(dim: int) -> Vector:
    return (ZERO,) * dim


def vec_add(u: Vector, v: Vector) -> Vector:
    return tuple(a + b for a, b in zip(u, v))


def vec_sub(u: Vector, v: Vector) -> Vector:
    return tuple(a - b for a, b in zip(u, v))


def vec_scale(u: Vector, c: Fraction) -> Vector:
    return tuple(a * c for a in u)


def nlie_bracket(L: NLieAlgebra, vectors: Sequence[Sequence]) -> Vector:
    """Multilinear skew extension of the structure table to rational vectors."""
    if len(vectors) != L.arity:
        raise ValueError(f"expected {L.arity} arguments, got {len(vectors)}")
    vs = [tuple(rat(c) for c in v) for v in vectors]
    for v in vs:
        if len(v) != L.dim:
            raise ValueError(f"vector length {len(v)} does not match dimension {L.dim}")
    result = list(zero_vector(L.dim))
    supports = [[k for k, c in enumerate(v, start=1) if c != 0] for v in vs]
    for combo in itertools.product(*supports):
        coeff = ONE
        for v, k in zip(vs, combo):
            coeff *= v[k - 1]
        value = L.basis_value(combo)
        for i, c in enumerate(value):
            if c != 0:
                result[i] += coeff * c
    return tuple(result)


def check_fundamental_identity(L: NLieAlgebra, jobs: int = 1) -> CheckResult:
    """Verify the bracket's derivation law over all basis tuples.

    X ranges over increasing (n-1)-tuples and Y over increasing n-tuples;
    skew symmetry of both sides makes this coverage complete, and
    multilinearity extends the verdict to arbitrary rational arguments.
    """
    n, d = L.arity, L.dim
    sites = [(x, y) for x in increasing_tuples(d, n - 1)
             for y in increasing_tuples(d, n)]

    def probe(site) -> Optional[Witness]:
        x, y = site
        xs = [L.unit(i) for i in x]
        inner = nlie_bracket(L, [L.unit(j) for j in y])
        lhs = nlie_bracket(L, xs + [inner])
        rhs = zero_vector(d)
        for i in range(n):
            moved = nlie_bracket(L, xs + [L.unit(y[i])])
            args = [L.unit(j) for j in y]
            args[i] = moved
            rhs = vec_add(rhs, nlie_bracket(L, args))
        residual = vec_sub(lhs, rhs)
        if any(c != 0 for c in residual):
            return Witness("fundamental-identity", (x, y), format_vector(residual))
        return None

    witness = first_witness(sites, probe, jobs)
    if witness is not None:
        return CheckResult(False, witness)
    return passed()


def format_vector(v: Sequence) -> str:
    return "(" + ", ".join(str(c) for c in v) + ")"


# -- induced Leibniz bracket on fundamental elements ---------------------------


def induced_leibniz(L: NLieAlgebra) -> dict[tuple[MultiIndex, MultiIndex],
                                            FundamentalElement]:
    """Binary bracket on basis wedges of length n-1, one slot-insertion per summand."""
    n, d = L.arity, L.dim
    table: dict[tuple[MultiIndex, MultiIndex], FundamentalElement] = {}
    windices = list(increasing_tuples(d, n - 1))
    for x in windices:
        xs = [L.unit(i) for i in x]
        for y in windices:
            acc: FundamentalElement = {}
            for slot in range(n - 1):
                moved = nlie_bracket(L, xs + [L.unit(y[slot])])
                for k, c in enumerate(moved, start=1):
                    if c == 0:
                        continue
                    key, sign = wedge_insert(y, slot, k)
                    if sign == 0:
                        continue
                    s = acc.get(key, ZERO) + c * sign
                    if s == 0:
                        acc.pop(key, None)
                    else:
                        acc[key] = s
            table[(x, y)] = acc
    return table


def leibniz_apply(table, u: FundamentalElement, v: FundamentalElement) -> FundamentalElement:
    """Bilinear extension of the induced bracket to fundamental elements."""
    acc: FundamentalElement = {}
    for xi, cu in sorted(u.items()):
        for yj, cv in sorted(v.items()):
            for key, c in table[(xi, yj)].items():
                s = acc.get(key, ZERO) + cu * cv * c
                if s == 0:
                    acc.pop(key, None)
                else:
                    acc[key] = s
    return acc


def check_induced_leibniz(L: NLieAlgebra, jobs: int = 1) -> CheckResult:
    """Leibniz law [x,[y,z]] = [[x,y],z] + [y,[x,z]] on all basis wedge triples."""
    n, d = L.arity, L.dim
    table = induced_leibniz(L)
    windices = list(increasing_tuples(d, n - 1))
    sites = [(x, y, z) for x in windices for y in windices for z in windices]

    def probe(site) -> Optional[Witness]:
        x, y, z = site
        ex, ey, ez = {x: ONE}, {y: ONE}, {z: ONE}
        lhs = leibniz_apply(table, ex, table[(y, z)])
        rhs = leibniz_apply(table, table[(x, y)], ez)
        for key, c in leibniz_apply(table, ey, table[(x, z)]).items():
            s = rhs.get(key, ZERO) + c
            if s == 0:
                rhs.pop(key, None)
            else:
                rhs[key] = s
        residual = dict(lhs)
        for key, c in rhs.items():
            s = residual.get(key, ZERO) - c
            if s == 0:
                residual.pop(key, None)
            else:
                residual[key] = s
        if residual:
            return Witness("leibniz-identity", (x, y, z),
                           format_fundamental(residual))
        return None

    witness = first_witness(sites, probe, jobs)
    if witness is not None:
        return CheckResult(False, witness)
    return passed()


def format_fundamental(elem: FundamentalElement) -> str:
    if not elem:
        return "0"
    bits = []
    for key in sorted(elem):
        wedge = "^".join(f"e{i}" for i in key)
        bits.append(f"{elem[key]}*{wedge}")
    return " + ".join(bits)


# -- representations ------------------------------------------------------------


@dataclass(frozen=True)
class RepTable:
    """Action of basis wedges on Q^space_dim; skew extension fills other tuples."""

    algebra_dim: int
    arity: int
    space_dim: int
    entries: Mapping[MultiIndex, Matrix]

    def __post_init__(self):
        for key, mat in self.entries.items():
            if len(key) != self.arity - 1 or list(key) != sorted(set(key)):
                raise ValueError(f"rep key {key} is not an increasing tuple")
            if len(mat) != self.space_dim or any(len(row) != self.space_dim
                                                 for row in mat):
                raise ValueError(f"rep matrix for {key} is not {self.space_dim} square")


def mat_zero(w: int) -> Matrix:
    return tuple((ZERO,) * w for _ in range(w))


def mat_add(a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def mat_sub(a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(x - y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def mat_scale(a: Matrix, c: Fraction) -> Matrix:
    return tuple(tuple(x * c for x in row) for row in a)


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    w = len(a)
    bt = list(zip(*b))
    return tuple(tuple(sum((ra[k] * cb[k] for k in range(w)), ZERO)
                       for cb in bt) for ra in a)


def rep_apply(R: RepTable, indices: Sequence[int]) -> Matrix:
    key, sign = canonical_multiindex(indices)
    if sign == 0:
        return mat_zero(R.space_dim)
    mat = R.entries.get(key)
    if mat is None:
        return mat_zero(R.space_dim)
    return mat if sign == 1 else mat_scale(mat, Fraction(-1))


def _rep_on_vector_slot(R: RepTable, prefix: Sequence[int], vector: Vector,
                        suffix: Sequence[int]) -> Matrix:
    """rho(prefix, v, suffix) extended linearly in the vector slot."""
    acc = mat_zero(R.space_dim)
    for k, c in enumerate(vector, start=1):
        if c == 0:
            continue
        acc = mat_add(acc, mat_scale(rep_apply(R, list(prefix) + [k] + list(suffix)), c))
    return acc


def check_representation(L: NLieAlgebra, R: RepTable, jobs: int = 1) -> CheckResult:
    """Verify the two representation laws on basis tuples.

    The commutator law runs over pairs of increasing (n-1)-tuples; the
    composition law over (increasing (n-2)-tuple, increasing n-tuple) pairs.
    """
    if R.algebra_dim != L.dim or R.arity != L.arity:
        raise ValueError("representation shape does not match the algebra")
    n, d = L.arity, L.dim
    pair_sites = [("commutator", x, y)
                  for x in increasing_tuples(d, n - 1)
                  for y in increasing_tuples(d, n - 1)]
    comp_sites = [("composition", x, y)
                  for x in increasing_tuples(d, n - 2)
                  for y in increasing_tuples(d, n)]

    def probe(site) -> Optional[Witness]:
        law, x, y = site
        if law == "commutator":
            mx, my = rep_apply(R, x), rep_apply(R, y)
            lhs = mat_sub(mat_mul(mx, my), mat_mul(my, mx))
            rhs = mat_zero(R.space_dim)
            for i in range(n - 1):
                moved = nlie_bracket(L, [L.unit(j) for j in x] + [L.unit(y[i])])
                rhs = mat_add(rhs, _rep_on_vector_slot(R, y[:i], moved, y[i + 1:]))
            name = "representation-commutator"
        else:
            inner = nlie_bracket(L, [L.unit(j) for j in y])
            lhs = _rep_on_vector_slot(R, x, inner, ())
            rhs = mat_zero(R.space_dim)
            for i in range(n):
                hat = y[:i] + y[i + 1:]
                sign = ONE if (n - 1 - i) % 2 == 0 else -ONE
                term = mat_mul(rep_apply(R, hat),
                               rep_apply(R, list(x) + [y[i]]))
                rhs = mat_add(rhs, mat_scale(term, sign))
            name = "representation-composition"
        residual = mat_sub(lhs, rhs)
        if any(c != 0 for row in residual for c in row):
            return Witness(name, (x, y), format_matrix(residual))
        return None

    witness = first_witness(pair_sites + comp_sites, probe, jobs)
    if witness is not None:
        return CheckResult(False, witness)
    return passed()


def format_matrix(m: Matrix) -> str:
    return "[" + "; ".join(", ".join(str(c) for c in row) for row in m) + "]"


def adjoint_representation(L: NLieAlgebra) -> RepTable:
    """rho(x)(v) = [x_1,...,x_{n-1}, v], as matrices on the algebra itself."""
    n, d = L.arity, L.dim
    entries: dict[MultiIndex, Matrix] = {}
    for key in increasing_tuples(d, n - 1):
        columns = [nlie_bracket(L, [L.unit(i) for i in key] + [L.unit(k)])
                   for k in range(1, d + 1)]
        mat = tuple(tuple(columns[k][row] for k in range(d)) for row in range(d))
        if any(c != 0 for r in mat for c in r):
            entries[key] = mat
    return RepTable(d, n, d, entries)


# -- builtins --------------------------------------------------------------------


def v4() -> NLieAlgebra:
    """The simple four-dimensional 3-Lie algebra [e_i,e_j,e_k]_l = epsilon_{ijkl}."""
    table = {
        (1, 2, 3): (ZERO, ZERO, ZERO, ONE),
        (1, 2, 4): (ZERO, ZERO, -ONE, ZERO),
        (1, 3, 4): (ZERO, ONE, ZERO, ZERO),
        (2, 3, 4): (-ONE, ZERO, ZERO, ZERO),
    }
    return NLieAlgebra(3, 4, table)
