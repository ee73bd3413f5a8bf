"""Polynomial n-vector fields on affine space and their bracket calculus.

The tensor stores one polynomial per increasing n-index; the bracket of n
polynomials contracts the tensor with the n x n matrix of their partials.
Submanifolds are coordinate subspaces or polynomial graphs, so reduction
modulo a vanishing ideal is plain substitution and every tangency test is an
exact polynomial identity.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .kernel import (MultiIndex, ONE, PolyDerivation, SparsePoly, ZERO,
                     canonical_multiindex, increasing_tuples, poly_to_str, rat)
from .linalg import Row, nullspace, poly_det, rref, row_space_equal
from .report import CheckResult, Witness, failed, first_witness, passed

SHARP_CONVENTION_NOTE = (
    "sharp-map convention: <sharp(a_1,...,a_{n-1}), b> = tensor(a_1,...,a_{n-1}, b)")

FI_COVERAGE_NOTE = (
    "fundamental identity verified on a finite probe set only; probe coverage "
    "is reported, completeness for all smooth arguments is not claimed")

Covector = tuple[SparsePoly, ...]


@dataclass(frozen=True)
class NambuTensor:
    """n-vector field: increasing n-indices over 1..num_vars to coefficients."""

    order: int
    num_vars: int
    components: Mapping[MultiIndex, SparsePoly]

    def __post_init__(self):
        if self.order < 2:
            raise ValueError("order must be >= 2")
        for key, coeff in self.components.items():
            if len(key) != self.order or list(key) != sorted(set(key)):
                raise ValueError(f"key {key} is not an increasing {self.order}-tuple")
            if key[0] < 1 or key[-1] > self.num_vars:
                raise ValueError(f"key {key} out of range 1..{self.num_vars}")
            if coeff.num_vars != self.num_vars:
                raise ValueError(f"coefficient at {key} is over the wrong ring")

    def component(self, indices: Sequence[int]) -> SparsePoly:
        key, sign = canonical_multiindex(indices)
        if sign == 0:
            return SparsePoly.zero(self.num_vars)
        coeff = self.components.get(key)
        if coeff is None:
            return SparsePoly.zero(self.num_vars)
        return coeff if sign == 1 else -coeff


def nambu_bracket(pi: NambuTensor, functions: Sequence[SparsePoly]) -> SparsePoly:
    """Contraction of the tensor with the partials matrix of the arguments."""
    n = pi.order
    if len(functions) != n:
        raise ValueError(f"bracket takes {n} functions")
    for f in functions:
        if f.num_vars != pi.num_vars:
            raise ValueError("function over the wrong ring")
    grads = [[f.partial(j) for j in range(1, pi.num_vars + 1)] for f in functions]
    result = SparsePoly.zero(pi.num_vars)
    for key, coeff in sorted(pi.components.items()):
        block = [[grads[r][c - 1] for c in key] for r in range(n)]
        det = poly_det(block)
        if not det.is_zero():
            result = result + coeff * det
    return result


def eval_on_covectors(pi: NambuTensor, covectors: Sequence[Covector]) -> SparsePoly:
    """tensor(b_1,...,b_n) for covectors given by coefficient rows."""
    n = pi.order
    if len(covectors) != n:
        raise ValueError(f"need {n} covectors")
    result = SparsePoly.zero(pi.num_vars)
    for key, coeff in sorted(pi.components.items()):
        block = [[covectors[r][c - 1] for c in key] for r in range(n)]
        det = poly_det(block)
        if not det.is_zero():
            result = result + coeff * det
    return result


def sharp(pi: NambuTensor, covectors: Sequence[Covector]) -> PolyDerivation:
    """Vector field pairing the tensor against n-1 covectors (see the note)."""
    m = pi.num_vars
    unit_rows = [tuple(SparsePoly.const(m, 1) if c == j else SparsePoly.zero(m)
                       for c in range(1, m + 1)) for j in range(1, m + 1)]
    comps = [eval_on_covectors(pi, list(covectors) + [unit_rows[j]])
             for j in range(m)]
    return PolyDerivation(comps)


def hamiltonian_vf(pi: NambuTensor, functions: Sequence[SparsePoly]) -> PolyDerivation:
    """The derivation g -> bracket(f_1,...,f_{n-1}, g)."""
    if len(functions) != pi.order - 1:
        raise ValueError(f"need {pi.order - 1} functions")
    covectors = [tuple(f.partial(j) for j in range(1, pi.num_vars + 1))
                 for f in functions]
    return sharp(pi, covectors)


def default_probes(num_vars: int, degree: int = 2) -> list[SparsePoly]:
    """All monomials of total degree 1..degree, lexicographically."""
    probes = []
    for total in range(1, degree + 1):
        for combo in itertools.combinations_with_replacement(
                range(1, num_vars + 1), total):
            p = SparsePoly.const(num_vars, 1)
            for j in combo:
                p = p * SparsePoly.variable(num_vars, j)
            probes.append(p)
    return probes


def check_nambu_fi(pi: NambuTensor, probes: Sequence[SparsePoly] | None = None,
                   probe_degree: int = 2, jobs: int = 1) -> CheckResult:
    """Fundamental identity over all tuples from the probe set.

    Both sides are skew in the first block and in the second, so increasing
    probe combinations give full tuple coverage of the probe set.
    """
    if probes is None:
        probes = default_probes(pi.num_vars, probe_degree)
        coverage = (f"probe set: all monomials of degree <= {probe_degree} "
                    f"({len(probes)} probes)")
    else:
        probes = list(probes)
        coverage = f"probe set: {len(probes)} user probes"
    if not probes:
        raise ValueError("probe set must be nonempty")
    n = pi.order
    notes = (coverage, FI_COVERAGE_NOTE)
    sites = [(f, g) for f in itertools.combinations(range(len(probes)), n - 1)
             for g in itertools.combinations(range(len(probes)), n)]

    def probe_site(site) -> Optional[Witness]:
        fidx, gidx = site
        fs = [probes[i] for i in fidx]
        gs = [probes[i] for i in gidx]
        lhs = nambu_bracket(pi, fs + [nambu_bracket(pi, gs)])
        rhs = SparsePoly.zero(pi.num_vars)
        for i in range(n):
            args = list(gs)
            args[i] = nambu_bracket(pi, fs + [gs[i]])
            rhs = rhs + nambu_bracket(pi, args)
        residual = lhs - rhs
        if not residual.is_zero():
            return Witness("fundamental-identity",
                           (tuple(poly_to_str(p) for p in fs),
                            tuple(poly_to_str(p) for p in gs)),
                           poly_to_str(residual))
        return None

    witness = first_witness(sites, probe_site, jobs)
    if witness is not None:
        return CheckResult(False, witness, notes)
    return passed(notes=notes)


# -- polynomial maps and pushforward ------------------------------------------------


@dataclass(frozen=True)
class PolyMap:
    """Polynomial map between affine spaces, one component per target variable."""

    source_vars: int
    target_vars: int
    components: tuple[SparsePoly, ...]

    def __post_init__(self):
        if len(self.components) != self.target_vars:
            raise ValueError("need one component per target variable")
        for c in self.components:
            if c.num_vars != self.source_vars:
                raise ValueError("component over the wrong ring")

    def pullback(self, f: SparsePoly) -> SparsePoly:
        if f.num_vars != self.target_vars:
            raise ValueError("function is not over the target space")
        if self.target_vars == 0:
            return SparsePoly.const(self.source_vars, f.constant_value())
        return f.substitute(self.components)

    def jacobian(self) -> list[list[SparsePoly]]:
        return [[c.partial(j) for j in range(1, self.source_vars + 1)]
                for c in self.components]


def identity_map(num_vars: int) -> PolyMap:
    return PolyMap(num_vars, num_vars,
                   tuple(SparsePoly.variable(num_vars, j)
                         for j in range(1, num_vars + 1)))


def check_nambu_map(phi: PolyMap, pi1: NambuTensor, pi2: NambuTensor,
                    jobs: int = 1) -> CheckResult:
    """Pushforward law, componentwise as exact polynomials.

    For each increasing target index J: the source tensor contracted with the
    J-rows of the map's Jacobian must equal the target coefficient pulled back
    along the map.
    """
    if phi.source_vars != pi1.num_vars or phi.target_vars != pi2.num_vars:
        raise ValueError("map does not connect the tensor spaces")
    if pi1.order != pi2.order:
        raise ValueError("tensor orders differ")
    n = pi1.order
    jac = phi.jacobian()
    sites = list(increasing_tuples(pi2.num_vars, n))

    def probe(J) -> Optional[Witness]:
        lhs = SparsePoly.zero(pi1.num_vars)
        for I, coeff in sorted(pi1.components.items()):
            block = [[jac[j - 1][i - 1] for i in I] for j in J]
            det = poly_det(block)
            if not det.is_zero():
                lhs = lhs + coeff * det
        rhs = phi.pullback(pi2.components.get(J, SparsePoly.zero(pi2.num_vars)))
        residual = lhs - rhs
        if not residual.is_zero():
            return Witness("pushforward-law", (J,), poly_to_str(residual))
        return None

    witness = first_witness(sites, probe, jobs)
    if witness is not None:
        return CheckResult(False, witness)
    return passed()


# -- submanifolds ------------------------------------------------------------------


@dataclass(frozen=True)
class PolySubmanifold:
    """Coordinate subspace or polynomial graph inside affine space.

    coordinate kind: the locus {x_j = 0 : j in zero_vars}.  graph kind: the
    locus {x_v = g_v(inputs) : v in outputs}; each graph polynomial may only
    involve the non-output variables.
    """

    num_vars: int
    kind: str
    zero_vars: tuple[int, ...] = ()
    outputs: tuple[int, ...] = ()
    graph: tuple[SparsePoly, ...] = ()

    def __post_init__(self):
        if self.kind == "coordinate":
            if list(self.zero_vars) != sorted(set(self.zero_vars)):
                raise ValueError("zero_vars must be strictly increasing")
            for j in self.zero_vars:
                if not 1 <= j <= self.num_vars:
                    raise ValueError(f"variable x{j} out of range")
        elif self.kind == "graph":
            if list(self.outputs) != sorted(set(self.outputs)):
                raise ValueError("outputs must be strictly increasing")
            if len(self.outputs) != len(self.graph):
                raise ValueError("one graph polynomial per output variable")
            out = set(self.outputs)
            for v in self.outputs:
                if not 1 <= v <= self.num_vars:
                    raise ValueError(f"variable x{v} out of range")
            for g in self.graph:
                if g.num_vars != self.num_vars:
                    raise ValueError("graph polynomial over the wrong ring")
                if any(exp[v - 1] for exp in g.terms for v in out):
                    raise ValueError("graph polynomial involves an output variable")
        else:
            raise ValueError(f"unknown submanifold kind {self.kind!r}")

    def codim(self) -> int:
        return len(self.zero_vars) if self.kind == "coordinate" else len(self.outputs)

    def defining_functions(self) -> list[SparsePoly]:
        m = self.num_vars
        if self.kind == "coordinate":
            return [SparsePoly.variable(m, j) for j in self.zero_vars]
        return [SparsePoly.variable(m, v) - g
                for v, g in zip(self.outputs, self.graph)]

    def conormal_generators(self) -> list[Covector]:
        """Differentials of the defining functions, as coefficient rows."""
        return [tuple(h.partial(j) for j in range(1, self.num_vars + 1))
                for h in self.defining_functions()]

    def reduce(self, p: SparsePoly) -> SparsePoly:
        """Substitute the defining equations (membership in the ideal = zero)."""
        m = self.num_vars
        if self.kind == "coordinate":
            zero = set(self.zero_vars)
            images = [SparsePoly.zero(m) if j in zero else SparsePoly.variable(m, j)
                      for j in range(1, m + 1)]
        else:
            table = dict(zip(self.outputs, self.graph))
            images = [table.get(j, SparsePoly.variable(m, j))
                      for j in range(1, m + 1)]
        return p.substitute(images)


def coordinate_subspace(num_vars: int, zero_vars: Sequence[int]) -> PolySubmanifold:
    return PolySubmanifold(num_vars, "coordinate",
                           zero_vars=tuple(sorted(set(zero_vars))))


def graph_submanifold(num_vars: int, outputs: Sequence[int],
                      graph: Sequence[SparsePoly]) -> PolySubmanifold:
    order = sorted(range(len(outputs)), key=lambda i: outputs[i])
    return PolySubmanifold(num_vars, "graph",
                           outputs=tuple(outputs[i] for i in order),
                           graph=tuple(graph[i] for i in order))


def _tangency_witness(pi: NambuTensor, N: PolySubmanifold,
                      generators: list[Covector], law: str,
                      jobs: int = 1) -> Optional[Witness]:
    defining = N.defining_functions()
    sites = list(itertools.combinations(range(len(generators)), pi.order - 1))

    def probe(combo) -> Optional[Witness]:
        field = sharp(pi, [generators[i] for i in combo])
        for hidx, h in enumerate(defining):
            value = SparsePoly.zero(pi.num_vars)
            for j in range(1, pi.num_vars + 1):
                comp = field.components[j - 1]
                if not comp.is_zero():
                    dh = h.partial(j)
                    if not dh.is_zero():
                        value = value + comp * dh
            residual = N.reduce(value)
            if not residual.is_zero():
                return Witness(law, (combo, f"h{hidx + 1}"), poly_to_str(residual),
                               detail=f"defining function {poly_to_str(h)}")
        return None

    return first_witness(sites, probe, jobs)


def check_coisotropic(pi: NambuTensor, N: PolySubmanifold,
                      jobs: int = 1) -> CheckResult:
    """Tangency of the sharp images of conormal (n-1)-wedges.

    Codimension below n-1 passes trivially (no wedges exist).
    """
    if N.num_vars != pi.num_vars:
        raise ValueError("submanifold lives in the wrong space")
    notes = (SHARP_CONVENTION_NOTE,)
    if N.codim() < pi.order - 1:
        return passed(notes=notes + (
            f"codimension {N.codim()} < {pi.order - 1}: no conormal wedges",))
    witness = _tangency_witness(pi, N, N.conormal_generators(),
                                "coisotropy-tangency", jobs)
    if witness is not None:
        return CheckResult(False, witness, notes)
    return passed(notes=notes)


def check_nambu_submanifold(pi: NambuTensor, N: PolySubmanifold,
                            jobs: int = 1) -> CheckResult:
    """Tangency of the sharp images of all coordinate (n-1)-wedges."""
    if N.num_vars != pi.num_vars:
        raise ValueError("submanifold lives in the wrong space")
    m = pi.num_vars
    coordinate_differentials: list[Covector] = [
        tuple(SparsePoly.const(m, 1) if c == j else SparsePoly.zero(m)
              for c in range(1, m + 1)) for j in range(1, m + 1)]
    notes = (SHARP_CONVENTION_NOTE,)
    witness = _tangency_witness(pi, N, coordinate_differentials,
                                "invariance-tangency", jobs)
    if witness is not None:
        return CheckResult(False, witness, notes)
    return passed(notes=notes)


# -- relations -----------------------------------------------------------------------


def _shift_poly(p: SparsePoly, total: int, offset: int) -> SparsePoly:
    out = {}
    pad_left = (0,) * offset
    pad_right = (0,) * (total - offset - p.num_vars)
    for exp, coeff in p.terms.items():
        out[pad_left + exp + pad_right] = coeff
    return SparsePoly(total, out, _clean=True)


def product_tensor(pi_left: NambuTensor, pi_right: NambuTensor,
                   right_scale: Fraction | int = 1) -> NambuTensor:
    """Block tensor on the concatenated variables, left block first."""
    if pi_left.order != pi_right.order:
        raise ValueError("orders differ")
    total = pi_left.num_vars + pi_right.num_vars
    scale = rat(right_scale)
    comps: dict[MultiIndex, SparsePoly] = {}
    for key, coeff in pi_left.components.items():
        comps[key] = _shift_poly(coeff, total, 0)
    for key, coeff in pi_right.components.items():
        shifted = tuple(i + pi_left.num_vars for i in key)
        comps[shifted] = _shift_poly(coeff, total, pi_left.num_vars).scale(scale)
    return NambuTensor(pi_left.order, total, comps)


def check_nambu_relation(pi1: NambuTensor, pi2: NambuTensor,
                         relation: PolySubmanifold, jobs: int = 1) -> CheckResult:
    """Coisotropy of the relation inside the twisted product.

    The product space lists the target block first; the source block enters
    with the sign (-1)^(n-1).
    """
    if pi1.order != pi2.order:
        raise ValueError("orders differ")
    if relation.num_vars != pi2.num_vars + pi1.num_vars:
        raise ValueError("relation lives over the wrong product space")
    n = pi1.order
    twist = 1 if (n - 1) % 2 == 0 else -1
    prod = product_tensor(pi2, pi1, twist)
    verdict = check_coisotropic(prod, relation, jobs)
    return verdict.with_notes(
        "product space lists the target block first; the source block tensor "
        f"is scaled by {twist}")


def graph_of_map(phi: PolyMap) -> PolySubmanifold:
    """The relation of a map: target block equals the map of the source block."""
    total = phi.target_vars + phi.source_vars
    outputs = tuple(range(1, phi.target_vars + 1))
    graph = tuple(_shift_poly(c, total, phi.target_vars) for c in phi.components)
    return PolySubmanifold(total, "graph", outputs=outputs, graph=graph)


# -- composition of linear relations ---------------------------------------------------


def _affine_rows(N: PolySubmanifold) -> list[Row]:
    """Defining equations as affine rows [c_1..c_m | c_0] with sum c_j x_j + c_0 = 0."""
    rows = []
    for h in N.defining_functions():
        if h.total_degree() > 1:
            raise ValueError("relation is not linear")
        row = [ZERO] * (N.num_vars + 1)
        for exp, coeff in h.terms.items():
            support = [j for j, e in enumerate(exp) if e]
            if not support:
                row[N.num_vars] += coeff
            else:
                row[support[0]] += coeff
        rows.append(row)
    return rows


def _rows_to_graph(rows: list[Row], num_vars: int) -> PolySubmanifold:
    """Solve pivot variables affinely in the free ones; empty system = whole space."""
    if not rows:
        return PolySubmanifold(num_vars, "graph", outputs=(), graph=())
    red, pivots = rref(rows)
    if num_vars in pivots:
        raise ValueError("relation is empty (inconsistent affine equations)")
    outputs = []
    graph = []
    for r, c in enumerate(pivots):
        out_poly = SparsePoly.const(num_vars, -red[r][num_vars])
        for j in range(num_vars):
            if j == c:
                continue
            if red[r][j] != 0:
                out_poly = out_poly - SparsePoly.variable(num_vars, j + 1).scale(red[r][j])
        outputs.append(c + 1)
        graph.append(out_poly)
    return PolySubmanifold(num_vars, "graph", outputs=tuple(outputs),
                           graph=tuple(graph))


def compose_linear_relations(r1: PolySubmanifold, r2: PolySubmanifold,
                             m1: int, m2: int, m3: int) -> CheckResult:
    """Set composition of linear relations by exact elimination.

    r1 sits in the (m2, m1) product, r2 in the (m3, m2) product; the result is
    the graph-form subspace in the (m3, m1) product.  The tangent condition
    for clean composition is verified by comparing the eliminated homogeneous
    system with the composition of the homogeneous parts (for affine
    subspaces both are constant in the base point).
    """
    if r1.num_vars != m2 + m1:
        raise ValueError("first relation is not over the (m2, m1) product")
    if r2.num_vars != m3 + m2:
        raise ValueError("second relation is not over the (m3, m2) product")
    total = m3 + m2 + m1  # joint variables (z, y, x)
    rows: list[Row] = []
    for row in _affine_rows(r2):  # variables (z, y)
        rows.append(row[:m3 + m2] + [ZERO] * m1 + [row[-1]])
    for row in _affine_rows(r1):  # variables (y, x)
        rows.append([ZERO] * m3 + row[:m2 + m1] + [row[-1]])

    def eliminate(system: list[Row], with_constants: bool) -> list[Row]:
        # order columns y first so the echelon rows without y-support project
        cols = total + (1 if with_constants else 0)
        perm = list(range(m3, m3 + m2)) + list(range(m3)) + \
            list(range(m3 + m2, cols))
        permuted = [[row[c] for c in perm] for row in system]
        red, pivots = rref(permuted)
        out = []
        for r, c in enumerate(pivots):
            if c >= m2:  # no y-support left in this row
                back = [ZERO] * cols
                for pc, v in zip(perm, red[r]):
                    back[pc] = v
                out.append(back)
        return out

    projected = eliminate(rows, True)
    composed_rows = [row[:m3] + row[m3 + m2:] for row in projected]
    composed = _rows_to_graph(composed_rows, m3 + m1)

    homogeneous = [row[:-1] + [ZERO] for row in rows]
    tangent_rows = [row[:m3] + row[m3 + m2:-1]
                    for row in eliminate(homogeneous, True)]
    direct_tangent = [row[:-1] for row in composed_rows]
    clean = row_space_equal(tangent_rows, direct_tangent) if (
        tangent_rows or direct_tangent) else True
    notes = (f"composed relation has codimension {composed.codim()} in the "
             f"({m3}, {m1}) product",
             "tangent spaces of affine subspaces are base-point independent, "
             "so the fiberwise clean-composition condition reduces to one "
             "subspace comparison")
    if not clean:
        return failed("clean-composition", (), "tangent compositions disagree",
                      notes=notes)
    return passed(notes=notes, payload=composed)


# -- builtins ---------------------------------------------------------------------------


def canonical_tensor(order: int, num_vars: int) -> NambuTensor:
    """The constant top block d/dx_1 ^ ... ^ d/dx_order."""
    if num_vars < order:
        raise ValueError("need at least `order` variables")
    key = tuple(range(1, order + 1))
    return NambuTensor(order, num_vars, {key: SparsePoly.const(num_vars, 1)})
