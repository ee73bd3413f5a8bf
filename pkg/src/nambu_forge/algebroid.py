"""Anchored bracket bundles over affine bases, their maps, and the linear duals.

An algebroid here is an anchored bracket structure whose anchor lands in
polynomial vector fields on the base; bundles are trivial with a global
frame.  Rank-n structures dualize to multi-vector fields on the total space
of the dual bundle whose coefficients are fiberwise linear, and the two
directions of bundle map dualize to maps and relations of those tensors.
Each duality checker computes both sides independently and insists that they
agree.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .kernel import (MultiIndex, ONE, PolyDerivation, SparsePoly, ZERO,
                     increasing_tuples, poly_to_str, rat)
from .linalg import poly_det, rank as mat_rank
from .nambu import (NambuTensor, PolyMap, PolySubmanifold, check_coisotropic,
                    check_nambu_map, check_nambu_relation, graph_submanifold)
from .report import (CheckResult, CrossCheckError, Witness, failed,
                     first_witness, passed)
from .rinehart import (AlgebraMap, ModuleMapForward, NLieRinehart, Section,
                       check_morphism, check_rinehart, direct_sum,
                       format_section, project_poly, reduce_mod,
                       rinehart_anchor, rinehart_bracket, restrict,
                       section_is_zero, section_sub, section_zero, twisted)
from .linalg import solve_in_span

NLieAlgebroid = NLieRinehart

DUAL_CONVENTION_NOTE = (
    "dual total space lists the fiber-linear coordinates xi_1..xi_n first, "
    "then the base coordinates; the sharp pairing reads the n-1 wedge slots "
    "before the final slot")


def check_algebroid(A: NLieAlgebroid, jobs: int = 1) -> CheckResult:
    """Structure laws plus the anchor's vector-field commutator law on generators."""
    verdict = check_rinehart(A, jobs)
    if not verdict.ok:
        return verdict
    n, m = A.arity, A.num_vars
    for x in increasing_tuples(A.rank, n - 1):
        for y in increasing_tuples(A.rank, n - 1):
            dx, dy = A.anchor_basis(x), A.anchor_basis(y)
            ys = [A.basis(i) for i in y]
            rhs = PolyDerivation.zero(m)
            for i in range(n - 1):
                moved = rinehart_bracket(A, [A.basis(k) for k in x] + [ys[i]])
                args = list(ys)
                args[i] = moved
                rhs = rhs + rinehart_anchor(A, args)
            for j in range(1, m + 1):
                gen = SparsePoly.variable(m, j)
                residual = dx(dy(gen)) - dy(dx(gen)) - rhs(gen)
                if not residual.is_zero():
                    return failed("anchor-commutator-law", (x, y, f"x{j}"),
                                  poly_to_str(residual))
    return verdict


# -- subbundles ------------------------------------------------------------------


@dataclass(frozen=True)
class Subbundle:
    """Constant-coefficient subspace of the fiber over a coordinate subspace.

    basis holds the spanning vectors (each of length rank); it must have full
    column rank.
    """

    zero_vars: tuple[int, ...]
    basis: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        if not self.basis:
            raise ValueError("subbundle needs at least one basis vector")
        width = len(self.basis[0])
        for v in self.basis:
            if len(v) != width:
                raise ValueError("basis vectors of mixed length")
        columns = [[self.basis[i][r] for i in range(len(self.basis))]
                   for r in range(width)]
        if mat_rank(columns) != len(self.basis):
            raise ValueError("subbundle basis is not of full column rank")

    def sections(self, num_vars: int) -> list[Section]:
        return [tuple(SparsePoly.const(num_vars, c) for c in v)
                for v in self.basis]


def _general_subalgebroid(R: NLieRinehart, N: PolySubmanifold,
                          basis_sections: Sequence[Section],
                          degree_bound: int) -> CheckResult:
    """Anchor tangency and bracket closure along a submanifold of the base.

    Handles polynomial-coefficient spanning sections; closure is an exact
    linear solve of the reduced bracket against the reduced span.
    """
    n = R.arity
    count = len(basis_sections)
    defining = N.defining_functions()

    for combo in itertools.combinations(range(count), n - 1):
        der = rinehart_anchor(R, [basis_sections[i] for i in combo])
        for hidx, h in enumerate(defining):
            value = der(h)
            residual = N.reduce(value)
            if not residual.is_zero():
                return failed("anchor-tangency",
                              (tuple(i + 1 for i in combo), f"h{hidx + 1}"),
                              poly_to_str(residual),
                              detail=f"defining function {poly_to_str(h)}")

    columns = [tuple(N.reduce(p) for p in sec) for sec in basis_sections]
    for combo in itertools.combinations(range(count), n):
        value = rinehart_bracket(R, [basis_sections[i] for i in combo])
        target = tuple(N.reduce(p) for p in value)
        if solve_in_span(columns, target, degree_bound) is None:
            return failed("bracket-closure", (tuple(i + 1 for i in combo),),
                          format_section(target),
                          detail=f"solver degree bound {degree_bound}")
    return passed(notes=(f"closure solved with degree bound {degree_bound}",))


def check_subalgebroid(A: NLieAlgebroid, H: Subbundle,
                       degree_bound: int = 4, jobs: int = 1) -> CheckResult:
    """Anchor tangency and bracket closure of a constant subbundle.

    On pass, the payload carries the induced structure over the coordinate
    subspace: anchors and brackets computed upstairs, reduced, and re-indexed
    over the subbundle's frame.
    """
    if len(H.basis[0]) != A.rank:
        raise ValueError("subbundle vectors do not match the bundle rank")
    for j in H.zero_vars:
        if not 1 <= j <= A.num_vars:
            raise ValueError(f"subspace variable x{j} out of range")
    N = PolySubmanifold(A.num_vars, "coordinate",
                        zero_vars=tuple(sorted(set(H.zero_vars))))
    sections = H.sections(A.num_vars)
    verdict = _general_subalgebroid(A, N, sections, degree_bound)
    if not verdict.ok:
        return verdict
    induced = restrict(A, N.zero_vars, sections, degree_bound)
    return passed(notes=verdict.notes, payload=induced)


# -- bundle maps ------------------------------------------------------------------


@dataclass(frozen=True)
class BundleMapForward:
    """Fiberwise map into the second bundle over a base map.

    fiber is target_rank x source_rank with entries over the source base.
    """

    base: PolyMap
    fiber: tuple[tuple[SparsePoly, ...], ...]

    def __post_init__(self):
        for row in self.fiber:
            if len(row) != len(self.fiber[0]):
                raise ValueError("ragged fiber matrix")
            for p in row:
                if p.num_vars != self.base.source_vars:
                    raise ValueError("fiber entries must live over the source base")

    @property
    def target_rank(self) -> int:
        return len(self.fiber)

    @property
    def source_rank(self) -> int:
        return len(self.fiber[0]) if self.fiber else 0


@dataclass(frozen=True)
class BundleMapCo:
    """Pullback-on-sections matrix of a fiberwise map from the second bundle.

    matrix is source_bundle_rank x second_bundle_rank (r1 x r2) with entries
    over the source base; column j is the pullback of the j-th frame section.
    """

    base: PolyMap
    matrix: tuple[tuple[SparsePoly, ...], ...]

    def __post_init__(self):
        for row in self.matrix:
            if len(row) != len(self.matrix[0]):
                raise ValueError("ragged pullback matrix")
            for p in row:
                if p.num_vars != self.base.source_vars:
                    raise ValueError("entries must live over the source base")

    @property
    def r1(self) -> int:
        return len(self.matrix)

    @property
    def r2(self) -> int:
        return len(self.matrix[0]) if self.matrix else 0

    def pullback_section(self, j: int, num_vars: int) -> Section:
        return tuple(self.matrix[r][j - 1] for r in range(self.r1))


def _pullback_map(base: PolyMap) -> AlgebraMap:
    """The ring map of a base map: functions on the target pull back."""
    return AlgebraMap(base.target_vars, base.source_vars, base.components)


def _pushforward_components(base: PolyMap, der: PolyDerivation) -> list[SparsePoly]:
    """Components of the pushed vector field, as polynomials on the source."""
    jac = base.jacobian()
    out = []
    for l in range(base.target_vars):
        total = SparsePoly.zero(base.source_vars)
        for a in range(base.source_vars):
            entry = jac[l][a]
            comp = der.components[a]
            if not entry.is_zero() and not comp.is_zero():
                total = total + entry * comp
        out.append(total)
    return out


def check_morphism_algebroid(F: BundleMapForward, A1: NLieAlgebroid,
                             A2: NLieAlgebroid, degree_bound: int = 4,
                             jobs: int = 1) -> CheckResult:
    """Forward bundle-map laws, cross-validated through the graph subbundle.

    Law 1: the second anchor of the mapped frame wedges equals the pushed
    first anchor, componentwise over the source base.  Law 2: the mapped
    bracket equals the local expansion with one signed anchor correction per
    slot.  The same data is then rechecked as bracket closure and anchor
    tangency of the graph subbundle inside the twisted product structure; the
    two verdicts must agree.
    """
    if F.source_rank != A1.rank or F.target_rank != A2.rank:
        raise ValueError("fiber matrix shape does not match the bundles")
    if F.base.source_vars != A1.num_vars or F.base.target_vars != A2.num_vars:
        raise ValueError("base map does not connect the two bases")
    if A1.arity != A2.arity:
        raise ValueError("arity mismatch")
    n = A1.arity
    m1, m2 = A1.num_vars, A2.num_vars
    psi = _pullback_map(F.base)
    own = _morphism_algebroid_laws(F, A1, A2, psi, jobs)

    twist = 1 if (n - 1) % 2 == 0 else -1
    product = direct_sum(A2, twisted(A1, twist))
    graph_base = graph_submanifold(
        m2 + m1, tuple(range(1, m2 + 1)),
        tuple(_embed(c, m2 + m1, m2) for c in F.base.components))
    spanning = []
    for j in range(1, A1.rank + 1):
        upper = [_embed(F.fiber[k][j - 1], m2 + m1, m2) for k in range(A2.rank)]
        lower = [SparsePoly.const(m2 + m1, 1) if i == j else
                 SparsePoly.zero(m2 + m1) for i in range(1, A1.rank + 1)]
        spanning.append(tuple(upper + lower))
    cross = _general_subalgebroid(product, graph_base, spanning, degree_bound)
    if own.ok != cross.ok:
        raise CrossCheckError(
            "forward-map laws and graph-subbundle formulation disagree: "
            f"laws={own.ok} graph={cross.ok}")
    return own.with_notes(
        f"graph formulation over the twisted product (second factor scaled by "
        f"{twist}) agrees")


def _morphism_algebroid_laws(F: BundleMapForward, A1: NLieAlgebroid,
                             A2: NLieAlgebroid, psi: AlgebraMap,
                             jobs: int) -> CheckResult:
    n, m1 = A1.arity, A1.num_vars
    sites: list[tuple] = [("anchor", x) for x in increasing_tuples(A1.rank, n - 1)]
    sites += [("bracket", y) for y in increasing_tuples(A1.rank, n)]

    def probe(site) -> Optional[Witness]:
        kind, idx = site
        if kind == "anchor":
            lhs = [SparsePoly.zero(m1) for _ in range(A2.num_vars)]
            for K in increasing_tuples(A2.rank, n - 1):
                minor = poly_det([[F.fiber[k - 1][x - 1] for x in idx] for k in K])
                if minor.is_zero():
                    continue
                der = A2.anchor_table.get(K)
                if der is None:
                    continue
                for l in range(A2.num_vars):
                    q = der.components[l]
                    if not q.is_zero():
                        lhs[l] = lhs[l] + minor * psi(q)
            rhs = _pushforward_components(F.base, A1.anchor_basis(idx))
            for l in range(A2.num_vars):
                residual = lhs[l] - rhs[l]
                if not residual.is_zero():
                    return Witness("anchor-pushforward-law", (idx, f"component{l + 1}"),
                                   poly_to_str(residual))
            return None
        value = A1.bracket_basis(idx)
        lhs = [SparsePoly.zero(m1) for _ in range(A2.rank)]
        for j, c in enumerate(value, start=1):
            if c.is_zero():
                continue
            for k in range(A2.rank):
                entry = F.fiber[k][j - 1]
                if not entry.is_zero():
                    lhs[k] = lhs[k] + c * entry
        rhs = [SparsePoly.zero(m1) for _ in range(A2.rank)]
        for K in increasing_tuples(A2.rank, n):
            minor = poly_det([[F.fiber[k - 1][y - 1] for y in idx] for k in K])
            if minor.is_zero():
                continue
            sec = A2.bracket_table.get(K)
            if sec is None:
                continue
            for k in range(A2.rank):
                if not sec[k].is_zero():
                    rhs[k] = rhs[k] + minor * psi(sec[k])
        for i in range(n):
            hat = idx[:i] + idx[i + 1:]
            der = A1.anchor_basis(hat)
            if der.is_zero():
                continue
            sign = 1 if (n - 1 - i) % 2 == 0 else -1
            for k in range(A2.rank):
                entry = F.fiber[k][idx[i] - 1]
                if not entry.is_zero():
                    corr = der(entry)
                    if not corr.is_zero():
                        rhs[k] = rhs[k] + corr.scale(sign)
        for k in range(A2.rank):
            residual = lhs[k] - rhs[k]
            if not residual.is_zero():
                return Witness("bracket-pushforward-law", (idx, f"frame{k + 1}"),
                               poly_to_str(residual))
        return None

    witness = first_witness(sites, probe, jobs)
    if witness is not None:
        return CheckResult(False, witness)
    return passed()


def check_comorphism_algebroid(C: BundleMapCo, A2: NLieAlgebroid,
                               A1: NLieAlgebroid, jobs: int = 1) -> CheckResult:
    """Backward bundle-map laws, cross-validated through the forward pair of
    section spaces.

    Law (i): pushing the first anchor of the pulled-back frame wedges along
    the base map recovers the second anchor.  Law (ii): the pullback of frame
    brackets equals the bracket of the pullbacks.  The same data must agree
    with the forward structure-map laws of the section spaces.
    """
    if C.r1 != A1.rank or C.r2 != A2.rank:
        raise ValueError("pullback matrix shape does not match the bundles")
    if C.base.source_vars != A1.num_vars or C.base.target_vars != A2.num_vars:
        raise ValueError("base map does not connect the two bases")
    if A1.arity != A2.arity:
        raise ValueError("arity mismatch")
    n, m1 = A1.arity, A1.num_vars
    psi = _pullback_map(C.base)
    own: CheckResult | None = None

    sites: list[tuple] = [("anchor", y) for y in increasing_tuples(A2.rank, n - 1)]
    sites += [("bracket", y) for y in increasing_tuples(A2.rank, n)]

    def probe(site) -> Optional[Witness]:
        kind, idx = site
        pulled = [C.pullback_section(j, m1) for j in idx]
        if kind == "anchor":
            der = rinehart_anchor(A1, pulled)
            lhs = _pushforward_components(C.base, der)
            target = A2.anchor_basis(idx)
            for l in range(A2.num_vars):
                residual = lhs[l] - psi(target.components[l])
                if not residual.is_zero():
                    return Witness("anchor-relatedness-law", (idx, f"component{l + 1}"),
                                   poly_to_str(residual))
            return None
        value = A2.bracket_basis(idx)
        lhs = list(section_zero(A1.rank, m1))
        for j, c in enumerate(value, start=1):
            if c.is_zero():
                continue
            q = psi(c)
            col = C.pullback_section(j, m1)
            for r in range(A1.rank):
                if not col[r].is_zero():
                    lhs[r] = lhs[r] + q * col[r]
        rhs = rinehart_bracket(A1, pulled)
        residual = section_sub(tuple(lhs), rhs)
        if not section_is_zero(residual):
            return Witness("pullback-bracket-law", (idx,), format_section(residual))
        return None

    witness = first_witness(sites, probe, jobs)
    own = CheckResult(False, witness) if witness is not None else passed()

    fwd = ModuleMapForward(C.matrix)
    cross = check_morphism(A2, A1, fwd, psi)
    if own.ok != cross.ok:
        raise CrossCheckError(
            "bundle-level and section-space verdicts disagree: "
            f"bundle={own.ok} sections={cross.ok}")
    return own.with_notes("section-space forward-pair laws agree")


# -- linear duals ------------------------------------------------------------------


def _embed(p: SparsePoly, total: int, offset: int) -> SparsePoly:
    out = {}
    pad_left = (0,) * offset
    pad_right = (0,) * (total - offset - p.num_vars)
    for exp, coeff in p.terms.items():
        out[pad_left + exp + pad_right] = coeff
    return SparsePoly(total, out, _clean=True)


def dual_linear_nambu(A: NLieAlgebroid) -> NambuTensor:
    """Fiberwise-linear tensor on the dual total space of a rank-n structure.

    Coordinates are xi_1..xi_n (fiber-linear functions of the frame) followed
    by the base variables.  The all-fiber component carries the bracket table;
    components with one base slot carry the anchor; everything with two or
    more base slots vanishes.
    """
    n, m = A.arity, A.num_vars
    if A.rank != n:
        raise ValueError("linear dual requires rank equal to arity")
    total = n + m
    comps: dict[MultiIndex, SparsePoly] = {}
    top = A.bracket_table.get(tuple(range(1, n + 1)))
    if top is not None:
        poly = SparsePoly.zero(total)
        for k, c in enumerate(top, start=1):
            if not c.is_zero():
                poly = poly + _embed(c, total, n) * SparsePoly.variable(total, k)
        if not poly.is_zero():
            comps[tuple(range(1, n + 1))] = poly
    for i in range(1, n + 1):
        key_fiber = tuple(k for k in range(1, n + 1) if k != i)
        der = A.anchor_table.get(key_fiber)
        if der is None:
            continue
        for j in range(1, m + 1):
            coeff = der.components[j - 1]
            if not coeff.is_zero():
                comps[key_fiber + (n + j,)] = _embed(coeff, total, n)
    return NambuTensor(n, total, comps)


def dual_map_total(C: BundleMapCo, A2: NLieAlgebroid,
                   A1: NLieAlgebroid) -> PolyMap:
    """Total-space map between dual bundles induced by a backward bundle map.

    Fiber part: the transpose of the pullback matrix contracted with the
    fiber coordinates; base part: the base map.
    """
    n = A1.arity
    m1, m2 = A1.num_vars, A2.num_vars
    src, dst = n + m1, n + m2
    components: list[SparsePoly] = []
    for j in range(1, n + 1):
        poly = SparsePoly.zero(src)
        for k in range(1, n + 1):
            entry = C.matrix[k - 1][j - 1]
            if not entry.is_zero():
                poly = poly + _embed(entry, src, n) * SparsePoly.variable(src, k)
        components.append(poly)
    for l in range(m2):
        components.append(_embed(C.base.components[l], src, n))
    return PolyMap(src, dst, tuple(components))


def check_duality_comorphism(C: BundleMapCo, A2: NLieAlgebroid,
                             A1: NLieAlgebroid, jobs: int = 1) -> CheckResult:
    """Backward bundle-map laws against the dual pushforward law.

    Runs the bundle-level checker and the tensor map checker on the dual
    total spaces; the verdicts must agree and the shared verdict is returned.
    """
    if A1.rank != A1.arity or A2.rank != A2.arity:
        raise ValueError("duality requires rank equal to arity on both sides")
    side_bundle = check_comorphism_algebroid(C, A2, A1, jobs)
    pi1 = dual_linear_nambu(A1)
    pi2 = dual_linear_nambu(A2)
    side_dual = check_nambu_map(dual_map_total(C, A2, A1), pi1, pi2, jobs)
    if side_bundle.ok != side_dual.ok:
        raise CrossCheckError(
            f"bundle laws ({side_bundle.ok}) and dual tensor map "
            f"({side_dual.ok}) disagree")
    verdict = side_bundle if not side_bundle.ok else side_dual
    return verdict.with_notes(DUAL_CONVENTION_NOTE,
                              "bundle-level and dual-tensor verdicts agree")


def dual_relation_graph(F: BundleMapForward, A1: NLieAlgebroid,
                        A2: NLieAlgebroid) -> PolySubmanifold:
    """Graph of the fiberwise transpose inside the product of dual total spaces.

    Product coordinates: (eta, y) for the second dual block, then (xi, x) for
    the first.  Outputs: y = base(x) and xi = fiber(x)^T eta.  Fiber entries
    must be constant or linear so the graph stays polynomial of degree one in
    the declared shape.
    """
    n = A1.arity
    m1, m2 = A1.num_vars, A2.num_vars
    for row in F.fiber:
        for p in row:
            if p.total_degree() > 1:
                raise ValueError("unsupported fiber map shape: entries must be "
                                 "constant or linear")
    total = (n + m2) + (n + m1)
    x_offset = 2 * n + m2
    outputs = []
    graph = []
    for l in range(1, m2 + 1):  # y_l = base_l(x)
        outputs.append(n + l)
        graph.append(_embed(F.base.components[l - 1], total, x_offset))
    for j in range(1, n + 1):  # xi_j = sum_i fiber[i][j] * eta_i
        poly = SparsePoly.zero(total)
        for i in range(1, n + 1):
            entry = F.fiber[i - 1][j - 1]
            if not entry.is_zero():
                poly = poly + _embed(entry, total, x_offset) * \
                    SparsePoly.variable(total, i)
        outputs.append(n + m2 + j)
        graph.append(poly)
    return graph_submanifold(total, tuple(outputs), tuple(graph))


def check_duality_morphism(F: BundleMapForward, A1: NLieAlgebroid,
                           A2: NLieAlgebroid, degree_bound: int = 4,
                           jobs: int = 1) -> CheckResult:
    """Forward bundle-map laws against coisotropy of the dual transpose graph."""
    if A1.rank != A1.arity or A2.rank != A2.arity:
        raise ValueError("duality requires rank equal to arity on both sides")
    side_bundle = check_morphism_algebroid(F, A1, A2, degree_bound, jobs)
    relation = dual_relation_graph(F, A1, A2)
    side_dual = check_nambu_relation(dual_linear_nambu(A1), dual_linear_nambu(A2),
                                     relation, jobs)
    if side_bundle.ok != side_dual.ok:
        raise CrossCheckError(
            f"bundle laws ({side_bundle.ok}) and dual relation "
            f"({side_dual.ok}) disagree")
    verdict = side_bundle if not side_bundle.ok else side_dual
    return verdict.with_notes(DUAL_CONVENTION_NOTE,
                              "bundle-level and dual-relation verdicts agree")


def annihilator_submanifold(A: NLieAlgebroid, H: Subbundle) -> PolySubmanifold:
    """Covectors along the subbundle's base locus that kill the subbundle.

    Cut out in the dual total space by the base equations and one linear
    fiber equation per basis vector, returned in solved graph form.
    """
    n, m = A.arity, A.num_vars
    if A.rank != n:
        raise ValueError("annihilator duality requires rank equal to arity")
    total = n + m
    rows = []
    for v in H.basis:
        row = [rat(c) for c in v] + [ZERO] * m + [ZERO]
        rows.append(row)
    for j in sorted(set(H.zero_vars)):
        row = [ZERO] * total + [ZERO]
        row[n + j - 1] = ONE
        rows.append(row)
    from .nambu import _rows_to_graph
    return _rows_to_graph(rows, total)


def check_annihilator(A: NLieAlgebroid, H: Subbundle, degree_bound: int = 4,
                      jobs: int = 1) -> CheckResult:
    """Subbundle laws against coisotropy of the annihilator."""
    side_bundle = check_subalgebroid(A, H, degree_bound, jobs)
    side_dual = check_coisotropic(dual_linear_nambu(A),
                                  annihilator_submanifold(A, H), jobs)
    if side_bundle.ok != side_dual.ok:
        raise CrossCheckError(
            f"subbundle laws ({side_bundle.ok}) and annihilator coisotropy "
            f"({side_dual.ok}) disagree")
    if not side_bundle.ok:
        return side_bundle.with_notes(DUAL_CONVENTION_NOTE)
    return CheckResult(True, None,
                       side_bundle.notes + (DUAL_CONVENTION_NOTE,
                                            "annihilator coisotropy agrees"),
                       side_bundle.payload)
