"""Exact arithmetic kernel: rationals, sparse polynomials, derivations, multi-indices.

Everything downstream is built on three representations:

  Rat        -- fractions.Fraction: arbitrary-precision rationals, always stored
                normalized (gcd(|num|, den) = 1, den > 0, zero as 0/1).
  SparsePoly -- a polynomial in Q[x1..xm], stored as a dict mapping dense
                exponent tuples (one int per variable) to nonzero Rat
                coefficients.  The zero polynomial has an empty term dict.
  MultiIndex -- a strictly increasing tuple of positive basis indices, the
                canonical label for a basis element of an exterior power.

All values are immutable after construction and safe to share across workers.
No floating point appears anywhere; equality of polynomials is structural
equality of their canonical term dicts.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence, Tuple

Rat = Fraction

Exponent = Tuple[int, ...]
MultiIndex = Tuple[int, ...]

ZERO = Fraction(0)
ONE = Fraction(1)

DEFAULT_MAX_TERMS = 100_000

_max_terms = DEFAULT_MAX_TERMS


class TermLimitError(RuntimeError):
    """Raised when an operation would produce more terms than the configured cap."""


class PolyParseError(ValueError):
    """Raised on malformed polynomial text; carries the offending position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


def set_max_terms(cap: int) -> None:
    """Set the global term-count cap (checkers are desk-scale; blowups fail loudly)."""
    global _max_terms
    if cap < 1:
        raise ValueError("term cap must be positive")
    _max_terms = cap


def get_max_terms() -> int:
    return _max_terms


def _budget(n: int) -> None:
    if n > _max_terms:
        raise TermLimitError(f"polynomial would have {n} terms, cap is {_max_terms}")


def rat(value) -> Rat:
    """Coerce ints, Fractions and 'p/q' strings to a normalized rational."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as a rational")


class SparsePoly:
    """Sparse multivariate polynomial over the rationals.

    `terms` maps exponent tuples of length `num_vars` to nonzero Fraction
    coefficients; zero-coefficient terms are never stored.  Variables are
    1-based in the public API (x1..xm), matching the text syntax.
    """

    __slots__ = ("num_vars", "terms")

    def __init__(self, num_vars: int, terms: Mapping[Exponent, Rat] | None = None,
                 _clean: bool = False):
        if num_vars < 0:
            raise ValueError("num_vars must be >= 0")
        self.num_vars = num_vars
        if terms is None:
            self.terms: dict[Exponent, Rat] = {}
        elif _clean:
            self.terms = dict(terms)
        else:
            cleaned: dict[Exponent, Rat] = {}
            for exp, coeff in terms.items():
                if len(exp) != num_vars:
                    raise ValueError(
                        f"exponent {exp} has length {len(exp)}, expected {num_vars}")
                if any(e < 0 for e in exp):
                    raise ValueError(f"negative exponent in {exp}")
                c = rat(coeff)
                if c != 0:
                    cleaned[tuple(exp)] = c
            self.terms = cleaned
        _budget(len(self.terms))

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(num_vars: int) -> "SparsePoly":
        return SparsePoly(num_vars, None, _clean=True)

    @staticmethod
    def const(num_vars: int, value) -> "SparsePoly":
        c = rat(value)
        if c == 0:
            return SparsePoly.zero(num_vars)
        return SparsePoly(num_vars, {(0,) * num_vars: c}, _clean=True)

    @staticmethod
    def variable(num_vars: int, j: int) -> "SparsePoly":
        """The monomial x_j (1-based)."""
        if not 1 <= j <= num_vars:
            raise ValueError(f"variable index {j} out of range 1..{num_vars}")
        exp = [0] * num_vars
        exp[j - 1] = 1
        return SparsePoly(num_vars, {tuple(exp): ONE}, _clean=True)

    @staticmethod
    def monomial(num_vars: int, exponents: Sequence[int], coeff=1) -> "SparsePoly":
        return SparsePoly(num_vars, {tuple(exponents): rat(coeff)})

    # -- basic queries -----------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(all(e == 0 for e in exp) for exp in self.terms)

    def constant_value(self) -> Rat:
        """The coefficient of the constant monomial (the whole value if constant)."""
        return self.terms.get((0,) * self.num_vars, ZERO)

    def total_degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        return max(sum(exp) for exp in self.terms)

    def degree_in(self, js: Iterable[int]) -> int:
        """Max combined degree in the (1-based) variables `js`; -1 for zero."""
        idx = [j - 1 for j in js]
        if not self.terms:
            return -1
        return max(sum(exp[i] for i in idx) for exp in self.terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparsePoly):
            return NotImplemented
        return self.num_vars == other.num_vars and self.terms == other.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    # -- arithmetic --------------------------------------------------------

    def _same_ring(self, other: "SparsePoly") -> None:
        if self.num_vars != other.num_vars:
            raise ValueError(
                f"mixed variable counts: {self.num_vars} vs {other.num_vars}")

    def __add__(self, other: "SparsePoly") -> "SparsePoly":
        self._same_ring(other)
        out = dict(self.terms)
        for exp, c in other.terms.items():
            s = out.get(exp, ZERO) + c
            if s == 0:
                out.pop(exp, None)
            else:
                out[exp] = s
        _budget(len(out))
        return SparsePoly(self.num_vars, out, _clean=True)

    def __neg__(self) -> "SparsePoly":
        return SparsePoly(self.num_vars, {e: -c for e, c in self.terms.items()},
                          _clean=True)

    def __sub__(self, other: "SparsePoly") -> "SparsePoly":
        return self + (-other)

    def __mul__(self, other) -> "SparsePoly":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        self._same_ring(other)
        out: dict[Exponent, Rat] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                s = out.get(e, ZERO) + c1 * c2
                if s == 0:
                    out.pop(e, None)
                else:
                    out[e] = s
        _budget(len(out))
        return SparsePoly(self.num_vars, out, _clean=True)

    def __rmul__(self, other) -> "SparsePoly":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def scale(self, c) -> "SparsePoly":
        c = rat(c)
        if c == 0:
            return SparsePoly.zero(self.num_vars)
        return SparsePoly(self.num_vars,
                          {e: k * c for e, k in self.terms.items()}, _clean=True)

    def __pow__(self, p: int) -> "SparsePoly":
        if p < 0:
            raise ValueError("negative power")
        result = SparsePoly.const(self.num_vars, 1)
        base = self
        while p:
            if p & 1:
                result = result * base
            p >>= 1
            if p:
                base = base * base
        return result

    # -- calculus and substitution ------------------------------------------

    def partial(self, j: int) -> "SparsePoly":
        """Partial derivative with respect to x_j (1-based)."""
        if not 1 <= j <= self.num_vars:
            raise ValueError(f"variable index {j} out of range 1..{self.num_vars}")
        i = j - 1
        out: dict[Exponent, Rat] = {}
        for exp, c in self.terms.items():
            e = exp[i]
            if e == 0:
                continue
            new = list(exp)
            new[i] = e - 1
            out[tuple(new)] = c * e
        return SparsePoly(self.num_vars, out, _clean=True)

    def substitute(self, images: Sequence["SparsePoly"]) -> "SparsePoly":
        """Apply the ring map x_j -> images[j-1]; images live in a common target ring."""
        if len(images) != self.num_vars:
            raise ValueError(
                f"need {self.num_vars} images, got {len(images)}")
        if self.num_vars == 0:
            target_vars = 0
        else:
            target_vars = images[0].num_vars
            for im in images:
                if im.num_vars != target_vars:
                    raise ValueError("images live in different rings")
        result = SparsePoly.zero(target_vars)
        power_cache: list[dict[int, SparsePoly]] = [
            {0: SparsePoly.const(target_vars, 1)} for _ in range(self.num_vars)]

        def power(j: int, e: int) -> SparsePoly:
            cache = power_cache[j]
            if e not in cache:
                cache[e] = power(j, e - 1) * images[j]
            return cache[e]

        for exp, c in sorted(self.terms.items()):
            term = SparsePoly.const(target_vars, c)
            for j, e in enumerate(exp):
                if e:
                    term = term * power(j, e)
            result = result + term
        return result

    # -- printing ------------------------------------------------------------

    def sorted_terms(self) -> list[tuple[Exponent, Rat]]:
        """Terms in graded-lexicographic order, highest degree first."""
        return sorted(self.terms.items(),
                      key=lambda item: (-sum(item[0]), tuple(-e for e in item[0])))

    def __str__(self) -> str:
        return poly_to_str(self)

    def __repr__(self) -> str:
        return f"SparsePoly({self.num_vars}, {poly_to_str(self)!r})"


def poly_to_str(p: SparsePoly) -> str:
    """Canonical text form: graded-lex order, e.g. '3/2*x1^2*x2 - x3 + 1'."""
    if p.is_zero():
        return "0"
    chunks: list[str] = []
    for exp, coeff in p.sorted_terms():
        factors = []
        for j, e in enumerate(exp, start=1):
            if e == 1:
                factors.append(f"x{j}")
            elif e > 1:
                factors.append(f"x{j}^{e}")
        mono = "*".join(factors)
        mag = abs(coeff)
        if not mono:
            body = str(mag)
        elif mag == 1:
            body = mono
        else:
            body = f"{mag}*{mono}"
        if not chunks:
            chunks.append(body if coeff > 0 else f"-{body}")
        else:
            chunks.append(f"+ {body}" if coeff > 0 else f"- {body}")
    return " ".join(chunks)


# -- polynomial text parser ---------------------------------------------------
#
# Grammar (whitespace-insensitive):
#   expr   := ['+'|'-'] term (('+'|'-') term)*
#   term   := factor ('*' factor)*
#   factor := atom ('^' INT)?
#   atom   := RAT | VAR | '(' expr ')'
#   RAT    := INT ('/' INT)?        (division only inside numeric literals)
#   VAR    := 'x' INT               (1-based, bounded by num_vars)


class _Parser:
    def __init__(self, text: str, num_vars: int):
        self.text = text
        self.n = len(text)
        self.pos = 0
        self.num_vars = num_vars

    def error(self, message: str) -> PolyParseError:
        return PolyParseError(message, self.pos)

    def skip_ws(self) -> None:
        while self.pos < self.n and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < self.n else ""

    def take(self, ch: str) -> bool:
        if self.peek() == ch:
            self.pos += 1
            return True
        return False

    def integer(self) -> int:
        self.skip_ws()
        start = self.pos
        while self.pos < self.n and self.text[self.pos].isdigit():
            self.pos += 1
        if self.pos == start:
            raise self.error("expected an integer")
        return int(self.text[start:self.pos])

    def expr(self) -> SparsePoly:
        sign = 1
        while True:
            if self.take("+"):
                continue
            if self.take("-"):
                sign = -sign
                continue
            break
        result = self.term().scale(sign)
        while True:
            if self.take("+"):
                result = result + self.term()
            elif self.take("-"):
                result = result - self.term()
            else:
                return result

    def term(self) -> SparsePoly:
        result = self.factor()
        while self.take("*"):
            result = result * self.factor()
        return result

    def factor(self) -> SparsePoly:
        base = self.atom()
        if self.take("^"):
            return base ** self.integer()
        return base

    def atom(self) -> SparsePoly:
        c = self.peek()
        if c == "(":
            self.take("(")
            inner = self.expr()
            if not self.take(")"):
                raise self.error("expected ')'")
            return inner
        if c == "-":
            self.take("-")
            return -self.factor()
        if c == "x":
            self.pos += 1
            j = self.integer()
            if not 1 <= j <= self.num_vars:
                raise self.error(f"variable x{j} out of range 1..{self.num_vars}")
            return SparsePoly.variable(self.num_vars, j)
        if c.isdigit():
            num = self.integer()
            if self.peek() == "/":
                self.take("/")
                den = self.integer()
                if den == 0:
                    raise self.error("zero denominator")
                return SparsePoly.const(self.num_vars, Fraction(num, den))
            return SparsePoly.const(self.num_vars, num)
        raise self.error(f"unexpected character {c!r}" if c else "unexpected end of input")


def parse_poly(text: str, num_vars: int) -> SparsePoly:
    """Parse the CLI polynomial syntax into a SparsePoly over x1..x{num_vars}."""
    parser = _Parser(text, num_vars)
    result = parser.expr()
    parser.skip_ws()
    if parser.pos != parser.n:
        raise parser.error("trailing input")
    return result


# -- spec-level operation names ----------------------------------------------


def poly_partial(p: SparsePoly, j: int) -> SparsePoly:
    """Partial derivative of p with respect to x_j (1-based)."""
    return p.partial(j)


def poly_substitute(p: SparsePoly, images: Sequence[SparsePoly]) -> SparsePoly:
    """Substitute images[j-1] for x_j; a unital ring homomorphism in p."""
    return p.substitute(images)


# -- derivations ---------------------------------------------------------------


class PolyDerivation:
    """A derivation of Q[x1..xm]: sum_j components[j] * d/dx_{j+1}.

    Satisfies the Leibniz rule on products by construction.
    """

    __slots__ = ("components",)

    def __init__(self, components: Sequence[SparsePoly]):
        comps = tuple(components)
        m = len(comps)
        for c in comps:
            if c.num_vars != m:
                raise ValueError("component ring does not match variable count")
        self.components = comps

    @property
    def num_vars(self) -> int:
        return len(self.components)

    @staticmethod
    def zero(num_vars: int) -> "PolyDerivation":
        return PolyDerivation(tuple(SparsePoly.zero(num_vars) for _ in range(num_vars)))

    @staticmethod
    def coordinate(num_vars: int, j: int, coeff=1) -> "PolyDerivation":
        """coeff * d/dx_j."""
        comps = [SparsePoly.zero(num_vars) for _ in range(num_vars)]
        comps[j - 1] = SparsePoly.const(num_vars, coeff)
        return PolyDerivation(comps)

    def __call__(self, p: SparsePoly) -> SparsePoly:
        return derivation_apply(self, p)

    def __add__(self, other: "PolyDerivation") -> "PolyDerivation":
        if self.num_vars != other.num_vars:
            raise ValueError("mixed variable counts")
        return PolyDerivation(tuple(a + b for a, b in
                                    zip(self.components, other.components)))

    def scale(self, c) -> "PolyDerivation":
        return PolyDerivation(tuple(comp * rat(c) for comp in self.components))

    def scale_poly(self, p: SparsePoly) -> "PolyDerivation":
        return PolyDerivation(tuple(comp * p for comp in self.components))

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyDerivation):
            return NotImplemented
        return self.components == other.components

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)

    def __repr__(self) -> str:
        body = ", ".join(poly_to_str(c) for c in self.components)
        return f"PolyDerivation([{body}])"


def derivation_apply(D: PolyDerivation, p: SparsePoly) -> SparsePoly:
    """Apply a derivation: sum_j D.components[j] * dp/dx_{j+1}."""
    if p.num_vars != D.num_vars:
        raise ValueError(
            f"derivation on {D.num_vars} variables applied to polynomial on {p.num_vars}")
    result = SparsePoly.zero(p.num_vars)
    for j, comp in enumerate(D.components, start=1):
        if comp.is_zero():
            continue
        dp = p.partial(j)
        if not dp.is_zero():
            result = result + comp * dp
    return result


def derivation_commutator(D1: PolyDerivation, D2: PolyDerivation) -> PolyDerivation:
    """[D1, D2] as a derivation: component j is D1(b_j) - D2(a_j)."""
    if D1.num_vars != D2.num_vars:
        raise ValueError("mixed variable counts")
    return PolyDerivation(tuple(
        derivation_apply(D1, b) - derivation_apply(D2, a)
        for a, b in zip(D1.components, D2.components)))


# -- multi-index algebra --------------------------------------------------------


def canonical_multiindex(seq: Sequence[int]) -> tuple[MultiIndex, int]:
    """Sort a tuple of basis indices, returning (sorted tuple, permutation sign).

    The sign is 0 when an index repeats, otherwise the parity of the sorting
    permutation.  Indices must be positive.
    """
    idx = list(seq)
    for i in idx:
        if i < 1:
            raise ValueError(f"basis index {i} must be positive")
    sign = 1
    for i in range(1, len(idx)):
        j = i
        while j > 0 and idx[j - 1] > idx[j]:
            idx[j - 1], idx[j] = idx[j], idx[j - 1]
            sign = -sign
            j -= 1
    for k in range(1, len(idx)):
        if idx[k - 1] == idx[k]:
            return tuple(idx), 0
    return tuple(idx), sign


def increasing_tuples(dim: int, k: int) -> Iterator[MultiIndex]:
    """All strictly increasing k-tuples over {1..dim}, in lexicographic order."""
    return itertools.combinations(range(1, dim + 1), k)


def wedge_insert(base: MultiIndex, slot: int, index: int) -> tuple[MultiIndex, int]:
    """Replace position `slot` of `base` by `index` and canonicalize with sign."""
    replaced = base[:slot] + (index,) + base[slot + 1:]
    return canonical_multiindex(replaced)


def merge_multiindices(left: MultiIndex, right: MultiIndex) -> tuple[MultiIndex, int]:
    """Concatenate two multi-indices and canonicalize (the wedge of basis blocks)."""
    return canonical_multiindex(left + right)
