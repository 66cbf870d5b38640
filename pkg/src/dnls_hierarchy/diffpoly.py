"""Exact algebra of differential polynomials in u, conj(u) and x-derivatives.

A monomial is an exact Gaussian-rational coefficient times a multiset of
factors, each factor being one of u, conj(u) carrying some number of
x-derivatives.  Functionals are represented by densities; two densities
define the same functional iff they differ by a total x-derivative, which
is decided here by vanishing Euler (variational) derivatives.

Everything is immutable and exact; numerical content enters only through
``evaluate``, which integrates a density over a periodic grid profile
using spectral derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from .errors import ResolutionError, ZeroPolynomialError
from .exactnum import ONE, QC, ZERO
from .grid import GridFunction


@dataclass(frozen=True, order=True)
class Factor:
    """One symbol u (conjugated=False) or conj(u) (True) with `order` x-derivatives."""

    conjugated: bool
    order: int

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("derivative order must be nonnegative")

    def bump(self) -> "Factor":
        return Factor(self.conjugated, self.order + 1)

    def __str__(self) -> str:
        base = "ub" if self.conjugated else "u"
        return base if self.order == 0 else f"{base}_x{self.order}"


FactorKey = tuple[Factor, ...]


def _canon(factors: Iterable[Factor]) -> FactorKey:
    return tuple(sorted(factors))


@dataclass(frozen=True)
class DiffMonomial:
    coeff: QC
    factors: FactorKey

    @property
    def degree(self) -> int:
        return len(self.factors)

    @property
    def total_order(self) -> int:
        return sum(f.order for f in self.factors)

    @property
    def weight(self) -> Fraction:
        return Fraction(self.total_order) + Fraction(self.degree, 2) - 1

    def __str__(self) -> str:
        if not self.factors:
            return str(self.coeff)
        return f"{self.coeff}*" + "*".join(str(f) for f in self.factors)


class INHOMOGENEOUS:
    """Sentinel returned by scaling_weight for mixed-weight polynomials."""

    def __repr__(self):
        return "INHOMOGENEOUS"


INHOMOGENEOUS = INHOMOGENEOUS()


class DiffPolynomial:
    """Finite exact sum of differential monomials, merged by factor multiset."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[FactorKey, QC] | None = None):
        clean: dict[FactorKey, QC] = {}
        if terms:
            for key, coeff in terms.items():
                if coeff:
                    clean[key] = coeff
        object.__setattr__(self, "_terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("DiffPolynomial is immutable")

    # -- constructors ---------------------------------------------------------

    @classmethod
    def zero(cls) -> "DiffPolynomial":
        return cls()

    @classmethod
    def constant(cls, c) -> "DiffPolynomial":
        c = c if isinstance(c, QC) else QC.of(c)
        return cls({(): c})

    @classmethod
    def symbol(cls, conjugated: bool = False, order: int = 0, coeff=ONE):
        coeff = coeff if isinstance(coeff, QC) else QC.of(coeff)
        return cls({(Factor(conjugated, order),): coeff})

    @classmethod
    def from_monomials(cls, monos: Iterable[tuple[QC, Iterable[Factor]]]):
        terms: dict[FactorKey, QC] = {}
        for coeff, factors in monos:
            key = _canon(factors)
            terms[key] = terms.get(key, ZERO) + coeff
        return cls(terms)

    # -- inspection -----------------------------------------------------------

    def monomials(self) -> list[DiffMonomial]:
        return [DiffMonomial(c, k) for k, c in sorted(self._terms.items())]

    @property
    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def coefficient(self, factors: Iterable[Factor]) -> QC:
        return self._terms.get(_canon(factors), ZERO)

    @property
    def max_order(self) -> int:
        return max((f.order for k in self._terms for f in k), default=0)

    def degrees(self) -> set[int]:
        return {len(k) for k in self._terms}

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiffPolynomial):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        return " + ".join(str(m) for m in self.monomials())

    __repr__ = __str__

    # -- ring operations --------------------------------------------------------

    def __add__(self, other: "DiffPolynomial") -> "DiffPolynomial":
        if not isinstance(other, DiffPolynomial):
            return NotImplemented
        terms = dict(self._terms)
        for key, coeff in other._terms.items():
            acc = terms.get(key, ZERO) + coeff
            if acc:
                terms[key] = acc
            else:
                terms.pop(key, None)
        return DiffPolynomial(terms)

    def __neg__(self) -> "DiffPolynomial":
        return DiffPolynomial({k: -c for k, c in self._terms.items()})

    def __sub__(self, other: "DiffPolynomial") -> "DiffPolynomial":
        return self + (-other)

    def scale(self, c) -> "DiffPolynomial":
        c = c if isinstance(c, QC) else QC.of(c)
        if not c:
            return DiffPolynomial()
        return DiffPolynomial({k: c * v for k, v in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, (QC, int, Fraction)):
            return self.scale(other)
        if not isinstance(other, DiffPolynomial):
            return NotImplemented
        terms: dict[FactorKey, QC] = {}
        for k1, c1 in self._terms.items():
            for k2, c2 in other._terms.items():
                key = _canon(k1 + k2)
                acc = terms.get(key, ZERO) + c1 * c2
                if acc:
                    terms[key] = acc
                else:
                    terms.pop(key, None)
        return DiffPolynomial(terms)

    def __rmul__(self, other):
        if isinstance(other, (QC, int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def conjugate(self) -> "DiffPolynomial":
        terms: dict[FactorKey, QC] = {}
        for k, c in self._terms.items():
            key = _canon(Factor(not f.conjugated, f.order) for f in k)
            terms[key] = terms.get(key, ZERO) + c.conjugate()
        return DiffPolynomial(terms)

    # -- calculus ---------------------------------------------------------------

    def dx(self) -> "DiffPolynomial":
        """Total x-derivative (Leibniz rule, exact)."""
        terms: dict[FactorKey, QC] = {}
        for key, coeff in self._terms.items():
            seen: set[Factor] = set()
            for i, f in enumerate(key):
                if f in seen:
                    continue
                seen.add(f)
                mult = key.count(f)
                new_key = _canon(key[:i] + key[i + 1 :] + (f.bump(),))
                acc = terms.get(new_key, ZERO) + coeff * mult
                if acc:
                    terms[new_key] = acc
                else:
                    terms.pop(new_key, None)
        return DiffPolynomial(terms)

    def partial(self, factor: Factor) -> "DiffPolynomial":
        """Partial derivative treating each distinct Factor as an independent symbol."""
        terms: dict[FactorKey, QC] = {}
        for key, coeff in self._terms.items():
            mult = key.count(factor)
            if not mult:
                continue
            i = key.index(factor)
            new_key = key[:i] + key[i + 1 :]
            acc = terms.get(new_key, ZERO) + coeff * mult
            if acc:
                terms[new_key] = acc
            else:
                terms.pop(new_key, None)
        return DiffPolynomial(terms)

    def euler(self, conjugated: bool) -> "DiffPolynomial":
        """Variational derivative: sum_a (-d/dx)^a  d/d(symbol with a derivatives)."""
        orders = {f.order for k in self._terms for f in k if f.conjugated == conjugated}
        result = DiffPolynomial()
        for a in sorted(orders):
            term = self.partial(Factor(conjugated, a))
            for _ in range(a):
                term = term.dx()
            result = result + (term if a % 2 == 0 else -term)
        return result

    def scaling_weight(self) -> Fraction | type(INHOMOGENEOUS):
        if self.is_zero:
            raise ZeroPolynomialError("scaling weight of the zero polynomial")
        weights = {DiffMonomial(c, k).weight for k, c in self._terms.items()}
        if len(weights) > 1:
            return INHOMOGENEOUS
        return weights.pop()

    def degree_split(self) -> dict[int, "DiffPolynomial"]:
        buckets: dict[int, dict[FactorKey, QC]] = {}
        for k, c in self._terms.items():
            buckets.setdefault(len(k), {})[k] = c
        return {d: DiffPolynomial(t) for d, t in sorted(buckets.items())}

    # -- numerics ----------------------------------------------------------------

    def evaluate(self, u: GridFunction) -> complex:
        """Integral of the density over the periodic domain of u.

        Derivatives are spectral; a heuristic dealiasing guard rejects
        densities whose derivative order is too high for the grid.
        """
        if self.is_zero:
            return 0.0 + 0.0j
        if self.max_order >= u.n // 4:
            raise ResolutionError(
                f"derivative order {self.max_order} too high for N={u.n}"
            )
        cache: dict[Factor, np.ndarray] = {}

        def samples(f: Factor) -> np.ndarray:
            arr = cache.get(f)
            if arr is None:
                arr = u.deriv(f.order)
                if f.conjugated:
                    arr = np.conj(arr)
                cache[f] = arr
            return arr

        total = np.zeros(u.n, dtype=np.complex128)
        for key, coeff in self._terms.items():
            prod = np.full(u.n, complex(coeff), dtype=np.complex128)
            for f in key:
                prod = prod * samples(f)
            total += prod
        return complex(u.h * np.sum(total))


# Convenience symbols
U = DiffPolynomial.symbol(False, 0)
UBAR = DiffPolynomial.symbol(True, 0)


def u_deriv(order: int) -> DiffPolynomial:
    return DiffPolynomial.symbol(False, order)


def ubar_deriv(order: int) -> DiffPolynomial:
    return DiffPolynomial.symbol(True, order)


# ---------------------------------------------------------------------------
# Operation-style entry points mirroring the public contract.


def add(p: DiffPolynomial, q: DiffPolynomial) -> DiffPolynomial:
    return p + q


def mul(p: DiffPolynomial, q: DiffPolynomial) -> DiffPolynomial:
    return p * q


def differentiate(p: DiffPolynomial) -> DiffPolynomial:
    return p.dx()


def scaling_weight(p: DiffPolynomial):
    return p.scaling_weight()


def variational_derivative(p: DiffPolynomial, wrt: str | bool) -> DiffPolynomial:
    if isinstance(wrt, str):
        if wrt not in ("u", "ubar"):
            raise ValueError("wrt must be 'u' or 'ubar'")
        wrt = wrt == "ubar"
    return p.euler(wrt)


def functionals_equal(p: DiffPolynomial, q: DiffPolynomial) -> bool:
    """True iff p and q differ by a total x-derivative (vanishing Euler ops)."""
    diff = p - q
    return diff.euler(False).is_zero and diff.euler(True).is_zero


def evaluate(p: DiffPolynomial, u: GridFunction) -> complex:
    return p.evaluate(u)
