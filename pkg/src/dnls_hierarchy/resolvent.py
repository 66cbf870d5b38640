"""Recursive construction of the resolvent-symbol coefficients.

The inverse of the spectral operator is a pseudodifferential operator
whose symbol, after the substitution p = zeta / lambda^2, expands in
inverse powers of lambda.  The diagonal and antidiagonal coefficient
matrices R_k^d, R_k^a of that expansion satisfy a closed recursion with
rational-in-p entries over the common denominator (p^2-1)^(k+1).

Representation: a MatrixSymbol is a 2x2 matrix whose entries are
polynomials in p with DiffPolynomial coefficients; matrix-valued factors
like (p s3 - 1) are expanded into the entries immediately.  All structure
claims (homogeneity, derivative budget, p-degree bounds, telescoping of
the defining identities) are re-checked post-expansion.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

from .diffpoly import DiffPolynomial, U, UBAR
from .errors import StructureViolation, TelescopeFailure
from .exactnum import I, ONE, QC

Entry = tuple[DiffPolynomial, ...]  # index = power of p

K_MAX_DEFAULT = 8


@dataclass(frozen=True)
class PPoly:
    """Exact polynomial in p; trailing zero coefficients trimmed."""

    coeffs: tuple[QC, ...]

    def __post_init__(self):
        coeffs = tuple(self.coeffs)
        while coeffs and coeffs[-1].is_zero:
            coeffs = coeffs[:-1]
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def monomial(cls, power: int, coeff: QC = ONE) -> "PPoly":
        return cls((QC(),) * power + (coeff,))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1  # -1 for the zero polynomial

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def __call__(self, p: complex) -> complex:
        acc = 0j
        for c in reversed(self.coeffs):
            acc = acc * p + complex(c)
        return acc


# -- entry helpers ------------------------------------------------------------

ZERO_ENTRY: Entry = ()


def _trim(entry: list[DiffPolynomial]) -> Entry:
    while entry and entry[-1].is_zero:
        entry.pop()
    return tuple(entry)


def entry_add(a: Entry, b: Entry) -> Entry:
    n = max(len(a), len(b))
    zero = DiffPolynomial.zero()
    out = [
        (a[i] if i < len(a) else zero) + (b[i] if i < len(b) else zero)
        for i in range(n)
    ]
    return _trim(out)


def entry_mul(a: Entry, b: Entry) -> Entry:
    if not a or not b:
        return ZERO_ENTRY
    out = [DiffPolynomial.zero()] * (len(a) + len(b) - 1)
    for i, pa in enumerate(a):
        if pa.is_zero:
            continue
        for j, pb in enumerate(b):
            if pb.is_zero:
                continue
            out[i + j] = out[i + j] + pa * pb
    return _trim(out)


def entry_scale(a: Entry, c) -> Entry:
    return _trim([poly.scale(c) for poly in a])


def entry_dx(a: Entry) -> Entry:
    return _trim([poly.dx() for poly in a])


def entry_is_zero(a: Entry) -> bool:
    return all(poly.is_zero for poly in a)


def poly_entry(*coeffs) -> Entry:
    """Entry from plain scalars/DiffPolynomials, index = power of p."""
    out = []
    for c in coeffs:
        out.append(c if isinstance(c, DiffPolynomial) else DiffPolynomial.constant(c))
    return _trim(out)


# -- matrix symbols ------------------------------------------------------------


@dataclass(frozen=True)
class MatrixSymbol:
    """2x2 matrix of p-polynomials with DiffPolynomial coefficients,
    over the common denominator (p^2-1)^denom_power."""

    entries: tuple[tuple[Entry, Entry], tuple[Entry, Entry]]
    denom_power: int = 0

    @classmethod
    def build(cls, e11, e12, e21, e22, denom_power: int = 0) -> "MatrixSymbol":
        return cls(((tuple(e11), tuple(e12)), (tuple(e21), tuple(e22))), denom_power)

    @classmethod
    def zero(cls, denom_power: int = 0) -> "MatrixSymbol":
        z = ZERO_ENTRY
        return cls.build(z, z, z, z, denom_power)

    @property
    def is_zero(self) -> bool:
        return all(entry_is_zero(e) for row in self.entries for e in row)

    @property
    def is_diagonal(self) -> bool:
        return entry_is_zero(self.entries[0][1]) and entry_is_zero(self.entries[1][0])

    @property
    def is_antidiagonal(self) -> bool:
        return entry_is_zero(self.entries[0][0]) and entry_is_zero(self.entries[1][1])

    def raise_denom(self, target: int) -> "MatrixSymbol":
        """Multiply numerator by powers of (p^2-1) to reach the target denominator."""
        if target < self.denom_power:
            raise ValueError("cannot lower a denominator power")
        sym = self
        p2m1 = poly_entry(-1, 0, 1)
        for _ in range(target - self.denom_power):
            new = tuple(
                tuple(entry_mul(e, p2m1) for e in row) for row in sym.entries
            )
            sym = MatrixSymbol(new, sym.denom_power + 1)
        return sym

    def __add__(self, other: "MatrixSymbol") -> "MatrixSymbol":
        m = max(self.denom_power, other.denom_power)
        a, b = self.raise_denom(m), other.raise_denom(m)
        new = tuple(
            tuple(entry_add(a.entries[i][j], b.entries[i][j]) for j in range(2))
            for i in range(2)
        )
        return MatrixSymbol(new, m)

    def __neg__(self) -> "MatrixSymbol":
        return self.scale(QC.of(-1))

    def __sub__(self, other: "MatrixSymbol") -> "MatrixSymbol":
        return self + (-other)

    def scale(self, c) -> "MatrixSymbol":
        new = tuple(tuple(entry_scale(e, c) for e in row) for row in self.entries)
        return MatrixSymbol(new, self.denom_power)

    def __matmul__(self, other: "MatrixSymbol") -> "MatrixSymbol":
        rows = []
        for i in range(2):
            row = []
            for j in range(2):
                acc = ZERO_ENTRY
                for k in range(2):
                    acc = entry_add(
                        acc, entry_mul(self.entries[i][k], other.entries[k][j])
                    )
                row.append(acc)
            rows.append(tuple(row))
        return MatrixSymbol(tuple(rows), self.denom_power + other.denom_power)

    def dx(self) -> "MatrixSymbol":
        """d/dx of the numerator; the denominator carries no x dependence."""
        new = tuple(tuple(entry_dx(e) for e in row) for row in self.entries)
        return MatrixSymbol(new, self.denom_power)

    def over_p2m1(self) -> "MatrixSymbol":
        return MatrixSymbol(self.entries, self.denom_power + 1)

    def equals(self, other: "MatrixSymbol") -> bool:
        return (self - other).is_zero

    def entry_ppoly(self, i: int, j: int, factors) -> PPoly:
        """p-polynomial attached to one differential monomial of entry (i, j)."""
        coeffs = [poly.coefficient(factors) for poly in self.entries[i][j]]
        return PPoly(tuple(coeffs))

    def max_p_degree(self) -> int:
        return max(
            (len(e) - 1 for row in self.entries for e in row if e), default=-1
        )

    def to_debug_json(self) -> dict:
        """Golden-file friendly dump: entry -> list of monomial records."""
        out = {"denom_power": self.denom_power, "entries": {}}
        for i in range(2):
            for j in range(2):
                records = []
                keys = sorted(
                    {m.factors for poly in self.entries[i][j] for m in poly.monomials()}
                )
                for key in keys:
                    pp = self.entry_ppoly(i, j, key)
                    records.append(
                        {
                            "monomial": "*".join(str(f) for f in key) or "1",
                            "p_coeffs": [str(c) for c in pp.coeffs],
                        }
                    )
                out["entries"][f"{i + 1}{j + 1}"] = records
        return out


# -- constant building blocks ---------------------------------------------------

ID2 = MatrixSymbol.build(poly_entry(1), (), (), poly_entry(1))
SIGMA3 = MatrixSymbol.build(poly_entry(1), (), (), poly_entry(-1))
P_SIGMA3_MINUS_1 = MatrixSymbol.build(poly_entry(-1, 1), (), (), poly_entry(-1, -1))
P_SIGMA3_PLUS_1 = MatrixSymbol.build(poly_entry(1, 1), (), (), poly_entry(1, -1))
U_MATRIX = MatrixSymbol.build((), poly_entry(U), poly_entry(UBAR), ())


# -- the recursion ----------------------------------------------------------------


def base_symbols() -> tuple[MatrixSymbol, MatrixSymbol]:
    """Level-0 diagonal and antidiagonal coefficients, denominator (p^2-1)."""
    rd0 = P_SIGMA3_MINUS_1.scale(QC.of(-1)).over_p2m1()
    ra0 = U_MATRIX.scale(-I).over_p2m1()
    return rd0, ra0


_memo: dict[int, tuple[MatrixSymbol, MatrixSymbol]] = {}


def recurse(k: int, k_max: int = K_MAX_DEFAULT) -> tuple[MatrixSymbol, MatrixSymbol]:
    """(R_k^d, R_k^a), memoized.  Term counts explode with k, hence the cap."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k > k_max:
        raise ValueError(f"k={k} exceeds the cap {k_max}")
    hit = _memo.get(k)
    if hit is not None:
        return hit
    if k == 0:
        result = base_symbols()
    else:
        rd_prev, ra_prev = recurse(k - 1, k_max)
        # diagonal: (1/(p^2-1)) [-i U R_{k-1}^a + i (dx R_{k-1}^d) s3] (p s3 - 1)
        rd_bracket = (U_MATRIX @ ra_prev).scale(-I) + (rd_prev.dx() @ SIGMA3).scale(I)
        rd = (rd_bracket @ P_SIGMA3_MINUS_1).over_p2m1()
        # antidiagonal, expanded form:
        # (1/(p^2-1)) [U^2 R_{k-1}^a - U (dx R_{k-1}^d) s3
        #              + i (dx R_{k-1}^a) s3 (p s3 + 1)]
        u2 = U_MATRIX @ U_MATRIX
        ra_bracket = (
            (u2 @ ra_prev)
            - (U_MATRIX @ rd_prev.dx() @ SIGMA3)
            + (ra_prev.dx() @ SIGMA3 @ P_SIGMA3_PLUS_1).scale(I)
        )
        ra = ra_bracket.over_p2m1()
        if not rd.is_diagonal:
            raise StructureViolation(f"R_{k}^d has antidiagonal entries")
        if not ra.is_antidiagonal:
            raise StructureViolation(f"R_{k}^a has diagonal entries")
        if rd.denom_power != k + 1 or ra.denom_power != k + 1:
            raise StructureViolation(f"denominator power mismatch at level {k}")
        result = (rd, ra)
    _memo[k] = result
    return result


def clear_cache() -> None:
    _memo.clear()


Kind = Literal["diagonal", "antidiagonal"]


@dataclass(frozen=True)
class HomogeneousPart:
    k: int
    r: int
    kind: Kind
    symbol: MatrixSymbol


def homogeneous_parts(k: int, kind: Kind, k_max: int = K_MAX_DEFAULT) -> list[HomogeneousPart]:
    """Partition R_k^(d|a) by homogeneity degree in u, conj(u)."""
    rd, ra = recurse(k, k_max)
    sym = rd if kind == "diagonal" else ra
    buckets: dict[int, list[list[dict[int, DiffPolynomial]]]] = {}
    for i in range(2):
        for j in range(2):
            for power, poly in enumerate(sym.entries[i][j]):
                for degree, part in poly.degree_split().items():
                    if kind == "diagonal":
                        if degree % 2:
                            raise StructureViolation(
                                f"odd degree {degree} in diagonal symbol k={k}"
                            )
                        r = degree // 2
                    else:
                        if degree % 2 == 0:
                            raise StructureViolation(
                                f"even degree {degree} in antidiagonal symbol k={k}"
                            )
                        r = (degree - 1) // 2
                    tbl = buckets.setdefault(r, [[dict(), dict()], [dict(), dict()]])
                    entry_terms = tbl[i][j]
                    entry_terms[power] = entry_terms.get(power, DiffPolynomial.zero()) + part
    parts = []
    for r in sorted(buckets):
        tbl = buckets[r]
        rows = []
        for i in range(2):
            row = []
            for j in range(2):
                n = max(tbl[i][j], default=-1) + 1
                row.append(_trim([tbl[i][j].get(d, DiffPolynomial.zero()) for d in range(n)]))
            rows.append(tuple(row))
        parts.append(
            HomogeneousPart(k, r, kind, MatrixSymbol(tuple(rows), sym.denom_power))
        )
    return parts


@dataclass(frozen=True)
class StructureReport:
    ok: bool
    violations: tuple[str, ...]

    def __bool__(self):
        return self.ok


def verify_structure(part: HomogeneousPart) -> StructureReport:
    """Check a homogeneous part against its expected shape:

    denominator power k+1; entry degree 2r (diagonal) or 2r+1 (antidiagonal);
    every monomial carries exactly k-r total derivatives; the p-polynomial
    attached to each monomial has degree <= k-r (+1 on the diagonal, where a
    (p s3 - 1) factor was expanded into the entries).
    """
    k, r, sym = part.k, part.r, part.symbol
    bad: list[str] = []
    if sym.denom_power != k + 1:
        bad.append(f"denominator power {sym.denom_power} != {k + 1}")
    want_degree = 2 * r if part.kind == "diagonal" else 2 * r + 1
    budget = k - r
    p_bound = budget + (1 if part.kind == "diagonal" else 0)
    diag_positions = {(0, 0), (1, 1)}
    for i in range(2):
        for j in range(2):
            on_diag = (i, j) in diag_positions
            if part.kind == "diagonal" and not on_diag and not entry_is_zero(sym.entries[i][j]):
                bad.append(f"entry ({i + 1},{j + 1}) should vanish in a diagonal part")
                continue
            if part.kind == "antidiagonal" and on_diag and not entry_is_zero(sym.entries[i][j]):
                bad.append(f"entry ({i + 1},{j + 1}) should vanish in an antidiagonal part")
                continue
            keys = {m.factors for poly in sym.entries[i][j] for m in poly.monomials()}
            for key in sorted(keys):
                mono = "*".join(str(f) for f in key) or "1"
                if len(key) != want_degree:
                    bad.append(
                        f"({i + 1},{j + 1}) {mono}: degree {len(key)} != {want_degree}"
                    )
                total = sum(f.order for f in key)
                if total != budget:
                    bad.append(
                        f"({i + 1},{j + 1}) {mono}: derivative count {total} != {budget}"
                    )
                pp = sym.entry_ppoly(i, j, key)
                if pp.degree > p_bound:
                    bad.append(
                        f"({i + 1},{j + 1}) {mono}: p-degree {pp.degree} > {p_bound}"
                    )
    return StructureReport(not bad, tuple(bad))


# -- telescoping and the truncation residual ---------------------------------------


def telescope_brackets(n: int, k_max: int = K_MAX_DEFAULT) -> None:
    """Verify that every bracket of the expanded defining identities vanishes.

    Level 0:  -(p s3 + 1) R_0^d = I   and   -(p s3 + 1) R_0^a - i U R_0^d = 0.
    Level k:  i s3 dx R_{k-1}^d - (p s3 + 1) R_k^d - i U R_{k-1}^a = 0  (diag),
              i s3 dx R_{k-1}^a - (p s3 + 1) R_k^a - i U R_k^d     = 0  (anti).
    """
    rd0, ra0 = recurse(0, k_max)
    base_d = (P_SIGMA3_PLUS_1 @ rd0).scale(QC.of(-1)) - ID2
    if not base_d.is_zero:
        raise TelescopeFailure(0, "diagonal base identity violated")
    base_a = (P_SIGMA3_PLUS_1 @ ra0).scale(QC.of(-1)) - (U_MATRIX @ rd0).scale(I)
    if not base_a.is_zero:
        raise TelescopeFailure(0, "antidiagonal base identity violated")
    for k in range(1, n + 1):
        rd_prev, ra_prev = recurse(k - 1, k_max)
        rd_k, ra_k = recurse(k, k_max)
        diag = (
            (SIGMA3 @ rd_prev.dx()).scale(I)
            - (P_SIGMA3_PLUS_1 @ rd_k)
            - (U_MATRIX @ ra_prev).scale(I)
        )
        if not diag.is_zero:
            raise TelescopeFailure(k, f"diagonal bracket nonzero at k={k}")
        anti = (
            (SIGMA3 @ ra_prev.dx()).scale(I)
            - (P_SIGMA3_PLUS_1 @ ra_k)
            - (U_MATRIX @ rd_k).scale(I)
        )
        if not anti.is_zero:
            raise TelescopeFailure(k, f"antidiagonal bracket nonzero at k={k}")


def truncation_residual(n: int, k_max: int = K_MAX_DEFAULT) -> tuple[MatrixSymbol, MatrixSymbol]:
    """Residual symbols left after truncating the expansion at level n.

    Telescoping is verified first; the residual is the pair
    (i s3 dx R_n^d, -R_n^a (p s3 - 1)), to be divided by lambda^(2+2n) and
    lambda^(1+2n) respectively by the caller.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    telescope_brackets(n, k_max)
    rd_n, ra_n = recurse(n, k_max)
    yd = (SIGMA3 @ rd_n.dx()).scale(I)
    ya = (ra_n @ P_SIGMA3_MINUS_1).scale(QC.of(-1))
    return yd, ya
