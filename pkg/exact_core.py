"""
Exact integer and rational linear algebra for integral lattices.

Everything here works on immutable tuples of ints or Fractions. Matrix
factorizations that sympy already provides (Bareiss determinant, Smith and
Hermite normal forms, rational inversion) are delegated to sympy's
DomainMatrix layer and converted back to plain Python numbers.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Dict, List, Sequence, Tuple, Union

from sympy import Matrix, factorint
from sympy.matrices.normalforms import hermite_normal_form, smith_normal_decomp
from sympy.polys.domains import QQ, ZZ
from sympy.polys.matrices import DomainMatrix

from config import get_settings
from errors import CapExceededError, ConsistencyError, DegenerateFormError, InvalidInputError

logger = logging.getLogger(__name__)

Rational = Fraction
IntRows = Tuple[Tuple[int, ...], ...]
RatRows = Tuple[Tuple[Fraction, ...], ...]
RowsLike = Union["SymGram", "IntMatrix", Sequence[Sequence[int]]]


def _freeze_int_rows(rows: Sequence[Sequence[int]]) -> IntRows:
    frozen = []
    for r, row in enumerate(rows):
        out = []
        for c, value in enumerate(row):
            if isinstance(value, bool) or not isinstance(value, int):
                if isinstance(value, Fraction) and value.denominator == 1:
                    value = value.numerator
                else:
                    raise InvalidInputError(f"entry ({r},{c}) is not an integer: {value!r}")
            out.append(int(value))
        frozen.append(tuple(out))
    return tuple(frozen)


def _rows_of(m: RowsLike) -> IntRows:
    if isinstance(m, SymGram):
        return m.entries
    if isinstance(m, IntMatrix):
        return m.rows
    return _freeze_int_rows(m)


def to_fraction(x) -> Fraction:
    """Convert a sympy/gmpy rational (or int) to a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(int(x.numerator), int(x.denominator))


@dataclass(frozen=True)
class IntMatrix:
    """Rectangular integer matrix (basis changes, SNF/HNF results)."""
    rows: IntRows

    def __post_init__(self):
        rows = _freeze_int_rows(self.rows)
        if not rows or not rows[0]:
            raise InvalidInputError("matrix dimensions must be positive")
        if any(len(r) != len(rows[0]) for r in rows):
            raise InvalidInputError("matrix rows have different lengths")
        object.__setattr__(self, "rows", rows)

    @property
    def nrows(self) -> int:
        return len(self.rows)

    @property
    def ncols(self) -> int:
        return len(self.rows[0])

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls(tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))

    def transpose(self) -> "IntMatrix":
        return IntMatrix(tuple(zip(*self.rows)))


@dataclass(frozen=True)
class SymGram:
    """
    Gram matrix of a lattice basis: a symmetric n×n integer matrix, n >= 1.

    Nondegeneracy is not enforced here; operations that need det != 0 raise
    DegenerateFormError. Derived quantities are computed once and cached.
    """
    entries: IntRows

    def __post_init__(self):
        entries = _freeze_int_rows(self.entries)
        n = len(entries)
        if n == 0:
            raise InvalidInputError("rank 0 lattices are not supported")
        for r, row in enumerate(entries):
            if len(row) != n:
                raise InvalidInputError(f"row {r} has {len(row)} entries, expected {n}")
        for i in range(n):
            for j in range(i + 1, n):
                if entries[i][j] != entries[j][i]:
                    raise InvalidInputError(
                        f"matrix is not symmetric at ({i},{j}): {entries[i][j]} != {entries[j][i]}"
                    )
        object.__setattr__(self, "entries", entries)

    @property
    def n(self) -> int:
        return len(self.entries)

    @classmethod
    def diagonal(cls, values: Sequence[int]) -> "SymGram":
        k = len(values)
        return cls(tuple(tuple(values[i] if i == j else 0 for j in range(k)) for i in range(k)))

    @classmethod
    def identity(cls, n: int) -> "SymGram":
        return cls.diagonal([1] * n)

    @cached_property
    def det(self) -> int:
        return determinant(self)

    @property
    def delta(self) -> int:
        return abs(self.det)

    @cached_property
    def inverse(self) -> RatRows:
        return dual_gram(self)

    @cached_property
    def signature(self) -> Tuple[int, int]:
        return signature(self)

    @property
    def sigma(self) -> int:
        n_plus, n_minus = self.signature
        return n_plus - n_minus

    @property
    def is_positive_definite(self) -> bool:
        return self.signature[1] == 0

    @property
    def is_even(self) -> bool:
        return all(self.entries[i][i] % 2 == 0 for i in range(self.n))

    def require_nondegenerate(self) -> None:
        if self.det == 0:
            raise DegenerateFormError("degenerate form: determinant is 0")

    def to_lists(self) -> List[List[int]]:
        return [list(row) for row in self.entries]


def _domain_matrix(rows: Sequence[Sequence[int]]) -> DomainMatrix:
    return DomainMatrix([[ZZ(int(x)) for x in row] for row in rows], (len(rows), len(rows[0])), ZZ)


def determinant(g: RowsLike) -> int:
    """Exact determinant (fraction-free Bareiss elimination over ZZ)."""
    rows = _rows_of(g)
    if len(rows) != len(rows[0]):
        raise InvalidInputError("determinant of a non-square matrix")
    return int(_domain_matrix(rows).det())


def _symmetric_pivots(rows: IntRows) -> List[Fraction]:
    """
    Pivots of a congruence diagonalization PᵀQP = diag(pivots).

    A zero diagonal with a nonzero off-diagonal entry m_ij is repaired by the
    congruence e_i -> e_i + e_j, which makes the new diagonal entry 2·m_ij.
    """
    m = [[Fraction(x) for x in row] for row in rows]
    pivots = []
    while m:
        size = len(m)
        k = next((i for i in range(size) if m[i][i] != 0), None)
        if k is None:
            pair = next(((i, j) for i in range(size) for j in range(size) if m[i][j] != 0), None)
            if pair is None:
                raise DegenerateFormError("degenerate form: determinant is 0")
            i, j = pair
            for c in range(size):
                m[i][c] += m[j][c]
            for r in range(size):
                m[r][i] += m[r][j]
            k = i
        if k != 0:
            m[0], m[k] = m[k], m[0]
            for row in m:
                row[0], row[k] = row[k], row[0]
        d = m[0][0]
        pivots.append(d)
        m = [
            [m[r][c] - m[r][0] * m[0][c] / d for c in range(1, size)]
            for r in range(1, size)
        ]
    return pivots


def signature(g: "SymGram") -> Tuple[int, int]:
    """(n_plus, n_minus) by Sylvester's law of inertia."""
    g.require_nondegenerate()
    pivots = _symmetric_pivots(g.entries)
    n_plus = sum(1 for d in pivots if d > 0)
    return n_plus, len(pivots) - n_plus


def rational_inverse(rows: Sequence[Sequence[Fraction]]) -> RatRows:
    """Exact inverse of a square rational matrix."""
    n = len(rows)
    dm = DomainMatrix(
        [[QQ(to_fraction(x).numerator, to_fraction(x).denominator) for x in row] for row in rows],
        (n, n),
        QQ,
    )
    if dm.det() == 0:
        raise DegenerateFormError("singular matrix has no inverse")
    inv = dm.inv().to_list()
    return tuple(tuple(to_fraction(x) for x in row) for row in inv)


def dual_gram(g: "SymGram") -> RatRows:
    """Q⁻¹, the Gram matrix of the dual lattice in the dual basis."""
    g.require_nondegenerate()
    return rational_inverse(g.entries)


def mat_mul(a: Sequence[Sequence], b: Sequence[Sequence]) -> tuple:
    cols = list(zip(*b))
    return tuple(tuple(sum(x * y for x, y in zip(row, col)) for col in cols) for row in a)


def vec_mat(v: Sequence, m: Sequence[Sequence]) -> tuple:
    return tuple(sum(v[k] * m[k][j] for k in range(len(v))) for j in range(len(m[0])))


def bilinear(m: Sequence[Sequence], x: Sequence, y: Sequence) -> Fraction:
    """xᵀ·m·y."""
    total = Fraction(0)
    for i, xi in enumerate(x):
        if xi:
            row = m[i]
            total += xi * sum(row[j] * yj for j, yj in enumerate(y) if yj)
    return total


def is_integral_vector(v: Sequence) -> bool:
    return all(Fraction(x).denominator == 1 for x in v)


@dataclass(frozen=True)
class SmithForm:
    """U·m·V = D with U, V unimodular and d₁ | d₂ | … on the diagonal of D."""
    D: IntMatrix
    U: IntMatrix
    V: IntMatrix

    @property
    def diagonal(self) -> Tuple[int, ...]:
        return tuple(self.D.rows[i][i] for i in range(min(self.D.nrows, self.D.ncols)))


def smith_normal_form(m: RowsLike) -> SmithForm:
    rows = _rows_of(m)
    d, s, t = smith_normal_decomp(Matrix(rows), domain=ZZ)
    D = IntMatrix(tuple(tuple(int(x) for x in d.row(i)) for i in range(d.rows)))
    U = IntMatrix(tuple(tuple(int(x) for x in s.row(i)) for i in range(s.rows)))
    V = IntMatrix(tuple(tuple(int(x) for x in t.row(i)) for i in range(t.rows)))
    if mat_mul(mat_mul(U.rows, rows), V.rows) != D.rows:
        raise ConsistencyError("Smith decomposition does not satisfy U·m·V = D")
    if abs(determinant(U)) != 1 or abs(determinant(V)) != 1:
        raise ConsistencyError("Smith transforms are not unimodular")
    return SmithForm(D=D, U=U, V=V)


def hermite_row_lattice(rows: RowsLike) -> IntMatrix:
    """
    Canonical upper-triangular basis (positive pivots) of the lattice spanned
    by the integer rows.

    sympy's HNF works on columns with pivots in the rightmost positions, so
    the coordinates are reversed around the call.
    """
    rows = _rows_of(rows)
    n = len(rows[0])
    reversed_cols = [list(reversed(r)) for r in rows]
    a = Matrix(reversed_cols).T
    if a.rank() != n:
        raise InvalidInputError(f"rows span rank {a.rank()}, expected full rank {n}")
    w = hermite_normal_form(a)
    if w.shape != (n, n):
        raise ConsistencyError(f"unexpected HNF shape {w.shape}")
    basis = [list(reversed([int(x) for x in w.col(j)])) for j in range(n)]
    basis.reverse()
    return IntMatrix(tuple(tuple(r) for r in basis))


def inverse_unimodular(m: RowsLike) -> IntMatrix:
    """Integer inverse of a matrix with determinant ±1."""
    rows = _rows_of(m)
    if abs(determinant(rows)) != 1:
        raise InvalidInputError("matrix is not unimodular")
    inv = rational_inverse(rows)
    return IntMatrix(tuple(tuple(int(x) for x in row) for row in inv))


def direct_sum(*grams: "SymGram") -> "SymGram":
    size = sum(g.n for g in grams)
    out = [[0] * size for _ in range(size)]
    offset = 0
    for g in grams:
        for i in range(g.n):
            for j in range(g.n):
                out[offset + i][offset + j] = g.entries[i][j]
        offset += g.n
    return SymGram(tuple(tuple(r) for r in out))


def negate(g: "SymGram") -> "SymGram":
    return SymGram(tuple(tuple(-x for x in row) for row in g.entries))


def congruent(g: "SymGram", u: RowsLike) -> "SymGram":
    """UᵀQU for a change of basis U (columns are the new basis vectors)."""
    rows = _rows_of(u)
    ut = tuple(zip(*rows))
    return SymGram(mat_mul(mat_mul(ut, g.entries), rows))


def gram_of_basis(ambient: Sequence[Sequence], basis: Sequence[Sequence]) -> "SymGram":
    """Gram B·Q·Bᵀ of rational basis rows B; raises if it is not integral."""
    product = mat_mul(mat_mul(basis, ambient), tuple(zip(*basis)))
    for r, row in enumerate(product):
        for c, x in enumerate(row):
            if Fraction(x).denominator != 1:
                raise InvalidInputError(f"Gram entry ({r},{c}) = {x} is not integral")
    return SymGram(tuple(tuple(int(x) for x in row) for row in product))


def factorize(n: int) -> Dict[int, int]:
    """Prime factorization of |n|, refused above CHARCOV_FACTOR_LIMIT."""
    n = abs(n)
    if n == 0:
        raise InvalidInputError("cannot factor 0")
    limit = get_settings().factor_limit
    if n > limit:
        raise CapExceededError(f"{n} exceeds the factorization limit {limit}")
    return {int(p): int(e) for p, e in factorint(n).items()}
