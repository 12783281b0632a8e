"""
Characteristic covectors of integral lattices.

A covector is given by its coordinates in the dual basis; it is
characteristic when every coordinate has the parity of the matching Gram
diagonal entry. Minimization over the characteristic coset is an exact
Fincke-Pohst search on Q⁻¹.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from sympy import isprime

import linking
from errors import ConsistencyError, InvalidInputError
from exact_core import RatRows, SymGram, bilinear, gram_of_basis, negate

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Covector:
    """Dual-basis coordinates and the exact square cᵀQ⁻¹c."""
    coords: Tuple[int, ...]
    square: Fraction


@dataclass(frozen=True)
class BoundReport:
    """Outcome of checking the characteristic-square bound on one lattice."""
    min_square: Fraction
    bound: Fraction
    delta: int
    delta_parity: str
    is_extremal: bool
    minimizer: Covector


@dataclass(frozen=True)
class SublemmaWitness:
    variant: int
    k: Tuple[int, ...]
    l: Tuple[int, ...]
    value: int
    bound: int


def make_covector(g: SymGram, coords: Sequence[int]) -> Covector:
    coords = tuple(int(c) for c in coords)
    if len(coords) != g.n:
        raise InvalidInputError(f"covector has {len(coords)} coordinates, lattice rank is {g.n}")
    return Covector(coords=coords, square=bilinear(g.inverse, coords, coords))


def is_characteristic(g: SymGram, coords: Sequence[int]) -> bool:
    return all((c - g.entries[i][i]) % 2 == 0 for i, c in enumerate(coords))


def characteristic_parity(g: SymGram) -> Tuple[int, ...]:
    g.require_nondegenerate()
    return tuple(g.entries[i][i] % 2 for i in range(g.n))


def _require_positive_definite(g: SymGram) -> None:
    g.require_nondegenerate()
    if not g.is_positive_definite:
        raise InvalidInputError(f"form is not positive-definite (signature {g.signature})")


def _canonical_sign(coords: Tuple[int, ...]) -> Tuple[int, ...]:
    for c in coords:
        if c != 0:
            return coords if c > 0 else tuple(-x for x in coords)
    return coords


def _pick_minimizer(candidates) -> Tuple[int, ...]:
    # lexicographically smallest representative whose first nonzero entry is positive
    return min(_canonical_sign(tuple(c)) for c in candidates)


def _completed_squares(form: RatRows) -> List[List[Fraction]]:
    """
    Rewrite xᵀAx as Σ q_ii (x_i + Σ_{j>i} q_ij x_j)² for positive-definite A.
    """
    n = len(form)
    q = [[Fraction(x) for x in row] for row in form]
    for i in range(n):
        for j in range(i + 1, n):
            q[j][i] = q[i][j]
            q[i][j] = q[i][j] / q[i][i]
        for k in range(i + 1, n):
            for l in range(k, n):
                q[k][l] -= q[k][i] * q[i][l]
    return q


class _CosetSearch:
    """
    Depth-first enumeration of x with xᵀAx <= bound, optionally restricted to
    x ≡ parity (mod 2), visiting coordinates from the last to the first.
    """

    def __init__(self, form: RatRows, parity: Optional[Sequence[int]] = None):
        self.q = _completed_squares(form)
        self.n = len(form)
        self.parity = parity
        self.bound = Fraction(0)
        self.shrink = False
        self.hits: List[Tuple[Fraction, Tuple[int, ...]]] = []
        self.nodes = 0

    def run(self, bound: Fraction, shrink: bool) -> List[Tuple[Fraction, Tuple[int, ...]]]:
        self.bound = Fraction(bound)
        self.shrink = shrink
        self.hits = []
        self.nodes = 0
        self._descend(self.n - 1, [0] * self.n, Fraction(0))
        return self.hits

    def _start(self, center: Fraction, i: int) -> Tuple[int, int]:
        if self.parity is None:
            return math.floor(center + Fraction(1, 2)), 1
        base = math.floor(center)
        if (base - self.parity[i]) % 2:
            base -= 1
        if center - base > 1:
            base += 2
        return base, 2

    def _descend(self, i: int, x: List[int], partial: Fraction) -> None:
        q = self.q
        center = -sum((q[i][j] * x[j] for j in range(i + 1, self.n)), Fraction(0))
        d = q[i][i]
        base, step = self._start(center, i)
        up, down = base, base - step
        up_open = down_open = True
        while up_open or down_open:
            if up_open:
                up_open = self._try(i, x, partial, d, center, up)
                up += step
            if down_open:
                down_open = self._try(i, x, partial, d, center, down)
                down -= step

    def _try(self, i: int, x: List[int], partial: Fraction, d: Fraction, center: Fraction, value: int) -> bool:
        total = partial + d * (value - center) ** 2
        if total > self.bound:
            return False
        self.nodes += 1
        x[i] = value
        if i == 0:
            self._visit(tuple(x), total)
        else:
            self._descend(i - 1, x, total)
        x[i] = 0
        return True

    def _visit(self, x: Tuple[int, ...], value: Fraction) -> None:
        if self.shrink and value < self.bound:
            logger.debug("[CHAR] radius shrinks %s -> %s", self.bound, value)
            self.bound = value
            self.hits = [hit for hit in self.hits if hit[0] <= value]
        self.hits.append((value, x))


def min_characteristic(g: SymGram) -> Covector:
    """
    Characteristic covector of least square, with the tie-break: smallest
    coordinate vector (lexicographically) whose first nonzero entry is positive.
    """
    _require_positive_definite(g)
    parity = characteristic_parity(g)
    start = bilinear(g.inverse, parity, parity)
    search = _CosetSearch(g.inverse, parity)
    hits = search.run(start, shrink=True)
    best = min(value for value, _ in hits)
    coords = _pick_minimizer(x for value, x in hits if value == best)
    logger.debug("[CHAR] minimum %s over %d nodes (rank %d)", best, search.nodes, g.n)
    return Covector(coords=coords, square=best)


def coverage_box(g: SymGram, radius: Optional[Fraction] = None) -> int:
    """
    A box size that contains every coset member of square at most `radius`
    (|c_i|² <= R·Q_ii). The default radius is the parity vector's square,
    which is where the branch-and-bound search starts.
    """
    if radius is None:
        parity = characteristic_parity(g)
        radius = bilinear(g.inverse, parity, parity)
    return max(math.isqrt(math.floor(radius * g.entries[i][i])) for i in range(g.n)) + 1


def brute_force_min(g: SymGram, box: int) -> Covector:
    """Exhaustive minimum over coset members with |c_i| <= box."""
    _require_positive_definite(g)
    if box < 1:
        raise InvalidInputError("box must be a positive integer")
    parity = characteristic_parity(g)
    det = g.det
    adj = [[int(x * det) for x in row] for row in g.inverse]
    ranges = [
        [c for c in range(-box, box + 1) if (c - parity[i]) % 2 == 0]
        for i in range(g.n)
    ]
    best = None
    ties = []
    for c in itertools.product(*ranges):
        value = sum(c[i] * sum(adj[i][j] * c[j] for j in range(g.n)) for i in range(g.n))
        if best is None or value < best:
            best, ties = value, [c]
        elif value == best:
            ties.append(c)
    return Covector(coords=_pick_minimizer(ties), square=Fraction(best, det))


def main_bound(n: int, delta: int) -> Fraction:
    return Fraction(n - 1) + (Fraction(1, delta) if delta % 2 else 0)


def unit_vectors(g: SymGram) -> List[Tuple[int, ...]]:
    """Lattice vectors of norm 1, one per ± pair."""
    _require_positive_definite(g)
    hits = _CosetSearch(g.entries).run(Fraction(1), shrink=False)
    return sorted({_canonical_sign(x) for value, x in hits if value == 1})


def is_extremal_form(g: SymGram) -> bool:
    """
    True iff g ≅ diag(1, …, 1, δ).

    Norm-1 vectors of a positive-definite lattice are pairwise orthogonal up
    to sign, so they span an orthonormal summand; the form is extremal iff
    its complement has rank at most one.
    """
    units = unit_vectors(g)
    return g.n - len(units) <= 1


def check_main_bound(g: SymGram) -> BoundReport:
    _require_positive_definite(g)
    minimizer = min_characteristic(g)
    delta = g.delta
    bound = main_bound(g.n, delta)
    extremal = is_extremal_form(g)
    if minimizer.square > bound:
        raise ConsistencyError(f"minimal characteristic square {minimizer.square} exceeds bound {bound}")
    if minimizer.square == bound and not extremal:
        raise ConsistencyError(f"bound {bound} attained by a non-extremal form")
    return BoundReport(
        min_square=minimizer.square,
        bound=bound,
        delta=delta,
        delta_parity="odd" if delta % 2 else "even",
        is_extremal=extremal,
        minimizer=minimizer,
    )


def max_characteristic_negative(g: SymGram) -> Covector:
    """Largest characteristic square of a negative-definite form."""
    g.require_nondegenerate()
    if g.signature[0] != 0:
        raise InvalidInputError(f"form is not negative-definite (signature {g.signature})")
    flipped = min_characteristic(negate(g))
    return Covector(coords=flipped.coords, square=-flipped.square)


def congruence_mod4(g: SymGram) -> Fraction:
    """Residue of every characteristic square modulo 4/δ."""
    g.require_nondegenerate()
    delta = g.delta
    value = Fraction(g.sigma - 1)
    if delta % 2:
        value += Fraction(1, delta)
    return value % Fraction(4, delta)


def congruence_mod8(g: SymGram) -> Fraction:
    """Residue of every characteristic square modulo 8/δ (odd δ only)."""
    g.require_nondegenerate()
    delta = g.delta
    if delta % 2 == 0:
        raise InvalidInputError(f"congruence mod 8/δ needs odd determinant, got δ = {delta}")
    value = Fraction(g.sigma)
    for block in linking.decompose(g):
        if block.exponent % 2 == 0:
            continue
        if block.kind == linking.BlockKind.A:
            value -= 1 - block.prime
        elif block.kind == linking.BlockKind.B:
            value -= 5 - block.prime
    return value % Fraction(8, delta)


def _odd_multipliers(p: int) -> List[int]:
    # {2-p, 4-p, ..., p-2}, nearest to zero first
    return sorted(range(2 - p, p - 1, 2), key=lambda k: (abs(k), k < 0))


def _nearest_even_multiple(target: int, p: int) -> Tuple[int, int]:
    """Even l minimizing |target - l·p|, and that residual squared."""
    low = 2 * (target // (2 * p))
    options = [(abs(target - l * p), l) for l in (low, low + 2)]
    residual, l = min(options)
    return l, residual * residual


def _check_entries(name: str, values: Sequence[int], parity: int, limit: int) -> None:
    for v in values:
        if v % 2 != parity:
            raise InvalidInputError(f"{name} entries must be {'odd' if parity else 'even'}, got {v}")
        if abs(v) > limit:
            raise InvalidInputError(f"{name} entry {v} is outside [-{limit}, {limit}]")


def sublemma_witness(variant: int, prime: int, s: Sequence[int], t: Sequence[int] = ()) -> SublemmaWitness:
    """
    Search for k odd (or k₁, k₂ odd) and l even making F below its bound.

    variant 1: F = k² + Σ₁³(k sᵢ − lᵢ p)², bound 2p², p ≡ 1 mod 4.
    variant 2: F = k₁² + k₂² + Σ₁⁶(k₁sᵢ + k₂tᵢ − lᵢ q)², bound 4q², q ≡ 3 mod 4.
    variant 3: as variant 2 but the sixth term is (k₂t₆ − l₆ q)².
    """
    s = [int(x) for x in s]
    t = [int(x) for x in t]
    if not isprime(prime):
        raise InvalidInputError(f"{prime} is not prime")

    if variant == 1:
        p = prime
        if p % 4 != 1:
            raise InvalidInputError(f"variant 1 needs p ≡ 1 mod 4, got {p}")
        if len(s) != 3:
            raise InvalidInputError("variant 1 takes exactly three s entries")
        _check_entries("s", s, 1, p - 2)
        bound = 2 * p * p
        for k in _odd_multipliers(p):
            picks = [_nearest_even_multiple(k * si, p) for si in s]
            value = k * k + sum(r for _, r in picks)
            if value < bound:
                return SublemmaWitness(1, (k,), tuple(l for l, _ in picks), value, bound)
        raise ConsistencyError(f"no variant-1 witness for p={p}, s={s}")

    if variant not in (2, 3):
        raise InvalidInputError(f"unknown sublemma variant {variant}")
    q = prime
    if q % 4 != 3:
        raise InvalidInputError(f"variant {variant} needs q ≡ 3 mod 4, got {q}")
    if len(t) != 6:
        raise InvalidInputError("t must have six entries")
    if variant == 2:
        if len(s) != 6:
            raise InvalidInputError("variant 2 takes six s entries")
        _check_entries("s", s, 1, q - 1)
        _check_entries("t", t, 0, q - 1)
    else:
        if len(s) == 6:
            if s[5] != 0:
                raise InvalidInputError("variant 3 requires s₆ = 0")
            s = s[:5]
        if len(s) != 5:
            raise InvalidInputError("variant 3 takes five s entries (or six with s₆ = 0)")
        _check_entries("s", s, 1, q - 1)
        _check_entries("t", t[:5], 0, q - 1)
        _check_entries("t₆", t[5:], 1, q - 1)
        s = s + [0]

    bound = 4 * q * q
    multipliers = _odd_multipliers(q)
    for k2 in multipliers:
        for k1 in multipliers:
            picks = [_nearest_even_multiple(k1 * si + k2 * ti, q) for si, ti in zip(s, t)]
            value = k1 * k1 + k2 * k2 + sum(r for _, r in picks)
            if value < bound:
                return SublemmaWitness(variant, (k1, k2), tuple(l for l, _ in picks), value, bound)
    raise ConsistencyError(f"no variant-{variant} witness for q={q}, s={s}, t={t}")


def index_p_sublattice(delta: int, p: int, s: Sequence[int], t: int) -> SymGram:
    """
    Gram of the index-p sublattice of ℤⁿ⁻¹ ⊕ ⟨δ⟩ with basis
    {pe, e_i + s_i e, f + t e}, where n = len(s) + 2.
    """
    if delta < 1:
        raise InvalidInputError("delta must be positive")
    if not isprime(p):
        raise InvalidInputError(f"{p} is not prime")
    for v in list(s) + [t]:
        if v % p == 0 or abs(v) > p - 1:
            raise InvalidInputError(f"{v} is not a nonzero residue in [1-p, p-1]")
    n = len(s) + 2
    ambient = SymGram.diagonal([1] * (n - 1) + [delta])
    basis = [[p] + [0] * (n - 1)]
    for i, si in enumerate(s):
        row = [si] + [0] * (n - 1)
        row[i + 1] = 1
        basis.append(row)
    basis.append([t] + [0] * (n - 2) + [1])
    return gram_of_basis(ambient.entries, basis)
