"""
Torsion coefficients and d-invariants of integer surgeries on L-space knots,
and the negative-definite bounding obstruction built on them.

Everything is exact: polynomials have integer coefficients, d-invariants
and thresholds are Fractions, and the closed-form torus ranges compare
a + b·√c against integers without floating point.
"""

import logging
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterable, List, Optional, Tuple

from errors import ConsistencyError, InvalidInputError
from exact_core import factorize

logger = logging.getLogger(__name__)

HYPOTHESIS = "no torsion in H_1 of the bounding four-manifold (assumed, not computed)"
OBSTRUCTED = "obstructed"
NOT_OBSTRUCTED = "not_obstructed"


@dataclass(frozen=True)
class AlexanderPoly:
    """Symmetrized Δ(T) = a₀ + Σ_{j≥1} a_j (T^j + T^{-j}), stored as (a₀, …, a_N)."""
    coeffs: Tuple[int, ...]

    def __post_init__(self):
        coeffs = tuple(int(c) for c in self.coeffs)
        if not coeffs:
            raise InvalidInputError("Alexander polynomial needs at least a_0")
        if len(coeffs) > 1 and coeffs[-1] == 0:
            raise InvalidInputError("leading coefficient a_N must be nonzero")
        if coeffs[0] + 2 * sum(coeffs[1:]) != 1:
            raise InvalidInputError(f"Δ(1) = {coeffs[0] + 2 * sum(coeffs[1:])}, expected 1")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def coeff(self, j: int) -> int:
        j = abs(j)
        return self.coeffs[j] if j < len(self.coeffs) else 0

    def __str__(self) -> str:
        parts = [str(self.coeffs[0])]
        for j, a in enumerate(self.coeffs[1:], start=1):
            if a:
                sign = "+" if a > 0 else "-"
                mag = "" if abs(a) == 1 else str(abs(a))
                parts.append(f"{sign}{mag}(T^{j}+T^-{j})")
        return "".join(parts)


@dataclass(frozen=True)
class LSpaceExponents:
    """0 < n₁ < … < n_k of Δ = (−1)^k + Σ (−1)^{k−j}(T^{n_j} + T^{−n_j})."""
    exponents: Tuple[int, ...]

    def __post_init__(self):
        exps = tuple(int(x) for x in self.exponents)
        if any(x <= 0 for x in exps):
            raise InvalidInputError(f"exponents must be positive: {exps}")
        if any(a >= b for a, b in zip(exps, exps[1:])):
            raise InvalidInputError(f"exponents must be strictly increasing: {exps}")
        object.__setattr__(self, "exponents", exps)

    @property
    def k(self) -> int:
        return len(self.exponents)

    def at(self, idx: int) -> int:
        """n_idx with n₀ = 0 and n_{−j} = −n_j."""
        if idx == 0:
            return 0
        return self.exponents[idx - 1] if idx > 0 else -self.exponents[-idx - 1]


def alexander_from_exponents(e: LSpaceExponents) -> AlexanderPoly:
    if not e.exponents:
        return AlexanderPoly((1,))
    coeffs = [0] * (e.exponents[-1] + 1)
    coeffs[0] = (-1) ** e.k
    for j, n_j in enumerate(e.exponents, start=1):
        coeffs[n_j] = (-1) ** (e.k - j)
    return AlexanderPoly(tuple(coeffs))


def lspace_exponents(poly: AlexanderPoly) -> LSpaceExponents:
    """Inverse of alexander_from_exponents; rejects polynomials of any other shape."""
    exps = tuple(j for j in range(1, poly.degree + 1) if poly.coeff(j))
    e = LSpaceExponents(exps)
    if alexander_from_exponents(e) != poly:
        raise InvalidInputError(f"{poly} is not the Alexander polynomial of an L-space knot")
    return e


def _require_torus(p: int, q: int) -> None:
    if not 2 <= p < q:
        raise InvalidInputError(f"torus parameters must satisfy 2 <= p < q, got ({p}, {q})")
    if math.gcd(p, q) != 1:
        raise InvalidInputError(f"torus parameters must be coprime, got ({p}, {q})")


def torus_alexander(p: int, q: int) -> AlexanderPoly:
    """
    Coefficients of (1 − T^{pq})(1 − T)/((1 − T^p)(1 − T^q)): below degree pq
    the coefficient of T^k is m(k) − m(k−1) with m(k) = #{ap + bq = k}.
    """
    _require_torus(p, q)
    top = (p - 1) * (q - 1)
    reps = [0] * (top + 1)
    for b in range(top // q + 1):
        for a in range((top - b * q) // p + 1):
            reps[a * p + b * q] += 1
    shifted = [reps[k] - (reps[k - 1] if k else 0) for k in range(top + 1)]
    n = top // 2
    if any(shifted[n + j] != shifted[n - j] for j in range(n + 1)):
        raise ConsistencyError(f"torus polynomial T({p},{q}) is not symmetric")
    return AlexanderPoly(tuple(shifted[n:]))


def torsion_from_poly(poly: AlexanderPoly, i: int) -> int:
    """t_i = Σ_{j>0} j·a_{|i|+j}."""
    i = abs(i)
    return sum(j * poly.coeff(i + j) for j in range(1, poly.degree - i + 1))


@lru_cache(maxsize=None)
def _torsion_profile(e: LSpaceExponents) -> Tuple[int, ...]:
    """t_0, …, t_{n_k} from the piecewise formula in the exponents."""
    if not e.exponents:
        return (0,)
    k = e.k
    profile = []
    for i in range(e.exponents[-1] + 1):
        value = None
        for j in range(k):
            top = k - 2 * j
            partial = sum((-1) ** (k - l) * e.at(l) for l in range(top, k + 1))
            if e.at(top - 1) <= i <= e.at(top):
                value = partial - i
                break
            if e.at(top - 2) <= i <= e.at(top - 1):
                value = partial - e.at(top - 1)
                break
        if value is None:
            raise ConsistencyError(f"index {i} falls outside every interval")
        profile.append(value)
    if any(a < b for a, b in zip(profile, profile[1:])):
        raise ConsistencyError(f"torsion profile {profile} is not nonincreasing")
    return tuple(profile)


def torsion_from_exponents(e: LSpaceExponents, i: int) -> int:
    profile = _torsion_profile(e)
    i = abs(i)
    return profile[i] if i < len(profile) else 0


def torus_torsion_count(p: int, q: int, i: int) -> int:
    """#{(a, b) ≥ 0 : ap + bq < N − |i|}."""
    _require_torus(p, q)
    limit = (p - 1) * (q - 1) // 2 - abs(i)
    if limit <= 0:
        return 0
    return sum((limit - 1 - b * q) // p + 1 for b in range((limit - 1) // q + 1))


def torus_g(p: int, q: int, x) -> Fraction:
    """Piecewise linear minorant of the torsion: Σ_b max(0, (x − bq)/p)."""
    x = Fraction(x)
    total = Fraction(0)
    b = 0
    while x - b * q > 0:
        total += (x - b * q) / p
        b += 1
    return total


@dataclass(frozen=True)
class LSpaceKnot:
    """Trusted L-space knot, given by its exponents (torus knots by (p, q))."""
    name: str
    exponents: LSpaceExponents
    torus: Optional[Tuple[int, int]] = None

    @classmethod
    def unknot(cls) -> "LSpaceKnot":
        return cls(name="unknot", exponents=LSpaceExponents(()))

    @classmethod
    def torus_knot(cls, p: int, q: int) -> "LSpaceKnot":
        return cls(name=f"torus:{p},{q}", exponents=lspace_exponents(torus_alexander(p, q)), torus=(p, q))

    @classmethod
    def from_exponents(cls, exponents: Iterable[int]) -> "LSpaceKnot":
        e = LSpaceExponents(tuple(exponents))
        if not e.exponents:
            return cls.unknot()
        return cls(name="exponents:" + ",".join(map(str, e.exponents)), exponents=e)

    @classmethod
    def parse(cls, text: str) -> "LSpaceKnot":
        """Accepts 'unknot', 'torus:p,q' or 'exponents:n1,n2,...'."""
        raw = text.strip().lower()
        if raw == "unknot":
            return cls.unknot()
        match = re.fullmatch(r"(torus|exponents):\s*([-\d,\s]*)", raw)
        if not match:
            raise InvalidInputError(f"unrecognized knot descriptor {text!r}")
        kind, body = match.groups()
        try:
            values = [int(x) for x in body.split(",") if x.strip()]
        except ValueError:
            raise InvalidInputError(f"knot parameters must be integers: {text!r}")
        if kind == "torus":
            if len(values) != 2:
                raise InvalidInputError(f"torus knots need exactly two parameters: {text!r}")
            return cls.torus_knot(*values)
        return cls.from_exponents(values)

    @cached_property
    def alexander(self) -> AlexanderPoly:
        return alexander_from_exponents(self.exponents)

    @property
    def genus(self) -> int:
        return self.alexander.degree

    def torsion(self, i: int) -> int:
        return torsion_from_exponents(self.exponents, i)


def d_lens(n: int, i: int) -> Fraction:
    """d(U_n, i) = (n − 2|i|)²/(4n) − 1/4 for the n-surgery on the unknot."""
    if n <= 0:
        raise InvalidInputError(f"lens space parameter must be positive, got {n}")
    if abs(i) >= n:
        raise InvalidInputError(f"index {i} out of range for n={n}")
    return Fraction((n - 2 * abs(i)) ** 2, 4 * n) - Fraction(1, 4)


def d_surgery(knot: LSpaceKnot, coeff: int, i: int) -> Fraction:
    """d(K_n, i) = d(U_n, i) − 2t_i and d(K_{−n}, i) = −d(U_n, i)."""
    if coeff == 0:
        raise InvalidInputError("surgery coefficient must be nonzero")
    n = abs(coeff)
    if 2 * abs(i) > n:
        raise InvalidInputError(f"index {i} out of range for coefficient {coeff}")
    base = d_lens(n, i)
    return base - 2 * knot.torsion(i) if coeff > 0 else -base


def square_free_part(n: int) -> int:
    return math.prod(p for p, e in factorize(n).items() if e % 2)


def max4d_bound(delta: int) -> Fraction:
    """Lower bound for max 4d of a boundary of a negative-definite filling."""
    return Fraction(1) if delta % 2 == 0 else 1 - Fraction(1, delta)


def surgery_threshold(n: int, i: int) -> Fraction:
    if n % 2:
        return Fraction((n - 2 * i) ** 2 + 1, 8 * n) - Fraction(1, 4)
    return Fraction((n - 2 * i) ** 2, 8 * n) - Fraction(1, 4)


@dataclass(frozen=True)
class DRow:
    i: int
    t: int
    d: Fraction
    four_d: Fraction
    threshold: Fraction


@dataclass(frozen=True)
class ObstructionReport:
    knot: str
    n: int
    delta: int
    route: str
    rows: Tuple[DRow, ...]
    bound: Fraction
    max4d: Fraction
    verdict: str
    witness: int
    failing: Tuple[int, ...]
    implied_range: Optional[Tuple[int, int]]
    hypothesis: str = HYPOTHESIS
    notes: Tuple[str, ...] = ()

    @property
    def obstructed(self) -> bool:
        return self.verdict == OBSTRUCTED


def _d_rows(knot: LSpaceKnot, n: int) -> Tuple[DRow, ...]:
    rows = []
    for i in range(n // 2 + 1):
        d = d_surgery(knot, n, i)
        rows.append(DRow(i=i, t=knot.torsion(i), d=d, four_d=4 * d, threshold=surgery_threshold(n, i)))
    return tuple(rows)


def _report(knot: LSpaceKnot, n: int, route: str, bound: Fraction, failing: Tuple[int, ...], rows) -> ObstructionReport:
    max4d = max(row.four_d for row in rows)
    witness = next(row.i for row in rows if row.four_d == max4d)
    obstructed = max4d < bound
    notes = []
    if max4d == bound and n % 2 == 0:
        notes.append("max 4d equals the bound with even determinant: a filling would need the spin structure to attain it (not computed)")
    return ObstructionReport(
        knot=knot.name,
        n=n,
        delta=n,
        route=route,
        rows=rows,
        bound=bound,
        max4d=max4d,
        verdict=OBSTRUCTED if obstructed else NOT_OBSTRUCTED,
        witness=witness,
        failing=failing,
        implied_range=(1, n) if obstructed else None,
        notes=tuple(notes),
    )


def obstruct_integer_surgery(knot: LSpaceKnot, n: int) -> ObstructionReport:
    """
    +n surgery is obstructed iff t_i exceeds the threshold for every
    0 ≤ i ≤ n/2, equivalently iff max 4d < 1 − 1/n (n odd) or 1 (n even).
    """
    if n < 1:
        raise InvalidInputError(f"surgery coefficient must be positive, got {n}")
    rows = _d_rows(knot, n)
    failing = tuple(row.i for row in rows if row.t <= row.threshold)
    report = _report(knot, n, "integer", max4d_bound(n), failing, rows)
    if report.obstructed != (not failing):
        raise ConsistencyError(f"verdict routes disagree for {knot.name} at n={n}")
    logger.debug("[SURGERY] %s n=%d: %s (max 4d %s, bound %s)", knot.name, n, report.verdict, report.max4d, report.bound)
    return report


def obstruct_squarefree(knot: LSpaceKnot, n: int) -> ObstructionReport:
    """Same max-4d test against the weaker bound for |H_1| = r·s², r square-free."""
    if n < 1:
        raise InvalidInputError(f"surgery coefficient must be positive, got {n}")
    rows = _d_rows(knot, n)
    r = square_free_part(n)
    bound = max4d_bound(r)
    failing = tuple(row.i for row in rows if row.four_d >= bound)
    return _report(knot, n, "squarefree", bound, failing, rows)


def scan_obstructions(knot: LSpaceKnot, n_values: Iterable[int], route: str = "integer") -> List[ObstructionReport]:
    check = {"integer": obstruct_integer_surgery, "squarefree": obstruct_squarefree}.get(route)
    if check is None:
        raise InvalidInputError(f"unknown route {route!r}")
    return [check(knot, n) for n in n_values]


@dataclass(frozen=True)
class TorusRange:
    p: int
    q: int
    exact: int
    closed_form: int
    headline: int


def _largest_integer_below(a: Fraction, b: Fraction, c: Fraction) -> int:
    """Largest integer m with m < a + b·√c, for b ≥ 0 and c ≥ 0."""
    if b < 0 or c < 0:
        raise ConsistencyError(f"cannot bracket {a} + {b}·√{c}")

    def below(m: int) -> bool:
        gap = m - a
        return gap < 0 or gap * gap < b * b * c

    guess = math.floor(a) + math.isqrt(math.floor(b * b * c))
    while not below(guess):
        guess -= 1
    while below(guess + 1):
        guess += 1
    return guess


def _closed_form_m(p: int, q: int) -> int:
    n_deg = (p - 1) * (q - 1) // 2
    half = Fraction(1, 2)
    if p % 2 == 0:
        alpha = Fraction(q * (p - 2) + 2)
        beta = Fraction(q - p + 1)
        second = (2 - half * alpha, half, alpha * (alpha + 4 * beta) - 4)
        third = Fraction(q - p + 3)
    else:
        alpha = Fraction(q * (p - 4) + 2) + Fraction(3 * q, p)
        beta = Fraction(2 * q - p + 1)
        second = (2 - half * alpha - Fraction(q * (p - 3), p), half, alpha * (alpha + 4 * beta) - 4)
        third = q - p + 5 - Fraction(q + 2, p)
    candidates = [
        _largest_integer_below(Fraction(1), Fraction(1), Fraction(4 * n_deg)),
        _largest_integer_below(*second),
        _largest_integer_below(third, Fraction(0), Fraction(0)),
    ]
    return min(candidates)


def torus_obstruction_range(p: int, q: int) -> TorusRange:
    """
    Obstructed ranges for +n surgery on T(p, q): the exact scan (stopping at
    the first unobstructed n, capped below pq since (pq − 1)-surgery is a lens
    space), the closed form 2N + m, and the headline (p − 1)(q − 1) + 2.
    """
    _require_torus(p, q)
    knot = LSpaceKnot.torus_knot(p, q)
    exact = 0
    for n in range(1, p * q):
        if not obstruct_integer_surgery(knot, n).obstructed:
            break
        exact = n
    n_deg = (p - 1) * (q - 1) // 2
    result = TorusRange(
        p=p,
        q=q,
        exact=exact,
        closed_form=2 * n_deg + _closed_form_m(p, q),
        headline=(p - 1) * (q - 1) + 2,
    )
    if not result.headline <= result.closed_form <= result.exact:
        raise ConsistencyError(f"range bounds out of order for T({p},{q}): {result}")
    logger.info("[SURGERY] T(%d,%d): exact %d, closed form %d, headline %d", p, q, exact, result.closed_form, result.headline)
    return result
