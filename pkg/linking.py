"""
Discriminant groups, linking pairings and Gauss sums.

Group elements are integer vectors in dual-basis coordinates, so x ∈ L′
and x ≡ y in L′/L iff x − y ∈ Q·ℤⁿ. The pairing is λ(x, y) = xᵀQ⁻¹y mod 1.
"""

import cmath
import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from sympy import isprime, legendre_symbol, multiplicity, sqrt_mod

from config import get_settings
from errors import CapExceededError, ConsistencyError, InvalidInputError
from exact_core import SymGram, bilinear, factorize, inverse_unimodular, smith_normal_form

logger = logging.getLogger(__name__)

Vector = Tuple[int, ...]


class BlockKind(Enum):
    A = "A"
    B = "B"
    CYC2 = "Cyc2"
    E = "E"
    F = "F"
    CYC2_PAIR = "Cyc2-pair"


_KIND_ORDER = {kind: i for i, kind in enumerate(BlockKind)}


@dataclass(frozen=True)
class DiscriminantGroup:
    """L′/L as ⊕ ℤ/dᵢ with one generator per cyclic factor."""
    orders: Tuple[int, ...]
    generators: Tuple[Vector, ...]

    @property
    def size(self) -> int:
        return math.prod(self.orders)


@dataclass(frozen=True)
class PairingBlock:
    """One orthogonal summand of the linking pairing."""
    kind: BlockKind
    prime: int
    exponent: int
    generator_squares: Tuple[Fraction, ...]
    generators: Tuple[Vector, ...]

    @property
    def order(self) -> int:
        return self.prime ** (self.exponent * len(self.generators))

    @property
    def sort_key(self) -> Tuple[int, int, int]:
        return self.prime, self.exponent, _KIND_ORDER[self.kind]

    @property
    def label(self) -> str:
        return f"{self.kind.value}_{self.prime}^{self.exponent}"


@dataclass(frozen=True)
class GaussSum:
    value: complex
    expected: complex
    milgram_ok: bool
    group_size: int


def discriminant_group(g: SymGram) -> DiscriminantGroup:
    """
    From U·Q·V = D the map y ↦ U·y identifies ℤⁿ/Qℤⁿ with ⊕ ℤ/dᵢ, so the
    columns of U⁻¹ generate the cyclic factors.
    """
    g.require_nondegenerate()
    snf = smith_normal_form(g)
    u_inv = inverse_unimodular(snf.U)
    orders = []
    generators = []
    for i, d in enumerate(snf.diagonal):
        d = abs(d)
        if d > 1:
            orders.append(d)
            generators.append(reduce_element(g, tuple(row[i] for row in u_inv.rows)))
    return DiscriminantGroup(orders=tuple(orders), generators=tuple(generators))


def reduce_element(g: SymGram, x: Sequence[int]) -> Vector:
    """Small representative of x modulo Q·ℤⁿ."""
    lattice_coords = [sum(g.inverse[i][j] * x[j] for j in range(g.n)) for i in range(g.n)]
    shift = [math.floor(c) for c in lattice_coords]
    return tuple(
        x[i] - sum(g.entries[i][j] * shift[j] for j in range(g.n)) for i in range(g.n)
    )


def element_order(g: SymGram, x: Sequence[int]) -> int:
    lattice_coords = [sum(g.inverse[i][j] * x[j] for j in range(g.n)) for i in range(g.n)]
    return math.lcm(*(Fraction(c).denominator for c in lattice_coords))


def linking_value(g: SymGram, x: Sequence[int], y: Sequence[int]) -> Fraction:
    g.require_nondegenerate()
    return bilinear(g.inverse, x, y) % 1


def quadratic_value_even(g: SymGram, x: Sequence[int]) -> Fraction:
    if not g.is_even:
        raise InvalidInputError("quadratic values mod 2 need an even lattice")
    g.require_nondegenerate()
    return bilinear(g.inverse, x, x) % 2


def _square_label(g: SymGram, x: Sequence[int]) -> Fraction:
    value = bilinear(g.inverse, x, x)
    return value % 2 if g.is_even else value % 1


def classify_odd_cyclic(p: int, k: int, gsq: Fraction) -> BlockKind:
    """A if p^k·gsq is a quadratic residue mod p, B if a nonresidue."""
    if p == 2 or not isprime(p):
        raise InvalidInputError(f"{p} is not an odd prime")
    gsq = Fraction(gsq) % 1
    if gsq.denominator != p**k:
        raise InvalidInputError(f"square {gsq} does not have denominator {p}^{k}")
    unit = gsq.numerator % p
    return BlockKind.A if legendre_symbol(unit, p) == 1 else BlockKind.B


def _scaled(g: SymGram, x: Sequence[int], y: Sequence[int], modulus: int) -> int:
    """modulus·λ(x, y) as an integer mod modulus."""
    value = bilinear(g.inverse, x, y) * modulus
    if value.denominator != 1:
        raise ConsistencyError(f"pairing {value / modulus} does not have denominator dividing {modulus}")
    return value.numerator % modulus


def _combine(g: SymGram, *terms: Tuple[int, Sequence[int]]) -> Vector:
    n = g.n
    out = [0] * n
    for coeff, vec in terms:
        for i in range(n):
            out[i] += coeff * vec[i]
    return reduce_element(g, out)


def _primary_generators(g: SymGram, group: DiscriminantGroup, p: int) -> List[Tuple[Vector, int]]:
    gens = []
    for d, h in zip(group.orders, group.generators):
        a = multiplicity(p, d)
        if a:
            gens.append((_combine(g, (d // p**a, h)), a))
    return gens


def _split_odd(g: SymGram, p: int, gens: List[Tuple[Vector, int]]) -> List[PairingBlock]:
    blocks = []
    while gens:
        k = max(a for _, a in gens)
        pk = p**k
        top = [i for i, (_, a) in enumerate(gens) if a == k]
        pick = next((i for i in top if _scaled(g, gens[i][0], gens[i][0], pk) % p), None)
        if pick is None:
            pair = next(
                ((i, j) for i in top for j in top if i < j and _scaled(g, gens[i][0], gens[j][0], pk) % p),
                None,
            )
            if pair is None:
                raise ConsistencyError(f"no unit pairing among order-{pk} generators")
            i, j = pair
            gens[i] = (_combine(g, (1, gens[i][0]), (1, gens[j][0])), k)
            pick = i
        x = gens.pop(pick)[0]
        u_inv = pow(_scaled(g, x, x, pk), -1, pk)
        gens = [
            (_combine(g, (1, h), (-(_scaled(g, h, x, pk) * u_inv % pk), x)), a)
            for h, a in gens
        ]
        gsq = linking_value(g, x, x)
        kind = classify_odd_cyclic(p, k, gsq)
        logger.debug("[LINK] split %s_%d^%d", kind.value, p, k)
        blocks.append(PairingBlock(kind, p, k, (_square_label(g, x),), (x,)))
    return _fold_nonresidue_pairs(g, p, blocks)


def _fold_nonresidue_pairs(g: SymGram, p: int, blocks: List[PairingBlock]) -> List[PairingBlock]:
    """Rewrite B ⊕ B as A ⊕ A so at most one B remains per exponent."""
    alpha, beta = next(
        (a, b) for a in range(1, p) for b in range(1, p) if legendre_symbol((a * a + b * b) % p, p) == -1
    )
    out = [blk for blk in blocks if blk.kind != BlockKind.B]
    by_exponent: Dict[int, List[PairingBlock]] = {}
    for blk in blocks:
        if blk.kind == BlockKind.B:
            by_exponent.setdefault(blk.exponent, []).append(blk)
    for k, bs in by_exponent.items():
        pk = p**k
        while len(bs) >= 2:
            x = bs.pop().generators[0]
            y = bs.pop().generators[0]
            u = _scaled(g, x, x, pk)
            w = _scaled(g, y, y, pk)
            r = sqrt_mod(u * pow(w, -1, pk) % pk, pk)
            if r is None:
                raise ConsistencyError("nonresidue ratio has no square root")
            y = _combine(g, (r, y))
            x2 = _combine(g, (alpha, x), (beta, y))
            y2 = _combine(g, (-beta, x), (alpha, y))
            for z in (x2, y2):
                kind = classify_odd_cyclic(p, k, linking_value(g, z, z))
                out.append(PairingBlock(kind, p, k, (_square_label(g, z),), (z,)))
        out.extend(bs)
    return out


def _solve_mod(predicate, modulus: int) -> int:
    for t in range(modulus):
        if predicate(t):
            return t
    raise ConsistencyError(f"no solution modulo {modulus}")


def _normalize_plane(g: SymGram, x: Vector, y: Vector, k: int) -> Tuple[BlockKind, Vector, Vector]:
    """
    Bring a rank-2 block (odd off-diagonal, even diagonal numerators at
    level 2^k) to E generators (squares 0) or F generators (squares 2^{1-k}).
    """
    pk = 2**k
    if k == 1:
        if not g.is_even:
            return BlockKind.E, x, y
        xy = _combine(g, (1, x), (1, y))
        values = {v: bilinear(g.inverse, v, v) % 2 for v in (x, y, xy)}
        zeros = [v for v in (x, y, xy) if values[v] == 0]
        if not zeros:
            return BlockKind.F, x, y
        return BlockKind.E, zeros[0], zeros[1]

    half = pk // 2
    a = _scaled(g, x, x, pk) // 2
    b = _scaled(g, x, y, pk)
    c = _scaled(g, y, y, pk) // 2
    if (a * c) % 2 == 0:
        t = _solve_mod(lambda t: (a + t * b + t * t * c) % half == 0, half)
        x1 = _combine(g, (1, x), (t, y))
        b1 = _scaled(g, x1, y, pk)
        s = (-c * pow(b1, -1, half)) % half
        y1 = _combine(g, (1, y), (s, x1))
        return BlockKind.E, x1, y1

    t = _solve_mod(lambda t: (a + t * b + t * t * c) % half == 1, half)
    x1 = _combine(g, (1, x), (t, y))
    b1 = _scaled(g, x1, y, pk)
    y1 = _combine(g, (pow(b1, -1, pk), y))
    c1 = _scaled(g, y1, y1, pk) // 2
    s = _solve_mod(lambda s: (3 * s * s + 3 * s + 1 - c1) % half == 0, half)
    y2 = _combine(g, (pow(1 + 2 * s, -1, pk), _combine(g, (1, y1), (s, x1))))
    return BlockKind.F, x1, y2


def _split_two(g: SymGram, gens: List[Tuple[Vector, int]]) -> List[PairingBlock]:
    blocks = []
    while gens:
        k = max(a for _, a in gens)
        pk = 2**k
        top = [i for i, (_, a) in enumerate(gens) if a == k]
        pick = next((i for i in top if _scaled(g, gens[i][0], gens[i][0], pk) % 2), None)
        if pick is not None:
            x = gens.pop(pick)[0]
            u_inv = pow(_scaled(g, x, x, pk), -1, pk)
            gens = [
                (_combine(g, (1, h), (-(_scaled(g, h, x, pk) * u_inv % pk), x)), a)
                for h, a in gens
            ]
            logger.debug("[LINK] split Cyc2_2^%d", k)
            blocks.append(PairingBlock(BlockKind.CYC2, 2, k, (_square_label(g, x),), (x,)))
            continue

        pair = next(
            ((i, j) for i in top for j in top if i < j and _scaled(g, gens[i][0], gens[j][0], pk) % 2),
            None,
        )
        if pair is None:
            raise ConsistencyError(f"no odd pairing among order-{pk} generators")
        i, j = pair
        x, y = gens[i][0], gens[j][0]
        gens = [gen for idx, gen in enumerate(gens) if idx not in pair]
        kind, x, y = _normalize_plane(g, x, y, k)
        nxx, nxy, nyy = _scaled(g, x, x, pk), _scaled(g, x, y, pk), _scaled(g, y, y, pk)
        inv_det = pow((nxx * nyy - nxy * nxy) % pk, -1, pk)
        projected = []
        for h, a in gens:
            hx, hy = _scaled(g, h, x, pk), _scaled(g, h, y, pk)
            alpha = (nyy * hx - nxy * hy) * inv_det % pk
            beta = (nxx * hy - nxy * hx) * inv_det % pk
            projected.append((_combine(g, (1, h), (-alpha, x), (-beta, y)), a))
        gens = projected
        logger.debug("[LINK] split %s_2^%d", kind.value, k)
        blocks.append(
            PairingBlock(kind, 2, k, (_square_label(g, x), _square_label(g, y)), (x, y))
        )
    return blocks


def _verify_blocks(g: SymGram, blocks: List[PairingBlock]) -> None:
    total = math.prod(blk.order for blk in blocks)
    if total != g.delta:
        raise ConsistencyError(f"blocks have total order {total}, expected {g.delta}")
    for blk in blocks:
        for x in blk.generators:
            if element_order(g, x) != blk.prime**blk.exponent:
                raise ConsistencyError(f"generator of {blk.label} has the wrong order")
        squares = [linking_value(g, x, x) for x in blk.generators]
        if blk.kind == BlockKind.E and any(sq != 0 for sq in squares):
            raise ConsistencyError(f"E block with nonzero squares {squares}")
        if blk.kind == BlockKind.F and any(sq != Fraction(2, 2**blk.exponent) % 1 for sq in squares):
            raise ConsistencyError(f"F block with squares {squares}")
    gens = [(idx, x) for idx, blk in enumerate(blocks) for x in blk.generators]
    for a in range(len(gens)):
        for b in range(a + 1, len(gens)):
            if gens[a][0] != gens[b][0] and linking_value(g, gens[a][1], gens[b][1]) != 0:
                raise ConsistencyError("pairing blocks are not orthogonal")


def decompose(g: SymGram, primes: Optional[Sequence[int]] = None) -> List[PairingBlock]:
    """
    Orthogonal block decomposition of the linking pairing, in canonical
    order (prime, exponent, kind). Odd primes carry at most one B block per
    exponent. With `primes`, only those primary parts are decomposed.
    """
    g.require_nondegenerate()
    group = discriminant_group(g)
    if not group.orders:
        return []
    wanted = sorted(factorize(g.delta))
    if primes is not None:
        wanted = [p for p in wanted if p in set(primes)]
    blocks: List[PairingBlock] = []
    for p in wanted:
        gens = _primary_generators(g, group, p)
        blocks.extend(_split_two(g, gens) if p == 2 else _split_odd(g, p, gens))
    if primes is None:
        _verify_blocks(g, blocks)
    return sorted(blocks, key=lambda blk: blk.sort_key)


def canonical_block_signature(blocks: Sequence[PairingBlock]) -> List[Tuple[int, int, str]]:
    """
    Multiset key (prime, exponent, kind) with B ⊕ B folded into A ⊕ A at odd
    primes.
    """
    counts: Dict[Tuple[int, int], List[int]] = {}
    rest = []
    for blk in blocks:
        if blk.prime == 2:
            rest.append((blk.prime, blk.exponent, blk.kind.value))
            continue
        slot = counts.setdefault((blk.prime, blk.exponent), [0, 0])
        slot[0 if blk.kind == BlockKind.A else 1] += 1
    for (p, k), (n_a, n_b) in counts.items():
        extra = n_b - n_b % 2
        rest.extend([(p, k, "A")] * (n_a + extra))
        rest.extend([(p, k, "B")] * (n_b % 2))
    return sorted(rest, key=lambda key: (key[0], key[1], _KIND_ORDER[BlockKind(key[2])]))


def gauss_sum_milgram(g: SymGram, cap: Optional[int] = None, tol: Optional[float] = None) -> GaussSum:
    """(1/√δ)·Σ_{u ∈ L′/L} e^{iπu²}, compared against e^{2πiσ/8}."""
    if not g.is_even:
        raise InvalidInputError("Gauss sums need an even lattice")
    g.require_nondegenerate()
    settings = get_settings()
    cap = settings.gauss_cap if cap is None else cap
    tol = settings.milgram_tol if tol is None else tol
    if g.delta > cap:
        raise CapExceededError(f"discriminant group has {g.delta} elements, cap is {cap}")

    group = discriminant_group(g)
    expected = cmath.exp(2j * math.pi * g.sigma / 8)
    if not group.orders:
        value = complex(1.0)
        return GaussSum(value, expected, abs(value - expected) < tol, 1)

    gens = group.generators
    pairing = [[bilinear(g.inverse, x, y) for y in gens] for x in gens]
    denom = math.lcm(*(entry.denominator for row in pairing for entry in row))
    modulus = 2 * denom
    # partial sums stay below rank·modulus·max(order) after each reduction
    if len(gens) * modulus * max(group.orders) >= 2**62:
        raise CapExceededError(f"discriminant group of exponent {max(group.orders)} overflows int64 Gauss sums")
    scaled = np.array([[int(entry * denom) % modulus for entry in row] for row in pairing], dtype=np.int64)
    coeffs = np.indices(group.orders, dtype=np.int64).reshape(len(group.orders), -1)
    half = (scaled @ coeffs) % modulus
    values = (coeffs * half).sum(axis=0) % modulus
    total = np.exp(1j * np.pi * values / denom).sum() / math.sqrt(g.delta)
    value = complex(total)
    logger.debug("[LINK] Gauss sum over %d elements: %s", group.size, value)
    return GaussSum(value, expected, abs(value - expected) < tol, group.size)
