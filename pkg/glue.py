"""
Overlattice gluing: the three-stage chain that embeds L⁴ in a unimodular
quaternionic lattice, and the two-copy variant for L².

Lattices along a chain are kept as rational basis rows in the coordinates
of a fixed ambient lattice (L, L ⊕ L or L⁴), re-normalized with a Hermite
basis after every adjoin so indices stay exact.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import List, Optional, Sequence, Tuple, Union

from sympy import isprime, legendre_symbol, sqrt_mod
from sympy.polys.domains import GF
from sympy.polys.matrices import DomainMatrix

import linking
from errors import ConsistencyError, InvalidInputError
from exact_core import (
    RatRows,
    SymGram,
    bilinear,
    direct_sum,
    factorize,
    gram_of_basis,
    hermite_row_lattice,
    is_integral_vector,
    mat_mul,
    rational_inverse,
    vec_mat,
)
from linking import BlockKind

logger = logging.getLogger(__name__)


def _frac_rows(rows: Sequence[Sequence]) -> RatRows:
    return tuple(tuple(Fraction(x) for x in row) for row in rows)


@dataclass(frozen=True)
class Overlattice:
    """
    An integral lattice containing the ambient one with finite index.

    `basis` rows are rational coordinates in the ambient basis, `index` is
    [self : ambient] and |det ambient| = |det gram| · index².
    """
    gram: SymGram
    basis: RatRows
    index: int
    ambient: SymGram

    @classmethod
    def trivial(cls, g: SymGram) -> "Overlattice":
        g.require_nondegenerate()
        identity = tuple(tuple(Fraction(int(i == j)) for j in range(g.n)) for i in range(g.n))
        return cls(gram=g, basis=identity, index=1, ambient=g)

    @cached_property
    def basis_inverse(self) -> RatRows:
        return rational_inverse(self.basis)

    def coordinates(self, row: Sequence) -> Tuple[Fraction, ...]:
        """Coordinates of an ambient-coordinate vector in this basis."""
        return vec_mat(tuple(Fraction(x) for x in row), self.basis_inverse)

    def contains(self, row: Sequence) -> bool:
        return is_integral_vector(self.coordinates(row))

    def dual_to_ambient(self, y: Sequence[int]) -> Tuple[Fraction, ...]:
        """Ambient coordinates of the dual-basis element y of this lattice."""
        return vec_mat(vec_mat(y, self.gram.inverse), self.basis)


@dataclass(frozen=True)
class GlueStep:
    vectors: Tuple[Tuple[Fraction, ...], ...]
    prime: int
    index: int
    rule: str
    gram: SymGram


@dataclass
class GlueChain:
    stage: int
    start: SymGram
    steps: List[GlueStep] = field(default_factory=list)

    @property
    def index(self) -> int:
        return math.prod(step.index for step in self.steps)

    def grams(self) -> List[SymGram]:
        return [self.start] + [step.gram for step in self.steps]


@dataclass(frozen=True)
class QuaternionAction:
    """𝐢 and 𝐣 as matrices acting on row vectors, v ↦ v·M."""
    i: RatRows
    j: RatRows


@dataclass(frozen=True)
class FourCopyEmbedding:
    lattice: Overlattice
    embedding: Tuple[Tuple[int, ...], ...]
    action: QuaternionAction
    chains: Tuple[GlueChain, ...]
    delta: int

    @property
    def gram(self) -> SymGram:
        return self.lattice.gram

    @property
    def index(self) -> int:
        return self.lattice.index


@dataclass(frozen=True)
class TwoCopyResult:
    lattice: Optional[Overlattice]
    certificate: Optional[int]
    chains: Tuple[GlueChain, ...] = ()

    @property
    def ok(self) -> bool:
        return self.lattice is not None


def _extend(ov: Overlattice, rows: Sequence[Sequence], factor: int) -> Overlattice:
    stacked = list(ov.basis) + [tuple(Fraction(x) for x in row) for row in rows]
    denom = math.lcm(*(x.denominator for row in stacked for x in row))
    hnf = hermite_row_lattice([[int(x * denom) for x in row] for row in stacked])
    basis = tuple(tuple(Fraction(x, denom) for x in row) for row in hnf.rows)
    gram = gram_of_basis(ov.ambient.entries, basis)
    index = ov.index * factor
    if ov.ambient.delta != gram.delta * index * index:
        raise ConsistencyError(
            f"index {index} does not match determinants {ov.ambient.delta} and {gram.delta}"
        )
    return Overlattice(gram=gram, basis=basis, index=index, ambient=ov.ambient)


def _glue(chain: GlueChain, ov: Overlattice, rows: Sequence[Sequence], prime: int, factor: int, rule: str) -> Overlattice:
    out = _extend(ov, rows, factor)
    chain.steps.append(
        GlueStep(
            vectors=tuple(tuple(Fraction(x) for x in row) for row in rows),
            prime=prime,
            index=factor,
            rule=rule,
            gram=out.gram,
        )
    )
    logger.debug("[GLUE] stage %d %s at p=%d: |det| %d -> %d", chain.stage, rule, prime, ov.gram.delta, out.gram.delta)
    return out


def adjoin(lattice: Union[SymGram, Overlattice], v: Sequence[int], p: int) -> Overlattice:
    """
    Adjoin the dual element v (dual-basis coordinates of the current Gram)
    with p·v in the lattice; the result has index p and |det| divided by p².
    """
    ov = lattice if isinstance(lattice, Overlattice) else Overlattice.trivial(lattice)
    g = ov.gram
    if not isprime(p):
        raise InvalidInputError(f"{p} is not prime")
    if len(v) != g.n:
        raise InvalidInputError(f"glue vector has {len(v)} coordinates, expected {g.n}")
    square = bilinear(g.inverse, v, v)
    if square.denominator != 1:
        raise InvalidInputError(f"glue vector square {square} is not an integer")
    w = vec_mat(v, g.inverse)
    if not is_integral_vector([p * x for x in w]):
        raise InvalidInputError(f"{p}·v is not in the lattice")
    if is_integral_vector(w):
        raise InvalidInputError("glue vector already lies in the lattice")
    return _extend(ov, [vec_mat(w, ov.basis)], p)


def sqrt_minus_one(p: int) -> int:
    if p == 2:
        return 1
    if not isprime(p) or p % 4 != 1:
        raise InvalidInputError(f"-1 is not a square modulo {p}")
    return min(sqrt_mod(-1 % p, p, all_roots=True))


def sum_two_squares_neg_one(q: int) -> Tuple[int, int]:
    """
    (a, b) with a² + b² ≡ −1 mod q: for the smallest nonresidue m take
    a² ≡ m − 1 and b² ≡ −m, choosing the smallest roots.
    """
    if not isprime(q) or q % 4 != 3:
        raise InvalidInputError(f"{q} is not a prime congruent to 3 mod 4")
    m = next(m for m in range(2, q) if legendre_symbol(m, q) == -1)
    a = min(sqrt_mod((m - 1) % q, q, all_roots=True))
    b = min(sqrt_mod(-m % q, q, all_roots=True))
    return a, b


def _stage_one_candidate(g: SymGram) -> Optional[Tuple[Tuple[int, ...], int, str]]:
    blocks = linking.decompose(g)
    for blk in blocks:
        if blk.exponent <= 1:
            continue
        x = blk.generators[0]
        scale = blk.prime ** (blk.exponent - 1)
        rule = "half-order" if blk.kind in (BlockKind.E, BlockKind.F) else "prime-power"
        return tuple(scale * c for c in x), blk.prime, rule
    for blk in blocks:
        if blk.kind in (BlockKind.E, BlockKind.F):
            return blk.generators[0], 2, "half-order"
    halves = [blk for blk in blocks if blk.kind == BlockKind.CYC2]
    if len(halves) >= 2:
        x1, x2 = halves[0].generators[0], halves[1].generators[0]
        return tuple(a + b for a, b in zip(x1, x2)), 2, "pair-sum"
    return None


def chain_prime_linking(g: SymGram) -> Tuple[Overlattice, GlueChain]:
    """
    Glue until every linking block is cyclic of prime order, leaving |det|
    odd or twice odd.
    """
    ov = Overlattice.trivial(g)
    chain = GlueChain(stage=1, start=g)
    while True:
        candidate = _stage_one_candidate(ov.gram)
        if candidate is None:
            break
        y, p, rule = candidate
        ov = _glue(chain, ov, [ov.dual_to_ambient(y)], p, p, rule)
    logger.info("[GLUE] stage 1: |det| %d -> %d in %d steps", g.delta, ov.gram.delta, len(chain.steps))
    return ov, chain


def _complex_i(n: int) -> RatRows:
    """(z, w) ↦ (−w, z) on ℚⁿ ⊕ ℚⁿ."""
    m = [[Fraction(0)] * (2 * n) for _ in range(2 * n)]
    for t in range(n):
        m[t][n + t] = Fraction(1)
        m[n + t][t] = Fraction(-1)
    return _frac_rows(m)


def complex_glue(g1: SymGram) -> Tuple[Overlattice, GlueChain]:
    """
    Glue g1 ⊕ g1 along (x, a·x), a² ≡ −1 mod p, for every prime-order block
    at p = 2 or p ≡ 1 mod 4; the result is stable under (z, w) ↦ (−w, z).
    """
    n = g1.n
    ov = Overlattice.trivial(direct_sum(g1, g1))
    chain = GlueChain(stage=2, start=ov.gram)
    for blk in linking.decompose(g1):
        if blk.exponent != 1 or blk.kind in (BlockKind.E, BlockKind.F):
            raise InvalidInputError(f"block {blk.label} is not cyclic of prime order")
        p = blk.prime
        if p % 4 == 3:
            continue
        a = sqrt_minus_one(p)
        w = vec_mat(blk.generators[0], g1.inverse)
        v = tuple(w) + tuple(a * x for x in w)
        rotated = tuple(-a * x for x in w) + tuple(w)
        if not ov.contains([r + a * x for r, x in zip(rotated, v)]):
            raise ConsistencyError(f"i·v + {a}·v is not in the lattice at p={p}")
        ov = _glue(chain, ov, [v], p, p, "complex")

    action = transport_matrix(ov.basis, _complex_i(n))
    if not is_integral_vector([x for row in action for x in row]):
        raise ConsistencyError("complex structure does not preserve the glued lattice")
    logger.info("[GLUE] stage 2: |det| %d -> %d", chain.start.delta, ov.gram.delta)
    return ov, chain


def quaternionic_glue(m: Overlattice) -> Tuple[Overlattice, GlueChain]:
    """
    Glue M ⊕ M̄ (second copy conjugated by (z, w) ↦ (z, −w)) along
    v₁ = (x, 0, a·x, b·x) and v₂ = 𝐢·v₁ for each block of order q ≡ 3 mod 4.

    `m` must be the output of complex_glue, with ambient g1 ⊕ g1.
    """
    n = m.ambient.n // 2
    g1 = SymGram(tuple(row[:n] for row in m.ambient.entries[:n]))
    zeros = (Fraction(0),) * (2 * n)
    conjugated = [tuple(row[:n]) + tuple(-x for x in row[n:]) for row in m.basis]
    basis = tuple(tuple(row) + zeros for row in m.basis) + tuple(zeros + row for row in conjugated)
    ov = Overlattice(
        gram=direct_sum(m.gram, m.gram),
        basis=basis,
        index=m.index * m.index,
        ambient=direct_sum(g1, g1, g1, g1),
    )
    chain = GlueChain(stage=3, start=ov.gram)
    std = standard_action(n)
    for blk in linking.decompose(g1):
        q = blk.prime
        if q % 4 != 3:
            continue
        a, b = sum_two_squares_neg_one(q)
        w = vec_mat(blk.generators[0], g1.inverse)
        zero = (Fraction(0),) * n
        v1 = tuple(w) + zero + tuple(a * x for x in w) + tuple(b * x for x in w)
        v2 = vec_mat(v1, std.i)
        relation = [jx + a * x1 - b * x2 for jx, x1, x2 in zip(vec_mat(v1, std.j), v1, v2)]
        if not ov.contains(relation):
            raise ConsistencyError(f"j·v1 + a·v1 - b·v2 is not in the lattice at q={q}")
        ov = _glue(chain, ov, [v1, v2], q, q * q, "quaternionic")

    if ov.gram.delta != 1:
        raise ConsistencyError(f"stage 3 ended with |det| {ov.gram.delta}")
    if not verify_quaternionic(ov.gram, transport_action(ov.basis, std)):
        raise ConsistencyError("quaternionic structure does not preserve the glued lattice")
    logger.info("[GLUE] stage 3: unimodular after %d steps", len(chain.steps))
    return ov, chain


def _block_diagonal(block: RatRows, copies: int) -> RatRows:
    n = len(block)
    out = [[Fraction(0)] * (n * copies) for _ in range(n * copies)]
    for c in range(copies):
        for r in range(n):
            for s in range(n):
                out[c * n + r][c * n + s] = block[r][s]
    return _frac_rows(out)


def _lift(ov: Overlattice, stage_one: Overlattice, g: SymGram, copies: int) -> Overlattice:
    """Re-express a lattice over copies of stage_one in coordinates of copies of g."""
    basis = _frac_rows(mat_mul(ov.basis, _block_diagonal(stage_one.basis, copies)))
    ambient = direct_sum(*([g] * copies))
    gram = gram_of_basis(ambient.entries, basis)
    if gram != ov.gram:
        raise ConsistencyError("lifted Gram does not match")
    index = math.isqrt(ambient.delta // gram.delta)
    if gram.delta * index * index != ambient.delta:
        raise ConsistencyError("lifted lattice has non-square index ratio")
    return Overlattice(gram=gram, basis=basis, index=index, ambient=ambient)


def embed_four_copies(g: SymGram) -> FourCopyEmbedding:
    """
    Embed L⁴ as a quaternionic sublattice of a unimodular lattice of rank 4n.

    [U : L⁴] = δ², since det L⁴ = δ⁴ and det U = 1.
    """
    g.require_nondegenerate()
    stage_one, chain1 = chain_prime_linking(g)
    m, chain2 = complex_glue(stage_one.gram)
    u, chain3 = quaternionic_glue(m)
    lattice = _lift(u, stage_one, g, 4)
    if lattice.index != g.delta**2:
        raise ConsistencyError(f"[U : L⁴] = {lattice.index}, expected {g.delta ** 2}")
    action = transport_action(lattice.basis, standard_action(g.n))
    if not verify_quaternionic(lattice.gram, action):
        raise ConsistencyError("transported action is not quaternionic")
    inverse = rational_inverse(lattice.basis)
    if not is_integral_vector([x for row in inverse for x in row]):
        raise ConsistencyError("L⁴ is not contained in U")
    embedding = tuple(tuple(int(x) for x in row) for row in inverse)
    logger.info("[GLUE] embedded four copies of a rank-%d lattice, index %d", g.n, lattice.index)
    return FourCopyEmbedding(
        lattice=lattice,
        embedding=embedding,
        action=action,
        chains=(chain1, chain2, chain3),
        delta=g.delta,
    )


def _basis_mod(vectors: Sequence[Sequence[int]], q: int) -> List[Tuple[int, ...]]:
    rows = [tuple(x % q for x in v) for v in vectors if any(x % q for x in v)]
    if not rows:
        return []
    domain = GF(q)
    dm = DomainMatrix([[domain(x) for x in row] for row in rows], (len(rows), len(rows[0])), domain)
    reduced, pivots = dm.rref()
    return [tuple(domain.to_int(x) % q for x in row) for row in reduced.to_list()[: len(pivots)]]


def _lagrangian(form: Sequence[Sequence[int]], q: int) -> List[Tuple[int, ...]]:
    """Basis of a maximal isotropic subspace of a hyperbolic form over F_q, q odd."""
    d = len(form)

    def b(u, v):
        return sum(u[r] * form[r][s] * v[s] for r in range(d) for s in range(d)) % q

    def comb(*terms):
        return tuple(sum(c * v[t] for c, v in terms) % q for t in range(d))

    half = pow(2, -1, q)
    space = [tuple(int(r == s) for s in range(d)) for r in range(d)]
    found = []
    while space:
        head = space[:3]
        e = None
        for coeffs in itertools.product(range(q), repeat=len(head)):
            if any(coeffs):
                cand = comb(*zip(coeffs, head))
                if b(cand, cand) == 0:
                    e = cand
                    break
        if e is None:
            raise ConsistencyError(f"anisotropic remainder over F_{q}")
        f = next((s for s in space if b(e, s)), None)
        if f is None:
            raise ConsistencyError(f"degenerate form over F_{q}")
        f = comb((pow(b(e, f), -1, q), f))
        f = comb((1, f), (-b(f, f) * half, e))
        found.append(e)
        space = _basis_mod([comb((1, s), (-b(s, f), e), (-b(s, e), f)) for s in space], q)
    return found


def _lagrangian_glue(m: Overlattice) -> Tuple[Overlattice, GlueChain]:
    g = m.gram
    ov = m
    chain = GlueChain(stage=2, start=g)
    for q in sorted(factorize(g.delta)):
        if q % 4 != 3:
            raise ConsistencyError(f"unexpected prime {q} left after complex gluing")
        gens = [blk.generators[0] for blk in linking.decompose(g, primes=[q])]
        form = [[int(bilinear(g.inverse, x, y) * q) % q for y in gens] for x in gens]
        for coeffs in _lagrangian(form, q):
            y = tuple(sum(c * x[t] for c, x in zip(coeffs, gens)) for t in range(g.n))
            ov = _glue(chain, ov, [m.dual_to_ambient(y)], q, q, "lagrangian")
    return ov, chain


def embed_two_copies(g: SymGram) -> TwoCopyResult:
    """
    Unimodular overlattice of L ⊕ L, which exists exactly when every prime
    q ≡ 3 mod 4 divides δ to an even power; otherwise the smallest
    offending q is returned as the certificate.
    """
    g.require_nondegenerate()
    offending = sorted(q for q, e in factorize(g.delta).items() if q % 4 == 3 and e % 2)
    if offending:
        logger.info("[GLUE] L² has no unimodular overlattice: %d divides δ to an odd power", offending[0])
        return TwoCopyResult(lattice=None, certificate=offending[0])
    stage_one, chain1 = chain_prime_linking(g)
    m, chain2 = complex_glue(stage_one.gram)
    u, chain_q = _lagrangian_glue(m)
    if u.gram.delta != 1:
        raise ConsistencyError(f"two-copy gluing ended with |det| {u.gram.delta}")
    lattice = _lift(u, stage_one, g, 2)
    return TwoCopyResult(lattice=lattice, certificate=None, chains=(chain1, chain2, chain_q))


def standard_action(n: int) -> QuaternionAction:
    """𝐢(x, y, z, w) = (−y, x, −w, z) and 𝐣(x, y, z, w) = (−z, w, x, −y) on (ℚⁿ)⁴."""
    size = 4 * n
    i = [[Fraction(0)] * size for _ in range(size)]
    j = [[Fraction(0)] * size for _ in range(size)]
    x, y, z, w = 0, n, 2 * n, 3 * n
    for t in range(n):
        i[x + t][y + t] = Fraction(1)
        i[y + t][x + t] = Fraction(-1)
        i[z + t][w + t] = Fraction(1)
        i[w + t][z + t] = Fraction(-1)
        j[x + t][z + t] = Fraction(1)
        j[y + t][w + t] = Fraction(-1)
        j[z + t][x + t] = Fraction(-1)
        j[w + t][y + t] = Fraction(1)
    return QuaternionAction(i=_frac_rows(i), j=_frac_rows(j))


def transport_matrix(basis: Sequence[Sequence], m: Sequence[Sequence]) -> RatRows:
    """B·M·B⁻¹: the map v ↦ v·M written in the basis B."""
    return _frac_rows(mat_mul(mat_mul(basis, m), rational_inverse(basis)))


def transport_action(basis: Sequence[Sequence], action: QuaternionAction) -> QuaternionAction:
    return QuaternionAction(i=transport_matrix(basis, action.i), j=transport_matrix(basis, action.j))


def verify_quaternionic(g: SymGram, action: QuaternionAction) -> bool:
    """
    True iff 𝐢, 𝐣 are integral isometries of g with 𝐢² = 𝐣² = −1 and
    𝐢𝐣 = −𝐣𝐢.
    """
    if g.n % 4:
        raise InvalidInputError(f"rank {g.n} is not divisible by 4")
    i, j = _frac_rows(action.i), _frac_rows(action.j)
    if any(len(m) != g.n or any(len(row) != g.n for row in m) for m in (i, j)):
        raise InvalidInputError(f"action matrices must be {g.n}×{g.n}")
    if not is_integral_vector([x for m in (i, j) for row in m for x in row]):
        return False
    minus_id = tuple(tuple(Fraction(-int(r == s)) for s in range(g.n)) for r in range(g.n))
    if mat_mul(i, i) != minus_id or mat_mul(j, j) != minus_id:
        return False
    ij = mat_mul(i, j)
    ji = mat_mul(j, i)
    if any(a != -b for ra, rb in zip(ij, ji) for a, b in zip(ra, rb)):
        return False
    form = _frac_rows(g.entries)
    return all(
        mat_mul(mat_mul(m, form), tuple(zip(*m))) == form for m in (i, j)
    )
