"""
Tests for characteristic covector minimization, the square bound,
the congruences and the sublemma witness search.
"""

import random
import unittest
from fractions import Fraction

from sympy import primerange

from charvec import (
    brute_force_min,
    characteristic_parity,
    check_main_bound,
    congruence_mod4,
    congruence_mod8,
    coverage_box,
    index_p_sublattice,
    is_characteristic,
    is_extremal_form,
    main_bound,
    make_covector,
    max_characteristic_negative,
    min_characteristic,
    sublemma_witness,
    unit_vectors,
)
from errors import InvalidInputError
from exact_core import SymGram, negate

A2 = SymGram(((2, 1), (1, 2)))
E8 = SymGram((
    (2, -1, 0, 0, 0, 0, 0, 0),
    (-1, 2, -1, 0, 0, 0, 0, 0),
    (0, -1, 2, -1, 0, 0, 0, -1),
    (0, 0, -1, 2, -1, 0, 0, 0),
    (0, 0, 0, -1, 2, -1, 0, 0),
    (0, 0, 0, 0, -1, 2, -1, 0),
    (0, 0, 0, 0, 0, -1, 2, 0),
    (0, 0, -1, 0, 0, 0, 0, 2),
))


def random_symmetric(rng: random.Random, n: int, bound: int) -> SymGram:
    rows = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            rows[i][j] = rows[j][i] = rng.randint(-bound, bound)
    return SymGram(tuple(tuple(r) for r in rows))


def random_definite(rng: random.Random, n: int, bound: int = 8) -> SymGram:
    while True:
        rows = [[0] * n for _ in range(n)]
        for i in range(n):
            rows[i][i] = rng.randint(1, bound)
            for j in range(i + 1, n):
                rows[i][j] = rows[j][i] = rng.randint(-bound, bound)
        g = SymGram(tuple(tuple(r) for r in rows))
        if g.det != 0 and g.is_positive_definite:
            return g


def assert_bound_holds(case: unittest.TestCase, g: SymGram) -> Fraction:
    best = min_characteristic(g)
    bound = main_bound(g.n, g.delta)
    case.assertLessEqual(best.square, bound, g.entries)
    if best.square == bound:
        case.assertTrue(is_extremal_form(g), g.entries)
    return best.square


class TestCharacteristicBasics(unittest.TestCase):

    def test_parity(self):
        self.assertEqual(characteristic_parity(A2), (0, 0))
        self.assertEqual(characteristic_parity(SymGram.identity(3)), (1, 1, 1))
        self.assertEqual(characteristic_parity(SymGram.diagonal([1, 3])), (1, 1))

    def test_is_characteristic(self):
        self.assertTrue(is_characteristic(SymGram.diagonal([1, 3]), (3, -1)))
        self.assertFalse(is_characteristic(SymGram.diagonal([1, 3]), (2, 1)))

    def test_make_covector(self):
        c = make_covector(SymGram.diagonal([1, 3]), (1, 1))
        self.assertEqual(c.square, Fraction(4, 3))
        with self.assertRaises(InvalidInputError):
            make_covector(A2, (1,))


class TestMinCharacteristic(unittest.TestCase):

    def test_rank_one_odd(self):
        for delta in (1, 3, 5, 7, 15):
            c = min_characteristic(SymGram.diagonal([delta]))
            self.assertEqual(c.coords, (1,))
            self.assertEqual(c.square, Fraction(1, delta))

    def test_even_lattice(self):
        c = min_characteristic(A2)
        self.assertEqual(c.coords, (0, 0))
        self.assertEqual(c.square, 0)

    def test_tie_break(self):
        c = min_characteristic(SymGram(((2, 1), (1, 3))))
        self.assertEqual(c.coords, (0, 1))
        self.assertEqual(c.square, Fraction(2, 5))

    def test_rejects_indefinite(self):
        with self.assertRaises(InvalidInputError):
            min_characteristic(SymGram.diagonal([1, -1]))

    def test_unimodular_cases(self):
        for n in range(1, 9):
            self.assertEqual(min_characteristic(SymGram.identity(n)).square, n)
        self.assertEqual(min_characteristic(E8).square, 0)

    def test_max_characteristic_negative(self):
        self.assertEqual(max_characteristic_negative(negate(E8)).square, 0)
        self.assertEqual(max_characteristic_negative(negate(SymGram.diagonal([1, 3]))).square, Fraction(-4, 3))
        with self.assertRaises(InvalidInputError):
            max_characteristic_negative(A2)

    def test_negated_forms_mirror_the_minimum(self):
        rng = random.Random(77)
        for _ in range(150):
            g = random_definite(rng, rng.randint(1, 3))
            h = negate(g)
            top = max_characteristic_negative(h)
            self.assertTrue(is_characteristic(h, top.coords), g.entries)
            self.assertEqual(top.square, make_covector(h, top.coords).square)
            self.assertEqual(top.square, -min_characteristic(g).square, g.entries)
            self.assertGreaterEqual(top.square, -main_bound(g.n, g.delta), g.entries)


class TestBruteForce(unittest.TestCase):

    def test_examples(self):
        self.assertEqual(brute_force_min(SymGram.diagonal([1, 3]), 5).square, Fraction(4, 3))
        self.assertEqual(brute_force_min(SymGram.identity(2), 3).square, 2)
        self.assertEqual(brute_force_min(E8, 2).square, 0)

    def test_bad_box(self):
        with self.assertRaises(InvalidInputError):
            brute_force_min(A2, 0)


class TestMainBound(unittest.TestCase):

    def test_extremal_example(self):
        report = check_main_bound(SymGram.diagonal([1, 1, 5]))
        self.assertEqual(report.min_square, Fraction(11, 5))
        self.assertEqual(report.bound, Fraction(11, 5))
        self.assertTrue(report.is_extremal)
        self.assertEqual(report.delta_parity, "odd")

    def test_strict_examples(self):
        report = check_main_bound(A2)
        self.assertEqual(report.min_square, 0)
        self.assertEqual(report.bound, Fraction(4, 3))
        self.assertFalse(report.is_extremal)

        report = check_main_bound(E8)
        self.assertEqual(report.min_square, 0)
        self.assertEqual(report.bound, 8)
        self.assertFalse(report.is_extremal)

    def test_even_determinant_bound(self):
        self.assertEqual(main_bound(3, 4), 2)
        report = check_main_bound(SymGram.diagonal([1, 1, 4]))
        self.assertEqual(report.delta_parity, "even")
        self.assertLessEqual(report.min_square, 2)

    def test_extremal_form(self):
        self.assertTrue(is_extremal_form(SymGram.diagonal([1, 5])))
        self.assertFalse(is_extremal_form(A2))
        self.assertFalse(is_extremal_form(SymGram(((2, 1), (1, 3)))))
        self.assertEqual(len(unit_vectors(SymGram.identity(4))), 4)

    def test_exhaustive_rank_two(self):
        checked = 0
        for a in range(1, 7):
            for c in range(1, 7):
                for b in range(-6, 7):
                    if a * c - b * b <= 0:
                        continue
                    g = SymGram(((a, b), (b, c)))
                    square = assert_bound_holds(self, g)
                    self.assertEqual(brute_force_min(g, coverage_box(g)).square, square, g.entries)
                    checked += 1
        self.assertGreater(checked, 100)

    def test_random_ranks_three_and_four(self):
        rng = random.Random(2024)
        from_start = 0
        for _ in range(500):
            g = random_definite(rng, rng.choice((3, 4)))
            square = assert_bound_holds(self, g)
            box = coverage_box(g)
            if box <= 8:
                from_start += 1
            else:
                # near-degenerate forms start far out; shrink to the found minimum
                box = coverage_box(g, square)
            oracle = brute_force_min(g, box)
            self.assertEqual(oracle.square, square, g.entries)
            self.assertEqual(oracle.coords, min_characteristic(g).coords, g.entries)
        self.assertGreater(from_start, 25)


class TestCongruences(unittest.TestCase):

    def test_mod4_examples(self):
        self.assertEqual(congruence_mod4(SymGram.diagonal([3])), Fraction(1, 3))
        self.assertEqual(congruence_mod4(A2), 0)
        self.assertEqual(congruence_mod4(SymGram.identity(2)), 2)

    def test_mod8_examples(self):
        self.assertEqual(congruence_mod8(SymGram.diagonal([3])), Fraction(1, 3))
        self.assertEqual(congruence_mod8(SymGram.diagonal([5])), Fraction(1, 5))
        self.assertEqual(congruence_mod8(A2), 0)

    def test_mod8_rejects_even_determinant(self):
        with self.assertRaises(InvalidInputError):
            congruence_mod8(SymGram.diagonal([2, 1]))

    def test_random_characteristic_squares(self):
        rng = random.Random(99)
        lattices = 0
        while lattices < 200:
            g = random_symmetric(rng, rng.randint(1, 4), 6)
            if g.det == 0 or g.delta > 100:
                continue
            lattices += 1
            parity = characteristic_parity(g)
            mod4 = congruence_mod4(g)
            mod8 = congruence_mod8(g) if g.delta % 2 else None
            for _ in range(5):
                coords = [p + 2 * rng.randint(-3, 3) for p in parity]
                square = make_covector(g, coords).square
                self.assertEqual(square % Fraction(4, g.delta), mod4, g.entries)
                if mod8 is not None:
                    self.assertEqual(square % Fraction(8, g.delta), mod8, g.entries)


class TestSublemma(unittest.TestCase):

    def test_variant_one_example(self):
        w = sublemma_witness(1, 5, (1, 1, 1))
        self.assertEqual(w.k, (1,))
        self.assertEqual(w.l, (0, 0, 0))
        self.assertEqual(w.value, 4)
        self.assertEqual(w.bound, 50)

    def test_variant_one_found(self):
        w = sublemma_witness(1, 13, (11, -11, 3))
        self.assertLess(w.value, 338)

    def test_variant_two_example(self):
        w = sublemma_witness(2, 3, (1,) * 6, (0,) * 6)
        self.assertEqual(w.k, (1, 1))
        self.assertEqual(w.l, (0,) * 6)
        self.assertEqual(w.value, 8)

    def test_rejects_bad_inputs(self):
        with self.assertRaises(InvalidInputError):
            sublemma_witness(1, 7, (1, 1, 1))
        with self.assertRaises(InvalidInputError):
            sublemma_witness(1, 5, (2, 1, 1))
        with self.assertRaises(InvalidInputError):
            sublemma_witness(2, 5, (1,) * 6, (0,) * 6)
        with self.assertRaises(InvalidInputError):
            sublemma_witness(4, 3, (1,) * 6, (0,) * 6)

    def test_all_small_primes(self):
        rng = random.Random(5)
        for p in primerange(5, 38):
            if p % 4 != 1:
                continue
            odd = [x for x in range(2 - p, p - 1) if x % 2]
            for _ in range(200):
                s = [rng.choice(odd) for _ in range(3)]
                w = sublemma_witness(1, p, s)
                self.assertLess(w.value, 2 * p * p)
        for q in primerange(3, 32):
            if q % 4 != 3:
                continue
            odd = [x for x in range(1 - q, q) if x % 2]
            even = [x for x in range(1 - q, q) if x % 2 == 0]
            for _ in range(30):
                s = [rng.choice(odd) for _ in range(6)]
                t = [rng.choice(even) for _ in range(6)]
                self.assertLess(sublemma_witness(2, q, s, t).value, 4 * q * q)
                t3 = t[:5] + [rng.choice(odd)]
                self.assertLess(sublemma_witness(3, q, s[:5], t3).value, 4 * q * q)


class TestIndexSublattice(unittest.TestCase):

    def test_determinant(self):
        g = index_p_sublattice(3, 5, (1, 2, -1), 2)
        self.assertEqual(g.n, 5)
        self.assertEqual(g.det, 3 * 25)
        self.assertTrue(g.is_positive_definite)

    def test_rejects_zero_residue(self):
        with self.assertRaises(InvalidInputError):
            index_p_sublattice(3, 5, (5, 1), 1)
        with self.assertRaises(InvalidInputError):
            index_p_sublattice(3, 4, (1, 1), 1)

    def test_bound_holds_on_sublattice(self):
        g = index_p_sublattice(7, 3, (1, -1), 1)
        report = check_main_bound(g)
        self.assertLessEqual(report.min_square, report.bound)

    def test_first_dual_vector_is_short_and_characteristic(self):
        """(1, 0, ..., 0) has square (1 + Σs² + t²/δ)/p², strictly below n - 1."""
        rng = random.Random(5)
        for p in (3, 5, 7, 11):
            odd = [x for x in range(1 - p, p) if x % 2 and x % p]
            for delta in (1, 2, 3, 6, 9):
                same_parity = [x for x in range(1 - p, p) if (x - delta) % 2 == 0 and x % p]
                for _ in range(4):
                    s = tuple(rng.choice(odd) for _ in range(rng.randint(1, 3)))
                    t = rng.choice(same_parity)
                    g = index_p_sublattice(delta, p, s, t)
                    n = len(s) + 2
                    first = (1,) + (0,) * (n - 1)
                    self.assertEqual(characteristic_parity(g), first, (delta, p, s, t))
                    square = make_covector(g, first).square
                    expected = (1 + sum(x * x for x in s) + Fraction(t * t, delta)) / (p * p)
                    self.assertEqual(square, expected, (delta, p, s, t))
                    self.assertLess(square, n - 1)
                    self.assertLessEqual(check_main_bound(g).min_square, square)


if __name__ == "__main__":
    unittest.main()
