"""
Tests for exact integer/rational linear algebra.
"""

import random
import unittest
from fractions import Fraction

from errors import DegenerateFormError, InvalidInputError
from exact_core import (
    IntMatrix,
    SymGram,
    congruent,
    determinant,
    direct_sum,
    dual_gram,
    factorize,
    gram_of_basis,
    hermite_row_lattice,
    inverse_unimodular,
    mat_mul,
    negate,
    signature,
    smith_normal_form,
)

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


def random_unimodular(rng: random.Random, n: int) -> IntMatrix:
    rows = [[int(i == j) for j in range(n)] for i in range(n)]
    for _ in range(3 * n):
        i, j = rng.sample(range(n), 2) if n > 1 else (0, 0)
        if i == j:
            continue
        c = rng.randint(-2, 2)
        for k in range(n):
            rows[i][k] += c * rows[j][k]
    return IntMatrix(tuple(tuple(r) for r in rows))


def random_gram(rng: random.Random, n: int, bound: int = 5) -> SymGram:
    rows = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            rows[i][j] = rows[j][i] = rng.randint(-bound, bound)
    return SymGram(tuple(tuple(r) for r in rows))


class TestSymGram(unittest.TestCase):

    def test_rejects_asymmetric(self):
        with self.assertRaises(InvalidInputError):
            SymGram(((2, 1), (0, 2)))

    def test_rejects_rank_zero_and_ragged(self):
        with self.assertRaises(InvalidInputError):
            SymGram(())
        with self.assertRaises(InvalidInputError):
            SymGram(((1, 0), (0,)))

    def test_rejects_non_integers(self):
        with self.assertRaises(InvalidInputError):
            SymGram(((1.5,),))

    def test_cached_properties(self):
        self.assertEqual(A2.det, 3)
        self.assertEqual(A2.delta, 3)
        self.assertTrue(A2.is_even)
        self.assertTrue(A2.is_positive_definite)
        self.assertEqual(A2.sigma, 2)
        self.assertFalse(SymGram.identity(2).is_even)

    def test_degenerate_form(self):
        g = SymGram(((1, 1), (1, 1)))
        self.assertEqual(g.det, 0)
        with self.assertRaises(DegenerateFormError):
            g.require_nondegenerate()
        with self.assertRaises(DegenerateFormError):
            signature(g)


class TestDeterminant(unittest.TestCase):

    def test_examples(self):
        self.assertEqual(determinant(SymGram.identity(3)), 1)
        self.assertEqual(determinant(A2), 3)
        self.assertEqual(determinant(E8), 1)

    def test_product_of_smith_diagonal(self):
        rng = random.Random(7)
        for _ in range(40):
            g = random_gram(rng, rng.randint(1, 4))
            if g.det == 0:
                continue
            d = smith_normal_form(g).diagonal
            prod = 1
            for x in d:
                prod *= x
            self.assertEqual(abs(prod), g.delta)


class TestSignature(unittest.TestCase):

    def test_examples(self):
        self.assertEqual(signature(SymGram.identity(4)), (4, 0))
        self.assertEqual(signature(SymGram.diagonal([1, -1])), (1, 1))
        self.assertEqual(signature(A2), (2, 0))

    def test_zero_diagonal(self):
        hyperbolic = SymGram(((0, 1), (1, 0)))
        self.assertEqual(signature(hyperbolic), (1, 1))

    def test_basis_invariance(self):
        rng = random.Random(11)
        for _ in range(40):
            n = rng.randint(1, 4)
            g = random_gram(rng, n)
            if g.det == 0:
                continue
            u = random_unimodular(rng, n)
            self.assertEqual(signature(congruent(g, u)), signature(g))


class TestDualGram(unittest.TestCase):

    def test_examples(self):
        self.assertEqual(dual_gram(SymGram.diagonal([7])), ((Fraction(1, 7),),))
        self.assertEqual(dual_gram(A2), ((Fraction(2, 3), Fraction(-1, 3)), (Fraction(-1, 3), Fraction(2, 3))))

    def test_inverse_identity(self):
        rng = random.Random(3)
        for _ in range(30):
            n = rng.randint(1, 4)
            g = random_gram(rng, n)
            if g.det == 0:
                continue
            product = mat_mul(g.entries, dual_gram(g))
            self.assertEqual(product, tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n)))

    def test_degenerate(self):
        with self.assertRaises(DegenerateFormError):
            dual_gram(SymGram(((2, 2), (2, 2))))


class TestNormalForms(unittest.TestCase):

    def test_smith_examples(self):
        self.assertEqual(smith_normal_form(SymGram.identity(3)).diagonal, (1, 1, 1))
        self.assertEqual(smith_normal_form(A2).diagonal, (1, 3))
        self.assertEqual(smith_normal_form(IntMatrix(((4, 0), (0, 6)))).diagonal, (2, 12))

    def test_smith_transforms(self):
        m = IntMatrix(((4, 0), (0, 6)))
        snf = smith_normal_form(m)
        self.assertEqual(mat_mul(mat_mul(snf.U.rows, m.rows), snf.V.rows), snf.D.rows)
        self.assertEqual(abs(determinant(snf.U)), 1)

    def test_hermite_examples(self):
        self.assertEqual(hermite_row_lattice([[4], [2]]).rows, ((2,),))
        self.assertEqual(hermite_row_lattice([[1, 0], [0, 1]]).rows, ((1, 0), (0, 1)))
        self.assertEqual(hermite_row_lattice([[2, 0], [0, 2], [1, 1]]).rows, ((1, 1), (0, 2)))

    def test_hermite_rank_deficient(self):
        with self.assertRaises(InvalidInputError):
            hermite_row_lattice([[1, 1], [2, 2]])

    def test_inverse_unimodular(self):
        u = IntMatrix(((2, 1), (1, 1)))
        inv = inverse_unimodular(u)
        self.assertEqual(mat_mul(u.rows, inv.rows), ((1, 0), (0, 1)))
        with self.assertRaises(InvalidInputError):
            inverse_unimodular(IntMatrix(((2, 0), (0, 1))))


class TestConstructions(unittest.TestCase):

    def test_direct_sum_and_negate(self):
        g = direct_sum(A2, SymGram.diagonal([5]))
        self.assertEqual(g.n, 3)
        self.assertEqual(g.det, 15)
        self.assertEqual(negate(A2).signature, (0, 2))

    def test_gram_of_basis(self):
        basis = ((Fraction(1, 2), Fraction(1, 2)), (Fraction(0), Fraction(1)))
        g = gram_of_basis(SymGram.diagonal([2, 2]).entries, basis)
        self.assertEqual(g.entries, ((1, 1), (1, 2)))
        with self.assertRaises(InvalidInputError):
            gram_of_basis(SymGram.diagonal([1]).entries, ((Fraction(1, 2),),))

    def test_factorize(self):
        self.assertEqual(factorize(60), {2: 2, 3: 1, 5: 1})
        self.assertEqual(factorize(-9), {3: 2})
        self.assertEqual(factorize(1), {})
        with self.assertRaises(InvalidInputError):
            factorize(0)


if __name__ == "__main__":
    unittest.main()
