import sys
import os
import unittest
from dataclasses import replace
from fractions import Fraction

import numpy as np

# Add root to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.core.descriptor import LatticeName, descriptor_data, validate_descriptor
from app.core.errors import ValidationError


class TestDescriptor(unittest.TestCase):

    def test_identities_hold_exactly(self):
        """D2Q9 and D2Q5 pass every rational moment identity"""
        for name in ("D2Q9", "D2Q5"):
            self.assertEqual(validate_descriptor(descriptor_data(name)), [], name)

    def test_float_identities(self):
        """Float weights reproduce the identities to 1e-15"""
        for name in ("D2Q9", "D2Q5"):
            table = descriptor_data(name)
            w = table.w_array
            c = table.c_array.astype(float)
            self.assertAlmostEqual(w.sum(), 1.0, delta=1e-15)
            np.testing.assert_allclose(w @ c, 0.0, atol=1e-15)
            second = np.einsum("i,ia,ib->ab", w, c, c)
            np.testing.assert_allclose(second, np.eye(2) / 3.0, atol=1e-15)

    def test_opposites(self):
        """opposite(opposite(i)) == i and c_opp = -c"""
        for name in ("D2Q9", "D2Q5"):
            table = descriptor_data(name)
            opp = table.opposite_array
            np.testing.assert_array_equal(opp[opp], np.arange(table.q))
            np.testing.assert_array_equal(table.c_array[opp], -table.c_array)

    def test_rest_population_first(self):
        """Index 0 is the rest velocity"""
        for name in ("D2Q9", "D2Q5"):
            table = descriptor_data(name)
            self.assertEqual(table.c[0], (0, 0))
            self.assertEqual(table.index_of((0, 0)), 0)

    def test_known_weights(self):
        """D2Q9 weights 4/9, 1/9, 1/36"""
        table = descriptor_data(LatticeName.D2Q9)
        self.assertEqual(table.q, 9)
        self.assertEqual(table.w[0], Fraction(4, 9))
        self.assertEqual(table.w[table.index_of((1, 0))], Fraction(1, 9))
        self.assertEqual(table.w[table.index_of((1, 1))], Fraction(1, 36))
        self.assertEqual(table.cs2, Fraction(1, 3))

    def test_cached_table(self):
        """Repeated lookups return the same table"""
        self.assertIs(descriptor_data("D2Q5"), descriptor_data("D2Q5"))

    def test_unknown_lattice(self):
        """Unsupported names raise ValidationError"""
        with self.assertRaises(ValidationError):
            descriptor_data("D3Q19")

    def test_unknown_velocity(self):
        """index_of rejects velocities outside the set"""
        with self.assertRaises(ValidationError):
            descriptor_data("D2Q5").index_of((1, 1))

    def test_broken_weights_reported(self):
        """Tampered weights name the failing identity"""
        table = descriptor_data("D2Q5")
        broken = replace(table, w=(Fraction(1, 2),) + table.w[1:])
        identities = {v.identity for v in validate_descriptor(broken)}
        self.assertIn("weight-sum", identities)

    def test_broken_opposite_reported(self):
        """Wrong opposite table is reported"""
        table = descriptor_data("D2Q5")
        broken = replace(table, opposite=(0, 1, 4, 3, 2))
        identities = {v.identity for v in validate_descriptor(broken)}
        self.assertIn("opposite-pairing", identities)

    def test_readonly_arrays(self):
        """Cached arrays cannot be modified"""
        with self.assertRaises(ValueError):
            descriptor_data("D2Q9").w_array[0] = 1.0


if __name__ == '__main__':
    unittest.main()
