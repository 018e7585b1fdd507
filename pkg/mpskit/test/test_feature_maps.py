import unittest
import numpy as np
from mpskit.errors import InvalidFeatureMapError
from mpskit.errors import NumericError
from mpskit.feature_maps import AffineOne
from mpskit.feature_maps import BinaryIndicator
from mpskit.feature_maps import Custom
from mpskit.feature_maps import TrigPair
from mpskit.feature_maps import complement
from mpskit.feature_maps import concatenate
from mpskit.feature_maps import constant_one
from mpskit.feature_maps import eval_feature
from mpskit.feature_maps import feature_map_by_name
from mpskit.feature_maps import feature_map_from_dict


class TestFeatureMaps(unittest.TestCase):
  """
  Tests of the per-site feature maps.
  """

  def test_binary_indicator(self):
    """[x, 1 - x] is the indicator of X and not-X on {0, 1}."""
    fm = BinaryIndicator()
    np.testing.assert_array_equal(eval_feature(fm, 1), [1, 0])
    np.testing.assert_array_equal(eval_feature(fm, 0), [0, 1])
    assert fm.dim == 2

  def test_affine_one(self):
    """[x, 1] at one half."""
    np.testing.assert_array_equal(eval_feature(AffineOne(), 0.5), [0.5, 1])

  def test_trig_pair(self):
    """[sin x, cos x]."""
    np.testing.assert_allclose(eval_feature(TrigPair(), 0.3),
                               [np.sin(0.3), np.cos(0.3)])
    assert TrigPair().integer_rows() is None

  def test_custom_matches_named_kind(self):
    """A Custom table with the same rows behaves like the named map."""
    custom = Custom(BinaryIndicator().coefficient_rows())
    xs = np.linspace(-1, 2, 7)
    np.testing.assert_allclose(custom.evaluate_many(xs),
                               BinaryIndicator().evaluate_many(xs))
    assert custom == BinaryIndicator()

  def test_empty_custom_is_invalid(self):
    """A table with no rows cannot be evaluated."""
    with self.assertRaises(InvalidFeatureMapError):
      eval_feature(Custom([]), 0.5)

  def test_non_finite_input(self):
    """NaN inputs are rejected."""
    with self.assertRaises(NumericError):
      eval_feature(AffineOne(), float("nan"))

  def test_complement_and_constant(self):
    """One dimensional maps 1 - x and 1."""
    np.testing.assert_array_equal(complement()(0), [1])
    np.testing.assert_array_equal(complement()(1), [0])
    np.testing.assert_array_equal(constant_one()(7.5), [1])

  def test_concatenate(self):
    """Concatenation stacks the components."""
    fm = concatenate(AffineOne(), BinaryIndicator())
    assert fm.dim == 4
    np.testing.assert_allclose(fm(0.25), [0.25, 1, 0.25, 0.75])

  def test_exact_integer_features(self):
    """Integer maps evaluate exactly at large integers."""
    fm = AffineOne()
    assert fm.exact(2**70) == [2**70, 1]
    assert BinaryIndicator().exact(3) == [3, -2]

  def test_lookup(self):
    """Names and dictionaries resolve to feature maps."""
    assert feature_map_by_name("affine") == AffineOne()
    assert feature_map_from_dict(complement().to_dict()) == complement()
    with self.assertRaises(InvalidFeatureMapError):
      feature_map_by_name("relu")
