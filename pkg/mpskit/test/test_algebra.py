import os
import unittest
import numpy as np
from mpskit.activation import ScaleInvariantSigmoid
from mpskit.algebra import ActivatedMps
from mpskit.algebra import LABEL_SHARED
from mpskit.algebra import add
from mpskit.algebra import add_shared_kernel
from mpskit.algebra import as_activated
from mpskit.algebra import direct_sum
from mpskit.algebra import eval_activated
from mpskit.algebra import eval_activated_batch
from mpskit.algebra import parameter_vector
from mpskit.algebra import scale
from mpskit.algebra import scale_via_C
from mpskit.algebra import with_parameters
from mpskit.compiler import Parity
from mpskit.compiler import boolean_feature_maps
from mpskit.compiler import compile_gate
from mpskit.compiler import compile_table
from mpskit.boolexpr import parse_expr
from mpskit.boolexpr import table_from_expr
from mpskit.errors import IncompatibleActivationError
from mpskit.errors import PreconditionError
from mpskit.errors import ShapeError
from mpskit.errors import UnsupportedReparameterizationError
from mpskit.feature_maps import AffineOne
from mpskit.feature_maps import BinaryIndicator
from mpskit.feature_maps import TrigPair
from mpskit.mps import Boundary
from mpskit.mps import Mps
from mpskit.utils import all_rows

LOGISTIC = ScaleInvariantSigmoid.scaled_logistic(1.0)
RECIPROCAL = ScaleInvariantSigmoid.reciprocal_shift(1.5)
SLOW = os.environ.get("MPSKIT_SLOW") == "1"
MAPS = [AffineOne(), BinaryIndicator(), TrigPair()]


def random_activated(seed, n=4, chi=3, label_dim=2, sigma=LOGISTIC, fms=None,
                     label_site=None, boundary=Boundary.OPEN):
  rng = np.random.default_rng(seed)
  core = Mps.random(n, chi, d=2, label_dim=label_dim, label_site=label_site,
                    boundary=boundary, seed=rng, std=0.5)
  if fms is None:
    fms = [AffineOne()] * n
  return ActivatedMps(core, rng.normal(size=label_dim), sigma, fms)


def sample_points(n, count, seed=0):
  return np.random.default_rng(seed).uniform(0, 1, size=(count, n))


class TestAlgebra(unittest.TestCase):
  """
  Tests of activated MPS and their sums.
  """

  def test_logistic_at_zero(self):
    """A zero core through the logistic gives one half."""
    core = Mps.zeros([2, 2], label_dim=1)
    a = ActivatedMps(core, [1.0], LOGISTIC, [AffineOne()] * 2)
    assert eval_activated(a, [0.3, 0.9]) == 0.5

  def test_reciprocal_saturates(self):
    """A large pre-activation drives 1 / (C + e^z) to zero."""
    core = Mps([np.array([1000.0, 0.0]).reshape(1, 2, 1, 1)])
    a = ActivatedMps(core, [1.0], ScaleInvariantSigmoid.reciprocal_shift(1.0),
                     [AffineOne()])
    assert 0.0 <= eval_activated(a, [1.0]) < 1e-12

  def test_validation(self):
    """Output weights must match the label leg."""
    core = Mps.zeros([2, 2], label_dim=2)
    with self.assertRaises(ShapeError):
      ActivatedMps(core, [1.0], LOGISTIC, [AffineOne()] * 2)
    with self.assertRaises(ShapeError):
      ActivatedMps(Mps.zeros([2, 2]), [1.0], LOGISTIC, [AffineOne()] * 2)

  def test_scale(self):
    """k = 1 is the identity, k = 0 the zero function."""
    a = random_activated(1)
    xs = sample_points(4, 20)
    base = eval_activated_batch(a, xs)
    np.testing.assert_array_equal(eval_activated_batch(scale(a, 1.0), xs), base)
    np.testing.assert_array_equal(eval_activated_batch(scale(a, 0.0), xs), 0.0)
    np.testing.assert_allclose(eval_activated_batch(scale(a, -2.0), xs), -2.0 * base)

  def test_scale_via_c(self):
    """Reparameterizing C agrees with scaling the output weights."""
    xs = sample_points(4, 100, seed=3)
    for sigma in (LOGISTIC, RECIPROCAL):
      a = random_activated(2, sigma=sigma)
      expected = eval_activated_batch(scale(a, 2.5), xs)
      actual = eval_activated_batch(scale_via_C(a, 2.5), xs)
      np.testing.assert_allclose(actual, expected, rtol=1e-10, atol=1e-12)

  def test_scale_via_c_reparameterizes(self):
    """New constants are k C and C / k."""
    assert scale_via_C(random_activated(0), 2.0).sigma.C == 2.0
    scaled = scale_via_C(random_activated(0, sigma=RECIPROCAL), 3.0)
    np.testing.assert_allclose(scaled.sigma.C, 0.5)
    assert [fm.dim for fm in scaled.fms] == [3, 3, 3, 3]

  def test_scale_via_c_errors(self):
    """k <= 0 and the identity have no reparameterization."""
    with self.assertRaises(UnsupportedReparameterizationError):
      scale_via_C(random_activated(0), 0.0)
    with self.assertRaises(UnsupportedReparameterizationError):
      scale_via_C(random_activated(0, sigma=RECIPROCAL), -1.0)
    with self.assertRaises(UnsupportedReparameterizationError):
      scale_via_C(random_activated(0, sigma=None), 2.0)

  def test_add_zero(self):
    """Adding the zero model changes nothing."""
    a = random_activated(5)
    xs = sample_points(4, 50)
    total = add(a, ActivatedMps.zero_like(a))
    np.testing.assert_allclose(eval_activated_batch(total, xs),
                               eval_activated_batch(a, xs), rtol=1e-12)

  def test_add_boolean_tables(self):
    """OR plus parity on all boolean inputs sums the two tables."""
    or3 = compile_table(table_from_expr(parse_expr("X1 | X2 | X3")))
    parity = compile_gate(Parity(3))
    a = as_activated(or3, boolean_feature_maps(or3))
    b = as_activated(parity, boolean_feature_maps(parity))
    total = add(a, b)
    values = [eval_activated(total, row) for row in all_rows(3)]
    np.testing.assert_array_equal(values, [0, 2, 2, 1, 2, 1, 1, 2])

  def test_add_random_pairs(self):
    """Pointwise sums on random pairs."""
    rng = np.random.default_rng(9)
    xs = sample_points(4, 200, seed=9)
    pairs = 500 if SLOW else 20
    for seed in range(pairs):
      fms = [MAPS[int(c)] for c in rng.integers(0, 3, size=4)]
      a = random_activated(seed, chi=int(rng.integers(1, 4)),
                           label_dim=int(rng.integers(1, 4)),
                           label_site=int(rng.integers(0, 4)))
      b = random_activated(1000 + seed, chi=int(rng.integers(1, 4)), fms=fms,
                           label_dim=int(rng.integers(1, 4)),
                           label_site=int(rng.integers(0, 4)))
      total = add(a, b)
      expected = eval_activated_batch(a, xs) + eval_activated_batch(b, xs)
      np.testing.assert_allclose(eval_activated_batch(total, xs), expected,
                                 rtol=1e-12, atol=1e-12)

  def test_add_commutes_and_associates(self):
    """a + b equals b + a, and (a + b) + c equals a + (b + c)."""
    xs = sample_points(4, 100, seed=4)
    a = random_activated(11, chi=2)
    b = random_activated(12, chi=1, fms=[TrigPair()] * 4, label_site=0)
    c = random_activated(13, chi=3, label_dim=1, label_site=3)
    np.testing.assert_allclose(eval_activated_batch(add(a, b), xs),
                               eval_activated_batch(add(b, a), xs), rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(eval_activated_batch(add(add(a, b), c), xs),
                               eval_activated_batch(add(a, add(b, c)), xs),
                               rtol=1e-10, atol=1e-12)

  def test_scale_distributes(self):
    """k (a + b) equals k a + k b."""
    xs = sample_points(4, 100, seed=5)
    a = random_activated(14)
    b = random_activated(15, chi=2, fms=[BinaryIndicator()] * 4)
    for k in (-1.5, 0.0, 3.0):
      np.testing.assert_allclose(eval_activated_batch(scale(add(a, b), k), xs),
                                 eval_activated_batch(add(scale(a, k), scale(b, k)), xs),
                                 rtol=1e-10, atol=1e-12)

  def test_add_errors(self):
    """Different site counts or sigmoids cannot be added."""
    with self.assertRaises(ShapeError):
      add(random_activated(0, n=3, fms=[AffineOne()] * 3), random_activated(1))
    with self.assertRaises(IncompatibleActivationError):
      add(random_activated(0), random_activated(1, sigma=RECIPROCAL))

  def test_zero_blocks(self):
    """Direct sums are block diagonal on the bonds."""
    a = random_activated(3, chi=2).core
    b = random_activated(4, chi=3).core
    total = direct_sum(a, b)
    assert total.bond_dims == [1, 5, 5, 5, 1]
    assert total.phys_dims == [4, 4, 4, 4]
    for site in total.sites[1:-1]:
      t = site.tensor
      np.testing.assert_array_equal(t[:, :2, 2:, :], 0)
      np.testing.assert_array_equal(t[:, :2, :, 2:], 0)
      np.testing.assert_array_equal(t[:, 2:, :2, :], 0)
      np.testing.assert_array_equal(t[:, 2:, :, :2], 0)

  def test_add_moves_label_leg(self):
    """Summands with label legs on different sites still add pointwise."""
    xs = sample_points(4, 100, seed=6)
    for boundary in (Boundary.OPEN, Boundary.PERIODIC):
      a = random_activated(20, label_dim=2, label_site=0, boundary=boundary)
      b = random_activated(21, chi=2, label_dim=3, label_site=2, boundary=boundary,
                           fms=[TrigPair(), AffineOne(), BinaryIndicator(), AffineOne()])
      expected = eval_activated_batch(a, xs) + eval_activated_batch(b, xs)
      for total, site in ((add(a, b), 0), (add(b, a), 2)):
        assert total.core.label_site == site
        assert total.core.label_dim == 5
        np.testing.assert_allclose(eval_activated_batch(total, xs), expected,
                                   rtol=1e-10, atol=1e-12)

  def test_label_leg_errors(self):
    """Shared slots need equal label dims and both summands need a label leg."""
    with self.assertRaises(ShapeError):
      direct_sum(Mps.random(3, 2, label_dim=2, seed=0), Mps.random(3, 2, label_dim=3, seed=0),
                 labels=LABEL_SHARED)
    with self.assertRaises(ShapeError):
      direct_sum(Mps.random(3, 2, label_dim=2, seed=0), Mps.random(3, 2, seed=1))

  def test_add_shared_kernel(self):
    """Shared-kernel sums keep phys dims and agree with add."""
    a = random_activated(6, chi=2)
    b = random_activated(7, chi=3)
    xs = sample_points(4, 200, seed=1)
    shared = add_shared_kernel(a, b)
    assert shared.core.phys_dims == [2, 2, 2, 2]
    assert shared.core.bond_dims == [1, 5, 5, 5, 1]
    np.testing.assert_allclose(eval_activated_batch(shared, xs),
                               eval_activated_batch(add(a, b), xs), rtol=1e-12, atol=1e-12)
    doubled = add_shared_kernel(a, a)
    np.testing.assert_allclose(eval_activated_batch(doubled, xs),
                               2 * eval_activated_batch(a, xs), rtol=1e-12, atol=1e-12)

  def test_add_shared_kernel_needs_same_maps(self):
    """Different feature maps are a precondition failure."""
    a = random_activated(0)
    b = random_activated(1, fms=[TrigPair()] * 4)
    with self.assertRaises(PreconditionError):
      add_shared_kernel(a, b)

  def test_parameter_vector_round_trip(self):
    """with_parameters inverts parameter_vector."""
    a = random_activated(8)
    theta = parameter_vector(a)
    b = with_parameters(a, theta)
    xs = sample_points(4, 10)
    np.testing.assert_array_equal(eval_activated_batch(b, xs), eval_activated_batch(a, xs))
    with self.assertRaises(ShapeError):
      with_parameters(a, theta[:-1])
