import unittest
import numpy as np
from mpskit.numbertype import is_integer_array


class TestNumberType(unittest.TestCase):
  """
  Basic tests for the helpers in numbertype
  """

  def test_is_integer_array(self):
    """Integer detection for numpy and python integers."""
    assert is_integer_array(np.array([1, 2]))
    assert is_integer_array(np.array([2**80, 1], dtype=object))
    assert not is_integer_array(np.array([1.0, 2.0]))
    assert not is_integer_array(np.array([1, 0.5], dtype=object))
