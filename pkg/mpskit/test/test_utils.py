import os
import unittest
from unittest import mock
import numpy as np
from mpskit.utils import all_rows
from mpskit.utils import bits_to_int
from mpskit.utils import chunk_ranges
from mpskit.utils import int_to_bits
from mpskit.utils import worker_count
from mpskit.utils import Timer


class TestUtils(unittest.TestCase):
  """
  Basic tests for utils functions
  """

  def test_bits_round_trip(self):
    """X1 is the most significant bit of the row index."""
    assert int_to_bits(4, 3) == (1, 0, 0)
    assert int_to_bits(1, 3) == (0, 0, 1)
    for r in range(16):
      assert bits_to_int(int_to_bits(r, 4)) == r

  def test_all_rows(self):
    """Rows come in ascending order."""
    rows = all_rows(3)
    assert rows.shape == (8, 3)
    np.testing.assert_array_equal(rows[5], [1, 0, 1])
    for r, row in enumerate(rows):
      assert bits_to_int(row) == r

  def test_chunk_ranges(self):
    """Chunks cover the range in order."""
    chunks = chunk_ranges(10, 4)
    assert [list(c) for c in chunks] == [[0, 1, 2, 3], [4, 5, 6, 7], [8, 9]]
    assert chunk_ranges(0, 4) == []

  def test_worker_count_cap(self):
    """MPSKIT_THREADS caps the worker count."""
    with mock.patch.dict(os.environ, {"MPSKIT_THREADS": "1"}):
      assert worker_count() == 1
    with mock.patch.dict(os.environ, {"MPSKIT_THREADS": "not a number"}):
      assert worker_count() >= 1

  def test_timer(self):
    """Timer records a nonnegative elapsed time."""
    with Timer() as timer:
      sum(range(100))
    assert timer.elapsed >= 0
