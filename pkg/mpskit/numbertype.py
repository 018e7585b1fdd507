"""
Numeric constants and the array type aliases used across the package.
"""
from typing import List
from typing import Tuple
import numpy as np


# The widest real type the hardware offers. Floating point contraction
# accumulates in it.
REAL = np.longdouble

# Largest magnitude for which int64 contraction stays exact.
INT_EXACT_LIMIT = 2**62

# A real vector, e.g. a feature vector phi(x_i) or an input x.
Vector = np.ndarray

# A dense order-4 site array (label, phys, left, right).
Tensor = np.ndarray

# Per-site component indices (s_1, ..., s_n) of the product basis.
MultiIndex = Tuple[int, ...]

# Rows of a truth table, X_1 first.
Bits = Tuple[int, ...]

Dims = List[int]


def is_integer_array(a: np.ndarray) -> bool:
  """True when the array holds integers (numpy ints or python ints)."""
  if a.dtype.kind in "iub":
    return True
  if a.dtype == object:
    return all(isinstance(v, (int, np.integer)) for v in a.flat)
  return False
