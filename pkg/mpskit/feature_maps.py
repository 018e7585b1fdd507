"""Per-site feature maps phi^{s_i}(x_i).

Every map is a small table of coefficient rows over a fixed univariate function
basis (1, x, x^2, x^3, sin x, cos x). Component s of the map is the dot product
of row s with the basis evaluated at x. The named kinds are special tables;
Custom accepts any table, so the concatenation of two maps is always a map.
"""
from typing import Dict
from typing import List
from typing import Optional
import numpy as np
from mpskit.errors import InvalidFeatureMapError
from mpskit.errors import NumericError

FUNCTION_BASIS = ("1", "x", "x^2", "x^3", "sin(x)", "cos(x)")
BASIS_SIZE = len(FUNCTION_BASIS)


def basis_values(xs: np.ndarray) -> np.ndarray:
  """Evaluates the function basis at each x, shape (len(xs), BASIS_SIZE)."""
  xs = np.asarray(xs, dtype=float)
  return np.stack([np.ones_like(xs), xs, xs**2, xs**3, np.sin(xs), np.cos(xs)],
                  axis=-1)


class FeatureMap(object):
  """Abstract class for a per-site feature map."""
  kind = None

  def __init__(self):
    raise NotImplementedError

  @property
  def dim(self) -> int:
    return len(self.coefficient_rows())

  def coefficient_rows(self) -> np.ndarray:
    """Rows over FUNCTION_BASIS, shape (dim, BASIS_SIZE)."""
    raise NotImplementedError

  def validate(self):
    if self.dim == 0:
      raise InvalidFeatureMapError("feature map %s has no components" % self.kind)

  def evaluate_many(self, xs: np.ndarray) -> np.ndarray:
    """Feature vectors for a batch of scalars, shape (len(xs), dim)."""
    return basis_values(xs) @ self.coefficient_rows().T

  def __call__(self, x: float) -> np.ndarray:
    return self.evaluate_many(np.array([x]))[0]

  def integer_rows(self) -> Optional[np.ndarray]:
    """Polynomial rows (1, x, x^2, x^3) as int64, or None.

    Only maps with integer coefficients and no trigonometric terms have an
    integer path.
    """
    rows = self.coefficient_rows()
    if np.any(rows[:, 4:] != 0) or np.any(rows != np.round(rows)):
      return None
    return rows[:, :4].astype(np.int64)

  def exact(self, x: int) -> Optional[List[int]]:
    """Integer feature vector at an integer point, or None if not integral."""
    rows = self.integer_rows()
    if rows is None:
      return None
    powers = [1, x, x * x, x * x * x]
    return [sum(int(c) * p for c, p in zip(row, powers)) for row in rows]

  def to_dict(self) -> Dict:
    return {"kind": self.kind}

  def __eq__(self, other):
    if not isinstance(other, FeatureMap):
      return NotImplemented
    a = self.coefficient_rows()
    b = other.coefficient_rows()
    return a.shape == b.shape and bool(np.all(a == b))

  def __ne__(self, other):
    result = self.__eq__(other)
    if result is NotImplemented:
      return result
    return not result

  def __hash__(self):
    return hash(self.coefficient_rows().tobytes())

  def __repr__(self):
    return "%s(dim=%d)" % (type(self).__name__, self.dim)


class BinaryIndicator(FeatureMap):
  """phi(x) = [x, 1 - x]; on {0,1} this is the indicator of X and of not-X."""
  kind = "binary_indicator"
  _ROWS = np.array([[0, 1, 0, 0, 0, 0], [1, -1, 0, 0, 0, 0]], dtype=float)

  def __init__(self):
    pass

  def coefficient_rows(self) -> np.ndarray:
    return self._ROWS

  def evaluate_many(self, xs):
    xs = np.asarray(xs, dtype=float)
    return np.stack([xs, 1.0 - xs], axis=-1)


class AffineOne(FeatureMap):
  """phi(x) = [x, 1]; the constant component produces the bias terms."""
  kind = "affine_one"
  _ROWS = np.array([[0, 1, 0, 0, 0, 0], [1, 0, 0, 0, 0, 0]], dtype=float)

  def __init__(self):
    pass

  def coefficient_rows(self) -> np.ndarray:
    return self._ROWS

  def evaluate_many(self, xs):
    xs = np.asarray(xs, dtype=float)
    return np.stack([xs, np.ones_like(xs)], axis=-1)


class TrigPair(FeatureMap):
  """phi(x) = [sin x, cos x]."""
  kind = "trig_pair"
  _ROWS = np.array([[0, 0, 0, 0, 1, 0], [0, 0, 0, 0, 0, 1]], dtype=float)

  def __init__(self):
    pass

  def coefficient_rows(self) -> np.ndarray:
    return self._ROWS

  def evaluate_many(self, xs):
    xs = np.asarray(xs, dtype=float)
    return np.stack([np.sin(xs), np.cos(xs)], axis=-1)


class Custom(FeatureMap):
  """An arbitrary table of coefficient rows over FUNCTION_BASIS."""
  kind = "custom"

  def __init__(self, rows, name: Optional[str] = None):
    rows = np.array(rows, dtype=float)
    if rows.size == 0:
      rows = np.zeros((0, BASIS_SIZE))
    if rows.ndim != 2 or rows.shape[1] != BASIS_SIZE:
      raise InvalidFeatureMapError(
          "custom rows must have %d coefficients each" % BASIS_SIZE)
    if not np.all(np.isfinite(rows)):
      raise InvalidFeatureMapError("custom rows must be finite")
    self.rows = rows
    self.name = name

  def coefficient_rows(self) -> np.ndarray:
    return self.rows

  def to_dict(self) -> Dict:
    out = {"kind": self.kind, "rows": self.rows.tolist()}
    if self.name is not None:
      out["name"] = self.name
    return out


def complement() -> Custom:
  """The d=1 map phi(x) = 1 - x used by the NOT gate."""
  return Custom([[1, -1, 0, 0, 0, 0]], name="complement")


def constant_one() -> Custom:
  """The d=1 map phi(x) = 1."""
  return Custom([[1, 0, 0, 0, 0, 0]], name="one")


def concatenate(a: FeatureMap, b: FeatureMap) -> Custom:
  """The map whose components are a's followed by b's."""
  return Custom(np.vstack([a.coefficient_rows(), b.coefficient_rows()]))


def eval_feature(fm: FeatureMap, x_i: float) -> np.ndarray:
  """Evaluates phi^{s_i}(x_i) as a vector of length fm.dim."""
  fm.validate()
  if not np.isfinite(x_i):
    raise NumericError("non-finite input %r" % (x_i,))
  return fm(x_i)


_KINDS = {
    BinaryIndicator.kind: BinaryIndicator,
    AffineOne.kind: AffineOne,
    TrigPair.kind: TrigPair,
}


def feature_map_from_dict(d: Dict) -> FeatureMap:
  kind = d.get("kind")
  if kind in _KINDS:
    return _KINDS[kind]()
  if kind == Custom.kind:
    return Custom(d.get("rows", []), name=d.get("name"))
  raise InvalidFeatureMapError("unknown feature map kind %r" % (kind,))


def feature_map_by_name(name: str) -> FeatureMap:
  """Looks up a named kind, as used on the command line and in configs."""
  aliases = {
      "binary": BinaryIndicator, "binary_indicator": BinaryIndicator,
      "affine": AffineOne, "affine_one": AffineOne,
      "trig": TrigPair, "trig_pair": TrigPair,
  }
  if name not in aliases:
    raise InvalidFeatureMapError("unknown feature map %r" % (name,))
  return aliases[name]()
