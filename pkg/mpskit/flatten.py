"""Flattening an MPS into its equivalent one-hidden-layer network.

Contracting every bond index leaves a weight matrix W[l, s] over the product
feature space, s running over all multi-indices (s_1, ..., s_n) with site 1
varying slowest. The network then evaluates

  Psi(x) = sum_l W2[l] * sigma(sum_s W[l, s] * Phi_s(x))

with Phi(x) the Kronecker product of the per-site feature vectors.
"""
import itertools
import logging
from typing import List
from typing import Optional
from typing import Sequence
from typing import Union
import numpy as np
import sympy
from mpskit.activation import ScaleInvariantSigmoid
from mpskit.algebra import ActivatedMps
from mpskit.contraction import check_feature_maps
from mpskit.errors import NumericError
from mpskit.errors import ShapeError
from mpskit.errors import SizeError
from mpskit.errors import UnsupportedNamingError
from mpskit.feature_maps import AffineOne
from mpskit.feature_maps import BinaryIndicator
from mpskit.feature_maps import FeatureMap
from mpskit.mps import Boundary
from mpskit.mps import Mps
from mpskit.numbertype import Dims
from mpskit.numbertype import MultiIndex
from mpskit.numbertype import INT_EXACT_LIMIT
from mpskit.utils import Timer

logger = logging.getLogger(__name__)

# Largest product-feature dimension S flatten will materialize.
MAX_KERNEL_SIZE = 2**20


def multi_index_table(dims: Dims) -> List[MultiIndex]:
  """Every multi-index over dims, site 1 slowest."""
  return list(itertools.product(*[range(d) for d in dims]))


def multi_index(flat: int, dims: Dims) -> MultiIndex:
  """The multi-index at a flat kernel position."""
  size = int(np.prod(dims))
  if not 0 <= flat < size:
    raise ShapeError("flat index %d out of range for size %d" % (flat, size))
  out = []
  for d in reversed(dims):
    out.append(flat % d)
    flat //= d
  return tuple(reversed(out))


def flat_index(index: Sequence[int], dims: Dims) -> int:
  """Inverse of multi_index."""
  if len(index) != len(dims):
    raise ShapeError("multi-index of length %d for %d sites" % (len(index), len(dims)))
  flat = 0
  for s, d in zip(index, dims):
    if not 0 <= s < d:
      raise ShapeError("component %d out of range for dimension %d" % (s, d))
    flat = flat * d + s
  return flat


class FlatNetwork(object):
  """Weights over the product feature space.

  Fields
  ------
  weights: np.ndarray
    W[l, s], shape (D, S) with D = 1 for an MPS without label leg.
  phys_dims: list of int
    Per-site feature dimensions, S is their product.
  fms: list of FeatureMap
  sigma, out_weights:
    Present when the network came from an ActivatedMps.
  """

  def __init__(self, weights, phys_dims: Dims, fms: Sequence[FeatureMap],
               sigma: Optional[ScaleInvariantSigmoid] = None, out_weights=None,
               activated: bool = False):
    weights = np.array(weights)
    if weights.ndim != 2:
      raise ShapeError("flat weights must be a matrix, got shape %s" % (weights.shape,))
    size = int(np.prod(phys_dims))
    if weights.shape[1] != size:
      raise ShapeError("weights have %d columns for kernel size %d" %
                       (weights.shape[1], size))
    if weights.dtype != object and not np.all(np.isfinite(weights)):
      raise NumericError("flat weights must be finite")
    fms = list(fms)
    if [fm.dim for fm in fms] != list(phys_dims):
      raise ShapeError("feature maps do not match phys dims %s" % (phys_dims,))
    if out_weights is not None:
      out_weights = np.asarray(out_weights, dtype=float).reshape(-1)
      if len(out_weights) != weights.shape[0]:
        raise ShapeError("%d output weights for %d hidden units" %
                         (len(out_weights), weights.shape[0]))
    self.weights = weights
    self.phys_dims = list(phys_dims)
    self.fms = fms
    self.sigma = sigma
    self.out_weights = out_weights
    self.activated = activated or out_weights is not None

  @property
  def hidden_dim(self) -> int:
    return self.weights.shape[0]

  @property
  def kernel_size(self) -> int:
    return self.weights.shape[1]

  @property
  def kernel(self) -> List[MultiIndex]:
    """Kernel descriptor: the multi-index of every column."""
    return multi_index_table(self.phys_dims)


def _kernel_size_guard(phys_dims: Dims) -> int:
  size = 1
  for d in phys_dims:
    size *= d
  if size > MAX_KERNEL_SIZE:
    raise SizeError("flat kernel size S", size, MAX_KERNEL_SIZE)
  return size


def _weight_dtype(mps: Mps):
  """int64 when a bound on every partial product stays below INT_EXACT_LIMIT."""
  if not mps.is_integer:
    return float
  if any(s.tensor.dtype == object for s in mps.sites):
    return object
  bound = 1
  for site in mps.sites:
    t = np.abs(site.tensor.astype(object))
    # max over (label, phys, left) of the row sum over right
    bound *= max(int(t.sum(axis=3).max()), 1)
    if bound >= INT_EXACT_LIMIT:
      return object
  if mps.boundary is Boundary.PERIODIC:
    bound *= mps.sites[0].left_bond
  return np.int64 if bound < INT_EXACT_LIMIT else object


def flatten_mps(mps: Mps) -> np.ndarray:
  """W[l, s] for an MPS, shape (max(D, 1), S).

  Integer chains stay exact: int64 while the entries provably fit, python
  integers otherwise.
  """
  _kernel_size_guard(mps.phys_dims)
  dtype = _weight_dtype(mps)
  env = mps.sites[0].tensor.astype(dtype)
  for site in mps.sites[1:]:
    t = site.tensor.astype(dtype)
    # (L, S, a, b) x (M, d, b, c) -> (L, S, a, M, d, c)
    joined = np.tensordot(env, t, axes=([3], [2]))
    joined = joined.transpose(0, 3, 1, 4, 2, 5)
    shape = joined.shape
    env = joined.reshape(shape[0] * shape[1], shape[2] * shape[3], shape[4], shape[5])
  if mps.boundary is Boundary.PERIODIC:
    return np.trace(env, axis1=2, axis2=3)
  return env[:, :, 0, 0]


def flatten(a: Union[Mps, ActivatedMps],
            fms: Optional[Sequence[FeatureMap]] = None) -> FlatNetwork:
  """Contracts all bond indices.

  Parameters
  ----------
  a: Mps or ActivatedMps
    For an ActivatedMps the feature maps, sigma and output weights are
    carried over.
  fms: list of FeatureMap
    Required for a plain Mps.

  Returns
  -------
  FlatNetwork whose pre-activation equals the contraction of a at every x.
  Raises SizeError when S = prod d_i exceeds MAX_KERNEL_SIZE.
  """
  with Timer() as timer:
    if isinstance(a, ActivatedMps):
      weights = flatten_mps(a.core)
      flat = FlatNetwork(weights, a.core.phys_dims, a.fms, a.sigma, a.out_weights,
                         activated=True)
    else:
      if fms is None:
        raise ShapeError("flattening a plain MPS needs its feature maps")
      check_feature_maps(a, fms)
      weights = flatten_mps(a)
      flat = FlatNetwork(weights, a.phys_dims, fms)
  logger.info("Flattened %d sites to a %d x %d network in %.4f sec",
              len(flat.phys_dims), flat.hidden_dim, flat.kernel_size, timer.elapsed)
  return flat


def product_features(fms: Sequence[FeatureMap], x) -> np.ndarray:
  """Phi(x): the Kronecker product of the per-site feature vectors."""
  x = np.asarray(x, dtype=float).reshape(-1)
  if len(x) != len(fms):
    raise ShapeError("input of length %d for %d sites" % (len(x), len(fms)))
  if not np.all(np.isfinite(x)):
    raise NumericError("non-finite input %s" % (x,))
  exact = [fm.exact(int(v)) if v == round(v) else None for fm, v in zip(fms, x)]
  if all(e is not None for e in exact):
    phi = np.array([1], dtype=object)
    for e in exact:
      phi = np.kron(phi, np.array(e, dtype=object))
    return phi
  phi = np.ones(1)
  for fm, v in zip(fms, x):
    phi = np.kron(phi, fm(v))
  return phi


def product_features_batch(fms: Sequence[FeatureMap], xs) -> np.ndarray:
  """Phi for every row of xs, shape (B, S)."""
  xs = np.asarray(xs, dtype=float)
  if xs.ndim != 2 or xs.shape[1] != len(fms):
    raise ShapeError("inputs must have shape (B, %d), got %s" % (len(fms), xs.shape))
  phi = np.ones((len(xs), 1))
  for i, fm in enumerate(fms):
    f = fm.evaluate_many(xs[:, i])
    phi = (phi[:, :, None] * f[:, None, :]).reshape(len(xs), -1)
  return phi


def _finish(f: FlatNetwork, z: np.ndarray):
  if not f.activated:
    return z
  z = np.asarray(z, dtype=float)
  activated = z if f.sigma is None else f.sigma(z)
  return activated @ f.out_weights


def evaluate_flat(f: FlatNetwork, x):
  """Pre-activation D-vector, or the activated scalar for an activated network."""
  phi = product_features(f.fms, x)
  if phi.dtype == object and f.weights.dtype.kind in "iuO":
    z = f.weights.astype(object) @ phi
  else:
    z = f.weights.astype(float) @ phi.astype(float)
  if not f.activated:
    return z
  return float(_finish(f, z))


def evaluate_flat_batch(f: FlatNetwork, xs) -> np.ndarray:
  """Floating point evaluation on every row; (B, D) or (B,) when activated."""
  phi = product_features_batch(f.fms, xs)
  z = phi @ f.weights.astype(float).T
  return _finish(f, z)


def _site_names(fm: FeatureMap, i: int) -> List[str]:
  if isinstance(fm, AffineOne):
    return ["x%d" % i, "1"]
  if isinstance(fm, BinaryIndicator):
    return ["x%d" % i, "(1-x%d)" % i]
  raise UnsupportedNamingError(
      "site %d: no monomial names for %s feature maps" % (i, fm.kind))


def named_kernel(f: FlatNetwork) -> List[str]:
  """Human readable monomial for every kernel slot, in column order."""
  names = [_site_names(fm, i + 1) for i, fm in enumerate(f.fms)]
  out = []
  for index in f.kernel:
    factors = [names[i][s] for i, s in enumerate(index) if names[i][s] != "1"]
    out.append("*".join(factors) if factors else "1")
  return out


def _sympy_coefficient(c: float):
  if c == round(c):
    return sympy.Integer(int(round(c)))
  return sympy.Float(c)


def symbolic_kernel(f: FlatNetwork) -> List[sympy.Expr]:
  """Phi_s(x) as sympy expressions in x1..xn, for any feature maps."""
  symbols = sympy.symbols("x1:%d" % (len(f.fms) + 1))
  per_site = []
  for fm, x in zip(f.fms, symbols):
    basis = [sympy.Integer(1), x, x**2, x**3, sympy.sin(x), sympy.cos(x)]
    components = []
    for row in fm.coefficient_rows():
      components.append(sum((_sympy_coefficient(c) * b for c, b in zip(row, basis)
                             if c != 0), sympy.Integer(0)))
    per_site.append(components)
  out = []
  for index in f.kernel:
    term = sympy.Integer(1)
    for i, s in enumerate(index):
      term = term * per_site[i][s]
    out.append(sympy.expand(term))
  return out
