"""Contraction-based evaluation of an MPS on input vectors.

Each site tensor is first contracted with its feature vector, giving one
chi_l x chi_r matrix per label slot, and the matrices are multiplied along the
chain. The d^n product kernel is never materialized.

Inputs that are integers, evaluated with integer-valued feature maps against
an integer MPS, take an exact integer path: int64 when a bound on the result
fits, python integers otherwise. Everything else accumulates in REAL.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List
from typing import Optional
from typing import Sequence
import numpy as np
from mpskit.errors import BatchItemError
from mpskit.errors import MpsError
from mpskit.errors import NumericError
from mpskit.errors import ShapeError
from mpskit.feature_maps import FeatureMap
from mpskit.mps import Boundary
from mpskit.mps import Mps
from mpskit.numbertype import INT_EXACT_LIMIT
from mpskit.numbertype import REAL
from mpskit.utils import chunk_ranges
from mpskit.utils import worker_count

logger = logging.getLogger(__name__)

BATCH_CHUNK = 4096


def check_feature_maps(mps: Mps, fms: Sequence[FeatureMap]):
  if len(fms) != mps.n_sites:
    raise ShapeError("got %d feature maps for %d sites" % (len(fms), mps.n_sites))
  for i, (fm, site) in enumerate(zip(fms, mps.sites)):
    fm.validate()
    if fm.dim != site.phys_dim:
      raise ShapeError("site %d: feature map dim %d != phys dim %d" %
                       (i, fm.dim, site.phys_dim))


def check_input(mps: Mps, x) -> np.ndarray:
  x = np.asarray(x, dtype=float).reshape(-1)
  if len(x) != mps.n_sites:
    raise ShapeError("input of length %d for %d sites" % (len(x), mps.n_sites))
  if not np.all(np.isfinite(x)):
    raise NumericError("non-finite input %s" % (x,))
  return x


def _integer_features(mps: Mps, fms: Sequence[FeatureMap],
                      xs: np.ndarray) -> Optional[List[np.ndarray]]:
  """Integer feature arrays per site, or None if the exact path is unavailable."""
  if not mps.is_integer or not np.all(xs == np.round(xs)):
    return None
  small = bool(np.all(np.abs(xs) < 2**20))
  feats = []
  for i, fm in enumerate(fms):
    rows = fm.integer_rows()
    if rows is None:
      return None
    if small:
      x = xs[:, i].astype(np.int64)
      powers = np.stack([np.ones_like(x), x, x * x, x * x * x], axis=-1)
      feats.append((powers @ rows.T).astype(object))
    else:
      feats.append(np.array([fm.exact(int(x)) for x in xs[:, i]],
                            dtype=object).reshape(len(xs), fm.dim))
  return feats


def _exact_dtype(mps: Mps, feats: List[np.ndarray]):
  """int64 if a bound on every partial product stays below INT_EXACT_LIMIT."""
  bound = 1
  for site, f in zip(mps.sites, feats):
    t = np.abs(site.tensor.astype(object))
    fmax = int(np.abs(f).max()) if f.size else 0
    # max over label and left index of the row sum over (phys, right)
    row = t.sum(axis=(1, 3)).max() * fmax
    bound *= max(int(row), 1)
    if bound >= INT_EXACT_LIMIT:
      return object
  if mps.boundary is Boundary.PERIODIC:
    bound *= mps.sites[0].left_bond
  if bound < INT_EXACT_LIMIT:
    return np.int64
  return object


def _chain(mps: Mps, feats: List[np.ndarray], dtype, direction: str) -> np.ndarray:
  """Multiplies the per-site matrices for a batch; returns shape (B, output_dim)."""
  batch = feats[0].shape[0]
  mats = []
  for site, f in zip(mps.sites, feats):
    t = site.tensor.astype(dtype)
    mats.append(np.tensordot(f.astype(dtype), t, axes=([1], [1])))
  if direction == "left":
    chi = mps.sites[0].left_bond
    env = np.broadcast_to(np.eye(chi, dtype=int).astype(dtype),
                          (batch, 1, chi, chi))
    for m in mats:
      env = np.matmul(env, m)
  elif direction == "right":
    chi = mps.sites[-1].right_bond
    env = np.broadcast_to(np.eye(chi, dtype=int).astype(dtype),
                          (batch, 1, chi, chi))
    for m in reversed(mats):
      env = np.matmul(m, env)
  else:
    raise ValueError("direction must be 'left' or 'right', got %r" % (direction,))
  if mps.boundary is Boundary.PERIODIC:
    out = np.trace(env, axis1=2, axis2=3)
  else:
    out = env[:, :, 0, 0]
  return out.reshape(batch, mps.output_dim)


def _contract_rows(mps: Mps, fms: Sequence[FeatureMap], xs: np.ndarray,
                   direction: str) -> np.ndarray:
  feats = _integer_features(mps, fms, xs)
  if feats is not None:
    dtype = _exact_dtype(mps, feats)
    return _chain(mps, feats, dtype, direction)
  feats = [fm.evaluate_many(xs[:, i]) for i, fm in enumerate(fms)]
  out = _chain(mps, feats, REAL, direction)
  return out.astype(float)


def contract(mps: Mps, fms: Sequence[FeatureMap], x,
             direction: str = "left") -> np.ndarray:
  """Evaluates Psi^l(x) for every label slot l.

  Parameters
  ----------
  mps: Mps
    The tensor chain.
  fms: list of FeatureMap
    One feature map per site, fms[i].dim == mps.sites[i].phys_dim.
  x: array-like
    Input of length n.
  direction: str
    'left' multiplies left-to-right, 'right' right-to-left.

  Returns
  -------
  Vector of length D (1 when the MPS has no label leg).
  """
  check_feature_maps(mps, fms)
  x = check_input(mps, x)
  return _contract_rows(mps, fms, x[None, :], direction)[0]


def contract_batch(mps: Mps, fms: Sequence[FeatureMap], xs,
                   direction: str = "left") -> np.ndarray:
  """Evaluates contract on every row of xs, preserving order.

  Returns an array of shape (len(xs), D). The first invalid row is reported as
  a BatchItemError carrying its index.
  """
  check_feature_maps(mps, fms)
  rows = list(xs)
  if len(rows) == 0:
    return np.zeros((0, mps.output_dim))
  checked = []
  for i, x in enumerate(rows):
    try:
      checked.append(check_input(mps, x))
    except MpsError as e:
      raise BatchItemError(i, e) from e
  xs = np.stack(checked)
  chunks = chunk_ranges(len(xs), BATCH_CHUNK)
  workers = min(worker_count(), len(chunks))
  if workers <= 1:
    parts = [_contract_rows(mps, fms, xs[c.start:c.stop], direction)
             for c in chunks]
  else:
    logger.debug("Contracting %d inputs in %d chunks on %d workers",
                 len(xs), len(chunks), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
      parts = list(pool.map(
          lambda c: _contract_rows(mps, fms, xs[c.start:c.stop], direction),
          chunks))
  kinds = set(p.dtype.kind for p in parts)
  if "f" in kinds:
    parts = [p.astype(float) for p in parts]
  elif len(set(p.dtype for p in parts)) > 1:
    parts = [p.astype(object) for p in parts]
  return np.concatenate(parts, axis=0)
