r"""Dense matrix product states.

A site tensor is stored as an order-4 array indexed (label, phys, left, right).
Sites without a label leg keep a leading axis of size one, so contraction code
never has to special case them. label_dim == 0 means "no label leg"; a label
leg of dimension one is a different thing (it is reported as label_dim 1).

  +---+   +---+         +---+
  | 1 |---| 2 |-- ... --| n |
  +---+   +---+         +---+
    |       |  \          |
   s_1     s_2  l        s_n
"""
import enum
import math
from typing import List
from typing import Optional
from typing import Sequence
import numpy as np
from mpskit.errors import NumericError
from mpskit.errors import ShapeError
from mpskit.numbertype import is_integer_array
from mpskit.numbertype import Tensor


class Boundary(enum.Enum):
  OPEN = "open"
  PERIODIC = "periodic"


def _as_storage(array) -> np.ndarray:
  """Integer data stays integral, everything else becomes float64."""
  a = np.array(array)
  if a.dtype == bool:
    a = a.astype(np.int64)
  if a.dtype.kind in "iu":
    return a.astype(np.int64)
  if a.dtype == object and is_integer_array(a):
    return a
  return a.astype(float)


class SiteTensor(object):
  """The tensor A^{(l) s_i}_{alpha_i alpha_{i+1}} of a single site.

  Parameters
  ----------
  array: array-like
    Either an order-3 array (phys, left, right) for a site without label leg,
    or an order-4 array (label, phys, left, right).
  """

  def __init__(self, array):
    a = _as_storage(array)
    if a.ndim == 3:
      self.label_dim = 0
      a = a[None, ...]
    elif a.ndim == 4:
      self.label_dim = a.shape[0]
      if self.label_dim < 1:
        raise ShapeError("label leg must have positive dimension")
    else:
      raise ShapeError("site tensor must have order 3 or 4, got %d" % a.ndim)
    if min(a.shape[1:]) < 1:
      raise ShapeError("site dimensions must be positive, got %s" % (a.shape,))
    if a.dtype != object and not np.all(np.isfinite(a)):
      raise NumericError("site tensor entries must be finite")
    a = a.copy()
    a.flags.writeable = False
    self.tensor: Tensor = a

  @property
  def phys_dim(self) -> int:
    return self.tensor.shape[1]

  @property
  def left_bond(self) -> int:
    return self.tensor.shape[2]

  @property
  def right_bond(self) -> int:
    return self.tensor.shape[3]

  @property
  def data(self) -> np.ndarray:
    """Entries in row-major (label?, phys, left, right) order."""
    return self.tensor.reshape(-1)

  @property
  def is_integer(self) -> bool:
    return is_integer_array(self.tensor)

  def matrices(self) -> np.ndarray:
    """The array without the label axis when there is no label leg."""
    if self.label_dim == 0:
      return self.tensor[0]
    return self.tensor

  def __len__(self):
    return self.tensor.size

  def __eq__(self, other):
    if not isinstance(other, SiteTensor):
      return NotImplemented
    return (self.label_dim == other.label_dim and
            self.tensor.shape == other.tensor.shape and
            bool(np.all(self.tensor == other.tensor)))

  def __repr__(self):
    return "SiteTensor(D=%d, d=%d, chi_l=%d, chi_r=%d)" % (
        self.label_dim, self.phys_dim, self.left_bond, self.right_bond)


def default_label_site(n: int) -> int:
  """Zero-based index of site ceil(n/2)."""
  return max(0, int(math.ceil(n / 2.0)) - 1)


class Mps(object):
  """A chain of site tensors with open or periodic boundary.

  Fields
  ------
  sites: List[SiteTensor]
    Ordered site tensors.
  boundary: Boundary
    OPEN requires trivial end bonds; PERIODIC closes the chain with a trace.
  label_site: Optional[int]
    Index of the single site carrying a label leg, or None.
  """

  def __init__(self, sites: Sequence, boundary: Boundary = Boundary.OPEN,
               label_site: Optional[int] = None):
    sites = [s if isinstance(s, SiteTensor) else SiteTensor(s) for s in sites]
    if len(sites) == 0:
      raise ShapeError("an MPS needs at least one site")
    boundary = Boundary(boundary)
    for i in range(len(sites) - 1):
      if sites[i].right_bond != sites[i + 1].left_bond:
        raise ShapeError("bond mismatch between sites %d and %d: %d != %d" %
                         (i, i + 1, sites[i].right_bond, sites[i + 1].left_bond))
    if boundary is Boundary.OPEN:
      if sites[0].left_bond != 1 or sites[-1].right_bond != 1:
        raise ShapeError("open boundary requires trivial end bonds")
    elif sites[0].left_bond != sites[-1].right_bond:
      raise ShapeError("periodic boundary requires matching end bonds")
    labelled = [i for i, s in enumerate(sites) if s.label_dim > 0]
    if len(labelled) > 1:
      raise ShapeError("at most one site may carry a label leg, got %s" % labelled)
    if label_site is None and labelled:
      label_site = labelled[0]
    if label_site is not None and labelled != [label_site]:
      raise ShapeError("label_site %s does not carry the label leg" % label_site)
    self.sites: List[SiteTensor] = sites
    self.boundary = boundary
    self.label_site = label_site

  @property
  def n_sites(self) -> int:
    return len(self.sites)

  @property
  def phys_dims(self) -> List[int]:
    return [s.phys_dim for s in self.sites]

  @property
  def bond_dims(self) -> List[int]:
    """Left bond of every site followed by the right bond of the last."""
    return [s.left_bond for s in self.sites] + [self.sites[-1].right_bond]

  @property
  def label_dim(self) -> int:
    if self.label_site is None:
      return 0
    return self.sites[self.label_site].label_dim

  @property
  def output_dim(self) -> int:
    """Length of contract()'s result: D, or 1 without label leg."""
    return max(self.label_dim, 1)

  @property
  def is_integer(self) -> bool:
    return all(s.is_integer for s in self.sites)

  def __len__(self):
    return len(self.sites)

  def __iter__(self):
    return iter(self.sites)

  def __getitem__(self, i):
    return self.sites[i]

  def __eq__(self, other):
    if not isinstance(other, Mps):
      return NotImplemented
    return (self.boundary == other.boundary and
            self.label_site == other.label_site and
            len(self.sites) == len(other.sites) and
            all(a == b for a, b in zip(self.sites, other.sites)))

  def __repr__(self):
    return "Mps(n=%d, boundary=%s, bonds=%s, phys=%s, D=%d)" % (
        self.n_sites, self.boundary.value, self.bond_dims, self.phys_dims,
        self.label_dim)

  @classmethod
  def random(cls, n: int, chi: int, d: int = 2, label_dim: int = 0,
             label_site: Optional[int] = None,
             boundary: Boundary = Boundary.OPEN, seed=None, std: float = 1.0,
             phys_dims: Optional[List[int]] = None) -> "Mps":
    """Draws an MPS with i.i.d. Normal(0, std^2) entries.

    seed may be an int or a numpy Generator.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    boundary = Boundary(boundary)
    if phys_dims is None:
      phys_dims = [d] * n
    if label_dim and label_site is None:
      label_site = default_label_site(n)
    sites = []
    for i in range(n):
      left = 1 if (boundary is Boundary.OPEN and i == 0) else chi
      right = 1 if (boundary is Boundary.OPEN and i == n - 1) else chi
      shape = (phys_dims[i], left, right)
      if label_dim and i == label_site:
        shape = (label_dim,) + shape
      sites.append(rng.normal(0.0, std, size=shape))
    return cls(sites, boundary=boundary, label_site=label_site if label_dim else None)

  @classmethod
  def zeros(cls, phys_dims: List[int], label_dim: int = 0,
            label_site: Optional[int] = None,
            boundary: Boundary = Boundary.OPEN) -> "Mps":
    """The chi=1 MPS of the constant zero function (integer entries)."""
    n = len(phys_dims)
    if label_dim and label_site is None:
      label_site = default_label_site(n)
    sites = []
    for i, d in enumerate(phys_dims):
      shape = (d, 1, 1)
      if label_dim and i == label_site:
        shape = (label_dim,) + shape
      sites.append(np.zeros(shape, dtype=np.int64))
    return cls(sites, boundary=boundary,
               label_site=label_site if label_dim else None)


def attach_label(mps: Mps, site: Optional[int] = None, label_dim: int = 1) -> Mps:
  """Adds a label leg at site (default ceil(n/2)), copying the tensor per slot."""
  if mps.label_site is not None:
    raise ShapeError("MPS already carries a label leg at site %d" % mps.label_site)
  if site is None:
    site = default_label_site(mps.n_sites)
  if not 0 <= site < mps.n_sites:
    raise ShapeError("label site %d out of range" % site)
  sites = list(mps.sites)
  base = sites[site].tensor[0]
  sites[site] = SiteTensor(np.repeat(base[None, ...], label_dim, axis=0))
  return Mps(sites, boundary=mps.boundary, label_site=site)


def move_label(mps: Mps, site: int) -> Mps:
  """The same function with its label leg carried to another site.

  Every bond between the old and the new label site grows by a factor D and
  transports the label index with an identity.
  """
  if mps.label_site is None:
    raise ShapeError("MPS carries no label leg to move")
  if not 0 <= site < mps.n_sites:
    raise ShapeError("label site %d out of range" % site)
  start = mps.label_site
  if site == start:
    return mps
  dim = mps.label_dim
  eye = np.eye(dim, dtype=np.int64)
  sites = list(mps.sites)
  lo, hi = min(start, site), max(start, site)
  for i in range(lo + 1, hi):
    t = sites[i].tensor[0]
    d, l, r = t.shape
    # (s, a, b) -> (s, (a, x), (b, y)) with x == y
    wide = t[:, :, None, :, None] * eye[None, None, :, None, :]
    sites[i] = SiteTensor(wide.reshape(d, l * dim, r * dim))
  old = sites[start].tensor
  _, d, l, r = old.shape
  t = sites[site].tensor[0]
  sd, sl, sr = t.shape
  if start < site:
    sites[start] = SiteTensor(old.transpose(1, 2, 3, 0).reshape(d, l, r * dim))
    grown = t[None, :, :, None, :] * eye[:, None, None, :, None]
    sites[site] = SiteTensor(grown.reshape(dim, sd, sl * dim, sr))
  else:
    sites[start] = SiteTensor(old.transpose(1, 2, 0, 3).reshape(d, l * dim, r))
    grown = t[None, :, :, :, None] * eye[:, None, None, None, :]
    sites[site] = SiteTensor(grown.reshape(dim, sd, sl, sr * dim))
  return Mps(sites, boundary=mps.boundary, label_site=site)


def parameter_count(mps: Mps) -> int:
  """Number of stored tensor entries."""
  return sum(len(s) for s in mps.sites)
