"""Activated MPS and the vector space operations on them.

An ActivatedMps evaluates

  Psi(x) = sum_l W[l] * sigma(Psi_core^l(x))

where Psi_core is an MPS with a label leg of dimension D. sigma None is the
identity, used for linear models and for comparisons on the pre-activation.

Sums are built from block-diagonal direct sums of the cores. At every site the
phys components of the summands are stacked (|s| = |p| + |q|) and the bond
blocks are placed on the diagonal (|alpha| = |beta| + |gamma|); at open ends
the single trivial bond is shared.
"""
import logging
import math
from typing import List
from typing import Optional
from typing import Sequence
import numpy as np
from mpskit.activation import ScaleInvariantSigmoid
from mpskit.activation import SigmoidForm
from mpskit.contraction import check_feature_maps
from mpskit.contraction import contract
from mpskit.contraction import contract_batch
from mpskit.errors import IncompatibleActivationError
from mpskit.errors import NumericError
from mpskit.errors import PreconditionError
from mpskit.errors import ShapeError
from mpskit.errors import UnsupportedReparameterizationError
from mpskit.feature_maps import FeatureMap
from mpskit.feature_maps import concatenate
from mpskit.feature_maps import constant_one
from mpskit.mps import Boundary
from mpskit.mps import Mps
from mpskit.mps import SiteTensor
from mpskit.mps import attach_label
from mpskit.mps import default_label_site
from mpskit.mps import move_label

logger = logging.getLogger(__name__)

LABEL_CONCAT = "concat"
LABEL_SHARED = "shared"


class ActivatedMps(object):
  """Sum over label slots of activated MPS outputs.

  Parameters
  ----------
  core: Mps
    Must carry a label leg of dimension D >= 1.
  out_weights: array-like
    The D output weights W.
  sigma: ScaleInvariantSigmoid or None
    None evaluates the identity.
  fms: list of FeatureMap
    One per site, matching the core's phys dims.
  """

  def __init__(self, core: Mps, out_weights, sigma: Optional[ScaleInvariantSigmoid],
               fms: Sequence[FeatureMap]):
    if core.label_site is None:
      raise ShapeError("the core of an activated MPS needs a label leg")
    out_weights = np.array(out_weights, dtype=float).reshape(-1)
    if len(out_weights) != core.label_dim:
      raise ShapeError("%d output weights for label dimension %d" %
                       (len(out_weights), core.label_dim))
    if not np.all(np.isfinite(out_weights)):
      raise NumericError("output weights must be finite")
    fms = list(fms)
    check_feature_maps(core, fms)
    out_weights.flags.writeable = False
    self.core = core
    self.out_weights = out_weights
    self.sigma = sigma
    self.fms = fms

  @property
  def n_sites(self) -> int:
    return self.core.n_sites

  @property
  def label_dim(self) -> int:
    return self.core.label_dim

  def activate(self, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if self.sigma is None:
      return z
    return self.sigma(z)

  def __call__(self, x) -> float:
    return eval_activated(self, x)

  def __repr__(self):
    return "ActivatedMps(core=%r, sigma=%r)" % (self.core, self.sigma)

  @classmethod
  def zero_like(cls, a: "ActivatedMps") -> "ActivatedMps":
    """The constant-zero function with a's sites, sigma and feature maps."""
    label_site = a.core.label_site
    core = Mps.zeros(a.core.phys_dims, label_dim=1, label_site=label_site,
                     boundary=a.core.boundary)
    return cls(core, [0.0], a.sigma, a.fms)


def as_activated(mps: Mps, fms: Sequence[FeatureMap],
                 sigma: Optional[ScaleInvariantSigmoid] = None,
                 out_weights=None) -> ActivatedMps:
  """Wraps an MPS, adding a label leg of dimension one when it has none."""
  if mps.label_site is None:
    mps = attach_label(mps, default_label_site(mps.n_sites), 1)
  if out_weights is None:
    out_weights = np.ones(mps.label_dim)
  return ActivatedMps(mps, out_weights, sigma, fms)


def eval_activated(a: ActivatedMps, x) -> float:
  """sum_l W[l] * sigma(Psi_core^l(x)).

  Overflowing exponentials saturate to the sigmoid's limits, so the result is
  finite for finite inputs.
  """
  z = contract(a.core, a.fms, x)
  return float(a.out_weights @ a.activate(z.astype(float)))


def eval_activated_batch(a: ActivatedMps, xs) -> np.ndarray:
  z = contract_batch(a.core, a.fms, xs)
  if len(z) == 0:
    return np.zeros(0)
  return a.activate(z.astype(float)) @ a.out_weights


def pre_activation_batch(a: ActivatedMps, xs) -> np.ndarray:
  """Core outputs, shape (B, D)."""
  return contract_batch(a.core, a.fms, xs).astype(float)


def _block_site(ta: np.ndarray, tb: np.ndarray, open_left: bool, open_right: bool,
                labels: Optional[str], shared_kernel: bool) -> np.ndarray:
  """Direct sum of two order-4 site arrays (label, phys, left, right)."""
  la_dim, pa, la, ra = ta.shape
  lb_dim, pb, lb, rb = tb.shape
  if labels == LABEL_CONCAT:
    label = la_dim + lb_dim
    a_lab, b_lab = slice(0, la_dim), slice(la_dim, label)
  else:
    if la_dim != lb_dim:
      raise ShapeError("shared label legs need equal dimensions, got %d and %d" %
                       (la_dim, lb_dim))
    label = la_dim
    a_lab = b_lab = slice(0, label)
  if shared_kernel:
    if pa != pb:
      raise PreconditionError("shared kernel needs equal phys dims, got %d and %d"
                              % (pa, pb))
    phys = pa
    a_phys = b_phys = slice(0, pa)
  else:
    phys = pa + pb
    a_phys, b_phys = slice(0, pa), slice(pa, phys)
  if open_left:
    left = 1
    a_left = b_left = slice(0, 1)
  else:
    left = la + lb
    a_left, b_left = slice(0, la), slice(la, left)
  if open_right:
    right = 1
    a_right = b_right = slice(0, 1)
  else:
    right = ra + rb
    a_right, b_right = slice(0, ra), slice(ra, right)
  out = np.zeros((label, phys, left, right), dtype=np.result_type(ta, tb))
  out[a_lab, a_phys, a_left, a_right] += ta
  out[b_lab, b_phys, b_left, b_right] += tb
  return out


def direct_sum(a: Mps, b: Mps, labels: str = LABEL_CONCAT,
               shared_kernel: bool = False) -> Mps:
  """Block-diagonal sum of two MPS over the same sites.

  Parameters
  ----------
  a, b: Mps
    Same site count and boundary. When the label legs sit on different sites
    the leg of b is moved onto the label site of a first.
  labels: str
    'concat' stacks the label slots (D = D_a + D_b, slot l of the result
    reproduces one summand); 'shared' requires D_a == D_b and adds the
    summands slot by slot.
  shared_kernel: bool
    Keep the phys dims (the feature maps must coincide) instead of stacking
    the phys components.
  """
  if a.n_sites != b.n_sites:
    raise ShapeError("cannot sum MPS of %d and %d sites" % (a.n_sites, b.n_sites))
  if a.boundary is not b.boundary:
    raise ShapeError("cannot sum %s and %s boundaries" %
                     (a.boundary.value, b.boundary.value))
  if labels not in (LABEL_CONCAT, LABEL_SHARED):
    raise ValueError("labels must be 'concat' or 'shared', got %r" % (labels,))
  if (a.label_site is None) != (b.label_site is None):
    raise ShapeError("only one summand carries a label leg")
  if a.label_site != b.label_site:
    logger.debug("Moving label leg from site %d to %d", b.label_site, a.label_site)
    b = move_label(b, a.label_site)
  label_site = a.label_site
  open_ = a.boundary is Boundary.OPEN
  n = a.n_sites
  sites = []
  for i, (sa, sb) in enumerate(zip(a.sites, b.sites)):
    mode = labels if i == label_site else LABEL_SHARED
    block = _block_site(sa.tensor, sb.tensor, open_ and i == 0,
                        open_ and i == n - 1, mode, shared_kernel)
    if i != label_site:
      block = block[0]
    sites.append(SiteTensor(block))
  return Mps(sites, boundary=a.boundary, label_site=label_site)


def _check_summands(a: ActivatedMps, b: ActivatedMps):
  if a.n_sites != b.n_sites:
    raise ShapeError("cannot add models of %d and %d sites" % (a.n_sites, b.n_sites))
  if a.sigma != b.sigma:
    raise IncompatibleActivationError("cannot add models with %r and %r" %
                                      (a.sigma, b.sigma))


def add(a: ActivatedMps, b: ActivatedMps) -> ActivatedMps:
  """The model computing a(x) + b(x), over the concatenated feature maps."""
  _check_summands(a, b)
  core = direct_sum(a.core, b.core, labels=LABEL_CONCAT)
  fms = [concatenate(fa, fb) for fa, fb in zip(a.fms, b.fms)]
  weights = np.concatenate([a.out_weights, b.out_weights])
  logger.debug("Added models: bonds %s + %s -> %s", a.core.bond_dims,
               b.core.bond_dims, core.bond_dims)
  return ActivatedMps(core, weights, a.sigma, fms)


def add_shared_kernel(a: ActivatedMps, b: ActivatedMps) -> ActivatedMps:
  """As add, keeping the phys dims when both models use the same feature maps."""
  _check_summands(a, b)
  for i, (fa, fb) in enumerate(zip(a.fms, b.fms)):
    if fa != fb:
      raise PreconditionError("feature maps differ at site %d: %r and %r" %
                              (i, fa, fb))
  core = direct_sum(a.core, b.core, labels=LABEL_CONCAT, shared_kernel=True)
  weights = np.concatenate([a.out_weights, b.out_weights])
  return ActivatedMps(core, weights, a.sigma, a.fms)


def scale(a: ActivatedMps, k: float) -> ActivatedMps:
  """The model computing k * a(x), carried by the output weights."""
  return ActivatedMps(a.core, a.out_weights * float(k), a.sigma, a.fms)


def _constant_shift(core: Mps, shift: float) -> Mps:
  """chi=1 MPS of phys dim 1 whose every label slot evaluates to shift."""
  sites = []
  for i in range(core.n_sites):
    if i == core.label_site:
      sites.append(np.full((core.label_dim, 1, 1, 1), shift))
    else:
      sites.append(np.ones((1, 1, 1)))
  return Mps(sites, boundary=core.boundary, label_site=core.label_site)


def scale_via_C(a: ActivatedMps, k: float) -> ActivatedMps:
  """The model computing k * a(x), by reparameterizing the sigmoid.

  ScaledLogistic: k C / (1 + e^-z) is the same form with C' = k C.
  ReciprocalShift: k / (C + e^z) = 1 / (C/k + e^(z - ln k)), so C' = C / k and
  every label slot of the core is shifted by -ln k. The shift is a constant
  chi=1 MPS added slot by slot, which appends a constant feature to each site.
  """
  k = float(k)
  if a.sigma is None:
    raise UnsupportedReparameterizationError("the identity has no constant to rescale")
  if not k > 0:
    raise UnsupportedReparameterizationError(
        "C reparameterization needs k > 0, got %r" % k)
  sigma = a.sigma
  if sigma.form is SigmoidForm.SCALED_LOGISTIC:
    return ActivatedMps(a.core, a.out_weights,
                        ScaleInvariantSigmoid(sigma.form, sigma.C * k), a.fms)
  shift = _constant_shift(a.core, -math.log(k))
  core = direct_sum(a.core, shift, labels=LABEL_SHARED)
  fms = [concatenate(fm, constant_one()) for fm in a.fms]
  return ActivatedMps(core, a.out_weights,
                      ScaleInvariantSigmoid(sigma.form, sigma.C / k), fms)


def parameter_vector(a: ActivatedMps) -> np.ndarray:
  """All core entries (site by site, row-major) followed by the output weights."""
  parts = [s.tensor.astype(float).reshape(-1) for s in a.core.sites]
  parts.append(a.out_weights)
  return np.concatenate(parts)


def with_parameters(a: ActivatedMps, theta: np.ndarray) -> ActivatedMps:
  """Inverse of parameter_vector: a copy of a holding the given parameters."""
  theta = np.asarray(theta, dtype=float)
  expected = sum(s.tensor.size for s in a.core.sites) + len(a.out_weights)
  if len(theta) != expected:
    raise ShapeError("expected %d parameters, got %d" % (expected, len(theta)))
  sites: List[SiteTensor] = []
  offset = 0
  for s in a.core.sites:
    size = s.tensor.size
    block = theta[offset:offset + size].reshape(s.tensor.shape)
    sites.append(SiteTensor(block if s.label_dim else block[0]))
    offset += size
  core = Mps(sites, boundary=a.core.boundary, label_site=a.core.label_site)
  return ActivatedMps(core, theta[offset:], a.sigma, a.fms)
