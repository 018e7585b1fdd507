"""Gradient descent fits of activated MPS to targets on [0,1]^n.

The loss is half the mean squared residual over a fixed grid. Gradients with
respect to every site tensor come from left and right environments of the
chain: with L_i the product of the site matrices before site i and R_i the
product after it, Psi^l(x) = tr(L_i M_i R_i) and dPsi^l / dM_i = (R_i L_i)^T.
"""
import dataclasses
import logging
from typing import Callable
from typing import Dict
from typing import List
from typing import Optional
import numpy as np
from mpskit.activation import sigmoid_from_name
from mpskit.algebra import ActivatedMps
from mpskit.algebra import parameter_vector
from mpskit.algebra import with_parameters
from mpskit.config import FitConfig
from mpskit.errors import ConfigError
from mpskit.errors import NumericError
from mpskit.errors import PreconditionError
from mpskit.errors import ShapeError
from mpskit.feature_maps import AffineOne
from mpskit.feature_maps import feature_map_by_name
from mpskit.mps import Mps
from mpskit.mps import default_label_site
from mpskit.utils import Timer

logger = logging.getLogger(__name__)

GRAD_CHECK_TOLERANCE = 1e-4
GRAD_CHECK_PARAMETERS = 20
GRAD_CHECK_POINTS = 16
MAX_HALVINGS = 30


class Target(object):
  """A named function on [0,1]^n, evaluated row by row."""

  def __init__(self, name: str, n_sites: int, fn: Callable[[np.ndarray], np.ndarray]):
    self.name = name
    self.n_sites = n_sites
    self.fn = fn

  def __call__(self, xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    if xs.ndim == 1:
      xs = xs.reshape(1, -1)
    if xs.shape[1] != self.n_sites:
      raise ShapeError("target on %d coordinates got inputs of shape %s" %
                       (self.n_sites, xs.shape))
    return np.asarray(self.fn(xs), dtype=float).reshape(len(xs))

  def __repr__(self):
    return "Target(%s, n=%d)" % (self.name, self.n_sites)


def _zero(n):
  return lambda xs: np.zeros(len(xs))


def _affine(n, slope=1.0, intercept=0.0):
  slope = np.broadcast_to(np.asarray(slope, dtype=float), (n,))
  return lambda xs: xs @ slope + intercept


def _sin(n, freq=1.0):
  return lambda xs: np.sin(2 * np.pi * freq * xs[:, 0])


def _gaussian_bump(n, center=0.5, width=0.15):
  center = np.broadcast_to(np.asarray(center, dtype=float), (n,))
  return lambda xs: np.exp(-np.sum((xs - center)**2, axis=1) / (2 * width**2))


def _smooth_step(n, center=0.5, width=0.05):
  return lambda xs: 0.5 * (1 + np.tanh((xs[:, 0] - center) / width))


def _polynomial(n, coefficients=(0.0, 0.0, 1.0)):
  coefficients = np.asarray(coefficients, dtype=float)
  return lambda xs: np.polynomial.polynomial.polyval(xs[:, 0], coefficients)


TARGETS = {
    "zero": _zero,
    "affine": _affine,
    "sin": _sin,
    "gaussian_bump": _gaussian_bump,
    "smooth_step": _smooth_step,
    "polynomial": _polynomial,
}


def make_target(name: str, n_sites: int, params: Optional[Dict] = None) -> Target:
  if name not in TARGETS:
    raise ConfigError("unknown target %r, expected one of %s" %
                      (name, ", ".join(sorted(TARGETS))))
  try:
    fn = TARGETS[name](n_sites, **(params or {}))
  except TypeError as e:
    raise ConfigError("invalid parameters for target %s: %s" % (name, e)) from e
  return Target(name, n_sites, fn)


def _as_points(model: ActivatedMps, xs) -> np.ndarray:
  xs = np.asarray(xs, dtype=float)
  if xs.ndim == 1:
    xs = xs.reshape(1, -1)
  if xs.ndim != 2 or xs.shape[1] != model.n_sites:
    raise ShapeError("inputs must have shape (B, %d), got %s" % (model.n_sites, xs.shape))
  return xs


@dataclasses.dataclass
class _Cache(object):
  feats: List[np.ndarray]
  left: List[np.ndarray]
  right: List[np.ndarray]
  z: np.ndarray


def _forward(model: ActivatedMps, xs: np.ndarray) -> _Cache:
  core = model.core
  b = len(xs)
  feats, mats = [], []
  for i, (site, fm) in enumerate(zip(core.sites, model.fms)):
    f = fm.evaluate_many(xs[:, i])
    feats.append(f)
    mats.append(np.einsum("bs,lsij->blij", f, site.tensor.astype(float)))
  chi = mats[0].shape[2]
  eye = np.broadcast_to(np.eye(chi), (b, 1, chi, chi))
  left = [eye]
  for m in mats:
    left.append(np.matmul(left[-1], m))
  right = [eye]
  for m in reversed(mats[1:]):
    right.append(np.matmul(m, right[-1]))
  right.reverse()
  z = np.trace(left[-1], axis1=2, axis2=3)
  return _Cache(feats, left[:-1], right, z)


def _derivative(model: ActivatedMps, z: np.ndarray) -> np.ndarray:
  if model.sigma is None:
    return np.ones_like(z)
  return model.sigma.derivative(z)


def _core_gradient(model: ActivatedMps, cache: _Cache, dz: np.ndarray) -> List[np.ndarray]:
  """dLoss/dA for every site, given dLoss/dz of shape (B, D)."""
  grads = []
  for i in range(model.n_sites):
    g = np.matmul(cache.right[i], cache.left[i])
    f = cache.feats[i]
    if i == model.core.label_site:
      grads.append(np.einsum("bl,bs,bji->lsij", dz, f, g[:, 0]))
    else:
      grads.append(np.einsum("bl,bs,blji->sij", dz, f, g)[None])
  return grads


def predict(model: ActivatedMps, xs) -> np.ndarray:
  """Floating point model output on every row of xs."""
  xs = _as_points(model, xs)
  return model.activate(_forward(model, xs).z) @ model.out_weights


def output_gradient(model: ActivatedMps, xs) -> np.ndarray:
  """Gradient of sum_b Psi(x_b) in parameter_vector order."""
  xs = _as_points(model, xs)
  cache = _forward(model, xs)
  h = model.activate(cache.z)
  dz = model.out_weights[None, :] * _derivative(model, cache.z)
  parts = [g.reshape(-1) for g in _core_gradient(model, cache, dz)]
  parts.append(h.sum(axis=0))
  return np.concatenate(parts)


def loss_and_gradient(model: ActivatedMps, xs, ys):
  """0.5 * mean((Psi(x) - y)^2) and its gradient in parameter_vector order."""
  xs = _as_points(model, xs)
  ys = np.asarray(ys, dtype=float).reshape(-1)
  cache = _forward(model, xs)
  h = model.activate(cache.z)
  residual = h @ model.out_weights - ys
  loss = 0.5 * float(np.mean(residual**2))
  dy = residual / len(xs)
  dz = dy[:, None] * model.out_weights[None, :] * _derivative(model, cache.z)
  parts = [g.reshape(-1) for g in _core_gradient(model, cache, dz)]
  parts.append(h.T @ dy)
  return loss, np.concatenate(parts)


def loss(model: ActivatedMps, xs, ys) -> float:
  residual = predict(model, xs) - np.asarray(ys, dtype=float).reshape(-1)
  return 0.5 * float(np.mean(residual**2))


def finite_difference_gradient(fn: Callable[[np.ndarray], float], theta: np.ndarray,
                               eps: float, indices=None) -> np.ndarray:
  """Central differences of fn at theta, for the given parameter indices."""
  if indices is None:
    indices = range(len(theta))
  out = []
  for j in indices:
    up = theta.copy()
    down = theta.copy()
    up[j] += eps
    down[j] -= eps
    out.append((fn(up) - fn(down)) / (2 * eps))
  return np.array(out)


def grad_check(model: ActivatedMps, xs, eps: float = 1e-5, seed: int = 0,
               n_params: int = GRAD_CHECK_PARAMETERS) -> float:
  """Largest relative deviation between analytic and finite difference gradients.

  The checked function is sum_b Psi(x_b); up to n_params parameters are drawn
  with the given seed. The deviation of a pair (a, fd) is
  |a - fd| / max(1, |a|, |fd|).
  """
  if not 1e-8 <= eps <= 1e-3:
    raise PreconditionError("eps must lie in [1e-8, 1e-3], got %r" % eps)
  xs = _as_points(model, xs)
  theta = parameter_vector(model)
  analytic = output_gradient(model, xs)
  rng = np.random.default_rng(seed)
  count = min(n_params, len(theta))
  indices = np.sort(rng.choice(len(theta), size=count, replace=False))

  def total(t):
    return float(np.sum(predict(with_parameters(model, t), xs)))

  numeric = finite_difference_gradient(total, theta, eps, indices)
  a = analytic[indices]
  scale = np.maximum(1.0, np.maximum(np.abs(a), np.abs(numeric)))
  deviation = float(np.max(np.abs(a - numeric) / scale))
  logger.debug("Gradient check over %d parameters: max deviation %.3g", count, deviation)
  return deviation


def solve_out_weights(model: ActivatedMps, xs, ys) -> ActivatedMps:
  """Least squares output weights for the current core."""
  h = model.activate(_forward(model, _as_points(model, xs)).z)
  weights = np.linalg.lstsq(h, np.asarray(ys, dtype=float), rcond=None)[0]
  if not np.all(np.isfinite(weights)):
    return model
  return ActivatedMps(model.core, weights, model.sigma, model.fms)


def solve_linear(model: ActivatedMps, xs, ys) -> ActivatedMps:
  """Exact least squares fit of a single-site model without activation."""
  if model.sigma is not None or model.n_sites != 1:
    raise PreconditionError("closed form fits need one site and no activation")
  f = model.fms[0].evaluate_many(_as_points(model, xs)[:, 0])
  v = np.linalg.lstsq(f, np.asarray(ys, dtype=float), rcond=None)[0]
  tensor = np.zeros(model.core.sites[0].tensor.shape)
  tensor[0, :, 0, 0] = v
  weights = np.zeros(model.label_dim)
  weights[0] = 1.0
  return ActivatedMps(Mps([tensor], label_site=0), weights, None, model.fms)


def build_model(cfg: FitConfig, rng: np.random.Generator) -> ActivatedMps:
  """The initial model described by cfg."""
  fm = feature_map_by_name(cfg.feature_map)
  fms = [fm] * cfg.n_sites
  sigma = None if cfg.sigma is None else sigmoid_from_name(cfg.sigma, cfg.C)
  n, d, width = cfg.n_sites, fm.dim, cfg.label_dim
  label_site = default_label_site(n)
  if cfg.init == "zeros":
    core = Mps.zeros([d] * n, label_dim=width, label_site=label_site)
    return ActivatedMps(core, np.zeros(width), sigma, fms)
  if cfg.init == "spread" and n == 1 and isinstance(fm, AffineOne):
    # z_l = a_l * (x - c_l): random slopes and breakpoints over [0, 1]
    slopes = rng.uniform(5.0, 20.0, size=width) * rng.choice([-1.0, 1.0], size=width)
    breaks = rng.uniform(0.0, 1.0, size=width)
    tensor = np.stack([slopes, -slopes * breaks], axis=1)[:, :, None, None]
    core = Mps([tensor], label_site=0)
  else:
    if cfg.init == "spread":
      logger.info("Spread initialization needs one affine site, drawing random entries")
    core = Mps.random(n, cfg.chi, d, label_dim=width, label_site=label_site,
                      seed=rng, std=cfg.init_std)
  weights = rng.normal(0.0, cfg.init_std, size=width) / np.sqrt(width)
  return ActivatedMps(core, weights, sigma, fms)


@dataclasses.dataclass
class FitResult(object):
  """Outcome of a fit.

  error_curve and loss_curve hold one entry per iteration, starting with the
  initial model. diverged_at is the iteration at which the loss became
  non-finite, in which case the curves stop there.
  """
  model: ActivatedMps
  sup_error: float
  error_curve: List[float]
  loss_curve: List[float]
  diverged_at: Optional[int] = None
  grad_check_deviation: Optional[float] = None

  @property
  def diverged(self) -> bool:
    return self.diverged_at is not None

  def to_dict(self) -> Dict:
    return {
        "sup_error": self.sup_error,
        "error_curve": self.error_curve,
        "loss_curve": self.loss_curve,
        "diverged_at": self.diverged_at,
        "grad_check_deviation": self.grad_check_deviation,
        "label_dim": self.model.label_dim,
        "sigma": None if self.model.sigma is None else self.model.sigma.to_dict(),
    }


def sup_error(model: ActivatedMps, xs, ys) -> float:
  return float(np.max(np.abs(predict(model, xs) - np.asarray(ys, dtype=float))))


def descend(model: ActivatedMps, xs, ys, learning_rate: float, iterations: int,
            gradients: str = "analytic", warm_start: bool = True,
            fd_eps: float = 1e-5) -> FitResult:
  """Backtracking gradient descent on the half mean squared error.

  A step is accepted only if it does not increase the loss; otherwise the
  learning rate is halved and the step retried. Accepted steps let the rate
  grow again by 10 percent up to its initial value.
  """
  xs = _as_points(model, xs)
  ys = np.asarray(ys, dtype=float).reshape(-1)
  if warm_start:
    model = solve_out_weights(model, xs, ys)
  current = loss(model, xs, ys)
  error_curve = [sup_error(model, xs, ys)]
  loss_curve = [current]
  rate = learning_rate
  for it in range(1, iterations + 1):
    if not np.isfinite(current):
      logger.warning("Loss became non-finite at iteration %d", it - 1)
      return FitResult(model, error_curve[-1], error_curve, loss_curve,
                       diverged_at=it - 1)
    theta = parameter_vector(model)
    if gradients == "analytic":
      grad = loss_and_gradient(model, xs, ys)[1]
    else:
      grad = finite_difference_gradient(
          lambda t: loss(with_parameters(model, t), xs, ys), theta, fd_eps)
    if not np.all(np.isfinite(grad)):
      logger.warning("Gradient became non-finite at iteration %d", it)
      return FitResult(model, error_curve[-1], error_curve, loss_curve, diverged_at=it)
    for _ in range(MAX_HALVINGS):
      candidate = with_parameters(model, theta - rate * grad)
      if warm_start:
        candidate = solve_out_weights(candidate, xs, ys)
      value = loss(candidate, xs, ys)
      if np.isfinite(value) and value <= current:
        model, current = candidate, value
        rate = min(rate * 1.1, learning_rate)
        break
      rate /= 2
    error_curve.append(sup_error(model, xs, ys))
    loss_curve.append(current)
    logger.debug("Iteration %d: loss %.6g, sup error %.6g, rate %.3g",
                 it, current, error_curve[-1], rate)
  return FitResult(model, error_curve[-1], error_curve, loss_curve)


def fit_activated_mps(cfg: FitConfig) -> FitResult:
  """Fits the model described by cfg to its target on the grid.

  Returns
  -------
  FitResult with the trained model and sup_error = max over the grid of
  |Psi - f|. With check_gradients the analytic gradient is compared with
  finite differences first and NumericError is raised when they disagree by
  more than GRAD_CHECK_TOLERANCE.
  """
  rng = np.random.default_rng(cfg.seed)
  grid = cfg.grid_points()
  ys = make_target(cfg.target, cfg.n_sites, cfg.target_params)(grid)
  model = build_model(cfg, rng)
  deviation = None
  with Timer() as timer:
    if cfg.check_gradients:
      deviation = grad_check(model, grid[:GRAD_CHECK_POINTS], eps=cfg.fd_eps,
                             seed=cfg.seed)
      if deviation > GRAD_CHECK_TOLERANCE:
        raise NumericError("gradient check failed: deviation %.3g exceeds %.0e" %
                           (deviation, GRAD_CHECK_TOLERANCE))
    if model.sigma is None and model.n_sites == 1:
      initial = sup_error(model, grid, ys)
      model = solve_linear(model, grid, ys)
      result = descend(model, grid, ys, cfg.learning_rate, cfg.iterations,
                       cfg.gradients, warm_start=False, fd_eps=cfg.fd_eps)
      result.error_curve[0] = initial
    else:
      result = descend(model, grid, ys, cfg.learning_rate, cfg.iterations,
                       cfg.gradients, cfg.warm_start, cfg.fd_eps)
  result.grad_check_deviation = deviation
  logger.info("Fitted %s with D=%d: sup error %.4g in %.2f sec", cfg.target,
              cfg.label_dim, result.sup_error, timer.elapsed)
  return result
