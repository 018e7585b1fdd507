"""Experiment configurations.

Configs are dataclasses validated on construction. They load from a JSON
document or from a plain "key = value" file:

  # GP check
  widths = 8, 64, 512, 2048
  n_sites = 3
  dataset = [[0.1, 0.2, 0.3], [0.9, 0.5, 0.4]]

Values are parsed as JSON when possible, comma separated values become lists,
anything else stays a string.
"""
import dataclasses
import json
from typing import Dict
from typing import List
from typing import Optional
import numpy as np
from mpskit.errors import ConfigError

MAX_DATASET = 16
MIN_GP_SAMPLES = 500
_LIST_FIELDS = {"widths", "frozen_sites"}


def _default_dataset() -> List[List[float]]:
  return [[0.2, 0.7, 0.4], [0.8, 0.3, 0.9], [0.5, 0.5, 0.5]]


@dataclasses.dataclass
class GpExperimentConfig(object):
  """Monte-Carlo check that wide random MPS outputs become jointly Gaussian.

  Fields
  ------
  widths: list of int
    Widths of the widened leg, ascending.
  n_sites, chi: int
    Chain length and bond dimension of every slice.
  feature_map: str
    Name of the per-site feature map (binary, affine, trig).
  dataset: list of points
    At most 16 inputs of length n_sites.
  n_samples: int
    Random models drawn per width, at least 500.
  seed: int
  init_std: float
    Standard deviation of the i.i.d. tensor entries.
  distribution: str
    'normal' or 'uniform' (same variance).
  widen: str
    'label' widens the label leg; 'phys' widens the phys leg of site 1.
  frozen_sites: list of int
    Sites whose tensors are constant ones instead of random.
  replications: int
    Independent repeats of the largest width for the normality pass rate.
  alpha: float
    Significance level of the normality test.
  bootstrap: int
    Resamples used for covariance standard errors.
  """
  widths: List[int] = dataclasses.field(default_factory=lambda: [8, 64, 512, 2048])
  n_sites: int = 3
  chi: int = 2
  feature_map: str = "affine"
  dataset: List[List[float]] = dataclasses.field(default_factory=_default_dataset)
  n_samples: int = 10000
  seed: int = 0
  init_std: float = 1.0
  distribution: str = "normal"
  widen: str = "label"
  frozen_sites: List[int] = dataclasses.field(default_factory=list)
  replications: int = 10
  alpha: float = 0.01
  bootstrap: int = 200

  def __post_init__(self):
    self.validate()

  def validate(self):
    if not self.widths or any(w < 1 for w in self.widths):
      raise ConfigError("widths must be a nonempty list of positive integers")
    if any(b <= a for a, b in zip(self.widths, self.widths[1:])):
      raise ConfigError("widths must be strictly ascending, got %s" % (self.widths,))
    if self.n_sites < 1 or self.chi < 1:
      raise ConfigError("n_sites and chi must be positive")
    if self.n_samples < MIN_GP_SAMPLES:
      raise ConfigError("n_samples must be at least %d, got %d" %
                        (MIN_GP_SAMPLES, self.n_samples))
    if not 1 <= len(self.dataset) <= MAX_DATASET:
      raise ConfigError("dataset must hold 1 to %d points" % MAX_DATASET)
    for point in self.dataset:
      if len(point) != self.n_sites:
        raise ConfigError("dataset point %s does not have %d coordinates" %
                          (point, self.n_sites))
    if not self.init_std > 0:
      raise ConfigError("init_std must be positive")
    if self.distribution not in ("normal", "uniform"):
      raise ConfigError("distribution must be 'normal' or 'uniform'")
    if self.widen not in ("label", "phys"):
      raise ConfigError("widen must be 'label' or 'phys'")
    if any(not 0 <= s < self.n_sites for s in self.frozen_sites):
      raise ConfigError("frozen sites must lie in [0, %d)" % self.n_sites)
    if len(set(self.frozen_sites)) >= self.n_sites:
      raise ConfigError("at least one site must stay random")
    if self.replications < 1 or self.bootstrap < 1:
      raise ConfigError("replications and bootstrap must be positive")
    if not 0 < self.alpha < 1:
      raise ConfigError("alpha must lie in (0, 1)")

  @classmethod
  def from_mapping(cls, d: Dict) -> "GpExperimentConfig":
    return _from_mapping(cls, d)

  def to_dict(self) -> Dict:
    return dataclasses.asdict(self)


@dataclasses.dataclass
class FitConfig(object):
  """Gradient descent fit of an activated MPS to a target on [0,1]^n.

  Fields
  ------
  target: str
    Registry name: zero, affine, sin, gaussian_bump, smooth_step, polynomial.
  target_params: dict
    Keyword arguments of the target.
  grid: list of points, optional
    Evaluation points; by default grid_size points per axis.
  n_sites, chi, label_dim: int
    Model shape; label_dim is D.
  feature_map: str
  sigma: str or None
    'scaled_logistic', 'reciprocal_shift' or None for the identity.
  C: float
  gradients: str
    'analytic' or 'finite_difference'.
  learning_rate: float
  iterations: int
  seed: int
  init: str
    'spread' (random slopes and breakpoints), 'random' or 'zeros'.
  init_std: float
  warm_start: bool
    Solve the output weights by least squares before and during descent.
  check_gradients: bool
    Run grad_check on the initial model and refuse to fit if it fails.
  """
  target: str = "sin"
  target_params: Dict = dataclasses.field(default_factory=dict)
  grid: Optional[List[List[float]]] = None
  grid_size: int = 64
  n_sites: int = 1
  chi: int = 1
  label_dim: int = 32
  feature_map: str = "affine"
  sigma: Optional[str] = "scaled_logistic"
  C: float = 1.0
  gradients: str = "analytic"
  learning_rate: float = 0.05
  iterations: int = 200
  seed: int = 0
  init: str = "spread"
  init_std: float = 0.5
  warm_start: bool = True
  check_gradients: bool = True
  fd_eps: float = 1e-5

  def __post_init__(self):
    self.validate()

  def validate(self):
    if self.iterations < 1:
      raise ConfigError("iterations must be at least 1")
    if self.grid is not None and len(self.grid) == 0:
      raise ConfigError("grid must not be empty")
    if self.grid is None and self.grid_size < 1:
      raise ConfigError("grid_size must be positive")
    if self.grid is not None:
      for point in self.grid:
        if len(point) != self.n_sites:
          raise ConfigError("grid point %s does not have %d coordinates" %
                            (point, self.n_sites))
    if self.n_sites < 1 or self.chi < 1 or self.label_dim < 1:
      raise ConfigError("n_sites, chi and label_dim must be positive")
    if self.gradients not in ("analytic", "finite_difference"):
      raise ConfigError("gradients must be 'analytic' or 'finite_difference'")
    if self.init not in ("spread", "random", "zeros"):
      raise ConfigError("init must be 'spread', 'random' or 'zeros'")
    if not self.learning_rate > 0:
      raise ConfigError("learning_rate must be positive")
    if not 1e-8 <= self.fd_eps <= 1e-3:
      raise ConfigError("fd_eps must lie in [1e-8, 1e-3]")

  def grid_points(self) -> np.ndarray:
    """Evaluation points, shape (N, n_sites)."""
    if self.grid is not None:
      return np.asarray(self.grid, dtype=float)
    axis = np.linspace(0.0, 1.0, self.grid_size)
    mesh = np.meshgrid(*([axis] * self.n_sites), indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=-1)

  @classmethod
  def from_mapping(cls, d: Dict) -> "FitConfig":
    return _from_mapping(cls, d)

  def to_dict(self) -> Dict:
    return dataclasses.asdict(self)


def _from_mapping(cls, d: Dict):
  names = set(f.name for f in dataclasses.fields(cls))
  unknown = sorted(set(d) - names)
  if unknown:
    raise ConfigError("unknown %s keys: %s" % (cls.__name__, ", ".join(unknown)))
  d = dict(d)
  # a single value is a one element list
  for name in _LIST_FIELDS & set(d):
    if not isinstance(d[name], list):
      d[name] = [d[name]]
  try:
    return cls(**d)
  except TypeError as e:
    raise ConfigError("invalid %s: %s" % (cls.__name__, e)) from e


def _parse_value(text: str):
  text = text.strip()
  try:
    return json.loads(text)
  except ValueError:
    pass
  if "," in text:
    return [_parse_value(part) for part in text.split(",")]
  if text.lower() in ("none", "null"):
    return None
  if text.lower() in ("true", "false"):
    return text.lower() == "true"
  return text


def parse_key_values(text: str) -> Dict:
  out = {}
  for lineno, line in enumerate(text.splitlines(), 1):
    line = line.split("#", 1)[0].strip()
    if not line:
      continue
    if "=" not in line:
      raise ConfigError("line %d: expected 'key = value'" % lineno)
    key, value = line.split("=", 1)
    out[key.strip()] = _parse_value(value)
  return out


def load_config(path: str, cls):
  """Reads a config of the given class from a JSON or key = value file."""
  try:
    with open(path, encoding="utf-8") as f:
      text = f.read()
  except OSError as e:
    raise ConfigError("cannot read config %s: %s" % (path, e)) from e
  if text.lstrip().startswith("{"):
    try:
      mapping = json.loads(text)
    except ValueError as e:
      raise ConfigError("invalid JSON in %s: %s" % (path, e)) from e
  else:
    mapping = parse_key_values(text)
  return cls.from_mapping(mapping)
