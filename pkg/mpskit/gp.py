"""Monte-Carlo check of the Gaussian process limit of wide random MPS.

For every width the harness draws n_samples models with i.i.d. entries and
evaluates them on a fixed dataset. Widening the label leg to D gives D
independent slices; the output is their sum scaled by 1/sqrt(D), so the
variance stays O(1) and the central limit theorem applies as D grows.
Widening the phys leg of site 1 instead repeats its feature vector D times
(scaled by 1/sqrt(D)) against independent tensor blocks.

Samples are drawn in fixed chunks, each from its own substream of the master
seed, so results do not depend on the number of worker threads.
"""
import csv
import dataclasses
import io
import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from typing import Dict
from typing import List
from typing import Optional
import numpy as np
import scipy.stats
from mpskit.config import GpExperimentConfig
from mpskit.errors import ShapeError
from mpskit.feature_maps import FeatureMap
from mpskit.feature_maps import feature_map_by_name
from mpskit.utils import Timer
from mpskit.utils import chunk_ranges
from mpskit.utils import worker_count

logger = logging.getLogger(__name__)

GP_CHUNK = 64
# spawn key slot reserved for bootstrap streams
_BOOTSTRAP_KEY = 1 << 20


def _generator(seed: int, *key: int) -> np.random.Generator:
  return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def draw_entries(rng: np.random.Generator, shape, std: float,
                 distribution: str) -> np.ndarray:
  """i.i.d. zero-mean entries with standard deviation std."""
  if distribution == "normal":
    return rng.normal(0.0, std, size=shape)
  if distribution == "uniform":
    half = np.sqrt(3.0) * std
    return rng.uniform(-half, half, size=shape)
  raise ShapeError("unknown distribution %r" % (distribution,))


def _bond_shapes(n: int, chi: int):
  return [(1 if i == 0 else chi, 1 if i == n - 1 else chi) for i in range(n)]


def _sample_label_widened(cfg: GpExperimentConfig, feats: List[np.ndarray],
                          width: int, count: int,
                          rng: np.random.Generator) -> np.ndarray:
  """Outputs of count models with width independent slices, shape (count, P)."""
  frozen = set(cfg.frozen_sites)
  env = None
  for i, (left, right) in enumerate(_bond_shapes(cfg.n_sites, cfg.chi)):
    d = feats[i].shape[1]
    shape = (count, width, d, left, right)
    if i in frozen:
      t = np.ones(shape)
    else:
      t = draw_entries(rng, shape, cfg.init_std, cfg.distribution)
    m = np.einsum("pd,cwdab->cwpab", feats[i], t)
    env = m if env is None else np.matmul(env, m)
  psi = env[..., 0, 0]
  return psi.sum(axis=1) / np.sqrt(width)


def _sample_phys_widened(cfg: GpExperimentConfig, feats: List[np.ndarray],
                         width: int, count: int,
                         rng: np.random.Generator) -> np.ndarray:
  """Outputs of count models whose first site has phys dim width * d."""
  frozen = set(cfg.frozen_sites)
  env = None
  for i, (left, right) in enumerate(_bond_shapes(cfg.n_sites, cfg.chi)):
    f = feats[i]
    if i == 0:
      f = np.tile(f, (1, width)) / np.sqrt(width)
    shape = (count, f.shape[1], left, right)
    if i in frozen:
      t = np.ones(shape)
    else:
      t = draw_entries(rng, shape, cfg.init_std, cfg.distribution)
    m = np.einsum("pd,cdab->cpab", f, t)
    env = m if env is None else np.matmul(env, m)
  return env[..., 0, 0]


def sample_outputs(cfg: GpExperimentConfig, width: int, key: int = 0,
                   replication: int = 0) -> np.ndarray:
  """n_samples model outputs on the dataset, shape (n_samples, P)."""
  fm = feature_map_by_name(cfg.feature_map)
  points = np.asarray(cfg.dataset, dtype=float)
  feats = [fm.evaluate_many(points[:, i]) for i in range(cfg.n_sites)]
  sampler = (_sample_label_widened if cfg.widen == "label"
             else _sample_phys_widened)
  chunks = chunk_ranges(cfg.n_samples, GP_CHUNK)

  def run(indexed):
    index, chunk = indexed
    rng = _generator(cfg.seed, key, replication, index)
    return sampler(cfg, feats, width, len(chunk), rng)

  workers = min(worker_count(), len(chunks))
  if workers <= 1:
    parts = [run(c) for c in enumerate(chunks)]
  else:
    with ThreadPoolExecutor(max_workers=workers) as pool:
      parts = list(pool.map(run, enumerate(chunks)))
  return np.concatenate(parts, axis=0)


def bootstrap_covariance_se(samples: np.ndarray, resamples: int,
                            rng: np.random.Generator) -> np.ndarray:
  """Bootstrap standard error of every entry of the covariance matrix."""
  n = len(samples)
  covs = []
  for _ in range(resamples):
    idx = rng.integers(0, n, size=n)
    covs.append(np.atleast_2d(np.cov(samples[idx], rowvar=False)))
  if resamples < 2:
    return np.zeros_like(covs[0])
  return np.std(np.stack(covs), axis=0, ddof=1)


@dataclasses.dataclass
class WidthResult(object):
  """Moments of the outputs at one width, one entry per dataset point."""
  width: int
  skewness: np.ndarray
  excess_kurtosis: np.ndarray
  normality_p: np.ndarray
  covariance: np.ndarray
  covariance_se: np.ndarray
  normality_pass_fraction: Optional[float] = None

  @property
  def median_abs_kurtosis(self) -> float:
    return float(np.median(np.abs(self.excess_kurtosis)))

  @property
  def variance(self) -> np.ndarray:
    return np.diag(self.covariance)

  def to_dict(self) -> Dict:
    return {
        "width": self.width,
        "skewness": self.skewness.tolist(),
        "excess_kurtosis": self.excess_kurtosis.tolist(),
        "normality_p": self.normality_p.tolist(),
        "covariance": self.covariance.tolist(),
        "covariance_se": self.covariance_se.tolist(),
        "median_abs_kurtosis": self.median_abs_kurtosis,
        "normality_pass_fraction": self.normality_pass_fraction,
    }


@dataclasses.dataclass
class GpReport(object):
  config: GpExperimentConfig
  results: List[WidthResult]

  def kurtosis_decreasing(self) -> bool:
    """Median |excess kurtosis| strictly decreases with width."""
    values = [r.median_abs_kurtosis for r in self.results]
    return all(b < a for a, b in zip(values, values[1:]))

  def covariance_stable(self, n_se: float = 3.0) -> bool:
    """Covariances at the two largest widths agree within n_se standard errors."""
    if len(self.results) < 2:
      return True
    a, b = self.results[-2], self.results[-1]
    se = np.sqrt(a.covariance_se**2 + b.covariance_se**2)
    return bool(np.all(np.abs(a.covariance - b.covariance) <= n_se * se))

  def to_dict(self) -> Dict:
    return {
        "config": self.config.to_dict(),
        "results": [r.to_dict() for r in self.results],
        "kurtosis_decreasing": self.kurtosis_decreasing(),
        "covariance_stable": self.covariance_stable(),
    }

  def to_table(self) -> str:
    lines = ["%8s %6s %10s %10s %10s %10s" %
             ("width", "point", "skewness", "kurtosis", "normal_p", "variance")]
    for r in self.results:
      for p in range(len(r.skewness)):
        lines.append("%8d %6d %10.4f %10.4f %10.4g %10.4f" % (
            r.width, p, r.skewness[p], r.excess_kurtosis[p], r.normality_p[p],
            r.variance[p]))
    lines.append("")
    lines.append("%8s %18s %14s" % ("width", "median|kurtosis|", "pass_fraction"))
    for r in self.results:
      fraction = "-" if r.normality_pass_fraction is None else \
          "%.2f" % r.normality_pass_fraction
      lines.append("%8d %18.4f %14s" % (r.width, r.median_abs_kurtosis, fraction))
    return "\n".join(lines) + "\n"

  def to_csv(self) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["width", "point", "skewness", "excess_kurtosis", "normality_p",
                     "variance", "median_abs_kurtosis"])
    for r in self.results:
      for p in range(len(r.skewness)):
        writer.writerow([r.width, p, repr(float(r.skewness[p])),
                         repr(float(r.excess_kurtosis[p])),
                         repr(float(r.normality_p[p])), repr(float(r.variance[p])),
                         repr(r.median_abs_kurtosis)])
    return out.getvalue()


def _warn_duplicates(cfg: GpExperimentConfig):
  seen = set()
  for point in cfg.dataset:
    key = tuple(float(v) for v in point)
    if key in seen:
      message = "dataset contains the point %s more than once" % (key,)
      warnings.warn(message)
      logger.warning(message)
    seen.add(key)


def _moments(samples: np.ndarray):
  skewness = np.atleast_1d(scipy.stats.skew(samples, axis=0))
  kurtosis = np.atleast_1d(scipy.stats.kurtosis(samples, axis=0))
  pvalues = np.atleast_1d(scipy.stats.normaltest(samples, axis=0).pvalue)
  return skewness, kurtosis, pvalues


def run_gp_experiment(cfg: GpExperimentConfig) -> GpReport:
  """Draws random models at every width and reports output moments.

  Parameters
  ----------
  cfg: GpExperimentConfig

  Returns
  -------
  GpReport with one WidthResult per width. The largest width also carries the
  fraction of cfg.replications independent repeats in which every dataset
  point passes the normality test at cfg.alpha.
  """
  _warn_duplicates(cfg)
  results = []
  for key, width in enumerate(cfg.widths):
    with Timer() as timer:
      samples = sample_outputs(cfg, width, key=key)
      skewness, kurtosis, pvalues = _moments(samples)
      covariance = np.atleast_2d(np.cov(samples, rowvar=False))
      se = bootstrap_covariance_se(samples, cfg.bootstrap,
                                   _generator(cfg.seed, key, _BOOTSTRAP_KEY))
      result = WidthResult(width, skewness, kurtosis, pvalues, covariance, se)
      if key == len(cfg.widths) - 1:
        passes = int(np.all(pvalues > cfg.alpha))
        for rep in range(1, cfg.replications):
          extra = sample_outputs(cfg, width, key=key, replication=rep)
          passes += int(np.all(_moments(extra)[2] > cfg.alpha))
        result.normality_pass_fraction = passes / cfg.replications
    logger.info("Width %d: median |excess kurtosis| %.4f in %.2f sec",
                width, result.median_abs_kurtosis, timer.elapsed)
    results.append(result)
  return GpReport(cfg, results)


@dataclasses.dataclass
class IidSumResult(object):
  """Variance of sum_s W_s Phi_s(x) against the sum of its term variances."""
  n_terms: int
  product_variance: float
  predicted_variance: float
  empirical_variance: float

  @property
  def relative_error(self) -> float:
    return abs(self.empirical_variance - self.predicted_variance) / \
        self.predicted_variance


def iid_sum_check(fm: FeatureMap, x, n_sites: int, chi: int = 1,
                  n_samples: int = 100000, seed: int = 0, init_std: float = 1.0,
                  distribution: str = "normal") -> IidSumResult:
  """Compares Var(Psi(x)) with sum_s Phi_s(x)^2 Var(W_s).

  The flattened weights W_s of a random open MPS are zero-mean and pairwise
  uncorrelated products of i.i.d. entries with a common variance, so the
  pre-activation variance is |s| Var(W_s) whenever every Phi_s(x)^2 is one.
  """
  x = np.asarray(x, dtype=float).reshape(-1)
  if len(x) != n_sites:
    raise ShapeError("input of length %d for %d sites" % (len(x), n_sites))
  rng = _generator(seed, 0)
  d = fm.dim
  weights = None
  for left, right in _bond_shapes(n_sites, chi):
    t = draw_entries(rng, (n_samples, d, left, right), init_std, distribution)
    if weights is None:
      weights = t
    else:
      # (N, S, a, b) x (N, d, b, c) -> (N, S * d, a, c)
      joined = np.einsum("nsab,ndbc->nsdac", weights, t)
      weights = joined.reshape(n_samples, -1, joined.shape[3], joined.shape[4])
  weights = weights[:, :, 0, 0]
  phi = np.ones(1)
  for v in x:
    phi = np.kron(phi, fm(v))
  outputs = weights @ phi
  product_variance = float(np.mean(np.var(weights, axis=0)))
  predicted = float(np.sum(phi**2) * product_variance)
  return IidSumResult(n_terms=len(phi), product_variance=product_variance,
                      predicted_variance=predicted,
                      empirical_variance=float(np.var(outputs)))
