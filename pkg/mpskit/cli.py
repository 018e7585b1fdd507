"""Command line entry point.

  mpskit compile --expr "X1 | X2 | X3" --out or3.json
  mpskit verify --mps or3.json --expr "X1 | X2 | X3"
  mpskit flatten --model or3.json --json
  mpskit gp-check --seed 0 --config gp.cfg --csv gp.csv

Exit codes: 0 success, 1 verification mismatch, 2 invalid input, 3 a size
guard was hit.
"""
import dataclasses
import json
import logging
from typing import List
from typing import Optional
from typing import Tuple
import click
import numpy as np
from mpskit.algebra import ActivatedMps
from mpskit.algebra import add
from mpskit.algebra import add_shared_kernel
from mpskit.algebra import as_activated
from mpskit.algebra import eval_activated
from mpskit.algebra import scale
from mpskit.algebra import scale_via_C
from mpskit.boolexpr import TruthTable
from mpskit.boolexpr import parse_expr
from mpskit.boolexpr import parse_table
from mpskit.boolexpr import table_from_expr
from mpskit.compiler import boolean_feature_maps
from mpskit.compiler import compile_dnf
from mpskit.compiler import complexity_report
from mpskit.compiler import verify_table
from mpskit.config import FitConfig
from mpskit.config import GpExperimentConfig
from mpskit.config import load_config
from mpskit.contraction import contract
from mpskit.dnf import minimize
from mpskit.dnf import to_dnf
from mpskit.errors import ConfigError
from mpskit.errors import MpsError
from mpskit.errors import ShapeError
from mpskit.errors import SizeError
from mpskit.fitting import fit_activated_mps
from mpskit.flatten import FlatNetwork
from mpskit.flatten import evaluate_flat
from mpskit.flatten import flatten
from mpskit.flatten import named_kernel
from mpskit.gp import run_gp_experiment
from mpskit.mps import Mps
from mpskit.serialization import feature_maps_from_dict
from mpskit.serialization import from_dict
from mpskit.serialization import load_document
from mpskit.serialization import save

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_INPUT = 2
EXIT_SIZE = 3


def _fail(message: str, code: int):
  click.echo("error: %s" % message, err=True)
  raise SystemExit(code)


def _run(fn, *args, **kwargs):
  """Calls fn, mapping library errors to exit codes."""
  try:
    return fn(*args, **kwargs)
  except SizeError as e:
    _fail(str(e), EXIT_SIZE)
  except (MpsError, OSError) as e:
    _fail(str(e), EXIT_INPUT)


def _number(v):
  if isinstance(v, (int, np.integer)):
    return int(v)
  v = float(v)
  return int(v) if v.is_integer() and abs(v) < 2**53 else v


def _emit(as_json: bool, payload, text: str):
  if as_json:
    click.echo(json.dumps(payload, sort_keys=True))
  else:
    click.echo(text)


def _read_table(expr: Optional[str], table: Optional[str]) -> TruthTable:
  if (expr is None) == (table is None):
    _fail("give exactly one of --expr and --table", EXIT_INPUT)
  if expr is not None:
    return table_from_expr(parse_expr(expr))
  with open(table, encoding="utf-8") as f:
    return parse_table(f.read())


def _load_model(path: str):
  """(model, feature maps) for any document type."""
  doc = load_document(path)
  model = from_dict(doc)
  if isinstance(model, Mps):
    fms = feature_maps_from_dict(doc)
    if fms is None:
      fms = boolean_feature_maps(model)
    return model, fms
  return model, model.fms


def _load_activated(path: str) -> ActivatedMps:
  model, fms = _load_model(path)
  if isinstance(model, FlatNetwork):
    raise ShapeError("%s holds a flat network, expected an MPS" % path)
  if isinstance(model, Mps):
    return as_activated(model, fms)
  return model


def _parse_points(values: Tuple[str, ...]) -> List[List[float]]:
  points = []
  for v in values:
    try:
      points.append([float(c) for c in v.split(",")])
    except ValueError:
      raise ShapeError("invalid input vector %r" % v)
  return points


@click.group()
@click.option("--verbose", is_flag=True, help="Log progress at DEBUG level.")
def cli(verbose: bool):
  """Boolean functions, sums and wide limits of matrix product states."""
  logging.basicConfig(
      level=logging.DEBUG if verbose else logging.WARNING,
      format="%(asctime)s %(name)s %(levelname)s: %(message)s")


@cli.command("compile")
@click.option("--expr", help="Boolean expression, e.g. 'X1 & !X2 | X3'.")
@click.option("--table", type=click.Path(), help="Truth table file.")
@click.option("--minimize", "do_minimize", is_flag=True,
              help="Minimize the DNF before compiling.")
@click.option("--out", required=True, type=click.Path(), help="Output MPS document.")
@click.option("--json", "as_json", is_flag=True)
def compile_command(expr, table, do_minimize, out, as_json):
  """Compile a boolean function to an MPS."""

  def run():
    t = _read_table(expr, table)
    d = to_dnf(t)
    report = complexity_report(d)
    if do_minimize:
      d = minimize(d)
    mps = compile_dnf(d, t.arity)
    save(out, mps, boolean_feature_maps(mps))
    return report, mps

  report, mps = _run(run)
  payload = report.to_dict()
  payload["bond_dims"] = mps.bond_dims
  _emit(as_json, payload, str(report))


@cli.command()
@click.option("--mps", "mps_path", required=True, type=click.Path())
@click.option("--expr")
@click.option("--table", type=click.Path())
@click.option("--json", "as_json", is_flag=True)
def verify(mps_path, expr, table, as_json):
  """Compare an MPS with a truth table on every row."""

  def run():
    t = _read_table(expr, table)
    model, fms = _load_model(mps_path)
    if not isinstance(model, Mps):
      raise ShapeError("verify needs a plain MPS document")
    return verify_table(model, t, fms)

  result = _run(run)
  _emit(as_json, result.to_dict(), str(result))
  if not result.passed:
    raise SystemExit(EXIT_MISMATCH)


@cli.command("eval")
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--x", "xs", multiple=True, required=True,
              help="Comma separated input vector; repeat for several.")
@click.option("--json", "as_json", is_flag=True)
def eval_command(model_path, xs, as_json):
  """Evaluate a model on input vectors."""

  def run():
    model, fms = _load_model(model_path)
    out = []
    for x in _parse_points(xs):
      if isinstance(model, ActivatedMps):
        out.append(float(eval_activated(model, x)))
      elif isinstance(model, FlatNetwork):
        value = evaluate_flat(model, x)
        out.append(_number(value) if np.ndim(value) == 0 else
                   [_number(v) for v in value])
      else:
        out.append([_number(v) for v in contract(model, fms, x)])
    return out

  values = _run(run)
  _emit(as_json, {"values": values}, "\n".join(str(v) for v in values))


@cli.command("flatten")
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--out", type=click.Path(), help="Write the flat network document.")
@click.option("--names", is_flag=True, help="Show monomial names of the kernel.")
@click.option("--json", "as_json", is_flag=True)
def flatten_command(model_path, out, names, as_json):
  """Contract all bonds into one-hidden-layer weights."""

  def run():
    model, fms = _load_model(model_path)
    if isinstance(model, FlatNetwork):
      raise ShapeError("%s is already flat" % model_path)
    flat = flatten(model, None if isinstance(model, ActivatedMps) else fms)
    if out is not None:
      save(out, flat)
    return flat, named_kernel(flat) if names else None

  flat, kernel_names = _run(run)
  weights = [[_number(v) for v in row] for row in flat.weights]
  payload = {"weights": weights, "kernel": [list(k) for k in flat.kernel],
             "phys_dims": flat.phys_dims}
  lines = [" ".join(str(v) for v in row) for row in weights]
  if kernel_names is not None:
    payload["names"] = kernel_names
    lines.append(" ".join(kernel_names))
  _emit(as_json, payload, "\n".join(lines))


@cli.command("add")
@click.option("--a", "a_path", required=True, type=click.Path())
@click.option("--b", "b_path", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
@click.option("--shared-kernel", is_flag=True,
              help="Keep the phys dims; the feature maps must coincide.")
@click.option("--json", "as_json", is_flag=True)
def add_command(a_path, b_path, out, shared_kernel, as_json):
  """Write the model computing a(x) + b(x)."""

  def run():
    a = _load_activated(a_path)
    b = _load_activated(b_path)
    total = add_shared_kernel(a, b) if shared_kernel else add(a, b)
    save(out, total)
    return total

  total = _run(run)
  payload = {"bond_dims": total.core.bond_dims, "phys_dims": total.core.phys_dims,
             "label_dim": total.label_dim}
  _emit(as_json, payload, "bonds %s phys %s D=%d" % (
      payload["bond_dims"], payload["phys_dims"], payload["label_dim"]))


@cli.command("scale")
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--k", required=True, type=float)
@click.option("--out", required=True, type=click.Path())
@click.option("--via-c", is_flag=True, help="Rescale through the sigmoid constant.")
@click.option("--json", "as_json", is_flag=True)
def scale_command(model_path, k, out, via_c, as_json):
  """Write the model computing k * a(x)."""

  def run():
    a = _load_activated(model_path)
    scaled = scale_via_C(a, k) if via_c else scale(a, k)
    save(out, scaled)
    return scaled

  scaled = _run(run)
  sigma = None if scaled.sigma is None else scaled.sigma.to_dict()
  _emit(as_json, {"k": k, "sigma": sigma, "label_dim": scaled.label_dim},
        "k=%r sigma=%s" % (k, sigma))


def _parse_widths(text: str) -> List[int]:
  try:
    return [int(w) for w in text.split(",")]
  except ValueError:
    raise ConfigError("invalid width list %r" % text)


def _with_overrides(cfg, **overrides):
  overrides = {k: v for k, v in overrides.items() if v is not None}
  return dataclasses.replace(cfg, **overrides)


@cli.command("gp-check")
@click.option("--seed", required=True, type=int)
@click.option("--config", "config_path", type=click.Path())
@click.option("--widths", help="Comma separated widths.")
@click.option("--samples", type=int, help="Models drawn per width.")
@click.option("--csv", "csv_path", type=click.Path(), help="Write the report as CSV.")
@click.option("--out", type=click.Path(), help="Write the text report.")
@click.option("--json", "as_json", is_flag=True)
def gp_check(seed, config_path, widths, samples, csv_path, out, as_json):
  """Monte-Carlo check of the Gaussian process limit."""

  def run():
    cfg = (load_config(config_path, GpExperimentConfig) if config_path
           else GpExperimentConfig(seed=seed))
    width_list = None if widths is None else _parse_widths(widths)
    cfg = _with_overrides(cfg, seed=seed, widths=width_list, n_samples=samples)
    report = run_gp_experiment(cfg)
    if csv_path is not None:
      with open(csv_path, "w", encoding="utf-8") as f:
        f.write(report.to_csv())
    if out is not None:
      with open(out, "w", encoding="utf-8") as f:
        f.write(report.to_table())
    return report

  report = _run(run)
  _emit(as_json, report.to_dict(), report.to_table())


@cli.command("fit")
@click.option("--seed", required=True, type=int)
@click.option("--config", "config_path", type=click.Path())
@click.option("--target")
@click.option("--label-dim", type=int)
@click.option("--iterations", type=int)
@click.option("--out", type=click.Path(), help="Write the trained model.")
@click.option("--json", "as_json", is_flag=True)
def fit(seed, config_path, target, label_dim, iterations, out, as_json):
  """Fit an activated MPS to a target on [0,1]^n."""

  def run():
    cfg = (load_config(config_path, FitConfig) if config_path
           else FitConfig(seed=seed))
    cfg = _with_overrides(cfg, seed=seed, target=target, label_dim=label_dim,
                          iterations=iterations)
    result = fit_activated_mps(cfg)
    if out is not None:
      save(out, result.model)
    return result

  result = _run(run)
  text = "sup_error=%.6g iterations=%d" % (result.sup_error,
                                            len(result.error_curve) - 1)
  if result.diverged:
    text += " diverged_at=%d" % result.diverged_at
  _emit(as_json, result.to_dict(), text)


@cli.command()
@click.option("--expr")
@click.option("--table", type=click.Path())
@click.option("--json", "as_json", is_flag=True)
def report(expr, table, as_json):
  """Term and parameter counts before and after minimization."""
  result = _run(lambda: complexity_report(to_dnf(_read_table(expr, table))))
  _emit(as_json, result.to_dict(), str(result))


def main():
  cli()


if __name__ == "__main__":
  main()
