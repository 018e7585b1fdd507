"""Compiles boolean functions into exactly evaluating MPS.

Every term of a DNF becomes one bond index. The first site holds a row of
literal indicators, the last a column, and every interior site a pair of
diagonal 0/1 matrices:

  A^{s_1}   = [ [X_1^(j)]_j , [!X_1^(j)]_j ]          shape (2, 1, m)
  A^{s_i}   = [ diag(X_i^(j)), diag(!X_i^(j)) ]       shape (2, m, m)
  A^{s_n}   = [ [X_n^(j)]_j , [!X_n^(j)]_j ]^T        shape (2, m, 1)

Component 0 of a site is matched against the feature x and component 1 against
1 - x, so with the binary indicator map the chain evaluates to the number of
terms satisfied by the input. Terms are made pairwise disjoint first, so this
number is the value of the DNF.
"""
import dataclasses
import logging
import warnings
from typing import List
from typing import Optional
from typing import Sequence
import numpy as np
from mpskit.boolexpr import TruthTable
from mpskit.contraction import contract_batch
from mpskit.dnf import Dnf
from mpskit.dnf import Literal
from mpskit.dnf import disjoint_cover
from mpskit.dnf import minimize
from mpskit.dnf import to_dnf
from mpskit.errors import ShapeError
from mpskit.errors import SizeError
from mpskit.feature_maps import BinaryIndicator
from mpskit.feature_maps import FeatureMap
from mpskit.feature_maps import complement
from mpskit.mps import Mps
from mpskit.utils import all_rows
from mpskit.utils import Timer

logger = logging.getLogger(__name__)

# Largest number of stored tensor entries compile will allocate.
COMPILE_PARAMETER_LIMIT = 2**26


def compiled_parameter_count(n: int, m: int) -> int:
  """Number of entries stored by compile for arity n and m terms."""
  if m == 0:
    return 2 * n
  if n == 1:
    return 2
  return 2 * m * (2 + (n - 2) * m)


def _indicator(lit: Literal) -> List[int]:
  """Entries of the two phys components for one literal."""
  if lit == Literal.POS:
    return [1, 0]
  if lit == Literal.NEG:
    return [0, 1]
  return [1, 1]


def compile_dnf(d: Dnf, n: Optional[int] = None) -> Mps:
  """Emits the open-boundary MPS realizing d with BinaryIndicator maps.

  Parameters
  ----------
  d: Dnf
    Function to compile. Minimized forms may carry don't-care literals; a
    don't-care sets both phys components of its diagonal entry.
  n: int, optional
    Expected arity; must equal d.arity when given.

  Returns
  -------
  Mps with integer entries, phys_dim 2 on every site and bond dimension m on
  every interior bond. For m = 0 this is the chi=1 all-zero MPS.
  """
  if n is not None and n != d.arity:
    raise ShapeError("DNF has arity %d, expected %d" % (d.arity, n))
  n = d.arity
  with Timer() as timer:
    d = disjoint_cover(d)
    m = d.m
    if m == 0:
      return Mps.zeros([2] * n)
    size = compiled_parameter_count(n, m)
    if size > COMPILE_PARAMETER_LIMIT:
      raise SizeError("compiled MPS entries", size, COMPILE_PARAMETER_LIMIT)
    # lits[j, i, s] is the entry of term j at site i, phys component s
    lits = np.array([[_indicator(lit) for lit in term] for term in d.terms],
                    dtype=np.int64)
    if n == 1:
      site = lits[:, 0, :].sum(axis=0).reshape(2, 1, 1)
      mps = Mps([site])
    else:
      sites = [lits[:, 0, :].T.reshape(2, 1, m)]
      for i in range(1, n - 1):
        interior = np.zeros((2, m, m), dtype=np.int64)
        idx = np.arange(m)
        interior[:, idx, idx] = lits[:, i, :].T
        sites.append(interior)
      sites.append(lits[:, n - 1, :].T.reshape(2, m, 1))
      mps = Mps(sites)
  logger.info("Compiled DNF with m=%d terms over %d sites in %.4f sec",
              m, n, timer.elapsed)
  return mps


def compile(d: Dnf, n: Optional[int] = None) -> Mps:
  return compile_dnf(d, n)


def compile_table(t: TruthTable, minimized: bool = False) -> Mps:
  """to_dnf, optionally minimize, then compile."""
  d = to_dnf(t)
  if minimized:
    d = minimize(d)
  return compile_dnf(d, t.arity)


def boolean_feature_maps(mps: Mps) -> List[FeatureMap]:
  """Feature maps for a compiled MPS: BinaryIndicator, or 1 - x on d=1 sites."""
  fms = []
  for d in mps.phys_dims:
    if d == 2:
      fms.append(BinaryIndicator())
    elif d == 1:
      fms.append(complement())
    else:
      raise ShapeError("no boolean feature map of dimension %d" % d)
  return fms


class Gate(object):
  """Abstract gate description."""
  arity = None

  def table(self) -> TruthTable:
    raise NotImplementedError

  def direct(self) -> Optional[Mps]:
    """A chi=1 construction, or None when the gate goes through its DNF."""
    return None


@dataclasses.dataclass(frozen=True)
class And2(Gate):
  arity = 2

  def table(self):
    return TruthTable(2, [0, 0, 0, 1])

  def direct(self):
    a = np.array([1, 0], dtype=np.int64).reshape(2, 1, 1)
    return Mps([a, a])


@dataclasses.dataclass(frozen=True)
class Or2(Gate):
  arity = 2

  def table(self):
    return TruthTable(2, [0, 1, 1, 1])


@dataclasses.dataclass(frozen=True)
class Not1(Gate):
  """NOT X1 with the one dimensional map phi(x) = 1 - x and A = 1."""
  arity = 1

  def table(self):
    return TruthTable(1, [1, 0])

  def direct(self):
    return Mps([np.ones((1, 1, 1), dtype=np.int64)])


def _mask_terms(mask: Sequence[int]) -> tuple:
  lits = tuple(Literal(int(v)) for v in mask)
  if not lits:
    raise ShapeError("gate mask must name at least one variable")
  return lits


@dataclasses.dataclass(frozen=True)
class UniversalAnd(Gate):
  """AND of literals; mask[i] is POS for X_i, NEG for !X_i, DONT_CARE to skip."""
  mask: tuple

  @property
  def arity(self):
    return len(self.mask)

  def table(self):
    lits = _mask_terms(self.mask)
    return Dnf(len(lits), [lits], minimized=True).expand()

  def direct(self):
    lits = _mask_terms(self.mask)
    return Mps([np.array(_indicator(lit), dtype=np.int64).reshape(2, 1, 1)
                for lit in lits])


@dataclasses.dataclass(frozen=True)
class UniversalOr(Gate):
  """OR of literals; mask as for UniversalAnd."""
  mask: tuple

  @property
  def arity(self):
    return len(self.mask)

  def table(self):
    lits = _mask_terms(self.mask)
    rows = all_rows(len(lits))
    out = np.zeros(len(rows), dtype=bool)
    for i, lit in enumerate(lits):
      if lit != Literal.DONT_CARE:
        out |= rows[:, i] == int(lit)
    return TruthTable(len(lits), out.astype(np.uint8))


@dataclasses.dataclass(frozen=True)
class Parity(Gate):
  """1 iff an odd number of inputs are 1."""
  n: int

  @property
  def arity(self):
    return self.n

  def table(self):
    return TruthTable(self.n, all_rows(self.n).sum(axis=1) % 2)


@dataclasses.dataclass(frozen=True)
class Threshold(Gate):
  """1 iff at least k inputs are 1."""
  n: int
  k: int

  @property
  def arity(self):
    return self.n

  def table(self):
    if self.k < 0:
      raise ShapeError("threshold k must be >= 0, got %d" % self.k)
    if self.k > self.n:
      message = "Threshold(%d, %d) is always false" % (self.n, self.k)
      warnings.warn(message)
      logger.warning(message)
    return TruthTable(self.n, (all_rows(self.n).sum(axis=1) >= self.k)
                      .astype(np.uint8))


def compile_gate(gate: Gate) -> Mps:
  """MPS for a gate: the chi=1 construction when one exists, else via its DNF."""
  mps = gate.direct()
  if mps is not None:
    logger.debug("Compiled %s directly", gate)
    return mps
  return compile_dnf(to_dnf(gate.table()))


@dataclasses.dataclass
class ComplexityReport(object):
  """Term counts and stored entries of compile output, before and after minimization."""
  arity: int
  m: int
  m_minimized: int
  parameter_count: int
  parameter_count_minimized: int

  def to_dict(self):
    return dataclasses.asdict(self)

  def __str__(self):
    return ("arity=%d m=%d m_minimized=%d parameter_count=%d "
            "parameter_count_minimized=%d" % (
                self.arity, self.m, self.m_minimized, self.parameter_count,
                self.parameter_count_minimized))


def complexity_report(d: Dnf) -> ComplexityReport:
  """Counts entries without building the tensors.

  The minimized count is that of the compiled form of the minimized cover,
  i.e. after its terms are made disjoint.
  """
  n = d.arity
  m = disjoint_cover(d).m
  reduced = minimize(d)
  compiled = disjoint_cover(reduced).m
  return ComplexityReport(
      arity=n, m=d.m, m_minimized=reduced.m,
      parameter_count=compiled_parameter_count(n, m),
      parameter_count_minimized=compiled_parameter_count(n, compiled))


# Largest arity verify_table enumerates.
VERIFY_ARITY_LIMIT = 16


@dataclasses.dataclass
class VerifyResult(object):
  """Outcome of an exhaustive comparison against a truth table."""
  rows: int
  matched: int
  first_mismatch: Optional[int] = None
  expected: Optional[int] = None
  actual: Optional[int] = None

  @property
  def passed(self) -> bool:
    return self.first_mismatch is None

  def to_dict(self):
    out = dataclasses.asdict(self)
    out["passed"] = self.passed
    return out

  def __str__(self):
    if self.passed:
      return "PASS %d/%d" % (self.matched, self.rows)
    return "FAIL %d/%d: row %d expected %d got %d" % (
        self.matched, self.rows, self.first_mismatch, self.expected, self.actual)


def verify_table(mps: Mps, t: TruthTable,
                 fms: Optional[Sequence[FeatureMap]] = None) -> VerifyResult:
  """Evaluates mps on every row of t and compares exactly."""
  if mps.n_sites != t.arity:
    raise ShapeError("MPS has %d sites, table has arity %d" % (mps.n_sites, t.arity))
  if t.arity > VERIFY_ARITY_LIMIT:
    raise SizeError("exhaustive verification arity", t.arity, VERIFY_ARITY_LIMIT)
  if fms is None:
    fms = boolean_feature_maps(mps)
  values = contract_batch(mps, fms, all_rows(t.arity))[:, 0]
  expected = t.outputs.astype(np.int64)
  matches = np.asarray(values == expected, dtype=bool)
  mismatches = np.flatnonzero(~matches)
  result = VerifyResult(rows=len(t), matched=int(matches.sum()))
  if len(mismatches):
    row = int(mismatches[0])
    result.first_mismatch = row
    result.expected = int(expected[row])
    actual = values[row]
    result.actual = int(actual) if actual == round(actual) else float(actual)
  logger.info("Verified %d rows: %d matched", result.rows, result.matched)
  return result
