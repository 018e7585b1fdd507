import os
import unittest
import warnings
import numpy as np
from mpskit.boolexpr import TruthTable
from mpskit.boolexpr import parse_expr
from mpskit.boolexpr import table_from_expr
from mpskit.compiler import COMPILE_PARAMETER_LIMIT
from mpskit.compiler import And2
from mpskit.compiler import Not1
from mpskit.compiler import Or2
from mpskit.compiler import Parity
from mpskit.compiler import Threshold
from mpskit.compiler import UniversalAnd
from mpskit.compiler import UniversalOr
from mpskit.compiler import boolean_feature_maps
from mpskit.compiler import compile_dnf
from mpskit.compiler import compile_gate
from mpskit.compiler import compile_table
from mpskit.compiler import compiled_parameter_count
from mpskit.compiler import complexity_report
from mpskit.compiler import verify_table
from mpskit.dnf import Dnf
from mpskit.dnf import Literal
from mpskit.dnf import minimize
from mpskit.dnf import to_dnf
from mpskit.errors import ShapeError
from mpskit.errors import SizeError
from mpskit.mps import Mps
from mpskit.mps import parameter_count

P = Literal.POS
N = Literal.NEG
X = Literal.DONT_CARE

SLOW = os.environ.get("MPSKIT_SLOW") == "1"


def term_columns(mps):
  """Per bond index: the (component 0, component 1) entries at every site."""
  sites = [s.tensor[0] for s in mps.sites]
  m = sites[0].shape[2]
  columns = []
  for j in range(m):
    entries = [tuple(sites[0][:, 0, j])]
    for interior in sites[1:-1]:
      entries.append(tuple(interior[:, j, j]))
    entries.append(tuple(sites[-1][:, j, 0]))
    columns.append(tuple(entries))
  return sorted(columns)


def golden_columns(first, diagonals, last):
  """Same layout from the printed tensors: first/last rows and interior diagonals."""
  m = len(first[0])
  columns = []
  for j in range(m):
    entries = [(first[0][j], first[1][j])]
    for d0, d1 in diagonals:
      entries.append((d0[j], d1[j]))
    entries.append((last[0][j], last[1][j]))
    columns.append(tuple(entries))
  return sorted(columns)


def assert_diagonal(mps):
  for site in mps.sites[1:-1]:
    t = site.tensor[0]
    for s in range(t.shape[0]):
      np.testing.assert_array_equal(t[s], np.diag(np.diag(t[s])))


class TestCompiler(unittest.TestCase):
  """
  Tests of boolean function compilation.
  """

  def test_or3_golden(self):
    """3-input OR: the printed tensors up to bond permutation."""
    mps = compile_dnf(to_dnf(table_from_expr(parse_expr("X1 | X2 | X3"))), 3)
    assert mps.bond_dims == [1, 7, 7, 1]
    expected = golden_columns(
        [[1, 0, 0, 0, 1, 1, 1], [0, 1, 1, 1, 0, 0, 0]],
        [([0, 1, 0, 1, 0, 1, 1], [1, 0, 1, 0, 1, 0, 0])],
        [[0, 0, 1, 1, 1, 0, 1], [1, 1, 0, 0, 0, 1, 0]])
    assert term_columns(mps) == expected
    assert_diagonal(mps)
    assert verify_table(mps, table_from_expr(parse_expr("X1 | X2 | X3"))).passed

  def test_parity_golden(self):
    """3-input parity with chi = 4."""
    mps = compile_gate(Parity(3))
    assert mps.bond_dims == [1, 4, 4, 1]
    expected = golden_columns(
        [[1, 0, 0, 1], [0, 1, 1, 0]],
        [([0, 1, 0, 1], [1, 0, 1, 0])],
        [[0, 0, 1, 1], [1, 1, 0, 0]])
    assert term_columns(mps) == expected
    assert_diagonal(mps)
    assert verify_table(mps, TruthTable(3, [0, 1, 1, 0, 1, 0, 0, 1])).passed

  def test_threshold_golden(self):
    """Threshold(3, 2) tensors and table."""
    gate = Threshold(3, 2)
    mps = compile_gate(gate)
    expected = golden_columns(
        [[1, 1, 0, 1], [0, 0, 1, 0]],
        [([1, 0, 1, 1], [0, 1, 0, 0])],
        [[0, 1, 1, 1], [1, 0, 0, 0]])
    assert term_columns(mps) == expected
    np.testing.assert_array_equal(gate.table().outputs, [0, 0, 0, 1, 0, 1, 1, 1])
    assert verify_table(mps, gate.table()).passed

  def test_or2_golden(self):
    """Two-input OR with chi = 3."""
    mps = compile_gate(Or2())
    expected = golden_columns([[1, 0, 1], [0, 1, 0]], [], [[0, 1, 1], [1, 0, 0]])
    assert term_columns(mps) == expected
    assert verify_table(mps, Or2().table()).passed

  def test_direct_gates(self):
    """AND, NOT and universal AND use chi = 1 constructions."""
    for gate in [And2(), Not1(), UniversalAnd((P, N, X))]:
      mps = compile_gate(gate)
      assert max(mps.bond_dims) == 1
      assert verify_table(mps, gate.table()).passed
    not_mps = compile_gate(Not1())
    assert not_mps.phys_dims == [1]
    assert boolean_feature_maps(not_mps)[0].dim == 1

  def test_universal_or(self):
    """OR of literals X1 | !X2."""
    gate = UniversalOr((P, N))
    np.testing.assert_array_equal(gate.table().outputs, [1, 0, 1, 1])
    assert verify_table(compile_gate(gate), gate.table()).passed

  def test_threshold_edge_cases(self):
    """k = 0 is constant one; k > n is constant zero with a warning."""
    mps = compile_gate(Threshold(3, 0))
    assert verify_table(mps, TruthTable(3, [1] * 8)).passed
    with warnings.catch_warnings(record=True) as caught:
      warnings.simplefilter("always")
      t = Threshold(3, 4).table()
    assert t.popcount() == 0
    assert len(caught) == 1
    with self.assertRaises(ShapeError):
      Threshold(3, -1).table()

  def test_constant_zero(self):
    """m = 0 compiles to the chi = 1 all-zero MPS."""
    mps = compile_table(TruthTable(3, [0] * 8))
    assert mps.bond_dims == [1, 1, 1, 1]
    assert verify_table(mps, TruthTable(3, [0] * 8)).passed

  def test_single_site(self):
    """n = 1 tables of every kind."""
    for outputs in ([0, 0], [0, 1], [1, 0], [1, 1]):
      t = TruthTable(1, outputs)
      assert verify_table(compile_table(t), t).passed
      assert verify_table(compile_table(t, minimized=True), t).passed

  def test_minimized_compile(self):
    """Minimized covers with don't-cares compile to the same function."""
    rng = np.random.default_rng(99)
    for _ in range(50):
      n = int(rng.integers(2, 7))
      t = TruthTable.random(n, seed=rng)
      assert verify_table(compile_table(t, minimized=True), t).passed
      assert verify_table(compile_table(t), t).passed

  def test_arity_mismatch(self):
    """compile checks the requested arity."""
    with self.assertRaises(ShapeError):
      compile_dnf(Dnf(2, [(P, N)]), 3)

  def test_size_guard(self):
    """Huge DNFs are refused before allocation."""
    n = 22
    assert compiled_parameter_count(n, 2**12) > COMPILE_PARAMETER_LIMIT
    terms = []
    for r in range(2**12):
      terms.append(tuple(P if (r >> b) & 1 else N for b in range(n)))
    with self.assertRaises(SizeError):
      compile_dnf(Dnf(n, terms))

  def test_verify_reports_first_mismatch(self):
    """A corrupted entry is found with its row index."""
    mps = compile_gate(Parity(3))
    last = mps.sites[2].tensor[0].copy()
    last[0, 0, 0] += 1
    corrupted = Mps([mps.sites[0], mps.sites[1], last])
    result = verify_table(corrupted, Parity(3).table())
    assert not result.passed
    assert result.expected != result.actual
    assert str(result).startswith("FAIL")
    assert str(verify_table(mps, Parity(3).table())) == "PASS 8/8"

  def test_complexity_counts(self):
    """Entry counts for parity, a single minterm and the 3-input OR."""
    parity = complexity_report(to_dnf(Parity(3).table()))
    assert parity.m == 4
    assert parity.parameter_count == 48
    assert parity.parameter_count_minimized == 48
    single = complexity_report(Dnf(3, [(P, P, N)]))
    assert single.m == 1
    assert single.parameter_count == 6
    or3 = complexity_report(to_dnf(table_from_expr(parse_expr("X1 | X2 | X3"))))
    assert (or3.m, or3.m_minimized) == (7, 3)
    assert or3.parameter_count == 126
    assert or3.parameter_count_minimized == 30

  def test_counts_match_compiled_tensors(self):
    """Reported counts equal the stored entries; parity grows as n * m^2."""
    for n in range(2, 7):
      mps = compile_gate(Parity(n))
      assert parameter_count(mps) == compiled_parameter_count(n, 2**(n - 1))
    t = TruthTable.random(5, seed=3)
    report = complexity_report(to_dnf(t))
    assert report.parameter_count == parameter_count(compile_table(t))
    assert report.parameter_count_minimized == parameter_count(
        compile_table(t, minimized=True))
    assert minimize(to_dnf(t)).m == report.m_minimized

  def test_all_arity_four_tables(self):
    """Arity-4 tables compile and verify on all 16 rows."""
    if SLOW:
      values = range(2**16)
    else:
      values = np.random.default_rng(4).choice(2**16, size=1000, replace=False)
    for value in values:
      t = TruthTable.from_hex(4, format(int(value), "04x"))
      result = verify_table(compile_table(t), t)
      assert result.passed, "table %04x: %s" % (int(value), result)
