import os
import unittest
import numpy as np
from mpskit.boolexpr import Const
from mpskit.boolexpr import TruthTable
from mpskit.boolexpr import Var
from mpskit.boolexpr import parse_expr
from mpskit.boolexpr import table_from_expr
from mpskit.dnf import Dnf
from mpskit.dnf import Literal
from mpskit.dnf import disjoint_cover
from mpskit.dnf import minimize
from mpskit.dnf import prime_implicants
from mpskit.dnf import sharp
from mpskit.dnf import to_dnf
from mpskit.errors import ShapeError
from mpskit.utils import all_rows

P = Literal.POS
N = Literal.NEG
X = Literal.DONT_CARE

SLOW = os.environ.get("MPSKIT_SLOW") == "1"


def pairwise_disjoint(d):
  rows = all_rows(d.arity)
  hits = np.zeros(len(rows), dtype=int)
  for term in d.terms:
    hits += Dnf(d.arity, [term], minimized=True).evaluate_many(rows)
  return bool(np.all(hits <= 1))


class TestDnf(unittest.TestCase):
  """
  Tests of DNF construction and minimization.
  """

  def test_constant_false(self):
    """The constant false table has no terms."""
    d = to_dnf(TruthTable(3, [0] * 8))
    assert d.m == 0
    assert str(d) == "0"

  def test_or_minterms(self):
    """The 3-input OR has the seven minterms of its true rows."""
    d = to_dnf(table_from_expr(parse_expr("X1 | X2 | X3")))
    assert d.m == 7
    assert d.terms[0] == (N, N, P)
    assert d.terms[-1] == (P, P, P)
    assert str(d).startswith("!X1 & !X2 & X3 | !X1 & X2 & !X3")

  def test_threshold_minterms(self):
    """Threshold(3, 2) has four minterms."""
    d = to_dnf(TruthTable(3, [0, 0, 0, 1, 0, 1, 1, 1]))
    assert sorted(d.terms) == sorted([(N, P, P), (P, N, P), (P, P, N), (P, P, P)])

  def test_minimize_or(self):
    """The 3-input OR reduces to X1 | X2 | X3."""
    d = to_dnf(table_from_expr(parse_expr("X1 | X2 | X3")))
    reduced = minimize(d)
    assert reduced.m == 3
    assert sorted(reduced.terms) == sorted([(P, X, X), (X, P, X), (X, X, P)])
    assert reduced.expand() == d.expand()

  def test_parity_irreducible(self):
    """Parity has no adjacent minterms."""
    d = to_dnf(TruthTable(3, [0, 1, 1, 0, 1, 0, 0, 1]))
    assert minimize(d).m == d.m == 4

  def test_single_minterm_fixed_point(self):
    """A single minterm is already minimal."""
    d = Dnf(3, [(P, N, P)])
    assert minimize(d).terms == d.terms

  def test_prime_implicants(self):
    """Primes of X1 & X2 | X3 over three variables."""
    t = table_from_expr(parse_expr("X1 & X2 | X3"))
    primes = prime_implicants(3, t.true_rows())
    # (value, mask) with X1 as the high bit
    assert sorted(primes) == sorted([(0b110, 0b001), (0b001, 0b110)])

  def test_minimize_soundness(self):
    """Minimization preserves the true set and never adds terms."""
    rng = np.random.default_rng(2024)
    samples = 10000 if SLOW else 300
    for _ in range(samples):
      n = int(rng.integers(1, 7))
      t = TruthTable.random(n, seed=rng)
      d = to_dnf(t)
      reduced = minimize(d)
      assert reduced.expand() == t
      assert reduced.m <= d.m

  def test_disjoint_cover(self):
    """Overlapping implicants become pairwise disjoint."""
    rng = np.random.default_rng(7)
    for _ in range(100):
      n = int(rng.integers(2, 6))
      t = TruthTable.random(n, seed=rng)
      disjoint = disjoint_cover(minimize(to_dnf(t)))
      assert disjoint.expand() == t
      assert pairwise_disjoint(disjoint)
      assert disjoint.m <= t.popcount()

  def test_to_expr(self):
    """The expression of a DNF tabulates back to the DNF's table."""
    assert to_dnf(TruthTable(2, [0] * 4)).to_expr() == Const(0)
    assert Dnf(2, [(X, X)], minimized=True).to_expr() == Const(1)
    assert Dnf(2, [(P, X)], minimized=True).to_expr() == Var(1)
    rng = np.random.default_rng(31)
    for _ in range(50):
      n = int(rng.integers(1, 6))
      t = TruthTable.random(n, seed=rng)
      for d in (to_dnf(t), minimize(to_dnf(t))):
        assert table_from_expr(d.to_expr(), n) == t

  def test_sharp(self):
    """X1 minus X2 is X1 & !X2."""
    pieces = sharp((0b10, 0b01), (0b01, 0b10), 2)
    assert pieces == [(0b10, 0)]

  def test_validation(self):
    """Terms must have n literals, no duplicates, and no don't-cares before minimization."""
    with self.assertRaises(ShapeError):
      Dnf(2, [(P,)])
    with self.assertRaises(ShapeError):
      Dnf(2, [(P, N), (P, N)])
    with self.assertRaises(ShapeError):
      Dnf(2, [(P, X)])
    assert Dnf(2, [(P, X)], minimized=True).expand() == TruthTable(2, [0, 0, 1, 1])
